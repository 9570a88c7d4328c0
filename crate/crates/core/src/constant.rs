//! The sharp Euclidean constant: by quadrature at the extremal family, and
//! the displayed closed form with its undetermined Gamma argument.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{CknError, Result};
use crate::functionals::quotient_of;
use crate::model::RadialMeasure;
use crate::params::CknParams;
use crate::profile::RadialProfile;
use crate::quadrature::QuadConfig;
use crate::special::gamma_fn;

/// Scale parameters `B` of the extremal family at which the quotient is evaluated.
pub const PROBE_SCALES: [f64; 2] = [1.0, 7.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoptQuadrature {
    /// `1 / quotient` at `A (1 + t^kappa)^(-(p-1)/(q-p))`.
    pub copt: f64,
    pub quotients: [f64; 2],
    /// `|Q(B=7) - Q(B=1)| / Q(B=1)`.
    pub disagreement: f64,
}

/// Relative disagreement allowed between the two probe scales.
pub fn agreement_tolerance(quad: &QuadConfig) -> f64 {
    (10.0 * quad.rel_tol).max(1e-13)
}

/// The optimal constant as the reciprocal quotient of the extremal on Euclidean space.
pub fn copt_quadrature(params: &CknParams, quad: &QuadConfig) -> Result<CoptQuadrature> {
    let model = RadialMeasure::euclidean(params.n)?;
    let mut quotients = [0.0; 2];
    for (slot, &b) in quotients.iter_mut().zip(&PROBE_SCALES) {
        *slot = quotient_of(&model, params, &RadialProfile::family(params, 1.0, b), quad)?;
    }
    let disagreement = ((quotients[1] - quotients[0]) / quotients[0]).abs();
    let tolerance = agreement_tolerance(quad);
    if !(disagreement <= tolerance) {
        return Err(CknError::QuadratureFailure {
            context: format!("extremal quotient differs between B = {} and B = {}", PROBE_SCALES[0], PROBE_SCALES[1]),
            error: disagreement,
            tolerance,
        });
    }
    Ok(CoptQuadrature { copt: 1.0 / quotients[0], quotients, disagreement })
}

/// The factors of the displayed closed-form constant, kept separate for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub delta: f64,
    /// `((n-p)/(n-p-mu))^(1/r + (p-1)/p - (1-a)/q - (p-1)(1-a)/p)`
    pub dimension_factor: f64,
    /// `((q-p)/(p sqrt(pi)))^a`
    pub spread_factor: f64,
    /// `(pq/(n(q-p)))^(a/p)`
    pub pq_factor: f64,
    /// `(nu/(pq))^(1/r)`
    pub nu_factor: f64,
    /// `Gamma(q(p-1)/(q-p)) / Gamma((p-1)/p * delta/(q-p))`
    pub delta_gamma_ratio: f64,
    /// `Gamma(n/2+1) / Gamma(n(p-1)/p+1)`
    pub dimension_gamma_ratio: f64,
    pub value: f64,
}

/// Evaluates the displayed closed form with a caller-chosen value for `delta`.
///
/// Experimental: the Gamma argument containing `delta` is not pinned down by
/// the formula itself, so the result is only ever compared against
/// [`copt_quadrature`], never used in its place.
pub fn copt_closed_form(params: &CknParams, delta: f64) -> Result<ClosedForm> {
    if !delta.is_finite() {
        return Err(CknError::DomainError(format!("delta must be finite, got {delta}")));
    }
    let e = params.float();
    let (n, p, q, mu, r, a, nu) = (e.n, e.p, e.q, e.mu, e.r, e.a, e.nu);
    let exponent = 1.0 / r + (p - 1.0) / p - (1.0 - a) / q - (p - 1.0) * (1.0 - a) / p;
    let dimension_factor = ((n - p) / (n - p - mu)).powf(exponent);
    let spread_factor = ((q - p) / (p * PI.sqrt())).powf(a);
    let pq_factor = (p * q / (n * (q - p))).powf(a / p);
    let nu_factor = (nu / (p * q)).powf(1.0 / r);
    let delta_arg = (p - 1.0) / p * delta / (q - p);
    let delta_gamma_ratio = gamma_checked(q * (p - 1.0) / (q - p))? / gamma_checked(delta_arg)?;
    let dimension_gamma_ratio = gamma_checked(n / 2.0 + 1.0)? / gamma_checked(n * (p - 1.0) / p + 1.0)?;
    let value = dimension_factor
        * spread_factor
        * pq_factor
        * nu_factor
        * (delta_gamma_ratio * dimension_gamma_ratio).powf(a / n);
    Ok(ClosedForm {
        delta,
        dimension_factor,
        spread_factor,
        pq_factor,
        nu_factor,
        delta_gamma_ratio,
        dimension_gamma_ratio,
        value,
    })
}

fn gamma_checked(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(CknError::DomainError(format!("Gamma argument {x} is not positive")));
    }
    gamma_fn(x)
}

/// The `delta` making both Gamma arguments of the first ratio equal: `delta = pq`.
pub fn delta_matching_numerator(params: &CknParams) -> f64 {
    let e = params.float();
    e.p * e.q
}
