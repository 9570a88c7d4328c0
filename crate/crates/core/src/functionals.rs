//! Weighted integrals of the CKN quotient for radial profiles on radial models.
//!
//! For a radial profile `u(t)` on a model with sphere density `sigma(t)`:
//!
//! ```text
//! T_r    = int t^(gamma r) |u|^r  sigma dt
//! T_grad = int t^(alpha p) |u'|^p sigma dt
//! T_q    = int t^(beta q)  |u|^q  sigma dt
//! ```
//!
//! and the quotient is `T_grad^(a/p) T_q^((1-a)/q) / T_r^(1/r)`.

use serde::{Deserialize, Serialize};

use crate::error::{CknError, Result};
use crate::model::RadialMeasure;
use crate::params::CknParams;
use crate::profile::{RadialProfile, SampledProfile};
use crate::quadrature::{check_exponents, integrate_half_line, GaussLegendre, QuadConfig, QuadEstimate};
use crate::special::unit_sphere_area;

/// Gauss-Legendre order used on each linear segment of a sampled profile.
pub const SEGMENT_ORDER: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    R,
    Gradient,
    Q,
}

impl Term {
    pub fn label(self) -> &'static str {
        match self {
            Term::R => "r-term",
            Term::Gradient => "gradient term",
            Term::Q => "q-term",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormErrors {
    pub r: f64,
    pub grad: f64,
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorms {
    pub t_r: f64,
    pub t_grad: f64,
    /// Absent when `a = 1`: the q-term then carries exponent zero and is never evaluated.
    pub t_q: Option<f64>,
    /// Estimated absolute errors of the three integrals.
    pub est_errors: NormErrors,
}

impl WeightedNorms {
    pub fn get(&self, term: Term) -> Option<f64> {
        match term {
            Term::R => Some(self.t_r),
            Term::Gradient => Some(self.t_grad),
            Term::Q => self.t_q,
        }
    }
}

/// `(weight exponent, power)` of a term: the integrand is `t^weight |.|^power`.
pub fn term_weight(params: &CknParams, term: Term) -> (f64, f64) {
    let e = params.float();
    match term {
        Term::R => (e.gamma * e.r, e.r),
        Term::Gradient => (e.alpha * e.p, e.p),
        Term::Q => (e.beta * e.q, e.q),
    }
}

/// Power-law exponents of the radial integrand of `term` at the origin and at infinity.
pub fn term_exponents(params: &CknParams, profile: &RadialProfile, term: Term) -> (f64, f64) {
    let e = params.float();
    let (weight, power) = term_weight(params, term);
    let base = weight + e.n - 1.0;
    match profile {
        RadialProfile::Extremal(x) => match term {
            Term::Gradient => {
                let zero = base + power * (x.kappa - 1.0);
                (zero, zero - power * x.kappa * (x.exponent + 1.0))
            }
            _ => (base, base - power * x.kappa * x.exponent),
        },
        RadialProfile::Cutoff(_) => match term {
            // The cutoff is constant near the origin.
            Term::Gradient => (f64::INFINITY, f64::NEG_INFINITY),
            _ => (base, f64::NEG_INFINITY),
        },
        RadialProfile::Sampled(s) => sampled_exponents(s, term, base),
        RadialProfile::Bumped { base: inner, .. } => term_exponents(params, inner, term),
    }
}

fn sampled_exponents(s: &SampledProfile, term: Term, base: f64) -> (f64, f64) {
    let values = s.values();
    let tail_vanishes = s.is_compact() || *values.last().unwrap() == 0.0;
    let infinity = if tail_vanishes { f64::NEG_INFINITY } else { base };
    match term {
        Term::Gradient => {
            let knots = s.knots();
            let moving_at_origin = knots[0] == 0.0 && values[1] != values[0];
            (if moving_at_origin { base } else { f64::INFINITY }, f64::NEG_INFINITY)
        }
        _ => (base, infinity),
    }
}

/// `T_r`, `T_grad` and `T_q` of `profile` on `model`.
pub fn weighted_norms(
    model: &RadialMeasure,
    params: &CknParams,
    profile: &RadialProfile,
    quad: &QuadConfig,
) -> Result<WeightedNorms> {
    check_dimension(model, params)?;
    quad.check()?;
    let terms = active_terms(params);
    for &term in &terms {
        let (zero, infinity) = term_exponents(params, profile, term);
        check_exponents(term.label(), zero, infinity)?;
    }

    let estimates: Vec<QuadEstimate> = match (profile, model.constant_density()) {
        (RadialProfile::Sampled(s), Some(density)) => {
            let rule = SegmentRule::new(params, s.knots(), SEGMENT_ORDER)?;
            let sums = rule.evaluate(s.values());
            let factor = density * unit_sphere_area(model.dimension());
            let mut out = vec![
                QuadEstimate { value: sums.r * factor, error: 0.0 },
                QuadEstimate { value: sums.grad * factor, error: 0.0 },
            ];
            if let Some(q) = sums.q {
                out.push(QuadEstimate { value: q * factor, error: 0.0 });
            }
            out
        }
        _ => terms.iter().map(|&term| integrate_term(model, params, profile, term, quad)).collect::<Result<_>>()?,
    };

    for (est, term) in estimates.iter().zip(&terms) {
        if !est.value.is_finite() {
            return Err(CknError::DivergentIntegral { term: term.label(), reason: "integral is not finite".into() });
        }
    }
    Ok(WeightedNorms {
        t_r: estimates[0].value,
        t_grad: estimates[1].value,
        t_q: estimates.get(2).map(|e| e.value),
        est_errors: NormErrors {
            r: estimates[0].error,
            grad: estimates[1].error,
            q: estimates.get(2).map(|e| e.error),
        },
    })
}

fn active_terms(params: &CknParams) -> Vec<Term> {
    if params.q_term_vanishes() {
        vec![Term::R, Term::Gradient]
    } else {
        vec![Term::R, Term::Gradient, Term::Q]
    }
}

pub(crate) fn check_dimension(model: &RadialMeasure, params: &CknParams) -> Result<()> {
    if model.dimension() != params.n {
        return Err(CknError::InvalidInput(format!(
            "model dimension {} does not match parameter dimension {}",
            model.dimension(),
            params.n
        )));
    }
    Ok(())
}

/// Radii where the integrand changes character: kinks, the profile's length
/// scale (times the split point) and bump centres.
fn landmarks(profile: &RadialProfile, model: &RadialMeasure, quad: &QuadConfig) -> Vec<f64> {
    let mut cuts = profile.breakpoints();
    cuts.extend(model.breakpoints());
    cuts.push(quad.split_point * profile.length_scale());
    let mut p = profile;
    while let RadialProfile::Bumped { base, bump } = p {
        cuts.push(bump.center);
        p = base;
    }
    cuts
}

fn integrate_term(
    model: &RadialMeasure,
    params: &CknParams,
    profile: &RadialProfile,
    term: Term,
    quad: &QuadConfig,
) -> Result<QuadEstimate> {
    let n = model.dimension();
    let (weight, power) = term_weight(params, term);
    let t_exp = weight + n as f64 - 1.0;
    let density = model.constant_density();
    let f = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let amp = match term {
            Term::Gradient => profile.derivative(t).abs(),
            _ => profile.value(t).abs(),
        };
        if amp == 0.0 {
            return 0.0;
        }
        let rho = if density.is_some() { 1.0 } else { model.relative_density(t) };
        (t_exp * t.ln() + power * amp.ln()).exp() * rho
    };
    let cuts = landmarks(profile, model, quad);
    let est = integrate_half_line(&f, &cuts, profile.support(), quad).map_err(|e| match e {
        CknError::QuadratureFailure { context, error, tolerance } => {
            CknError::QuadratureFailure { context: format!("{} on {context}", term.label()), error, tolerance }
        }
        other => other,
    })?;
    Ok(est.scale(unit_sphere_area(n) * density.unwrap_or(1.0)))
}

/// `T_grad^(a/p) T_q^((1-a)/q) / T_r^(1/r)`; the q-factor is skipped when `a = 1`.
pub fn ckn_quotient(norms: &WeightedNorms, params: &CknParams) -> Result<f64> {
    if !(norms.t_r > 0.0) {
        return Err(CknError::DegenerateProfile);
    }
    let e = params.float();
    let mut quotient = norms.t_grad.powf(e.a / e.p) / norms.t_r.powf(1.0 / e.r);
    if !params.q_term_vanishes() {
        let t_q = norms.t_q.ok_or_else(|| CknError::InvalidInput("q-term missing although a < 1".into()))?;
        quotient *= t_q.powf((1.0 - e.a) / e.q);
    }
    Ok(quotient)
}

/// The quotient of `profile` on `model`.
pub fn quotient_of(
    model: &RadialMeasure,
    params: &CknParams,
    profile: &RadialProfile,
    quad: &QuadConfig,
) -> Result<f64> {
    ckn_quotient(&weighted_norms(model, params, profile, quad)?, params)
}

/// `t -> u(scale t)`.
pub fn dilate_profile(profile: &RadialProfile, scale: f64) -> Result<RadialProfile> {
    profile.dilate(scale)
}

/// `int_a^b t^e dt`.
pub fn power_integral(a: f64, b: f64, e: f64) -> f64 {
    if a == 0.0 && e <= -1.0 {
        return f64::INFINITY;
    }
    if (e + 1.0).abs() < 1e-14 {
        (b / a).ln()
    } else {
        (b.powf(e + 1.0) - a.powf(e + 1.0)) / (e + 1.0)
    }
}

/// Raw segment sums, before the factor `density * n omega_n`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SegmentSums {
    pub r: f64,
    pub grad: f64,
    pub q: Option<f64>,
}

impl std::ops::AddAssign for SegmentSums {
    fn add_assign(&mut self, rhs: Self) {
        self.r += rhs.r;
        self.grad += rhs.grad;
        self.q = match (self.q, rhs.q) {
            (Some(a), Some(b)) => Some(a + b),
            (a, b) => a.or(b),
        };
    }
}

/// Precomputed weights for piecewise-linear profiles on a fixed knot vector.
///
/// The gradient term is integrated exactly on each segment (`|u'|` is
/// constant there). The value terms use Gauss-Legendre nodes with the power
/// weight folded into the node weights. The interval left of the first knot,
/// where the profile is constant, is integrated in closed form.
#[derive(Debug, Clone)]
pub struct SegmentRule {
    knots: Vec<f64>,
    theta: Vec<f64>,
    r_weights: Vec<f64>,
    q_weights: Option<Vec<f64>>,
    grad_weights: Vec<f64>,
    head_r: f64,
    head_q: Option<f64>,
    r: f64,
    p: f64,
    q: f64,
}

impl SegmentRule {
    pub fn new(params: &CknParams, knots: &[f64], order: usize) -> Result<Self> {
        Self::build(params, knots, order, None)
    }

    /// As [`SegmentRule::new`] with a relative density folded into the
    /// weights; the gradient term then also uses Gauss-Legendre nodes.
    pub fn with_density(params: &CknParams, knots: &[f64], order: usize, density: &dyn Fn(f64) -> f64) -> Result<Self> {
        Self::build(params, knots, order, Some(density))
    }

    fn build(params: &CknParams, knots: &[f64], order: usize, density: Option<&dyn Fn(f64) -> f64>) -> Result<Self> {
        if knots.len() < 2 || knots.windows(2).any(|w| w[1] <= w[0]) || knots[0] < 0.0 {
            return Err(CknError::InvalidInput("segment knots must be non-negative and strictly increasing".into()));
        }
        let e = params.float();
        let gl = GaussLegendre::new(order);
        let theta: Vec<f64> = gl.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let (wr, _) = term_weight(params, Term::R);
        let (wg, _) = term_weight(params, Term::Gradient);
        let (wq, _) = term_weight(params, Term::Q);
        let exp_r = wr + e.n - 1.0;
        let exp_g = wg + e.n - 1.0;
        let exp_q = wq + e.n - 1.0;
        let with_q = !params.q_term_vanishes();

        let segments = knots.len() - 1;
        let mut r_weights = Vec::with_capacity(segments * order);
        let mut q_weights = Vec::with_capacity(if with_q { segments * order } else { 0 });
        let mut grad_weights = Vec::with_capacity(segments);
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let h = b - a;
            let mut grad = 0.0;
            for (j, th) in theta.iter().enumerate() {
                let t = a + th * h;
                let base = 0.5 * gl.weights[j] * h * density.map_or(1.0, |rho| rho(t));
                r_weights.push(base * t.powf(exp_r));
                if with_q {
                    q_weights.push(base * t.powf(exp_q));
                }
                grad += base * t.powf(exp_g);
            }
            grad_weights.push(if density.is_some() { grad } else { power_integral(a, b, exp_g) });
        }
        let head_density = density.map_or(1.0, |rho| rho(0.5 * knots[0]));
        let head = |exp: f64| if knots[0] > 0.0 { head_density * power_integral(0.0, knots[0], exp) } else { 0.0 };
        Ok(Self {
            knots: knots.to_vec(),
            theta,
            r_weights,
            q_weights: with_q.then_some(q_weights),
            grad_weights,
            head_r: head(exp_r),
            head_q: with_q.then(|| head(exp_q)),
            r: e.r,
            p: e.p,
            q: e.q,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    /// Contribution of the constant piece `[0, knots[0]]` at value `u0`.
    pub fn head(&self, u0: f64) -> SegmentSums {
        let u = u0.abs();
        SegmentSums { r: self.head_r * u.powf(self.r), grad: 0.0, q: self.head_q.map(|h| h * u.powf(self.q)) }
    }

    /// Contribution of segment `i` with end values `ua`, `ub`.
    pub fn segment(&self, i: usize, ua: f64, ub: f64) -> SegmentSums {
        let order = self.theta.len();
        let slope = (ub - ua) / (self.knots[i + 1] - self.knots[i]);
        let grad = if slope == 0.0 { 0.0 } else { self.grad_weights[i] * slope.abs().powf(self.p) };
        let mut r = 0.0;
        let mut q = 0.0;
        let rw = &self.r_weights[i * order..(i + 1) * order];
        let qw = self.q_weights.as_ref().map(|w| &w[i * order..(i + 1) * order]);
        for (j, th) in self.theta.iter().enumerate() {
            let u = (ua + th * (ub - ua)).abs();
            if u == 0.0 {
                continue;
            }
            r += rw[j] * u.powf(self.r);
            if let Some(qw) = qw {
                q += qw[j] * u.powf(self.q);
            }
        }
        SegmentSums { r, grad, q: qw.map(|_| q) }
    }

    /// Totals over all segments for knot values `values`.
    pub fn evaluate(&self, values: &[f64]) -> SegmentSums {
        let mut total = self.head(values[0]);
        for i in 0..self.segments() {
            total += self.segment(i, values[i], values[i + 1]);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RawParams;
    use crate::special::gamma_fn;
    use std::f64::consts::PI;

    fn desk() -> CknParams {
        CknParams::derive(&RawParams::parse(4, "2", "2.5", "1").unwrap()).unwrap()
    }

    fn beta(a: f64, b: f64) -> f64 {
        gamma_fn(a).unwrap() * gamma_fn(b).unwrap() / gamma_fn(a + b).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn extremal_norms_are_beta_integrals() {
        // With kappa = 1 and u = (1+t)^-2 all three integrals are Beta functions:
        // T_r = 2 pi^2 B(2,4), T_grad = 2 pi^2 4 B(3,3), T_q = 2 pi^2 B(2,3).
        let params = desk();
        let model = RadialMeasure::euclidean(4).unwrap();
        let u = RadialProfile::extremal(&params, 1.0);
        let norms = weighted_norms(&model, &params, &u, &QuadConfig::default()).unwrap();
        let area = 2.0 * PI * PI;
        assert!(rel(norms.t_r, area * beta(2.0, 4.0)) < 1e-10);
        assert!(rel(norms.t_grad, area * 4.0 * beta(3.0, 3.0)) < 1e-10);
        assert!(rel(norms.t_q.unwrap(), area * beta(2.0, 3.0)) < 1e-10);
        assert!(norms.est_errors.r <= 1e-10 * norms.t_r);
    }

    #[test]
    fn zero_profile_has_zero_norms() {
        let params = desk();
        let model = RadialMeasure::euclidean(4).unwrap();
        let zero = RadialProfile::Sampled(SampledProfile::new(vec![0.0, 1.0, 2.0], vec![0.0; 3], true).unwrap());
        let norms = weighted_norms(&model, &params, &zero, &QuadConfig::default()).unwrap();
        assert_eq!((norms.t_r, norms.t_grad, norms.t_q), (0.0, 0.0, Some(0.0)));
        assert!(matches!(ckn_quotient(&norms, &params), Err(CknError::DegenerateProfile)));
    }

    #[test]
    fn cone_scales_every_norm() {
        let params = desk();
        let e = RadialMeasure::euclidean(4).unwrap();
        let c = RadialMeasure::cone(4, 0.3).unwrap();
        let u = RadialProfile::extremal(&params, 2.0);
        let quad = QuadConfig::default();
        let ne = weighted_norms(&e, &params, &u, &quad).unwrap();
        let nc = weighted_norms(&c, &params, &u, &quad).unwrap();
        assert!(rel(nc.t_r, 0.3 * ne.t_r) < 1e-14);
        assert!(rel(nc.t_grad, 0.3 * ne.t_grad) < 1e-14);
        assert!(rel(nc.t_q.unwrap(), 0.3 * ne.t_q.unwrap()) < 1e-14);
    }

    #[test]
    fn segment_rule_matches_generic_quadrature() {
        let params = desk();
        let model = RadialMeasure::euclidean(4).unwrap();
        let knots: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
        let values: Vec<f64> = knots.iter().map(|t| (10.0 - t) * (1.0 + t).powi(-2)).collect();
        let s = SampledProfile::new(knots.clone(), values, true).unwrap();
        let fast = weighted_norms(&model, &params, &RadialProfile::Sampled(s.clone()), &QuadConfig::default()).unwrap();
        // The generic route is forced through a tabulated model of constant density 1.
        let table = crate::model::DensityTable::new(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let flat = RadialMeasure::tabulated(4, table).unwrap();
        let slow = weighted_norms(&flat, &params, &RadialProfile::Sampled(s), &QuadConfig::default()).unwrap();
        assert!(rel(fast.t_grad, slow.t_grad) < 1e-12);
        assert!(rel(fast.t_r, slow.t_r) < 1e-12);
        assert!(rel(fast.t_q.unwrap(), slow.t_q.unwrap()) < 1e-8);
    }

    #[test]
    fn divergent_tail_is_reported() {
        let params = desk();
        let model = RadialMeasure::euclidean(4).unwrap();
        let s = SampledProfile::new(vec![0.0, 1.0], vec![1.0, 0.5], false).unwrap();
        let err = weighted_norms(&model, &params, &RadialProfile::Sampled(s), &QuadConfig::default()).unwrap_err();
        assert!(matches!(err, CknError::DivergentIntegral { .. }), "{err}");
    }

    #[test]
    fn critical_endpoint_skips_q_term() {
        use crate::params::Admissibility;
        let raw = RawParams::parse(4, "2", "3", "1").unwrap();
        let params = CknParams::derive_with(&raw, Admissibility::CriticalEndpoint).unwrap();
        let model = RadialMeasure::euclidean(4).unwrap();
        let u = RadialProfile::extremal(&params, 1.0);
        let norms = weighted_norms(&model, &params, &u, &QuadConfig::default()).unwrap();
        assert!(norms.t_q.is_none());
        let quotient = ckn_quotient(&norms, &params).unwrap();
        let expected = norms.t_grad.powf(0.5) / norms.t_r.powf(1.0 / 4.0);
        assert!(rel(quotient, expected) < 1e-15);
    }

    #[test]
    fn power_integral_cases() {
        assert!(rel(power_integral(1.0, 2.0, 1.0), 1.5) < 1e-15);
        assert!(rel(power_integral(1.0, std::f64::consts::E, -1.0), 1.0) < 1e-15);
        assert_eq!(power_integral(0.0, 1.0, -1.0), f64::INFINITY);
        assert!(rel(power_integral(0.0, 1.0, -0.5), 2.0) < 1e-15);
    }
}
