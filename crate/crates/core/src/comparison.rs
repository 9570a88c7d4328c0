//! Comparison functionals `F`, `G`, `H0`, their differential relations, and
//! the volume-growth bound they imply.
//!
//! With `kappa` the extremal exponent, `M = q(p-1)/(q-p)` and
//! `K = (r(p-1)-(q-p))/(q-p)` (equal to `M` on the admissible set):
//!
//! ```text
//! F(lambda)  = (1/K) int d^(gamma r) (lambda + d^kappa)^(-M) dm
//!            = (1/K) int_0^inf m(B_h) psi(h) dh
//! F'(lambda) = -int d^(gamma r) (lambda + d^kappa)^(-M-1) dm
//! psi(h)     = h^(gamma r - 1) [-gamma r lambda + (M kappa - gamma r) h^kappa] / (lambda + h^kappa)^(M+1)
//! ```
//!
//! `G` is `F` on Euclidean space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constant::copt_quadrature;
use crate::error::{CknError, Result};
use crate::format::sci17;
use crate::functionals::check_dimension;
use crate::model::{log_grid, RadialMeasure};
use crate::params::rational::to_f64;
use crate::params::CknParams;
use crate::quadrature::{check_exponents, integrate_half_line, QuadConfig, QuadEstimate};
use crate::special::{unit_ball_volume, unit_sphere_area};

/// Relative tolerance for the equalities of the volume sandwich.
pub const SANDWICH_TOL: f64 = 1e-10;

/// `K = (r(p-1) - (q-p))/(q-p)`.
pub fn mass_factor(params: &CknParams) -> f64 {
    let e = params.float();
    (e.r * (e.p - 1.0) - (e.q - e.p)) / (e.q - e.p)
}

/// `p(n-p-mu)/((n-p)(q-p))`, the factor `|u'|` carries relative to the extremal power.
pub fn gradient_factor(params: &CknParams) -> f64 {
    let e = params.float();
    e.p * (e.n - e.p - e.mu) / ((e.n - e.p) * (e.q - e.p))
}

/// Bracket of the kernel: `-gamma r lambda + (M kappa - gamma r) h^kappa`.
pub fn kernel_bracket(params: &CknParams, lambda: f64, h: f64) -> f64 {
    let e = params.float();
    let gr = e.gamma * e.r;
    -gr * lambda + (e.mass_exp * e.kappa - gr) * h.powf(e.kappa)
}

pub fn psi_kernel(params: &CknParams, lambda: f64, h: f64) -> f64 {
    psi_moment_integrand(params, lambda, h, 0.0)
}

/// `h^extra psi(h)`, with the powers combined in log space so that neither
/// factor under- or overflows at extreme `h`. The bracket is divided by one
/// power of `lambda + h^kappa` before it is multiplied back in.
fn psi_moment_integrand(params: &CknParams, lambda: f64, h: f64, extra: f64) -> f64 {
    let e = params.float();
    if h <= 0.0 {
        return 0.0;
    }
    let gr = e.gamma * e.r;
    let lk = e.kappa * h.ln();
    // ln(lambda + h^kappa)
    let log_base = if lk > lambda.ln() {
        lk + (lambda.ln() - lk).exp().ln_1p()
    } else {
        lambda.ln() + (lk - lambda.ln()).exp().ln_1p()
    };
    let w = (lambda.ln() - log_base).exp();
    let bracket_ratio = (e.mass_exp * e.kappa - gr) * (1.0 - w) - gr * w;
    let log_mag = (gr - 1.0 + extra) * h.ln() - e.mass_exp * log_base;
    log_mag.exp() * bracket_ratio
}

/// Radius where `psi` changes sign, if the bracket has a positive root.
pub fn psi_sign_change(params: &CknParams, lambda: f64) -> Option<f64> {
    let e = params.float();
    let gr = e.gamma * e.r;
    let hk = gr * lambda / (e.mass_exp * e.kappa - gr);
    (hk > 0.0 && hk.is_finite()).then(|| hk.powf(1.0 / e.kappa))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(CknError::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

fn natural_cuts(params: &CknParams, lambda: f64, quad: &QuadConfig, model: Option<&RadialMeasure>) -> Vec<f64> {
    let mut cuts = vec![quad.split_point * lambda.powf(1.0 / params.float().kappa)];
    if let Some(m) = model {
        cuts.extend(m.breakpoints());
    }
    cuts
}

fn kernel_exponents(params: &CknParams) -> (f64, f64) {
    (to_f64(&params.origin_exponent()), to_f64(&params.decay_exponent()))
}

fn relabel(term: &'static str) -> impl Fn(CknError) -> CknError {
    move |e| match e {
        CknError::QuadratureFailure { context, error, tolerance } => {
            CknError::QuadratureFailure { context: format!("{term} on {context}"), error, tolerance }
        }
        CknError::DivergentIntegral { reason, .. } => CknError::DivergentIntegral { term, reason },
        other => other,
    }
}

/// `G(lambda)` by quadrature of its one-dimensional kernel form.
pub fn g_of(params: &CknParams, lambda: f64, quad: &QuadConfig) -> Result<f64> {
    Ok(g_estimate(params, lambda, quad)?.value)
}

pub fn g_estimate(params: &CknParams, lambda: f64, quad: &QuadConfig) -> Result<QuadEstimate> {
    check_lambda(lambda)?;
    let (zero, infinity) = kernel_exponents(params);
    check_exponents("G", zero, infinity).map_err(relabel("G"))?;
    let n = params.float().n;
    let f = |t: f64| psi_moment_integrand(params, lambda, t, n);
    let est = integrate_half_line(&f, &natural_cuts(params, lambda, quad, None), None, quad).map_err(relabel("G"))?;
    Ok(est.scale(unit_ball_volume(params.n) / mass_factor(params)))
}

/// `G` through its power law `G(lambda) = lambda^g_exp G(1)`, with `G(1)` computed once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPowerLaw {
    pub g1: f64,
    pub g_exp: f64,
}

impl GPowerLaw {
    pub fn new(params: &CknParams, quad: &QuadConfig) -> Result<Self> {
        Ok(Self { g1: g_of(params, 1.0, quad)?, g_exp: params.float().g_exp })
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        lambda.powf(self.g_exp) * self.g1
    }

    pub fn derivative(&self, lambda: f64) -> f64 {
        self.g_exp * self.eval(lambda) / lambda
    }
}

/// `F(lambda) = (1/K) int m(B_h) psi(h) dh`.
pub fn f_of(model: &RadialMeasure, params: &CknParams, lambda: f64, quad: &QuadConfig) -> Result<f64> {
    check_dimension(model, params)?;
    check_lambda(lambda)?;
    let (zero, infinity) = kernel_exponents(params);
    check_exponents("F", zero, infinity).map_err(relabel("F"))?;
    let n = params.float().n;
    let omega = unit_ball_volume(params.n);
    let f = |h: f64| omega * model.volume_ratio(h) * psi_moment_integrand(params, lambda, h, n);
    let est =
        integrate_half_line(&f, &natural_cuts(params, lambda, quad, Some(model)), None, quad).map_err(relabel("F"))?;
    Ok(est.value / mass_factor(params))
}

/// `F(lambda)` straight from its radial integral against the sphere density.
pub fn f_direct(model: &RadialMeasure, params: &CknParams, lambda: f64, quad: &QuadConfig) -> Result<f64> {
    let e = params.float();
    let value = radial_power_integral(model, params, lambda, e.mass_exp, "F", quad)?;
    Ok(value / mass_factor(params))
}

/// `F'(lambda) = -int d^(gamma r) (lambda + d^kappa)^(-M-1) dm`.
pub fn f_prime(model: &RadialMeasure, params: &CknParams, lambda: f64, quad: &QuadConfig) -> Result<f64> {
    let e = params.float();
    Ok(-radial_power_integral(model, params, lambda, e.mass_exp + 1.0, "F'", quad)?)
}

/// `int t^(gamma r) (lambda + t^kappa)^(-power) sigma(t) dt`.
fn radial_power_integral(
    model: &RadialMeasure,
    params: &CknParams,
    lambda: f64,
    power: f64,
    term: &'static str,
    quad: &QuadConfig,
) -> Result<f64> {
    check_dimension(model, params)?;
    check_lambda(lambda)?;
    let e = params.float();
    let t_exp = e.gamma * e.r + e.n - 1.0;
    check_exponents(term, t_exp, t_exp - e.kappa * power).map_err(relabel(term))?;
    let density = model.constant_density();
    let f = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let rho = if density.is_some() { 1.0 } else { model.relative_density(t) };
        (t_exp * t.ln() - power * (lambda + t.powf(e.kappa)).ln()).exp() * rho
    };
    let est =
        integrate_half_line(&f, &natural_cuts(params, lambda, quad, Some(model)), None, quad).map_err(relabel(term))?;
    Ok(est.value * unit_sphere_area(model.dimension()) * density.unwrap_or(1.0))
}

/// `Gamma = C^(p/a) (p(n-p-mu)/((n-p)(q-p)))^p K^(p(1-a)/(aq))`.
///
/// With `C = C_opt` this is the coefficient of the sharp equation for `G`.
pub fn gamma_coefficient(params: &CknParams, constant: f64) -> f64 {
    let e = params.float();
    constant.powf(e.p / e.a)
        * gradient_factor(params).powf(e.p)
        * mass_factor(params).powf(e.p * (1.0 - e.a) / (e.a * e.q))
}

/// Both sides of `(-Y')^(p/(ar)) <= Gamma (K Y + lambda Y') Y^(p(1-a)/(aq))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferentialSides {
    pub lhs: f64,
    pub rhs: f64,
}

impl DifferentialSides {
    pub fn evaluate(params: &CknParams, coefficient: f64, lambda: f64, y: f64, y_prime: f64) -> Self {
        let e = params.float();
        let lhs = (-y_prime).powf(e.p / (e.a * e.r));
        let rhs = coefficient * (mass_factor(params) * y + lambda * y_prime) * y.powf(e.p * (1.0 - e.a) / (e.a * e.q));
        Self { lhs, rhs }
    }

    /// `(lhs - rhs) / rhs`.
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs) / self.rhs
    }

    /// `(rhs - lhs) / rhs`: non-negative when the inequality holds.
    pub fn relative_slack(&self) -> f64 {
        (self.rhs - self.lhs) / self.rhs
    }
}

/// Relative residual of the sharp equation for `G` at `lambda`, with `G` and
/// `G'` from independent quadratures.
pub fn ode_residual_g(params: &CknParams, copt: f64, lambda: f64, quad: &QuadConfig) -> Result<f64> {
    let euclid = RadialMeasure::euclidean(params.n)?;
    let g = g_of(params, lambda, quad)?;
    let g_prime = f_prime(&euclid, params, lambda, quad)?;
    Ok(DifferentialSides::evaluate(params, gamma_coefficient(params, copt), lambda, g, g_prime).residual())
}

/// `(C_opt / C)^(n/a)`.
pub fn comparison_ratio(params: &CknParams, copt: f64, constant: f64) -> f64 {
    let e = params.float();
    (copt / constant).powf(e.n / e.a)
}

fn check_constant(copt: f64, constant: f64) -> Result<()> {
    if !(constant > 0.0) || !constant.is_finite() {
        return Err(CknError::InvalidInput(format!("constant must be positive, got {constant}")));
    }
    if constant < copt {
        return Err(CknError::InvalidConstant { constant, copt });
    }
    Ok(())
}

/// `H0(lambda) = (C_opt/C)^(n/a) G(lambda)`.
pub fn h0_of(params: &CknParams, copt: f64, constant: f64, lambda: f64, quad: &QuadConfig) -> Result<f64> {
    check_constant(copt, constant)?;
    Ok(comparison_ratio(params, copt, constant) * g_of(params, lambda, quad)?)
}

/// Relative residual of the equation `H0` solves with coefficient `Gamma(C)`.
pub fn h0_residual(params: &CknParams, copt: f64, constant: f64, lambda: f64, quad: &QuadConfig) -> Result<f64> {
    check_constant(copt, constant)?;
    let euclid = RadialMeasure::euclidean(params.n)?;
    let d = comparison_ratio(params, copt, constant);
    let h0 = d * g_of(params, lambda, quad)?;
    let h0_prime = d * f_prime(&euclid, params, lambda, quad)?;
    Ok(DifferentialSides::evaluate(params, gamma_coefficient(params, constant), lambda, h0, h0_prime).residual())
}

/// Signed relative slack of the differential inequality `F` satisfies when
/// the CKN inequality holds with constant `C` on `model`.
pub fn ineq_slack_f(
    model: &RadialMeasure,
    params: &CknParams,
    constant: f64,
    lambda: f64,
    quad: &QuadConfig,
) -> Result<f64> {
    Ok(ineq_sides_f(model, params, constant, lambda, quad)?.relative_slack())
}

pub fn ineq_sides_f(
    model: &RadialMeasure,
    params: &CknParams,
    constant: f64,
    lambda: f64,
    quad: &QuadConfig,
) -> Result<DifferentialSides> {
    let f = f_of(model, params, lambda, quad)?;
    let fp = f_prime(model, params, lambda, quad)?;
    Ok(DifferentialSides::evaluate(params, gamma_coefficient(params, constant), lambda, f, fp))
}

/// Upper bound on `int_0^h0 h^n psi(h) dh` obtained by replacing `lambda + h^kappa` with `lambda`.
pub fn truncated_moment_bound(params: &CknParams, lambda: f64, h0: f64) -> f64 {
    let e = params.float();
    lambda.powf(-e.mass_exp - 1.0) * moment_bracket(params, lambda, h0)
}

fn moment_bracket(params: &CknParams, lambda: f64, h0: f64) -> f64 {
    let e = params.float();
    let gr = e.gamma * e.r;
    let a = e.n + gr;
    let b = a + e.kappa;
    -gr * lambda * h0.powf(a) / a + (e.mass_exp * e.kappa - gr) * h0.powf(b) / b
}

/// `int_0^h0 h^n psi(h) dh` by quadrature.
pub fn truncated_moment(params: &CknParams, lambda: f64, h0: f64, quad: &QuadConfig) -> Result<f64> {
    let n = params.float().n;
    let f = |h: f64| psi_moment_integrand(params, lambda, h, n);
    Ok(integrate_half_line(&f, &natural_cuts(params, lambda, quad, None), Some(h0), quad)?.value)
}

/// Right side of the decay obstruction, `lambda^eta [bracket]`, which tends
/// to zero as `lambda` grows because `eta + 1 = -n(p-1)/p < 0`.
pub fn obstruction_rhs(params: &CknParams, lambda: f64, h0: f64) -> f64 {
    lambda.powf(to_f64(&params.eta())) * moment_bracket(params, lambda, h0)
}

/// `C0^-1 (C_opt/C)^(n/a) omega_n rho^n`.
pub fn volume_lower_bound(params: &CknParams, copt: f64, constant: f64, c0: f64, rho: f64) -> Result<f64> {
    check_constant(copt, constant)?;
    if !(c0 >= 1.0) || !c0.is_finite() {
        return Err(CknError::InvalidInput(format!("doubling constant C0 must be at least 1, got {c0}")));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(CknError::InvalidInput(format!("radius must be positive, got {rho}")));
    }
    Ok(comparison_ratio(params, copt, constant) / c0 * unit_ball_volume(params.n) * rho.powi(params.n as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub rho: f64,
    pub lower: f64,
    pub volume: f64,
    pub upper: f64,
    /// `(volume - lower) / volume`.
    pub lower_slack: f64,
    /// `(upper - volume) / volume`.
    pub upper_slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    pub pass: bool,
}

/// Checks `lower <= m(B_rho) <= C0 omega_n rho^n` at every radius, up to [`SANDWICH_TOL`].
pub fn growth_sandwich(
    model: &RadialMeasure,
    params: &CknParams,
    copt: f64,
    constant: f64,
    c0: f64,
    rhos: &[f64],
) -> Result<SandwichReport> {
    check_dimension(model, params)?;
    let omega = unit_ball_volume(params.n);
    let rows = rhos
        .iter()
        .map(|&rho| {
            let lower = volume_lower_bound(params, copt, constant, c0, rho)?;
            let volume = model.ball_volume(rho);
            let upper = c0 * omega * rho.powi(params.n as i32);
            let lower_slack = (volume - lower) / volume;
            let upper_slack = (upper - volume) / volume;
            let pass = lower_slack >= -SANDWICH_TOL && upper_slack >= -SANDWICH_TOL;
            Ok(SandwichRow { rho, lower, volume, upper, lower_slack, upper_slack, pass })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(SandwichReport { rows, pass })
}

/// Default sweep: 13 log-spaced values in `[1e-2, 1e2]`.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 13)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveConstants {
    pub c: f64,
    pub copt: f64,
    /// Coefficient of the differential inequality for `F`, built from `C`.
    pub gamma_coeff: f64,
    /// Coefficient of the sharp equation for `G`, built from `C_opt`.
    pub gamma_tilde_coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCurve {
    pub lambda: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h0: Vec<f64>,
    pub f_prime: Vec<f64>,
    pub ode_residual_g: Vec<f64>,
    /// Relative slack `(rhs - lhs)/rhs` of the inequality for `F`.
    pub ineq_slack_f: Vec<f64>,
    pub h0_residual: Vec<f64>,
    pub constants: CurveConstants,
}

pub const CURVE_COLUMNS: [&str; 7] = ["lambda", "F", "G", "H0", "F_prime", "ode_residual_G", "ineq_slack_F"];

struct CurvePoint {
    f: f64,
    g: f64,
    h0: f64,
    f_prime: f64,
    ode: f64,
    slack: f64,
    h0_residual: f64,
}

impl ComparisonCurve {
    /// Evaluates every column at each `lambda`, in parallel, merged in grid order.
    pub fn compute(
        model: &RadialMeasure,
        params: &CknParams,
        copt: f64,
        constant: f64,
        lambdas: &[f64],
        quad: &QuadConfig,
    ) -> Result<Self> {
        check_dimension(model, params)?;
        check_constant(copt, constant)?;
        let euclid = RadialMeasure::euclidean(params.n)?;
        let ratio = comparison_ratio(params, copt, constant);
        let gamma_tilde = gamma_coefficient(params, copt);
        let gamma = gamma_coefficient(params, constant);
        let points = lambdas
            .par_iter()
            .map(|&lambda| -> Result<CurvePoint> {
                let g = g_of(params, lambda, quad)?;
                let g_prime = f_prime(&euclid, params, lambda, quad)?;
                let f = f_of(model, params, lambda, quad)?;
                let fp = f_prime(model, params, lambda, quad)?;
                let ode = DifferentialSides::evaluate(params, gamma_tilde, lambda, g, g_prime).residual();
                let slack = DifferentialSides::evaluate(params, gamma, lambda, f, fp).relative_slack();
                let h0_residual =
                    DifferentialSides::evaluate(params, gamma, lambda, ratio * g, ratio * g_prime).residual();
                Ok(CurvePoint { f, g, h0: ratio * g, f_prime: fp, ode, slack, h0_residual })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lambda: lambdas.to_vec(),
            f: points.iter().map(|p| p.f).collect(),
            g: points.iter().map(|p| p.g).collect(),
            h0: points.iter().map(|p| p.h0).collect(),
            f_prime: points.iter().map(|p| p.f_prime).collect(),
            ode_residual_g: points.iter().map(|p| p.ode).collect(),
            ineq_slack_f: points.iter().map(|p| p.slack).collect(),
            h0_residual: points.iter().map(|p| p.h0_residual).collect(),
            constants: CurveConstants { c: constant, copt, gamma_coeff: gamma, gamma_tilde_coeff: gamma_tilde },
        })
    }

    /// As [`ComparisonCurve::compute`] with `C = multiple * C_opt` and `C_opt` from quadrature.
    pub fn with_multiple(
        model: &RadialMeasure,
        params: &CknParams,
        multiple: f64,
        lambdas: &[f64],
        quad: &QuadConfig,
    ) -> Result<Self> {
        let copt = copt_quadrature(params, quad)?.copt;
        Self::compute(model, params, copt, multiple * copt, lambdas, quad)
    }

    /// CSV with a `#` comment header, one column line, 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for line in comments {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "{}", CURVE_COLUMNS.join(","))?;
        for i in 0..self.lambda.len() {
            let row = [
                self.lambda[i],
                self.f[i],
                self.g[i],
                self.h0[i],
                self.f_prime[i],
                self.ode_residual_g[i],
                self.ineq_slack_f[i],
            ];
            writeln!(out, "{}", row.iter().map(|v| sci17(*v)).collect::<Vec<_>>().join(","))?;
        }
        Ok(())
    }
}
