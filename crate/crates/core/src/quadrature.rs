//! Double-exponential quadrature on the half line.
//!
//! The half line is split into finite pieces and an optional infinite tail.
//! Finite pieces use the tanh-sinh map, which absorbs algebraic endpoint
//! singularities such as `t^w` with `w > -1` at the origin. The tail
//! `[c, inf)` uses `t = c (1 + exp(pi/2 sinh s))`, under which algebraic decay
//! `t^d` with `d < -1` becomes double-exponential decay in `s`. On each piece
//! the trapezoidal step is halved until two successive sums agree.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{CknError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub max_level: u32,
    /// Boundary between the finite piece and the tail, in units of the
    /// integrand's natural length scale.
    pub split_point: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_level: 12, split_point: 1.0 }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(CknError::InvalidInput(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if !(self.split_point > 0.0) || !self.split_point.is_finite() {
            return Err(CknError::InvalidInput(format!("split_point must be positive, got {}", self.split_point)));
        }
        if self.max_level < 3 {
            return Err(CknError::InvalidInput("max_level must be at least 3".into()));
        }
        Ok(())
    }
}

/// A value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
}

impl QuadEstimate {
    pub const ZERO: QuadEstimate = QuadEstimate { value: 0.0, error: 0.0 };

    pub fn scale(self, factor: f64) -> Self {
        Self { value: self.value * factor, error: self.error * factor.abs() }
    }
}

impl std::ops::Add for QuadEstimate {
    type Output = QuadEstimate;
    fn add(self, rhs: Self) -> Self {
        Self { value: self.value + rhs.value, error: self.error + rhs.error }
    }
}

/// `f` on `(0, inf)`, behaving like `t^zero_exponent` near the origin and
/// `t^infinity_exponent` at infinity (use `-inf` for faster-than-algebraic decay).
pub struct PowerLawIntegrand<F> {
    pub zero_exponent: f64,
    pub infinity_exponent: f64,
    pub f: F,
}

impl<F: Fn(f64) -> f64> PowerLawIntegrand<F> {
    pub fn new(zero_exponent: f64, infinity_exponent: f64, f: F) -> Self {
        Self { zero_exponent, infinity_exponent, f }
    }
}

/// Checks the endpoint exponents for convergence.
pub fn check_exponents(term: &'static str, zero_exponent: f64, infinity_exponent: f64) -> Result<()> {
    if !(zero_exponent > -1.0) {
        return Err(CknError::DivergentIntegral {
            term,
            reason: format!("integrand ~ t^{zero_exponent} at the origin needs exponent > -1"),
        });
    }
    if !(infinity_exponent < -1.0) {
        return Err(CknError::DivergentIntegral {
            term,
            reason: format!("integrand ~ t^{infinity_exponent} at infinity needs exponent < -1"),
        });
    }
    Ok(())
}

/// Integrates a power-law integrand over `(0, inf)`, split at `quad.split_point`.
pub fn quad_integrate<F: Fn(f64) -> f64>(integrand: &PowerLawIntegrand<F>, quad: &QuadConfig) -> Result<QuadEstimate> {
    check_exponents("integrand", integrand.zero_exponent, integrand.infinity_exponent)?;
    integrate_half_line(&integrand.f, &[quad.split_point], None, quad)
}

/// Integrates over `[0, end]` (or `[0, inf)` when `end` is `None`), with the
/// listed interior breakpoints where the integrand may have kinks.
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: &F,
    breakpoints: &[f64],
    end: Option<f64>,
    quad: &QuadConfig,
) -> Result<QuadEstimate> {
    quad.check()?;
    let mut cuts: Vec<f64> =
        breakpoints.iter().copied().filter(|&b| b > 0.0 && b.is_finite() && end.map_or(true, |e| b < e)).collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    if end.is_none() && cuts.is_empty() {
        cuts.push(quad.split_point);
    }
    let mut total = QuadEstimate::ZERO;
    let mut left = 0.0;
    for &cut in &cuts {
        total = total + integrate_finite(f, left, cut, quad)?;
        left = cut;
    }
    match end {
        Some(e) if e > left => total = total + integrate_finite(f, left, e, quad)?,
        Some(_) => {}
        None => total = total + integrate_tail(f, left, quad)?,
    }
    Ok(total)
}

const FINITE_S_MAX: f64 = 6.0;
const TAIL_S_MAX: f64 = 6.5;
/// Furthest node of the continued power-law tail.
const TAIL_S_LIMIT: f64 = 14.0;
/// The continued tail stops once its terms fall below `e^-50` of the last regular one.
const TAIL_CUTOFF_LOG: f64 = -50.0;
const BASE_STEP: f64 = 0.5;
const MIN_LEVEL: u32 = 3;
const ROUNDING_FLOOR: f64 = 64.0;

/// Tanh-sinh quadrature on a finite interval.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, quad: &QuadConfig) -> Result<QuadEstimate> {
    if !(b > a) {
        return Ok(QuadEstimate::ZERO);
    }
    let half = 0.5 * (b - a);
    let context = || format!("[{a:.6e}, {b:.6e}]");
    let term = |s: f64| -> Result<f64> {
        let u = std::f64::consts::PI * s.sinh();
        // distances of tanh(u/2) from -1 and +1
        let from_left = 2.0 / (1.0 + (-u).exp());
        let from_right = 2.0 / (1.0 + u.exp());
        let weight = half * FRAC_PI_2 * s.cosh() * from_left * from_right;
        let x = if s < 0.0 { a + half * from_left } else { b - half * from_right };
        // nodes that round onto an endpoint would sample a possible kink there
        if x <= a || x >= b {
            return Ok(0.0);
        }
        weighted(f, x, weight, quad, &context)
    };
    de_sum(term, -FINITE_S_MAX, FINITE_S_MAX, quad, context)
}

/// Quadrature on `[c, inf)` for algebraically decaying integrands.
///
/// Beyond the last representable node the integrand is continued as the pure
/// power it has become there, so the substituted integrand still decays
/// double-exponentially and the trapezoid sum converges at the usual rate.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: &F, c: f64, quad: &QuadConfig) -> Result<QuadEstimate> {
    let scale = if c > 0.0 { c } else { 1.0 };
    let context = || format!("[{c:.6e}, inf)");
    let node = |s: f64| -> (f64, f64) {
        let e = (FRAC_PI_2 * s.sinh()).exp();
        (c + scale * e, scale * e * FRAC_PI_2 * s.cosh())
    };
    let far = node(TAIL_S_MAX).0;
    let power = power_tail(f, far);
    // log of the continued term relative to its value at `far`
    let log_term = |s: f64, exponent: f64| -> f64 {
        let lift = FRAC_PI_2 * (s.sinh() - TAIL_S_MAX.sinh());
        (exponent + 1.0) * lift + (s.cosh() / TAIL_S_MAX.cosh()).ln()
    };
    let mut s_max = TAIL_S_MAX;
    if let Some(tail) = &power {
        while s_max < TAIL_S_LIMIT && log_term(s_max, tail.exponent) > TAIL_CUTOFF_LOG {
            s_max += BASE_STEP;
        }
    }
    let term = |s: f64| -> Result<f64> {
        match &power {
            Some(tail) if s > TAIL_S_MAX => Ok(tail.far_term * log_term(s, tail.exponent).exp()),
            _ => {
                let (x, w) = node(s);
                weighted(f, x, w, quad, &context)
            }
        }
    };
    let mut est = de_sum(term, -TAIL_S_MAX, s_max, quad, context)?;
    if let Some(tail) = &power {
        est.error += tail.error;
    }
    Ok(est)
}

/// Power-law behaviour of `f` beyond `x`.
struct PowerTail {
    exponent: f64,
    /// The substituted term `f(x) w(x)` at the last regular node.
    far_term: f64,
    /// Change in the analytic remainder between the two exponent estimates.
    error: f64,
}

/// Reads the exponent off `f` at `x e^-4` and `x e^-8`; `None` when `f` does
/// not look like a decaying power there.
fn power_tail<F: Fn(f64) -> f64>(f: &F, x: f64) -> Option<PowerTail> {
    let f0 = f(x);
    let (f1, f2) = (f(x * (-4.0f64).exp()), f(x * (-8.0f64).exp()));
    let same_sign = |u: f64, v: f64| u != 0.0 && v != 0.0 && u.is_sign_positive() == v.is_sign_positive();
    if !(same_sign(f0, f1) && same_sign(f1, f2)) {
        return None;
    }
    let e1 = (f0 / f1).ln() / 4.0;
    let e2 = (f1 / f2).ln() / 4.0;
    if !(e1 < -1.0 && e2 < -1.0) {
        return None;
    }
    let weight = x * FRAC_PI_2 * TAIL_S_MAX.cosh();
    let error = (f0 * x / (e1 + 1.0) - f0 * x / (e2 + 1.0)).abs();
    Some(PowerTail { exponent: e1, far_term: f0 * weight, error })
}

fn weighted<F: Fn(f64) -> f64, C: Fn() -> String>(
    f: &F,
    x: f64,
    w: f64,
    quad: &QuadConfig,
    context: &C,
) -> Result<f64> {
    if w == 0.0 {
        return Ok(0.0);
    }
    let v = f(x) * w;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CknError::QuadratureFailure {
            context: format!("{}: non-finite integrand at t = {x:e}", context()),
            error: f64::INFINITY,
            tolerance: quad.rel_tol,
        })
    }
}

/// Trapezoid sums of `term` over `[s_min, s_max]`, halving the step until two
/// levels agree. Both ends must be multiples of [`BASE_STEP`].
fn de_sum<T, C>(term: T, s_min: f64, s_max: f64, quad: &QuadConfig, context: C) -> Result<QuadEstimate>
where
    T: Fn(f64) -> Result<f64>,
    C: Fn() -> String,
{
    let (lo, hi) = ((s_min / BASE_STEP).round() as i64, (s_max / BASE_STEP).round() as i64);
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    for k in lo..=hi {
        let v = term(k as f64 * BASE_STEP)?;
        sum += v;
        abs_sum += v.abs();
    }
    let edge = term(lo as f64 * BASE_STEP)?.abs() + term(hi as f64 * BASE_STEP)?.abs();
    let mut estimate = BASE_STEP * sum;
    let mut error = f64::INFINITY;
    for level in 1..=quad.max_level {
        let factor = 1i64 << level;
        let step = BASE_STEP / factor as f64;
        // new nodes are the odd multiples of `step`
        let mut j = lo * factor + 1;
        while j < hi * factor {
            let v = term(j as f64 * step)?;
            sum += v;
            abs_sum += v.abs();
            j += 2;
        }
        let refined = step * sum;
        error = (refined - estimate).abs() + step * edge;
        estimate = refined;
        // Differences below the rounding noise of the sum itself carry no information.
        let noise = ROUNDING_FLOOR * f64::EPSILON * step * abs_sum;
        if level >= MIN_LEVEL && error <= (quad.rel_tol * estimate.abs()).max(noise) {
            return Ok(QuadEstimate { value: estimate, error });
        }
        if level >= MIN_LEVEL && estimate == 0.0 && error == 0.0 {
            return Ok(QuadEstimate::ZERO);
        }
    }
    Err(CknError::QuadratureFailure { context: context(), error, tolerance: quad.rel_tol * estimate.abs() })
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
    }
}

fn legendre(order: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if order == 0 {
        return (1.0, 0.0);
    }
    let d = order as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
