//! Descent over piecewise-linear profiles on a fixed knot grid.
//!
//! Search directions are the hat functions of a hierarchical basis: hats of
//! index half-width `2^L, ..., 2, 1` centred on multiples of that width.
//! Coarse hats move whole stretches of the profile at once, fine hats correct
//! it locally, so one sweep acts like a multigrid cycle and the slow
//! smoothing of plain single-knot descent is avoided. Each direction gets a
//! three-point parabolic step with a per-direction step size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Method, MinimizeConfig, MinimizeResult};
use crate::error::{CknError, Result};
use crate::functionals::{check_dimension, SegmentRule, SegmentSums, SEGMENT_ORDER};
use crate::model::{log_grid, RadialMeasure};
use crate::params::CknParams;
use crate::profile::{RadialProfile, SampledProfile};
use crate::special::unit_sphere_area;

/// Ratio between the innermost positive knot and the support radius.
pub const INNER_KNOT_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub enum GridInit {
    /// `(lambda + t^kappa)^(-(p-1)/(q-p))` sampled on the grid, forced to zero at the support radius.
    TruncatedExtremal { lambda: f64 },
    /// Independent uniform values in `[0, 1)` from a ChaCha8 stream.
    Random { seed: u64 },
    /// Explicit values for every knot but the last.
    Values(Vec<f64>),
}

/// The origin followed by `grid_size` log-spaced knots on `[R 1e-4, R]`.
pub fn grid_knots(cfg: &MinimizeConfig) -> Vec<f64> {
    let mut knots = vec![0.0];
    knots.extend(log_grid(cfg.support_radius * INNER_KNOT_RATIO, cfg.support_radius, cfg.grid_size));
    knots
}

struct Direction {
    start: usize,
    weights: Vec<f64>,
    step: f64,
}

fn hierarchical_directions(free: usize) -> Vec<Direction> {
    let mut width = 1usize;
    while width * 4 <= free {
        width *= 2;
    }
    let mut dirs = Vec::new();
    while width >= 1 {
        let mut centre = 0;
        while centre < free {
            let start = centre.saturating_sub(width - 1);
            let end = (centre + width - 1).min(free - 1);
            let weights = (start..=end).map(|i| 1.0 - (i as f64 - centre as f64).abs() / width as f64).collect();
            dirs.push(Direction { start, weights, step: 0.05 });
            centre += width;
        }
        width /= 2;
    }
    dirs
}

struct GridState<'a> {
    rule: SegmentRule,
    params: &'a CknParams,
    factor: f64,
    values: Vec<f64>,
    head: SegmentSums,
    segments: Vec<SegmentSums>,
    totals: SegmentSums,
}

impl<'a> GridState<'a> {
    fn new(rule: SegmentRule, params: &'a CknParams, factor: f64, values: Vec<f64>) -> Self {
        let head = rule.head(values[0]);
        let segments = (0..rule.segments()).map(|i| rule.segment(i, values[i], values[i + 1])).collect();
        let mut state = Self { rule, params, factor, values, head, segments, totals: SegmentSums::default() };
        state.resum();
        state
    }

    fn resum(&mut self) {
        let mut total = self.head;
        for s in &self.segments {
            total += *s;
        }
        self.totals = total;
    }

    fn quotient(&self, sums: &SegmentSums) -> f64 {
        let e = self.params.float();
        let t_r = sums.r * self.factor;
        if !(t_r > 0.0) {
            return f64::INFINITY;
        }
        let mut value = (sums.grad * self.factor).powf(e.a / e.p) / t_r.powf(1.0 / e.r);
        if let Some(q) = sums.q {
            if !self.params.q_term_vanishes() {
                value *= (q * self.factor).powf((1.0 - e.a) / e.q);
            }
        }
        value
    }

    fn current(&self) -> f64 {
        self.quotient(&self.totals)
    }

    /// Quotient and changed pieces after moving `dir` by `s`, with clamping at zero.
    fn trial(&self, dir: &Direction, s: f64) -> (f64, Vec<f64>, Option<SegmentSums>, Vec<SegmentSums>) {
        let lo = dir.start;
        let hi = lo + dir.weights.len() - 1;
        let moved: Vec<f64> =
            dir.weights.iter().enumerate().map(|(k, w)| (self.values[lo + k] + s * w).max(0.0)).collect();
        let value_at = |i: usize| if i >= lo && i <= hi { moved[i - lo] } else { self.values[i] };
        let mut totals = self.totals;
        let head = (lo == 0).then(|| self.rule.head(moved[0]));
        if let Some(h) = head {
            totals = subtract(totals, self.head);
            totals += h;
        }
        let first_seg = lo.saturating_sub(1);
        let last_seg = hi.min(self.rule.segments() - 1);
        let mut segs = Vec::with_capacity(last_seg + 1 - first_seg);
        for i in first_seg..=last_seg {
            let new = self.rule.segment(i, value_at(i), value_at(i + 1));
            totals = subtract(totals, self.segments[i]);
            totals += new;
            segs.push(new);
        }
        (self.quotient(&totals), moved, head, segs)
    }

    fn accept(&mut self, dir: &Direction, moved: Vec<f64>, head: Option<SegmentSums>, segs: Vec<SegmentSums>) {
        let lo = dir.start;
        self.values[lo..lo + moved.len()].copy_from_slice(&moved);
        if let Some(h) = head {
            self.head = h;
        }
        let first_seg = lo.saturating_sub(1);
        for (k, s) in segs.into_iter().enumerate() {
            self.segments[first_seg + k] = s;
        }
        self.resum();
    }

    /// Parabolic step along `dir`; returns the new quotient (never larger than `f0`).
    fn line_step(&mut self, dir: &mut Direction, f0: f64) -> f64 {
        let h = dir.step;
        let plus = self.trial(dir, h);
        let minus = self.trial(dir, -h);
        let (f_plus, f_minus) = (plus.0, minus.0);
        let curvature = f_plus + f_minus - 2.0 * f0;
        let mut best = if f_plus <= f_minus { (plus, h) } else { (minus, -h) };
        if curvature > 0.0 && curvature.is_finite() {
            let s = (0.5 * h * (f_minus - f_plus) / curvature).clamp(-4.0 * h, 4.0 * h);
            if s != 0.0 && s.abs() != h {
                let vertex = self.trial(dir, s);
                if vertex.0 < best.0 .0 {
                    best = (vertex, s);
                }
            }
        }
        let ((f_new, moved, head, segs), s) = best;
        if f_new < f0 {
            self.accept(dir, moved, head, segs);
            dir.step = (2.0 * s.abs()).max(h * 0.5).min(1.0);
            f_new
        } else {
            dir.step = (h * 0.25).max(1e-14);
            f0
        }
    }
}

fn subtract(a: SegmentSums, b: SegmentSums) -> SegmentSums {
    SegmentSums {
        r: a.r - b.r,
        grad: a.grad - b.grad,
        q: match (a.q, b.q) {
            (Some(x), Some(y)) => Some(x - y),
            (x, _) => x,
        },
    }
}

fn initial_values(init: &GridInit, params: &CknParams, knots: &[f64]) -> Result<Vec<f64>> {
    let free = knots.len() - 1;
    let values = match init {
        GridInit::TruncatedExtremal { lambda } => {
            let u = RadialProfile::extremal(params, *lambda);
            knots[..free].iter().map(|&t| u.value(t)).collect()
        }
        GridInit::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..free).map(|_| rng.gen::<f64>()).collect()
        }
        GridInit::Values(v) => {
            if v.len() != free {
                return Err(CknError::InvalidInput(format!("expected {free} initial values, got {}", v.len())));
            }
            if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                return Err(CknError::InvalidInput("initial values must be non-negative".into()));
            }
            v.clone()
        }
    };
    let mut full = values;
    full.push(0.0);
    Ok(full)
}

/// Minimizes the quotient over non-negative piecewise-linear profiles that
/// vanish at the support radius.
pub fn minimize_grid(
    model: &RadialMeasure,
    params: &CknParams,
    cfg: &MinimizeConfig,
    init: &GridInit,
) -> Result<MinimizeResult> {
    cfg.check()?;
    check_dimension(model, params)?;
    if cfg.method != Method::CoordinateDescent {
        return Err(CknError::InvalidInput("grid profiles are minimized by coordinate descent".into()));
    }
    let knots = grid_knots(cfg);
    let values = initial_values(init, params, &knots)?;
    let (rule, factor) = match model.constant_density() {
        Some(rho) => (SegmentRule::new(params, &knots, SEGMENT_ORDER)?, rho * unit_sphere_area(params.n)),
        None => (
            SegmentRule::with_density(params, &knots, SEGMENT_ORDER, &|t| model.relative_density(t))?,
            unit_sphere_area(params.n),
        ),
    };
    let mut state = GridState::new(rule, params, factor, values);
    let mut f = state.current();
    if !f.is_finite() {
        return Err(CknError::DegenerateProfile);
    }
    let mut dirs = hierarchical_directions(knots.len() - 1);
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let start = f;
        for dir in dirs.iter_mut() {
            f = state.line_step(dir, f);
        }
        history.push(f);
        let steps_exhausted = dirs.iter().all(|d| d.step < cfg.x_tol);
        if start - f <= cfg.f_tol * f || steps_exhausted {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(CknError::NonConvergence { iterations });
    }
    let seed = match init {
        GridInit::Random { seed } => Some(*seed),
        _ => None,
    };
    let profile = SampledProfile::new(knots, state.values, true)?;
    Ok(MinimizeResult {
        best_quotient: f,
        best_profile: RadialProfile::Sampled(profile),
        iterations,
        converged,
        history,
        seed,
        flatness: None,
    })
}

/// Runs [`minimize_grid`] from random starts in parallel. Results come back in
/// seed order; [`best_run`] picks the minimum with ties going to the earlier seed.
pub fn minimize_grid_seeds(
    model: &RadialMeasure,
    params: &CknParams,
    cfg: &MinimizeConfig,
    seeds: &[u64],
) -> Vec<Result<MinimizeResult>> {
    seeds.par_iter().map(|&seed| minimize_grid(model, params, cfg, &GridInit::Random { seed })).collect()
}

pub fn best_run(runs: &[MinimizeResult]) -> Option<&MinimizeResult> {
    runs.iter().fold(None, |best: Option<&MinimizeResult>, r| match best {
        Some(b) if b.best_quotient <= r.best_quotient => Some(b),
        _ => Some(r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::quotient_of;
    use crate::params::RawParams;
    use crate::quadrature::QuadConfig;

    fn desk() -> CknParams {
        CknParams::derive(&RawParams::parse(4, "2", "2.5", "1").unwrap()).unwrap()
    }

    fn small_cfg() -> MinimizeConfig {
        MinimizeConfig { method: Method::CoordinateDescent, grid_size: 64, f_tol: 1e-6, ..Default::default() }
    }

    #[test]
    fn directions_span_all_levels() {
        let dirs = hierarchical_directions(64);
        assert_eq!(dirs.iter().filter(|d| d.weights.len() == 1).count(), 64);
        // coarsest width is 32: a half hat at the origin, then a hat clipped at the last free knot
        assert_eq!(dirs[0].weights.len(), 32);
        assert_eq!(dirs[1].weights.len(), 63);
        assert!(dirs.iter().all(|d| d.start + d.weights.len() <= 64));
    }

    #[test]
    fn state_quotient_matches_functionals() {
        let params = desk();
        let model = RadialMeasure::euclidean(4).unwrap();
        let cfg = small_cfg();
        let knots = grid_knots(&cfg);
        let values = initial_values(&GridInit::TruncatedExtremal { lambda: 1.0 }, &params, &knots).unwrap();
        let rule = SegmentRule::new(&params, &knots, SEGMENT_ORDER).unwrap();
        let state = GridState::new(rule, &params, unit_sphere_area(4), values.clone());
        let profile = RadialProfile::Sampled(SampledProfile::new(knots, values, true).unwrap());
        let direct = quotient_of(&model, &params, &profile, &QuadConfig::default()).unwrap();
        assert!(((state.current() - direct) / direct).abs() < 1e-13);
    }

    #[test]
    fn history_never_increases() {
        let params = desk();
        let model = RadialMeasure::euclidean(4).unwrap();
        let res = minimize_grid(&model, &params, &small_cfg(), &GridInit::Random { seed: 3 }).unwrap();
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(res.seed, Some(3));
    }

    #[test]
    fn rejects_wrong_method() {
        let params = desk();
        let model = RadialMeasure::euclidean(4).unwrap();
        let cfg = MinimizeConfig { method: Method::Simplex, ..small_cfg() };
        assert!(minimize_grid(&model, &params, &cfg, &GridInit::Random { seed: 0 }).is_err());
    }
}
