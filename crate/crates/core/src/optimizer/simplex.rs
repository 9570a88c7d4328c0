//! Nelder-Mead with restarts, and golden-section search.

/// Outcome of a derivative-free search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after every iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexSettings {
    pub max_iters: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    pub initial_step: f64,
    pub restarts: usize,
}

/// Minimizes `f` from `x0`. After the simplex collapses it is rebuilt around
/// the best vertex with a halved step, `restarts` times; the run counts as
/// converged when the final restart no longer improves by more than `f_tol`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], settings: &SimplexSettings) -> SearchResult {
    let mut best_x = x0.to_vec();
    let mut best_f = f(x0);
    let mut history = vec![best_f];
    let mut iterations = 0;
    let mut step = settings.initial_step;
    let mut converged = false;
    for _ in 0..=settings.restarts {
        let before = best_f;
        let (x, fx, used, collapsed) =
            single_run(&mut f, &best_x, best_f, step, settings, settings.max_iters - iterations, &mut history);
        iterations += used;
        if fx < best_f {
            best_x = x;
            best_f = fx;
        }
        converged = collapsed && (before - best_f).abs() <= settings.f_tol * best_f.abs().max(f64::MIN_POSITIVE);
        if iterations >= settings.max_iters {
            break;
        }
        step *= 0.5;
    }
    SearchResult { x: best_x, fx: best_f, iterations, converged, history }
}

fn single_run<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    start: &[f64],
    f_start: f64,
    step: f64,
    settings: &SimplexSettings,
    budget: usize,
    history: &mut Vec<f64>,
) -> (Vec<f64>, f64, usize, bool) {
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), f_start));
    for i in 0..dim {
        let mut x = start.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut used = 0;
    while used < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (f_best, f_worst) = (simplex[0].1, simplex[dim].1);
        let f_spread = (f_worst - f_best).abs();
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= settings.f_tol * f_best.abs().max(f64::MIN_POSITIVE) || x_spread <= settings.x_tol {
            return (simplex[0].0.clone(), f_best, used, true);
        }
        used += 1;

        let centroid: Vec<f64> =
            (0..dim).map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64).collect();
        let along =
            |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[dim].0).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(1.0);
        let fr = f(&xr);
        if fr < f_best {
            let xe = along(2.0);
            let fe = f(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let t = if fr < f_worst { 0.5 } else { -0.5 };
            let xc = along(t);
            let fc = f(&xc);
            if fc < fr.min(f_worst) {
                simplex[dim] = (xc, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = anchor.iter().zip(&vertex.0).map(|(a, v)| a + 0.5 * (v - a)).collect();
                    let fx = f(&x);
                    *vertex = (x, fx);
                }
            }
        }
        let current = simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let last = *history.last().unwrap();
        history.push(current.min(last));
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0.clone(), simplex[0].1, used, false)
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    x_tol: f64,
    max_iters: usize,
) -> SearchResult {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut history = vec![fc.min(fd)];
    let mut iterations = 0;
    while (b - a).abs() > x_tol && iterations < max_iters {
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        let last = *history.last().unwrap();
        history.push(fc.min(fd).min(last));
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    SearchResult { x: vec![x], fx, iterations, converged: (b - a).abs() <= x_tol, history }
}
