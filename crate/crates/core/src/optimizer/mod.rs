//! Minimization of the CKN quotient over radial profiles.

pub mod grid;
pub mod simplex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constant::copt_quadrature;
use crate::error::{CknError, Result};
use crate::functionals::{check_dimension, quotient_of};
use crate::model::{log_grid, RadialMeasure};
use crate::params::CknParams;
use crate::profile::RadialProfile;
use crate::quadrature::QuadConfig;

pub use grid::{grid_knots, minimize_grid, minimize_grid_seeds, GridInit};
use simplex::{golden_section, nelder_mead, SimplexSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Simplex,
    GoldenSection,
    CoordinateDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeConfig {
    pub method: Method,
    pub max_iters: usize,
    pub x_tol: f64,
    /// Relative improvement below which a sweep (or simplex) counts as converged.
    pub f_tol: f64,
    pub grid_size: usize,
    pub support_radius: f64,
    pub restarts: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            method: Method::Simplex,
            max_iters: 400,
            x_tol: 1e-10,
            f_tol: 1e-9,
            grid_size: 256,
            support_radius: 50.0,
            restarts: 3,
        }
    }
}

impl MinimizeConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.x_tol > 0.0) || !(self.f_tol > 0.0) {
            return Err(CknError::InvalidInput("minimizer tolerances must be positive".into()));
        }
        if self.grid_size < 16 {
            return Err(CknError::InvalidInput(format!("grid_size must be at least 16, got {}", self.grid_size)));
        }
        if !(self.support_radius > 0.0) || !self.support_radius.is_finite() {
            return Err(CknError::InvalidInput("support_radius must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(CknError::InvalidInput("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub amplitude: f64,
    pub b: f64,
    pub quotient: f64,
}

/// Quotient values of the extremal family at fixed `(A, B)` probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessProbe {
    pub rows: Vec<ProbeRow>,
    /// `(max - min) / min` over the rows.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub best_quotient: f64,
    pub best_profile: RadialProfile,
    pub iterations: usize,
    pub converged: bool,
    /// Best quotient after each iteration; never increases.
    pub history: Vec<f64>,
    pub seed: Option<u64>,
    pub flatness: Option<FlatnessProbe>,
}

pub const PROBE_AMPLITUDES: [f64; 2] = [1.0, 3.0];
pub const PROBE_SCALES: [f64; 3] = [0.1, 1.0, 10.0];

pub fn flatness_probe(model: &RadialMeasure, params: &CknParams, quad: &QuadConfig) -> Result<FlatnessProbe> {
    let pairs: Vec<(f64, f64)> =
        PROBE_AMPLITUDES.iter().flat_map(|&a| PROBE_SCALES.iter().map(move |&b| (a, b))).collect();
    let rows = pairs
        .par_iter()
        .map(|&(amplitude, b)| {
            let quotient = quotient_of(model, params, &RadialProfile::family(params, amplitude, b), quad)?;
            Ok(ProbeRow { amplitude, b, quotient })
        })
        .collect::<Result<Vec<_>>>()?;
    let lo = rows.iter().map(|r| r.quotient).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.quotient).fold(f64::NEG_INFINITY, f64::max);
    Ok(FlatnessProbe { rows, spread: (hi - lo) / lo })
}

/// Minimizes over `A (1 + B t^kappa)^(-(p-1)/(q-p))` in `(ln A, ln B)`.
///
/// On models with constant density the quotient does not depend on `(A, B)`;
/// the flatness probe reports how closely that holds numerically.
pub fn minimize_family(
    model: &RadialMeasure,
    params: &CknParams,
    cfg: &MinimizeConfig,
    quad: &QuadConfig,
) -> Result<MinimizeResult> {
    cfg.check()?;
    check_dimension(model, params)?;
    let mut failure: Option<CknError> = None;
    let mut objective = |ln_a: f64, ln_b: f64| -> f64 {
        match quotient_of(model, params, &RadialProfile::family(params, ln_a.exp(), ln_b.exp()), quad) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let search = match cfg.method {
        Method::GoldenSection => {
            let mut res =
                golden_section(|x| objective(0.0, x), -(1e4f64.ln()), 1e4f64.ln(), cfg.x_tol.max(1e-8), cfg.max_iters);
            res.x = vec![0.0, res.x[0]];
            res
        }
        _ => {
            let settings = SimplexSettings {
                max_iters: cfg.max_iters,
                x_tol: cfg.x_tol,
                f_tol: cfg.f_tol,
                initial_step: 1.0,
                restarts: cfg.restarts,
            };
            nelder_mead(|x| objective(x[0], x[1]), &[0.0, 0.0], &settings)
        }
    };
    if let Some(e) = failure {
        return Err(e);
    }
    if !search.converged {
        return Err(CknError::NonConvergence { iterations: search.iterations });
    }
    let flatness = flatness_probe(model, params, quad)?;
    Ok(MinimizeResult {
        best_quotient: search.fx,
        best_profile: RadialProfile::family(params, search.x[0].exp(), search.x[1].exp()),
        iterations: search.iterations,
        converged: true,
        history: search.history,
        seed: None,
        flatness: Some(flatness),
    })
}

/// Radii on which the volume route takes its infimum.
pub fn volume_radii() -> Vec<f64> {
    log_grid(1e-4, 1e4, 81)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestConstant {
    /// `1 / min quotient` over the extremal family on the model.
    pub quotient_route: f64,
    /// `C_opt (inf_rho m(B_rho)/(omega_n rho^n))^(-a/n)`.
    pub volume_route: f64,
    pub copt: f64,
    pub min_volume_ratio: f64,
    /// `|quotient_route - volume_route| / volume_route`.
    pub disagreement: f64,
}

/// Best constant of the CKN inequality on `model`, by two routes.
pub fn best_constant(
    model: &RadialMeasure,
    params: &CknParams,
    cfg: &MinimizeConfig,
    quad: &QuadConfig,
) -> Result<BestConstant> {
    let family = minimize_family(model, params, cfg, quad)?;
    let copt = copt_quadrature(params, quad)?.copt;
    let ratio = model.min_volume_ratio(&volume_radii())?;
    let e = params.float();
    let quotient_route = 1.0 / family.best_quotient;
    let volume_route = copt * ratio.powf(-e.a / e.n);
    Ok(BestConstant {
        quotient_route,
        volume_route,
        copt,
        min_volume_ratio: ratio,
        disagreement: ((quotient_route - volume_route) / volume_route).abs(),
    })
}
