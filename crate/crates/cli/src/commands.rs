use std::io::Write;
use std::path::{Path, PathBuf};

use ckn_core::comparison::{default_lambda_grid, growth_sandwich, ComparisonCurve, SandwichReport};
use ckn_core::constant::{copt_closed_form, copt_quadrature, ClosedForm, CoptQuadrature};
use ckn_core::functionals::quotient_of;
use ckn_core::optimizer::grid::best_run;
use ckn_core::optimizer::{minimize_family, minimize_grid_seeds, volume_radii, Method, MinimizeConfig, MinimizeResult};
use ckn_core::profile::LogGaussianBump;
use ckn_core::{CknError, CknParams, QuadConfig, RadialMeasure, RadialProfile, Result};
use serde::Serialize;

use crate::output::{write_atomic, write_json, Header};
use crate::spec::{parse_model, resolve_params, RunSpec};
use crate::{Cli, Command, MethodArg, MinimizeArgs};

struct Context {
    spec: RunSpec,
    params: CknParams,
    model: Option<RadialMeasure>,
}

impl Context {
    fn header(&self) -> Header<'_> {
        Header { spec: &self.spec, params: &self.params }
    }

    fn out_dir(&self) -> PathBuf {
        self.spec.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    fn model(&self) -> Result<RadialMeasure> {
        match &self.model {
            Some(m) => Ok(m.clone()),
            None => RadialMeasure::euclidean(self.params.n),
        }
    }

    fn quad(&self) -> &QuadConfig {
        &self.spec.quad
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Params => "params",
        Command::Copt { .. } => "copt",
        Command::ExtremalCheck { .. } => "extremal-check",
        Command::Curves { .. } => "curves",
        Command::VolumeBound { .. } => "volume-bound",
        Command::Audit => "audit",
        Command::Minimize(_) => "minimize",
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let raw = resolve_params(c.params_file.as_deref(), c.n, c.p.as_deref(), c.q.as_deref(), c.mu.as_deref())?;
    let params = CknParams::derive(&raw)?;
    let quad = QuadConfig::with_rel_tol(c.rel_tol);
    quad.check()?;
    let model = c.model.as_deref().map(|m| parse_model(m, &params)).transpose()?;
    let mut spec = RunSpec::new(command_name(&cli.command), raw, quad);
    spec.params_file = c.params_file.clone();
    spec.model_spec = c.model.clone();
    spec.out_dir = c.out_dir.clone();
    if let Some(m) = &model {
        for w in m.warnings() {
            eprintln!("warning: {w}");
        }
    }
    let mut ctx = Context { spec, params, model };
    match cli.command {
        Command::Params => params_cmd(&ctx),
        Command::Copt { delta } => {
            let delta = delta.unwrap_or(ctx.params.float().nu);
            ctx.spec.delta = Some(delta);
            copt_cmd(&ctx, delta)
        }
        Command::ExtremalCheck { lambdas, perturbations, amplitude } => {
            ctx.spec.lambdas = lambdas.clone();
            ctx.spec.seeds = (0..perturbations).collect();
            extremal_check_cmd(&ctx, &lambdas, amplitude)
        }
        Command::Curves { c_multiple, lambdas } => {
            let lambdas = lambdas.unwrap_or_else(default_lambda_grid);
            ctx.spec.c_multiple = Some(c_multiple);
            ctx.spec.lambdas = lambdas.clone();
            curves_cmd(&ctx, c_multiple, &lambdas)
        }
        Command::VolumeBound { c_multiple, c0, rhos } => {
            ctx.spec.c_multiple = Some(c_multiple);
            ctx.spec.c0 = Some(c0);
            ctx.spec.rhos = rhos.clone();
            volume_bound_cmd(&ctx, c_multiple, c0, &rhos)
        }
        Command::Audit => {
            ctx.spec.rhos = volume_radii();
            audit_cmd(&ctx)
        }
        Command::Minimize(args) => {
            let cfg = minimize_config(&args);
            cfg.check()?;
            ctx.spec.minimize = Some(cfg);
            if cfg.method == Method::CoordinateDescent {
                ctx.spec.seeds = args.seeds.clone();
            }
            minimize_cmd(&ctx, &cfg, &args.seeds)
        }
    }
}

fn minimize_config(args: &MinimizeArgs) -> MinimizeConfig {
    let method = match args.method {
        MethodArg::Simplex => Method::Simplex,
        MethodArg::Golden => Method::GoldenSection,
        MethodArg::CoordinateDescent => Method::CoordinateDescent,
    };
    let default_f_tol = if method == Method::CoordinateDescent { 1e-6 } else { MinimizeConfig::default().f_tol };
    MinimizeConfig {
        method,
        max_iters: args.max_iters,
        x_tol: args.x_tol,
        f_tol: args.f_tol.unwrap_or(default_f_tol),
        grid_size: args.grid_size,
        support_radius: args.support_radius,
        restarts: args.restarts,
    }
}

/// `println!` that ignores a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn report(path: &Path) {
    say!("wrote {}", path.display());
}

fn params_cmd(ctx: &Context) -> Result<()> {
    say!("{}", serde_json::to_string_pretty(&ctx.params)?);
    if ctx.spec.out_dir.is_some() {
        let path = write_json(&ctx.out_dir(), "params.json", &ctx.header(), &ctx.params)?;
        report(&path);
    }
    Ok(())
}

#[derive(Serialize)]
struct CoptReport {
    copt_quadrature: CoptQuadrature,
    /// Experimental; depends on the chosen delta.
    copt_closed_form: ClosedForm,
    /// closed form / quadrature.
    ratio: f64,
}

fn copt_cmd(ctx: &Context, delta: f64) -> Result<()> {
    let quadrature = copt_quadrature(&ctx.params, ctx.quad())?;
    let closed = copt_closed_form(&ctx.params, delta)?;
    let body =
        CoptReport { copt_quadrature: quadrature, copt_closed_form: closed, ratio: closed.value / quadrature.copt };
    say!("copt = {:.17e} (closed form / quadrature = {:.17e})", quadrature.copt, body.ratio);
    report(&write_json(&ctx.out_dir(), "copt.json", &ctx.header(), &body)?);
    Ok(())
}

#[derive(Serialize)]
struct ExtremalRow {
    lambda: f64,
    quotient: f64,
    /// `(quotient - 1/C_opt) * C_opt`.
    rel_gap: f64,
}

#[derive(Serialize)]
struct PerturbationRow {
    seed: u64,
    bump: LogGaussianBump,
    quotient: f64,
    /// Perturbed minus unperturbed quotient at lambda = 1.
    change: f64,
}

#[derive(Serialize)]
struct ExtremalCheck {
    copt: f64,
    inverse_copt: f64,
    rows: Vec<ExtremalRow>,
    max_abs_rel_gap: f64,
    perturbations: Vec<PerturbationRow>,
    min_change: f64,
}

fn extremal_check_cmd(ctx: &Context, lambdas: &[f64], amplitude: f64) -> Result<()> {
    if !amplitude.is_finite() {
        return Err(CknError::InvalidInput(format!("amplitude must be finite, got {amplitude}")));
    }
    let model = ctx.model()?;
    let copt = copt_quadrature(&ctx.params, ctx.quad())?.copt;
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let quotient = quotient_of(&model, &ctx.params, &RadialProfile::extremal(&ctx.params, lambda), ctx.quad())?;
            Ok(ExtremalRow { lambda, quotient, rel_gap: quotient * copt - 1.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    let base = quotient_of(&model, &ctx.params, &RadialProfile::extremal(&ctx.params, 1.0), ctx.quad())?;
    let perturbations = ctx
        .spec
        .seeds
        .iter()
        .map(|&seed| {
            let bump = LogGaussianBump::seeded(seed, amplitude);
            let u = RadialProfile::extremal(&ctx.params, 1.0).bumped(bump);
            let quotient = quotient_of(&model, &ctx.params, &u, ctx.quad())?;
            Ok(PerturbationRow { seed, bump, quotient, change: quotient - base })
        })
        .collect::<Result<Vec<_>>>()?;
    let body = ExtremalCheck {
        copt,
        inverse_copt: 1.0 / copt,
        max_abs_rel_gap: rows.iter().map(|r| r.rel_gap.abs()).fold(0.0, f64::max),
        min_change: perturbations.iter().map(|r| r.change).fold(f64::INFINITY, f64::min),
        rows,
        perturbations,
    };
    say!(
        "max |quotient C_opt - 1| = {:.3e}, smallest perturbation change = {:.3e}",
        body.max_abs_rel_gap,
        body.min_change
    );
    report(&write_json(&ctx.out_dir(), "extremal_check.json", &ctx.header(), &body)?);
    Ok(())
}

fn curves_cmd(ctx: &Context, c_multiple: f64, lambdas: &[f64]) -> Result<()> {
    let curve = ComparisonCurve::with_multiple(&ctx.model()?, &ctx.params, c_multiple, lambdas, ctx.quad())?;
    let mut comments = ctx.header().comments();
    comments.push(format!("constants: {}", serde_json::to_string(&curve.constants)?));
    let path = write_atomic(&ctx.out_dir(), "curves.csv", |out| curve.write_csv(out, &comments))?;
    report(&path);
    Ok(())
}

#[derive(Serialize)]
struct VolumeBound {
    copt: f64,
    constant: f64,
    c0: f64,
    verdict: &'static str,
    report: SandwichReport,
}

fn volume_bound_cmd(ctx: &Context, c_multiple: f64, c0: f64, rhos: &[f64]) -> Result<()> {
    let copt = copt_quadrature(&ctx.params, ctx.quad())?.copt;
    let constant = c_multiple * copt;
    let report_ = growth_sandwich(&ctx.model()?, &ctx.params, copt, constant, c0, rhos)?;
    let verdict = if report_.pass { "PASS" } else { "FAIL" };
    let body = VolumeBound { copt, constant, c0, verdict, report: report_ };
    println!("verdict: {verdict}");
    report(&write_json(&ctx.out_dir(), "volume_bound.json", &ctx.header(), &body)?);
    Ok(())
}

#[derive(Serialize)]
struct Audit {
    doubling_constant: f64,
    /// Absent when the volume ratio has no limit at the origin.
    origin_density: Option<f64>,
    min_volume_ratio: f64,
    copt: f64,
    /// `C_opt * min_volume_ratio^(-a/n)`.
    implied_best_constant: f64,
    warnings: Vec<String>,
}

fn audit_cmd(ctx: &Context) -> Result<()> {
    let model = ctx.model()?;
    let radii = &ctx.spec.rhos;
    let mut warnings = model.warnings();
    let origin_density = match model.origin_density() {
        Ok(d) => Some(d),
        Err(e @ CknError::NoLimit { .. }) => {
            warnings.push(e.to_string());
            None
        }
        Err(e) => return Err(e),
    };
    let doubling_constant = model.doubling_constant(radii)?;
    let min_volume_ratio = model.min_volume_ratio(radii)?;
    if let Some(d) = origin_density {
        if (d - 1.0).abs() > 1e-9 {
            warnings.push(format!("origin density {d} is not 1; the model is not normalized"));
        }
    }
    let copt = copt_quadrature(&ctx.params, ctx.quad())?.copt;
    let e = ctx.params.float();
    let body = Audit {
        doubling_constant,
        origin_density,
        min_volume_ratio,
        copt,
        implied_best_constant: copt * min_volume_ratio.powf(-e.a / e.n),
        warnings,
    };
    say!("doubling constant {:.6e}, implied best constant {:.17e}", doubling_constant, body.implied_best_constant);
    report(&write_json(&ctx.out_dir(), "audit.json", &ctx.header(), &body)?);
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    seed: u64,
    best_quotient: Option<f64>,
    iterations: Option<usize>,
    error: Option<String>,
}

#[derive(Serialize)]
struct MinimizeReport {
    copt: f64,
    /// `best_quotient * C_opt - 1`; never below zero on Euclidean space up to discretization.
    rel_gap_to_inverse_copt: f64,
    best: MinimizeResult,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    runs: Vec<RunSummary>,
}

fn minimize_cmd(ctx: &Context, cfg: &MinimizeConfig, seeds: &[u64]) -> Result<()> {
    let model = ctx.model()?;
    let copt = copt_quadrature(&ctx.params, ctx.quad())?.copt;
    let (best, runs) = if cfg.method == Method::CoordinateDescent {
        if seeds.is_empty() {
            return Err(CknError::InvalidInput("coordinate descent needs at least one seed".into()));
        }
        let results = minimize_grid_seeds(&model, &ctx.params, cfg, seeds);
        let runs: Vec<RunSummary> = seeds
            .iter()
            .zip(&results)
            .map(|(&seed, r)| match r {
                Ok(r) => RunSummary {
                    seed,
                    best_quotient: Some(r.best_quotient),
                    iterations: Some(r.iterations),
                    error: None,
                },
                Err(e) => RunSummary { seed, best_quotient: None, iterations: None, error: Some(e.to_string()) },
            })
            .collect();
        let ok: Vec<MinimizeResult> = results.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
        let Some(best) = best_run(&ok).cloned() else {
            // every seed failed; surface the first failure
            return Err(results.into_iter().find_map(|r| r.err()).expect("at least one seed"));
        };
        (best, runs)
    } else {
        (minimize_family(&model, &ctx.params, cfg, ctx.quad())?, Vec::new())
    };
    if let RadialProfile::Sampled(profile) = &best.best_profile {
        let comments = ctx.header().comments();
        report(&write_atomic(&ctx.out_dir(), "best_profile.csv", |out| profile.write_csv(out, &comments))?);
    }
    let body = MinimizeReport { copt, rel_gap_to_inverse_copt: best.best_quotient * copt - 1.0, best, runs };
    say!("best quotient {:.17e} (gap to 1/C_opt {:.3e})", body.best.best_quotient, body.rel_gap_to_inverse_copt);
    report(&write_json(&ctx.out_dir(), "minimize.json", &ctx.header(), &body)?);
    Ok(())
}
