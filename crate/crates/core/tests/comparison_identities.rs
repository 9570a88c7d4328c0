use ckn_core::comparison::*;
use ckn_core::constant::copt_quadrature;
use ckn_core::functionals::weighted_norms;
use ckn_core::model::log_grid;
use ckn_core::quadrature::integrate_half_line;
use ckn_core::special::unit_ball_volume;
use ckn_core::*;

fn desk() -> CknParams {
    CknParams::derive(&RawParams::parse(4, "2", "2.5", "1").unwrap()).unwrap()
}

fn quad() -> QuadConfig {
    QuadConfig::default()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn copt() -> f64 {
    copt_quadrature(&desk(), &quad()).unwrap().copt
}

fn models() -> Vec<RadialMeasure> {
    vec![
        RadialMeasure::euclidean(4).unwrap(),
        RadialMeasure::cone(4, 0.5).unwrap(),
        RadialMeasure::envelope_ricci(4, 0.3).unwrap(),
    ]
}

#[test]
fn f_is_linear_in_the_measure() {
    let params = desk();
    for lambda in [0.1, 1.0, 10.0] {
        let g = g_of(&params, lambda, &quad()).unwrap();
        let euclid = f_of(&RadialMeasure::euclidean(4).unwrap(), &params, lambda, &quad()).unwrap();
        assert!(rel(euclid, g) < 1e-8);
        for c in [0.25, 0.5, 0.9] {
            let f = f_of(&RadialMeasure::cone(4, c).unwrap(), &params, lambda, &quad()).unwrap();
            assert!(rel(f, c * g) < 1e-8, "c = {c}");
        }
        for b0 in [0.1, 0.5] {
            let f = f_of(&RadialMeasure::envelope_ricci(4, b0).unwrap(), &params, lambda, &quad()).unwrap();
            assert!(rel(f, (3.0 * b0).exp() * g) < 1e-8, "b0 = {b0}");
        }
    }
}

#[test]
fn kernel_form_matches_radial_integral() {
    let params = desk();
    let table = ckn_core::model::DensityTable::new(vec![0.5, 1.0, 3.0], vec![1.0, 1.5, 0.8]).unwrap();
    let mut all = models();
    all.push(RadialMeasure::tabulated(4, table).unwrap());
    for model in &all {
        for lambda in [0.2, 1.0, 5.0] {
            let kernel = f_of(model, &params, lambda, &quad()).unwrap();
            let direct = f_direct(model, &params, lambda, &quad()).unwrap();
            assert!(rel(kernel, direct) < 1e-8, "{:?} at {lambda}: {kernel} vs {direct}", model.kind());
        }
    }
}

#[test]
fn derivative_matches_central_differences() {
    let params = desk();
    for model in models() {
        for lambda in [0.5, 2.0] {
            let h = 1e-4 * lambda;
            let fd = (f_of(&model, &params, lambda + h, &quad()).unwrap()
                - f_of(&model, &params, lambda - h, &quad()).unwrap())
                / (2.0 * h);
            let exact = f_prime(&model, &params, lambda, &quad()).unwrap();
            assert!(exact < 0.0);
            assert!(rel(exact, fd) < 1e-5, "{exact} vs {fd}");
        }
    }
}

#[test]
fn derivative_is_minus_the_r_norm_of_the_extremal() {
    let params = desk();
    let model = RadialMeasure::euclidean(4).unwrap();
    let norms = weighted_norms(&model, &params, &RadialProfile::extremal(&params, 1.0), &quad()).unwrap();
    let fp = f_prime(&model, &params, 1.0, &quad()).unwrap();
    assert!(rel(-fp, norms.t_r) < 1e-10);
}

#[test]
fn g_follows_its_power_law() {
    let params = desk();
    let g1 = g_of(&params, 1.0, &quad()).unwrap();
    for lambda in default_lambda_grid() {
        let g = g_of(&params, lambda, &quad()).unwrap();
        assert!(rel(g, lambda.powi(-3) * g1) < 1e-8, "lambda = {lambda}");
    }
    assert!(rel(g_of(&params, 10.0, &quad()).unwrap() / g1, 1e-3) < 1e-8);
    let fast = GPowerLaw::new(&params, &quad()).unwrap();
    assert!(rel(fast.eval(3.0), g_of(&params, 3.0, &quad()).unwrap()) < 1e-8);
}

#[test]
fn f_decreases_in_lambda() {
    let params = desk();
    for model in models() {
        let values: Vec<f64> =
            log_grid(0.01, 100.0, 9).iter().map(|&l| f_of(&model, &params, l, &quad()).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn psi_moment_recovers_g() {
    let params = desk();
    let omega = unit_ball_volume(4);
    for lambda in [0.3, 1.0, 4.0] {
        // the kernel alone over- and underflows at the far ends where the moment is negligible
        let f = |h: f64| {
            let psi = psi_kernel(&params, lambda, h);
            if h < 1e-100 || psi == 0.0 {
                0.0
            } else {
                psi * omega * h.powi(4)
            }
        };
        let moment = integrate_half_line(&f, &[lambda], None, &quad()).unwrap().value;
        let g = g_of(&params, lambda, &quad()).unwrap();
        assert!(rel(moment, mass_factor(&params) * g) < 1e-8);
    }
}

#[test]
fn sharp_equation_residuals_are_small_across_the_grid() {
    let params = desk();
    let copt = copt();
    for lambda in default_lambda_grid() {
        assert!(ode_residual_g(&params, copt, lambda, &quad()).unwrap().abs() < 1e-6);
        for multiple in [1.0, 1.5] {
            assert!(h0_residual(&params, copt, multiple * copt, lambda, &quad()).unwrap().abs() < 1e-6);
        }
    }
}

#[test]
fn coefficient_doubles_by_the_expected_power() {
    let params = desk();
    let e = params.float();
    let ratio = gamma_coefficient(&params, 2.0 * copt()) / gamma_coefficient(&params, copt());
    assert!(rel(ratio, 2f64.powf(e.p / e.a)) < 1e-14);
}

#[test]
fn h0_scales_with_the_constant() {
    let params = desk();
    let copt = copt();
    let g = g_of(&params, 1.0, &quad()).unwrap();
    assert!(rel(h0_of(&params, copt, copt, 1.0, &quad()).unwrap(), g) < 1e-14);
    let halving = 2f64.powf(params.float().a / 4.0) * copt;
    assert!(rel(h0_of(&params, copt, halving, 1.0, &quad()).unwrap(), g / 2.0) < 1e-12);
}

#[test]
fn slack_vanishes_exactly_at_the_sharp_constant() {
    let params = desk();
    let copt = copt();
    let euclid = RadialMeasure::euclidean(4).unwrap();
    for lambda in [0.1, 1.0, 10.0] {
        assert!(ineq_slack_f(&euclid, &params, copt, lambda, &quad()).unwrap().abs() < 1e-6);
        assert!(ineq_slack_f(&euclid, &params, 2.0 * copt, lambda, &quad()).unwrap() > 0.0);
        for c in [0.25, 0.5, 0.9] {
            let cone = RadialMeasure::cone(4, c).unwrap();
            let sharp = c.powf(-params.float().a / 4.0) * copt;
            assert!(ineq_slack_f(&cone, &params, sharp, lambda, &quad()).unwrap().abs() < 1e-6);
        }
    }
}

#[test]
fn comparison_lemma_holds_at_sharp_constants() {
    let params = desk();
    let copt = copt();
    let a = params.float().a;
    let cases = [
        (RadialMeasure::euclidean(4).unwrap(), copt),
        (RadialMeasure::cone(4, 0.5).unwrap(), 0.5f64.powf(-a / 4.0) * copt),
    ];
    for (model, constant) in cases {
        let curve = ComparisonCurve::compute(&model, &params, copt, constant, &default_lambda_grid(), &quad()).unwrap();
        for i in 0..curve.lambda.len() {
            assert!((curve.f[i] - curve.h0[i]) / curve.f[i] >= -1e-8);
            assert!(curve.f[i] > 0.0 && curve.g[i] > 0.0 && curve.h0[i] > 0.0 && curve.f_prime[i] < 0.0);
        }
    }
}

#[test]
fn moment_bound_and_obstruction_decay() {
    let params = desk();
    let moment = truncated_moment(&params, 1.0, 1.0, &quad()).unwrap();
    assert!(moment <= truncated_moment_bound(&params, 1.0, 1.0));
    let values: Vec<f64> = [1.0, 1e2, 1e4, 1e6].iter().map(|&l| obstruction_rhs(&params, l, 1.0)).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
    assert!(values[3] < 1e-6 * values[0]);
}

#[test]
fn volume_bound_examples() {
    let params = desk();
    let copt = copt();
    let omega = unit_ball_volume(4);
    assert!(rel(volume_lower_bound(&params, copt, copt, 1.0, 1.5).unwrap(), omega * 1.5f64.powi(4)) < 1e-14);
    // n/a = 9
    let halved = volume_lower_bound(&params, copt, 2f64.powf(1.0 / 9.0) * copt, 1.0, 1.0).unwrap();
    assert!(rel(halved, omega / 2.0) < 1e-13);
    let one = volume_lower_bound(&params, copt, 1.2 * copt, 1.0, 1.0).unwrap();
    let two = volume_lower_bound(&params, copt, 1.2 * copt, 1.0, 2.0).unwrap();
    assert!(rel(two, 16.0 * one) < 1e-14);
}

#[test]
fn sandwich_verdicts() {
    let params = desk();
    let copt = copt();
    let rhos = [0.5, 1.0, 2.0, 10.0];
    let euclid = growth_sandwich(&RadialMeasure::euclidean(4).unwrap(), &params, copt, copt, 1.0, &rhos).unwrap();
    assert!(euclid.pass);
    for row in &euclid.rows {
        assert!(row.lower_slack.abs() < 1e-10 && row.upper_slack.abs() < 1e-10);
    }
    let cone = RadialMeasure::cone(4, 0.5).unwrap();
    let sharp = 0.5f64.powf(-params.float().a / 4.0) * copt;
    let report = growth_sandwich(&cone, &params, copt, sharp, 1.0, &rhos).unwrap();
    assert!(report.pass);
    assert!(report.rows.iter().all(|r| r.lower_slack.abs() < 1e-10));
    assert!(!growth_sandwich(&cone, &params, copt, copt, 1.0, &rhos).unwrap().pass);
}
