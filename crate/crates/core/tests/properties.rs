use ckn_core::functionals::{dilate_profile, quotient_of};
use ckn_core::params::rational::{ratio, to_f64};
use ckn_core::params::{validate, Rational};
use ckn_core::profile::{LogGaussianBump, SampledProfile};
use ckn_core::quadrature::integrate_half_line;
use ckn_core::special::gamma_fn;
use ckn_core::*;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn desk() -> CknParams {
    CknParams::derive(&RawParams::parse(4, "2", "2.5", "1").unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Admissible points: p in (1, n), mu in (0, n-p), q between p and the Sobolev limit.
fn admissible() -> impl Strategy<Value = RawParams> {
    (3u32..=7, 11i64..=30, 1i64..=19, 1i64..=19).prop_filter_map("inadmissible", |(n, p10, mu_frac, q_frac)| {
        let p = ratio(p10, 10);
        let n_r = Rational::from_integer(n.into());
        if p >= n_r {
            return None;
        }
        let mu = (&n_r - &p) * ratio(mu_frac, 20);
        // r = p(q-1)/(p-1) < np/(n-p)  <=>  q < 1 + n(p-1)/(n-p)
        let q_max = Rational::one() + &n_r * (&p - Rational::one()) / (&n_r - &p);
        let q = &p + (&q_max - &p) * ratio(q_frac, 20);
        let raw = RawParams::new(n, p, q, mu).ok()?;
        validate(&raw).is_ok().then_some(raw)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derived_identities_hold_exactly(raw in admissible()) {
        let params = CknParams::derive(&raw).unwrap();
        prop_assert!(params.invariant_failures().is_empty(), "{:?}", params.invariant_failures());
        prop_assert!(params.dilation_residual().is_zero());
        let n = Rational::from_integer(params.n.into());
        prop_assert_eq!(params.measure_scaling_exponent(), &params.a / &n);
        prop_assert!(params.a > Rational::zero() && params.a < Rational::one());
    }

    #[test]
    fn extremal_quotient_is_scale_free(raw in admissible(), lambda in 0.05f64..20.0) {
        let params = CknParams::derive(&raw).unwrap();
        let model = RadialMeasure::euclidean(params.n).unwrap();
        let quad = QuadConfig::default();
        let base = quotient_of(&model, &params, &RadialProfile::extremal(&params, 1.0), &quad).unwrap();
        let other = quotient_of(&model, &params, &RadialProfile::extremal(&params, lambda), &quad).unwrap();
        prop_assert!(rel(other, base) < 1e-8, "{} vs {}", other, base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quotient_is_homogeneous_of_degree_zero(c in 0.01f64..100.0, lambda in 0.1f64..10.0) {
        let params = desk();
        let model = RadialMeasure::cone(4, 0.5).unwrap();
        let quad = QuadConfig::default();
        let u = RadialProfile::extremal(&params, lambda);
        let base = quotient_of(&model, &params, &u, &quad).unwrap();
        let scaled = quotient_of(&model, &params, &u.scaled(c).unwrap(), &quad).unwrap();
        prop_assert!(rel(scaled, base) < 1e-10, "{} vs {}", scaled, base);
    }

    #[test]
    fn quotient_is_dilation_invariant(s in 0.1f64..10.0, amplitude in 0.0f64..0.3, centre in 0.2f64..5.0) {
        let params = desk();
        let model = RadialMeasure::euclidean(4).unwrap();
        let quad = QuadConfig::default();
        let u = RadialProfile::extremal(&params, 1.0)
            .bumped(LogGaussianBump { amplitude, center: centre, width: 0.5 });
        let base = quotient_of(&model, &params, &u, &quad).unwrap();
        let dilated = quotient_of(&model, &params, &dilate_profile(&u, s).unwrap(), &quad).unwrap();
        prop_assert!(rel(dilated, base) < 1e-9, "{} vs {}", dilated, base);
    }

    #[test]
    fn sampled_quotient_is_dilation_invariant(s in 0.2f64..5.0, seed in 0u64..1000) {
        let params = desk();
        let model = RadialMeasure::euclidean(4).unwrap();
        let quad = QuadConfig::default();
        let knots: Vec<f64> = (0..=24).map(|i| i as f64 * 0.25).collect();
        let values: Vec<f64> = knots
            .iter()
            .enumerate()
            .map(|(i, t)| if i == 24 { 0.0 } else { (1.0 + t) * (-(t - (seed % 7) as f64 * 0.3).powi(2)).exp() + 0.01 })
            .collect();
        let u = RadialProfile::Sampled(SampledProfile::new(knots, values, true).unwrap());
        let base = quotient_of(&model, &params, &u, &quad).unwrap();
        let dilated = quotient_of(&model, &params, &dilate_profile(&u, s).unwrap(), &quad).unwrap();
        prop_assert!(rel(dilated, base) < 1e-10, "{} vs {}", dilated, base);
    }

    /// `int_0^inf t^(x-1) (1+t)^-(x+y) dt = B(x, y)`; halving the tolerance must not move the answer.
    #[test]
    fn quadrature_matches_beta_integrals(x in 0.3f64..4.0, y in 0.3f64..4.0) {
        let f = |t: f64| if t <= 0.0 { 0.0 } else { ((x - 1.0) * t.ln() - (x + y) * t.ln_1p()).exp() };
        let beta = gamma_fn(x).unwrap() * gamma_fn(y).unwrap() / gamma_fn(x + y).unwrap();
        let fine = integrate_half_line(&f, &[1.0], None, &QuadConfig::with_rel_tol(1e-12)).unwrap().value;
        let coarse = integrate_half_line(&f, &[1.0], None, &QuadConfig::with_rel_tol(2e-12)).unwrap().value;
        prop_assert!(rel(fine, beta) < 1e-9, "{} vs {}", fine, beta);
        prop_assert!(rel(coarse, fine) < 1e-9);
    }
}

#[test]
fn float_mirror_agrees_with_rationals() {
    let params = desk();
    let e = params.float();
    assert_eq!(e.a, to_f64(&params.a));
    assert_eq!(e.g_exp, -3.0);
    assert_eq!(e.mass_exp, 5.0);
}
