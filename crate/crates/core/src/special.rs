//! Gamma function and unit-ball volumes.

use std::f64::consts::PI;

use crate::error::{CknError, Result};

// Lanczos approximation, g = 607/128 with 15 terms (Godfrey's coefficients).
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_COEFFS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_76e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_64e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];

/// Largest argument whose Gamma value is representable as `f64`.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

/// Gamma function for positive arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(CknError::DomainError(format!("gamma requires x > 0, got {x}")));
    }
    if x > GAMMA_MAX_ARG {
        return Err(CknError::Overflow(x));
    }
    if x.fract() == 0.0 {
        // (x-1)! by direct multiplication: exact up to 22!, then within a few ulps.
        return Ok((2..x as u32).fold(1.0, |acc, k| acc * k as f64));
    }
    if x < 0.5 {
        return Ok(lanczos(x + 1.0) / x);
    }
    let value = lanczos(x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CknError::Overflow(x))
    }
}

fn lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // t^(z+1/2) split in two halves so neither factor overflows near the top of the range.
    let half = t.powf((z + 0.5) / 2.0);
    (2.0 * PI).sqrt() * half * (-t).exp() * half * series
}

/// Volume of the Euclidean unit ball in dimension `n`, `pi^(n/2) / Gamma(n/2 + 1)`.
///
/// Evaluated through `omega_n = (2 pi / n) omega_{n-2}`, which stays finite
/// for every dimension.
pub fn unit_ball_volume(n: u32) -> f64 {
    let mut omega = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        omega *= 2.0 * PI / k as f64;
        k += 2;
    }
    omega
}

/// Area of the unit sphere `n omega_n`.
pub fn unit_sphere_area(n: u32) -> f64 {
    n as f64 * unit_ball_volume(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn integer_arguments_are_factorials() {
        let mut factorial = 1.0_f64;
        for k in 1..=170u32 {
            let g = gamma_fn(k as f64).unwrap();
            assert!(rel(g, factorial) < 1e-12, "Gamma({k}) = {g}, expected {factorial}");
            factorial *= k as f64;
        }
        assert_eq!(gamma_fn(5.0).unwrap(), 24.0);
        assert!(rel(gamma_fn(1.0).unwrap(), 1.0) < 1e-15);
    }

    #[test]
    fn half_integer_values() {
        assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert!(rel(gamma_fn(1.5).unwrap(), PI.sqrt() / 2.0) < 1e-14);
        assert!(rel(gamma_fn(2.5).unwrap(), 0.75 * PI.sqrt()) < 1e-14);
    }

    #[test]
    fn recurrence_on_half_integer_grid() {
        for k in 0..=20 {
            let x = 0.5 + k as f64;
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert!(rel(lhs, rhs) < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn small_arguments_and_reflection() {
        // Gamma(x) Gamma(1-x) = pi / sin(pi x)
        for &x in &[1e-6, 0.01, 0.1, 0.25, 0.4, 0.49] {
            let product = gamma_fn(x).unwrap() * gamma_fn(1.0 - x).unwrap();
            assert!(rel(product, PI / (PI * x).sin()) < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn domain_and_overflow() {
        assert!(matches!(gamma_fn(0.0), Err(CknError::DomainError(_))));
        assert!(matches!(gamma_fn(-1.5), Err(CknError::DomainError(_))));
        assert!(matches!(gamma_fn(f64::NAN), Err(CknError::DomainError(_))));
        assert!(matches!(gamma_fn(172.0), Err(CknError::Overflow(_))));
        assert!(gamma_fn(171.5).unwrap().is_finite());
    }

    #[test]
    fn unit_ball_volumes() {
        assert!(rel(unit_ball_volume(1), 2.0) < 1e-15);
        assert!(rel(unit_ball_volume(2), PI) < 1e-15);
        assert!(rel(unit_ball_volume(3), 4.0 * PI / 3.0) < 1e-15);
        for n in 1..=40u32 {
            let via_gamma = PI.powf(n as f64 / 2.0) / gamma_fn(n as f64 / 2.0 + 1.0).unwrap();
            assert!(rel(unit_ball_volume(n), via_gamma) < 1e-13, "n = {n}");
        }
    }
}
