//! Radial test functions `u(t)` with derivative access.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CknError, Result};
use crate::format::sci17;
use crate::params::CknParams;

/// `u(t) = amplitude * (lambda + t^kappa)^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalProfile {
    pub amplitude: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub exponent: f64,
}

impl ExtremalProfile {
    /// `ln(lambda + t^kappa)` without overflowing `t^kappa`.
    fn ln_base(&self, t: f64) -> f64 {
        let lk = self.kappa * t.ln();
        if lk > 0.0 {
            lk + (self.lambda * (-lk).exp()).ln_1p()
        } else {
            (self.lambda + lk.exp()).ln()
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.amplitude * self.lambda.powf(-self.exponent);
        }
        self.amplitude * (-self.exponent * self.ln_base(t)).exp()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return if self.kappa == 1.0 {
                -self.amplitude * self.exponent * self.lambda.powf(-self.exponent - 1.0)
            } else {
                0.0
            };
        }
        let log_mag =
            (self.exponent * self.kappa).ln() + (self.kappa - 1.0) * t.ln() - (self.exponent + 1.0) * self.ln_base(t);
        -self.amplitude * log_mag.exp()
    }
}

/// Truncation of the extremal profile: constant on `[0, 1/k]`, unchanged on
/// `[1/k, k]`, ramped linearly to zero on `[k, k+1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub lambda: f64,
    pub k: u32,
    pub kappa: f64,
    pub exponent: f64,
}

impl CutoffProfile {
    fn inner(&self) -> ExtremalProfile {
        ExtremalProfile { amplitude: 1.0, lambda: self.lambda, kappa: self.kappa, exponent: self.exponent }
    }

    fn ramp(&self, t: f64) -> f64 {
        let k = self.k as f64;
        ((k - t).min(0.0) + 1.0).max(0.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        let k = self.k as f64;
        self.ramp(t) * self.inner().value(t.max(1.0 / k))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let k = self.k as f64;
        if t < 1.0 / k || t >= k + 1.0 {
            return 0.0;
        }
        let inner = self.inner();
        if t <= k {
            inner.derivative(t)
        } else {
            -inner.value(t) + (k + 1.0 - t) * inner.derivative(t)
        }
    }
}

/// Piecewise-linear profile through `(knots[i], values[i])`.
///
/// Left of the first knot the profile is constant. With compact support it
/// vanishes beyond the last knot, whose value must then be zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledProfile {
    knots: Vec<f64>,
    values: Vec<f64>,
    compact: bool,
}

impl SampledProfile {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, compact: bool) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(CknError::InvalidInput("sampled profile needs at least two matching knots and values".into()));
        }
        if knots.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(CknError::InvalidInput("sampled profile knots must be non-negative and finite".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CknError::InvalidInput("sampled profile knots must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(CknError::InvalidInput("sampled profile values must be non-negative and finite".into()));
        }
        if compact && *values.last().unwrap() != 0.0 {
            return Err(CknError::InvalidInput(
                "a compactly supported sampled profile must vanish at its last knot".into(),
            ));
        }
        Ok(Self { knots, values, compact })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_compact(&self) -> bool {
        self.compact
    }

    fn segment(&self, t: f64) -> Option<usize> {
        let k = &self.knots;
        if t < k[0] || t >= k[k.len() - 1] {
            return None;
        }
        Some(k.partition_point(|&x| x <= t) - 1)
    }

    pub fn value(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0] {
            return self.values[0];
        }
        match self.segment(t) {
            Some(i) => {
                let w = (t - k[i]) / (k[i + 1] - k[i]);
                self.values[i] + w * (self.values[i + 1] - self.values[i])
            }
            None if self.compact => 0.0,
            None => *self.values.last().unwrap(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self.segment(t) {
            Some(i) => (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i]),
            None => 0.0,
        }
    }

    /// Writes `t,u` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for line in comments {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "t,u")?;
        for (t, u) in self.knots.iter().zip(&self.values) {
            writeln!(out, "{},{}", sci17(*t), sci17(*u))?;
        }
        Ok(())
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R, compact: bool) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        if rdr.headers()?.iter().any(|h| h.parse::<f64>().is_ok()) {
            return Err(CknError::InvalidInput("sampled profile CSV needs a header line".into()));
        }
        let mut knots = Vec::new();
        let mut values = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() != 2 {
                return Err(CknError::InvalidInput("sampled profile rows need exactly two columns".into()));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| CknError::InvalidInput(format!("not a number in profile CSV: {s:?}")))
            };
            knots.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        Self::new(knots, values, compact)
    }

    pub fn from_csv_path(path: impl AsRef<Path>, compact: bool) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path.as_ref())?, compact)
    }
}

/// Smooth bump `amplitude * exp(-(ln(t/center))^2 / (2 width^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGaussianBump {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl LogGaussianBump {
    /// Random sign, center `e^U(-2,2)` and width in `[0.2, 1)`, drawn from a ChaCha8 stream.
    pub fn seeded(seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        Self { amplitude: amplitude * sign, center: rng.gen_range(-2.0f64..2.0).exp(), width: rng.gen_range(0.2..1.0) }
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let z = (t / self.center).ln() / self.width;
        self.amplitude * (-0.5 * z * z).exp()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let z = (t / self.center).ln() / self.width;
        -self.value(t) * z / (self.width * t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    Extremal(ExtremalProfile),
    Cutoff(CutoffProfile),
    Sampled(SampledProfile),
    Bumped { base: Box<RadialProfile>, bump: LogGaussianBump },
}

impl RadialProfile {
    /// `(lambda + t^kappa)^(-(p-1)/(q-p))`.
    pub fn extremal(params: &CknParams, lambda: f64) -> Self {
        let e = params.float();
        RadialProfile::Extremal(ExtremalProfile { amplitude: 1.0, lambda, kappa: e.kappa, exponent: e.profile_exp })
    }

    /// `A (1 + B t^kappa)^(-(p-1)/(q-p))`, the same family written with amplitude and scale.
    pub fn family(params: &CknParams, amplitude: f64, b: f64) -> Self {
        let e = params.float();
        RadialProfile::Extremal(ExtremalProfile {
            amplitude: amplitude * b.powf(-e.profile_exp),
            lambda: 1.0 / b,
            kappa: e.kappa,
            exponent: e.profile_exp,
        })
    }

    pub fn cutoff(params: &CknParams, lambda: f64, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(CknError::InvalidInput("cutoff index k must be positive".into()));
        }
        let e = params.float();
        Ok(RadialProfile::Cutoff(CutoffProfile { lambda, k, kappa: e.kappa, exponent: e.profile_exp }))
    }

    pub fn bumped(self, bump: LogGaussianBump) -> Self {
        RadialProfile::Bumped { base: Box::new(self), bump }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            RadialProfile::Extremal(p) => p.value(t),
            RadialProfile::Cutoff(p) => p.value(t),
            RadialProfile::Sampled(p) => p.value(t),
            RadialProfile::Bumped { base, bump } => base.value(t) + bump.value(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            RadialProfile::Extremal(p) => p.derivative(t),
            RadialProfile::Cutoff(p) => p.derivative(t),
            RadialProfile::Sampled(p) => p.derivative(t),
            RadialProfile::Bumped { base, bump } => base.derivative(t) + bump.derivative(t),
        }
    }

    /// Local Lipschitz constant `|Du|(t)`: `|u'|` where differentiable, the
    /// larger one-sided slope at kinks.
    pub fn slope(&self, t: f64) -> f64 {
        let here = self.derivative(t).abs();
        if !self.breakpoints().contains(&t) {
            return here;
        }
        let left = self.derivative(t * (1.0 - 1e-12)).abs();
        here.max(left)
    }

    /// Radii where `u` is not differentiable.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::Extremal(_) => Vec::new(),
            RadialProfile::Cutoff(c) => {
                let k = c.k as f64;
                let mut b = vec![1.0 / k, k, k + 1.0];
                b.dedup();
                b
            }
            RadialProfile::Sampled(s) => s.knots().iter().copied().filter(|&t| t > 0.0).collect(),
            RadialProfile::Bumped { base, .. } => base.breakpoints(),
        }
    }

    /// Radius beyond which `u` vanishes, if any.
    pub fn support(&self) -> Option<f64> {
        match self {
            RadialProfile::Extremal(_) => None,
            RadialProfile::Cutoff(c) => Some(c.k as f64 + 1.0),
            RadialProfile::Sampled(s) if s.is_compact() => s.knots().last().copied(),
            RadialProfile::Sampled(_) => None,
            RadialProfile::Bumped { base, .. } => base.support(),
        }
    }

    /// Radius where the profile's shape changes: `lambda^(1/kappa)` for the extremal family.
    pub fn length_scale(&self) -> f64 {
        match self {
            RadialProfile::Extremal(p) => p.lambda.powf(1.0 / p.kappa),
            RadialProfile::Cutoff(p) => p.lambda.powf(1.0 / p.kappa),
            RadialProfile::Sampled(_) => 1.0,
            RadialProfile::Bumped { base, .. } => base.length_scale(),
        }
    }

    /// `t -> u(scale * t)`.
    pub fn dilate(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(CknError::InvalidInput(format!("dilation factor must be positive, got {scale}")));
        }
        Ok(match self {
            RadialProfile::Extremal(p) => {
                let sk = scale.powf(p.kappa);
                RadialProfile::Extremal(ExtremalProfile {
                    amplitude: p.amplitude * sk.powf(-p.exponent),
                    lambda: p.lambda / sk,
                    ..*p
                })
            }
            RadialProfile::Sampled(s) => RadialProfile::Sampled(SampledProfile {
                knots: s.knots.iter().map(|t| t / scale).collect(),
                values: s.values.clone(),
                compact: s.compact,
            }),
            RadialProfile::Bumped { base, bump } => RadialProfile::Bumped {
                base: Box::new(base.dilate(scale)?),
                bump: LogGaussianBump { center: bump.center / scale, ..*bump },
            },
            RadialProfile::Cutoff(_) => {
                return Err(CknError::UnsupportedProfile(
                    "dilation maps a cutoff profile outside its family; sample it first".into(),
                ))
            }
        })
    }

    /// `c * u`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Ok(match self {
            RadialProfile::Extremal(p) => {
                RadialProfile::Extremal(ExtremalProfile { amplitude: p.amplitude * factor, ..*p })
            }
            RadialProfile::Sampled(s) => RadialProfile::Sampled(SampledProfile::new(
                s.knots.clone(),
                s.values.iter().map(|v| v * factor.abs()).collect(),
                s.compact,
            )?),
            RadialProfile::Bumped { base, bump } => RadialProfile::Bumped {
                base: Box::new(base.scaled(factor)?),
                bump: LogGaussianBump { amplitude: bump.amplitude * factor, ..*bump },
            },
            RadialProfile::Cutoff(_) => {
                return Err(CknError::UnsupportedProfile("cutoff profiles have unit amplitude".into()))
            }
        })
    }

    /// Samples the profile on the given knots.
    pub fn sample(&self, knots: Vec<f64>, compact: bool) -> Result<SampledProfile> {
        let mut values: Vec<f64> = knots.iter().map(|&t| self.value(t).abs()).collect();
        if compact {
            if let Some(last) = values.last_mut() {
                *last = 0.0;
            }
        }
        SampledProfile::new(knots, values, compact)
    }
}
