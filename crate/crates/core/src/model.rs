//! Radially symmetric model metric measure spaces.
//!
//! A model is described by its sphere density `sigma(t)`, the derivative of the
//! ball volume `m(B_t)`. Every kind is written as `rho(t) * n omega_n t^(n-1)`
//! with a relative density `rho` against Lebesgue measure.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CknError, Result};
use crate::special::{unit_ball_volume, unit_sphere_area};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Euclidean,
    /// Lebesgue measure scaled by a constant factor `c`.
    Cone {
        c: f64,
    },
    /// The equality case of the Ricci-envelope volume bound: Lebesgue measure
    /// scaled by `exp((n-1) b0)`.
    EnvelopeRicci {
        b0: f64,
    },
    Tabulated(DensityTable),
}

/// Relative density sampled at increasing radii, interpolated linearly and
/// held constant outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    knots: Vec<f64>,
    densities: Vec<f64>,
}

impl DensityTable {
    pub fn new(knots: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != densities.len() {
            return Err(CknError::InvalidInput(
                "density table needs matching, non-empty knot and density columns".into(),
            ));
        }
        if knots.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(CknError::InvalidInput("density table radii must be positive and finite".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CknError::InvalidInput("density table radii must be strictly increasing".into()));
        }
        if densities.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(CknError::InvalidInput("relative densities must be positive and finite".into()));
        }
        Ok(Self { knots, densities })
    }

    /// Loads a two-column CSV `t,relative_density` with a header line.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?;
        if header.iter().any(|h| h.parse::<f64>().is_ok()) {
            return Err(CknError::InvalidInput("density table needs a header line".into()));
        }
        let mut knots = Vec::new();
        let mut densities = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() != 2 {
                return Err(CknError::InvalidInput(format!(
                    "density table rows need exactly two columns, found {}",
                    record.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| CknError::InvalidInput(format!("not a number in density table: {s:?}")))
            };
            knots.push(parse(&record[0])?);
            densities.push(parse(&record[1])?);
        }
        Self::new(knots, densities)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn relative_density(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0] {
            return self.densities[0];
        }
        if t >= k[k.len() - 1] {
            return self.densities[k.len() - 1];
        }
        let i = k.partition_point(|&x| x <= t) - 1;
        let w = (t - k[i]) / (k[i + 1] - k[i]);
        self.densities[i] + w * (self.densities[i + 1] - self.densities[i])
    }

    /// `int_0^R rho(t) n t^(n-1) dt`, exact for the piecewise-linear density.
    fn normalized_volume(&self, n: u32, radius: f64) -> f64 {
        let nf = n as f64;
        let k = &self.knots;
        let mut total = 0.0;
        let first = radius.min(k[0]);
        total += self.densities[0] * first.powf(nf);
        for i in 0..k.len() - 1 {
            let (lo, hi) = (k[i], k[i + 1]);
            if radius <= lo {
                break;
            }
            let top = radius.min(hi);
            let slope = (self.densities[i + 1] - self.densities[i]) / (hi - lo);
            let offset = self.densities[i] - slope * lo;
            total += offset * (top.powf(nf) - lo.powf(nf))
                + slope * nf / (nf + 1.0) * (top.powf(nf + 1.0) - lo.powf(nf + 1.0));
        }
        let last = k[k.len() - 1];
        if radius > last {
            total += self.densities[k.len() - 1] * (radius.powf(nf) - last.powf(nf));
        }
        total
    }

    /// `normalized_volume(R) / R^n`, written so large radii do not overflow.
    fn normalized_ratio(&self, n: u32, radius: f64) -> f64 {
        let last = self.knots[self.knots.len() - 1];
        let d_last = self.densities[self.knots.len() - 1];
        if radius <= last {
            return self.normalized_volume(n, radius) / radius.powi(n as i32);
        }
        let at_last = self.normalized_volume(n, last) / last.powi(n as i32);
        d_last + (at_last - d_last) * (last / radius).powi(n as i32)
    }

    fn scaled(&self, factor: f64) -> Self {
        Self { knots: self.knots.clone(), densities: self.densities.iter().map(|d| d * factor).collect() }
    }
}

/// A radial model space in dimension `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMeasure {
    n: u32,
    kind: ModelKind,
}

impl RadialMeasure {
    pub fn euclidean(n: u32) -> Result<Self> {
        Self::new(n, ModelKind::Euclidean)
    }

    pub fn cone(n: u32, c: f64) -> Result<Self> {
        Self::new(n, ModelKind::Cone { c })
    }

    pub fn envelope_ricci(n: u32, b0: f64) -> Result<Self> {
        Self::new(n, ModelKind::EnvelopeRicci { b0 })
    }

    pub fn tabulated(n: u32, table: DensityTable) -> Result<Self> {
        Self::new(n, ModelKind::Tabulated(table))
    }

    pub fn new(n: u32, kind: ModelKind) -> Result<Self> {
        if n < 1 {
            return Err(CknError::InvalidInput("model dimension must be at least 1".into()));
        }
        match &kind {
            ModelKind::Cone { c } if !(*c > 0.0) || !c.is_finite() => {
                return Err(CknError::InvalidInput(format!("cone density factor must be positive, got {c}")));
            }
            ModelKind::EnvelopeRicci { b0 } if !(*b0 >= 0.0) || !b0.is_finite() => {
                return Err(CknError::InvalidInput(format!("envelope b0 must be non-negative, got {b0}")));
            }
            _ => {}
        }
        Ok(Self { n, kind })
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Notes about inputs that are accepted but unusual.
    pub fn warnings(&self) -> Vec<String> {
        match self.kind {
            ModelKind::Cone { c } if c > 1.0 => {
                vec![format!("cone density factor c = {c} exceeds 1 (more mass than Euclidean)")]
            }
            _ => Vec::new(),
        }
    }

    /// Density relative to Lebesgue measure at radius `t`.
    pub fn relative_density(&self, t: f64) -> f64 {
        match &self.kind {
            ModelKind::Euclidean => 1.0,
            ModelKind::Cone { c } => *c,
            ModelKind::EnvelopeRicci { b0 } => ((self.n as f64 - 1.0) * b0).exp(),
            ModelKind::Tabulated(table) => table.relative_density(t),
        }
    }

    /// The constant relative density, when the model has one.
    pub fn constant_density(&self) -> Option<f64> {
        match self.kind {
            ModelKind::Tabulated(_) => None,
            _ => Some(self.relative_density(1.0)),
        }
    }

    /// `sigma(t) = rho(t) n omega_n t^(n-1)`.
    pub fn sphere_density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return if self.n == 1 { 2.0 * self.relative_density(0.0) } else { 0.0 };
        }
        self.relative_density(t) * unit_sphere_area(self.n) * t.powi(self.n as i32 - 1)
    }

    /// Radii where `sigma` has kinks.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            ModelKind::Tabulated(table) => table.knots().to_vec(),
            _ => Vec::new(),
        }
    }

    /// `m(B_R) = int_0^R sigma(t) dt`.
    pub fn ball_volume(&self, radius: f64) -> f64 {
        if !(radius > 0.0) {
            return 0.0;
        }
        let omega = unit_ball_volume(self.n);
        match &self.kind {
            ModelKind::Tabulated(table) => omega * table.normalized_volume(self.n, radius),
            _ => self.relative_density(radius) * omega * radius.powi(self.n as i32),
        }
    }

    /// `m(B_rho) / (omega_n rho^n)`.
    pub fn volume_ratio(&self, radius: f64) -> f64 {
        match &self.kind {
            ModelKind::Tabulated(table) if radius > table.knots()[0] => table.normalized_ratio(self.n, radius),
            // Inside the first knot the density is constant, so the ratio is too.
            ModelKind::Tabulated(table) => table.densities()[0],
            _ => self.relative_density(radius),
        }
    }

    /// Smallest `C0` with `m(B_R)/m(B_rho) <= C0 (R/rho)^n` over all grid pairs `rho < R`.
    pub fn doubling_constant(&self, grid: &[f64]) -> Result<f64> {
        check_grid(grid)?;
        let ratios: Vec<f64> = grid.iter().map(|&t| self.volume_ratio(t)).collect();
        let mut worst: Option<f64> = None;
        for i in 0..ratios.len() {
            for j in i + 1..ratios.len() {
                let v = ratios[j] / ratios[i];
                worst = Some(worst.map_or(v, |w: f64| w.max(v)));
            }
        }
        // A single radius admits no pair; the smallest admissible constant is then 1.
        Ok(worst.unwrap_or(1.0))
    }

    /// `lim m(B_rho)/(omega_n rho^n)` along `rho = 2^-k`, `k = 0..=40`.
    pub fn origin_density(&self) -> Result<f64> {
        let mut previous = self.volume_ratio(1.0);
        for k in 1..=ORIGIN_DENSITY_MAX_HALVINGS {
            let rho = 0.5f64.powi(k);
            let current = self.volume_ratio(rho);
            if (current - previous).abs() <= ORIGIN_DENSITY_TOL * current.abs() {
                return Ok(current);
            }
            previous = current;
        }
        let last = self.volume_ratio(0.5f64.powi(ORIGIN_DENSITY_MAX_HALVINGS));
        let prev = self.volume_ratio(0.5f64.powi(ORIGIN_DENSITY_MAX_HALVINGS - 1));
        Err(CknError::NoLimit { last, previous: prev })
    }

    /// Rescales the measure so its origin density is 1.
    pub fn normalize(&self) -> Result<Self> {
        let density = self.origin_density()?;
        if !(density > 0.0) || !density.is_finite() {
            return Err(CknError::InvalidInput(format!("cannot normalize a model with origin density {density}")));
        }
        let kind = match &self.kind {
            ModelKind::Euclidean => ModelKind::Euclidean,
            ModelKind::Cone { .. } | ModelKind::EnvelopeRicci { .. } => {
                ModelKind::Cone { c: self.relative_density(1.0) / density }
            }
            ModelKind::Tabulated(table) => ModelKind::Tabulated(table.scaled(1.0 / density)),
        };
        Self::new(self.n, kind)
    }

    /// Infimum of `m(B_rho)/(omega_n rho^n)` over a radius grid.
    pub fn min_volume_ratio(&self, grid: &[f64]) -> Result<f64> {
        check_grid(grid)?;
        Ok(grid.iter().map(|&t| self.volume_ratio(t)).fold(f64::INFINITY, f64::min))
    }
}

const ORIGIN_DENSITY_TOL: f64 = 1e-9;
const ORIGIN_DENSITY_MAX_HALVINGS: i32 = 40;

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(CknError::InvalidInput("radius grid is empty".into()));
    }
    if grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(CknError::InvalidInput("radius grid must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CknError::InvalidInput("radius grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == count - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn closed_form_ball_volumes() {
        let e3 = RadialMeasure::euclidean(3).unwrap();
        assert!(rel(e3.ball_volume(2.0), 4.0 * PI / 3.0 * 8.0) < 1e-15);
        let c3 = RadialMeasure::cone(3, 0.5).unwrap();
        assert!(rel(c3.ball_volume(2.0), 2.0 * PI / 3.0 * 8.0) < 1e-15);
        let env = RadialMeasure::envelope_ricci(2, 1.0).unwrap();
        assert!(rel(env.ball_volume(1.0), std::f64::consts::E * PI) < 1e-15);
    }

    #[test]
    fn sphere_density_integrates_to_ball_volume() {
        let table = DensityTable::new(vec![0.5, 1.0, 2.0], vec![1.0, 1.5, 0.8]).unwrap();
        let model = RadialMeasure::tabulated(3, table).unwrap();
        let rule = crate::quadrature::GaussLegendre::new(10);
        let mut cuts = vec![0.0, 0.5, 1.0, 2.0, 3.0];
        cuts.dedup();
        let numeric: f64 = cuts.windows(2).map(|w| rule.integrate(|t| model.sphere_density(t), w[0], w[1])).sum();
        assert!(rel(model.ball_volume(3.0), numeric) < 1e-13);
    }

    #[test]
    fn doubling_constants() {
        let grid = log_grid(1e-3, 1e3, 25);
        assert!(rel(RadialMeasure::euclidean(4).unwrap().doubling_constant(&grid).unwrap(), 1.0) < 1e-13);
        assert!(rel(RadialMeasure::cone(4, 0.3).unwrap().doubling_constant(&grid).unwrap(), 1.0) < 1e-13);
        // Euclidean up to radius 1, twice the density beyond 1.01.
        let table = DensityTable::new(vec![1.0, 1.01], vec![1.0, 2.0]).unwrap();
        let model = RadialMeasure::tabulated(3, table).unwrap();
        let c0 = model.doubling_constant(&grid).unwrap();
        // Brute-force oracle over the same pairs, using volumes from quadrature of sigma.
        let rule = crate::quadrature::GaussLegendre::new(12);
        let vol = |r: f64| -> f64 {
            let mut cuts = vec![0.0];
            cuts.extend([1.0, 1.01].iter().copied().filter(|&k| k < r));
            cuts.push(r);
            cuts.windows(2).map(|w| rule.integrate(|t| model.sphere_density(t), w[0], w[1])).sum()
        };
        let mut oracle: f64 = 0.0;
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                oracle = oracle.max(vol(grid[j]) / vol(grid[i]) * (grid[i] / grid[j]).powi(3));
            }
        }
        assert!(rel(c0, oracle) < 1e-10);
        assert!(c0 > 1.0 && c0 <= 2.0, "{c0}");
    }

    #[test]
    fn single_radius_grid_and_bad_grids() {
        let e = RadialMeasure::euclidean(2).unwrap();
        assert_eq!(e.doubling_constant(&[1.0]).unwrap(), 1.0);
        assert!(e.doubling_constant(&[]).is_err());
        assert!(e.doubling_constant(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn origin_densities() {
        assert!(rel(RadialMeasure::euclidean(4).unwrap().origin_density().unwrap(), 1.0) < 1e-15);
        assert!(rel(RadialMeasure::cone(4, 0.7).unwrap().origin_density().unwrap(), 0.7) < 1e-15);
        let env = RadialMeasure::envelope_ricci(4, 0.3).unwrap();
        assert!(rel(env.origin_density().unwrap(), (0.9f64).exp()) < 1e-15);
        let table = DensityTable::new(vec![1e-3, 1.0], vec![0.6, 3.0]).unwrap();
        let tab = RadialMeasure::tabulated(3, table).unwrap();
        assert!(rel(tab.origin_density().unwrap(), 0.6) < 1e-9);
    }

    #[test]
    fn normalization() {
        let cone = RadialMeasure::cone(3, 0.5).unwrap().normalize().unwrap();
        assert_eq!(cone.kind(), &ModelKind::Cone { c: 1.0 });
        let e = RadialMeasure::euclidean(3).unwrap();
        assert_eq!(e.normalize().unwrap(), e);
        let env = RadialMeasure::envelope_ricci(2, 1.0).unwrap().normalize().unwrap();
        match env.kind() {
            ModelKind::Cone { c } => assert!((c - 1.0).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        let table = DensityTable::new(vec![0.1, 1.0], vec![2.0, 5.0]).unwrap();
        let tab = RadialMeasure::tabulated(4, table).unwrap().normalize().unwrap();
        assert!((tab.origin_density().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(RadialMeasure::cone(3, 0.0).is_err());
        assert!(RadialMeasure::cone(3, f64::NAN).is_err());
        assert!(RadialMeasure::envelope_ricci(3, -0.1).is_err());
        assert!(DensityTable::new(vec![1.0, 0.5], vec![1.0, 1.0]).is_err());
        assert!(DensityTable::new(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert_eq!(RadialMeasure::cone(3, 1.5).unwrap().warnings().len(), 1);
    }

    #[test]
    fn csv_tables() {
        let text = "t,relative_density\n0.5,1.0\n1.0,2.0\n";
        let table = DensityTable::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(table.knots(), &[0.5, 1.0]);
        let bad = "t,relative_density\n1.0,1.0\n0.5,2.0\n";
        assert!(DensityTable::from_csv_reader(bad.as_bytes()).is_err());
        let headerless = "0.5,1.0\n1.0,2.0\n";
        assert!(DensityTable::from_csv_reader(headerless.as_bytes()).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-2, 1e2, 13);
        assert_eq!(g.len(), 13);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[12], 1e2);
        assert!((g[6] - 1.0).abs() < 1e-14);
    }
}
