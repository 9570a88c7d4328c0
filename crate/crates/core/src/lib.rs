//! Numerical laboratory for sharp Caffarelli-Kohn-Nirenberg inequalities on
//! radial model spaces.
//!
//! The pieces, bottom up:
//!
//! - [`params`]: admissible exponent sets, derived in exact rational arithmetic.
//! - [`special`] and [`quadrature`]: Gamma function, ball volumes and
//!   double-exponential quadrature for power-law integrands on the half line.
//! - [`model`]: radially symmetric measures given by a sphere density.
//! - [`profile`] and [`functionals`]: radial test functions and the three
//!   weighted integrals of the quotient.
//! - [`constant`]: the optimal Euclidean constant.
//! - [`comparison`]: the comparison functionals `F`, `G`, `H0` and the volume bound.
//! - [`optimizer`]: minimization of the quotient over profile families and grids.

pub mod comparison;
pub mod constant;
pub mod error;
pub mod format;
pub mod functionals;
pub mod model;
pub mod optimizer;
pub mod params;
pub mod profile;
pub mod quadrature;
pub mod special;

pub use error::{CknError, Result};
pub use functionals::{ckn_quotient, weighted_norms, WeightedNorms};
pub use model::{ModelKind, RadialMeasure};
pub use params::{CknParams, RawParams};
pub use profile::RadialProfile;
pub use quadrature::QuadConfig;
