//! Position law of a walker on a line that moves at constant speed and
//! reverses direction at Poisson times (the telegraph process).
//!
//! The law is a mix of front atoms at `±vt` and a continuous part, built here
//! four independent ways:
//!
//! * [`closed_form`]: modified Bessel functions;
//! * [`collision`]: expansion in the number of reversals;
//! * [`fourier`]: Fourier series from the exact characteristic function,
//!   with or without the front, and the same coefficients rebuilt from the
//!   even moments;
//! * [`montecarlo`]: direct simulation, used as the stochastic oracle.
//!
//! Kernels are generic over [`Real`]; [`Extended`] is the double-double type
//! used where `f64` runs out of digits.

// `!(a < b)` is how NaN inputs are rejected alongside out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod collision;
pub mod domain;
pub mod double_double;
pub mod error;
pub mod fourier;
pub mod method;
pub mod montecarlo;
pub mod scalar;
pub mod specfun;

pub use domain::{Atom, Direction, Grid, InitialCondition, MixedDensity, ModelParams, TruncationPolicy};
pub use error::{Error, Result};
pub use method::{Method, MethodSettings};
pub use montecarlo::{EnsembleResult, Model};
pub use scalar::Real;
pub use specfun::EvalTolerance;

/// Double-double scalar, about 32 significant digits.
pub type Extended = double_double::DoubleDouble;

pub type Params = ModelParams<f64>;
pub type Density = MixedDensity<f64>;
pub type ExtendedParams = ModelParams<Extended>;
