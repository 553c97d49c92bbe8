//! Numerical verification of stability estimates for Talenti's comparison principle on
//! the unit ball: radial Poisson solvers, annulus competitors, Green's potentials on
//! star-shaped sets, shape derivatives and the spectral coercivity of the shape Hessian.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deficits;
pub mod dimension;
pub mod domains;
pub mod error;
pub mod field;
pub mod greens;
pub mod harmonics;
pub mod integrand;
pub mod modes;
pub mod quad;
pub mod radial;
pub mod sampling;
pub mod shape_deriv;
pub mod spectral;
pub mod tolerances;

pub use dimension::Dimension;
pub use error::{Error, Result};
pub use integrand::ConvexIntegrand;
pub use radial::{RadialDensity, RadialProfile};
