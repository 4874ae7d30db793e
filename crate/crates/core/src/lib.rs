//! Information geometry of multivariate normal distributions.

pub mod charts;
pub mod commands;
pub mod error;
pub mod geodesy;
pub mod killing;
pub mod manifold;
pub mod sampling;
pub mod spd;
pub mod verify;

pub use error::{GeomError, Result};
pub use manifold::{AffineElement, GaussianPoint, TangentVector};
pub use spd::{SpdMatrix, SymMatrix};
