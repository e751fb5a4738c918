//! Boundary integral formulation of the dbar-Neumann problem on the unit ball in C².
//!
//! Modules follow the computation from geometry to the reduced boundary system:
//! frames and grids ([`geometry`]), the frame calculus on (0,q)-forms ([`forms`]),
//! volume and layer potentials ([`potentials`]), singular boundary operators and the
//! reduced solve ([`bie`]), and the experiment driver behind the `dbar-bie` binary
//! ([`harness`]).

pub mod bie;
pub mod catalog;
pub mod error;
pub mod expr;
pub mod forms;
pub mod geometry;
pub mod harness;
pub mod jet;
pub mod potentials;
pub mod quadrature;

pub use error::{Error, Result};
pub use geometry::PointC2;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

pub(crate) const PI: f64 = std::f64::consts::PI;
