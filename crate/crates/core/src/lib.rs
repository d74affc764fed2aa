//! Overset-domain solvers for linear constant-coefficient hyperbolic systems.
//!
//! Two component grids overlap on a strip and are coupled either through
//! characteristic conditions or through penalty terms at the ends of the
//! overlap (and optionally at interior points of it). The crate builds the
//! SBP discretisations, certifies coupling matrices, runs the semi-discrete
//! problems with RK4 and measures energy, conservation and the distance to a
//! single-domain solution.

pub mod coupling;
pub mod diagnostics;
mod engine;
pub mod geometry;
pub mod linalg;
pub mod oracle;
pub mod solver1d;
pub mod solver2d;

pub use coupling::{InterfaceCoupling, OverlapCoupling, Verdict};
pub use geometry::{Grid1D, OversetGeometry1D, OversetGeometry2D, SbpOrder};
pub use linalg::{HyperbolicSystem, SymMatrix};
pub use solver1d::SimState;
