//! Dual spaces of geodesic currents on hyperbolic surfaces.

pub mod error;
pub mod graph;
pub mod group;
pub mod hyperbolic;
pub mod checks;
pub mod currents;
pub mod dual;
pub mod numeric;

pub use error::{Error, Result};
