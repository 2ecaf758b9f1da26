//! Ground-state pairwise entanglement in the alternating XY chain with
//! next-nearest-neighbour couplings.
//!
//! Three solvers produce ground states behind the common
//! [`GroundStateHandle`] interface:
//!
//! * [`exact_diag`]: full Hilbert space, up to 20 sites, the reference.
//! * [`free_fermion`]: Jordan-Wigner / Bogoliubov solution, exact when there
//!   are no next-nearest-neighbour couplings, any size.
//! * [`dmrg`]: two-site DMRG on matrix product states for long open chains.
//!
//! [`entanglement`] turns correlators into two-site density matrices and
//! Wootters concurrence, and [`sweep`] drives parameter scans.

pub mod dmrg;
pub mod entanglement;
pub mod error;
pub mod exact_diag;
pub mod free_fermion;
pub mod handle;
pub mod lanczos;
pub mod model;
pub mod sweep;
pub mod validation;

pub use error::{Error, Result};
pub use handle::{GroundStateHandle, Measured, Source};
pub use model::{Axis, Boundary, FieldParity, ModelParams};
