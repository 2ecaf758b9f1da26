//! Solver-agnostic access to ground-state Pauli expectation values.

use crate::error::{Error, Result};
use crate::model::Axis;

/// How a reported expectation value was obtained.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Source {
    /// Evaluated from the state.
    Computed,
    /// Zero because the operator is odd under a symmetry of the state
    /// (global spin-flip parity, or complex conjugation for a real state).
    Symmetry,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub source: Source,
}

impl Measured {
    pub fn computed(value: f64) -> Self {
        Self { value, source: Source::Computed }
    }

    pub fn symmetry_zero() -> Self {
        Self { value: 0.0, source: Source::Symmetry }
    }
}

/// One- and two-point Pauli correlators of a ground state.
///
/// Implemented by every solver so that entanglement measures can be assembled
/// without knowing where the state came from. Site indices are 0-based.
pub trait GroundStateHandle {
    fn n_sites(&self) -> usize;

    fn energy(&self) -> f64;

    /// Short solver tag used in result tables.
    fn solver_name(&self) -> &'static str;

    /// `⟨σ^a_i⟩`.
    fn magnetization(&self, a: Axis, i: usize) -> Result<Measured>;

    /// `⟨σ^a_i σ^b_j⟩` for `i != j`.
    fn correlator(&self, a: Axis, i: usize, b: Axis, j: usize) -> Result<Measured>;
}

pub(crate) fn check_site(n: usize, i: usize) -> Result<()> {
    if i >= n {
        return Err(Error::Domain(format!("site {i} out of range for a {n}-site chain")));
    }
    Ok(())
}

pub(crate) fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    check_site(n, i)?;
    check_site(n, j)?;
    if i == j {
        return Err(Error::Domain(format!(
            "two-point correlator needs distinct sites, got ({i}, {j}); use magnetization"
        )));
    }
    Ok(())
}
