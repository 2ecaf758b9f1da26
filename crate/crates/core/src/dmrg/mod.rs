//! Matrix product state ground states for open chains.
//!
//! [`dmrg_ground_state`] runs two-site sweeps on an MPO built from a term
//! list. The result implements [`GroundStateHandle`]; correlators are read
//! off two-site reduced density matrices contracted over the whole chain,
//! so they do not depend on the gauge of the state.
//!
//! When the Hamiltonian conserves the spin-flip parity `∏σz` the sweeps run
//! separately in the even and odd sectors on parity-labelled states, and
//! the lower result is kept, the even one on ties. This keeps the state
//! from settling into a symmetry-broken mixture in the ordered phase.
//!
//! A state that breaks the symmetry anyway, for instance one supplied by
//! the caller for a non-conserving Hamiltonian, is detected through
//! `|⟨σx⟩|` at the chain centre exceeding [`SYMMETRY_BREAKING_TOL`]. Its
//! parity-odd correlators are then reported as symmetry zeros, which is the
//! same as averaging every reduced density matrix with its parity image.

mod checkpoint;
mod engine;
pub mod mpo;
pub mod mps;

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use engine::mpo_expectation;
pub use mpo::{mpo_build, Mpo};
pub use mps::Mps;

use crate::error::{Error, Result};
use crate::exact_diag::{ParitySector, DEGENERACY_TOL};
use crate::handle::{check_pair, check_site, GroundStateHandle, Measured};
use crate::model::Axis;

pub const SYMMETRY_BREAKING_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmrgConfig {
    pub max_bond: usize,
    /// Sweep budget; one sweep runs left to right and back.
    pub sweeps: usize,
    pub min_sweeps: usize,
    /// Convergence threshold on the energy change between sweeps.
    pub energy_tol: f64,
    /// Largest discarded weight per truncation.
    pub truncation_cutoff: f64,
    /// Norm of the Gaussian noise added to the two-site tensor, one entry
    /// per sweep. A noisy sweep truncates at no less than the squared amplitude.
    pub noise_schedule: Vec<f64>,
    pub initial_bond: usize,
    pub seed: u64,
    pub krylov_dim: usize,
    pub lanczos_tol: f64,
    pub lanczos_restarts: usize,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        Self {
            max_bond: 128,
            sweeps: 12,
            min_sweeps: 2,
            energy_tol: 1e-9,
            truncation_cutoff: 1e-12,
            noise_schedule: vec![1e-4, 1e-6],
            initial_bond: 16,
            seed: 1,
            krylov_dim: 24,
            lanczos_tol: 1e-10,
            lanczos_restarts: 4,
        }
    }
}

impl DmrgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_bond < 2 {
            return Err(Error::Config(format!("max_bond must be at least 2, got {}", self.max_bond)));
        }
        if !(self.energy_tol > 0.0) {
            return Err(Error::Config(format!("energy_tol must be positive, got {}", self.energy_tol)));
        }
        if !(self.truncation_cutoff >= 0.0) || self.noise_schedule.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Config("truncation cutoff and noise must be non-negative".into()));
        }
        if self.sweeps == 0 || self.krylov_dim < 2 || self.initial_bond == 0 {
            return Err(Error::Config("sweeps, krylov_dim and initial_bond must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DmrgDiagnostics {
    pub sweep_energies: Vec<f64>,
    /// Largest discarded weight in each sweep.
    pub max_truncation: Vec<f64>,
    pub bond_dims: Vec<usize>,
    pub sweeps: usize,
    pub converged: bool,
    /// Local eigensolves that hit their restart budget.
    pub lanczos_unconverged: usize,
}

/// Result of the sweeps within one parity sector.
#[derive(Clone, Debug)]
pub struct SectorState {
    pub mps: Mps,
    pub energy: f64,
    pub diagnostics: DmrgDiagnostics,
}

#[derive(Debug)]
pub struct DmrgGroundState {
    pub mps: Mps,
    pub energy: f64,
    pub diagnostics: DmrgDiagnostics,
    pub sector: ParitySector,
    /// Lowest state found in the other parity sector.
    pub other_sector: Option<SectorState>,
    /// Set when parity-odd correlators are suppressed.
    pub symmetrized: bool,
    pair_cache: Mutex<HashMap<(usize, usize), [[f64; 4]; 4]>>,
    site_cache: Mutex<HashMap<usize, [[f64; 2]; 2]>>,
}

pub fn dmrg_ground_state(mpo: &Mpo, config: &DmrgConfig) -> Result<DmrgGroundState> {
    dmrg_ground_state_from(mpo, config, &[])
}

/// Starts the sweeps from the states in `initial`, for continuation along
/// a parameter path. Each sector uses the first state labelled with it.
pub fn dmrg_ground_state_from(mpo: &Mpo, config: &DmrgConfig, initial: &[Mps]) -> Result<DmrgGroundState> {
    if !mpo.conserves_parity {
        let out = engine::run(mpo, config, initial.first().cloned(), None)?;
        return Ok(DmrgGroundState::new(out.mps, out.energy, out.diagnostics));
    }
    let mut sectors = [0u8, 1].map(|p| {
        let start = initial.iter().find(|m| m.sector() == Some(p)).cloned();
        engine::run(mpo, config, start, Some(p))
    });
    let odd = std::mem::replace(&mut sectors[1], Err(Error::Config(String::new())))?;
    let even = std::mem::replace(&mut sectors[0], Err(Error::Config(String::new())))?;
    let (best, other) = if odd.energy < even.energy - DEGENERACY_TOL { (odd, even) } else { (even, odd) };
    let mut state = DmrgGroundState::new(best.mps, best.energy, best.diagnostics);
    state.other_sector = Some(SectorState { mps: other.mps, energy: other.energy, diagnostics: other.diagnostics });
    Ok(state)
}

/// Pauli matrices as real 2×2 arrays together with the imaginary unit
/// they carry: `σy = -i (iσy)`.
fn real_form(a: Axis) -> ([[f64; 2]; 2], bool) {
    (mpo::real_pauli(a), a == Axis::Y)
}

impl DmrgGroundState {
    pub fn new(mps: Mps, energy: f64, diagnostics: DmrgDiagnostics) -> Self {
        let sector = match mps.sector() {
            Some(0) => ParitySector::Even,
            Some(_) => ParitySector::Odd,
            None => ParitySector::Mixed,
        };
        let mut state = Self {
            mps,
            energy,
            diagnostics,
            sector,
            other_sector: None,
            symmetrized: false,
            pair_cache: Mutex::new(HashMap::new()),
            site_cache: Mutex::new(HashMap::new()),
        };
        let center = state.mps.n_sites() / 2;
        let mx = state.raw_magnetization(Axis::X, center);
        state.symmetrized = mx.abs() > SYMMETRY_BREAKING_TOL;
        state
    }

    /// Both sectors converged when both were solved.
    pub fn converged(&self) -> bool {
        self.diagnostics.converged && self.other_sector.as_ref().is_none_or(|o| o.diagnostics.converged)
    }

    /// Final states of every solved sector, for warm starts.
    pub fn warm_starts(&self) -> Vec<Mps> {
        std::iter::once(self.mps.clone()).chain(self.other_sector.as_ref().map(|o| o.mps.clone())).collect()
    }

    fn site_rdm(&self, i: usize) -> [[f64; 2]; 2] {
        let mut cache = self.site_cache.lock().expect("cache lock");
        *cache.entry(i).or_insert_with(|| self.mps.one_site_rdm(i))
    }

    fn pair_rdm(&self, i: usize, j: usize) -> [[f64; 4]; 4] {
        let mut cache = self.pair_cache.lock().expect("cache lock");
        *cache.entry((i, j)).or_insert_with(|| self.mps.two_site_rdm(i, j))
    }

    /// `⟨σ^a_i⟩` without symmetrization; zero for `σy` on a real state.
    pub fn raw_magnetization(&self, a: Axis, i: usize) -> f64 {
        let (op, imaginary) = real_form(a);
        if imaginary {
            return 0.0;
        }
        let rho = self.site_rdm(i);
        (0..2).flat_map(|s| (0..2).map(move |t| (s, t))).map(|(s, t)| rho[s][t] * op[t][s]).sum()
    }

    /// `⟨σ^a_i σ^b_j⟩` without symmetrization.
    pub fn raw_correlator(&self, a: Axis, i: usize, b: Axis, j: usize) -> f64 {
        let (a, i, b, j) = if i < j { (a, i, b, j) } else { (b, j, a, i) };
        let ((oa, ya), (ob, yb)) = (real_form(a), real_form(b));
        if ya != yb {
            return 0.0;
        }
        let sign = if ya && yb { -1.0 } else { 1.0 };
        let rho = self.pair_rdm(i, j);
        let mut v = 0.0;
        for s in 0..2 {
            for u in 0..2 {
                for sp in 0..2 {
                    for up in 0..2 {
                        v += rho[2 * s + u][2 * sp + up] * oa[sp][s] * ob[up][u];
                    }
                }
            }
        }
        sign * v
    }
}

impl GroundStateHandle for DmrgGroundState {
    fn n_sites(&self) -> usize {
        self.mps.n_sites()
    }

    fn energy(&self) -> f64 {
        self.energy
    }

    fn solver_name(&self) -> &'static str {
        "dmrg"
    }

    fn magnetization(&self, a: Axis, i: usize) -> Result<Measured> {
        check_site(self.n_sites(), i)?;
        if a == Axis::Y || (self.symmetrized && a.flips_parity()) {
            return Ok(Measured::symmetry_zero());
        }
        Ok(Measured::computed(self.raw_magnetization(a, i)))
    }

    fn correlator(&self, a: Axis, i: usize, b: Axis, j: usize) -> Result<Measured> {
        check_pair(self.n_sites(), i, j)?;
        let odd_y = (a == Axis::Y) != (b == Axis::Y);
        let odd_parity = a.flips_parity() != b.flips_parity();
        if odd_y || (self.symmetrized && odd_parity) {
            return Ok(Measured::symmetry_zero());
        }
        Ok(Measured::computed(self.raw_correlator(a, i, b, j)))
    }
}
