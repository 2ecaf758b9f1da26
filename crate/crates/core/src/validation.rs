//! Cross-solver consistency checks on random parameter points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dmrg::DmrgConfig;
use crate::entanglement::{concurrence, two_site_rdm, RdmMode};
use crate::error::Result;
use crate::handle::GroundStateHandle;
use crate::model::{Axis, Boundary, FieldParity, ModelParams};
use crate::sweep::{solve, PairLabel, Solver};

pub const CORRELATOR_TOL: f64 = 1e-8;
pub const FREE_FERMION_CONCURRENCE_TOL: f64 = 1e-7;
pub const DMRG_ENERGY_TOL: f64 = 1e-8;
pub const DMRG_CONCURRENCE_TOL: f64 = 1e-6;
pub const EQ3_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct PointCheck {
    pub reference: &'static str,
    pub candidate: &'static str,
    pub params: ModelParams,
    pub energy_diff: f64,
    pub max_correlator_diff: f64,
    pub max_concurrence_diff: f64,
    /// Largest entry difference between the full and the restricted
    /// density matrices over both solvers and all pairs.
    pub max_eq3_diff: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub free_fermion: Vec<PointCheck>,
    pub dmrg: Vec<PointCheck>,
}

impl ValidationReport {
    pub fn free_fermion_pass(&self) -> bool {
        self.free_fermion
            .iter()
            .all(|c| c.max_correlator_diff < CORRELATOR_TOL && c.max_concurrence_diff < FREE_FERMION_CONCURRENCE_TOL)
    }

    pub fn dmrg_pass(&self) -> bool {
        self.dmrg.iter().all(|c| {
            c.converged && c.energy_diff.abs() < DMRG_ENERGY_TOL && c.max_concurrence_diff < DMRG_CONCURRENCE_TOL
        })
    }

    pub fn eq3_pass(&self) -> bool {
        self.free_fermion.iter().chain(&self.dmrg).all(|c| c.max_eq3_diff < EQ3_TOL)
    }

    pub fn all_pass(&self) -> bool {
        self.free_fermion_pass() && self.dmrg_pass() && self.eq3_pass()
    }
}

const PAIRS: [PairLabel; 3] = [PairLabel::NnJ1, PairLabel::NnJ2, PairLabel::Nnn];

/// Correlators that enter the restricted density matrix.
fn eq3_correlators(h: &dyn GroundStateHandle, i: usize, j: usize) -> Result<Vec<f64>> {
    let mut v = vec![h.magnetization(Axis::Z, i)?.value, h.magnetization(Axis::Z, j)?.value];
    for a in Axis::ALL {
        v.push(h.correlator(a, i, a, j)?.value);
    }
    Ok(v)
}

fn eq3_gap(h: &dyn GroundStateHandle, i: usize, j: usize) -> Result<f64> {
    let full = two_site_rdm(h, i, j, RdmMode::FullTomography)?;
    let eq3 = two_site_rdm(h, i, j, RdmMode::SymmetricEq3)?;
    Ok((full.rho - eq3.rho).camax())
}

fn compare(params: &ModelParams, reference: Solver, candidate: Solver, dmrg: &DmrgConfig) -> Result<PointCheck> {
    let a = solve(params, FieldParity::Standard, reference, dmrg, &[])?;
    let b = solve(params, FieldParity::Standard, candidate, dmrg, &[])?;
    let (ha, hb) = (a.handle.as_ref() as &dyn GroundStateHandle, b.handle.as_ref() as &dyn GroundStateHandle);
    let mut check = PointCheck {
        reference: reference.name(),
        candidate: candidate.name(),
        params: params.clone(),
        energy_diff: hb.energy() - ha.energy(),
        max_correlator_diff: 0.0,
        max_concurrence_diff: 0.0,
        max_eq3_diff: 0.0,
        converged: a.converged && b.converged,
    };
    for pair in PAIRS {
        let (i, j) = pair.sites(params.n_sites, false)?;
        let (i, j) = (i - 1, j - 1);
        for (x, y) in eq3_correlators(ha, i, j)?.into_iter().zip(eq3_correlators(hb, i, j)?) {
            check.max_correlator_diff = check.max_correlator_diff.max((x - y).abs());
        }
        let ca = concurrence(&two_site_rdm(ha, i, j, RdmMode::FullTomography)?)?.value;
        let cb = concurrence(&two_site_rdm(hb, i, j, RdmMode::FullTomography)?)?.value;
        check.max_concurrence_diff = check.max_concurrence_diff.max((ca - cb).abs());
        check.max_eq3_diff = check.max_eq3_diff.max(eq3_gap(ha, i, j)?).max(eq3_gap(hb, i, j)?);
    }
    Ok(check)
}

/// Exact diagonalization against free fermions on `count` random
/// `κ = 0` points with 8, 10 or 12 sites and either boundary.
pub fn validate_free_fermion(count: usize, seed: u64) -> Result<Vec<PointCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = ModelParams {
                n_sites: [8, 10, 12][rng.gen_range(0..3)],
                gamma: rng.gen_range(0.0..=1.0),
                lambda: rng.gen_range(0.2..2.0),
                alpha: rng.gen_range(0.3..1.7),
                beta: rng.gen_range(0.3..1.7),
                kappa: 0.0,
                boundary: if rng.gen_bool(0.5) { Boundary::Open } else { Boundary::Periodic },
            };
            compare(&p, Solver::Exact, Solver::FreeFermion, &DmrgConfig::default())
        })
        .collect()
}

/// Exact diagonalization against dmrg on `count` random open 12-site
/// points with `κ ∈ [-0.8, 0.8]`.
pub fn validate_dmrg(count: usize, seed: u64, config: &DmrgConfig) -> Result<Vec<PointCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = ModelParams {
                n_sites: 12,
                gamma: 1.0,
                lambda: rng.gen_range(0.2..2.0),
                alpha: rng.gen_range(0.3..1.7),
                beta: rng.gen_range(0.3..1.7),
                kappa: rng.gen_range(-0.8..0.8),
                boundary: Boundary::Open,
            };
            compare(&p, Solver::Exact, Solver::Dmrg, config)
        })
        .collect()
}

pub fn run_validation(ff_points: usize, dmrg_points: usize, seed: u64) -> Result<ValidationReport> {
    let config = DmrgConfig { max_bond: 64, ..Default::default() };
    Ok(ValidationReport {
        free_fermion: validate_free_fermion(ff_points, seed)?,
        dmrg: validate_dmrg(dmrg_points, seed.wrapping_add(1), &config)?,
    })
}
