//! Exact diagonalization on the full `2^N` spin Hilbert space.
//!
//! Basis states are bit strings with site 0 as the most significant bit; a
//! zero bit is spin up along z (`σz = +1`). The Hamiltonian is applied term by
//! term through bit operations and is never stored as a full matrix except in
//! the small-`N` dense path, where a single parity block is built explicitly.
//!
//! Every Hamiltonian produced by [`crate::model`] commutes with the parity
//! `P = ∏ σz`, so the two parity sectors are diagonalized separately. A
//! sector state is fully determined by its first `N - 1` bits, which gives a
//! compact index `pos = s >> 1`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::handle::{check_pair, check_site, GroundStateHandle, Measured};
use crate::lanczos::{self, LanczosConfig};
use crate::model::{Axis, TermList};

/// Largest chain handled at all.
pub const MAX_SITES: usize = 20;
/// Largest chain handled by dense diagonalization of parity blocks.
pub const DENSE_MAX_SITES: usize = 10;
/// Levels closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ParitySector {
    Even,
    Odd,
    /// The Hamiltonian does not conserve parity; the state is not a parity eigenstate.
    Mixed,
}

#[derive(Clone, Debug)]
pub struct StateVector {
    pub n_sites: usize,
    /// Real amplitudes; every Hamiltonian handled here is a real symmetric matrix.
    pub amplitudes: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub state: StateVector,
    pub energy: f64,
    pub gap: f64,
    pub parity_sector: ParitySector,
    /// `‖H ψ - E ψ‖` of the returned state.
    pub residual: f64,
}

/// Low-lying levels, resolved by parity sector.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

impl Spectrum {
    /// All levels in ascending order with their sector.
    pub fn merged(&self) -> Vec<(f64, ParitySector)> {
        let mut all: Vec<(f64, ParitySector)> = self
            .even
            .iter()
            .map(|&e| (e, ParitySector::Even))
            .chain(self.odd.iter().map(|&e| (e, ParitySector::Odd)))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        all
    }

    pub fn to_json(&self, levels: usize) -> serde_json::Value {
        let merged: Vec<serde_json::Value> = self
            .merged()
            .into_iter()
            .take(levels)
            .map(|(e, p)| serde_json::json!({ "energy": e, "parity": p }))
            .collect();
        serde_json::json!({ "levels": merged, "even": self.even, "odd": self.odd })
    }
}

/// One Pauli string compiled to bit masks.
#[derive(Copy, Clone, Debug)]
struct CompiledTerm {
    flip: u64,
    sign: u64,
    factor: f64,
}

fn site_bit(n: usize, i: usize) -> u64 {
    1u64 << (n - 1 - i)
}

/// Mask data and the power of `i` contributed by the σy factors.
fn masks(n: usize, ops: &[(usize, Axis)]) -> (u64, u64, usize) {
    let (mut flip, mut sign, mut ny) = (0u64, 0u64, 0usize);
    for &(site, axis) in ops {
        let bit = site_bit(n, site);
        match axis {
            Axis::X => flip ^= bit,
            Axis::Y => {
                flip ^= bit;
                sign ^= bit;
                ny += 1;
            }
            Axis::Z => sign ^= bit,
        }
    }
    (flip, sign, ny)
}

fn compile(terms: &TermList) -> Vec<CompiledTerm> {
    terms
        .terms
        .iter()
        .map(|t| {
            let (flip, sign, ny) = masks(terms.n_sites, &t.ops);
            // ny is even for real terms: i^ny = (-1)^(ny/2).
            let phase = if (ny / 2) % 2 == 0 { 1.0 } else { -1.0 };
            CompiledTerm { flip, sign, factor: t.coeff * phase }
        })
        .collect()
}

#[derive(Copy, Clone, Debug)]
enum Space {
    Sector { n: usize, odd: bool },
    Full { n: usize },
}

impl Space {
    fn dim(self) -> usize {
        match self {
            Space::Sector { n, .. } => 1 << (n - 1),
            Space::Full { n } => 1 << n,
        }
    }

    #[inline]
    fn expand(self, pos: usize) -> u64 {
        match self {
            Space::Sector { odd, .. } => {
                let p = pos as u64;
                let bit = (p.count_ones() as u64 + odd as u64) & 1;
                (p << 1) | bit
            }
            Space::Full { .. } => pos as u64,
        }
    }

    #[inline]
    fn compress(self, s: u64) -> usize {
        match self {
            Space::Sector { .. } => (s >> 1) as usize,
            Space::Full { .. } => s as usize,
        }
    }
}

#[inline]
fn sign_of(bits: u64) -> f64 {
    if bits.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `out = H x` within one space, as a gather over output entries.
fn apply(space: Space, terms: &[CompiledTerm], x: &[f64], out: &mut [f64]) {
    let row = |pos: usize| -> f64 {
        let s = space.expand(pos);
        terms
            .iter()
            .map(|t| {
                let src = s ^ t.flip;
                t.factor * sign_of(src & t.sign) * x[space.compress(src)]
            })
            .sum()
    };
    if out.len() >= 1 << 12 {
        out.par_chunks_mut(1024).enumerate().for_each(|(c, chunk)| {
            for (k, o) in chunk.iter_mut().enumerate() {
                *o = row(c * 1024 + k);
            }
        });
    } else {
        for (pos, o) in out.iter_mut().enumerate() {
            *o = row(pos);
        }
    }
}

fn dense_block(space: Space, terms: &[CompiledTerm]) -> DMatrix<f64> {
    let d = space.dim();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for col in 0..d {
        let src = space.expand(col);
        for t in terms {
            let dst = src ^ t.flip;
            m[(space.compress(dst), col)] += t.factor * sign_of(src & t.sign);
        }
    }
    m
}

struct Level {
    energy: f64,
    vector: Vec<f64>,
}

fn lowest_levels(space: Space, terms: &[CompiledTerm], count: usize, n: usize) -> Result<Vec<Level>> {
    let d = space.dim();
    if n <= DENSE_MAX_SITES {
        let eig = SymmetricEigen::new(dense_block(space, terms));
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        Ok(order
            .into_iter()
            .take(count)
            .map(|k| Level { energy: eig.eigenvalues[k], vector: eig.eigenvectors.column(k).iter().copied().collect() })
            .collect())
    } else {
        let cfg = LanczosConfig { krylov_dim: 60.min(d), tol: 1e-10, max_restarts: 400 };
        let pairs = lanczos::lowest_eigenpairs(d, count, |x, y| apply(space, terms, x, y), None, &cfg)?;
        Ok(pairs.into_iter().map(|p| Level { energy: p.value, vector: p.vector }).collect())
    }
}

fn check_terms(terms: &TermList) -> Result<()> {
    terms.validate()?;
    if terms.n_sites > MAX_SITES {
        return Err(Error::Capability(format!(
            "exact diagonalization is limited to {MAX_SITES} sites, got {}",
            terms.n_sites
        )));
    }
    if !terms.is_real() {
        return Err(Error::Capability("exact diagonalization requires a real Hamiltonian".into()));
    }
    Ok(())
}

fn embed(space: Space, v: &[f64]) -> Vec<f64> {
    let n = match space {
        Space::Sector { n, .. } | Space::Full { n } => n,
    };
    let mut full = vec![0.0; 1 << n];
    for (pos, &a) in v.iter().enumerate() {
        full[space.expand(pos) as usize] = a;
    }
    full
}

/// Ground state of the Hamiltonian `terms`.
///
/// If the two lowest levels are closer than [`DEGENERACY_TOL`] the lowest
/// even-parity state is returned.
pub fn ground_state(terms: &TermList) -> Result<GroundStateResult> {
    check_terms(terms)?;
    let n = terms.n_sites;
    let compiled = compile(terms);

    let (space, level, gap, sector) = if terms.commutes_with_parity() {
        let even_space = Space::Sector { n, odd: false };
        let odd_space = Space::Sector { n, odd: true };
        let mut even = lowest_levels(even_space, &compiled, 2, n)?;
        let mut odd = lowest_levels(odd_space, &compiled, 2, n)?;
        let mut energies: Vec<f64> = even.iter().chain(&odd).map(|l| l.energy).collect();
        energies.sort_by(f64::total_cmp);
        let e0 = energies[0];
        let gap = (energies[1] - e0).max(0.0);
        let even_lowest = even[0].energy;
        let odd_lowest = odd[0].energy;
        let pick_even =
            if gap < DEGENERACY_TOL { even_lowest - e0 < DEGENERACY_TOL } else { even_lowest <= odd_lowest };
        if pick_even {
            (even_space, even.swap_remove(0), gap, ParitySector::Even)
        } else {
            (odd_space, odd.swap_remove(0), gap, ParitySector::Odd)
        }
    } else {
        let full = Space::Full { n };
        let mut levels = lowest_levels(full, &compiled, 2, n)?;
        let gap = (levels[1].energy - levels[0].energy).max(0.0);
        (full, levels.swap_remove(0), gap, ParitySector::Mixed)
    };

    let mut hv = vec![0.0; level.vector.len()];
    apply(space, &compiled, &level.vector, &mut hv);
    let residual = hv.iter().zip(&level.vector).map(|(h, v)| (h - level.energy * v).powi(2)).sum::<f64>().sqrt();
    if residual > 1e-9 {
        return Err(Error::Solver { message: "ground state failed the eigen-residual check".into(), residual });
    }

    let state = StateVector { n_sites: n, amplitudes: embed(space, &level.vector) };
    Ok(GroundStateResult { state, energy: level.energy, gap, parity_sector: sector, residual })
}

/// The `per_sector` lowest levels of each parity sector.
pub fn low_spectrum(terms: &TermList, per_sector: usize) -> Result<Spectrum> {
    check_terms(terms)?;
    if !terms.commutes_with_parity() {
        return Err(Error::Capability("spectrum by parity sector needs a parity-conserving Hamiltonian".into()));
    }
    let n = terms.n_sites;
    let compiled = compile(terms);
    let even = lowest_levels(Space::Sector { n, odd: false }, &compiled, per_sector, n)?;
    let odd = lowest_levels(Space::Sector { n, odd: true }, &compiled, per_sector, n)?;
    Ok(Spectrum {
        even: even.into_iter().map(|l| l.energy).collect(),
        odd: odd.into_iter().map(|l| l.energy).collect(),
    })
}

/// `⟨ψ| H |ψ⟩` for an arbitrary normalized state in the full space.
pub fn expectation(terms: &TermList, psi: &StateVector) -> Result<f64> {
    check_terms(terms)?;
    let compiled = compile(terms);
    let mut hv = vec![0.0; psi.amplitudes.len()];
    apply(Space::Full { n: terms.n_sites }, &compiled, &psi.amplitudes, &mut hv);
    Ok(lanczos::dot(&psi.amplitudes, &hv))
}

impl StateVector {
    pub fn new(n_sites: usize, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_sites {
            return Err(Error::Domain(format!("{} amplitudes do not describe {n_sites} sites", amplitudes.len())));
        }
        Ok(Self { n_sites, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        lanczos::norm(&self.amplitudes)
    }

    /// Real part of `⟨ψ| ∏ σ |ψ⟩` for the given operator string.
    fn pauli_expectation(&self, ops: &[(usize, Axis)]) -> f64 {
        let (flip, sign, ny) = masks(self.n_sites, ops);
        // Odd σy count: the operator is imaginary antisymmetric and has a
        // vanishing real expectation on a real state.
        if ny % 2 == 1 {
            return 0.0;
        }
        let phase = if (ny / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let psi = &self.amplitudes;
        let sum: f64 =
            (0..psi.len() as u64).map(|t| psi[(t ^ flip) as usize] * sign_of(t & sign) * psi[t as usize]).sum();
        phase * sum
    }

    pub fn correlator(&self, a: Axis, i: usize, b: Axis, j: usize) -> Result<f64> {
        check_pair(self.n_sites, i, j)?;
        Ok(self.pauli_expectation(&[(i, a), (j, b)]))
    }

    pub fn magnetization(&self, a: Axis, i: usize) -> Result<f64> {
        check_site(self.n_sites, i)?;
        Ok(self.pauli_expectation(&[(i, a)]))
    }

    /// Reduced density matrix of sites `(i, j)` by direct partial trace, in
    /// the basis `|s_i s_j⟩` with `s = 0` for spin up.
    pub fn partial_trace_pair(&self, i: usize, j: usize) -> Result<[[f64; 4]; 4]> {
        check_pair(self.n_sites, i, j)?;
        let n = self.n_sites;
        let (bi, bj) = (site_bit(n, i), site_bit(n, j));
        let local = |s: u64| -> usize { (((s & bi != 0) as usize) << 1) | (s & bj != 0) as usize };
        let mut rho = [[0.0; 4]; 4];
        for s in 0..(1u64 << n) {
            if s & (bi | bj) != 0 {
                continue;
            }
            for a in [0, bi, bj, bi | bj] {
                for b in [0, bi, bj, bi | bj] {
                    rho[local(a)][local(b)] += self.amplitudes[(s | a) as usize] * self.amplitudes[(s | b) as usize];
                }
            }
        }
        Ok(rho)
    }
}

impl GroundStateHandle for GroundStateResult {
    fn n_sites(&self) -> usize {
        self.state.n_sites
    }

    fn energy(&self) -> f64 {
        self.energy
    }

    fn solver_name(&self) -> &'static str {
        "exact"
    }

    fn magnetization(&self, a: Axis, i: usize) -> Result<Measured> {
        self.state.magnetization(a, i).map(Measured::computed)
    }

    fn correlator(&self, a: Axis, i: usize, b: Axis, j: usize) -> Result<Measured> {
        self.state.correlator(a, i, b, j).map(Measured::computed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{model_terms, Boundary, FieldParity, ModelParams, PauliTerm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn terms(n: usize, list: Vec<PauliTerm>) -> TermList {
        TermList { n_sites: n, boundary: Boundary::Open, terms: list }
    }

    /// Dense Kronecker-product construction used as an independent oracle.
    fn kron_matrix(t: &TermList) -> DMatrix<f64> {
        let n = t.n_sites;
        let dim = 1 << n;
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let iy = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        for term in &t.terms {
            let mut m = DMatrix::<f64>::identity(1, 1);
            // σy = -i (iσy), so a σy pair contributes an overall minus sign.
            let coeff = if term.y_count() == 2 { -term.coeff } else { term.coeff };
            for site in 0..n {
                let op = match term.ops.iter().find(|(s, _)| *s == site).map(|(_, a)| *a) {
                    None => DMatrix::identity(2, 2),
                    Some(Axis::X) => x.clone(),
                    Some(Axis::Y) => iy.clone(),
                    Some(Axis::Z) => z.clone(),
                };
                m = m.kronecker(&op);
            }
            h += m * coeff;
        }
        h
    }

    #[test]
    fn ising_pair_is_degenerate_and_resolved_to_even_parity() {
        let t = terms(2, vec![PauliTerm::new(-1.0, vec![(0, Axis::X), (1, Axis::X)])]);
        let gs = ground_state(&t).unwrap();
        assert!((gs.energy + 1.0).abs() < 1e-12);
        assert!(gs.gap < 1e-12);
        assert_eq!(gs.parity_sector, ParitySector::Even);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let a = &gs.state.amplitudes;
        let sign = a[0].signum();
        assert!((a[0] * sign - r).abs() < 1e-12 && (a[3] * sign - r).abs() < 1e-12);
        assert!(a[1].abs() < 1e-12 && a[2].abs() < 1e-12);
        assert!((gs.state.correlator(Axis::X, 0, Axis::X, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn field_only_pair_is_polarized() {
        let t = terms(2, vec![PauliTerm::new(-0.5, vec![(0, Axis::Z)]), PauliTerm::new(-0.5, vec![(1, Axis::Z)])]);
        let gs = ground_state(&t).unwrap();
        assert!((gs.energy + 1.0).abs() < 1e-12);
        assert!((gs.state.amplitudes[0].abs() - 1.0).abs() < 1e-12);
        assert!((gs.state.correlator(Axis::Z, 0, Axis::Z, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((gs.state.magnetization(Axis::Z, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_site_ring_matches_dense_oracle() {
        let p = ModelParams { n_sites: 4, boundary: Boundary::Periodic, ..Default::default() };
        let t = model_terms(&p, FieldParity::Standard).unwrap();
        let h = kron_matrix(&t);
        let e_min = SymmetricEigen::new(h).eigenvalues.min();
        let gs = ground_state(&t).unwrap();
        assert!((gs.energy - e_min).abs() < 1e-10, "{} vs {}", gs.energy, e_min);
    }

    #[test]
    fn sector_application_matches_kronecker_matrix() {
        let p = ModelParams {
            n_sites: 6,
            gamma: 0.3,
            alpha: 0.6,
            beta: 1.4,
            kappa: -0.35,
            lambda: 0.8,
            boundary: Boundary::Periodic,
        };
        let t = model_terms(&p, FieldParity::Standard).unwrap();
        let h = kron_matrix(&t);
        let compiled = compile(&t);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..64).map(|_| rng.gen::<f64>() - 0.5).collect();
        let mut y = vec![0.0; 64];
        apply(Space::Full { n: 6 }, &compiled, &x, &mut y);
        let yref = &h * nalgebra::DVector::from_vec(x);
        for k in 0..64 {
            assert!((y[k] - yref[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn lanczos_path_agrees_with_dense_path() {
        let p = ModelParams { n_sites: 11, kappa: 0.4, alpha: 0.7, ..Default::default() };
        let t = model_terms(&p, FieldParity::Standard).unwrap();
        let gs = ground_state(&t).unwrap();
        assert!(gs.residual < 1e-9);
        let compiled = compile(&t);
        let even = dense_block(Space::Sector { n: 11, odd: false }, &compiled);
        let e_even = SymmetricEigen::new(even).eigenvalues.min();
        assert!((gs.energy - e_even).abs() < 1e-9);
    }

    #[test]
    fn variational_bound_on_random_states() {
        let p = ModelParams { n_sites: 8, kappa: -0.5, alpha: 0.6, lambda: 1.3, ..Default::default() };
        let t = model_terms(&p, FieldParity::Standard).unwrap();
        let gs = ground_state(&t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut v: Vec<f64> = (0..256).map(|_| rng.gen::<f64>() - 0.5).collect();
            let nrm = lanczos::norm(&v);
            v.iter_mut().for_each(|a| *a /= nrm);
            let phi = StateVector::new(8, v).unwrap();
            assert!(gs.energy <= expectation(&t, &phi).unwrap() + 1e-12);
        }
    }

    #[test]
    fn uniform_ring_correlators_are_translation_invariant() {
        let p = ModelParams { n_sites: 8, lambda: 0.9, boundary: Boundary::Periodic, ..Default::default() };
        let gs = ground_state(&model_terms(&p, FieldParity::Standard).unwrap()).unwrap();
        for a in Axis::ALL {
            for d in 1..4 {
                let c0 = gs.state.correlator(a, 0, a, d).unwrap();
                for i in 1..8 {
                    let c = gs.state.correlator(a, i, a, (i + d) % 8).unwrap();
                    assert!((c - c0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn parity_odd_observables_vanish() {
        let p = ModelParams { n_sites: 7, gamma: 0.6, kappa: 0.3, lambda: 1.7, ..Default::default() };
        let gs = ground_state(&model_terms(&p, FieldParity::Standard).unwrap()).unwrap();
        for i in 0..7 {
            assert!(gs.state.magnetization(Axis::X, i).unwrap().abs() < 1e-9);
            assert!(gs.state.magnetization(Axis::Y, i).unwrap().abs() < 1e-9);
            for j in 0..7 {
                if i != j {
                    assert!(gs.state.correlator(Axis::X, i, Axis::Z, j).unwrap().abs() < 1e-9);
                    let ab = gs.state.correlator(Axis::X, i, Axis::Y, j).unwrap();
                    let ba = gs.state.correlator(Axis::Y, j, Axis::X, i).unwrap();
                    assert!((ab - ba).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn normalized_and_in_range() {
        let p = ModelParams { n_sites: 9, kappa: 0.2, ..Default::default() };
        let gs = ground_state(&model_terms(&p, FieldParity::Standard).unwrap()).unwrap();
        assert!((gs.state.norm() - 1.0).abs() < 1e-12);
        for a in Axis::ALL {
            for b in Axis::ALL {
                assert!(gs.state.correlator(a, 2, b, 5).unwrap().abs() <= 1.0 + 1e-10);
            }
        }
    }

    #[test]
    fn errors() {
        let t = terms(2, vec![PauliTerm::new(-1.0, vec![(0, Axis::Z)])]);
        let gs = ground_state(&t).unwrap();
        assert!(matches!(gs.state.correlator(Axis::Z, 1, Axis::Z, 1), Err(Error::Domain(_))));
        let big = TermList { n_sites: 21, boundary: Boundary::Open, terms: vec![] };
        assert!(matches!(ground_state(&big), Err(Error::Capability(_))));
    }

    #[test]
    fn partial_trace_of_polarized_pair() {
        let mut amps = vec![0.0; 8];
        amps[0] = 1.0;
        let psi = StateVector::new(3, amps).unwrap();
        let rho = psi.partial_trace_pair(0, 2).unwrap();
        assert_eq!(rho[0][0], 1.0);
        assert_eq!(rho.iter().flatten().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn spectrum_dump_contains_both_sectors() {
        let p = ModelParams { n_sites: 6, ..Default::default() };
        let s = low_spectrum(&model_terms(&p, FieldParity::Standard).unwrap(), 3).unwrap();
        assert_eq!(s.even.len(), 3);
        assert_eq!(s.odd.len(), 3);
        let json = s.to_json(6);
        assert_eq!(json["levels"].as_array().unwrap().len(), 6);
    }
}
