//! Two-site reduced density matrices and Wootters concurrence.
//!
//! The basis is `{|00⟩, |01⟩, |10⟩, |11⟩}` with `0` = spin up along z; the
//! first factor is site `i` of the requested pair.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::handle::{GroundStateHandle, Source};
use crate::model::Axis;

/// Largest negative density-matrix eigenvalue treated as rounding noise.
pub const RDM_CLIP_TOL: f64 = 1e-8;
/// Density-matrix eigenvalues below this are rounding noise of a zero.
pub const NULL_EIGENVALUE: f64 = 1e-14;
/// Hermiticity and trace tolerance.
pub const RDM_CHECK_TOL: f64 = 1e-10;

#[derive(Copy, Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RdmMode {
    /// All 16 Pauli products.
    FullTomography,
    /// Identity, both z magnetizations and the three diagonal correlators.
    SymmetricEq3,
}

#[derive(Clone, Debug)]
pub struct TwoSiteRdm {
    pub rho: Matrix4<Complex64>,
    pub pair: (usize, usize),
    /// `pauli_expansion[a][b] = ⟨σ^a_i σ^b_j⟩` with index 0 the identity and
    /// 1, 2, 3 the x, y, z axes.
    pub pauli_expansion: [[f64; 4]; 4],
    /// Number of expansion coefficients set to zero by a symmetry argument
    /// rather than evaluated.
    pub symmetry_zeros: usize,
    /// Total magnitude of negative eigenvalues removed from `rho`.
    pub clip: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcurrenceResult {
    pub value: f64,
    /// Square roots of the eigenvalues of `ρρ̃`, descending.
    pub lambdas: [f64; 4],
    /// Negative eigenvalue mass clipped from the density matrix.
    pub clip_applied: f64,
}

fn pauli(k: usize) -> Matrix2<Complex64> {
    let (o, l, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
    match k {
        0 => Matrix2::new(l, o, o, l),
        1 => Matrix2::new(o, l, l, o),
        2 => Matrix2::new(o, -i, i, o),
        3 => Matrix2::new(l, o, o, -l),
        _ => unreachable!("Pauli index {k}"),
    }
}

pub(crate) fn kron2(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

fn axis_index(a: Axis) -> usize {
    match a {
        Axis::X => 1,
        Axis::Y => 2,
        Axis::Z => 3,
    }
}

impl TwoSiteRdm {
    /// Builds `ρ = ¼ Σ c_ab σ^a ⊗ σ^b` and checks that it is a state.
    pub fn from_pauli_expansion(pair: (usize, usize), c: [[f64; 4]; 4], symmetry_zeros: usize) -> Result<Self> {
        let mut rho = Matrix4::<Complex64>::zeros();
        for (a, row) in c.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    rho += kron2(&pauli(a), &pauli(b)) * Complex64::new(0.25 * v, 0.0);
                }
            }
        }
        let mut rdm = Self { rho, pair, pauli_expansion: c, symmetry_zeros, clip: 0.0 };
        rdm.check_and_clip()?;
        Ok(rdm)
    }

    /// Wraps an explicit density matrix.
    pub fn from_matrix(pair: (usize, usize), rho: Matrix4<Complex64>) -> Result<Self> {
        let mut c = [[0.0; 4]; 4];
        for (a, row) in c.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = (rho * kron2(&pauli(a), &pauli(b))).trace().re;
            }
        }
        let mut rdm = Self { rho, pair, pauli_expansion: c, symmetry_zeros: 0, clip: 0.0 };
        rdm.check_and_clip()?;
        Ok(rdm)
    }

    fn check_and_clip(&mut self) -> Result<()> {
        let herm = (self.rho - self.rho.adjoint()).camax();
        let trace = self.rho.trace();
        if herm > RDM_CHECK_TOL || (trace.re - 1.0).abs() > RDM_CHECK_TOL || trace.im.abs() > RDM_CHECK_TOL {
            return Err(Error::NumericalIntegrity(format!(
                "pair {:?}: density matrix not Hermitian unit-trace (asymmetry {herm:.3e}, trace {trace})",
                self.pair
            )));
        }
        let eig = SymmetricEigen::new(self.rho);
        let min = eig.eigenvalues.min();
        if min < -RDM_CLIP_TOL {
            return Err(Error::NumericalIntegrity(format!(
                "pair {:?}: density matrix eigenvalue {min:.3e} below -{RDM_CLIP_TOL:e}",
                self.pair
            )));
        }
        if min < 0.0 {
            let clipped: f64 = eig.eigenvalues.iter().filter(|&&e| e < 0.0).map(|e| -e).sum();
            let vals = eig.eigenvalues.map(|e| e.max(0.0));
            let total = vals.sum();
            let d = Matrix4::from_diagonal(&vals.map(|e| Complex64::new(e / total, 0.0)));
            self.rho = eig.eigenvectors * d * eig.eigenvectors.adjoint();
            self.clip = clipped;
        }
        Ok(())
    }

    /// Average with the image under `σz ⊗ σz`, which removes every term odd
    /// under the global spin-flip parity `∏σz`.
    pub fn parity_symmetrized(&self) -> Result<Self> {
        let mut c = self.pauli_expansion;
        for (a, row) in c.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let odd = [a, b].iter().filter(|&&k| k == 1 || k == 2).count() % 2 == 1;
                if odd {
                    *v = 0.0;
                }
            }
        }
        Self::from_pauli_expansion(self.pair, c, self.symmetry_zeros)
    }
}

fn fetch(value: Result<crate::handle::Measured>, zeros: &mut usize) -> Result<f64> {
    let m = value?;
    if m.source == Source::Symmetry {
        *zeros += 1;
    }
    Ok(m.value)
}

pub fn two_site_rdm(provider: &dyn GroundStateHandle, i: usize, j: usize, mode: RdmMode) -> Result<TwoSiteRdm> {
    let mut c = [[0.0; 4]; 4];
    c[0][0] = 1.0;
    let mut zeros = 0;
    match mode {
        RdmMode::FullTomography => {
            for a in Axis::ALL {
                c[axis_index(a)][0] = fetch(provider.magnetization(a, i), &mut zeros)?;
                c[0][axis_index(a)] = fetch(provider.magnetization(a, j), &mut zeros)?;
                for b in Axis::ALL {
                    c[axis_index(a)][axis_index(b)] = fetch(provider.correlator(a, i, b, j), &mut zeros)?;
                }
            }
        }
        RdmMode::SymmetricEq3 => {
            c[3][0] = fetch(provider.magnetization(Axis::Z, i), &mut zeros)?;
            c[0][3] = fetch(provider.magnetization(Axis::Z, j), &mut zeros)?;
            for a in Axis::ALL {
                let k = axis_index(a);
                c[k][k] = fetch(provider.correlator(a, i, a, j), &mut zeros)?;
            }
        }
    }
    TwoSiteRdm::from_pauli_expansion((i, j), c, zeros)
}

/// Wootters concurrence.
///
/// The roots `λ_k` of the spectrum of `ρρ̃` are the singular values of
/// `sqrt(ρ) (σy⊗σy) sqrt(ρ)*`, whose squares are exactly that spectrum. Taking
/// singular values directly avoids the square root of rounding noise in the
/// vanishing eigenvalues of rank-deficient states.
pub fn concurrence(rdm: &TwoSiteRdm) -> Result<ConcurrenceResult> {
    let eig = SymmetricEigen::new(rdm.rho);
    let roots = eig.eigenvalues.map(|p| {
        let p = if p < NULL_EIGENVALUE { 0.0 } else { p };
        Complex64::new(p.sqrt(), 0.0)
    });
    let sqrt_rho = eig.eigenvectors * Matrix4::from_diagonal(&roots) * eig.eigenvectors.adjoint();
    let yy = kron2(&pauli(2), &pauli(2));
    let tau = sqrt_rho * yy * sqrt_rho.conjugate();
    let mut l: Vec<f64> = tau.singular_values().iter().copied().collect();
    l.sort_by(|a, b| b.total_cmp(a));
    let lambdas = [l[0], l[1], l[2], l[3]];
    if !lambdas.iter().all(|x| x.is_finite()) {
        return Err(Error::NumericalIntegrity(format!("pair {:?}: non-finite spin-flip spectrum", rdm.pair)));
    }
    let value = (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0);
    Ok(ConcurrenceResult { value, lambdas, clip_applied: rdm.clip })
}

pub fn pair_concurrence(provider: &dyn GroundStateHandle, i: usize, j: usize) -> Result<ConcurrenceResult> {
    concurrence(&two_site_rdm(provider, i, j, RdmMode::FullTomography)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_diag::{self, StateVector};
    use crate::handle::{check_pair, check_site, Measured};
    use crate::model::{build_couplings, hamiltonian_terms, Boundary, ModelParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn pure(amps: [f64; 4]) -> Matrix4<Complex64> {
        let v = nalgebra::Vector4::from_iterator(amps.iter().map(|&a| c(a)));
        v * v.adjoint()
    }

    fn conc(rho: Matrix4<Complex64>) -> f64 {
        concurrence(&TwoSiteRdm::from_matrix((0, 1), rho).unwrap()).unwrap().value
    }

    #[test]
    fn bell_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((conc(pure([s, 0.0, 0.0, s])) - 1.0).abs() < 1e-10);
        assert!((conc(pure([0.0, s, -s, 0.0])) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn product_and_mixed_states() {
        assert!(conc(pure([1.0, 0.0, 0.0, 0.0])).abs() < 1e-10);
        assert!(conc(pure([0.5, 0.5, 0.5, 0.5])).abs() < 1e-10);
        assert!(conc(Matrix4::identity() * c(0.25)).abs() < 1e-10);
    }

    fn werner(p: f64) -> Matrix4<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        pure([0.0, s, -s, 0.0]) * c(p) + Matrix4::identity() * c((1.0 - p) / 4.0)
    }

    #[test]
    fn werner_states() {
        assert!((conc(werner(0.5)) - 0.25).abs() < 1e-10);
        for k in 0..=20 {
            let p = k as f64 / 20.0;
            assert!((conc(werner(p)) - ((3.0 * p - 1.0) / 2.0).max(0.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn x_state_closed_form() {
        // ρ14, ρ23 coherences with diagonal populations.
        let mut rho = Matrix4::<Complex64>::zeros();
        let d = [0.4, 0.1, 0.2, 0.3];
        for k in 0..4 {
            rho[(k, k)] = c(d[k]);
        }
        rho[(0, 3)] = c(0.25);
        rho[(3, 0)] = c(0.25);
        rho[(1, 2)] = c(0.05);
        rho[(2, 1)] = c(0.05);
        let expect = 2.0 * (0.25 - (0.1f64 * 0.2).sqrt()).max(0.05 - (0.4f64 * 0.3).sqrt()).max(0.0);
        assert!((conc(rho) - expect).abs() < 1e-10);
    }

    fn random_unitary(rng: &mut ChaCha8Rng) -> Matrix2<Complex64> {
        let v: [f64; 4] = std::array::from_fn(|_| rng.gen::<f64>() * 2.0 - 1.0);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a = Complex64::new(v[0] / n, v[1] / n);
        let b = Complex64::new(v[2] / n, v[3] / n);
        let phase = Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU);
        Matrix2::new(a, -b.conj(), b, a.conj()) * phase
    }

    fn random_state(rng: &mut ChaCha8Rng, rank: usize) -> Matrix4<Complex64> {
        let mut rho = Matrix4::<Complex64>::zeros();
        for _ in 0..rank {
            let v = nalgebra::Vector4::from_fn(|_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            rho += v * v.adjoint();
        }
        rho / rho.trace()
    }

    #[test]
    fn local_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_state(&mut rng, 2);
        let base = conc(rho);
        assert!(base >= 0.0);
        for _ in 0..50 {
            let u = kron2(&random_unitary(&mut rng), &random_unitary(&mut rng));
            let rotated = u * rho * u.adjoint();
            assert!((conc(rotated) - base).abs() < 1e-9);
        }
    }

    /// Concurrence via the Hermitian matrix `sqrt(ρ) ρ̃ sqrt(ρ)`.
    fn concurrence_via_r(rho: Matrix4<Complex64>) -> f64 {
        let eig = SymmetricEigen::new(rho);
        let s = eig.eigenvalues.map(|e| c(e.max(0.0).sqrt()));
        let sqrt_rho = eig.eigenvectors * Matrix4::from_diagonal(&s) * eig.eigenvectors.adjoint();
        let yy = kron2(&pauli(2), &pauli(2));
        let m = sqrt_rho * yy * rho.conjugate() * yy * sqrt_rho;
        let mut l: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().map(|e| e.max(0.0).sqrt()).collect();
        l.sort_by(|a, b| b.total_cmp(a));
        (l[0] - l[1] - l[2] - l[3]).max(0.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn matches_r_route(seed in any::<u64>(), rank in 1usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_state(&mut rng, rank);
            let r = concurrence(&TwoSiteRdm::from_matrix((0, 1), rho).unwrap()).unwrap();
            prop_assert!((r.value - concurrence_via_r(rho)).abs() < 1e-7);
            prop_assert!((0.0..=1.0).contains(&r.value));
            prop_assert!(r.lambdas.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn swapping_sites_preserves_concurrence(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_state(&mut rng, 2);
            let swap = Matrix4::from_fn(|r, col| {
                let sw = |k: usize| ((k & 1) << 1) | (k >> 1);
                if sw(r) == col { c(1.0) } else { c(0.0) }
            });
            prop_assert!((conc(rho) - conc(swap * rho * swap)).abs() < 1e-10);
        }

        #[test]
        fn expansion_round_trip(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_state(&mut rng, 3);
            let a = TwoSiteRdm::from_matrix((0, 1), rho).unwrap();
            let b = TwoSiteRdm::from_pauli_expansion((0, 1), a.pauli_expansion, 0).unwrap();
            prop_assert!((a.rho - b.rho).camax() < 1e-12);
        }
    }

    #[test]
    fn unphysical_matrix_is_rejected() {
        let mut rho = Matrix4::<Complex64>::identity() * c(0.25);
        rho[(0, 0)] = c(-0.25);
        rho[(1, 1)] = c(0.75);
        assert!(matches!(TwoSiteRdm::from_matrix((0, 1), rho), Err(Error::NumericalIntegrity(_))));
        let mut asym = Matrix4::<Complex64>::identity() * c(0.25);
        asym[(0, 1)] = c(0.1);
        assert!(TwoSiteRdm::from_matrix((0, 1), asym).is_err());
    }

    #[test]
    fn tiny_negative_eigenvalue_is_clipped() {
        let mut rho = pure([1.0, 0.0, 0.0, 0.0]);
        rho[(0, 0)] = c(1.0 + 1e-9);
        rho[(1, 1)] = c(-1e-9);
        let rdm = TwoSiteRdm::from_matrix((0, 1), rho).unwrap();
        assert!((rdm.clip - 1e-9).abs() < 1e-15);
        assert!(SymmetricEigen::new(rdm.rho).eigenvalues.min() >= -1e-15);
        assert!((rdm.rho.trace().re - 1.0).abs() < 1e-12);
    }

    /// Handle over an explicit state vector.
    struct VectorHandle(StateVector);

    impl GroundStateHandle for VectorHandle {
        fn n_sites(&self) -> usize {
            self.0.n_sites
        }
        fn energy(&self) -> f64 {
            0.0
        }
        fn solver_name(&self) -> &'static str {
            "vector"
        }
        fn magnetization(&self, a: Axis, i: usize) -> Result<Measured> {
            check_site(self.0.n_sites, i)?;
            Ok(Measured::computed(self.0.magnetization(a, i)?))
        }
        fn correlator(&self, a: Axis, i: usize, b: Axis, j: usize) -> Result<Measured> {
            check_pair(self.0.n_sites, i, j)?;
            Ok(Measured::computed(self.0.correlator(a, i, b, j)?))
        }
    }

    struct Incomplete;

    impl GroundStateHandle for Incomplete {
        fn n_sites(&self) -> usize {
            4
        }
        fn energy(&self) -> f64 {
            0.0
        }
        fn solver_name(&self) -> &'static str {
            "incomplete"
        }
        fn magnetization(&self, _: Axis, _: usize) -> Result<Measured> {
            Ok(Measured::computed(0.0))
        }
        fn correlator(&self, a: Axis, _: usize, b: Axis, _: usize) -> Result<Measured> {
            if a == b {
                Ok(Measured::computed(0.0))
            } else {
                Err(Error::Capability("mixed correlators not available".into()))
            }
        }
    }

    #[test]
    fn missing_correlator_is_a_capability_error() {
        assert!(matches!(two_site_rdm(&Incomplete, 0, 1, RdmMode::FullTomography), Err(Error::Capability(_))));
        assert!(two_site_rdm(&Incomplete, 0, 1, RdmMode::SymmetricEq3).is_ok());
    }

    #[test]
    fn product_state_rdm() {
        let mut amps = vec![0.0; 16];
        amps[0] = 1.0;
        let h = VectorHandle(StateVector::new(4, amps).unwrap());
        let rdm = two_site_rdm(&h, 0, 1, RdmMode::FullTomography).unwrap();
        let expect = Matrix4::from_diagonal(&nalgebra::Vector4::new(c(1.0), c(0.0), c(0.0), c(0.0)));
        assert!((rdm.rho - expect).camax() < 1e-12);
    }

    #[test]
    fn ghz_pair() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![0.0; 16];
        amps[0] = s;
        amps[15] = s;
        let h = VectorHandle(StateVector::new(4, amps).unwrap());
        let rdm = two_site_rdm(&h, 0, 1, RdmMode::FullTomography).unwrap();
        let expect = Matrix4::from_diagonal(&nalgebra::Vector4::new(c(0.5), c(0.0), c(0.0), c(0.5)));
        assert!((rdm.rho - expect).camax() < 1e-12);
        assert!(concurrence(&rdm).unwrap().value.abs() < 1e-10);
    }

    fn exact(p: &ModelParams) -> exact_diag::GroundStateResult {
        let bonds = build_couplings(p).unwrap();
        exact_diag::ground_state(&hamiltonian_terms(&bonds, p.gamma).unwrap()).unwrap()
    }

    #[test]
    fn tomography_matches_partial_trace() {
        let gs = exact(&ModelParams { n_sites: 12, ..Default::default() });
        for (i, j) in [(5, 6), (4, 6), (0, 11), (7, 3)] {
            let rdm = two_site_rdm(&gs, i, j, RdmMode::FullTomography).unwrap();
            let pt = gs.state.partial_trace_pair(i, j).unwrap();
            for r in 0..4 {
                for col in 0..4 {
                    assert!((rdm.rho[(r, col)] - c(pt[r][col])).norm() < 1e-9, "({i},{j}) [{r}][{col}]");
                }
            }
        }
    }

    #[test]
    fn two_site_chain_limits() {
        let strong = exact(&ModelParams { n_sites: 2, lambda: 1e8, ..Default::default() });
        assert!((pair_concurrence(&strong, 0, 1).unwrap().value - 1.0).abs() < 1e-6);
        let weak = exact(&ModelParams { n_sites: 2, lambda: 1e-6, ..Default::default() });
        assert!(pair_concurrence(&weak, 0, 1).unwrap().value < 1e-5);
    }

    #[test]
    fn eq3_form_matches_tomography_on_parity_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4 {
            let p = ModelParams {
                n_sites: 10,
                gamma: rng.gen_range(0.0..=1.0),
                lambda: rng.gen_range(0.3..2.0),
                alpha: rng.gen_range(0.4..1.6),
                beta: rng.gen_range(0.4..1.6),
                kappa: rng.gen_range(-0.8..0.8),
                boundary: Boundary::Periodic,
            };
            let gs = exact(&p);
            for (i, j) in [(4, 5), (4, 6)] {
                let full = two_site_rdm(&gs, i, j, RdmMode::FullTomography).unwrap();
                let eq3 = two_site_rdm(&gs, i, j, RdmMode::SymmetricEq3).unwrap();
                assert!((full.rho - eq3.rho).camax() < 1e-8);
                let d = concurrence(&full).unwrap().value - concurrence(&eq3).unwrap().value;
                assert!(d.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn swap_symmetry_on_ground_state() {
        let gs = exact(&ModelParams { n_sites: 10, lambda: 0.9, alpha: 0.7, kappa: 0.3, ..Default::default() });
        for (i, j) in [(4, 5), (3, 5), (0, 7)] {
            let a = pair_concurrence(&gs, i, j).unwrap().value;
            let b = pair_concurrence(&gs, j, i).unwrap().value;
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn nnn_peak_near_critical_field() {
        let grid: Vec<f64> = (0..=36).map(|k| 0.2 + 0.05 * k as f64).collect();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&lambda| {
                let gs =
                    exact(&ModelParams { n_sites: 12, lambda, boundary: Boundary::Periodic, ..Default::default() });
                pair_concurrence(&gs, 5, 7).unwrap().value
            })
            .collect();
        let (k, _) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!((0.85..=1.2).contains(&grid[k]), "peak at {}", grid[k]);
    }

    #[test]
    fn parity_symmetrization_zeroes_odd_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rdm = TwoSiteRdm::from_matrix((0, 1), random_state(&mut rng, 4)).unwrap();
        let sym = rdm.parity_symmetrized().unwrap();
        let zz = kron2(&pauli(3), &pauli(3));
        let avg = (rdm.rho + zz * rdm.rho * zz) * c(0.5);
        assert!((sym.rho - avg).camax() < 1e-12);
    }
}
