//! Free-fermion solution of the chain without next-nearest-neighbour terms.
//!
//! After a Jordan-Wigner transformation (spin up = occupied, `σz = 2n - 1`)
//! the nearest-neighbour XY chain becomes the quadratic form
//!
//! ```text
//! H = Σ_ij A_ij c†_i c_j + ½ Σ_ij B_ij (c†_i c†_j + h.c.) + const
//! ```
//!
//! with symmetric hopping `A` and antisymmetric pairing `B`. Writing
//! `a_i = c_i + c†_i` and `b_i = c_i - c†_i`, the ground state is fully
//! described by the real matrix `G_ij = ⟨b_i a_j⟩`. With the singular value
//! decomposition `A + B = U Σ Vᵀ`, the Bogoliubov vacuum has `G = U Vᵀ`,
//! energy `-½ Σ σ_k` and fermion parity `det G`.
//!
//! Spin correlators follow from Wick's theorem: `⟨σz_i⟩ = -G_ii`, and the
//! string operators of `σx σx` and `σy σy` collapse to determinants of
//! `G` sub-blocks.
//!
//! On a ring the boundary bond picks up the sign `-(-1)^{N_f}`, so both
//! fermion-parity sectors are solved and the lower physical state is kept.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::handle::{check_pair, check_site, GroundStateHandle, Measured};
use crate::model::{Axis, BondTable, Boundary};

/// Modes below this energy are reported as (near-)degenerate.
pub const ZERO_MODE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct WrapBond {
    pub coupling: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug)]
pub struct BdgMatrix {
    /// Hopping block `A`; excludes the ring-closing bond.
    pub hopping: DMatrix<f64>,
    /// Pairing block `B`; excludes the ring-closing bond.
    pub pairing: DMatrix<f64>,
    /// Bond between the last and first site of a ring. Its sign depends on
    /// the fermion-parity sector.
    pub wrap: Option<WrapBond>,
}

impl BdgMatrix {
    pub fn n_sites(&self) -> usize {
        self.hopping.nrows()
    }

    /// Blocks including the wrap bond with boundary sign `sign`.
    fn blocks_with_wrap(&self, sign: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut a = self.hopping.clone();
        let mut b = self.pairing.clone();
        if let Some(w) = &self.wrap {
            let n = self.n_sites();
            let (i, j) = (n - 1, 0);
            let jw = w.coupling * sign;
            a[(i, j)] -= jw;
            a[(j, i)] -= jw;
            b[(i, j)] -= w.gamma * jw;
            b[(j, i)] += w.gamma * jw;
        }
        (a, b)
    }

    /// Eigenvalues of the `2N × 2N` Bogoliubov-de Gennes matrix
    /// `[[A, B], [-B, -A]]` in ascending order (open-chain blocks, or the
    /// even-fermion-parity blocks of a ring).
    pub fn bdg_spectrum(&self) -> Vec<f64> {
        let n = self.n_sites();
        let (a, b) = self.blocks_with_wrap(-1.0);
        let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&a);
        h.view_mut((0, n), (n, n)).copy_from(&b);
        h.view_mut((n, 0), (n, n)).copy_from(&(-&b));
        h.view_mut((n, n), (n, n)).copy_from(&(-&a));
        let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

pub fn bdg_build(bonds: &BondTable, gamma: f64) -> Result<BdgMatrix> {
    if bonds.has_nnn() {
        return Err(Error::Capability(
            "free-fermion solver requires kappa = 0; use the exact or dmrg solver for next-nearest-neighbour couplings"
                .into(),
        ));
    }
    let n = bonds.n_sites;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, n);
    for (i, &h) in bonds.fields.iter().enumerate() {
        a[(i, i)] = -2.0 * h;
    }
    let mut wrap = None;
    for bond in &bonds.nn {
        let (i, j) = (bond.i.min(bond.j), bond.i.max(bond.j));
        if j - i != 1 {
            if bonds.boundary == Boundary::Periodic && i == 0 && j == n - 1 {
                wrap = Some(WrapBond { coupling: bond.coupling, gamma });
                continue;
            }
            return Err(Error::Config(format!("bond ({i}, {j}) is not nearest-neighbour")));
        }
        a[(i, j)] -= bond.coupling;
        a[(j, i)] -= bond.coupling;
        b[(i, j)] -= gamma * bond.coupling;
        b[(j, i)] += gamma * bond.coupling;
    }
    Ok(BdgMatrix { hopping: a, pairing: b, wrap })
}

#[derive(Clone, Debug)]
pub struct MajoranaCorrelations {
    /// `G_ij = ⟨b_i a_j⟩`.
    pub g: DMatrix<f64>,
    pub energy: f64,
    /// Quasiparticle energies of the selected sector, ascending.
    pub mode_energies: Vec<f64>,
    /// Set when a quasiparticle energy is below [`ZERO_MODE_TOL`]; the
    /// ground state is then not unique.
    pub degenerate: bool,
}

struct SectorSolution {
    g: DMatrix<f64>,
    energy: f64,
    modes: Vec<f64>,
    parity: f64,
}

fn vacuum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> SectorSolution {
    let svd = (a + b).svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let g = &u * &vt;
    let mut modes: Vec<f64> = svd.singular_values.iter().copied().collect();
    let energy = -0.5 * modes.iter().sum::<f64>();
    let parity = g.determinant().signum();
    modes.sort_by(f64::total_cmp);
    SectorSolution { g, energy, modes, parity }
}

/// Lowest state of the quadratic form with fermion parity `parity`.
fn in_sector(a: &DMatrix<f64>, b: &DMatrix<f64>, parity: f64) -> SectorSolution {
    let mut sol = vacuum(a, b);
    if sol.parity != parity {
        // Occupy the softest mode.
        let svd = (a + b).svd(true, true);
        let u = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v_t requested");
        let k = svd.singular_values.imin();
        sol.g -= 2.0 * u.column(k) * vt.row(k);
        sol.energy += svd.singular_values[k];
        sol.parity = parity;
    }
    sol
}

pub fn ground_correlations(m: &BdgMatrix) -> MajoranaCorrelations {
    let sol = match &m.wrap {
        None => vacuum(&m.hopping, &m.pairing),
        Some(_) => {
            let n = m.n_sites();
            // Q = (-1)^{N_f}; the wrap bond carries sign -Q.
            let (a_even, b_even) = m.blocks_with_wrap(-1.0);
            let (a_odd, b_odd) = m.blocks_with_wrap(1.0);
            let even = in_sector(&a_even, &b_even, 1.0);
            let odd = in_sector(&a_odd, &b_odd, -1.0);
            // Spin parity ∏σz = (-1)^N Q; prefer the even spin-parity state on ties.
            let spin_even_is_q_even = n.is_multiple_of(2);
            let (preferred, other) = if spin_even_is_q_even { (even, odd) } else { (odd, even) };
            if other.energy < preferred.energy - 1e-10 {
                other
            } else {
                preferred
            }
        }
    };
    let degenerate = sol.modes.first().is_some_and(|&e| e < ZERO_MODE_TOL);
    MajoranaCorrelations { g: sol.g, energy: sol.energy, mode_energies: sol.modes, degenerate }
}

impl MajoranaCorrelations {
    pub fn n_sites(&self) -> usize {
        self.g.nrows()
    }

    fn string_det(&self, rows: usize, cols: usize, len: usize) -> f64 {
        let sign = if len.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * self.g.view((rows, cols), (len, len)).determinant()
    }
}

/// `⟨σ^a_i σ^b_j⟩` from Wick contractions.
pub fn pauli_correlator(g: &MajoranaCorrelations, a: Axis, i: usize, b: Axis, j: usize) -> Result<Measured> {
    check_pair(g.n_sites(), i, j)?;
    let (a, i, b, j) = if i < j { (a, i, b, j) } else { (b, j, a, i) };
    let r = j - i;
    let m = &g.g;
    let value = match (a, b) {
        (Axis::Z, Axis::Z) => m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)],
        (Axis::X, Axis::X) => g.string_det(i, i + 1, r),
        (Axis::Y, Axis::Y) => g.string_det(i + 1, i, r),
        // x/y cross terms vanish for a real state, x/z and y/z by parity.
        _ => return Ok(Measured::symmetry_zero()),
    };
    Ok(Measured::computed(value))
}

pub fn pauli_magnetization(g: &MajoranaCorrelations, a: Axis, i: usize) -> Result<Measured> {
    check_site(g.n_sites(), i)?;
    Ok(match a {
        Axis::Z => Measured::computed(-g.g[(i, i)]),
        _ => Measured::symmetry_zero(),
    })
}

/// Ground state handle backed by the free-fermion solution.
#[derive(Clone, Debug)]
pub struct FreeFermionGroundState {
    pub correlations: MajoranaCorrelations,
}

impl FreeFermionGroundState {
    pub fn solve(bonds: &BondTable, gamma: f64) -> Result<Self> {
        let m = bdg_build(bonds, gamma)?;
        Ok(Self { correlations: ground_correlations(&m) })
    }
}

impl GroundStateHandle for FreeFermionGroundState {
    fn n_sites(&self) -> usize {
        self.correlations.n_sites()
    }

    fn energy(&self) -> f64 {
        self.correlations.energy
    }

    fn solver_name(&self) -> &'static str {
        "free_fermion"
    }

    fn magnetization(&self, a: Axis, i: usize) -> Result<Measured> {
        pauli_magnetization(&self.correlations, a, i)
    }

    fn correlator(&self, a: Axis, i: usize, b: Axis, j: usize) -> Result<Measured> {
        pauli_correlator(&self.correlations, a, i, b, j)
    }
}
