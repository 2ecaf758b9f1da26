//! Real matrix product states of spin-1/2 chains.
//!
//! A site tensor `T[l, s, r]` is stored column-major with `l` fastest, at
//! offset `l + dl * (s + 2 * r)`. Its data is therefore simultaneously the
//! `dl × 2dr` left matricization and the `2dl × dr` right matricization.
//!
//! A state may carry parity labels on its bonds. Every labelled bond state
//! then has a definite `∏σz` parity for the spins on its left, every tensor
//! entry connecting labels of the wrong parity vanishes, and the state lies
//! in the parity sector given by the label of the last bond.

use nalgebra::{DMatrix, DMatrixView};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteTensor {
    pub dl: usize,
    pub dr: usize,
    pub data: Vec<f64>,
}

impl SiteTensor {
    pub fn zeros(dl: usize, dr: usize) -> Self {
        Self { dl, dr, data: vec![0.0; dl * 2 * dr] }
    }

    #[inline]
    pub fn idx(&self, l: usize, s: usize, r: usize) -> usize {
        l + self.dl * (s + 2 * r)
    }

    pub fn get(&self, l: usize, s: usize, r: usize) -> f64 {
        self.data[self.idx(l, s, r)]
    }

    /// `dl × 2dr` view with column index `s + 2r`.
    pub fn left_mat(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data, self.dl, 2 * self.dr)
    }

    /// `2dl × dr` view with row index `l + dl s`.
    pub fn right_mat(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data, 2 * self.dl, self.dr)
    }

    /// The `dl × dr` matrix at physical index `s`.
    pub fn slice(&self, s: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dl, self.dr, |l, r| self.get(l, s, r))
    }

    pub fn from_left_mat(m: &DMatrix<f64>) -> Self {
        debug_assert_eq!(m.ncols() % 2, 0);
        Self { dl: m.nrows(), dr: m.ncols() / 2, data: m.as_slice().to_vec() }
    }

    pub fn from_right_mat(m: &DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows() % 2, 0);
        Self { dl: m.nrows() / 2, dr: m.ncols(), data: m.as_slice().to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mps {
    pub tensors: Vec<SiteTensor>,
    /// Orthogonality center; sites left of it are left-canonical, sites
    /// right of it right-canonical.
    pub center: usize,
    /// `parity[k][b]` is the parity (0 even, 1 odd) of bond state `b` on the
    /// bond left of site `k`; `parity[n]` holds the sector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<Vec<Vec<u8>>>,
}

/// QR decomposition of a matrix whose entries vanish unless row and column
/// parities agree, done per parity block so that every column of `Q` has a
/// definite parity. Returns `Q`, `R` and the parities of the new columns.
fn block_qr(m: &DMatrix<f64>, rows: &[u8], cols: &[u8]) -> (DMatrix<f64>, DMatrix<f64>, Vec<u8>) {
    let mut blocks = Vec::new();
    for p in 0..2u8 {
        let ri: Vec<usize> = (0..rows.len()).filter(|&r| rows[r] == p).collect();
        let ci: Vec<usize> = (0..cols.len()).filter(|&c| cols[c] == p).collect();
        if ri.is_empty() || ci.is_empty() {
            continue;
        }
        let qr = DMatrix::from_fn(ri.len(), ci.len(), |r, c| m[(ri[r], ci[c])]).qr();
        blocks.push((p, ri, ci, qr.q(), qr.r()));
    }
    let k: usize = blocks.iter().map(|b| b.3.ncols()).sum();
    let mut q = DMatrix::zeros(m.nrows(), k);
    let mut r = DMatrix::zeros(k, m.ncols());
    let mut labels = Vec::with_capacity(k);
    for (p, ri, ci, qb, rb) in blocks {
        for c in 0..qb.ncols() {
            let col = labels.len();
            for (a, &row) in ri.iter().enumerate() {
                q[(row, col)] = qb[(a, c)];
            }
            for (b, &cc) in ci.iter().enumerate() {
                r[(col, cc)] = rb[(c, b)];
            }
            labels.push(p);
        }
    }
    (q, r, labels)
}

/// Parities of the rows `l + dl s` of a right matricization.
pub(crate) fn right_rows(left: &[u8]) -> Vec<u8> {
    (0..2).flat_map(|s| left.iter().map(move |&p| p ^ s)).collect()
}

/// Parities of the columns `s + 2r` of a left matricization.
pub(crate) fn left_cols(right: &[u8]) -> Vec<u8> {
    right.iter().flat_map(|&p| [p, p ^ 1]).collect()
}

impl Mps {
    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors.iter().skip(1).map(|t| t.dl).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Parity sector of a labelled state.
    pub fn sector(&self) -> Option<u8> {
        self.parity.as_ref().and_then(|p| p.last()).map(|l| l[0])
    }

    /// Product state with `bits[i] = 0` for spin up, with parity labels.
    pub fn product(bits: &[usize]) -> Self {
        let tensors = bits
            .iter()
            .map(|&b| {
                let mut t = SiteTensor::zeros(1, 1);
                t.data[b] = 1.0;
                t
            })
            .collect();
        let mut labels = vec![vec![0u8]];
        for &b in bits {
            labels.push(vec![labels.last().expect("seeded")[0] ^ (b as u8 & 1)]);
        }
        Self { tensors, center: 0, parity: Some(labels) }
    }

    fn random_with(n: usize, max_bond: usize, seed: u64, sector: Option<u8>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bond = |k: usize| -> usize {
            // Bond between sites k-1 and k.
            let lim = k.min(n - k).min(30) as u32;
            (1usize << lim).min(max_bond).max(1)
        };
        let labels: Option<Vec<Vec<u8>>> = sector.map(|p| {
            (0..=n)
                .map(|k| match k {
                    0 => vec![0],
                    k if k == n => vec![p],
                    k => (0..bond(k)).map(|b| (b % 2) as u8).collect(),
                })
                .collect()
        });
        let tensors = (0..n)
            .map(|k| {
                let (dl, dr) = (bond(k), bond(k + 1));
                let mut t = SiteTensor::zeros(dl, dr);
                for r in 0..dr {
                    for s in 0..2 {
                        for l in 0..dl {
                            let allowed = labels.as_ref().is_none_or(|p| p[k][l] ^ s as u8 == p[k + 1][r]);
                            let v = rng.gen::<f64>() - 0.5;
                            if allowed {
                                let i = t.idx(l, s, r);
                                t.data[i] = v;
                            }
                        }
                    }
                }
                t
            })
            .collect();
        let mut mps = Self { tensors, center: n - 1, parity: labels };
        mps.move_center(0);
        let norm = mps.norm();
        mps.tensors[0].data.iter_mut().for_each(|v| *v /= norm);
        mps
    }

    /// Random state in right-canonical form (center at site 0) with bond
    /// dimensions capped by `max_bond`.
    pub fn random(n: usize, max_bond: usize, seed: u64) -> Self {
        Self::random_with(n, max_bond, seed, None)
    }

    /// Random labelled state in parity sector `sector` (0 even, 1 odd),
    /// right-canonical with the center at site 0.
    pub fn random_in_sector(n: usize, max_bond: usize, seed: u64, sector: u8) -> Self {
        Self::random_with(n, max_bond, seed, Some(sector & 1))
    }

    /// Shifts the orthogonality center with QR decompositions, blockwise
    /// in parity for a labelled state.
    pub fn move_center(&mut self, target: usize) {
        while self.center < target {
            let k = self.center;
            let m = self.tensors[k].right_mat().into_owned();
            let (q, r) = match &mut self.parity {
                Some(p) => {
                    let (q, r, labels) = block_qr(&m, &right_rows(&p[k]), &p[k + 1]);
                    p[k + 1] = labels;
                    (q, r)
                }
                None => {
                    let qr = m.qr();
                    (qr.q(), qr.r())
                }
            };
            self.tensors[k] = SiteTensor::from_right_mat(&q);
            let next = &r * self.tensors[k + 1].left_mat();
            self.tensors[k + 1] = SiteTensor::from_left_mat(&next);
            self.center += 1;
        }
        while self.center > target {
            let k = self.center;
            // LQ of the left matricization via QR of its transpose.
            let m = self.tensors[k].left_mat().transpose();
            let (q, r) = match &mut self.parity {
                Some(p) => {
                    let (q, r, labels) = block_qr(&m, &left_cols(&p[k + 1]), &p[k]);
                    p[k] = labels;
                    (q, r)
                }
                None => {
                    let qr = m.qr();
                    (qr.q(), qr.r())
                }
            };
            self.tensors[k] = SiteTensor::from_left_mat(&q.transpose());
            let prev = self.tensors[k - 1].right_mat() * r.transpose();
            self.tensors[k - 1] = SiteTensor::from_right_mat(&prev);
            self.center -= 1;
        }
    }

    /// Left environment of the identity: `E ↦ Σ_s A_sᵀ E A_s`.
    pub(crate) fn transfer(e: &DMatrix<f64>, t: &SiteTensor) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(t.dr, t.dr);
        for s in 0..2 {
            let a = t.slice(s);
            out += a.transpose() * e * &a;
        }
        out
    }

    pub fn norm_sq(&self) -> f64 {
        let mut e = DMatrix::from_element(1, 1, 1.0);
        for t in &self.tensors {
            e = Self::transfer(&e, t);
        }
        e[(0, 0)]
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Dense amplitudes with site 0 as the most significant bit.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let n = self.n_sites();
        if n > 20 {
            return Err(Error::Capability(format!("dense expansion of a {n}-site MPS")));
        }
        // rows: basis states of sites so far, cols: right bond.
        let mut acc = DMatrix::from_element(1, 1, 1.0);
        for t in &self.tensors {
            let rows = acc.nrows();
            let mut next = DMatrix::zeros(rows * 2, t.dr);
            for s in 0..2 {
                let block = &acc * t.slice(s);
                for r in 0..rows {
                    next.row_mut(2 * r + s).copy_from(&block.row(r));
                }
            }
            acc = next;
        }
        Ok(acc.column(0).iter().copied().collect())
    }

    /// Reduced density matrix of sites `i < j` as a 4×4 real matrix in the
    /// basis `|s_i s_j⟩`, normalized by the state norm.
    pub fn two_site_rdm(&self, i: usize, j: usize) -> [[f64; 4]; 4] {
        debug_assert!(i < j && j < self.n_sites());
        let mut left = DMatrix::from_element(1, 1, 1.0);
        for t in &self.tensors[..i] {
            left = Self::transfer(&left, t);
        }
        let mut right = DMatrix::from_element(1, 1, 1.0);
        for t in self.tensors[j + 1..].iter().rev() {
            right = Self::transfer_right(&right, t);
        }
        let ti = &self.tensors[i];
        let tj = &self.tensors[j];
        let mut rho = [[0.0; 4]; 4];
        for s in 0..2 {
            for sp in 0..2 {
                // Bra index s, ket index sp on site i.
                let mut m = ti.slice(s).transpose() * &left * ti.slice(sp);
                for t in &self.tensors[i + 1..j] {
                    m = Self::transfer(&m, t);
                }
                for u in 0..2 {
                    for up in 0..2 {
                        let v = (tj.slice(u).transpose() * &m * tj.slice(up)).component_mul(&right).sum();
                        rho[2 * s + u][2 * sp + up] = v;
                    }
                }
            }
        }
        let tr: f64 = (0..4).map(|k| rho[k][k]).sum();
        for row in rho.iter_mut() {
            for v in row.iter_mut() {
                *v /= tr;
            }
        }
        rho
    }

    /// Single-site reduced density matrix.
    pub fn one_site_rdm(&self, i: usize) -> [[f64; 2]; 2] {
        let mut left = DMatrix::from_element(1, 1, 1.0);
        for t in &self.tensors[..i] {
            left = Self::transfer(&left, t);
        }
        let mut right = DMatrix::from_element(1, 1, 1.0);
        for t in self.tensors[i + 1..].iter().rev() {
            right = Self::transfer_right(&right, t);
        }
        let t = &self.tensors[i];
        let mut rho = [[0.0; 2]; 2];
        for s in 0..2 {
            for sp in 0..2 {
                rho[s][sp] = (t.slice(s).transpose() * &left * t.slice(sp)).component_mul(&right).sum();
            }
        }
        let tr = rho[0][0] + rho[1][1];
        for row in rho.iter_mut() {
            for v in row.iter_mut() {
                *v /= tr;
            }
        }
        rho
    }

    /// Right environment of the identity: `E ↦ Σ_s A_s E A_sᵀ`.
    pub(crate) fn transfer_right(e: &DMatrix<f64>, t: &SiteTensor) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(t.dl, t.dl);
        for s in 0..2 {
            let a = t.slice(s);
            out += &a * e * a.transpose();
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        if n < 2 {
            return Err(Error::Config("MPS needs at least two sites".into()));
        }
        if self.center >= n {
            return Err(Error::Config(format!("center {} out of range", self.center)));
        }
        for (k, t) in self.tensors.iter().enumerate() {
            if t.data.len() != t.dl * 2 * t.dr {
                return Err(Error::Config(format!("site {k}: tensor data length does not match its shape")));
            }
            let dl_expected = if k == 0 { 1 } else { self.tensors[k - 1].dr };
            if t.dl != dl_expected || (k == n - 1 && t.dr != 1) {
                return Err(Error::Config(format!("site {k}: bond dimensions do not chain")));
            }
        }
        if let Some(p) = &self.parity {
            let dims_ok = p.len() == n + 1
                && p[0] == [0]
                && p[n].len() == 1
                && (0..n).all(|k| p[k].len() == self.tensors[k].dl)
                && p.iter().flatten().all(|&b| b < 2);
            if !dims_ok {
                return Err(Error::Config("parity labels do not match the bond dimensions".into()));
            }
        }
        Ok(())
    }
}
