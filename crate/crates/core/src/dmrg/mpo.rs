//! Finite-state-machine matrix product operators for Pauli term lists.
//!
//! Channel 0 means "nothing placed yet" and the last channel "term
//! complete". For every operator that opens a two-site term there is a
//! channel for it having been placed one site back and, when the list
//! has next-nearest-neighbour terms, another for two sites back. All
//! operators are real: `σy` is carried as `iσy` and the coefficient of a
//! `σy σy` product absorbs the resulting sign.

use crate::error::{Error, Result};
use crate::model::{Axis, Boundary, TermList};

/// Real 2×2 operator `[[a, b], [c, d]]` acting as `⟨s|O|t⟩ = m[s][t]`.
pub type Op = [[f64; 2]; 2];

pub const IDENTITY: Op = [[1.0, 0.0], [0.0, 1.0]];

/// Real form of a Pauli operator: `σx`, `iσy`, `σz`.
pub fn real_pauli(a: Axis) -> Op {
    match a {
        Axis::X => [[0.0, 1.0], [1.0, 0.0]],
        Axis::Y => [[0.0, 1.0], [-1.0, 0.0]],
        Axis::Z => [[1.0, 0.0], [0.0, -1.0]],
    }
}

fn scaled(op: Op, c: f64) -> Op {
    [[c * op[0][0], c * op[0][1]], [c * op[1][0], c * op[1][1]]]
}

fn add(a: &mut Op, b: Op) {
    for s in 0..2 {
        for t in 0..2 {
            a[s][t] += b[s][t];
        }
    }
}

/// One site of the MPO: a `wl × wr` grid of optional 2×2 operators.
#[derive(Clone, Debug)]
pub struct MpoSite {
    pub wl: usize,
    pub wr: usize,
    /// Row-major over `(left channel, right channel)`.
    pub ops: Vec<Option<Op>>,
}

impl MpoSite {
    fn new(wl: usize, wr: usize) -> Self {
        Self { wl, wr, ops: vec![None; wl * wr] }
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&Op> {
        self.ops[a * self.wr + b].as_ref()
    }

    fn accumulate(&mut self, a: usize, b: usize, op: Op) {
        match &mut self.ops[a * self.wr + b] {
            Some(existing) => add(existing, op),
            slot => *slot = Some(op),
        }
    }

    /// Nonzero entries as `(left, right, op)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Op)> {
        self.ops.iter().enumerate().filter_map(move |(k, o)| o.as_ref().map(|op| (k / self.wr, k % self.wr, op)))
    }
}

#[derive(Clone, Debug)]
pub struct Mpo {
    pub sites: Vec<MpoSite>,
    /// Channel that closes a complete term.
    pub final_channel: usize,
    /// Every term commutes with `∏σz`.
    pub conserves_parity: bool,
}

impl Mpo {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn width(&self) -> usize {
        self.final_channel + 1
    }

    /// Expectation value on a product of normalized real single-site states.
    pub fn product_expectation(&self, states: &[[f64; 2]]) -> f64 {
        let mut v = vec![0.0; self.width()];
        v[0] = 1.0;
        for (site, psi) in self.sites.iter().zip(states) {
            let mut next = vec![0.0; self.width()];
            for (a, b, op) in site.entries() {
                let m: f64 = (0..2).flat_map(|s| (0..2).map(move |t| psi[s] * op[s][t] * psi[t])).sum();
                next[b] += v[a] * m;
            }
            v = next;
        }
        v[self.final_channel]
    }

    /// Dense matrix, site 0 most significant. Small chains only.
    pub fn to_dense(&self) -> Result<nalgebra::DMatrix<f64>> {
        let n = self.n_sites();
        if n > 12 {
            return Err(Error::Capability(format!("dense expansion of a {n}-site MPO")));
        }
        let w = self.width();
        // blocks[c] is the operator accumulated in channel c so far.
        let mut blocks: Vec<Option<nalgebra::DMatrix<f64>>> = vec![None; w];
        blocks[0] = Some(nalgebra::DMatrix::from_element(1, 1, 1.0));
        for site in &self.sites {
            let mut next: Vec<Option<nalgebra::DMatrix<f64>>> = vec![None; w];
            for (a, b, op) in site.entries() {
                if let Some(m) = &blocks[a] {
                    let o = nalgebra::DMatrix::from_fn(2, 2, |s, t| op[s][t]);
                    let k = m.kronecker(&o);
                    match &mut next[b] {
                        Some(acc) => *acc += k,
                        slot => *slot = Some(k),
                    }
                }
            }
            blocks = next;
        }
        let dim = 1usize << n;
        Ok(blocks[self.final_channel].take().unwrap_or_else(|| nalgebra::DMatrix::zeros(dim, dim)))
    }
}

pub fn mpo_build(terms: &TermList) -> Result<Mpo> {
    terms.validate()?;
    if terms.boundary == Boundary::Periodic {
        return Err(Error::Capability(
            "dmrg handles open chains only; use the exact solver for periodic boundaries".into(),
        ));
    }
    if !terms.is_real() {
        return Err(Error::Capability("dmrg requires a real Hamiltonian".into()));
    }
    let n = terms.n_sites;
    let mut openers: Vec<Axis> = Vec::new();
    let mut has_range_two = false;
    for t in &terms.terms {
        if let [(i, a), (j, _)] = t.ops.as_slice() {
            if j - i > 2 {
                return Err(Error::Capability(format!("term on sites ({i}, {j}) has range above two")));
            }
            has_range_two |= j - i == 2;
            if !openers.contains(a) {
                openers.push(*a);
            }
        }
    }
    openers.sort();
    let hops = if has_range_two { 2 } else { 1 };
    let channel = |a: Axis, hop: usize| -> usize {
        1 + openers.iter().position(|&x| x == a).expect("registered opener") * hops + (hop - 1)
    };
    let fin = 1 + openers.len() * hops;
    let w = fin + 1;

    let mut sites: Vec<MpoSite> = (0..n).map(|_| MpoSite::new(w, w)).collect();
    for site in sites.iter_mut() {
        site.accumulate(0, 0, IDENTITY);
        site.accumulate(fin, fin, IDENTITY);
        for &a in &openers {
            site.accumulate(0, channel(a, 1), real_pauli(a));
            if hops == 2 {
                site.accumulate(channel(a, 1), channel(a, 2), IDENTITY);
            }
        }
    }
    for t in &terms.terms {
        let sign = if t.y_count() == 2 { -1.0 } else { 1.0 };
        match t.ops.as_slice() {
            [(i, a)] => sites[*i].accumulate(0, fin, scaled(real_pauli(*a), t.coeff)),
            [(i, a), (j, b)] => sites[*j].accumulate(channel(*a, j - i), fin, scaled(real_pauli(*b), sign * t.coeff)),
            _ => unreachable!("validated term list"),
        }
    }
    Ok(Mpo { sites, final_channel: fin, conserves_parity: terms.commutes_with_parity() })
}
