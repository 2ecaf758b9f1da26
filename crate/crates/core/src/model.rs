//! Alternating XY chain with nearest and next-nearest neighbour couplings.
//!
//! The Hamiltonian is
//!
//! ```text
//! H = - Σ_{i,j} J_ij [ (1+γ)/2 σx_i σx_j + (1-γ)/2 σy_i σy_j ] - Σ_i h_i σz_i
//! ```
//!
//! where the pairs `(i, j)` run over nearest-neighbour bonds, whose couplings
//! alternate between `J1 = J` and `J2 = αJ`, and next-nearest-neighbour
//! bonds, all carrying `J3 = κJ`. The transverse field alternates between
//! `h` and `βh` from site to site.
//!
//! Energies are measured in units of `J = 1` and the field magnitude is set
//! by the reduced coupling `λ` as `h = J/λ`, which puts the critical point of
//! the uniform transverse Ising chain at `λ = 1`.
//!
//! Sites are 0-based throughout the library. The coupling pattern is phrased
//! in terms of the 1-based labels used in the physics literature: bond
//! `(2i-1, 2i)` carries `J1` and site `2i-1` carries `h`, which in 0-based
//! terms means bonds and fields starting at an even site index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Component of a Pauli operator.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Whether this operator anticommutes with the global parity `∏ σz`.
    pub fn flips_parity(self) -> bool {
        !matches!(self, Axis::Z)
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Which sublattice carries the reduced field `βh`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldParity {
    /// Odd (1-based) sites carry `h`, even sites carry `βh`.
    #[default]
    Standard,
    /// Odd sites carry `βh`, even sites carry `h`.
    Swapped,
}

/// Physical parameters of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub gamma: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub n_sites: usize,
    pub boundary: Boundary,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { gamma: 1.0, lambda: 1.0, alpha: 1.0, beta: 1.0, kappa: 0.0, n_sites: 12, boundary: Boundary::Open }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.gamma, self.lambda, self.alpha, self.beta, self.kappa].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        if self.n_sites < 2 {
            return Err(Error::Config(format!("n_sites must be at least 2, got {}", self.n_sites)));
        }
        if self.boundary == Boundary::Periodic {
            if self.n_sites < 3 {
                return Err(Error::Config("a periodic chain needs at least 3 sites".into()));
            }
            if self.kappa != 0.0 && self.n_sites < 5 {
                return Err(Error::Config(
                    "a periodic chain with next-nearest-neighbour terms needs at least 5 sites".into(),
                ));
            }
        }
        if self.lambda <= 0.0 {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }

    /// Field magnitude `h` on the unreduced sublattice.
    pub fn field(&self) -> f64 {
        1.0 / self.lambda
    }

    /// Sets the parameter called `name` (`lambda`, `alpha`, `beta`, `kappa`, `gamma`).
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "lambda" => self.lambda = value,
            "alpha" => self.alpha = value,
            "beta" => self.beta = value,
            "kappa" => self.kappa = value,
            "gamma" => self.gamma = value,
            _ => return Err(Error::Config(format!("unknown model parameter '{name}'"))),
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondTable {
    pub n_sites: usize,
    pub boundary: Boundary,
    pub nn: Vec<Bond>,
    pub nnn: Vec<Bond>,
    /// Field `h_i` on every site, indexed by site.
    pub fields: Vec<f64>,
}

impl BondTable {
    pub fn has_nnn(&self) -> bool {
        self.nnn.iter().any(|b| b.coupling != 0.0)
    }
}

pub fn build_couplings(params: &ModelParams) -> Result<BondTable> {
    build_couplings_with(params, FieldParity::Standard)
}

pub fn build_couplings_with(params: &ModelParams, parity: FieldParity) -> Result<BondTable> {
    params.validate()?;
    let n = params.n_sites;
    let periodic = params.boundary == Boundary::Periodic;
    let j1 = 1.0;
    let j2 = params.alpha * j1;
    let j3 = params.kappa * j1;

    let nn_count = if periodic { n } else { n - 1 };
    let nn = (0..nn_count).map(|i| Bond { i, j: (i + 1) % n, coupling: if i % 2 == 0 { j1 } else { j2 } }).collect();

    let nnn = if j3 == 0.0 {
        Vec::new()
    } else {
        let count = if periodic { n } else { n - 2 };
        (0..count).map(|i| Bond { i, j: (i + 2) % n, coupling: j3 }).collect()
    };

    let h = params.field();
    let (even_site, odd_site) = match parity {
        FieldParity::Standard => (h, params.beta * h),
        FieldParity::Swapped => (params.beta * h, h),
    };
    let fields = (0..n).map(|i| if i % 2 == 0 { even_site } else { odd_site }).collect();

    Ok(BondTable { n_sites: n, boundary: params.boundary, nn, nnn, fields })
}

/// One Pauli string with a real coefficient. Operators are sorted by site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: f64,
    pub ops: Vec<(usize, Axis)>,
}

impl PauliTerm {
    pub fn new(coeff: f64, mut ops: Vec<(usize, Axis)>) -> Self {
        ops.sort_by_key(|&(site, _)| site);
        Self { coeff, ops }
    }

    /// Number of `σy` factors; odd counts give an imaginary operator.
    pub fn y_count(&self) -> usize {
        self.ops.iter().filter(|(_, a)| *a == Axis::Y).count()
    }

    pub fn commutes_with_parity(&self) -> bool {
        self.ops.iter().filter(|(_, a)| a.flips_parity()).count() % 2 == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermList {
    pub n_sites: usize,
    pub boundary: Boundary,
    pub terms: Vec<PauliTerm>,
}

impl TermList {
    /// Checks the structural invariants: every term touches one or two
    /// distinct in-range sites, at chain distance one or two.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites;
        for term in &self.terms {
            if !term.coeff.is_finite() {
                return Err(Error::Config("term coefficient is not finite".into()));
            }
            match term.ops.as_slice() {
                [(i, _)] if *i < n => {}
                [(i, _), (j, _)] if *i < *j && *j < n => {
                    let d = j - i;
                    let wrapped = n - d;
                    let ok = d <= 2 || (self.boundary == Boundary::Periodic && wrapped <= 2);
                    if !ok {
                        return Err(Error::Config(format!(
                            "term on sites ({i}, {j}) exceeds next-nearest-neighbour range"
                        )));
                    }
                }
                _ => {
                    return Err(Error::Config(format!(
                        "malformed term {:?}: need one or two distinct in-range sites",
                        term.ops
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn commutes_with_parity(&self) -> bool {
        self.terms.iter().all(PauliTerm::commutes_with_parity)
    }

    /// Whether every term is a real matrix in the σz basis.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.y_count() % 2 == 0)
    }
}

pub fn hamiltonian_terms(bonds: &BondTable, gamma: f64) -> Result<TermList> {
    let n = bonds.n_sites;
    if bonds.fields.len() != n {
        return Err(Error::Config(format!("field table has {} entries for {} sites", bonds.fields.len(), n)));
    }
    let xx = (1.0 + gamma) / 2.0;
    let yy = (1.0 - gamma) / 2.0;
    let mut terms = Vec::new();
    for bond in bonds.nn.iter().chain(&bonds.nnn) {
        if bond.i >= n || bond.j >= n || bond.i == bond.j {
            return Err(Error::Config(format!("bond ({}, {}) is not on the chain", bond.i, bond.j)));
        }
        terms.push(PauliTerm::new(-xx * bond.coupling, vec![(bond.i, Axis::X), (bond.j, Axis::X)]));
        if gamma != 1.0 {
            terms.push(PauliTerm::new(-yy * bond.coupling, vec![(bond.i, Axis::Y), (bond.j, Axis::Y)]));
        }
    }
    for (i, &h) in bonds.fields.iter().enumerate() {
        terms.push(PauliTerm::new(-h, vec![(i, Axis::Z)]));
    }
    let list = TermList { n_sites: n, boundary: bonds.boundary, terms };
    list.validate()?;
    Ok(list)
}

/// Builds the term list for a parameter point in one step.
pub fn model_terms(params: &ModelParams, parity: FieldParity) -> Result<TermList> {
    let bonds = build_couplings_with(params, parity)?;
    hamiltonian_terms(&bonds, params.gamma)
}
