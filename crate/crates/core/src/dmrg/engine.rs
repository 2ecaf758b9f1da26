//! Two-site DMRG sweeps.

use log::debug;
use nalgebra::{DMatrix, DMatrixView};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::mpo::{Mpo, MpoSite};
use super::mps::{left_cols, right_rows, Mps, SiteTensor};
use super::{DmrgConfig, DmrgDiagnostics};
use crate::error::{Error, Result};
use crate::lanczos::{self, LanczosConfig};

/// Environment blocks per MPO channel, `bra bond × ket bond`.
type Env = Vec<Option<DMatrix<f64>>>;

fn left_boundary(w: usize) -> Env {
    let mut e = vec![None; w];
    e[0] = Some(DMatrix::from_element(1, 1, 1.0));
    e
}

fn right_boundary(w: usize, fin: usize) -> Env {
    let mut e = vec![None; w];
    e[fin] = Some(DMatrix::from_element(1, 1, 1.0));
    e
}

/// `Y_{w'}[a, s, b] += Σ op[s][s'] X_w[a, s', b]` over MPO entries `(w, w')`,
/// for blocks laid out as `a + dl (s + 2 b)`.
fn apply_site_ops(
    x: &[Option<Vec<f64>>],
    site: &MpoSite,
    dl: usize,
    cols: usize,
    out_channels: usize,
    transpose_channels: bool,
) -> Vec<Option<Vec<f64>>> {
    let mut y: Vec<Option<Vec<f64>>> = vec![None; out_channels];
    for (a, b, op) in site.entries() {
        let (src, dst) = if transpose_channels { (b, a) } else { (a, b) };
        let Some(xs) = &x[src] else { continue };
        let yd = y[dst].get_or_insert_with(|| vec![0.0; dl * 2 * cols]);
        for c in 0..cols {
            for s in 0..2 {
                for sp in 0..2 {
                    let m = op[s][sp];
                    if m == 0.0 {
                        continue;
                    }
                    let from = &xs[dl * (sp + 2 * c)..dl * (sp + 2 * c + 1)];
                    let to = &mut yd[dl * (s + 2 * c)..dl * (s + 2 * c + 1)];
                    to.iter_mut().zip(from).for_each(|(t, f)| *t += m * f);
                }
            }
        }
    }
    y
}

fn update_left(env: &Env, t: &SiteTensor, site: &MpoSite) -> Env {
    let (dl, dr) = (t.dl, t.dr);
    let x: Vec<Option<Vec<f64>>> =
        env.iter().map(|e| e.as_ref().map(|m| (m * t.left_mat()).as_slice().to_vec())).collect();
    let y = apply_site_ops(&x, site, dl, dr, site.wr, false);
    let a = t.right_mat();
    y.into_iter().map(|blk| blk.map(|d| a.transpose() * DMatrixView::from_slice(&d, 2 * dl, dr))).collect()
}

fn update_right(env: &Env, t: &SiteTensor, site: &MpoSite) -> Env {
    let (dl, dr) = (t.dl, t.dr);
    let x: Vec<Option<Vec<f64>>> =
        env.iter().map(|e| e.as_ref().map(|m| (t.right_mat() * m.transpose()).as_slice().to_vec())).collect();
    let y = apply_site_ops(&x, site, dl, dr, site.wl, true);
    let b = t.left_mat();
    y.into_iter().map(|blk| blk.map(|d| b * DMatrixView::from_slice(&d, dl, 2 * dr).transpose())).collect()
}

/// Effective Hamiltonian on the two-site tensor `θ[a, s1, s2, r]` stored as
/// `a + dl (s1 + 2 (s2 + 2 r))`.
struct TwoSiteOperator<'a> {
    left: &'a Env,
    right: &'a Env,
    w1: &'a MpoSite,
    w2: &'a MpoSite,
    dl: usize,
    dr: usize,
}

impl TwoSiteOperator<'_> {
    fn dim(&self) -> usize {
        self.dl * 4 * self.dr
    }

    fn apply(&self, theta: &[f64], out: &mut [f64]) {
        let (dl, dr) = (self.dl, self.dr);
        let th = DMatrixView::from_slice(theta, dl, 4 * dr);
        let t1: Vec<Option<Vec<f64>>> =
            self.left.iter().map(|e| e.as_ref().map(|m| (m * th).as_slice().to_vec())).collect();
        // Site one: blocks of length dl, column index s2 + 2r.
        let t2 = apply_site_ops(&t1, self.w1, dl, 2 * dr, self.w1.wr, false);
        // Site two: blocks of length 2dl, column index r.
        let t3 = apply_site_ops(&t2, self.w2, 2 * dl, dr, self.w2.wr, false);
        let mut acc = DMatrix::<f64>::zeros(4 * dl, dr);
        for (blk, r) in t3.iter().zip(self.right) {
            if let (Some(d), Some(r)) = (blk, r) {
                acc.gemm(1.0, &DMatrixView::from_slice(d, 4 * dl, dr), &r.transpose(), 1.0);
            }
        }
        out.copy_from_slice(acc.as_slice());
    }
}

struct Split {
    left: SiteTensor,
    right: SiteTensor,
    truncation: f64,
    /// Parities of the new bond states for a labelled state.
    labels: Option<Vec<u8>>,
}

/// Zeroes the entries of `θ[a, s1, s2, r]` that connect bond states of
/// mismatched parity.
fn project(theta: &mut [f64], left: &[u8], right: &[u8]) {
    let dl = left.len();
    for (k, v) in theta.iter_mut().enumerate() {
        let (a, rest) = (k % dl, k / dl);
        let flip = ((rest & 1) ^ ((rest >> 1) & 1)) as u8;
        if left[a] ^ flip != right[rest / 4] {
            *v = 0.0;
        }
    }
}

/// SVD split of `θ` keeping at most `max_bond` values and discarding a
/// relative weight of at most `cutoff`. The singular values go to the
/// right tensor when `center_right`, else to the left one. With parity
/// labels of the outer bonds the decomposition runs per parity block.
fn split(
    theta: &[f64],
    dl: usize,
    dr: usize,
    max_bond: usize,
    cutoff: f64,
    center_right: bool,
    labels: Option<(&[u8], &[u8])>,
) -> Result<Split> {
    let m = DMatrix::from_column_slice(2 * dl, 2 * dr, theta);
    let (rows, cols) = match labels {
        Some((l, r)) => (right_rows(l), left_cols(r)),
        None => (vec![0; 2 * dl], vec![0; 2 * dr]),
    };
    let mut blocks = Vec::new();
    for p in 0..2u8 {
        let ri: Vec<usize> = (0..rows.len()).filter(|&r| rows[r] == p).collect();
        let ci: Vec<usize> = (0..cols.len()).filter(|&c| cols[c] == p).collect();
        if ri.is_empty() || ci.is_empty() {
            continue;
        }
        let svd = DMatrix::from_fn(ri.len(), ci.len(), |r, c| m[(ri[r], ci[c])]).svd(true, true);
        blocks.push((p, ri, ci, svd));
    }
    let mut order: Vec<(f64, usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, (.., svd))| svd.singular_values.iter().enumerate().map(move |(k, &v)| (v, b, k)))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total: f64 = order.iter().map(|o| o.0 * o.0).sum();
    if !total.is_finite() || total == 0.0 {
        return Err(Error::Solver { message: "two-site tensor vanished".into(), residual: f64::NAN });
    }
    let mut keep = order.len().min(max_bond);
    let mut discarded: f64 = order[keep..].iter().map(|o| o.0 * o.0).sum();
    while keep > 1 {
        let w = order[keep - 1].0.powi(2);
        if (discarded + w) / total > cutoff {
            break;
        }
        discarded += w;
        keep -= 1;
    }
    let norm = (total - discarded).sqrt();
    let mut ul = DMatrix::zeros(2 * dl, keep);
    let mut vr = DMatrix::zeros(keep, 2 * dr);
    let mut new_labels = Vec::with_capacity(keep);
    for (c, &(sv, b, k)) in order[..keep].iter().enumerate() {
        let (p, ri, ci, svd) = &blocks[b];
        let (u, vt) = (svd.u.as_ref().expect("u requested"), svd.v_t.as_ref().expect("v_t requested"));
        let (su, sv_) = if center_right { (1.0, sv / norm) } else { (sv / norm, 1.0) };
        for (a, &row) in ri.iter().enumerate() {
            ul[(row, c)] = su * u[(a, k)];
        }
        for (a, &col) in ci.iter().enumerate() {
            vr[(c, col)] = sv_ * vt[(k, a)];
        }
        new_labels.push(*p);
    }
    Ok(Split {
        left: SiteTensor::from_right_mat(&ul),
        right: SiteTensor::from_left_mat(&vr),
        truncation: discarded / total,
        labels: labels.map(|_| new_labels),
    })
}

fn two_site_theta(a: &SiteTensor, b: &SiteTensor) -> Vec<f64> {
    (a.right_mat() * b.left_mat()).as_slice().to_vec()
}

pub(crate) struct Outcome {
    pub mps: Mps,
    pub energy: f64,
    pub diagnostics: DmrgDiagnostics,
}

/// Sweeps from `initial`, or from a random state, within parity sector
/// `sector` when given.
pub(crate) fn run(mpo: &Mpo, cfg: &DmrgConfig, initial: Option<Mps>, sector: Option<u8>) -> Result<Outcome> {
    cfg.validate()?;
    let n = mpo.n_sites();
    if n < 2 {
        return Err(Error::Config("dmrg needs at least two sites".into()));
    }
    let bond = cfg.initial_bond.min(cfg.max_bond);
    let mut mps = match initial {
        Some(m) if m.n_sites() != n => {
            return Err(Error::Config(format!("initial state has {} sites, chain has {n}", m.n_sites())));
        }
        Some(mut m) if sector.is_none() || m.sector() == sector => {
            m.validate()?;
            m.move_center(0);
            if sector.is_none() {
                m.parity = None;
            }
            let norm = m.norm();
            m.tensors[0].data.iter_mut().for_each(|v| *v /= norm);
            m
        }
        _ => match sector {
            Some(p) => Mps::random_in_sector(n, bond, cfg.seed, p),
            None => Mps::random(n, bond, cfg.seed),
        },
    };
    let w = mpo.width();
    let fin = mpo.final_channel;

    // right[k] covers sites k..n.
    let mut right: Vec<Env> = vec![Vec::new(); n + 1];
    right[n] = right_boundary(w, fin);
    for k in (1..n).rev() {
        right[k] = update_right(&right[k + 1], &mps.tensors[k], &mpo.sites[k]);
    }
    let mut left: Vec<Env> = vec![Vec::new(); n + 1];
    left[0] = left_boundary(w);

    let lcfg = LanczosConfig { krylov_dim: cfg.krylov_dim, tol: cfg.lanczos_tol, max_restarts: cfg.lanczos_restarts };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut diag = DmrgDiagnostics::default();
    let mut previous: Option<f64> = None;

    for sweep in 0..cfg.sweeps {
        let noise = cfg.noise_schedule.get(sweep).copied().unwrap_or(0.0);
        // Noise carries weight ~noise², so keeping it below that only grows the bond.
        let cutoff = cfg.truncation_cutoff.max(noise * noise);
        let max_bond = cfg.max_bond;
        let mut energy = f64::NAN;
        let mut max_trunc: f64 = 0.0;

        let mut optimize = |i: usize, center_right: bool, mps: &mut Mps, left: &Env, right: &Env| -> Result<f64> {
            let (a, b) = (&mps.tensors[i], &mps.tensors[i + 1]);
            let op = TwoSiteOperator { left, right, w1: &mpo.sites[i], w2: &mpo.sites[i + 1], dl: a.dl, dr: b.dr };
            let start = two_site_theta(a, b);
            let (pair, converged) =
                lanczos::lowest_eigenpair_best_effort(op.dim(), |x, y| op.apply(x, y), &start, &lcfg)?;
            if !converged {
                diag.lanczos_unconverged += 1;
            }
            energy = pair.value;
            let mut theta = pair.vector;
            if noise > 0.0 {
                let scale = noise / (theta.len() as f64).sqrt();
                for v in theta.iter_mut() {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *v += scale * g;
                }
            }
            let outer = mps.parity.as_ref().map(|p| (p[i].clone(), p[i + 2].clone()));
            if let Some((l, r)) = &outer {
                project(&mut theta, l, r);
            }
            let labels = outer.as_ref().map(|(l, r)| (l.as_slice(), r.as_slice()));
            let s = split(&theta, op.dl, op.dr, max_bond, cutoff, center_right, labels)?;
            if let (Some(p), Some(l)) = (mps.parity.as_mut(), s.labels) {
                p[i + 1] = l;
            }
            mps.tensors[i] = s.left;
            mps.tensors[i + 1] = s.right;
            mps.center = if center_right { i + 1 } else { i };
            Ok(s.truncation)
        };

        for i in 0..n - 1 {
            let last = i == n - 2;
            let t = optimize(i, !last, &mut mps, &left[i], &right[i + 2])?;
            max_trunc = max_trunc.max(t);
            if last {
                right[i + 1] = update_right(&right[i + 2], &mps.tensors[i + 1], &mpo.sites[i + 1]);
            } else {
                left[i + 1] = update_left(&left[i], &mps.tensors[i], &mpo.sites[i]);
            }
        }
        for i in (0..n.saturating_sub(2)).rev() {
            let t = optimize(i, false, &mut mps, &left[i], &right[i + 2])?;
            max_trunc = max_trunc.max(t);
            right[i + 1] = update_right(&right[i + 2], &mps.tensors[i + 1], &mpo.sites[i + 1]);
        }

        debug!("sweep {sweep}: energy {energy:.14} truncation {max_trunc:.2e} bond {}", mps.max_bond());
        diag.sweep_energies.push(energy);
        diag.max_truncation.push(max_trunc);
        diag.sweeps = sweep + 1;
        let settled = noise == 0.0 && sweep + 1 >= cfg.min_sweeps;
        if let (true, Some(prev)) = (settled, previous) {
            if (energy - prev).abs() < cfg.energy_tol {
                diag.converged = true;
                break;
            }
        }
        previous = if noise == 0.0 { Some(energy) } else { None };
    }

    let norm = mps.norm();
    mps.tensors[mps.center].data.iter_mut().for_each(|v| *v /= norm);
    let energy = mpo_expectation(mpo, &mps);
    diag.bond_dims = mps.bond_dims();
    Ok(Outcome { mps, energy, diagnostics: diag })
}

/// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` by full contraction.
pub fn mpo_expectation(mpo: &Mpo, mps: &Mps) -> f64 {
    let mut env = left_boundary(mpo.width());
    for (t, site) in mps.tensors.iter().zip(&mpo.sites) {
        env = update_left(&env, t, site);
    }
    let value = env[mpo.final_channel].as_ref().map_or(0.0, |m| m[(0, 0)]);
    value / mps.norm_sq()
}
