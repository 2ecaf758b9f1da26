//! Restarted Lanczos iteration for the lowest eigenpairs of a real symmetric
//! operator given only through matrix-vector products.
//!
//! Every Krylov vector is fully reorthogonalized (two Gram-Schmidt passes)
//! against the current basis and against already-converged eigenvectors, so
//! several eigenpairs can be found one after the other by deflation.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LanczosConfig {
    /// Krylov vectors per restart cycle.
    pub krylov_dim: usize,
    /// Absolute tolerance on `‖Av - θv‖`.
    pub tol: f64,
    pub max_restarts: usize,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self { krylov_dim: 40, tol: 1e-10, max_restarts: 200 }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

const PAR_THRESHOLD: usize = 1 << 15;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() >= PAR_THRESHOLD {
        // Fixed chunking keeps the reduction order independent of thread count.
        a.par_chunks(4096)
            .zip(b.par_chunks(4096))
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
            .collect::<Vec<f64>>()
            .into_iter()
            .sum()
    } else {
        a.iter().zip(b).map(|(p, q)| p * q).sum()
    }
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    if y.len() >= PAR_THRESHOLD {
        y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += alpha * xi);
    } else {
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
    }
}

fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn orthogonalize(w: &mut [f64], against: &[Vec<f64>]) {
    for _ in 0..2 {
        for v in against {
            let c = dot(v, w);
            axpy(-c, v, w);
        }
    }
}

fn random_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect()
}

/// Lowest `count` eigenpairs of the operator `apply` on a `dim`-dimensional
/// space, in ascending order. `start` seeds the first eigenvector search.
pub fn lowest_eigenpairs<F>(
    dim: usize,
    count: usize,
    apply: F,
    start: Option<&[f64]>,
    cfg: &LanczosConfig,
) -> Result<Vec<EigenPair>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let count = count.min(dim);
    let mut found: Vec<EigenPair> = Vec::with_capacity(count);
    let mut locked: Vec<Vec<f64>> = Vec::with_capacity(count);
    for k in 0..count {
        let mut v = match (k, start) {
            (0, Some(s)) if s.len() == dim => s.to_vec(),
            _ => random_vector(dim, 0x5eed_0000 + k as u64),
        };
        orthogonalize(&mut v, &locked);
        if norm(&v) < 1e-8 {
            v = random_vector(dim, 0xdead_0000 + k as u64);
            orthogonalize(&mut v, &locked);
        }
        let (pair, converged) = lowest_deflated(dim, &apply, v, &locked, cfg)?;
        if !converged {
            return Err(Error::Solver {
                message: "Lanczos did not converge within the restart budget".into(),
                residual: pair.residual,
            });
        }
        locked.push(pair.vector.clone());
        found.push(pair);
    }
    found.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(found)
}

/// Lowest eigenpair, returning the best available approximation when the
/// restart budget runs out. The flag reports convergence.
pub fn lowest_eigenpair_best_effort<F>(
    dim: usize,
    apply: F,
    start: &[f64],
    cfg: &LanczosConfig,
) -> Result<(EigenPair, bool)>
where
    F: Fn(&[f64], &mut [f64]),
{
    lowest_deflated(dim, &apply, start.to_vec(), &[], cfg)
}

fn lowest_deflated<F>(
    dim: usize,
    apply: &F,
    mut v: Vec<f64>,
    locked: &[Vec<f64>],
    cfg: &LanczosConfig,
) -> Result<(EigenPair, bool)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let free_dim = dim - locked.len();
    let m = cfg.krylov_dim.max(2).min(free_dim);
    let mut residual = f64::INFINITY;
    let mut ax = vec![0.0; dim];
    let mut best: Option<EigenPair> = None;

    for _ in 0..=cfg.max_restarts {
        let nv = norm(&v);
        if nv == 0.0 {
            return Err(Error::Solver { message: "Lanczos start vector vanished".into(), residual });
        }
        scale(1.0 / nv, &mut v);

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut alphas = Vec::with_capacity(m);
        let mut betas: Vec<f64> = Vec::with_capacity(m);
        basis.push(v.clone());
        loop {
            let j = basis.len() - 1;
            let mut w = vec![0.0; dim];
            apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w);
            alphas.push(a);
            orthogonalize(&mut w, locked);
            orthogonalize(&mut w, &basis);
            let b = norm(&w);
            if basis.len() == m || b <= 1e-12 * a.abs().max(1.0) {
                break;
            }
            scale(1.0 / b, &mut w);
            betas.push(b);
            basis.push(w);
        }

        let k = alphas.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (imin, _) =
            eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty tridiagonal");
        let mut x = vec![0.0; dim];
        for (i, q) in basis.iter().enumerate() {
            axpy(eig.eigenvectors[(i, imin)], q, &mut x);
        }
        orthogonalize(&mut x, locked);
        let nx = norm(&x);
        scale(1.0 / nx, &mut x);

        apply(&x, &mut ax);
        let theta = dot(&x, &ax);
        let mut r = ax.clone();
        axpy(-theta, &x, &mut r);
        orthogonalize(&mut r, locked);
        residual = norm(&r);
        if residual <= cfg.tol {
            return Ok((EigenPair { value: theta, vector: x, residual }, true));
        }
        v = x.clone();
        best = Some(EigenPair { value: theta, vector: x, residual });
    }
    Ok((best.expect("at least one restart cycle"), false))
}
