//! Lowest eigenpairs of Hermitian operators: dense diagonalisation for small
//! dimensions, thick-restart Lanczos with full reorthogonalisation and
//! locking otherwise.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::krylov::{axpy, dot, norm};
use crate::error::{Error, Result};
use crate::hamiltonian::{SparseOperator, C64};

pub const DENSE_THRESHOLD: usize = 2000;
pub const EIGEN_RESIDUAL: f64 = 1e-8;

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub subspace: usize,
    pub keep: usize,
    pub max_restarts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            subspace: 60,
            keep: 12,
            max_restarts: 2000,
            tol: EIGEN_RESIDUAL,
            seed: 7,
        }
    }
}

/// Eigenvalues ascending with eigenvectors as columns.
pub(crate) fn dense_eigh(h: &SparseOperator) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(h.to_dense());
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(h.dim(), h.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub fn residual(h: &SparseOperator, e: f64, v: &[C64]) -> Result<f64> {
    let mut hv = h.apply(v)?;
    axpy(C64::new(-e, 0.0), v, &mut hv);
    Ok(norm(&hv))
}

/// `k` lowest eigenpairs, eigenvalues nondecreasing, vectors orthonormal.
pub fn lowest_eigenpairs(h: &SparseOperator, k: usize, opts: &LanczosOptions) -> Result<Vec<(f64, Vec<C64>)>> {
    let dim = h.dim();
    if k == 0 {
        return Ok(Vec::new());
    }
    if k > dim {
        return Err(Error::InvalidArgument(format!("asked for {k} eigenpairs of a {dim}-dimensional operator")));
    }
    h.ensure_hermitian(1e-10 * (1.0 + h.norm_inf()))?;
    if dim <= DENSE_THRESHOLD {
        let (vals, vecs) = dense_eigh(h);
        return Ok((0..k)
            .map(|c| (vals[c], vecs.column(c).iter().copied().collect()))
            .collect());
    }
    let mut locked: Vec<(f64, Vec<C64>)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while locked.len() < k {
        let start: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let pair = lowest_in_complement(h, &locked, start, opts)?;
        locked.push(pair);
    }
    locked.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(locked)
}

fn orthogonalize(w: &mut [C64], against: impl Iterator<Item = impl AsRef<[C64]>> + Clone) {
    for _ in 0..2 {
        for q in against.clone() {
            let c = dot(q.as_ref(), w);
            axpy(-c, q.as_ref(), w);
        }
    }
}

/// Thick-restart Lanczos for the lowest eigenpair of `h` on the orthogonal
/// complement of `locked`.
fn lowest_in_complement(
    h: &SparseOperator,
    locked: &[(f64, Vec<C64>)],
    mut start: Vec<C64>,
    opts: &LanczosOptions,
) -> Result<(f64, Vec<C64>)> {
    let dim = h.dim();
    let free = dim - locked.len();
    let m = opts.subspace.clamp(2, free.max(2)).min(free);
    let keep = opts.keep.clamp(1, m.saturating_sub(1).max(1));
    let hscale = 1.0 + h.norm_inf();

    orthogonalize(&mut start, locked.iter().map(|p| &p.1));
    let n0 = norm(&start);
    let mut basis: Vec<Vec<C64>> = vec![start.iter().map(|z| z / n0).collect()];
    // projected matrix, grown column by column
    let mut g = DMatrix::<C64>::zeros(m, m);
    let mut best_res = f64::INFINITY;
    let mut w = vec![C64::new(0.0, 0.0); dim];

    for _restart in 0..opts.max_restarts {
        let mut pending: Option<Vec<C64>> = None;
        let mut pending_beta = 0.0;
        let mut j = basis.len() - 1;
        loop {
            h.apply_into(&basis[j], &mut w)?;
            for i in 0..basis.len() {
                let c = dot(&basis[i], &w);
                g[(i, j)] = c;
                g[(j, i)] = c.conj();
            }
            orthogonalize(&mut w, basis.iter().chain(locked.iter().map(|p| &p.1)));
            let b = norm(&w);
            if basis.len() == m || b <= 1e-12 * hscale {
                if b > 1e-12 * hscale {
                    pending = Some(w.iter().map(|z| z / b).collect());
                    pending_beta = b;
                }
                break;
            }
            g[(j + 1, j)] = C64::new(b, 0.0);
            g[(j, j + 1)] = C64::new(b, 0.0);
            basis.push(w.iter().map(|z| z / b).collect());
            j += 1;
        }
        let size = basis.len();
        let sub = g.view((0, 0), (size, size)).into_owned();
        let sub = (&sub + sub.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(sub);
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let y0 = eig.eigenvectors.column(order[0]);
        let est = pending_beta * y0[size - 1].norm();

        let ritz = |c: usize| -> Vec<C64> {
            let y = eig.eigenvectors.column(order[c]);
            let mut v = vec![C64::new(0.0, 0.0); dim];
            for (q, &yc) in basis.iter().zip(y.iter()) {
                axpy(yc, q, &mut v);
            }
            v
        };

        if est <= 0.1 * opts.tol || pending.is_none() {
            let mut v = ritz(0);
            orthogonalize(&mut v, locked.iter().map(|p| &p.1));
            let nv = norm(&v);
            v.iter_mut().for_each(|z| *z /= nv);
            let e = dot(&v, &h.apply(&v)?).re;
            let r = residual(h, e, &v)?;
            best_res = best_res.min(r);
            if r <= opts.tol {
                return Ok((e, v));
            }
        }
        let Some(next) = pending else {
            return Err(Error::NonConvergence {
                what: "lanczos eigensolver",
                residual: best_res,
            });
        };

        // thick restart: keep the lowest Ritz vectors, then the pending vector
        let p = keep.min(size - 1).max(1);
        let kept: Vec<Vec<C64>> = (0..p).map(ritz).collect();
        g.fill(C64::new(0.0, 0.0));
        for c in 0..p {
            g[(c, c)] = C64::new(eig.eigenvalues[order[c]], 0.0);
            let s = eig.eigenvectors[(size - 1, order[c])] * pending_beta;
            g[(p, c)] = s;
            g[(c, p)] = s.conj();
        }
        basis = kept;
        basis.push(next);
    }
    Err(Error::NonConvergence {
        what: "lanczos eigensolver",
        residual: best_res,
    })
}
