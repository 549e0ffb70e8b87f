//! Lanczos-Krylov approximation of `exp(−iHt) v` for Hermitian `H`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::hamiltonian::{SparseOperator, C64};

pub const DEFAULT_KRYLOV_DIM: usize = 30;
pub const DEFAULT_LOCAL_TOLERANCE: f64 = 1e-10;

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// One Lanczos tridiagonalisation: basis vectors, diagonal, off-diagonal and
/// the norm of the next (unused) residual.
struct Lanczos {
    basis: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    beta_next: f64,
}

fn lanczos(h: &SparseOperator, v: &[C64], m: usize, breakdown: f64) -> Result<Lanczos> {
    let nv = norm(v);
    let mut basis = vec![v.iter().map(|z| z / nv).collect::<Vec<C64>>()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![C64::new(0.0, 0.0); v.len()];
    loop {
        let j = basis.len() - 1;
        h.apply_into(&basis[j], &mut w)?;
        let a = dot(&basis[j], &w).re;
        axpy(C64::new(-a, 0.0), &basis[j], &mut w);
        if j > 0 {
            axpy(C64::new(-beta[j - 1], 0.0), &basis[j - 1], &mut w);
        }
        // one pass of local reorthogonalisation against the last two vectors
        for q in basis.iter().rev().take(2) {
            let c = dot(q, &w);
            axpy(-c, q, &mut w);
        }
        alpha.push(a);
        let b = norm(&w);
        if basis.len() == m || b <= breakdown {
            return Ok(Lanczos {
                basis,
                alpha,
                beta,
                beta_next: b,
            });
        }
        beta.push(b);
        basis.push(w.iter().map(|z| z / b).collect());
    }
}

/// `exp(−iτT) e₁` for the tridiagonal `T`.
fn small_expm(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<C64> {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    (0..k)
        .map(|r| {
            (0..k)
                .map(|c| C64::from_polar(q[(r, c)] * q[(0, c)], -tau * eig.eigenvalues[c]))
                .sum()
        })
        .collect()
}

/// `exp(−iHt) v` by adaptive Krylov steps. Each step is accepted when the
/// a-posteriori error estimate `β_m |[exp(−iτT)e₁]_m| ‖v‖` is below
/// `tol · τ / t`.
pub fn expv(h: &SparseOperator, v: &[C64], t: f64, m: usize, tol: f64) -> Result<Vec<C64>> {
    if v.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: v.len(),
        });
    }
    let mut w = v.to_vec();
    if t == 0.0 || norm(v) == 0.0 {
        return Ok(w);
    }
    let sign = t.signum();
    let t_abs = t.abs();
    let hnorm = h.norm_inf().max(f64::MIN_POSITIVE);
    let m = m.clamp(1, h.dim());
    let mut done = 0.0;
    let mut tau = t_abs.min(m as f64 / hnorm);
    while done < t_abs {
        tau = tau.min(t_abs - done);
        let nw = norm(&w);
        let lz = lanczos(h, &w, m, 1e-13 * hnorm)?;
        let happy = lz.beta_next <= 1e-13 * hnorm;
        let mut attempts = 0;
        let y = loop {
            let y = small_expm(&lz.alpha, &lz.beta, sign * tau);
            let err = if happy {
                0.0
            } else {
                lz.beta_next * y.last().map_or(0.0, |z| z.norm()) * nw
            };
            let allowed = tol * tau / t_abs;
            if err <= allowed {
                // grow the next step
                let grow = if err > 0.0 { 0.9 * (allowed / err).powf(1.0 / m as f64) } else { 2.0 };
                let next = tau * grow.clamp(1.0, 2.0);
                done += tau;
                tau = next;
                break y;
            }
            attempts += 1;
            let shrink = (0.9 * (allowed / err).powf(1.0 / m as f64)).clamp(0.1, 0.9);
            tau *= shrink;
            if attempts > 60 || tau < 1e-14 * t_abs {
                return Err(Error::NonConvergence {
                    what: "krylov exponential",
                    residual: err,
                });
            }
        };
        let mut next = vec![C64::new(0.0, 0.0); w.len()];
        for (q, c) in lz.basis.iter().zip(&y) {
            axpy(c * nw, q, &mut next);
        }
        w = next;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_phases() {
        let h = SparseOperator::diagonal(&[0.0, 1.5, -2.0]);
        let v = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let out = expv(&h, &v, 0.7, 30, 1e-12).unwrap();
        assert!((out[1] - C64::from_polar(1.0, -1.5 * 0.7)).norm() < 1e-12);
        assert!(out[0].norm() < 1e-14 && out[2].norm() < 1e-14);
    }

    #[test]
    fn backwards_in_time_inverts() {
        let h = SparseOperator::from_triplets(
            3,
            vec![
                (0, 1, C64::new(0.3, 0.2)),
                (1, 0, C64::new(0.3, -0.2)),
                (1, 2, C64::new(1.0, 0.0)),
                (2, 1, C64::new(1.0, 0.0)),
                (2, 2, C64::new(-0.5, 0.0)),
            ],
        )
        .unwrap();
        let v = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let f = expv(&h, &v, 3.0, 30, 1e-12).unwrap();
        let b = expv(&h, &f, -3.0, 30, 1e-12).unwrap();
        for k in 0..3 {
            assert!((b[k] - v[k]).norm() < 1e-11);
        }
    }
}
