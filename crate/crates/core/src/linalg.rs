//! Dense symmetric eigendecomposition (cyclic Jacobi) and small helpers.

use crate::error::{Error, Result};

/// Symmetry tolerance accepted by [`symmetric_eigen`].
pub const SYMMETRY_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

impl SymmetricEigen {
    pub fn max_value(&self) -> Option<f64> {
        self.values.first().copied()
    }

    /// Rebuilds V·Λ·Vᵀ (row-major).
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.values.len();
        let mut out = vec![0.0; n * n];
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                let s = lambda * v[i];
                for j in 0..n {
                    out[i * n + j] += s * v[j];
                }
            }
        }
        out
    }
}

/// Eigendecomposition of the symmetric `n×n` row-major matrix `m`.
///
/// Cyclic Jacobi rotations until the off-diagonal mass is negligible
/// relative to the matrix norm. Accurate to a few ulps of ‖M‖ for every
/// eigenvalue, which the negative-type checks rely on.
pub fn symmetric_eigen(m: &[f64], n: usize) -> Result<SymmetricEigen> {
    assert_eq!(m.len(), n * n, "matrix buffer does not match n");
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (m[i * n + j] - m[j * n + i]).abs();
            if gap > SYMMETRY_TOL * (1.0 + scale) {
                return Err(Error::Asymmetric { i, j, gap });
            }
        }
    }

    // Work on the symmetrised copy.
    let mut a: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            0.5 * (m[i * n + j] + m[j * n + i])
        })
        .collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j] * a[i * n + j])
                .sum::<f64>()
                .sqrt();
            if off <= f64::EPSILON * 1e-2 * frob {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, n, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].total_cmp(&a[x * n + x]));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i * n + k]).collect())
        .collect();
    Ok(SymmetricEigen { values, vectors })
}

/// One Jacobi rotation zeroing `a[p][q]`; accumulates into the columns of `v`.
fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    // theta == 0 gives signum 1, t = 1
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

/// Orthonormal basis of the sum-zero subspace of ℝⁿ (Helmert contrasts),
/// returned as `n - 1` vectors of length `n`.
pub fn centred_basis(n: usize) -> Vec<Vec<f64>> {
    (1..n)
        .map(|k| {
            let norm = ((k * (k + 1)) as f64).sqrt();
            let mut q = vec![0.0; n];
            for x in q.iter_mut().take(k) {
                *x = 1.0 / norm;
            }
            q[k] = -(k as f64) / norm;
            q
        })
        .collect()
}

/// Computes `x·M·x` for a row-major `n×n` matrix by direct double loop.
pub fn quadratic_form(m: &[f64], n: usize, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[i * n + j] * x[j];
        }
        acc += x[i] * row;
    }
    acc
}
