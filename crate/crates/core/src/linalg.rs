//! Dense symmetric kernels: Jacobi eigendecomposition and Cholesky.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, sorted by decreasing eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: Array2<f64>,
}

impl SymmetricEigen {
    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.vectors * &self.values;
        scaled.dot(&self.vectors.t())
    }
}

fn check_symmetric(m: &Array2<f64>) -> Result<()> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: c,
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in 0..r {
        for j in (i + 1)..r {
            if (m[[i, j]] - m[[j, i]]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    Ok(())
}

/// Cyclic Jacobi eigendecomposition.
///
/// Eigenvalues come out nonincreasing; every eigenvector is signed so that its
/// largest-magnitude entry (first one on ties) is nonnegative.
pub fn symmetric_eigen(m: &Array2<f64>) -> Result<SymmetricEigen> {
    check_symmetric(m)?;
    let n = m.nrows();
    let mut a = (m + &m.t()) * 0.5;
    let mut v = Array2::<f64>::eye(n);

    let total: f64 = a.iter().map(|x| x * x).sum();
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[[p, q]] * a[[p, q]];
            }
        }
        if off <= (f64::EPSILON * f64::EPSILON) * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]).then(i.cmp(&j)));

    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).to_owned();
        let mut lead = 0;
        for k in 1..n {
            if col[k].abs() > col[lead].abs() {
                lead = k;
            }
        }
        if col[lead] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
        vectors.column_mut(dst).assign(&col);
    }
    Ok(SymmetricEigen { values, vectors })
}

fn try_cholesky(m: &Array2<f64>) -> Option<Array2<f64>> {
    let n = m.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = m[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > 0.0) {
            return None;
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Some(l)
}

/// Lower-triangular `L` with `L L^T = M`.
///
/// If the plain factorization fails, `1e-10 * trace(M) / d` is added to the
/// diagonal once before giving up.
pub fn cholesky(m: &Array2<f64>) -> Result<Array2<f64>> {
    check_symmetric(m)?;
    if let Some(l) = try_cholesky(m) {
        return Ok(l);
    }
    let n = m.nrows();
    let jitter = 1e-10 * m.diag().sum() / n as f64;
    if !(jitter > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let mut shifted = m.clone();
    shifted.diag_mut().mapv_inplace(|x| x + jitter);
    try_cholesky(&shifted).ok_or(Error::NotPositiveDefinite)
}

pub fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}
