//! Polar retractions onto the Kraus constraint manifold.
//!
//! The stacked operator matrix 𝕂 is kept an isometry (orthonormal
//! columns) when n_k·rows ≥ cols, which is exactly the completeness
//! condition Σ K†K = I, and a co-isometry (orthonormal rows) in the wide
//! case where exact completeness is unattainable. Gradient steps with a
//! pure source state perturb 𝕂 by a rank-one update, so the polar factor
//! differs from the identity only on a two-dimensional subspace; the fast
//! path exploits this, the dense path eigendecomposes the full Gram
//! matrix.

use num_complex::Complex64;

use crate::linalg::{self, CMatrix, LinalgError};

/// Orientation of the stacked-matrix constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// n_k·rows ≥ cols: 𝕂†𝕂 = I (Kraus completeness holds exactly).
    Isometry,
    /// n_k·rows < cols: 𝕂𝕂† = I, the nearest feasible analogue.
    CoIsometry,
}

impl Constraint {
    pub fn for_shape(n_k: usize, rows: usize, cols: usize) -> Self {
        if n_k * rows >= cols {
            Constraint::Isometry
        } else {
            Constraint::CoIsometry
        }
    }
}

/// C^{-1/2} of a Hermitian positive-definite matrix.
fn inv_sqrt(c: &CMatrix) -> Result<CMatrix, LinalgError> {
    let (values, vectors) = linalg::eigh(c)?;
    let dim = c.nrows();
    let floor = values[dim - 1].abs() * 1e-14;
    let mut scaled = vectors.clone();
    for (k, lambda) in values.iter().enumerate() {
        let inv = 1.0 / lambda.max(floor).sqrt();
        let col = vectors.column(k) * Complex64::from(inv);
        scaled.set_column(k, &col);
    }
    Ok(&scaled * vectors.adjoint())
}

/// Replace the operators by the nearest stacked (co-)isometry.
pub fn project(ops: &mut [CMatrix], constraint: Constraint) -> Result<(), LinalgError> {
    match constraint {
        Constraint::Isometry => {
            let cols = ops[0].ncols();
            let mut gram = CMatrix::zeros(cols, cols);
            for k in ops.iter() {
                gram += k.adjoint() * k;
            }
            let s = inv_sqrt(&gram)?;
            for k in ops.iter_mut() {
                *k = &*k * &s;
            }
        }
        Constraint::CoIsometry => {
            let rows = ops[0].nrows();
            let n_k = ops.len();
            let stacked_rows = n_k * rows;
            let mut gram = CMatrix::zeros(stacked_rows, stacked_rows);
            for (a, ka) in ops.iter().enumerate() {
                for (b, kb) in ops.iter().enumerate() {
                    let block = ka * kb.adjoint();
                    for i in 0..rows {
                        for j in 0..rows {
                            gram[(a * rows + i, b * rows + j)] = block[(i, j)];
                        }
                    }
                }
            }
            let s = inv_sqrt(&gram)?;
            let old: Vec<CMatrix> = ops.to_vec();
            for (a, k) in ops.iter_mut().enumerate() {
                let cols = k.ncols();
                let mut acc = CMatrix::zeros(rows, cols);
                for (b, kb) in old.iter().enumerate() {
                    let mut sub = CMatrix::zeros(rows, rows);
                    for i in 0..rows {
                        for j in 0..rows {
                            sub[(i, j)] = s[(a * rows + i, b * rows + j)];
                        }
                    }
                    acc += sub * kb;
                }
                *k = acc;
            }
        }
    }
    Ok(())
}

/// Max-column-sum distance of the active Gram matrix from the identity.
pub fn constraint_defect(ops: &[CMatrix], constraint: Constraint) -> f64 {
    match constraint {
        Constraint::Isometry => {
            let cols = ops[0].ncols();
            let mut gram = CMatrix::zeros(cols, cols);
            for k in ops {
                gram += k.adjoint() * k;
            }
            linalg::max_column_sum(&(gram - CMatrix::identity(cols, cols)))
        }
        Constraint::CoIsometry => {
            let rows = ops[0].nrows();
            let n = ops.len();
            let mut worst = 0.0f64;
            let mut col_sums = vec![0.0f64; n * rows];
            for (a, ka) in ops.iter().enumerate() {
                for (b, kb) in ops.iter().enumerate() {
                    let mut block = ka * kb.adjoint();
                    if a == b {
                        for i in 0..rows {
                            block[(i, i)] -= Complex64::new(1.0, 0.0);
                        }
                    }
                    for j in 0..rows {
                        for i in 0..rows {
                            col_sums[b * rows + j] += block[(i, j)].norm();
                        }
                    }
                }
            }
            for s in col_sums {
                worst = worst.max(s);
            }
            worst
        }
    }
}

/// (I + T)^{-1/2} − I for a 2×2 Hermitian T (t00, t11 real). Returns
/// None when I + T is not safely positive definite, which signals the
/// line search to shrink the step.
pub fn correction_2x2(t00: f64, t11: f64, t01: Complex64) -> Option<[[Complex64; 2]; 2]> {
    let mean = 0.5 * (t00 + t11);
    let half = 0.5 * (t00 - t11);
    let disc = (half * half + t01.norm_sqr()).sqrt();
    let lam_hi = mean + disc;
    let lam_lo = mean - disc;
    if 1.0 + lam_lo <= 1e-12 {
        return None;
    }
    let f = |lam: f64| 1.0 / (1.0 + lam).sqrt() - 1.0;
    if t01.norm() < 1e-300 {
        return Some([
            [Complex64::from(f(t00)), Complex64::from(0.0)],
            [Complex64::from(0.0), Complex64::from(f(t11))],
        ]);
    }
    // eigenvector for lam_hi: (t01, lam_hi - t00), normalized
    let v = [t01, Complex64::from(lam_hi - t00)];
    let nv = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let v = [v[0] / nv, v[1] / nv];
    // orthogonal partner (eigenvector for lam_lo)
    let w = [-v[1].conj(), v[0].conj()];
    let (fh, fl) = (f(lam_hi), f(lam_lo));
    let mut d = [[Complex64::from(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            d[i][j] = v[i] * v[j].conj() * Complex64::from(fh)
                + w[i] * w[j].conj() * Complex64::from(fl);
        }
    }
    Some(d)
}
