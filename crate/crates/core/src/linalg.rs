//! Dense complex linear algebra helpers shared across the crate.
//!
//! The Hermitian eigensolver wraps nalgebra's tridiagonalization + implicit
//! QL; correctness is enforced downstream through residual and
//! orthonormality checks rather than by method choice.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum LinalgError {
    #[error("eigensolver did not converge for a {dim}x{dim} matrix")]
    EigenFailure { dim: usize },
    #[error("matrix is not Hermitian: max |M - M^H| = {defect:.3e}")]
    NotHermitian { defect: f64 },
}

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Max entrywise |M - M^H|.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// (M + M^H) / 2.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvector columns matched.
pub fn eigh(m: &CMatrix) -> Result<(DVector<f64>, CMatrix), LinalgError> {
    let dim = m.nrows();
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 4096)
        .ok_or(LinalgError::EigenFailure { dim })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(dim, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMatrix) -> Result<DVector<f64>, LinalgError> {
    let dim = m.nrows();
    let mut values = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 4096)
        .ok_or(LinalgError::EigenFailure { dim })?
        .eigenvalues;
    values.as_mut_slice().sort_by(f64::total_cmp);
    Ok(values)
}

/// Hermitian square root of a PSD matrix; eigenvalues below zero are
/// clipped before taking the root.
pub fn sqrt_psd(m: &CMatrix) -> Result<CMatrix, LinalgError> {
    let (values, vectors) = eigh(m)?;
    let mut scaled = vectors.clone();
    for (k, lambda) in values.iter().enumerate() {
        let s = Complex64::new(lambda.max(0.0).sqrt(), 0.0);
        let col = vectors.column(k) * s;
        scaled.set_column(k, &col);
    }
    Ok(&scaled * vectors.adjoint())
}

/// f(M) = V f(Λ) V^H for Hermitian M with a real function of eigenvalues.
pub fn hermitian_fn(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix, LinalgError> {
    let (values, vectors) = eigh(m)?;
    let mut scaled = vectors.clone();
    for (k, lambda) in values.iter().enumerate() {
        let col = vectors.column(k) * Complex64::new(f(*lambda), 0.0);
        scaled.set_column(k, &col);
    }
    Ok(&scaled * vectors.adjoint())
}

/// Standard complex Gaussian via Box-Muller.
pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    let mag = (-2.0 * u1.ln()).sqrt();
    let phase = std::f64::consts::TAU * u2;
    Complex64::new(mag * phase.cos(), mag * phase.sin()) / std::f64::consts::SQRT_2
}

/// Haar-random unitary: QR of a Ginibre matrix with the phase convention
/// fixed by the sign of the R diagonal.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Max column absolute sum (the induced 1-norm).
pub fn max_column_sum(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Trace as a complex number.
pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(n, n, |_, _| complex_gaussian(&mut rng));
        hermitize(&a)
    }

    #[test]
    fn eigh_reconstructs_and_is_orthonormal() {
        let h = random_hermitian(24, 3);
        let (values, vectors) = eigh(&h).unwrap();
        for k in 1..24 {
            assert!(values[k] >= values[k - 1]);
        }
        let mut recon = CMatrix::zeros(24, 24);
        for k in 0..24 {
            let v = vectors.column(k);
            recon += (v * v.adjoint()).scale(values[k]);
        }
        assert!((&recon - &h).norm() < 1e-10 * h.norm().max(1.0));
        let gram = vectors.adjoint() * &vectors;
        let eye = CMatrix::identity(24, 24);
        assert!((gram - eye).norm() < 1e-10);
    }

    #[test]
    fn eigvalsh_matches_eigh() {
        let h = random_hermitian(17, 9);
        let v1 = eigvalsh(&h).unwrap();
        let (v2, _) = eigh(&h).unwrap();
        for k in 0..17 {
            assert!((v1[k] - v2[k]).abs() < 1e-11);
        }
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let g = random_hermitian(10, 5);
        let psd = &g * &g; // PSD by construction
        let s = sqrt_psd(&psd).unwrap();
        assert!((&s * &s - &psd).norm() < 1e-9 * psd.norm());
    }

    #[test]
    fn haar_unitary_is_unitary_and_seeded() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let u = haar_unitary(12, &mut rng);
        let eye = CMatrix::identity(12, 12);
        assert!((u.adjoint() * &u - &eye).norm() < 1e-12);
        let mut rng2 = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let u2 = haar_unitary(12, &mut rng2);
        assert_eq!(u, u2);
    }

    #[test]
    fn one_norm_is_max_column_sum() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -2.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        assert!((max_column_sum(&m) - 2.0).abs() < 1e-15);
    }
}
