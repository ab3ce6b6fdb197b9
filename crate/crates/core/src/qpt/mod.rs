//! Kraus-operator quantum process tomography by constrained gradient
//! descent.
//!
//! A process 𝓔(ρ) = Σ_l K_l ρ K_l† is learned so that the measured
//! statistics of 𝓔(ρ_p) match those of a target density matrix. The cost
//! is the squared measurement mismatch plus an optional L1 penalty on the
//! stacked operator matrix. After every gradient step the stacked matrix
//! is retracted to the constraint manifold by polar decomposition; with a
//! pure source state the retraction acts in a two-dimensional subspace
//! and costs O(n_k · rows · cols) per iteration.
//!
//! Two shapes arise: the square case (target and source spaces of equal
//! dimension) where Σ K†K = I holds exactly, and the wide rectangular
//! case (4×4N with few operators) where exact completeness is
//! unattainable and the stack is kept a co-isometry instead; the applied
//! process is then renormalized and the deviation reported.

mod retract;

use num_complex::Complex64;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use retract::Constraint;

use crate::entropy::EntropyError;
use crate::linalg::{self, haar_unitary, CMatrix, CVector, LinalgError};
use crate::rdm::{DensityMatrix, RdmError};

#[derive(Debug, Clone, Error)]
pub enum QptError {
    #[error("source state is not pure: top eigenvalue {top}")]
    NotPure { top: f64 },
    #[error("full Pauli measurements are impractical beyond 8 qubits (got {n_qubits})")]
    TooManyQubits { n_qubits: u32 },
    #[error("shape mismatch: {context}")]
    Shape { context: String },
    #[error("target rows {rows} must divide source cols {cols} for block initialization")]
    BlockShape { rows: usize, cols: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Rdm(#[from] RdmError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

/// Which measurement family spans the target space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasurementMode {
    /// Rank-1 projectors onto the eigenvectors of every tensor product of
    /// Pauli matrices over {x,y,z}: 6^n_qubits vectors.
    FullPauli,
    /// The 2^n_qubits eigenprojectors of σ_x ⊗ ... ⊗ σ_x.
    XString,
}

/// Rank-1 measurement projectors, stored by their defining vectors.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    vectors: Vec<CVector>,
    mode: MeasurementMode,
    n_qubits: u32,
}

/// Unnormalized Walsh-Hadamard transform; H[j][i] = (-1)^popcount(i & j).
fn wht_inplace(v: &mut [Complex64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        let mut base = 0;
        while base < n {
            for i in base..base + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
            base += 2 * h;
        }
        h *= 2;
    }
}

impl MeasurementSet {
    pub fn mode(&self) -> MeasurementMode {
        self.mode
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn vector(&self, j: usize) -> &CVector {
        &self.vectors[j]
    }

    /// Materialize the j-th projector m_j m_j†.
    pub fn projector(&self, j: usize) -> CMatrix {
        let m = &self.vectors[j];
        m * m.adjoint()
    }

    /// d_j = Tr(M_j ρ) = m_j† ρ m_j for every measurement.
    pub fn expectations(&self, rho: &CMatrix) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|m| {
                let v = rho * m;
                m.dotc(&v).re
            })
            .collect()
    }

    /// m_j† φ for every j; O(M log M) in x-string mode.
    pub fn inner_products(&self, phi: &CVector) -> Vec<Complex64> {
        match self.mode {
            MeasurementMode::XString => {
                let mut buf: Vec<Complex64> = phi.iter().copied().collect();
                wht_inplace(&mut buf);
                let scale = 1.0 / (self.dim() as f64).sqrt();
                buf.iter_mut().for_each(|z| *z *= scale);
                buf
            }
            MeasurementMode::FullPauli => self.vectors.iter().map(|m| m.dotc(phi)).collect(),
        }
    }

    /// Σ_j z_j m_j.
    pub fn combine(&self, z: &[Complex64]) -> CVector {
        debug_assert_eq!(z.len(), self.len());
        match self.mode {
            MeasurementMode::XString => {
                let mut buf = z.to_vec();
                wht_inplace(&mut buf);
                let scale = 1.0 / (self.dim() as f64).sqrt();
                CVector::from_iterator(self.dim(), buf.into_iter().map(|v| v * scale))
            }
            MeasurementMode::FullPauli => {
                let mut acc = CVector::zeros(self.dim());
                for (j, m) in self.vectors.iter().enumerate() {
                    acc += m * z[j];
                }
                acc
            }
        }
    }
}

/// Build the measurement family for an n-qubit target space.
pub fn measurement_set(n_qubits: u32, mode: MeasurementMode) -> Result<MeasurementSet, QptError> {
    assert!(n_qubits >= 1);
    let dim = 1usize << n_qubits;
    let vectors = match mode {
        MeasurementMode::XString => (0..dim)
            .map(|j| {
                let scale = 1.0 / (dim as f64).sqrt();
                CVector::from_fn(dim, |i, _| {
                    let sign = if ((i & j).count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                    Complex64::new(sign * scale, 0.0)
                })
            })
            .collect(),
        MeasurementMode::FullPauli => {
            if n_qubits > 8 {
                return Err(QptError::TooManyQubits { n_qubits });
            }
            let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
            let c = |re: f64, im: f64| Complex64::new(re, im);
            // eigenvector pairs of sigma_x, sigma_y, sigma_z
            let axes: [[[Complex64; 2]; 2]; 3] = [
                [
                    [c(inv_sqrt2, 0.0), c(inv_sqrt2, 0.0)],
                    [c(inv_sqrt2, 0.0), c(-inv_sqrt2, 0.0)],
                ],
                [
                    [c(inv_sqrt2, 0.0), c(0.0, inv_sqrt2)],
                    [c(inv_sqrt2, 0.0), c(0.0, -inv_sqrt2)],
                ],
                [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
            ];
            let q = n_qubits as usize;
            let strings = 3usize.pow(n_qubits);
            let signs = 1usize << n_qubits;
            let mut vectors = Vec::with_capacity(strings * signs);
            for string in 0..strings {
                for sign in 0..signs {
                    let mut v = vec![Complex64::new(1.0, 0.0)];
                    for qb in 0..q {
                        let axis = (string / 3usize.pow((q - 1 - qb) as u32)) % 3;
                        let s = (sign >> (q - 1 - qb)) & 1;
                        let single = &axes[axis][s];
                        let mut next = Vec::with_capacity(v.len() * 2);
                        for &amp in &v {
                            next.push(amp * single[0]);
                            next.push(amp * single[1]);
                        }
                        v = next;
                    }
                    vectors.push(CVector::from_vec(v));
                }
            }
            vectors
        }
    };
    Ok(MeasurementSet { vectors, mode, n_qubits })
}

/// An ordered set of Kraus operators of one common shape.
#[derive(Debug, Clone)]
pub struct KrausSet {
    ops: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self, QptError> {
        if ops.is_empty() {
            return Err(QptError::Shape { context: "empty Kraus set".into() });
        }
        let (rows, cols) = (ops[0].nrows(), ops[0].ncols());
        if ops.iter().any(|k| k.nrows() != rows || k.ncols() != cols) {
            return Err(QptError::Shape { context: "inconsistent Kraus shapes".into() });
        }
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.ops[0].ncols()
    }

    /// The n_k·rows × cols matrix of vertically stacked operators.
    pub fn stacked(&self) -> CMatrix {
        let (rows, cols) = (self.rows(), self.cols());
        let mut out = CMatrix::zeros(self.len() * rows, cols);
        for (l, k) in self.ops.iter().enumerate() {
            for i in 0..rows {
                for j in 0..cols {
                    out[(l * rows + i, j)] = k[(i, j)];
                }
            }
        }
        out
    }

    /// Max column absolute sum of the stacked matrix (the L1 penalty).
    pub fn stacked_one_norm(&self) -> f64 {
        let (rows, cols) = (self.rows(), self.cols());
        (0..cols)
            .map(|j| {
                self.ops
                    .iter()
                    .map(|k| (0..rows).map(|i| k[(i, j)].norm()).sum::<f64>())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// ‖Σ K†K − I‖ in the max-column-sum norm (Kraus completeness).
    pub fn completeness_defect(&self) -> f64 {
        retract::constraint_defect(&self.ops, Constraint::Isometry)
    }

    /// The constraint this shape is kept on.
    pub fn constraint(&self) -> Constraint {
        Constraint::for_shape(self.len(), self.rows(), self.cols())
    }

    /// Defect against the active constraint manifold.
    pub fn constraint_defect(&self) -> f64 {
        retract::constraint_defect(&self.ops, self.constraint())
    }

    /// Σ K ρ K† without renormalization.
    pub fn apply_raw(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows(), self.rows());
        for k in &self.ops {
            out += k * rho * k.adjoint();
        }
        out
    }
}

/// Random initial Kraus operators.
///
/// Square case: Haar unitaries scaled by 1/√n_k (already complete).
/// Rectangular case: each operator carries a single rows×rows Haar block
/// at position l mod (cols/rows), scaled by 1/√n_k; the first projection
/// onto the constraint manifold rescales this literal scheme.
pub fn init_kraus(n_k: usize, rows: usize, cols: usize, seed: u64) -> Result<KrausSet, QptError> {
    if n_k == 0 || rows == 0 || cols == 0 || rows > cols {
        return Err(QptError::Shape { context: format!("n_k={n_k}, rows={rows}, cols={cols}") });
    }
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let scale = Complex64::from(1.0 / (n_k as f64).sqrt());
    let ops = if rows == cols {
        (0..n_k).map(|_| haar_unitary(rows, &mut rng) * scale).collect()
    } else {
        if cols % rows != 0 {
            return Err(QptError::BlockShape { rows, cols });
        }
        let blocks = cols / rows;
        (0..n_k)
            .map(|l| {
                let u = haar_unitary(rows, &mut rng) * scale;
                let mut k = CMatrix::zeros(rows, cols);
                let offset = (l % blocks) * rows;
                for i in 0..rows {
                    for j in 0..rows {
                        k[(i, offset + j)] = u[(i, j)];
                    }
                }
                k
            })
            .collect()
    };
    KrausSet::new(ops)
}

/// Σ_j [d_j − Tr(M_j Σ_l K_l ρ_p K_l†)]² + λ ‖𝕂‖₁.
pub fn cost(
    kraus: &KrausSet,
    rho_p: &DensityMatrix,
    d: &[f64],
    meas: &MeasurementSet,
    lambda_reg: f64,
) -> Result<f64, QptError> {
    if meas.dim() != kraus.rows() || rho_p.dim() != kraus.cols() || d.len() != meas.len() {
        return Err(QptError::Shape {
            context: format!(
                "meas dim {} / kraus {}x{} / rho {} / d {}",
                meas.dim(),
                kraus.rows(),
                kraus.cols(),
                rho_p.dim(),
                d.len()
            ),
        });
    }
    let predicted = kraus.apply_raw(rho_p.matrix());
    let p = meas.expectations(&predicted);
    let fidelity_term: f64 = d.iter().zip(&p).map(|(dj, pj)| (dj - pj) * (dj - pj)).sum();
    Ok(fidelity_term + lambda_reg * kraus.stacked_one_norm())
}

/// Analytic gradient of [`cost`] with respect to the real and imaginary
/// parts of every Kraus entry, packed as complex matrices
/// (∂/∂Re + i ∂/∂Im). The L1 term contributes its subgradient at the
/// maximal column of the stacked matrix.
pub fn cost_gradient(
    kraus: &KrausSet,
    rho_p: &DensityMatrix,
    d: &[f64],
    meas: &MeasurementSet,
    lambda_reg: f64,
) -> Result<Vec<CMatrix>, QptError> {
    let predicted = kraus.apply_raw(rho_p.matrix());
    let p = meas.expectations(&predicted);
    let r: Vec<f64> = d.iter().zip(&p).map(|(dj, pj)| dj - pj).collect();
    let mut grads = Vec::with_capacity(kraus.len());
    for k in kraus.ops() {
        let y = k * rho_p.matrix(); // rows × cols
        let mut g = CMatrix::zeros(kraus.rows(), kraus.cols());
        for (j, m) in meas.vectors.iter().enumerate() {
            // -4 r_j m_j (m_j† K ρ)
            let row = m.adjoint() * &y;
            let coeff = Complex64::from(-4.0 * r[j]);
            g += (m * row) * coeff;
        }
        grads.push(g);
    }
    if lambda_reg != 0.0 {
        let (rows, cols) = (kraus.rows(), kraus.cols());
        let mut best = (0usize, f64::MIN);
        for j in 0..cols {
            let s: f64 = kraus
                .ops()
                .iter()
                .map(|k| (0..rows).map(|i| k[(i, j)].norm()).sum::<f64>())
                .sum();
            if s > best.1 {
                best = (j, s);
            }
        }
        let jstar = best.0;
        for (g, k) in grads.iter_mut().zip(kraus.ops()) {
            for i in 0..rows {
                let z = k[(i, jstar)];
                if z.norm() > 0.0 {
                    g[(i, jstar)] += z / z.norm() * lambda_reg;
                }
            }
        }
    }
    Ok(grads)
}

/// Σ K ρ K†, renormalized to unit trace when the constraint leaves a
/// completeness defect; returns the matrix and the renormalization
/// factor applied.
pub fn apply_process(
    kraus: &KrausSet,
    rho: &DensityMatrix,
) -> Result<(DensityMatrix, f64), QptError> {
    if rho.dim() != kraus.cols() {
        return Err(QptError::Shape {
            context: format!("rho dim {} vs kraus cols {}", rho.dim(), kraus.cols()),
        });
    }
    let raw = linalg::hermitize(&kraus.apply_raw(rho.matrix()));
    let trace = linalg::trace(&raw).re;
    if trace <= 1e-300 {
        return Err(QptError::Shape { context: format!("process output trace {trace}") });
    }
    let factor = 1.0 / trace;
    let dm = DensityMatrix::from_unnormalized(raw)?;
    Ok((dm, factor))
}

/// Optimizer options; defaults follow the two experiments in scope.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QptOptions {
    pub n_k: usize,
    pub tol: f64,
    pub lambda_reg: f64,
    pub max_iters: usize,
    /// Fixed initial step of the backtracking line search.
    pub step0: f64,
    pub max_backtracks: usize,
    /// Dense re-projection cadence of the fast path.
    pub refresh_every: usize,
    pub seed: u64,
    /// Use the dense retraction even when the fast path applies.
    pub force_dense: bool,
    /// Record the dense constraint defect after every accepted iterate.
    pub audit_constraint: bool,
}

impl QptOptions {
    pub fn new(n_k: usize, tol: f64, seed: u64) -> Self {
        Self {
            n_k,
            tol,
            lambda_reg: 0.0,
            max_iters: 2000,
            step0: 0.5,
            max_backtracks: 40,
            refresh_every: 200,
            seed,
            force_dense: false,
            audit_constraint: false,
        }
    }

    /// Sector-RDM experiment: 20 operators, tolerance 0.01.
    pub fn abc_default(seed: u64) -> Self {
        Self::new(20, 0.01, seed)
    }

    /// Mode-dependent experiment: 30 operators, tolerance 0.1.
    pub fn md_default(seed: u64) -> Self {
        let mut o = Self::new(30, 0.1, seed);
        o.max_iters = 3000;
        o
    }
}

/// Outcome of one optimization run.
#[derive(Debug, Clone)]
pub struct QptRun {
    pub converged: bool,
    pub iterations: usize,
    pub cost_trace: Vec<f64>,
    pub tol: f64,
    pub lambda_reg: f64,
    pub seed: u64,
    pub kraus: KrausSet,
    pub predicted: DensityMatrix,
    pub renorm_factor: f64,
    pub fidelity_to_target: f64,
    pub completeness_defect: f64,
    pub constraint_defect: f64,
    /// Worst dense constraint defect over accepted iterates, when audited.
    pub max_audit_defect: Option<f64>,
}

fn pure_vector(rho: &DensityMatrix) -> Result<CVector, QptError> {
    let (values, vectors) = linalg::eigh(rho.matrix())?;
    let dim = rho.dim();
    let top = values[dim - 1];
    if (top - 1.0).abs() > 1e-8 {
        return Err(QptError::NotPure { top });
    }
    Ok(vectors.column(dim - 1).into())
}

struct Optimizer<'a> {
    meas: &'a MeasurementSet,
    d: &'a [f64],
    psi: CVector,
    ops: Vec<CMatrix>,
    phi: Vec<CVector>,
    constraint: Constraint,
    lambda: f64,
    cost: f64,
}

impl Optimizer<'_> {
    fn cost_of_phi(&self, phi: &[CVector]) -> f64 {
        let mut p = vec![0.0f64; self.meas.len()];
        for f in phi {
            for (j, t) in self.meas.inner_products(f).into_iter().enumerate() {
                p[j] += t.norm_sqr();
            }
        }
        self.d.iter().zip(&p).map(|(dj, pj)| (dj - pj) * (dj - pj)).sum()
    }

    fn refresh_phi(&mut self) {
        self.phi = self.ops.iter().map(|k| k * &self.psi).collect();
    }

    /// Per-operator gradient vectors g_l; the full gradient is G_l = g_l ψ†.
    fn gradient_vectors(&self) -> Vec<CVector> {
        let n_meas = self.meas.len();
        let t: Vec<Vec<Complex64>> = self.phi.iter().map(|f| self.meas.inner_products(f)).collect();
        let mut p = vec![0.0f64; n_meas];
        for tl in &t {
            for (j, z) in tl.iter().enumerate() {
                p[j] += z.norm_sqr();
            }
        }
        let r: Vec<f64> = self.d.iter().zip(&p).map(|(dj, pj)| dj - pj).collect();
        t.iter()
            .map(|tl| {
                let weighted: Vec<Complex64> =
                    tl.iter().zip(&r).map(|(z, rj)| z * Complex64::from(-4.0 * rj)).collect();
                self.meas.combine(&weighted)
            })
            .collect()
    }

    /// One fast-path iteration: returns false when the line search stalls.
    fn step_subspace(&mut self, step0: f64, max_backtracks: usize) -> bool {
        let g = self.gradient_vectors();
        let grad_norm: f64 = g.iter().map(|v| v.norm_squared()).sum();
        if grad_norm < 1e-28 {
            return false;
        }
        match self.constraint {
            Constraint::Isometry => self.step_tall(&g, grad_norm, step0, max_backtracks),
            Constraint::CoIsometry => self.step_fat(&g, step0, max_backtracks),
        }
    }

    fn step_tall(&mut self, g: &[CVector], c: f64, step0: f64, max_backtracks: usize) -> bool {
        // u = Σ K† g; the polar correction lives on span{ψ, u}
        let cols = self.ops[0].ncols();
        let mut u = CVector::zeros(cols);
        for (k, gl) in self.ops.iter().zip(g) {
            u += k.adjoint() * gl;
        }
        let a = self.psi.dotc(&u);
        let w_raw = &u - &self.psi * a;
        let b_norm = w_raw.norm();
        let use_w = b_norm > 1e-13 * (u.norm() + 1.0);
        let w = if use_w { w_raw / Complex64::from(b_norm) } else { CVector::zeros(cols) };
        let b_norm = if use_w { b_norm } else { 0.0 };
        let rows = self.ops[0].nrows();
        let kw: Vec<CVector> = if use_w {
            self.ops.iter().map(|k| k * &w).collect()
        } else {
            (0..self.ops.len()).map(|_| CVector::zeros(rows)).collect()
        };

        let mut eta = step0;
        for _ in 0..max_backtracks {
            let t00 = -2.0 * eta * a.re + eta * eta * c;
            let t01 = Complex64::from(-eta * b_norm);
            if let Some(dmat) = retract::correction_2x2(t00, 0.0, t01) {
                let phi_trial: Vec<CVector> = self
                    .phi
                    .iter()
                    .zip(g)
                    .zip(&kw)
                    .map(|((f, gl), kwl)| {
                        let x_psi = f - gl * Complex64::from(eta);
                        &x_psi * (Complex64::from(1.0) + dmat[0][0]) + kwl * dmat[1][0]
                    })
                    .collect();
                let c_trial = self.cost_of_phi(&phi_trial);
                if c_trial < self.cost {
                    for (l, k) in self.ops.iter_mut().enumerate() {
                        let x_psi = &self.phi[l] - &g[l] * Complex64::from(eta);
                        let q_psi = &x_psi * dmat[0][0] + &kw[l] * dmat[1][0];
                        let q_w = &x_psi * dmat[0][1] + &kw[l] * dmat[1][1];
                        let coeff_psi = q_psi - &g[l] * Complex64::from(eta);
                        *k += &coeff_psi * self.psi.adjoint();
                        if use_w {
                            *k += &q_w * w.adjoint();
                        }
                    }
                    self.refresh_phi();
                    self.cost = self.cost_of_phi(&self.phi);
                    return true;
                }
            }
            eta *= 0.5;
        }
        false
    }

    fn step_fat(&mut self, g: &[CVector], step0: f64, max_backtracks: usize) -> bool {
        let rows = self.ops[0].nrows();
        let n_k = self.ops.len();
        let stacked = n_k * rows;
        let mut phi_hat = CVector::zeros(stacked);
        let mut g_hat = CVector::zeros(stacked);
        for l in 0..n_k {
            for i in 0..rows {
                phi_hat[l * rows + i] = self.phi[l][i];
                g_hat[l * rows + i] = g[l][i];
            }
        }
        // orthonormal basis of span{φ̂, ĝ}
        let mut basis: Vec<CVector> = Vec::new();
        for cand in [&phi_hat, &g_hat] {
            let mut v = cand.clone();
            for b in &basis {
                let coeff = b.dotc(&v);
                v -= b * coeff;
            }
            let n = v.norm();
            if n > 1e-13 * (cand.norm() + 1.0) {
                basis.push(v / Complex64::from(n));
            }
        }
        if basis.is_empty() {
            return false;
        }
        let pc: Vec<Complex64> = basis.iter().map(|b| b.dotc(&phi_hat)).collect();
        let gc: Vec<Complex64> = basis.iter().map(|b| b.dotc(&g_hat)).collect();
        let k_dim = basis.len();

        let mut eta = step0;
        for _ in 0..max_backtracks {
            // T = -η(ĝ φ̂† + φ̂ ĝ†) + η² ĝ ĝ† restricted to the basis
            let mut t = [[Complex64::from(0.0); 2]; 2];
            for i in 0..k_dim {
                for j in 0..k_dim {
                    t[i][j] = -Complex64::from(eta) * (gc[i] * pc[j].conj() + pc[i] * gc[j].conj())
                        + Complex64::from(eta * eta) * gc[i] * gc[j].conj();
                }
            }
            let dmat = retract::correction_2x2(
                t[0][0].re,
                if k_dim > 1 { t[1][1].re } else { 0.0 },
                if k_dim > 1 { t[0][1] } else { Complex64::from(0.0) },
            );
            if let Some(dmat) = dmat {
                let y = &phi_hat - &g_hat * Complex64::from(eta);
                let yc: Vec<Complex64> = basis.iter().map(|b| b.dotc(&y)).collect();
                let mut phi_trial_hat = y.clone();
                for i in 0..k_dim {
                    let mut amp = Complex64::from(0.0);
                    for j in 0..k_dim {
                        amp += dmat[i][j] * yc[j];
                    }
                    phi_trial_hat += &basis[i] * amp;
                }
                let phi_trial: Vec<CVector> = (0..n_k)
                    .map(|l| CVector::from_fn(rows, |i, _| phi_trial_hat[l * rows + i]))
                    .collect();
                let c_trial = self.cost_of_phi(&phi_trial);
                if c_trial < self.cost {
                    // row combinations v_j† X with X = 𝕂 − η ĝ ψ†
                    let cols = self.ops[0].ncols();
                    let mut rows_v: Vec<nalgebra::RowDVector<Complex64>> = Vec::new();
                    for vb in &basis {
                        let mut row = nalgebra::RowDVector::<Complex64>::zeros(cols);
                        let mut vg = Complex64::from(0.0);
                        for l in 0..n_k {
                            for i in 0..rows {
                                let coeff = vb[l * rows + i].conj();
                                row += self.ops[l].row(i) * coeff;
                                vg += coeff * g[l][i];
                            }
                        }
                        row -= self.psi.adjoint() * (vg * Complex64::from(eta));
                        rows_v.push(row);
                    }
                    for (l, k) in self.ops.iter_mut().enumerate() {
                        *k -= (&g[l] * Complex64::from(eta)) * self.psi.adjoint();
                        for i in 0..k_dim {
                            let vb_l = CVector::from_fn(rows, |r_i, _| basis[i][l * rows + r_i]);
                            for j in 0..k_dim {
                                *k += (&vb_l * dmat[i][j]) * &rows_v[j];
                            }
                        }
                    }
                    self.refresh_phi();
                    self.cost = self.cost_of_phi(&self.phi);
                    return true;
                }
            }
            eta *= 0.5;
        }
        false
    }

    /// One dense-path iteration (general λ, any constraint).
    fn step_dense(&mut self, step0: f64, max_backtracks: usize) -> Result<bool, QptError> {
        let kraus = KrausSet::new(self.ops.clone())?;
        let rho_p = DensityMatrix::from_pure(&self.psi);
        let grads = cost_gradient(&kraus, &rho_p, self.d, self.meas, self.lambda)?;
        let mut eta = step0;
        for _ in 0..max_backtracks {
            let mut cand: Vec<CMatrix> = self
                .ops
                .iter()
                .zip(&grads)
                .map(|(k, gl)| k - gl * Complex64::from(eta))
                .collect();
            retract::project(&mut cand, self.constraint)?;
            let cand_set = KrausSet::new(cand.clone())?;
            let c_trial = cost(&cand_set, &rho_p, self.d, self.meas, self.lambda)?;
            if c_trial < self.cost {
                self.ops = cand;
                self.refresh_phi();
                self.cost = c_trial;
                return Ok(true);
            }
            eta *= 0.5;
        }
        Ok(false)
    }
}

/// Learn a Kraus process mapping the pure state ρ_p onto the measurement
/// statistics of ρ_target. Non-convergence is reported in the returned
/// run, not as an error.
pub fn learn_process(
    rho_p: &DensityMatrix,
    rho_target: &DensityMatrix,
    meas: &MeasurementSet,
    opts: &QptOptions,
) -> Result<QptRun, QptError> {
    let rows = rho_target.dim();
    let cols = rho_p.dim();
    if meas.dim() != rows {
        return Err(QptError::Shape {
            context: format!("measurement dim {} vs target dim {}", meas.dim(), rows),
        });
    }
    let psi = pure_vector(rho_p)?;
    let init = init_kraus(opts.n_k, rows, cols, opts.seed)?;
    let constraint = init.constraint();
    let mut ops: Vec<CMatrix> = init.ops().to_vec();
    retract::project(&mut ops, constraint)?;

    let d = meas.expectations(rho_target.matrix());
    let mut state = Optimizer {
        meas,
        d: &d,
        psi,
        ops,
        phi: Vec::new(),
        constraint,
        lambda: opts.lambda_reg,
        cost: 0.0,
    };
    state.refresh_phi();
    let dense = opts.force_dense || opts.lambda_reg != 0.0;
    let lambda_term = |st: &Optimizer| -> f64 {
        if st.lambda == 0.0 {
            0.0
        } else {
            st.lambda
                * KrausSet::new(st.ops.clone())
                    .map(|k| k.stacked_one_norm())
                    .unwrap_or(0.0)
        }
    };
    state.cost = state.cost_of_phi(&state.phi) + lambda_term(&state);

    let mut cost_trace = vec![state.cost];
    let mut iterations = 0usize;
    let mut max_audit: Option<f64> = opts.audit_constraint.then_some(0.0);
    while state.cost > opts.tol && iterations < opts.max_iters {
        let accepted = if dense {
            state.step_dense(opts.step0, opts.max_backtracks)?
        } else {
            state.step_subspace(opts.step0, opts.max_backtracks)
        };
        if !accepted {
            break;
        }
        iterations += 1;
        cost_trace.push(state.cost);
        if let Some(worst) = &mut max_audit {
            let defect = retract::constraint_defect(&state.ops, constraint);
            *worst = worst.max(defect);
        }
        if !dense && opts.refresh_every > 0 && iterations % opts.refresh_every == 0 {
            retract::project(&mut state.ops, constraint)?;
            state.refresh_phi();
            state.cost = state.cost_of_phi(&state.phi);
        }
    }

    // final exact projection, then report
    retract::project(&mut state.ops, constraint)?;
    state.refresh_phi();
    let final_cost = state.cost;
    let kraus = KrausSet::new(state.ops)?;
    let (predicted, renorm_factor) = apply_process(&kraus, rho_p)?;
    let fidelity_to_target = crate::entropy::fidelity(&predicted, rho_target)?;
    let converged = final_cost <= opts.tol;
    Ok(QptRun {
        converged,
        iterations,
        cost_trace,
        tol: opts.tol,
        lambda_reg: opts.lambda_reg,
        seed: opts.seed,
        completeness_defect: kraus.completeness_defect(),
        constraint_defect: kraus.constraint_defect(),
        kraus,
        predicted,
        renorm_factor,
        fidelity_to_target,
        max_audit_defect: max_audit,
    })
}
