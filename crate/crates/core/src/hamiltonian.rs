//! Assembly of the four-band k·p Hamiltonian in the spinor Bessel basis.
//!
//! For a channel (L, k_z) the 4N×4N Rayleigh-Ritz matrix is built
//! analytically:
//!
//! * ε(k) ± M(k) terms are diagonal in mode index, with the Dirichlet
//!   Laplacian eigenvalue k∥² → (α_n/R)²;
//! * B₀k_z couples slots (1,2) and (3,4) diagonally in the root index;
//! * A₀k_± couples slots (1,4) and (2,3) through the lowering identity
//!   k₋ J_{L+1}(kρ)e^{i(L+1)φ} = −ik J_L(kρ)e^{iLφ}, which reduces the
//!   radial integral to the closed Lommel form
//!   2 α_m^L / ((α_n^{L+1})² − (α_m^L)²).
//!
//! Quoted forms of this model sometimes give the (4,4) entry as
//! −M(k_z)k_z; Hermiticity and the structure of rows 1-3 force −M(k),
//! which is what is assembled here.

use num_complex::Complex64;
use thiserror::Error;

use crate::basis::{BasisMode, BesselError, MaterialParams, RootTable, WireGeometry};
use crate::linalg::CMatrix;

#[derive(Debug, Clone, Error)]
pub enum HamiltonianError {
    #[error("root table covers {available} roots, need {needed}")]
    RootTableTooSmall { available: usize, needed: usize },
    #[error("basis size must be >= 1")]
    EmptyBasis,
    #[error("gap window inverted at k_z = {k_z}: E_lo = {e_lo} >= E_hi = {e_hi}")]
    InvertedWindow { k_z: f64, e_lo: f64, e_hi: f64 },
    #[error(transparent)]
    Bessel(#[from] BesselError),
}

/// The assembled Rayleigh-Ritz matrix of one (L, k_z) channel.
///
/// Basis ordering is slot-major: slot 1 occupies rows 0..N, then slots
/// 2, 3, 4, with the root index ascending inside each slot.
#[derive(Debug, Clone)]
pub struct HamiltonianBlock {
    pub l: u32,
    pub k_z: f64,
    pub n_basis: usize,
    pub r: f64,
    pub matrix: CMatrix,
    pub modes: Vec<BasisMode>,
}

impl HamiltonianBlock {
    pub fn dim(&self) -> usize {
        4 * self.n_basis
    }

    /// Row-major debug dump with interleaved real/imaginary parts.
    pub fn to_debug_json(&self) -> serde_json::Value {
        let entries: Vec<[f64; 2]> = self
            .matrix
            .row_iter()
            .flat_map(|row| row.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
            .collect();
        serde_json::json!({
            "l": self.l,
            "k_z": self.k_z,
            "n": self.n_basis,
            "r": self.r,
            "layout": "row-major, [re, im] pairs",
            "matrix": entries,
        })
    }
}

/// Reusable assembly context for one (params, geometry, L, N): roots and
/// the k_z-independent A₀ coupling matrix.
#[derive(Debug, Clone)]
pub struct LChannel {
    params: MaterialParams,
    geom: WireGeometry,
    l: u32,
    n_basis: usize,
    roots: RootTable,
    /// w[(m, n)] = -2i A0 a_m b_n / (R (b_n² - a_m²)), the (1,4)/(2,3) block.
    coupling: CMatrix,
}

impl LChannel {
    pub fn new(
        params: MaterialParams,
        geom: WireGeometry,
        l: u32,
        n_basis: usize,
    ) -> Result<Self, HamiltonianError> {
        if n_basis == 0 {
            return Err(HamiltonianError::EmptyBasis);
        }
        let roots = RootTable::build(l + 1, n_basis)?;
        let mut coupling = CMatrix::zeros(n_basis, n_basis);
        for m in 0..n_basis {
            let a = roots.root(l, m + 1);
            for n in 0..n_basis {
                let b = roots.root(l + 1, n + 1);
                let w = -2.0 * params.a0 * a * b / (geom.r * (b * b - a * a));
                coupling[(m, n)] = Complex64::new(0.0, w);
            }
        }
        Ok(Self { params, geom, l, n_basis, roots, coupling })
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn roots(&self) -> &RootTable {
        &self.roots
    }

    pub fn geom(&self) -> &WireGeometry {
        &self.geom
    }

    pub fn params(&self) -> &MaterialParams {
        &self.params
    }

    pub fn assemble(&self, k_z: f64) -> HamiltonianBlock {
        let n = self.n_basis;
        let p = &self.params;
        let r = self.geom.r;
        let kz2 = k_z * k_z;
        let mut h = CMatrix::zeros(4 * n, 4 * n);

        let idx = |slot: usize, j: usize| (slot - 1) * n + j;
        for j in 0..n {
            let kpar2_low = {
                let alpha = self.roots.root(self.l, j + 1);
                (alpha / r) * (alpha / r)
            };
            let kpar2_high = {
                let alpha = self.roots.root(self.l + 1, j + 1);
                (alpha / r) * (alpha / r)
            };
            let eps_low = p.c0 + p.c1 * kz2 + p.c2 * kpar2_low;
            let m_low = p.m0 + p.m1 * kz2 + p.m2 * kpar2_low;
            let eps_high = p.c0 + p.c1 * kz2 + p.c2 * kpar2_high;
            let m_high = p.m0 + p.m1 * kz2 + p.m2 * kpar2_high;

            h[(idx(1, j), idx(1, j))] = Complex64::new(eps_low + m_low, 0.0);
            h[(idx(2, j), idx(2, j))] = Complex64::new(eps_low - m_low, 0.0);
            h[(idx(3, j), idx(3, j))] = Complex64::new(eps_high + m_high, 0.0);
            h[(idx(4, j), idx(4, j))] = Complex64::new(eps_high - m_high, 0.0);

            let bkz = Complex64::new(p.b0 * k_z, 0.0);
            h[(idx(1, j), idx(2, j))] = bkz;
            h[(idx(2, j), idx(1, j))] = bkz;
            h[(idx(3, j), idx(4, j))] = -bkz;
            h[(idx(4, j), idx(3, j))] = -bkz;
        }
        for m in 0..n {
            for j in 0..n {
                let w = self.coupling[(m, j)];
                h[(idx(1, m), idx(4, j))] = w;
                h[(idx(4, j), idx(1, m))] = w.conj();
                h[(idx(2, m), idx(3, j))] = w;
                h[(idx(3, j), idx(2, m))] = w.conj();
            }
        }

        HamiltonianBlock {
            l: self.l,
            k_z,
            n_basis: n,
            r,
            matrix: h,
            modes: BasisMode::layout(self.l, n, &self.roots, r),
        }
    }
}

/// One-shot assembly of the (L, k_z) channel matrix.
pub fn assemble(
    params: MaterialParams,
    geom: WireGeometry,
    l: u32,
    k_z: f64,
    n_basis: usize,
) -> Result<HamiltonianBlock, HamiltonianError> {
    Ok(LChannel::new(params, geom, l, n_basis)?.assemble(k_z))
}

/// Bulk plane-wave dispersion ε(k) ∓ √(M(k)² + B₀²k_z² + A₀²k∥²); each
/// branch is doubly degenerate in the 4×4 model.
pub fn bulk_dispersion(params: &MaterialParams, k_z: f64, k_par: f64) -> (f64, f64) {
    let kz2 = k_z * k_z;
    let kp2 = k_par * k_par;
    let eps = params.c0 + params.c1 * kz2 + params.c2 * kp2;
    let m = params.m0 + params.m1 * kz2 + params.m2 * kp2;
    let gap = (m * m + params.b0 * params.b0 * kz2 + params.a0 * params.a0 * kp2).sqrt();
    (eps - gap, eps + gap)
}

/// In-plane momentum range of the bulk scan; beyond this the k·p
/// expansion leaves its validity range.
pub const GAP_SCAN_K_MAX: f64 = 0.2;
const GAP_SCAN_POINTS: usize = 10_000;

/// Bulk gap window at fixed k_z: (max of the lower branch, min of the
/// upper branch) over k∥ ∈ [0, 0.2] Å⁻¹.
pub fn gap_window(params: &MaterialParams, k_z: f64) -> Result<(f64, f64), HamiltonianError> {
    let mut e_lo = f64::NEG_INFINITY;
    let mut e_hi = f64::INFINITY;
    for i in 0..=GAP_SCAN_POINTS {
        let k_par = GAP_SCAN_K_MAX * i as f64 / GAP_SCAN_POINTS as f64;
        let (lower, upper) = bulk_dispersion(params, k_z, k_par);
        e_lo = e_lo.max(lower);
        e_hi = e_hi.min(upper);
    }
    if e_lo >= e_hi {
        return Err(HamiltonianError::InvertedWindow { k_z, e_lo, e_hi });
    }
    Ok((e_lo, e_hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{normalization, radial_overlap};
    use crate::linalg::hermiticity_defect;
    use rand::{Rng, SeedableRng};

    fn table_i() -> MaterialParams {
        MaterialParams::bi2se3()
    }

    #[test]
    fn decoupled_single_mode_diagonal() {
        let mut p = table_i();
        p.a0 = 0.0;
        p.b0 = 0.0;
        let geom = WireGeometry::default_wire();
        let block = assemble(p, geom, 0, 0.0, 1).unwrap();
        let h = &block.matrix;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(h[(i, j)].norm() == 0.0);
                }
            }
        }
        // ε ± M with k∥² = (α/R)² per slot family
        assert!((h[(0, 0)].re - 0.272606).abs() < 1e-6);
        assert!((h[(1, 1)].re - (-0.285576)).abs() < 1e-6);
        assert!((h[(2, 2)].re - 0.271691).abs() < 1e-6);
        assert!((h[(3, 3)].re - (-0.283692)).abs() < 1e-6);
    }

    #[test]
    fn hermitian_for_random_channels() {
        let p = table_i();
        let geom = WireGeometry::default_wire();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(21);
        for _ in 0..50 {
            let l = rng.random_range(0..=3u32);
            let k_z = rng.random_range(-0.3..0.3);
            let n = rng.random_range(1..=40usize);
            let block = assemble(p, geom, l, k_z, n).unwrap();
            assert!(
                hermiticity_defect(&block.matrix) < 1e-12,
                "l={l} k_z={k_z} n={n}"
            );
        }
    }

    #[test]
    fn block_sparsity_pattern() {
        let p = table_i();
        let geom = WireGeometry::default_wire();
        let n = 12;
        let block = assemble(p, geom, 1, 0.07, n).unwrap();
        let h = &block.matrix;
        let at = |s: usize, i: usize, t: usize, j: usize| h[((s - 1) * n + i, (t - 1) * n + j)];
        for i in 0..n {
            for j in 0..n {
                // slots (1,3) and (2,4) are forbidden by angular selection
                assert!(at(1, i, 3, j).norm() < 1e-14);
                assert!(at(2, i, 4, j).norm() < 1e-14);
                if i != j {
                    // B0 k_z blocks are diagonal in the root index
                    assert!(at(1, i, 2, j).norm() < 1e-14);
                    assert!(at(3, i, 4, j).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn decoupled_spectrum_is_analytic() {
        let mut p = table_i();
        p.a0 = 0.0;
        p.b0 = 0.0;
        let geom = WireGeometry::default_wire();
        let n = 8;
        let l = 2u32;
        let k_z = 0.11;
        let block = assemble(p, geom, l, k_z, n).unwrap();
        let mut expected: Vec<f64> = Vec::new();
        let roots = RootTable::build(l + 1, n).unwrap();
        for (offset, fam) in [(0u32, l), (1, l + 1)] {
            let _ = offset;
            for j in 1..=n {
                let kp2 = (roots.root(fam, j) / geom.r).powi(2);
                let eps = p.c0 + p.c1 * k_z * k_z + p.c2 * kp2;
                let m = p.m0 + p.m1 * k_z * k_z + p.m2 * kp2;
                expected.push(eps + m);
                expected.push(eps - m);
            }
        }
        expected.sort_by(f64::total_cmp);
        let mut got = crate::linalg::eigvalsh(&block.matrix).unwrap().as_slice().to_vec();
        got.sort_by(f64::total_cmp);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12, "{g} vs {e}");
        }
    }

    #[test]
    fn single_mode_coupling_matches_quadrature_route() {
        // N=1, L=0, k_z=0: only (1,4) and (2,3) off-diagonals; compare the
        // analytic entry and eigenvalues against the quadrature-built block.
        let p = table_i();
        let geom = WireGeometry::default_wire();
        let block = assemble(p, geom, 0, 0.0, 1).unwrap();
        let h = &block.matrix;
        for (i, j) in [(0usize, 2usize), (1, 3), (2, 0), (3, 1)] {
            assert!(h[(i, j)].norm() < 1e-16, "({i},{j}) should be zero");
        }
        assert!(h[(0, 3)].norm() > 1e-4);
        assert!(h[(1, 2)].norm() > 1e-4);
        assert!((h[(0, 3)] - h[(1, 2)]).norm() < 1e-16);

        // quadrature route for the same coupling
        let roots = RootTable::build(1, 1).unwrap();
        let r = geom.r;
        let (alpha_low, alpha_high) = (roots.root(0, 1), roots.root(1, 1));
        let (a, b) = (alpha_low / r, alpha_high / r);
        let overlap = radial_overlap(0, a, b, 0.0, r).unwrap();
        let t = 2.0 * std::f64::consts::PI
            * normalization(0, alpha_low, r)
            * normalization(1, alpha_high, r)
            * overlap;
        let w_quad = Complex64::new(0.0, -1.0) * p.a0 * b * t;
        assert!(
            (h[(0, 3)] - w_quad).norm() < 1e-10 * w_quad.norm(),
            "analytic {} vs quadrature {}",
            h[(0, 3)],
            w_quad
        );

        // eigenvalues of the two decoupled 2x2 blocks
        let two_level = |d1: f64, d2: f64, w: Complex64| {
            let mid = 0.5 * (d1 + d2);
            let half = 0.5 * (d1 - d2);
            let disc = (half * half + w.norm_sqr()).sqrt();
            (mid - disc, mid + disc)
        };
        let (lo14, hi14) = two_level(h[(0, 0)].re, h[(3, 3)].re, w_quad);
        let (lo23, hi23) = two_level(h[(1, 1)].re, h[(2, 2)].re, w_quad);
        let mut expected = [lo14, hi14, lo23, hi23];
        expected.sort_by(f64::total_cmp);
        let got = crate::linalg::eigvalsh(h).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-10, "{g} vs {e}");
        }
    }

    #[test]
    fn debug_dump_shape() {
        let block = assemble(table_i(), WireGeometry::default_wire(), 1, 0.02, 2).unwrap();
        let dump = block.to_debug_json();
        assert_eq!(dump["n"], 2);
        assert_eq!(dump["matrix"].as_array().unwrap().len(), 64);
    }

    #[test]
    fn assembly_is_deterministic() {
        let p = table_i();
        let geom = WireGeometry::default_wire();
        let b1 = assemble(p, geom, 1, 0.05, 10).unwrap();
        let b2 = assemble(p, geom, 1, 0.05, 10).unwrap();
        assert_eq!(b1.matrix, b2.matrix);
    }

    #[test]
    fn bulk_dispersion_values() {
        let p = table_i();
        let (lo, hi) = bulk_dispersion(&p, 0.0, 0.0);
        assert!((lo - (-0.2868)).abs() < 1e-12);
        assert!((hi - 0.2732).abs() < 1e-12);

        let mut decoupled = p;
        decoupled.a0 = 0.0;
        decoupled.b0 = 0.0;
        let (lo, hi) = bulk_dispersion(&decoupled, 0.13, 0.04);
        let kz2 = 0.13f64 * 0.13;
        let kp2 = 0.04f64 * 0.04;
        let eps = p.c0 + p.c1 * kz2 + p.c2 * kp2;
        let m = (p.m0 + p.m1 * kz2 + p.m2 * kp2).abs();
        assert!((lo - (eps - m)).abs() < 1e-14);
        assert!((hi - (eps + m)).abs() < 1e-14);

        let (lo, hi) = bulk_dispersion(&p, 0.1, 0.0);
        let eps = p.c0 + p.c1 * 0.01;
        let m = p.m0 + p.m1 * 0.01;
        let gap = (m * m + p.b0 * p.b0 * 0.01).sqrt();
        assert!((lo - (eps - gap)).abs() < 1e-14);
        assert!((hi - (eps + gap)).abs() < 1e-14);
    }

    #[test]
    fn gap_window_flat_bands() {
        let mut p = table_i();
        p.a0 = 0.0;
        p.b0 = 0.0;
        p.m2 = 0.0;
        p.c2 = 0.0;
        let (lo, hi) = gap_window(&p, 0.0).unwrap();
        assert!((lo - (p.c0 - p.m0)).abs() < 1e-14);
        assert!((hi - (p.c0 + p.m0)).abs() < 1e-14);
    }

    #[test]
    fn gap_window_regression_pinned() {
        // frozen from the 10^4-point scan oracle over k_par in [0, 0.2]
        let p = table_i();
        let (lo, hi) = gap_window(&p, 0.0).unwrap();
        assert!((lo - (-0.193166381)).abs() < 1e-8);
        assert!((hi - 0.270641807).abs() < 1e-8);
        let (lo, hi) = gap_window(&p, 0.1).unwrap();
        assert!((lo - (-0.247914616)).abs() < 1e-8);
        assert!((hi - 0.290453408).abs() < 1e-8);
    }

    #[test]
    fn gap_window_stays_open_over_kz() {
        let p = table_i();
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=30 {
            let k_z = -0.3 + 0.6 * i as f64 / 30.0;
            let (lo, hi) = gap_window(&p, k_z).unwrap();
            assert!(hi - lo > 0.0, "window closed at k_z={k_z}");
            if let Some((plo, phi)) = prev {
                // even symmetry in k_z
                let _ = (plo, phi);
            }
            prev = Some((lo, hi));
        }
        // symmetry under k_z -> -k_z
        let (lo1, hi1) = gap_window(&p, 0.17).unwrap();
        let (lo2, hi2) = gap_window(&p, -0.17).unwrap();
        assert!((lo1 - lo2).abs() < 1e-14 && (hi1 - hi2).abs() < 1e-14);
    }
}
