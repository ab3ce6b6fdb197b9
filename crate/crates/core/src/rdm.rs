//! Reduced density matrices of a variational spinor state.
//!
//! Sector matrices ρ_X (4×4) integrate the spinor outer product over the
//! disk minus a region X built from the tripartition sectors; the
//! mode-dependent matrix ρ_MD (4N×4N) integrates pairs of basis modes over
//! the annulus Ω outside all three sectors. Both reduce, through the
//! product structure of the basis, to the cached radial overlaps of
//! [`OverlapTable`] and analytic angular factors. The z direction is a
//! plane wave and cancels in every bilinear.
//!
//! Complement integration is organized by inclusion-exclusion: the full
//! disk gives δ_nm orthonormality, so only single-sector angular integrals
//! and [0,Rc]/[Rc,R] radial integrals are ever evaluated.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{kitaev_sectors, OverlapTable, QuadError, WireGeometry};
use crate::linalg::{self, CMatrix, CVector, LinalgError};
use crate::spectrum::VariationalState;

const HERMITICITY_TOL: f64 = 1e-10;
/// Eigenvalues above -1e-10 are treated as quadrature noise and clipped.
pub const PSD_CLIP: f64 = 1e-10;

#[derive(Debug, Clone, Error)]
pub enum RdmError {
    #[error("matrix is not Hermitian within {HERMITICITY_TOL:e}: defect {defect:.3e}")]
    NotHermitian { defect: f64 },
    #[error("matrix trace {trace:.3e} cannot be normalized")]
    BadTrace { trace: f64 },
    #[error("complement region carries no weight (norm {norm:.3e})")]
    EmptyComplement { norm: f64 },
    #[error("state has no weight in the annulus (norm {norm:.3e})")]
    ZeroWeight { norm: f64 },
    #[error("eigenvalue {value:.3e} below the PSD tolerance")]
    NotPsd { value: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Hermitian, positive-semidefinite, trace-one complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
    normalized: bool,
}

impl DensityMatrix {
    /// Wrap a matrix that should already be a density matrix: Hermitian
    /// within tolerance (symmetrized) and trace 1.
    pub fn new(mat: CMatrix) -> Result<Self, RdmError> {
        let defect = linalg::hermiticity_defect(&mat);
        if defect > HERMITICITY_TOL {
            return Err(RdmError::NotHermitian { defect });
        }
        let mat = linalg::hermitize(&mat);
        let trace = linalg::trace(&mat).re;
        if !trace.is_finite() || trace <= 0.0 {
            return Err(RdmError::BadTrace { trace });
        }
        let normalized = (trace - 1.0).abs() <= 1e-10;
        Ok(Self { mat, normalized })
    }

    /// Normalize an unnormalized Hermitian PSD matrix to unit trace.
    pub fn from_unnormalized(mat: CMatrix) -> Result<Self, RdmError> {
        let defect = linalg::hermiticity_defect(&mat);
        if defect > HERMITICITY_TOL * linalg::trace(&mat).re.abs().max(1.0) {
            return Err(RdmError::NotHermitian { defect });
        }
        let mat = linalg::hermitize(&mat);
        let trace = linalg::trace(&mat).re;
        if !trace.is_finite() || trace <= 1e-300 {
            return Err(RdmError::BadTrace { trace });
        }
        Ok(Self { mat: mat / Complex64::from(trace), normalized: true })
    }

    pub fn from_pure(psi: &CVector) -> Self {
        let norm = psi.norm();
        let psi = psi / Complex64::from(norm);
        Self { mat: &psi * psi.adjoint(), normalized: true }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim) / Complex64::from(dim as f64),
            normalized: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.mat).re
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, RdmError> {
        Ok(linalg::eigvalsh(&self.mat)?.as_slice().to_vec())
    }

    /// Fail if any eigenvalue lies below -tol.
    pub fn validate_psd(&self, tol: f64) -> Result<(), RdmError> {
        let values = self.eigenvalues()?;
        if let Some(&min) = values.first() {
            if min < -tol {
                return Err(RdmError::NotPsd { value: min });
            }
        }
        Ok(())
    }

    /// ||ρ² − ρ|| (zero for a pure state).
    pub fn purity_defect(&self) -> f64 {
        (&self.mat * &self.mat - &self.mat).norm()
    }
}

impl fmt::Display for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix(dim={}, trace={:.6})", self.dim(), self.trace())
    }
}

/// A tripartition region: one of the sectors or a union of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    C,
    Ab,
    Bc,
    Ac,
    Abc,
}

impl Region {
    pub const ALL: [Region; 7] =
        [Region::A, Region::B, Region::C, Region::Ab, Region::Bc, Region::Ac, Region::Abc];

    /// Indices into the [A, B, C] sector array.
    pub fn sector_indices(&self) -> &'static [usize] {
        match self {
            Region::A => &[0],
            Region::B => &[1],
            Region::C => &[2],
            Region::Ab => &[0, 1],
            Region::Bc => &[1, 2],
            Region::Ac => &[0, 2],
            Region::Abc => &[0, 1, 2],
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Region::A => "A",
            Region::B => "B",
            Region::C => "C",
            Region::Ab => "AB",
            Region::Bc => "BC",
            Region::Ac => "AC",
            Region::Abc => "ABC",
        };
        f.write_str(s)
    }
}

fn family_of_slot(slot: usize) -> usize {
    slot / 2
}

fn dl_of_slots(s: usize, sp: usize) -> i32 {
    // slots 0,1 carry angular index L; slots 2,3 carry L+1
    family_of_slot(s) as i32 - family_of_slot(sp) as i32
}

/// Q(s, s') = Σ_{n,m} c^s_n (c^{s'}_m)* × (normalized radial overlap over
/// [0, Rc]); the angular factor is attached per sector afterwards.
fn sector_bilinears(state: &VariationalState, table: &OverlapTable) -> [[Complex64; 4]; 4] {
    let n_basis = state.n_basis;
    let mut q = [[Complex64::new(0.0, 0.0); 4]; 4];
    for s in 0..4 {
        for sp in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..n_basis {
                let cs = state.coeff(s as u8 + 1, n);
                if cs.norm_sqr() == 0.0 {
                    continue;
                }
                for m in 0..n_basis {
                    let csp = state.coeff(sp as u8 + 1, m).conj();
                    let g = match (family_of_slot(s), family_of_slot(sp)) {
                        (a, b) if a == b => table.inner_same(a, n, m),
                        (0, 1) => table.inner_cross(n, m),
                        _ => table.inner_cross(m, n),
                    };
                    acc += cs * csp * g;
                }
            }
            q[s][sp] = acc;
        }
    }
    q
}

/// Full-disk integral: exact δ_nm orthonormality, so just the per-slot
/// coefficient Gram matrix within each family.
pub fn full_disk_unnormalized(state: &VariationalState) -> CMatrix {
    let n_basis = state.n_basis;
    let mut u = CMatrix::zeros(4, 4);
    for s in 0..4 {
        for sp in 0..4 {
            if family_of_slot(s) != family_of_slot(sp) {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..n_basis {
                acc += state.coeff(s as u8 + 1, n) * state.coeff(sp as u8 + 1, n).conj();
            }
            u[(s, sp)] = acc;
        }
    }
    u
}

/// Annulus integral over [Rc, R] × [0, 2π]; the angular factor selects
/// same-family slot pairs.
pub fn annulus_unnormalized(state: &VariationalState, table: &OverlapTable) -> CMatrix {
    let n_basis = state.n_basis;
    let mut u = CMatrix::zeros(4, 4);
    for s in 0..4 {
        for sp in 0..4 {
            let fam = family_of_slot(s);
            if fam != family_of_slot(sp) {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..n_basis {
                let cs = state.coeff(s as u8 + 1, n);
                if cs.norm_sqr() == 0.0 {
                    continue;
                }
                for m in 0..n_basis {
                    acc += cs * state.coeff(sp as u8 + 1, m).conj() * table.outer_same(fam, n, m);
                }
            }
            u[(s, sp)] = acc * Complex64::from(std::f64::consts::TAU);
        }
    }
    u
}

/// ∫_X ψψ† over one sector X (index into [A, B, C]).
pub fn sector_integral_unnormalized(
    state: &VariationalState,
    sector_index: usize,
    geom: &WireGeometry,
    table: &OverlapTable,
) -> CMatrix {
    let sectors = kitaev_sectors(geom);
    let q = sector_bilinears(state, table);
    let mut u = CMatrix::zeros(4, 4);
    for s in 0..4 {
        for sp in 0..4 {
            let ang = sectors[sector_index].angular_overlap(dl_of_slots(s, sp));
            u[(s, sp)] = ang * q[s][sp];
        }
    }
    u
}

/// Unnormalized complement integral ∫_{D∖X} ψψ† for a region X.
pub fn complement_unnormalized(
    state: &VariationalState,
    region: Region,
    geom: &WireGeometry,
    table: &OverlapTable,
) -> CMatrix {
    let sectors = kitaev_sectors(geom);
    let q = sector_bilinears(state, table);
    let mut u = full_disk_unnormalized(state);
    for s in 0..4 {
        for sp in 0..4 {
            let dl = dl_of_slots(s, sp);
            let ang: Complex64 = region
                .sector_indices()
                .iter()
                .map(|&i| sectors[i].angular_overlap(dl))
                .sum();
            u[(s, sp)] -= ang * q[s][sp];
        }
    }
    u
}

/// Sector reduced density matrix: integrate |ψ⟩⟨ψ| over the disk minus
/// the region, normalize to unit trace.
pub fn sector_rdm(
    state: &VariationalState,
    region: Region,
    geom: &WireGeometry,
    table: &OverlapTable,
) -> Result<DensityMatrix, RdmError> {
    let u = complement_unnormalized(state, region, geom, table);
    let trace = linalg::trace(&u).re;
    if trace <= 1e-14 {
        return Err(RdmError::EmptyComplement { norm: trace });
    }
    DensityMatrix::from_unnormalized(u)
}

/// Pure-state density matrix |ψ⟩⟨ψ| in the coefficient basis (4N×4N).
pub fn pure_density(state: &VariationalState) -> DensityMatrix {
    DensityMatrix::from_pure(&state.coeffs)
}

/// JSON dump of a density matrix with its provenance: state quantum
/// numbers, the traced region (when applicable) and the sector radius.
pub fn export_json(
    rho: &DensityMatrix,
    state: &VariationalState,
    region: Option<Region>,
    rc: f64,
) -> serde_json::Value {
    let entries: Vec<[f64; 2]> = rho
        .matrix()
        .row_iter()
        .flat_map(|row| row.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
        .collect();
    serde_json::json!({
        "dim": rho.dim(),
        "l": state.l,
        "k_z": state.k_z,
        "n_basis": state.n_basis,
        "label": state.label.to_string(),
        "region": region.map(|r| r.to_string()),
        "rc": rc,
        "layout": "row-major, [re, im] pairs",
        "entries": entries,
    })
}

/// Mode-dependent reduced density matrix over the annulus Ω (4N×4N):
/// entry ((s,n),(s',m)) = c_{s,n} c*_{s',m} · 2π δ_{fam} · outer overlap,
/// normalized to unit trace.
pub fn mode_rdm(
    state: &VariationalState,
    table: &OverlapTable,
) -> Result<DensityMatrix, RdmError> {
    let n_basis = state.n_basis;
    let dim = 4 * n_basis;
    let mut u = CMatrix::zeros(dim, dim);
    for s in 0..4 {
        for sp in 0..4 {
            let fam = family_of_slot(s);
            if fam != family_of_slot(sp) {
                continue;
            }
            for n in 0..n_basis {
                let cs = state.coeff(s as u8 + 1, n);
                for m in 0..n_basis {
                    let v = cs
                        * state.coeff(sp as u8 + 1, m).conj()
                        * Complex64::from(std::f64::consts::TAU * table.outer_same(fam, n, m));
                    u[(s * n_basis + n, sp * n_basis + m)] = v;
                }
            }
        }
    }
    let norm = linalg::trace(&u).re;
    if norm < 1e-14 {
        return Err(RdmError::ZeroWeight { norm });
    }
    DensityMatrix::from_unnormalized(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{bessel_j, normalization, GaussLegendre, MaterialParams, RootTable};
    use crate::spectrum::{solve_channel, StateLabel, DEFAULT_MARGIN};
    use rand::{Rng, SeedableRng};

    fn setup(l: u32, n_basis: usize) -> (WireGeometry, RootTable, OverlapTable) {
        let geom = WireGeometry::default_wire();
        let roots = RootTable::build(l + 1, n_basis).unwrap();
        let table = OverlapTable::build(l, n_basis, &geom, &roots).unwrap();
        (geom, roots, table)
    }

    fn random_state(l: u32, n_basis: usize, seed: u64) -> VariationalState {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let mut coeffs = CVector::from_fn(4 * n_basis, |_, _| {
            crate::linalg::complex_gaussian(&mut rng)
        });
        let norm = coeffs.norm();
        coeffs /= Complex64::from(norm);
        VariationalState {
            l,
            k_z: 0.1,
            n_basis,
            energy: 0.0,
            coeffs,
            label: StateLabel::Valence,
        }
    }

    #[test]
    fn single_slot_state_gives_rank_one_rdm() {
        let (geom, _, table) = setup(0, 5);
        let mut state = random_state(0, 5, 1);
        // zero out all slots but slot 1
        for i in 5..20 {
            state.coeffs[i] = Complex64::new(0.0, 0.0);
        }
        let norm = state.coeffs.norm();
        state.coeffs /= Complex64::from(norm);
        let rho = sector_rdm(&state, Region::A, &geom, &table).unwrap();
        let m = rho.matrix();
        assert!((m[(0, 0)].re - 1.0).abs() < 1e-12);
        for i in 1..4 {
            assert!(m[(i, i)].re.abs() < 1e-14);
        }
        rho.validate_psd(PSD_CLIP).unwrap();
    }

    #[test]
    fn every_region_yields_unit_trace_psd() {
        let params = MaterialParams::bi2se3();
        let geom = WireGeometry::default_wire();
        let n_basis = 12;
        let (states, _) = solve_channel(params, geom, 1, 0.1, n_basis, DEFAULT_MARGIN).unwrap();
        let roots = RootTable::build(2, n_basis).unwrap();
        let table = OverlapTable::build(1, n_basis, &geom, &roots).unwrap();
        for state in states.iter().step_by(9) {
            for region in Region::ALL {
                let rho = sector_rdm(state, region, &geom, &table).unwrap();
                assert!((rho.trace() - 1.0).abs() < 1e-10);
                rho.validate_psd(PSD_CLIP).unwrap();
            }
        }
    }

    #[test]
    fn sector_partition_identity() {
        // U_A + U_B + U_C = 2 U_D + U_Ω entrywise
        let (geom, _, table) = setup(2, 10);
        for seed in [3u64, 4, 5] {
            let state = random_state(2, 10, seed);
            let ua = complement_unnormalized(&state, Region::A, &geom, &table);
            let ub = complement_unnormalized(&state, Region::B, &geom, &table);
            let uc = complement_unnormalized(&state, Region::C, &geom, &table);
            let ud = full_disk_unnormalized(&state);
            let uo = annulus_unnormalized(&state, &table);
            let lhs = ua + ub + uc;
            let rhs = ud.scale(2.0) + uo;
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn pairwise_regions_by_two_routes() {
        // U_AB assembled by inclusion-exclusion equals annulus + sector C
        let (geom, _, table) = setup(1, 8);
        let state = random_state(1, 8, 6);
        let pairs = [
            (Region::Ab, 2usize),
            (Region::Bc, 0),
            (Region::Ac, 1),
        ];
        for (region, other) in pairs {
            let direct = complement_unnormalized(&state, region, &geom, &table);
            let alt = annulus_unnormalized(&state, &table)
                + sector_integral_unnormalized(&state, other, &geom, &table);
            assert!((direct - alt).norm() < 1e-10, "{region}");
        }
        // ABC complement is exactly the annulus
        let abc = complement_unnormalized(&state, Region::Abc, &geom, &table);
        let ann = annulus_unnormalized(&state, &table);
        assert!((abc - ann).norm() < 1e-12);
    }

    /// Brute-force 2-D quadrature of ∫ ψ_s ψ_{s'}* ρ dρ dφ over a product
    /// cell, independent of the overlap tables and angular algebra.
    fn brute_cell(
        state: &VariationalState,
        roots: &RootTable,
        r: f64,
        rho_range: (f64, f64),
        phi_range: (f64, f64),
    ) -> CMatrix {
        let rule = GaussLegendre::new(24);
        let rad = rule.panel_points(rho_range.0, rho_range.1, 40);
        let ang = rule.panel_points(phi_range.0, phi_range.1, 24);
        let n_basis = state.n_basis;
        let l = state.l;
        let mut u = CMatrix::zeros(4, 4);
        for &(rho, wr) in &rad {
            // spinor component values at this radius (angular part split off)
            let mut comp = [Complex64::new(0.0, 0.0); 4];
            for s in 0..4usize {
                let nu = if s < 2 { l } else { l + 1 };
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..n_basis {
                    let alpha = roots.root(nu, n + 1);
                    let a_norm = normalization(nu, alpha, r);
                    acc += state.coeff(s as u8 + 1, n)
                        * Complex64::from(a_norm * bessel_j(nu, alpha * rho / r));
                }
                comp[s] = acc;
            }
            for &(phi, wp) in &ang {
                for s in 0..4 {
                    for sp in 0..4 {
                        let dl = dl_of_slots(s, sp) as f64;
                        let phase = Complex64::new(0.0, dl * phi).exp();
                        u[(s, sp)] += comp[s] * comp[sp].conj() * phase
                            * Complex64::from(wr * wp * rho);
                    }
                }
            }
        }
        u
    }

    #[test]
    fn complement_matches_brute_force_quadrature() {
        use std::f64::consts::PI;
        let l = 1u32;
        let n_basis = 4;
        let (geom, roots, table) = setup(l, n_basis);
        let state = random_state(l, n_basis, 9);
        // D ∖ A = annulus + inner disk over the angular complement of A
        let brute = brute_cell(&state, &roots, geom.r, (geom.rc, geom.r), (0.0, 2.0 * PI))
            + brute_cell(
                &state,
                &roots,
                geom.r,
                (0.0, geom.rc),
                (PI / 2.0, 11.0 * PI / 6.0),
            );
        let fast = complement_unnormalized(&state, Region::A, &geom, &table);
        assert!(
            (&brute - &fast).norm() < 1e-9,
            "brute vs fast: {:.3e}",
            (&brute - &fast).norm()
        );
    }

    #[test]
    fn full_region_with_vanishing_rc_reduces_to_coefficient_gram() {
        // complement of ABC -> full disk: cross-family entries die by
        // angular orthogonality, diagonals become per-slot weights
        let l = 1u32;
        let n_basis = 6;
        let geom = WireGeometry::new(600.0, 0.5).unwrap();
        let roots = RootTable::build(l + 1, n_basis).unwrap();
        let table = OverlapTable::build(l, n_basis, &geom, &roots).unwrap();
        let state = random_state(l, n_basis, 77);
        let rho = sector_rdm(&state, Region::Abc, &geom, &table).unwrap();
        let m = rho.matrix();
        for s in 0..4usize {
            let weight: f64 = (0..n_basis)
                .map(|n| state.coeff(s as u8 + 1, n).norm_sqr())
                .sum();
            assert!((m[(s, s)].re - weight).abs() < 1e-6, "slot {s}");
        }
        // cross-family entries vanish with the sector area
        assert!(m[(0, 2)].norm() < 1e-6);
        assert!(m[(1, 3)].norm() < 1e-6);
    }

    #[test]
    fn pure_density_properties() {
        let state = random_state(0, 6, 11);
        let rho = pure_density(&state);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(rho.purity_defect() < 1e-12);
        // unit coordinate vector
        let mut e1 = CVector::zeros(8);
        e1[0] = Complex64::new(1.0, 0.0);
        let rho = DensityMatrix::from_pure(&e1);
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((rho.matrix().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mode_rdm_single_coefficient_is_pure() {
        let (_, _, table) = setup(0, 5);
        let mut state = random_state(0, 5, 13);
        for i in 0..20 {
            state.coeffs[i] = Complex64::new(0.0, 0.0);
        }
        state.coeffs[2] = Complex64::new(1.0, 0.0);
        let rho = mode_rdm(&state, &table).unwrap();
        assert!((rho.matrix()[(2, 2)].re - 1.0).abs() < 1e-12);
        assert!(rho.purity_defect() < 1e-12);
    }

    #[test]
    fn mode_rdm_phase_invariance_and_trace() {
        let (_, _, table) = setup(1, 8);
        let state = random_state(1, 8, 17);
        let rho1 = mode_rdm(&state, &table).unwrap();
        let mut shifted = state.clone();
        let phase = Complex64::new(0.0, 0.77).exp();
        shifted.coeffs *= phase;
        let rho2 = mode_rdm(&shifted, &table).unwrap();
        assert!((rho1.matrix() - rho2.matrix()).norm() < 1e-14);
        assert!((rho1.trace() - 1.0).abs() < 1e-10);
        rho1.validate_psd(PSD_CLIP).unwrap();
    }

    #[test]
    fn mode_rdm_couples_slots_sharing_the_envelope() {
        // with only (slot1, n) and (slot2, n) populated the 2x2 block is
        // an exact pure-state outer product of the two coefficients
        let (_, _, table) = setup(0, 4);
        let mut state = random_state(0, 4, 23);
        for i in 0..16 {
            state.coeffs[i] = Complex64::new(0.0, 0.0);
        }
        let c1 = Complex64::new(0.6, 0.2);
        let c2 = Complex64::new(-0.3, 0.7);
        let norm = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
        state.coeffs[1] = c1 / norm; // slot 1, n = 1
        state.coeffs[4 + 1] = c2 / norm; // slot 2, n = 1
        let rho = mode_rdm(&state, &table).unwrap();
        let m = rho.matrix();
        let w1 = c1.norm_sqr() / (norm * norm);
        let expected_offdiag = (c1 / norm) * (c2 / norm).conj();
        assert!((m[(1, 1)].re - w1).abs() < 1e-12);
        assert!((m[(1, 5)] - expected_offdiag).norm() < 1e-12);
        assert!(rho.purity_defect() < 1e-10);
    }

    #[test]
    fn json_export_shape() {
        let (geom, _, table) = setup(0, 3);
        let state = random_state(0, 3, 41);
        let rho = sector_rdm(&state, Region::Ab, &geom, &table).unwrap();
        let dump = export_json(&rho, &state, Some(Region::Ab), geom.rc);
        assert_eq!(dump["dim"], 4);
        assert_eq!(dump["region"], "AB");
        assert_eq!(dump["entries"].as_array().unwrap().len(), 16);
        let m = mode_rdm(&state, &table).unwrap();
        let dump = export_json(&m, &state, None, geom.rc);
        assert_eq!(dump["dim"], 12);
        assert!(dump["region"].is_null());
    }

    #[test]
    fn density_matrix_validation() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(31);
        let bad = CMatrix::from_fn(3, 3, |_, _| crate::linalg::complex_gaussian(&mut rng));
        assert!(matches!(DensityMatrix::new(bad), Err(RdmError::NotHermitian { .. })));
        let zero = CMatrix::zeros(3, 3);
        assert!(matches!(
            DensityMatrix::from_unnormalized(zero),
            Err(RdmError::BadTrace { .. })
        ));
        let _ = rng.random::<f64>();
    }
}
