//! Batched radial overlap integrals for one (L, N) channel.
//!
//! All sector and annulus integrals reduce to radial overlaps of disk
//! modes over [0, Rc] and [Rc, R]. These are evaluated on one shared
//! composite Gauss-Legendre grid (with Rc as a panel boundary and the
//! panel count scaled to the fastest oscillation α_N), so each table build
//! costs one pass of Bessel evaluations.

use nalgebra::DMatrix;

use super::bessel::{bessel_j, RootTable};
use super::quad::{oscillation_panels, GaussLegendre, QuadError};
use super::{normalization, WireGeometry};

/// Normalized radial overlaps of the two mode families of a channel:
/// family 0 holds order-L modes (spinor slots 1-2), family 1 holds order
/// L+1 modes (slots 3-4). Entries carry the A_{L,n} A_{L,m} normalization,
/// so the full-disk same-family overlap is δ_nm / 2π.
#[derive(Debug, Clone)]
pub struct OverlapTable {
    l: u32,
    n_basis: usize,
    rc: f64,
    inner: [DMatrix<f64>; 2],
    outer: [DMatrix<f64>; 2],
    inner_cross: DMatrix<f64>,
}

impl OverlapTable {
    pub fn build(
        l: u32,
        n_basis: usize,
        geom: &WireGeometry,
        roots: &RootTable,
    ) -> Result<Self, QuadError> {
        let r = geom.r;
        let rc = geom.rc;
        let families = [l, l + 1];
        let alpha_max = families
            .iter()
            .map(|&nu| roots.root(nu, n_basis))
            .fold(0.0f64, f64::max);

        // shared grid: [0, Rc] and [Rc, R] segments, Rc a hard boundary
        let rule = GaussLegendre::new(16);
        let k_max = alpha_max / r;
        let mut grid = rule.panel_points(0.0, rc, oscillation_panels(k_max, k_max, 0.0, rc));
        let split = grid.len();
        grid.extend(rule.panel_points(rc, r, oscillation_panels(k_max, k_max, rc, r)));

        // normalized mode values on the grid, per family and root
        let tables: Vec<Vec<Vec<f64>>> = families
            .iter()
            .map(|&nu| {
                (1..=n_basis)
                    .map(|n| {
                        let alpha = roots.root(nu, n);
                        let a_norm = normalization(nu, alpha, r);
                        grid.iter()
                            .map(|&(rho, _)| a_norm * bessel_j(nu, alpha * rho / r))
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let sum_range = |fa: &[f64], fb: &[f64], range: std::ops::Range<usize>| -> f64 {
            range
                .map(|i| {
                    let (rho, w) = grid[i];
                    w * rho * fa[i] * fb[i]
                })
                .sum()
        };

        let mut inner = [
            DMatrix::zeros(n_basis, n_basis),
            DMatrix::zeros(n_basis, n_basis),
        ];
        let mut outer = inner.clone();
        for fam in 0..2 {
            for n in 0..n_basis {
                for m in n..n_basis {
                    let v_in = sum_range(&tables[fam][n], &tables[fam][m], 0..split);
                    let v_out = sum_range(&tables[fam][n], &tables[fam][m], split..grid.len());
                    inner[fam][(n, m)] = v_in;
                    inner[fam][(m, n)] = v_in;
                    outer[fam][(n, m)] = v_out;
                    outer[fam][(m, n)] = v_out;
                }
            }
        }
        let mut inner_cross = DMatrix::zeros(n_basis, n_basis);
        for n in 0..n_basis {
            for m in 0..n_basis {
                inner_cross[(n, m)] = sum_range(&tables[0][n], &tables[1][m], 0..split);
            }
        }

        let table = Self { l, n_basis, rc, inner, outer, inner_cross };
        table.self_check()?;
        Ok(table)
    }

    /// Grid sanity: inner + outer must reproduce the exact full-disk
    /// orthonormality δ_nm / 2π.
    fn self_check(&self) -> Result<(), QuadError> {
        let norm = 1.0 / std::f64::consts::TAU;
        let mut worst = 0.0f64;
        for fam in 0..2 {
            for n in 0..self.n_basis {
                for m in 0..self.n_basis {
                    let total = self.inner[fam][(n, m)] + self.outer[fam][(n, m)];
                    let expected = if n == m { norm } else { 0.0 };
                    worst = worst.max((total - expected).abs());
                }
            }
        }
        let allowed = 5e-11;
        if worst > allowed {
            return Err(QuadError::Tolerance { estimate: worst, allowed });
        }
        Ok(())
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn rc(&self) -> f64 {
        self.rc
    }

    /// Mode family of a spinor slot (1..=4): 0 for slots 1-2, 1 for 3-4.
    pub fn family_of_slot(slot: u8) -> usize {
        debug_assert!((1..=4).contains(&slot));
        ((slot - 1) / 2) as usize
    }

    /// A_n A_m ∫_0^Rc J J ρ dρ within one family; n, m are 0-based.
    pub fn inner_same(&self, fam: usize, n: usize, m: usize) -> f64 {
        self.inner[fam][(n, m)]
    }

    /// A_n A_m ∫_Rc^R J J ρ dρ within one family.
    pub fn outer_same(&self, fam: usize, n: usize, m: usize) -> f64 {
        self.outer[fam][(n, m)]
    }

    /// Cross-family ∫_0^Rc: `n` indexes the order-L family, `m` the
    /// order-(L+1) family.
    pub fn inner_cross(&self, n_low: usize, m_high: usize) -> f64 {
        self.inner_cross[(n_low, m_high)]
    }
}
