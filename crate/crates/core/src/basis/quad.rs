//! Gauss-Legendre quadrature and the radial Bessel overlap integrals.
//!
//! Partial-interval overlaps are evaluated by composite Gauss-Legendre
//! with the panel count scaled to the fastest oscillation in the
//! integrand; the closed-form Lommel expressions are kept alongside as an
//! independent route for cross-checks and full-interval shortcuts.

use std::sync::OnceLock;

use thiserror::Error;

use super::bessel::bessel_j;

#[derive(Debug, Clone, Error)]
pub enum QuadError {
    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance {allowed:.3e}")]
    Tolerance { estimate: f64, allowed: f64 },
    #[error("invalid integration interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre recurrence.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 2);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut pd = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                pd = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * pd * pd);
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrate f over [lo, hi] split into `panels` equal panels.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(
        &self,
        lo: f64,
        hi: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let a = lo + p as f64 * h;
            let c = a + 0.5 * h;
            let mut acc = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += w * f(c + 0.5 * h * x);
            }
            total += 0.5 * h * acc;
        }
        total
    }

    /// Absolute nodes and weights of the composite rule on [lo, hi].
    pub fn panel_points(&self, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (hi - lo) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.order());
        for p in 0..panels {
            let c = lo + p as f64 * h + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((c + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }
}

/// Legendre P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Panels needed for an integrand oscillating with total phase
/// ~ (a + b)(hi - lo).
pub fn oscillation_panels(a: f64, b: f64, lo: f64, hi: f64) -> usize {
    let phase = (a.abs() + b.abs()) * (hi - lo);
    let per_osc = phase / std::f64::consts::TAU;
    (1.4 * per_osc).ceil() as usize + 4
}

/// ∫_{r_lo}^{r_hi} J_l(a ρ) J_l(b ρ) ρ dρ by composite Gauss-Legendre,
/// with an error estimate from panel doubling.
pub fn radial_overlap(l: u32, a: f64, b: f64, r_lo: f64, r_hi: f64) -> Result<f64, QuadError> {
    radial_overlap_mixed(l, l, a, b, r_lo, r_hi)
}

/// Same as [`radial_overlap`] but allowing different Bessel orders, as
/// needed by the cross-spinor sector integrals.
pub fn radial_overlap_mixed(
    l1: u32,
    l2: u32,
    a: f64,
    b: f64,
    r_lo: f64,
    r_hi: f64,
) -> Result<f64, QuadError> {
    if !(r_lo >= 0.0 && r_hi > r_lo) {
        return Err(QuadError::BadInterval { lo: r_lo, hi: r_hi });
    }
    let rule = gl16();
    let panels = oscillation_panels(a, b, r_lo, r_hi);
    let f = |rho: f64| bessel_j(l1, a * rho) * bessel_j(l2, b * rho) * rho;
    let coarse = rule.integrate_panels(r_lo, r_hi, panels, f);
    let mut max_integrand = 0.0f64;
    let fine = rule.integrate_panels(r_lo, r_hi, 2 * panels, |rho| {
        let v = f(rho);
        max_integrand = max_integrand.max(v.abs());
        v
    });
    let estimate = (fine - coarse).abs();
    let allowed = 1e-10 * (r_hi - r_lo) * max_integrand.max(f64::MIN_POSITIVE);
    if estimate > allowed {
        return Err(QuadError::Tolerance { estimate, allowed });
    }
    Ok(fine)
}

/// Closed-form (Lommel) ∫_0^z J_l(a ρ) J_l(b ρ) ρ dρ for a ≠ b.
pub fn lommel_cross(l: u32, a: f64, b: f64, z: f64) -> f64 {
    debug_assert!(a != b);
    z * (a * bessel_j(l + 1, a * z) * bessel_j(l, b * z)
        - b * bessel_j(l, a * z) * bessel_j(l + 1, b * z))
        / (a * a - b * b)
}

/// Closed-form ∫_0^z J_l(a ρ)^2 ρ dρ.
pub fn lommel_equal(l: u32, a: f64, z: f64) -> f64 {
    let x = a * z;
    let jl = bessel_j(l, x);
    let jm = if l == 0 { -bessel_j(1, x) } else { bessel_j(l - 1, x) };
    let jp = bessel_j(l + 1, x);
    0.5 * z * z * (jl * jl - jm * jp)
}

/// ∫_{lo}^{hi} J_l(a ρ) J_l(b ρ) ρ dρ in closed form.
pub fn lommel_interval(l: u32, a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let rel = (a - b).abs() / a.abs().max(b.abs());
    if rel < 1e-13 {
        let upper = lommel_equal(l, a, hi);
        let lower = if lo == 0.0 { 0.0 } else { lommel_equal(l, a, lo) };
        upper - lower
    } else {
        let upper = lommel_cross(l, a, b, hi);
        let lower = if lo == 0.0 { 0.0 } else { lommel_cross(l, a, b, lo) };
        upper - lower
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::bessel::RootTable;
    use rand::{Rng, SeedableRng};

    #[test]
    fn gauss_legendre_basics() {
        let rule = GaussLegendre::new(16);
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        // odd powers vanish, x^30 close to exact with 16 nodes
        let int = rule.integrate_panels(-1.0, 1.0, 1, |x| x.powi(31));
        assert!(int.abs() < 1e-15);
        let int = rule.integrate_panels(-1.0, 1.0, 1, |x| x.powi(30));
        assert!((int - 2.0 / 31.0).abs() < 1e-12);
        // two-point rule pins the node layout
        let two = GaussLegendre::new(2);
        assert!((two.nodes[0].abs() - 1.0 / 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn normalization_identity_single_mode() {
        // 2 pi A^2 * overlap(alpha/R, alpha/R, 0, R) = 1
        let r = 600.0;
        let table = RootTable::build(1, 2).unwrap();
        let alpha = table.root(0, 1);
        let a = alpha / r;
        let overlap = radial_overlap(0, a, a, 0.0, r).unwrap();
        let norm = 1.0 / (std::f64::consts::PI.sqrt() * r * bessel_j(1, alpha));
        let check = 2.0 * std::f64::consts::PI * norm * norm * overlap;
        assert!((check - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonality_same_family() {
        let r = 600.0;
        let table = RootTable::build(0, 2).unwrap();
        let a = table.root(0, 1) / r;
        let b = table.root(0, 2) / r;
        let overlap = radial_overlap(0, a, b, 0.0, r).unwrap();
        assert!(overlap.abs() < 1e-12 * r * r);
    }

    #[test]
    fn quadrature_matches_lommel_cross_family() {
        // a from the J_0 family, b from the J_1 family, both order-0 integrand
        let r = 600.0;
        let table = RootTable::build(1, 1).unwrap();
        let a = table.root(0, 1) / r;
        let b = table.root(1, 1) / r;
        let quad = radial_overlap(0, a, b, 0.0, r).unwrap();
        let closed = lommel_interval(0, a, b, 0.0, r);
        assert!(
            (quad - closed).abs() <= 1e-10 * closed.abs(),
            "quad {quad} vs lommel {closed}"
        );
    }

    #[test]
    fn quadrature_matches_lommel_random_pairs() {
        // generic a != b (b drawn from the adjacent root family): relative
        // 1e-10 agreement; same-family pairs are exact zeros and only get
        // the 1e-12 R^2 absolute floor.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let r = 600.0;
        let table = RootTable::build(6, 20).unwrap();
        for i in 0..100 {
            let l = rng.random_range(0..=5u32);
            let n = rng.random_range(1..=20usize);
            let m = rng.random_range(1..=20usize);
            let a = table.root(l, n) / r;
            let cross = i % 2 == 0;
            let b = if cross { table.root(l + 1, m) / r } else { table.root(l, m) / r };
            let quad = radial_overlap(l, a, b, 0.0, r).unwrap();
            let closed = lommel_interval(l, a, b, 0.0, r);
            let tol = 1e-10 * closed.abs() + 1e-12 * r * r;
            assert!(
                (quad - closed).abs() <= tol,
                "l={l} n={n} m={m} cross={cross}: {quad} vs {closed}"
            );
        }
    }

    #[test]
    fn partial_intervals_agree_with_lommel() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let r = 600.0;
        let table = RootTable::build(4, 12).unwrap();
        for _ in 0..40 {
            let l = rng.random_range(0..=4u32);
            let n = rng.random_range(1..=12usize);
            let m = rng.random_range(1..=12usize);
            let a = table.root(l, n) / r;
            let b = table.root(l, m) / r;
            let (lo, hi) = (150.0, r);
            let quad = radial_overlap(l, a, b, lo, hi).unwrap();
            let closed = lommel_interval(l, a, b, lo, hi);
            assert!(
                (quad - closed).abs() <= 1e-9 * closed.abs().max(1.0),
                "l={l}: {quad} vs {closed}"
            );
        }
    }

    #[test]
    fn bad_interval_rejected() {
        assert!(matches!(
            radial_overlap(0, 0.1, 0.1, 10.0, 5.0),
            Err(QuadError::BadInterval { .. })
        ));
    }
}
