//! Material constants, wire geometry and the Dirichlet Bessel basis.
//!
//! The basis functions are J_L(α_n^L ρ/R) e^{iLφ} with Dirichlet roots
//! α_n^L, normalized over the disk of radius R. Slots 1-2 of the spinor
//! carry angular index L, slots 3-4 carry L+1.

mod bessel;
pub mod overlap;
mod quad;

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bessel::{bessel_j, bessel_j_prime, bessel_root, BesselError, RootTable};
pub use overlap::OverlapTable;
pub use quad::{
    lommel_cross, lommel_equal, lommel_interval, oscillation_panels, radial_overlap,
    radial_overlap_mixed, GaussLegendre, QuadError,
};

#[derive(Debug, Clone, Error)]
pub enum BasisError {
    #[error("parameter {name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("wire geometry requires 0 < Rc < R, got R = {r}, Rc = {rc}")]
    Geometry { r: f64, rc: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Bessel(#[from] BesselError),
}

/// The eight k·p coefficients of the four-band Bi₂Se₃ model.
///
/// Units follow dimensional analysis of the Hamiltonian: C0, M0 in eV;
/// C1, C2, M1, M2 in eV·Å² (they multiply k²); A0, B0 in eV·Å (they
/// multiply a single power of k). Quoted parameter tables sometimes label
/// C1, M1 as eV·Å and A0 as eV·Å²; the values are used as quoted with the
/// dimensionally consistent units adopted here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub a0: f64,
    pub b0: f64,
}

impl MaterialParams {
    /// Default Bi₂Se₃ parameter set.
    pub fn bi2se3() -> Self {
        Self {
            c0: -0.0068,
            c1: 1.3,
            c2: 19.6,
            m0: 0.28,
            m1: -10.0,
            m2: -56.6,
            a0: 4.1,
            b0: 2.2,
        }
    }

    pub fn validate(&self) -> Result<(), BasisError> {
        for (name, value) in [
            ("C0", self.c0),
            ("C1", self.c1),
            ("C2", self.c2),
            ("M0", self.m0),
            ("M1", self.m1),
            ("M2", self.m2),
            ("A0", self.a0),
            ("B0", self.b0),
        ] {
            if !value.is_finite() {
                return Err(BasisError::NonFinite { name, value });
            }
        }
        Ok(())
    }

    /// Band inversion: M0·M1 < 0 and M0·M2 < 0.
    pub fn is_inverted(&self) -> bool {
        self.m0 * self.m1 < 0.0 && self.m0 * self.m2 < 0.0
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self::bi2se3()
    }
}

/// Wire radius R and sector radius Rc, both in Å.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireGeometry {
    pub r: f64,
    pub rc: f64,
}

impl WireGeometry {
    pub fn new(r: f64, rc: f64) -> Result<Self, BasisError> {
        if !(r.is_finite() && rc.is_finite() && rc > 0.0 && rc < r) {
            return Err(BasisError::Geometry { r, rc });
        }
        Ok(Self { r, rc })
    }

    /// 120 nm diameter wire with Rc = 150 Å.
    pub fn default_wire() -> Self {
        Self { r: 600.0, rc: 150.0 }
    }

    pub fn with_rc(&self, rc: f64) -> Result<Self, BasisError> {
        Self::new(self.r, rc)
    }
}

impl Default for WireGeometry {
    fn default() -> Self {
        Self::default_wire()
    }
}

/// Normalization A_{L,n} = 1 / (√π R J_{L+1}(α_n^L)) of a disk mode, Å⁻¹,
/// given a precomputed root.
pub fn normalization(l_eff: u32, alpha: f64, r: f64) -> f64 {
    1.0 / (std::f64::consts::PI.sqrt() * r * bessel_j(l_eff + 1, alpha))
}

/// Normalization of the (l_eff, n) disk mode; finds the root first.
pub fn mode_normalization(l_eff: u32, n: usize, r: f64) -> Result<f64, BesselError> {
    Ok(normalization(l_eff, bessel_root(l_eff, n)?, r))
}

/// One Bessel basis mode: spinor slot, effective angular index, root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisMode {
    /// Spinor slot, 1..=4.
    pub slot: u8,
    /// Angular index of this slot: L for slots 1-2, L+1 for slots 3-4.
    pub l_eff: u32,
    /// Root index, 1-based.
    pub n: usize,
    /// alpha_n^{l_eff}, the n-th positive zero of J_{l_eff}.
    pub alpha: f64,
    /// Normalization constant, Å⁻¹.
    pub a_norm: f64,
}

impl BasisMode {
    pub fn new(slot: u8, l: u32, n: usize, roots: &RootTable, r: f64) -> Self {
        debug_assert!((1..=4).contains(&slot));
        let l_eff = if slot <= 2 { l } else { l + 1 };
        let alpha = roots.root(l_eff, n);
        Self {
            slot,
            l_eff,
            n,
            alpha,
            a_norm: normalization(l_eff, alpha, r),
        }
    }

    /// The slot-major basis ordering used for all 4N-dimensional objects:
    /// slot 1 indices 0..N, then slots 2, 3, 4, root index ascending.
    pub fn layout(l: u32, n_basis: usize, roots: &RootTable, r: f64) -> Vec<BasisMode> {
        let mut modes = Vec::with_capacity(4 * n_basis);
        for slot in 1..=4u8 {
            for n in 1..=n_basis {
                modes.push(BasisMode::new(slot, l, n, roots, r));
            }
        }
        modes
    }
}

/// ∫_{phi_lo}^{phi_hi} e^{i dL φ} dφ.
pub fn angular_overlap(dl: i32, phi_lo: f64, phi_hi: f64) -> Complex64 {
    if dl == 0 {
        return Complex64::new(phi_hi - phi_lo, 0.0);
    }
    let k = dl as f64;
    let at = |phi: f64| Complex64::new(0.0, k * phi).exp();
    (at(phi_hi) - at(phi_lo)) / Complex64::new(0.0, k)
}

/// An angular sector of the disk with a radial extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularSector {
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

impl AngularSector {
    pub fn new(phi_lo: f64, phi_hi: f64, r_lo: f64, r_hi: f64) -> Result<Self, BasisError> {
        if phi_hi <= phi_lo || r_lo < 0.0 || r_hi <= r_lo {
            return Err(BasisError::Config(format!(
                "invalid sector: phi [{phi_lo}, {phi_hi}], r [{r_lo}, {r_hi}]"
            )));
        }
        Ok(Self { phi_lo, phi_hi, r_lo, r_hi })
    }

    pub fn angular_overlap(&self, dl: i32) -> Complex64 {
        angular_overlap(dl, self.phi_lo, self.phi_hi)
    }
}

/// The three tripartition sectors A, B, C of the inner disk of radius Rc.
/// Each spans a central angle of 2π/3:
/// A = [-π/6, π/2], C = [π/2, 7π/6], B = [7π/6, 11π/6].
pub fn kitaev_sectors(geom: &WireGeometry) -> [AngularSector; 3] {
    use std::f64::consts::PI;
    let mk = |lo: f64, hi: f64| AngularSector {
        phi_lo: lo,
        phi_hi: hi,
        r_lo: 0.0,
        r_hi: geom.rc,
    };
    [
        mk(-PI / 6.0, PI / 2.0),
        mk(7.0 * PI / 6.0, 11.0 * PI / 6.0),
        mk(PI / 2.0, 7.0 * PI / 6.0),
    ]
}

/// Material parameters plus geometry, loadable from key=value or JSON text
/// with keys exactly C0, C1, C2, M0, M1, M2, A0, B0, R, Rc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub params: MaterialParams,
    pub geom: WireGeometry,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            params: MaterialParams::bi2se3(),
            geom: WireGeometry::default_wire(),
        }
    }
}

impl SystemConfig {
    /// Parse either JSON (`{"C0": ..}`) or `KEY=VALUE` lines. Missing keys
    /// fall back to the defaults; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self, BasisError> {
        let trimmed = text.trim_start();
        let map: HashMap<String, f64> = if trimmed.starts_with('{') {
            serde_json::from_str(trimmed)
                .map_err(|e| BasisError::Config(format!("bad JSON config: {e}")))?
        } else {
            let mut map = HashMap::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    BasisError::Config(format!("line {}: expected KEY=VALUE", lineno + 1))
                })?;
                let value: f64 = value.trim().parse().map_err(|_| {
                    BasisError::Config(format!("line {}: bad number {:?}", lineno + 1, value.trim()))
                })?;
                map.insert(key.trim().to_string(), value);
            }
            map
        };
        Self::from_map(map)
    }

    fn from_map(mut map: HashMap<String, f64>) -> Result<Self, BasisError> {
        let mut cfg = SystemConfig::default();
        let mut take = |key: &str| map.remove(key);
        if let Some(v) = take("C0") {
            cfg.params.c0 = v;
        }
        if let Some(v) = take("C1") {
            cfg.params.c1 = v;
        }
        if let Some(v) = take("C2") {
            cfg.params.c2 = v;
        }
        if let Some(v) = take("M0") {
            cfg.params.m0 = v;
        }
        if let Some(v) = take("M1") {
            cfg.params.m1 = v;
        }
        if let Some(v) = take("M2") {
            cfg.params.m2 = v;
        }
        if let Some(v) = take("A0") {
            cfg.params.a0 = v;
        }
        if let Some(v) = take("B0") {
            cfg.params.b0 = v;
        }
        let r = take("R");
        let rc = take("Rc");
        if let Some(key) = map.keys().next() {
            return Err(BasisError::Config(format!("unknown key {key:?}")));
        }
        cfg.params.validate()?;
        cfg.geom = WireGeometry::new(
            r.unwrap_or(cfg.geom.r),
            rc.unwrap_or(cfg.geom.rc),
        )?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn default_params_are_inverted_and_finite() {
        let p = MaterialParams::bi2se3();
        p.validate().unwrap();
        assert!(p.is_inverted());
        assert_eq!(p.c0, -0.0068);
        assert_eq!(p.m0, 0.28);
    }

    #[test]
    fn normalization_value_and_scaling() {
        let alpha = bessel_root(0, 1).unwrap();
        let a600 = normalization(0, alpha, 600.0);
        assert_eq!(mode_normalization(0, 1, 600.0).unwrap(), a600);
        // J_1(2.404825557695773) = 0.5191474972894669 by power series
        let expected = 1.0 / (PI.sqrt() * 600.0 * 0.5191474972894669);
        assert!((a600 - expected).abs() < 1e-12 * expected);
        assert!((a600 - 1.8113e-3).abs() < 1e-6);
        // doubling R halves A
        let a1200 = normalization(0, alpha, 1200.0);
        assert!((a1200 - 0.5 * a600).abs() < 1e-18);
    }

    #[test]
    fn full_disk_self_overlap_is_one() {
        let roots = RootTable::build(3, 5).unwrap();
        let r = 600.0;
        for l_eff in 0..=3u32 {
            for n in 1..=5usize {
                let alpha = roots.root(l_eff, n);
                let a = normalization(l_eff, alpha, r);
                let overlap = radial_overlap(l_eff, alpha / r, alpha / r, 0.0, r).unwrap();
                let total = 2.0 * PI * a * a * overlap;
                assert!((total - 1.0).abs() < 1e-10, "l_eff={l_eff} n={n}: {total}");
            }
        }
    }

    #[test]
    fn angular_overlap_values() {
        // sector A has width 2π/3
        let v = angular_overlap(0, -PI / 6.0, PI / 2.0);
        assert!((v.re - 2.0 * PI / 3.0).abs() < 1e-14 && v.im.abs() < 1e-14);
        // full period integrals vanish except dl = 0
        for dl in -5..=5i32 {
            let v = angular_overlap(dl, 0.0, 2.0 * PI);
            let expected = if dl == 0 { 2.0 * PI } else { 0.0 };
            assert!((v.re - expected).abs() < 1e-14 && v.im.abs() < 1e-14, "dl={dl}");
        }
        // analytic antiderivative check
        let v = angular_overlap(1, 0.0, PI / 2.0);
        assert!((v.re - 1.0).abs() < 1e-14 && (v.im - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sectors_partition_the_circle() {
        let geom = WireGeometry::default_wire();
        let sectors = kitaev_sectors(&geom);
        let total: f64 = sectors.iter().map(|s| s.phi_hi - s.phi_lo).sum();
        assert!((total - 2.0 * PI).abs() < 1e-14);
        for dl in [-1i32, 1] {
            let sum: Complex64 = sectors.iter().map(|s| s.angular_overlap(dl)).sum();
            assert!(sum.norm() < 1e-13, "dl={dl} sum={sum}");
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(WireGeometry::new(600.0, 150.0).is_ok());
        assert!(WireGeometry::new(600.0, 600.0).is_err());
        assert!(WireGeometry::new(600.0, 0.0).is_err());
        assert!(WireGeometry::new(f64::NAN, 10.0).is_err());
    }

    #[test]
    fn config_key_value_and_json() {
        let kv = "R = 500\nRc = 100\nM0 = 0.3 # comment\n";
        let cfg = SystemConfig::parse(kv).unwrap();
        assert_eq!(cfg.geom.r, 500.0);
        assert_eq!(cfg.geom.rc, 100.0);
        assert_eq!(cfg.params.m0, 0.3);
        assert_eq!(cfg.params.c0, -0.0068);

        let json = r#"{"R": 700.0, "Rc": 200.0, "A0": 4.0}"#;
        let cfg = SystemConfig::parse(json).unwrap();
        assert_eq!(cfg.geom.r, 700.0);
        assert_eq!(cfg.params.a0, 4.0);

        assert!(SystemConfig::parse("Q0 = 1\n").is_err());
        assert!(SystemConfig::parse("R = 100\nRc = 200\n").is_err());
    }
}
