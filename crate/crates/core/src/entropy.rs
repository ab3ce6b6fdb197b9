//! Scalar diagnostics: von Neumann entropy, the Kitaev-Preskill
//! combination, entanglement spectra and Uhlmann fidelity.
//!
//! Natural logarithms throughout; the ln 2 plateau of the topological
//! entropy is the unit test that pins the base.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{OverlapTable, WireGeometry};
use crate::linalg::{self, LinalgError};
use crate::rdm::{self, DensityMatrix, RdmError, Region, PSD_CLIP};
use crate::spectrum::{StateLabel, VariationalState};

/// Eigenvalues below this are indistinguishable from zero and excluded
/// from entropy sums and entanglement spectra.
pub const EIGENVALUE_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Error)]
pub enum EntropyError {
    #[error("density matrix trace {trace} deviates from 1 by more than 1e-8")]
    InvalidDensity { trace: f64 },
    #[error("dimension mismatch: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Rdm(#[from] RdmError),
}

/// −Σ λ ln λ over eigenvalues above [`EIGENVALUE_CUTOFF`], in nats.
pub fn von_neumann(rho: &DensityMatrix) -> Result<f64, EntropyError> {
    let trace = rho.trace();
    if (trace - 1.0).abs() > 1e-8 {
        return Err(EntropyError::InvalidDensity { trace });
    }
    let values = rho.eigenvalues()?;
    if let Some(&min) = values.first() {
        if min < -PSD_CLIP {
            return Err(EntropyError::Rdm(RdmError::NotPsd { value: min }));
        }
    }
    let mut s = 0.0;
    for lambda in values {
        if lambda > EIGENVALUE_CUTOFF {
            s -= lambda * lambda.ln();
        }
    }
    Ok(s.max(0.0))
}

/// The seven sector entropies of one state at one Rc, their
/// Kitaev-Preskill combination and its modulus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyReport {
    pub l: u32,
    pub k_z: f64,
    pub n_basis: usize,
    pub label: StateLabel,
    pub rc: f64,
    /// Entropies in region order A, B, C, AB, BC, AC, ABC.
    pub sector_entropies: [f64; 7],
    pub s_t: f64,
    pub abs_s_t: f64,
}

/// S_A + S_B + S_C − S_AB − S_BC − S_AC + S_ABC for entropies listed in
/// region order.
pub fn combine_sector_entropies(s: &[f64; 7]) -> f64 {
    s[0] + s[1] + s[2] - s[3] - s[4] - s[5] + s[6]
}

/// Topological entropy of one state: the alternating combination of the
/// seven sector-RDM entropies.
pub fn topological_entropy(
    state: &VariationalState,
    geom: &WireGeometry,
    table: &OverlapTable,
) -> Result<EntropyReport, EntropyError> {
    let mut sector_entropies = [0.0; 7];
    for (i, region) in Region::ALL.iter().enumerate() {
        let rho = rdm::sector_rdm(state, *region, geom, table)?;
        sector_entropies[i] = von_neumann(&rho)?;
    }
    let s_t = combine_sector_entropies(&sector_entropies);
    Ok(EntropyReport {
        l: state.l,
        k_z: state.k_z,
        n_basis: state.n_basis,
        label: state.label,
        rc: geom.rc,
        sector_entropies,
        s_t,
        abs_s_t: s_t.abs(),
    })
}

/// Least-squares line ζ = c + α k with its coefficient of determination
/// and the prefix length it was fitted on.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub quality: f64,
    pub len: usize,
}

fn fit_prefix(zetas: &[f64], len: usize) -> LinearFit {
    debug_assert!(len >= 2 && len <= zetas.len());
    let n = len as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (i, &z) in zetas[..len].iter().enumerate() {
        sx += (i + 1) as f64;
        sy += z;
    }
    let (mx, my) = (sx / n, sy / n);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (i, &z) in zetas[..len].iter().enumerate() {
        let dx = (i + 1) as f64 - mx;
        let dy = z - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = syy - slope * sxy;
    let quality = if syy < 1e-24 { 1.0 } else { 1.0 - ss_res / syy };
    LinearFit { intercept, slope, quality, len }
}

/// Descending RDM eigenvalues, ζ_k = −ln λ_k above the cutoff, and the
/// longest leading linear range with fit quality ≥ 0.99.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntanglementSpectrum {
    pub lambdas: Vec<f64>,
    pub zetas: Vec<f64>,
    pub fit: LinearFit,
}

pub fn entanglement_spectrum(
    rho: &DensityMatrix,
    cutoff: f64,
) -> Result<EntanglementSpectrum, EntropyError> {
    let mut lambdas = rho.eigenvalues()?;
    lambdas.reverse(); // descending
    let zetas: Vec<f64> = lambdas
        .iter()
        .take_while(|&&l| l > cutoff)
        .map(|&l| -l.ln())
        .collect();
    let fit = match zetas.len() {
        0 => LinearFit { intercept: 0.0, slope: 0.0, quality: 0.0, len: 0 },
        1 => LinearFit { intercept: zetas[0], slope: 0.0, quality: 1.0, len: 1 },
        n => {
            let mut chosen = fit_prefix(&zetas, 2);
            for len in (2..=n).rev() {
                let f = fit_prefix(&zetas, len);
                if f.quality >= 0.99 {
                    chosen = f;
                    break;
                }
            }
            chosen
        }
    };
    Ok(EntanglementSpectrum { lambdas, zetas, fit })
}

/// Uhlmann fidelity (Tr √(√ρ σ √ρ))² ∈ [0, 1].
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, EntropyError> {
    if rho.dim() != sigma.dim() {
        return Err(EntropyError::DimensionMismatch { a: rho.dim(), b: sigma.dim() });
    }
    let root = linalg::sqrt_psd(rho.matrix())?;
    let inner = linalg::hermitize(&(&root * sigma.matrix() * &root));
    let values = linalg::eigvalsh(&inner)?;
    let total: f64 = values.iter().map(|&v| v.max(0.0).sqrt()).sum();
    Ok((total * total).min(1.0))
}
