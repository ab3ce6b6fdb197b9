//! Eigensolution of the channel Hamiltonians, in-gap classification and
//! band sweeps.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{MaterialParams, OverlapTable, QuadError, WireGeometry};
use crate::entropy;
use crate::hamiltonian::{gap_window, HamiltonianBlock, HamiltonianError, LChannel};
use crate::linalg::{self, CVector, LinalgError};
use crate::rdm::{self, RdmError, Region};

/// Default in-gap classification margin, eV.
pub const DEFAULT_MARGIN: f64 = 0.002;

#[derive(Debug, Clone, Error)]
pub enum SpectrumError {
    #[error("eigensolver failed at (L={l}, k_z={k_z}): {source}")]
    Solve {
        l: u32,
        k_z: f64,
        source: LinalgError,
    },
    #[error("residual {residual:.3e} exceeds 1e-8 * ||H|| = {allowed:.3e} at (L={l}, k_z={k_z})")]
    Residual {
        l: u32,
        k_z: f64,
        residual: f64,
        allowed: f64,
    },
    #[error("no {branch} topological state at (L={l}, k_z={k_z}, N={n_basis})")]
    MissingTopological {
        l: u32,
        k_z: f64,
        n_basis: usize,
        branch: TopoBranch,
    },
    #[error("topological state jumped by {delta:.3} eV between N={n_from} and N={n_to}")]
    TrackingLost { n_from: usize, n_to: usize, delta: f64 },
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Rdm(#[from] RdmError),
    #[error(transparent)]
    Entropy(#[from] crate::entropy::EntropyError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("empty sweep grid")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateLabel {
    Valence,
    Conduction,
    TopologicalLower,
    TopologicalUpper,
}

impl StateLabel {
    pub fn is_topological(&self) -> bool {
        matches!(self, StateLabel::TopologicalLower | StateLabel::TopologicalUpper)
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StateLabel::Valence => "valence",
            StateLabel::Conduction => "conduction",
            StateLabel::TopologicalLower => "topological-lower",
            StateLabel::TopologicalUpper => "topological-upper",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopoBranch {
    Lower,
    Upper,
}

impl TopoBranch {
    pub fn label(&self) -> StateLabel {
        match self {
            TopoBranch::Lower => StateLabel::TopologicalLower,
            TopoBranch::Upper => StateLabel::TopologicalUpper,
        }
    }
}

impl fmt::Display for TopoBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopoBranch::Lower => "lower",
            TopoBranch::Upper => "upper",
        })
    }
}

/// One variational eigenpair of a (L, k_z) channel.
#[derive(Debug, Clone)]
pub struct VariationalState {
    pub l: u32,
    pub k_z: f64,
    pub n_basis: usize,
    pub energy: f64,
    /// Unit-norm coefficient vector, slot-major basis ordering.
    pub coeffs: CVector,
    pub label: StateLabel,
}

impl VariationalState {
    /// Coefficient of (slot 1..=4, root index 0-based).
    pub fn coeff(&self, slot: u8, n: usize) -> num_complex::Complex64 {
        self.coeffs[(slot as usize - 1) * self.n_basis + n]
    }
}

/// All 4N eigenpairs of an assembled channel, energies ascending.
///
/// Labels are provisional (sign of the energy against the spectrum
/// midpoint) until [`classify`] is applied with a bulk gap window.
pub fn solve(block: &HamiltonianBlock) -> Result<Vec<VariationalState>, SpectrumError> {
    let (l, k_z) = (block.l, block.k_z);
    let (values, vectors) =
        linalg::eigh(&block.matrix).map_err(|source| SpectrumError::Solve { l, k_z, source })?;
    let dim = block.dim();

    // residual invariant: max_j ||H v_j - E_j v_j|| <= 1e-8 ||H||_2
    let hv = &block.matrix * &vectors;
    let mut worst = 0.0f64;
    for j in 0..dim {
        let resid = (hv.column(j) - vectors.column(j) * num_complex::Complex64::from(values[j]))
            .norm();
        worst = worst.max(resid);
    }
    let hnorm = values[0].abs().max(values[dim - 1].abs());
    let allowed = 1e-8 * hnorm;
    if worst > allowed {
        return Err(SpectrumError::Residual { l, k_z, residual: worst, allowed });
    }

    let midpoint = 0.5 * (values[0] + values[dim - 1]);
    let states = (0..dim)
        .map(|j| {
            let mut coeffs: CVector = vectors.column(j).into();
            let norm = coeffs.norm();
            if norm > 0.0 {
                coeffs /= num_complex::Complex64::from(norm);
            }
            VariationalState {
                l,
                k_z,
                n_basis: block.n_basis,
                energy: values[j],
                coeffs,
                label: if values[j] < midpoint {
                    StateLabel::Valence
                } else {
                    StateLabel::Conduction
                },
            }
        })
        .collect();
    Ok(states)
}

#[derive(Debug, Clone, Default)]
pub struct ClassifySummary {
    pub in_gap: usize,
    pub warning: Option<String>,
}

/// Label states against a bulk gap window. States with
/// E_lo + margin < E < E_hi - margin are topological (lower/upper by
/// energy order); the rest are valence below and conduction above. A
/// degenerate window falls back to the sign of E against its midpoint.
pub fn classify(
    states: &mut [VariationalState],
    window: (f64, f64),
    margin: f64,
) -> ClassifySummary {
    let (e_lo, e_hi) = window;
    if e_lo >= e_hi {
        let mid = 0.5 * (e_lo + e_hi);
        for s in states.iter_mut() {
            s.label = if s.energy < mid { StateLabel::Valence } else { StateLabel::Conduction };
        }
        return ClassifySummary { in_gap: 0, warning: Some("degenerate gap window".into()) };
    }
    let lo = e_lo + margin;
    let hi = e_hi - margin;
    let mid = 0.5 * (e_lo + e_hi);
    let in_gap: Vec<usize> = states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.energy > lo && s.energy < hi)
        .map(|(i, _)| i)
        .collect();
    for (i, s) in states.iter_mut().enumerate() {
        if in_gap.contains(&i) {
            continue;
        }
        s.label = if s.energy <= lo { StateLabel::Valence } else { StateLabel::Conduction };
    }
    match in_gap.len() {
        2 => {
            states[in_gap[0]].label = StateLabel::TopologicalLower;
            states[in_gap[1]].label = StateLabel::TopologicalUpper;
        }
        _ => {
            for &i in &in_gap {
                states[i].label = if states[i].energy <= mid {
                    StateLabel::TopologicalLower
                } else {
                    StateLabel::TopologicalUpper
                };
            }
        }
    }
    let warning = (in_gap.len() != 2).then(|| format!("{} in-gap states", in_gap.len()));
    ClassifySummary { in_gap: in_gap.len(), warning }
}

/// FNV-1a hash of the parameter set and radius; keys eigenstate caches.
pub fn params_hash(params: &MaterialParams, r: f64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |v: f64| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for v in [
        params.c0, params.c1, params.c2, params.m0, params.m1, params.m2, params.a0, params.b0, r,
    ] {
        eat(v);
    }
    h
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandRow {
    pub l: u32,
    pub k_z: f64,
    pub index: usize,
    pub energy: f64,
    pub label: StateLabel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandTable {
    pub n_basis: usize,
    pub r: f64,
    pub params_hash: u64,
    pub rows: Vec<BandRow>,
}

impl BandTable {
    pub fn point(&self, l: u32, k_z: f64) -> impl Iterator<Item = &BandRow> {
        self.rows
            .iter()
            .filter(move |row| row.l == l && (row.k_z - k_z).abs() < 1e-12)
    }
}

/// Solve and classify every (L, k_z) grid point. Channels are prepared
/// sequentially (shared root/coupling tables), grid points run in
/// parallel.
pub fn band_sweep(
    params: MaterialParams,
    geom: WireGeometry,
    l_list: &[u32],
    k_z_grid: &[f64],
    n_basis: usize,
    margin: f64,
) -> Result<BandTable, SpectrumError> {
    if l_list.is_empty() || k_z_grid.is_empty() {
        return Err(SpectrumError::EmptyGrid);
    }
    let mut rows = Vec::new();
    for &l in l_list {
        let channel = LChannel::new(params, geom, l, n_basis)?;
        let mut per_l: Vec<Vec<BandRow>> = k_z_grid
            .par_iter()
            .map(|&k_z| -> Result<Vec<BandRow>, SpectrumError> {
                let block = channel.assemble(k_z);
                let mut states = solve(&block)?;
                let window = gap_window(&params, k_z)?;
                classify(&mut states, window, margin);
                Ok(states
                    .iter()
                    .enumerate()
                    .map(|(index, s)| BandRow {
                        l,
                        k_z,
                        index,
                        energy: s.energy,
                        label: s.label,
                    })
                    .collect())
            })
            .collect::<Result<_, _>>()?;
        for chunk in per_l.drain(..) {
            rows.extend(chunk);
        }
    }
    rows.sort_by(|a, b| a.l.cmp(&b.l).then(a.k_z.total_cmp(&b.k_z)).then(a.index.cmp(&b.index)));
    Ok(BandTable { n_basis, r: geom.r, params_hash: params_hash(&params, geom.r), rows })
}

/// Solve one channel and return the classified states.
pub fn solve_channel(
    params: MaterialParams,
    geom: WireGeometry,
    l: u32,
    k_z: f64,
    n_basis: usize,
    margin: f64,
) -> Result<(Vec<VariationalState>, ClassifySummary), SpectrumError> {
    let block = crate::hamiltonian::assemble(params, geom, l, k_z, n_basis)?;
    let mut states = solve(&block)?;
    let window = gap_window(&params, k_z)?;
    let summary = classify(&mut states, window, margin);
    Ok((states, summary))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n_basis: usize,
    pub energy: f64,
    /// Uhlmann fidelity between the ρ_ABC of this size and the next one.
    pub fidelity_to_next: Option<f64>,
}

/// Track one topological branch across basis sizes and report the
/// energies together with the fidelity between consecutive ρ_ABC.
pub fn convergence_report(
    params: MaterialParams,
    geom: WireGeometry,
    l: u32,
    k_z: f64,
    sizes: &[usize],
    branch: TopoBranch,
) -> Result<Vec<ConvergenceRow>, SpectrumError> {
    assert!(sizes.len() >= 2, "need at least two basis sizes");
    let mut rhos = Vec::with_capacity(sizes.len());
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(sizes.len());
    let mut prev: Option<(usize, f64)> = None;
    for &n_basis in sizes {
        let (states, _) = solve_channel(params, geom, l, k_z, n_basis, DEFAULT_MARGIN)?;
        let state = states
            .iter()
            .find(|s| s.label == branch.label())
            .ok_or(SpectrumError::MissingTopological { l, k_z, n_basis, branch })?;
        if let Some((n_from, e_prev)) = prev {
            let delta = (state.energy - e_prev).abs();
            if delta > 0.05 {
                return Err(SpectrumError::TrackingLost { n_from, n_to: n_basis, delta });
            }
        }
        prev = Some((n_basis, state.energy));
        let roots = crate::basis::RootTable::build(l + 1, n_basis).map_err(HamiltonianError::from)?;
        let table = OverlapTable::build(l, n_basis, &geom, &roots)?;
        let rho = rdm::sector_rdm(state, Region::Abc, &geom, &table)?;
        rhos.push(rho);
        rows.push(ConvergenceRow { n_basis, energy: state.energy, fidelity_to_next: None });
    }
    for i in 0..rows.len() - 1 {
        let f = entropy::fidelity(&rhos[i], &rhos[i + 1])?;
        rows[i].fidelity_to_next = Some(f);
    }
    Ok(rows)
}
