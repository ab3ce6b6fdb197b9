pub mod bands;
pub mod cache_cmd;
pub mod convergence;
pub mod entropy_cmd;
pub mod qpt_cmd;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use topowire::basis::{MaterialParams, WireGeometry};
use topowire::hamiltonian::{gap_window, LChannel};
use topowire::spectrum::{classify, solve, ClassifySummary, VariationalState};

use crate::cache;
use crate::CliError;

/// Solve one channel through the cache: load when present, otherwise
/// solve and store. Classification runs on every path.
pub fn solve_cached(
    cache_root: &Path,
    params: &MaterialParams,
    geom: &WireGeometry,
    channel: &LChannel,
    k_z: f64,
    margin: f64,
) -> Result<(Vec<VariationalState>, ClassifySummary), CliError> {
    let n_basis = channel.n_basis();
    let l = channel.l();
    let mut states = match cache::load(cache_root, params, geom, n_basis, l, k_z)
        .map_err(CliError::numeric)?
    {
        Some(states) => states,
        None => {
            let block = channel.assemble(k_z);
            let states = solve(&block).map_err(CliError::numeric)?;
            cache::save(cache_root, params, geom, &states).map_err(CliError::numeric)?;
            states
        }
    };
    let window = gap_window(params, k_z).map_err(CliError::numeric)?;
    let summary = classify(&mut states, window, margin);
    Ok((states, summary))
}

/// Solve a (L × k_z) grid in parallel through the cache; results are
/// returned per L in grid order.
#[allow(clippy::type_complexity)]
pub fn sweep_cached(
    cache_root: &PathBuf,
    params: &MaterialParams,
    geom: &WireGeometry,
    l_list: &[u32],
    kz_grid: &[f64],
    n_basis: usize,
    margin: f64,
) -> Result<Vec<(u32, Vec<(f64, Vec<VariationalState>, ClassifySummary)>)>, CliError> {
    let mut out = Vec::new();
    for &l in l_list {
        let channel =
            LChannel::new(*params, *geom, l, n_basis).map_err(CliError::numeric)?;
        let per_kz: Result<Vec<_>, CliError> = kz_grid
            .par_iter()
            .map(|&k_z| {
                let (states, summary) =
                    solve_cached(cache_root, params, geom, &channel, k_z, margin)?;
                Ok((k_z, states, summary))
            })
            .collect();
        out.push((l, per_kz?));
    }
    Ok(out)
}

/// Format a float for CSV: shortest round-trip representation.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}
