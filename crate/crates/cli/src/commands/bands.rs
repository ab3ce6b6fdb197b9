//! `bands`: sweep the (L, k_z) grid, write bands.csv and the gap-window
//! sidecar.

use std::path::Path;

use topowire::hamiltonian::gap_window;

use super::{fmt, sweep_cached};
use crate::config::RunConfig;
use crate::output::write_csv;
use crate::CliError;

pub fn run(cfg: &RunConfig, out_dir: &Path, cache_root: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(CliError::numeric)?;
    let grid = cfg.kz_grid();
    let sweep = sweep_cached(
        &cache_root.to_path_buf(),
        &cfg.params,
        &cfg.geom,
        &cfg.l_list,
        &grid,
        cfg.n_basis,
        cfg.margin,
    )?;

    let mut rows = Vec::new();
    let mut anomalies = 0usize;
    for (l, per_kz) in &sweep {
        for (k_z, states, summary) in per_kz {
            if summary.warning.is_some() {
                anomalies += 1;
            }
            for (index, s) in states.iter().enumerate() {
                rows.push(format!(
                    "{l},{},{index},{},{}",
                    fmt(*k_z),
                    fmt(s.energy),
                    s.label
                ));
            }
        }
    }
    write_csv(
        &out_dir.join("bands.csv"),
        cfg,
        "L,k_z,index,energy_eV,label",
        rows,
    )
    .map_err(CliError::numeric)?;

    let gap_rows: Result<Vec<String>, CliError> = grid
        .iter()
        .map(|&k_z| {
            let (lo, hi) = gap_window(&cfg.params, k_z).map_err(CliError::numeric)?;
            Ok(format!("{},{},{}", fmt(k_z), fmt(lo), fmt(hi)))
        })
        .collect();
    write_csv(
        &out_dir.join("gap_window.csv"),
        cfg,
        "k_z,E_lo_eV,E_hi_eV",
        gap_rows?,
    )
    .map_err(CliError::numeric)?;

    let points = cfg.l_list.len() * grid.len();
    println!(
        "bands: {} grid points, {} rows, {} classification warnings -> {}",
        points,
        points * 4 * cfg.n_basis,
        anomalies,
        out_dir.join("bands.csv").display()
    );
    Ok(())
}
