//! `convergence`: basis-size convergence of one topological branch.

use std::path::Path;

use topowire::spectrum::{convergence_report, TopoBranch};

use super::fmt;
use crate::config::RunConfig;
use crate::output::write_csv;
use crate::CliError;

pub fn run(
    cfg: &RunConfig,
    out_dir: &Path,
    l: u32,
    k_z: f64,
    sizes: &[usize],
    branch: TopoBranch,
) -> Result<(), CliError> {
    if sizes.len() < 2 {
        return Err(CliError::config("need at least two basis sizes"));
    }
    if sizes.windows(2).any(|w| w[1] < w[0]) {
        return Err(CliError::config("sizes must be nondecreasing"));
    }
    std::fs::create_dir_all(out_dir).map_err(CliError::numeric)?;
    let rows = convergence_report(cfg.params, cfg.geom, l, k_z, sizes, branch)
        .map_err(CliError::numeric)?;
    write_csv(
        &out_dir.join("convergence.csv"),
        cfg,
        "N,energy_eV,fidelity_to_next",
        rows.iter().map(|r| {
            format!(
                "{},{},{}",
                r.n_basis,
                fmt(r.energy),
                r.fidelity_to_next.map(fmt).unwrap_or_default()
            )
        }),
    )
    .map_err(CliError::numeric)?;
    println!("convergence: wrote {}", out_dir.join("convergence.csv").display());
    Ok(())
}
