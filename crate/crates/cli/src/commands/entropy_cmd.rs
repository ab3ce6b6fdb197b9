//! `entropy`: topological-entropy and mode-dependent-entropy tables plus
//! per-state entanglement-spectrum dumps.

use std::path::Path;

use rayon::prelude::*;
use topowire::basis::{OverlapTable, RootTable};
use topowire::entropy::{
    entanglement_spectrum, topological_entropy, von_neumann, EIGENVALUE_CUTOFF,
};
use topowire::rdm::mode_rdm;

use super::{fmt, sweep_cached};
use crate::config::RunConfig;
use crate::output::write_csv;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Topo,
    Md,
    Both,
}

pub fn run(cfg: &RunConfig, out_dir: &Path, cache_root: &Path, which: Which) -> Result<(), CliError> {
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

    if matches!(which, Which::Topo | Which::Both) {
        let mut rows = Vec::new();
        for &rc in &cfg.rc_list {
            let geom = cfg.geom.with_rc(rc).map_err(CliError::config)?;
            for (l, per_kz) in &sweep {
                let roots = RootTable::build(l + 1, cfg.n_basis).map_err(CliError::numeric)?;
                let table = OverlapTable::build(*l, cfg.n_basis, &geom, &roots)
                    .map_err(CliError::numeric)?;
                for (_, states, _) in per_kz {
                    let per_state: Result<Vec<String>, CliError> = states
                        .par_iter()
                        .map(|s| {
                            let rep = topological_entropy(s, &geom, &table)
                                .map_err(CliError::numeric)?;
                            let sect = rep
                                .sector_entropies
                                .iter()
                                .map(|v| fmt(*v))
                                .collect::<Vec<_>>()
                                .join(",");
                            Ok(format!(
                                "{l},{},{},{sect},{},{},{}",
                                fmt(s.k_z),
                                s.label,
                                fmt(rep.s_t),
                                fmt(rep.abs_s_t),
                                fmt(rc)
                            ))
                        })
                        .collect();
                    rows.extend(per_state?);
                }
            }
        }
        write_csv(
            &out_dir.join("topo.csv"),
            cfg,
            "L,k_z,label,S_A,S_B,S_C,S_AB,S_BC,S_AC,S_ABC,S_t,abs_S_t,Rc",
            rows,
        )
        .map_err(CliError::numeric)?;
        println!("entropy: wrote {}", out_dir.join("topo.csv").display());
    }

    if matches!(which, Which::Md | Which::Both) {
        let spectra_dir = out_dir.join("md_spectra");
        std::fs::create_dir_all(&spectra_dir).map_err(CliError::numeric)?;
        let mut rows = Vec::new();
        for (l, per_kz) in &sweep {
            let roots = RootTable::build(l + 1, cfg.n_basis).map_err(CliError::numeric)?;
            let table = OverlapTable::build(*l, cfg.n_basis, &cfg.geom, &roots)
                .map_err(CliError::numeric)?;
            for (k_z, states, _) in per_kz {
                let per_state: Result<Vec<(String, Option<Vec<String>>)>, CliError> = states
                    .par_iter()
                    .map(|s| {
                        let rho = mode_rdm(s, &table).map_err(CliError::numeric)?;
                        let s_md = von_neumann(&rho).map_err(CliError::numeric)?;
                        let row = format!("{l},{},{},{}", fmt(*k_z), s.label, fmt(s_md));
                        // spectrum dumps for the in-gap states
                        let dump = if s.label.is_topological() {
                            let es = entanglement_spectrum(&rho, EIGENVALUE_CUTOFF)
                                .map_err(CliError::numeric)?;
                            let mut lines = vec![format!(
                                "# fit: c={} alpha={} quality={} len={}",
                                fmt(es.fit.intercept),
                                fmt(es.fit.slope),
                                fmt(es.fit.quality),
                                es.fit.len
                            )];
                            for (i, lam) in es.lambdas.iter().enumerate() {
                                let zeta = es
                                    .zetas
                                    .get(i)
                                    .map(|z| fmt(*z))
                                    .unwrap_or_default();
                                lines.push(format!("{},{},{zeta}", i + 1, fmt(*lam)));
                            }
                            Some(lines)
                        } else {
                            None
                        };
                        Ok((row, dump))
                    })
                    .collect();
                for (index, (s, (row, dump))) in states.iter().zip(per_state?).enumerate() {
                    rows.push(row);
                    if let Some(lines) = dump {
                        let name = format!("L{l}_kz{:+.6}_idx{index}_{}.csv", k_z, s.label);
                        let mut text = crate::output::provenance(cfg);
                        text.push_str("k,lambda_k,zeta_k\n");
                        for line in lines {
                            text.push_str(&line);
                            text.push('\n');
                        }
                        crate::cache::atomic_write(&spectra_dir.join(name), text.as_bytes())
                            .map_err(CliError::numeric)?;
                    }
                }
            }
        }
        write_csv(&out_dir.join("md.csv"), cfg, "L,k_z,label,S_MD", rows)
            .map_err(CliError::numeric)?;
        println!("entropy: wrote {}", out_dir.join("md.csv").display());
    }
    Ok(())
}
