//! `qpt`: learn Kraus processes for sector or mode-dependent targets and
//! write cost traces, operator dumps and the summary table.

use std::path::Path;

use topowire::basis::{OverlapTable, RootTable};
use topowire::entropy::von_neumann;
use topowire::hamiltonian::LChannel;
use topowire::qpt::{learn_process, measurement_set, MeasurementMode, QptOptions, QptRun};
use topowire::rdm::{mode_rdm, pure_density, sector_rdm, Region};
use topowire::spectrum::TopoBranch;

use super::{fmt, solve_cached};
use crate::config::RunConfig;
use crate::output::write_csv;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QptCase {
    Abc,
    Md,
}

pub struct QptArgs {
    pub case: QptCase,
    pub branch: TopoBranch,
    pub kz_list: Vec<f64>,
    pub l: u32,
}

pub fn run(cfg: &RunConfig, out_dir: &Path, cache_root: &Path, args: &QptArgs) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(CliError::numeric)?;
    let n_basis = cfg.n_basis;
    let dim = 4 * n_basis;

    let (meas, default_opts, case_name) = match args.case {
        QptCase::Abc => (
            measurement_set(2, MeasurementMode::FullPauli).map_err(CliError::numeric)?,
            QptOptions::abc_default(cfg.seed),
            "abc",
        ),
        QptCase::Md => {
            if !dim.is_power_of_two() {
                return Err(CliError::config(format!(
                    "the mode-dependent case needs 4N to be a power of two, got {dim}"
                )));
            }
            let n_qubits = dim.trailing_zeros();
            (
                measurement_set(n_qubits, MeasurementMode::XString).map_err(CliError::numeric)?,
                QptOptions::md_default(cfg.seed),
                "md",
            )
        }
    };
    let mut opts = default_opts;
    if let Some(n_k) = cfg.n_k {
        opts.n_k = n_k;
    }
    if let Some(tol) = cfg.tol {
        opts.tol = tol;
    }
    opts.lambda_reg = cfg.lambda;
    opts.seed = cfg.seed;

    let channel =
        LChannel::new(cfg.params, cfg.geom, args.l, n_basis).map_err(CliError::numeric)?;
    let roots = RootTable::build(args.l + 1, n_basis).map_err(CliError::numeric)?;
    let table =
        OverlapTable::build(args.l, n_basis, &cfg.geom, &roots).map_err(CliError::numeric)?;

    let mut summary = Vec::new();
    let mut failures = 0usize;
    for &k_z in &args.kz_list {
        let (states, _) =
            solve_cached(cache_root, &cfg.params, &cfg.geom, &channel, k_z, cfg.margin)?;
        let Some(state) = states.iter().find(|s| s.label == args.branch.label()) else {
            failures += 1;
            summary.push(format!(
                "{case_name},{},{},{},,,,,,,false,{}",
                args.l,
                fmt(k_z),
                args.branch,
                cfg.seed
            ));
            continue;
        };
        let rho_p = pure_density(state);
        let target = match args.case {
            QptCase::Abc => {
                sector_rdm(state, Region::Abc, &cfg.geom, &table).map_err(CliError::numeric)?
            }
            QptCase::Md => mode_rdm(state, &table).map_err(CliError::numeric)?,
        };
        let run: QptRun =
            learn_process(&rho_p, &target, &meas, &opts).map_err(CliError::numeric)?;
        let s_target = von_neumann(&target).map_err(CliError::numeric)?;
        let s_pred = von_neumann(&run.predicted).map_err(CliError::numeric)?;
        if !run.converged {
            failures += 1;
        }

        let trace_name = format!("cost_trace_{case_name}_L{}_kz{:+.6}.csv", args.l, k_z);
        write_csv(
            &out_dir.join(&trace_name),
            cfg,
            "iteration,cost",
            run.cost_trace
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{i},{}", fmt(*c))),
        )
        .map_err(CliError::numeric)?;

        let kraus_name = format!("kraus_{case_name}_L{}_kz{:+.6}.json", args.l, k_z);
        let kraus_json = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": format!("{:016x}", cfg.config_hash()),
            "case": case_name,
            "l": args.l,
            "k_z": k_z,
            "branch": args.branch.to_string(),
            "n_k": run.kraus.len(),
            "rows": run.kraus.rows(),
            "cols": run.kraus.cols(),
            "seed": run.seed,
            "tol": run.tol,
            "lambda_reg": run.lambda_reg,
            "converged": run.converged,
            "iterations": run.iterations,
            "fidelity_to_target": run.fidelity_to_target,
            "entropy_target": s_target,
            "entropy_predicted": s_pred,
            "completeness_defect": run.completeness_defect,
            "constraint_defect": run.constraint_defect,
            "renorm_factor": run.renorm_factor,
            "operators": run
                .kraus
                .ops()
                .iter()
                .map(|k| {
                    k.row_iter()
                        .flat_map(|row| row.iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>())
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>(),
        });
        crate::cache::atomic_write(
            &out_dir.join(&kraus_name),
            serde_json::to_string_pretty(&kraus_json).unwrap().as_bytes(),
        )
        .map_err(CliError::numeric)?;

        summary.push(format!(
            "{case_name},{},{},{},{},{},{},{},{},{},{},{}",
            args.l,
            fmt(k_z),
            args.branch,
            fmt(s_target),
            fmt(s_pred),
            fmt((s_pred - s_target).abs()),
            fmt(run.fidelity_to_target),
            run.iterations,
            fmt(*run.cost_trace.last().unwrap()),
            run.converged,
            run.seed
        ));
    }
    write_csv(
        &out_dir.join(format!("qpt_summary_{case_name}.csv")),
        cfg,
        "case,L,k_z,branch,S_target,S_pred,abs_dS,fidelity,iterations,final_cost,converged,seed",
        summary,
    )
    .map_err(CliError::numeric)?;
    println!(
        "qpt {case_name}: {} states, {} not converged -> {}",
        args.kz_list.len(),
        failures,
        out_dir.join(format!("qpt_summary_{case_name}.csv")).display()
    );
    if failures == args.kz_list.len() && !args.kz_list.is_empty() {
        return Err(CliError::numeric("every qpt run failed"));
    }
    Ok(())
}
