//! Shot-level simulator subcommand.

use std::fs::File;
use std::path::PathBuf;

use rydgate::preset::Preset;
use rydgate::sim::plan::{cnot_truth_plan, cphase_truth_plan, parity_plan, theta_grid, tomography_plan, Plan};
use rydgate::sim::{run, SimConfig, SourceMode};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::gate::{gate_params, sidecar_path, NoiseArg};
use crate::report::{emit, require_file, require_parent, resolve, CliError, CliResult, Common};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    #[default]
    ExactlyOne,
    Poissonian,
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct SimRunArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// `tomography`, `parity`, `cphase-truth`, `cnot-truth` or a plan CSV path.
    #[arg(long)]
    pub plan: Option<String>,
    /// Photon number for the parity plan.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of analysis angles for the parity plan.
    #[arg(long)]
    pub thetas: Option<usize>,
    /// Gate invocations per plan cell (scientific notation accepted).
    #[arg(long, value_parser = crate::report::finite)]
    pub shots: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_parser = crate::report::finite)]
    pub mean_control: Option<f64>,
    #[arg(long, value_parser = crate::report::finite)]
    pub mean_target: Option<f64>,
    /// Detection efficiency η_d.
    #[arg(long, value_parser = crate::report::finite)]
    pub eta_d: Option<f64>,
    /// Mean dark counts per detector and window.
    #[arg(long, value_parser = crate::report::finite)]
    pub dark_count_rate: Option<f64>,
    #[arg(long, value_delimiter = ',', value_parser = crate::report::finite)]
    pub eta: Option<Vec<f64>>,
    #[arg(long, value_parser = crate::report::finite)]
    pub v_c: Option<f64>,
    #[arg(long, value_parser = crate::report::finite)]
    pub v_t: Option<f64>,
    /// Use the physical loss decomposition for the efficiencies.
    #[arg(long)]
    pub physical: Option<bool>,
    #[arg(long, value_enum)]
    pub phase_noise: Option<NoiseArg>,
    #[arg(long)]
    pub shared_target_phase: Option<bool>,
    /// Rotate targets D→V, A→H before analysis (default on for the parity plan).
    #[arg(long)]
    pub target_rotation: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Counts CSV output; the sidecar is written next to it.
    #[arg(long)]
    pub counts_out: Option<PathBuf>,
}

pub fn sim_run(a: SimRunArgs, common: &Common) -> CliResult<()> {
    let (a, config) = resolve(&a, common.config.as_deref())?;
    let counts_out = a
        .counts_out
        .clone()
        .or_else(|| common.csv.clone())
        .ok_or_else(|| CliError::validation("--counts-out (or --csv) is required"))?;
    require_parent(&counts_out)?;
    let preset = Preset::load(a.preset.as_deref().unwrap_or("paper"))?;
    let gate = gate_params(&preset, a.physical.unwrap_or(false), &a.eta, a.v_c, a.v_t)?;
    let plan_name = a.plan.clone().unwrap_or_else(|| "tomography".into());
    let plan = match plan_name.as_str() {
        "tomography" => tomography_plan(),
        "parity" => {
            let n = a.n.ok_or_else(|| CliError::validation("the parity plan needs --n"))?;
            if n < 2 {
                return Err(CliError::validation("--n must be at least 2"));
            }
            parity_plan(n, &theta_grid(a.thetas.unwrap_or(2 * n)))
        }
        "cphase-truth" => cphase_truth_plan(),
        "cnot-truth" => cnot_truth_plan(),
        path => {
            let p = PathBuf::from(path);
            require_file(&p)?;
            Plan::from_csv(&std::fs::read_to_string(p)?)?
        }
    };
    let shots = a.shots.unwrap_or(1e5);
    if !(shots >= 1.0 && shots.fract() == 0.0 && shots <= u64::MAX as f64) {
        return Err(CliError::validation(format!("shots must be a positive integer, got {shots}")));
    }
    let source = match a.mode.unwrap_or_default() {
        ModeArg::ExactlyOne => SourceMode::ExactlyOne,
        ModeArg::Poissonian => SourceMode::Poissonian {
            mean_control: match a.mean_control {
                Some(x) => x,
                None => preset.scalar("ghz.mean_control")?,
            },
            mean_target: match a.mean_target {
                Some(x) => x,
                None => preset.scalar("ghz.mean_target")?,
            },
        },
    };
    let cfg = SimConfig {
        source,
        n_targets: plan.photons()?.saturating_sub(1),
        gate,
        phase_noise: a.phase_noise.unwrap_or_default().into(),
        shared_target_phase: a.shared_target_phase.unwrap_or(false),
        target_rotation: a.target_rotation.unwrap_or(plan_name == "parity"),
        detection_efficiency: a.eta_d.unwrap_or(1.0),
        dark_count_rate: a.dark_count_rate.unwrap_or(0.0),
        shots: shots as u64,
        seed: a.seed.unwrap_or(1),
        plan,
    };
    cfg.validate()?;
    let counts = run(&cfg)?;
    counts.write_csv(File::create(&counts_out)?)?;
    let side = sidecar_path(&counts_out);
    let sidecar = counts.sidecar(cfg.metadata());
    serde_json::to_writer_pretty(File::create(&side)?, &sidecar)?;
    let cells: Vec<_> = counts
        .cells()
        .map(|(i, s, c)| json!({"input": i, "setting": s, "invocations": c.invocations, "postselected": c.total()}))
        .collect();
    let total: u64 = counts.cells().map(|(_, _, c)| c.total()).sum();
    let result = json!({
        "plan": plan_name,
        "n_targets": cfg.n_targets,
        "counts_csv": counts_out,
        "sidecar": side,
        "total_postselected": total,
        "cells": cells,
        "multi_photon_rule": rydgate::sim::config::MULTI_PHOTON_RULE,
    });
    emit(common, "sim-run", config, Some(cfg.seed), result)
}
