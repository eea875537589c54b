//! `rydgate` command-line interface.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod gate;
mod ghz;
mod physics;
mod report;
mod sim;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use report::{CliResult, Common};

#[derive(Debug, Parser)]
#[command(name = "rydgate", version, about = "Photon-photon gate modeling, tomography and simulation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Model (optionally noisy) reflection spectrum.
    SpectrumGen(physics::SpectrumGenArgs),
    /// Fit C, Ω and γ_rg to a reflection spectrum.
    SpectrumFit(physics::SpectrumFitArgs),
    /// Storage-retrieval efficiency.
    SrEfficiency(physics::SrEfficiencyArgs),
    /// Förster dephasing estimate and blockade radius.
    Blockade(physics::BlockadeArgs),
    /// Atom-cavity coupling and cooperativity chain.
    Coupling(physics::CouplingArgs),
    /// Phenomenological gate model: ξ, fidelities, truth tables.
    GateModel(gate::GateModelArgs),
    /// State tomography of one input from counts.
    TomoState(gate::TomoStateArgs),
    /// Process tomography from counts.
    TomoProcess(gate::TomoProcessArgs),
    /// Efficiency matrix from counts.
    TomoEfficiency(gate::TomoEfficiencyArgs),
    /// GHZ populations, coherence and fidelity from counts.
    GhzAnalyze(ghz::GhzAnalyzeArgs),
    /// GHZ closed forms and Monte Carlo versus photon number.
    GhzModel(ghz::GhzModelArgs),
    /// Coincidence rates versus photon number.
    Rates(ghz::RatesArgs),
    /// Shot-level simulation of a measurement plan.
    SimRun(sim::SimRunArgs),
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let c = &cli.common;
    c.validate_paths()?;
    match cli.command {
        Command::SpectrumGen(a) => physics::spectrum_gen(a, c),
        Command::SpectrumFit(a) => physics::spectrum_fit(a, c),
        Command::SrEfficiency(a) => physics::sr_efficiency(a, c),
        Command::Blockade(a) => physics::blockade(a, c),
        Command::Coupling(a) => physics::coupling(a, c),
        Command::GateModel(a) => gate::gate_model(a, c),
        Command::TomoState(a) => gate::tomo_state(a, c),
        Command::TomoProcess(a) => gate::tomo_process(a, c),
        Command::TomoEfficiency(a) => gate::tomo_efficiency(a, c),
        Command::GhzAnalyze(a) => ghz::ghz_analyze(a, c),
        Command::GhzModel(a) => ghz::ghz_model(a, c),
        Command::Rates(a) => ghz::rates(a, c),
        Command::SimRun(a) => sim::sim_run(a, c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
