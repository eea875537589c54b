//! Gate model and tomography subcommands.

use std::fs::File;
use std::path::{Path, PathBuf};

use rydgate::gate::{
    fidelities_from_xi, fit_visibilities, truth_table_model, xi_from_chi, xi_from_samples, xi_model,
    GateParams, PhaseNoise, TruthBasis, TruthTable,
};
use rydgate::io::{matrix_to_json, real_matrix_to_json};
use rydgate::linalg::{self, CMatrix};
use rydgate::preset::Preset;
use rydgate::quantum::{cnot_equivalent_unitary, cphase_unitary, PolarizationLabel};
use rydgate::sim::counts::Sidecar;
use rydgate::tomography::{
    average_efficiency, bootstrap, efficiency_matrix_from_measurements, harmonic_mean_efficiency,
    mean_and_std, process_tomography, state_tomography, PairSource, StateCalibration,
};
use rydgate::CountsTable;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::report::{emit, emit_csv, num, require_file, resolve, CliError, CliResult, Common};

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct GateModelArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// Efficiencies η_HH,η_HV,η_VH,η_VV.
    #[arg(long, value_delimiter = ',', value_parser = crate::report::finite)]
    pub eta: Option<Vec<f64>>,
    /// Control visibility V_c.
    #[arg(long, value_parser = crate::report::finite)]
    pub v_c: Option<f64>,
    /// Target visibility V_t.
    #[arg(long, value_parser = crate::report::finite)]
    pub v_t: Option<f64>,
    /// Use the efficiencies of the physical loss decomposition instead of the measured ones.
    #[arg(long)]
    pub physical: Option<bool>,
    /// Phase-noise samples for a Monte Carlo estimate of ξ (0 skips it).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub phase_noise: Option<NoiseArg>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseArg {
    #[default]
    Gaussian,
    TwoPoint,
}

impl From<NoiseArg> for PhaseNoise {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Gaussian => PhaseNoise::Gaussian,
            NoiseArg::TwoPoint => PhaseNoise::TwoPoint,
        }
    }
}

/// Gate parameters from a preset with optional overrides.
pub fn gate_params(
    preset: &Preset,
    physical: bool,
    eta: &Option<Vec<f64>>,
    v_c: Option<f64>,
    v_t: Option<f64>,
) -> CliResult<GateParams> {
    let base = if physical { preset.gate_physical()? } else { preset.gate()? };
    let eta = match eta {
        Some(e) => e.clone().try_into().map_err(|_| CliError::validation("--eta needs 4 values"))?,
        None => base.eta,
    };
    let mut g = GateParams::new(eta, v_c.unwrap_or(base.v_c), v_t.unwrap_or(base.v_t))?;
    if physical && eta == base.eta {
        g.physical = base.physical;
    }
    Ok(g)
}

fn table_json(t: &TruthTable) -> Value {
    json!({"labels": t.basis.labels(), "probabilities": t.probabilities, "fidelity": t.fidelity()})
}

fn table_rows(t: &TruthTable) -> Vec<Vec<String>> {
    let labels = t.basis.labels();
    let mut rows = Vec::new();
    for (r, input) in labels.iter().enumerate() {
        for (c, output) in labels.iter().enumerate() {
            rows.push(vec![
                format!("{:?}", t.basis).to_lowercase(),
                input.to_string(),
                output.to_string(),
                num(t.probabilities[r][c]),
            ]);
        }
    }
    rows
}

pub fn gate_model(a: GateModelArgs, common: &Common) -> CliResult<()> {
    let (a, config) = resolve(&a, common.config.as_deref())?;
    let preset = Preset::load(a.preset.as_deref().unwrap_or("paper"))?;
    let g = gate_params(&preset, a.physical.unwrap_or(false), &a.eta, a.v_c, a.v_t)?;
    let xi = xi_model(&g)?;
    let fid = fidelities_from_xi(&xi);
    let cphase = truth_table_model(&g, TruthBasis::Cphase)?;
    let cnot = truth_table_model(&g, TruthBasis::Cnot)?;
    let seed = a.seed.unwrap_or(1);
    let samples = a.samples.unwrap_or(0);
    let sampled = if samples > 0 {
        let mut rng = rydgate::rng::stream(seed, &[0]);
        let (xs, errs) = xi_from_samples(&g, a.phase_noise.unwrap_or_default().into(), samples, &mut rng)?;
        Some(json!({"xi": xs.entries, "xi_err": errs, "samples": samples}))
    } else {
        None
    };
    let mut rows = table_rows(&cphase);
    rows.extend(table_rows(&cnot));
    emit_csv(common, &["basis", "input", "output", "probability"], &rows)?;
    let result = json!({
        "gate": g,
        "eta_bar": g.mean_efficiency(),
        "photon_amplitudes": g.photon_amplitudes()?,
        "xi": xi.entries,
        "xi_trace": xi.trace(),
        "cp_bound_satisfied": xi.satisfies_cp_bound(),
        "fidelity_ps_process": fid.process,
        "fidelity_bell": fid.bell,
        "truth_table_cphase": table_json(&cphase),
        "truth_table_cnot": table_json(&cnot),
        "xi_sampled": sampled,
    });
    emit(common, "gate-model", config, (samples > 0).then_some(seed), result)
}

/// Counts input and detector calibration shared by the tomography subcommands.
#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
pub struct CountsArgs {
    /// Counts CSV (input, setting, outcome, count).
    #[arg(long)]
    pub counts: Option<PathBuf>,
    /// Invocation sidecar JSON; defaults to the counts path with `.sidecar.json`.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Detection efficiency used to normalize the trace.
    #[arg(long, value_parser = crate::report::finite)]
    pub eta_d: Option<f64>,
    /// Poisson mean control photon number (with --mean-target).
    #[arg(long, value_parser = crate::report::finite)]
    pub mean_control: Option<f64>,
    /// Poisson mean target photon number (with --mean-control).
    #[arg(long, value_parser = crate::report::finite)]
    pub mean_target: Option<f64>,
}

pub fn sidecar_path(counts: &Path) -> PathBuf {
    counts.with_extension("sidecar.json")
}

impl CountsArgs {
    pub fn load(&self) -> CliResult<CountsTable> {
        let counts = self.counts.clone().ok_or_else(|| CliError::validation("--counts is required"))?;
        require_file(&counts)?;
        let side = self.sidecar.clone().unwrap_or_else(|| sidecar_path(&counts));
        require_file(&side)?;
        let sidecar: Sidecar = serde_json::from_reader(File::open(&side)?)?;
        Ok(CountsTable::read_csv(File::open(&counts)?, &sidecar)?)
    }

    pub fn calibration(&self) -> CliResult<StateCalibration> {
        let source = match (self.mean_control, self.mean_target) {
            (Some(c), Some(t)) => PairSource::Poissonian { mean_control: c, mean_target: t },
            (None, None) => PairSource::ExactlyOne,
            _ => return Err(CliError::validation("--mean-control and --mean-target go together")),
        };
        let eta_d = self.eta_d.unwrap_or(1.0);
        if !(eta_d > 0.0 && eta_d <= 1.0) {
            return Err(CliError::validation("--eta-d must lie in (0, 1]"));
        }
        Ok(StateCalibration { detection_efficiency: eta_d, source })
    }
}

fn matrix_rows(m: &CMatrix) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            rows.push(vec![i.to_string(), j.to_string(), num(m[(i, j)].re), num(m[(i, j)].im)]);
        }
    }
    rows
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct TomoStateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: CountsArgs,
    /// Input label whose output state is reconstructed, e.g. `DD`.
    #[arg(long)]
    pub input: Option<String>,
}

pub fn tomo_state(a: TomoStateArgs, common: &Common) -> CliResult<()> {
    let (a, config) = resolve(&a, common.config.as_deref())?;
    let counts = a.data.load()?;
    let input = a.input.clone().ok_or_else(|| CliError::validation("--input is required"))?;
    let label: PolarizationLabel = input.parse()?;
    let rho = state_tomography(&counts, &input, label.len(), &a.data.calibration()?)?;
    let m = rho.matrix();
    let tr = rho.trace();
    let purity = if tr > 0.0 { (m * m).trace().re / (tr * tr) } else { 0.0 };
    let ideal = if label.len() == 2 {
        Some(rho.normalized()?.fidelity_to_pure(&cphase_unitary().apply(&label.ket()))?)
    } else {
        None
    };
    emit_csv(common, &["row", "col", "re", "im"], &matrix_rows(m))?;
    let result = json!({
        "input": input,
        "density_matrix": matrix_to_json(m),
        "trace": tr,
        "purity": purity,
        "eigenvalues": linalg::eigvalsh(m),
        "fidelity_to_ideal_cphase_output": ideal,
    });
    emit(common, "tomo-state", config, None, result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetGate {
    #[default]
    Cphase,
    Cnot,
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct TomoProcessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: CountsArgs,
    /// Ideal gate for the fidelity and the adapted basis.
    #[arg(long, value_enum)]
    pub gate: Option<TargetGate>,
    /// Bootstrap resamples for error bars (0 skips).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn tomo_process(a: TomoProcessArgs, common: &Common) -> CliResult<()> {
    let (a, config) = resolve(&a, common.config.as_deref())?;
    let counts = a.data.load()?;
    let cal = a.data.calibration()?;
    let ideal = match a.gate.unwrap_or_default() {
        TargetGate::Cphase => cphase_unitary(),
        TargetGate::Cnot => cnot_equivalent_unitary().0,
    };
    let r = process_tomography(&counts, &cal, &ideal)?;
    let theta = r.theta.entries();
    let mut result = json!({
        "fidelity_ps": r.fidelity_ps,
        "fidelity_pro": r.fidelity_pro,
        "eta_bar_theta": r.eta_bar_theta,
        "eta_bar_trace": r.eta_bar_trace,
        "hermiticity_error": r.hermiticity_error,
        "min_eigenvalue": r.min_eigenvalue,
        "chi_ps_adapted": matrix_to_json(r.chi_ps_adapted.entries()),
        "chi_ps_adapted_basis": r.chi_ps_adapted.basis_tag(),
        "theta": matrix_to_json(theta),
    });
    if a.gate.unwrap_or_default() == TargetGate::Cphase && counts.inputs().iter().all(|i| i.len() == 2) {
        let (xi, leak) = xi_from_chi(&r.chi_ps)?;
        let eta: [f64; 4] = std::array::from_fn(|i| theta[(i, i)].re);
        result["xi"] = json!(xi.entries);
        result["xi_leak_weight"] = json!(leak);
        result["xi_fidelities"] = json!(fidelities_from_xi(&xi));
        result["visibility_fit"] = match fit_visibilities(&xi, &eta) {
            Ok(f) => json!(f),
            Err(e) => json!({"error": e.to_string()}),
        };
    }
    let resamples = a.bootstrap.unwrap_or(0);
    let seed = a.seed.unwrap_or(1);
    if resamples > 0 {
        let vals = bootstrap(&counts, resamples, seed, |c| {
            process_tomography(c, &cal, &ideal).map(|r| (r.fidelity_ps, r.eta_bar_theta, r.fidelity_pro))
        })?;
        let pick = |f: fn(&(f64, f64, f64)) -> f64| mean_and_std(&vals.iter().map(f).collect::<Vec<_>>()).1;
        result["bootstrap"] = json!({
            "resamples": resamples,
            "fidelity_ps_std": pick(|v| v.0),
            "eta_bar_theta_std": pick(|v| v.1),
            "fidelity_pro_std": pick(|v| v.2),
        });
    }
    emit_csv(common, &["row", "col", "re", "im"], &matrix_rows(r.chi_ps_adapted.entries()))?;
    emit(common, "tomo-process", config, (resamples > 0).then_some(seed), result)
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct TomoEfficiencyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: CountsArgs,
}

pub fn tomo_efficiency(a: TomoEfficiencyArgs, common: &Common) -> CliResult<()> {
    let (a, config) = resolve(&a, common.config.as_deref())?;
    let counts = a.data.load()?;
    let cal = a.data.calibration()?;
    let mut values = Vec::new();
    let mut per_input = serde_json::Map::new();
    let mut rows = Vec::new();
    for input in counts.inputs() {
        let label: PolarizationLabel = input.parse()?;
        let (mut k, mut n) = (0u64, 0u64);
        for (i, _, cell) in counts.cells() {
            if i == input {
                k += cell.total();
                n += cell.invocations;
            }
        }
        if n == 0 {
            return Err(CliError::validation(format!("input `{input}` has no invocations")));
        }
        let eta = k as f64 / n as f64 / cal.reference_probability(label.len());
        per_input.insert(input.clone(), json!(eta));
        rows.push(vec![input.clone(), num(eta)]);
        values.push((label.ket().projector().into_matrix(), eta));
    }
    let theta = efficiency_matrix_from_measurements(&values)?;
    let etas: Vec<f64> = values.iter().map(|v| v.1).collect();
    emit_csv(common, &["input", "eta"], &rows)?;
    let result = json!({
        "per_input": per_input,
        "theta": matrix_to_json(theta.entries()),
        "theta_real": real_matrix_to_json(theta.entries()),
        "eta_bar": average_efficiency(&theta),
        "eigenvalues": linalg::eigvalsh(theta.entries()),
        "valid": theta.is_valid(),
        "harmonic_mean_of_inputs": harmonic_mean_efficiency(&etas).ok(),
    });
    emit(common, "tomo-efficiency", config, None, result)
}
