//! GHZ analysis, GHZ model and coincidence-rate subcommands.

use std::fs::File;

use rydgate::ghz::{
    analyze_counts, coincidence_rates, ghz_closed_forms, monte_carlo_ghz, two_photon_rate, CoherenceMethod,
    GhzMonteCarloOptions, RateBreakdown, RateParams,
};
use rydgate::preset::Preset;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::gate::{gate_params, CountsArgs, NoiseArg};
use crate::report::{emit, emit_csv, num, resolve, CliError, CliResult, Common};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    AlternatingSum,
    CosineFit,
    #[default]
    Auto,
}

impl From<MethodArg> for CoherenceMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::AlternatingSum => CoherenceMethod::AlternatingSum,
            MethodArg::CosineFit => CoherenceMethod::CosineFit,
            MethodArg::Auto => CoherenceMethod::Auto,
        }
    }
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct GhzAnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: CountsArgs,
    /// Input label; defaults to D repeated N times.
    #[arg(long)]
    pub input: Option<String>,
    /// Photon number N.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
}

pub fn ghz_analyze(a: GhzAnalyzeArgs, common: &Common) -> CliResult<()> {
    let (a, config) = resolve(&a, common.config.as_deref())?;
    let counts = a.data.load()?;
    let n = match (a.n, &a.input) {
        (Some(n), _) => n,
        (None, Some(i)) => i.chars().count(),
        (None, None) => return Err(CliError::validation("--n or --input is required")),
    };
    let input = a.input.clone().unwrap_or_else(|| "D".repeat(n));
    let analysis = analyze_counts(&counts, &input, n, a.method.unwrap_or_default().into())?;
    if let Some(p) = &common.csv {
        analysis.dataset.write_csv(File::create(p)?)?;
    }
    let result = json!({
        "input": input,
        "n": n,
        "method": analysis.method,
        "summary": analysis.summary,
        "parity_points": analysis.dataset.points.len(),
    });
    emit(common, "ghz-analyze", config, None, result)
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct GhzModelArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// Smallest and largest photon number N.
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Effective control visibility.
    #[arg(long, value_parser = crate::report::finite)]
    pub v_c_eff: Option<f64>,
    #[arg(long, value_delimiter = ',', value_parser = crate::report::finite)]
    pub eta: Option<Vec<f64>>,
    #[arg(long, value_parser = crate::report::finite)]
    pub v_t: Option<f64>,
    /// Use the physical loss decomposition (default true).
    #[arg(long)]
    pub physical: Option<bool>,
    /// Monte Carlo phase samples per N (0 skips).
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long, value_enum)]
    pub phase_noise: Option<NoiseArg>,
    /// One target phase per shot shared by all targets.
    #[arg(long)]
    pub shared_target_phase: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn ghz_model(a: GhzModelArgs, common: &Common) -> CliResult<()> {
    let (a, config) = resolve(&a, common.config.as_deref())?;
    let preset = Preset::load(a.preset.as_deref().unwrap_or("paper"))?;
    let g = gate_params(&preset, a.physical.unwrap_or(true), &a.eta, None, a.v_t)?;
    let v_c_eff = match a.v_c_eff {
        Some(v) => v,
        None => preset.scalar("ghz.v_c_eff")?,
    };
    let (lo, hi) = (a.n_min.unwrap_or(2), a.n_max.unwrap_or(6));
    if lo < 2 || hi < lo || hi > 16 {
        return Err(CliError::validation("need 2 ≤ n-min ≤ n-max ≤ 16"));
    }
    let samples = a.mc_samples.unwrap_or(0);
    let seed = a.seed.unwrap_or(1);
    let opts = GhzMonteCarloOptions {
        noise: a.phase_noise.unwrap_or_default().into(),
        shared_target_phase: a.shared_target_phase.unwrap_or(false),
    };
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for n in lo..=hi {
        let cf = ghz_closed_forms(&g, v_c_eff, n)?;
        let s = cf.summary();
        let mc = if samples > 0 {
            Some(monte_carlo_ghz(&g, v_c_eff, n, samples, rydgate::rng::derive_seed(seed, &[n as u64]), opts)?)
        } else {
            None
        };
        let mut row = vec![n.to_string(), num(cf.p_h), num(cf.p_v), num(cf.eta_n), num(cf.coherence), num(s.fidelity)];
        if let Some(m) = &mc {
            row.push(num(m.estimate.summary().fidelity));
            row.push(num(m.estimate.coherence));
            row.push(num(m.coherence_err));
        }
        rows.push(row);
        out.push(json!({"n": n, "closed_form": cf, "fidelity": s.fidelity, "entangled": s.entangled, "monte_carlo": mc}));
    }
    let mut header = vec!["N", "p_H", "p_V", "eta_N", "C_N", "F_N"];
    if samples > 0 {
        header.extend(["F_N_mc", "C_N_mc", "C_N_mc_err"]);
    }
    emit_csv(common, &header, &rows)?;
    let result = json!({"gate": g, "v_c_eff": v_c_eff, "predictions": out});
    emit(common, "ghz-model", config, (samples > 0).then_some(seed), result)
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct RatesArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// Detected control photons per invocation ν_c.
    #[arg(long, value_parser = crate::report::finite)]
    pub nu_c: Option<f64>,
    /// Detected target photons per invocation ν_t.
    #[arg(long, value_parser = crate::report::finite)]
    pub nu_t: Option<f64>,
    /// Gate invocations per second.
    #[arg(long, value_parser = crate::report::finite)]
    pub repetition_rate: Option<f64>,
    /// Largest coincidence order N.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Mean photon numbers and efficiencies for the two-photon rate.
    #[arg(long, value_parser = crate::report::finite)]
    pub mean_control: Option<f64>,
    #[arg(long, value_parser = crate::report::finite)]
    pub mean_target: Option<f64>,
    #[arg(long, value_parser = crate::report::finite)]
    pub eta_d: Option<f64>,
    #[arg(long, value_parser = crate::report::finite)]
    pub eta_bar: Option<f64>,
    /// Optional ν breakdown: the source efficiencies η_c and η_t (checked against ν).
    #[arg(long, value_parser = crate::report::finite)]
    pub eta_c: Option<f64>,
    #[arg(long, value_parser = crate::report::finite)]
    pub eta_t: Option<f64>,
}

pub fn rates(a: RatesArgs, common: &Common) -> CliResult<()> {
    let (a, config) = resolve(&a, common.config.as_deref())?;
    let preset = Preset::load(a.preset.as_deref().unwrap_or("paper"))?;
    let base = preset.rates()?;
    let or = |v: Option<f64>, key: &str| -> CliResult<f64> {
        match v {
            Some(x) => Ok(x),
            None => Ok(preset.scalar(key)?),
        }
    };
    let mean_control = or(a.mean_control, "rates.mean_control")?;
    let mean_target = or(a.mean_target, "rates.mean_target")?;
    let eta_d = or(a.eta_d, "rates.eta_d")?;
    let eta_bar = or(a.eta_bar, "gate.eta_bar")?;
    let breakdown = match (a.eta_c, a.eta_t) {
        (Some(eta_c), Some(eta_t)) => {
            Some(RateBreakdown { n_c: mean_control, n_t: mean_target, eta_d, eta_c, eta_t })
        }
        (None, None) => None,
        _ => return Err(CliError::validation("--eta-c and --eta-t go together")),
    };
    let rp = RateParams {
        nu_c: a.nu_c.unwrap_or(base.nu_c),
        nu_t: a.nu_t.unwrap_or(base.nu_t),
        repetition_rate: a.repetition_rate.unwrap_or(base.repetition_rate),
        breakdown,
    };
    let n_max = a.n_max.unwrap_or(5);
    let predicted = coincidence_rates(&rp, 1..=n_max)?;
    let measured = preset.vector("rates.measured").unwrap_or_default();
    let two = two_photon_rate(mean_control, mean_target, eta_bar, eta_d, rp.repetition_rate)?;
    let rows: Vec<Vec<String>> = predicted
        .iter()
        .map(|(n, r)| {
            let m = measured.get(n - 1).map(|m| num(*m)).unwrap_or_default();
            vec![n.to_string(), num(*r), m]
        })
        .collect();
    emit_csv(common, &["N", "predicted_per_s", "reference_per_s"], &rows)?;
    let table: Vec<_> = predicted
        .iter()
        .map(|(n, r)| json!({"n": n, "rate_per_s": r, "reference_per_s": measured.get(n - 1)}))
        .collect();
    let result = json!({
        "rate_params": rp,
        "coincidences": table,
        "two_photon": two,
    });
    emit(common, "rates", config, None, result)
}
