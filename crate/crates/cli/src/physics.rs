//! Cavity, EIT spectroscopy, storage, blockade and coupling subcommands.

use std::fs::File;
use std::path::PathBuf;

use rydgate::cavity::{
    blockade_radius, conditional_phase, cooperativity_chain, coupling_and_cooperativity, fit_spectrum,
    read_spectrum_csv, reflection, spectrum, storage_retrieval_efficiency, synthetic_spectrum,
    transverse_factor, write_spectrum_csv, BlockadeParams, EitParams, FitStage, NoiseModel,
};
use rydgate::preset::Preset;
use rydgate::units::{
    angular_to_mhz, m_to_um, mhz_to_angular, rate_from_time_us, time_us_from_rate, um_to_m, us_to_s,
    ATOMIC_UNIT_C3,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::report::{emit, emit_csv, num, require_file, CliError, CliResult, Common};

fn preset(name: &Option<String>) -> CliResult<Preset> {
    Ok(Preset::load(name.as_deref().unwrap_or("paper"))?)
}

/// EIT overrides shared by the spectrum subcommands.
#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
pub struct EitOverrides {
    /// Collective cooperativity C.
    #[arg(long = "C", value_parser = crate::report::finite)]
    pub cooperativity: Option<f64>,
    /// Coupling Rabi frequency Ω/2π (MHz).
    #[arg(long, value_parser = crate::report::finite)]
    pub omega_mhz: Option<f64>,
    /// Ground-Rydberg coherence time 1/γ_rg (µs).
    #[arg(long, value_parser = crate::report::finite)]
    pub coherence_time_us: Option<f64>,
}

impl EitOverrides {
    fn apply(&self, base: EitParams) -> EitParams {
        EitParams {
            cooperativity: self.cooperativity.unwrap_or(base.cooperativity),
            omega: self.omega_mhz.map(mhz_to_angular).unwrap_or(base.omega),
            gamma_rg: self.coherence_time_us.map(rate_from_time_us).unwrap_or(base.gamma_rg),
            ..base
        }
    }
}

fn eit_json(p: &EitParams) -> serde_json::Value {
    json!({
        "C": p.cooperativity,
        "omega_over_2pi_MHz": angular_to_mhz(p.omega),
        "coherence_time_us": time_us_from_rate(p.gamma_rg),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// No coupling light: Ω = 0.
    Absorption,
    #[default]
    Eit,
}

impl From<Stage> for FitStage {
    fn from(s: Stage) -> Self {
        match s {
            Stage::Absorption => FitStage::Absorption,
            Stage::Eit => FitStage::Eit,
        }
    }
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct SpectrumGenArgs {
    /// Preset name (`paper`) or path to a preset JSON file.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub stage: Option<Stage>,
    #[command(flatten)]
    #[serde(flatten)]
    pub eit: EitOverrides,
    /// Number of detuning points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Half-width of the detuning scan (MHz).
    #[arg(long, value_parser = crate::report::finite)]
    pub span_mhz: Option<f64>,
    /// Absolute noise on |R|² (0 for the clean model).
    #[arg(long, value_parser = crate::report::finite)]
    pub intensity_noise: Option<f64>,
    /// Phase noise (rad).
    #[arg(long, value_parser = crate::report::finite)]
    pub phase_noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn spectrum_gen(a: SpectrumGenArgs, common: &Common) -> CliResult<()> {
    let (a, config) = crate::report::resolve(&a, common.config.as_deref())?;
    let p = preset(&a.preset)?;
    let model = p.reflection_model()?;
    let mut eit = a.eit.apply(p.eit()?);
    let stage = a.stage.unwrap_or_default();
    if stage == Stage::Absorption {
        eit.omega = 0.0;
    }
    let points = a.points.unwrap_or(41);
    let span = a.span_mhz.unwrap_or(30.0);
    if points < 2 || !(span > 0.0) {
        return Err(CliError::validation("need at least 2 points and a positive span"));
    }
    let grid: Vec<f64> = (0..points)
        .map(|k| mhz_to_angular(-span + 2.0 * span * k as f64 / (points - 1) as f64))
        .collect();
    let seed = a.seed.unwrap_or(1);
    let (si, sp) = (a.intensity_noise.unwrap_or(0.01), a.phase_noise.unwrap_or(0.02));
    let points_out = if si > 0.0 && sp > 0.0 {
        let mut rng = rydgate::rng::stream(seed, &[0]);
        synthetic_spectrum(&eit, &model, &grid, &NoiseModel { intensity_sigma: si, phase_sigma: sp }, &mut rng)?
    } else if si == 0.0 && sp == 0.0 {
        spectrum(&eit, &model, &grid)?
    } else {
        return Err(CliError::validation("noise levels must both be positive or both zero"));
    };
    if let Some(path) = &common.csv {
        write_spectrum_csv(&points_out, File::create(path)?)?;
    }
    let on_res = reflection(&EitParams { delta_s: 0.0, delta_c: 0.0, ..eit }, &model)?;
    let result = json!({
        "stage": stage,
        "eit": eit_json(&eit),
        "points": points_out.len(),
        "resonant_intensity": on_res.amplitude.norm_sqr(),
        "resonant_phase_rad": on_res.amplitude.arg(),
        "c_eff_resonant": on_res.c_eff.re,
        "single_mode_advisory": on_res.advisory,
        "conditional_phase_rad": conditional_phase(&eit, &model)?,
    });
    emit(common, "spectrum-gen", config, Some(seed), result)
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct SpectrumFitArgs {
    /// Spectrum CSV (detuning_MHz, intensity, intensity_err, phase_rad, phase_err).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub stage: Option<Stage>,
    /// Initial guesses; parameters not fitted in this stage stay fixed.
    #[command(flatten)]
    #[serde(flatten)]
    pub eit: EitOverrides,
}

pub fn spectrum_fit(a: SpectrumFitArgs, common: &Common) -> CliResult<()> {
    let (a, config) = crate::report::resolve(&a, common.config.as_deref())?;
    let input = a.input.clone().ok_or_else(|| CliError::validation("--input is required"))?;
    require_file(&input)?;
    let p = preset(&a.preset)?;
    let model = p.reflection_model()?;
    let stage = a.stage.unwrap_or_default();
    let mut base = a.eit.apply(p.eit()?);
    if stage == Stage::Absorption {
        base.omega = 0.0;
    }
    let points = read_spectrum_csv(File::open(&input)?)?;
    let fit = fit_spectrum(&points, &FitStage::from(stage).free(), &base, &model)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|pt| {
            let q = EitParams { delta_s: pt.detuning, delta_c: pt.detuning + model.cavity_detuning_offset, ..fit.params };
            let r = reflection(&q, &model).map(|r| r.amplitude).unwrap_or_default();
            let m = pt.measured.map(|m| (m.intensity, m.phase)).unwrap_or((f64::NAN, f64::NAN));
            vec![
                num(angular_to_mhz(pt.detuning)),
                num(m.0),
                num(m.1),
                num(r.norm_sqr()),
                num(r.arg()),
            ]
        })
        .collect();
    emit_csv(
        common,
        &["detuning_MHz", "intensity", "phase_rad", "model_intensity", "model_phase_rad"],
        &rows,
    )?;
    let values: serde_json::Map<String, serde_json::Value> = fit
        .names
        .iter()
        .zip(fit.values.iter().zip(&fit.errors))
        .map(|(n, (v, e))| (n.to_string(), json!({"value": v, "error": e})))
        .collect();
    let result = json!({
        "stage": stage,
        "fitted": values,
        "covariance": fit.covariance,
        "eit": eit_json(&fit.params),
        "chisq": fit.chisq,
        "reduced_chisq": fit.reduced_chisq,
        "n_points": fit.n_points,
        "evaluations": fit.evaluations,
    });
    emit(common, "spectrum-fit", config, None, result)
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct SrEfficiencyArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// Cooperativity C.
    #[arg(long = "C", value_parser = crate::report::finite)]
    pub cooperativity: Option<f64>,
    /// κ_in/κ.
    #[arg(long, value_parser = crate::report::finite)]
    pub kin_ratio: Option<f64>,
    /// Coherence time 1/γ_rg (µs); `inf` for no dephasing.
    #[arg(long, value_parser = crate::report::non_negative_or_inf)]
    #[serde(default, with = "crate::report::maybe_inf")]
    pub gamma_rg_inv_us: Option<f64>,
    /// Total storage time t_c + t_dark (µs).
    #[arg(long, value_parser = crate::report::finite)]
    pub t_us: Option<f64>,
}

pub fn sr_efficiency(a: SrEfficiencyArgs, common: &Common) -> CliResult<()> {
    let (a, config) = crate::report::resolve(&a, common.config.as_deref())?;
    let p = preset(&a.preset)?;
    let c = match a.cooperativity {
        Some(c) => c,
        None => p.scalar("storage.cooperativity")?,
    };
    let kin = match a.kin_ratio {
        Some(k) => k,
        None => p.cavity()?.kappa_in_ratio(),
    };
    let tau = match a.gamma_rg_inv_us {
        Some(t) => t,
        None => p.scalar("storage.coherence_time")?,
    };
    let t = match a.t_us {
        Some(t) => t,
        None => p.scalar("storage.time")?,
    };
    if !(tau > 0.0) {
        return Err(CliError::validation("coherence time must be positive"));
    }
    let gamma = if tau.is_infinite() { 0.0 } else { rate_from_time_us(tau) };
    let eta = storage_retrieval_efficiency(c, kin, gamma, us_to_s(t))?;
    let eta0 = storage_retrieval_efficiency(c, kin, 0.0, us_to_s(t))?;
    let result = json!({
        "eta_sr": eta,
        "eta_sr_no_dephasing": eta0,
        "C": c,
        "kin_ratio": kin,
        "coherence_time_us": tau,
        "t_us": t,
    });
    emit(common, "sr-efficiency", config, None, result)
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct BlockadeArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// C3 in atomic units.
    #[arg(long, value_parser = crate::report::finite)]
    pub c3_au: Option<f64>,
    /// Förster defect Δ_F/2π (MHz).
    #[arg(long, value_parser = crate::report::finite)]
    pub forster_defect_mhz: Option<f64>,
    /// Förster dephasing time 1/γ_F (µs); estimated from polarizabilities if absent.
    #[arg(long, value_parser = crate::report::finite)]
    pub inverse_gamma_f_us: Option<f64>,
    /// Cooperativity C.
    #[arg(long = "C", value_parser = crate::report::finite)]
    pub cooperativity: Option<f64>,
    /// Coupling Rabi frequency Ω/2π (MHz).
    #[arg(long, value_parser = crate::report::finite)]
    pub omega_mhz: Option<f64>,
}

pub fn blockade(a: BlockadeArgs, common: &Common) -> CliResult<()> {
    let (a, config) = crate::report::resolve(&a, common.config.as_deref())?;
    let p = preset(&a.preset)?;
    let base = p.blockade()?;
    let bp = BlockadeParams {
        c3: a.c3_au.map(|x| x * ATOMIC_UNIT_C3).unwrap_or(base.c3),
        forster_defect: a.forster_defect_mhz.map(mhz_to_angular).unwrap_or(base.forster_defect),
        gamma_f: a.inverse_gamma_f_us.map(rate_from_time_us).unwrap_or(base.gamma_f),
    };
    let eit = p.eit()?;
    let c = a.cooperativity.unwrap_or(eit.cooperativity);
    let omega = a.omega_mhz.map(mhz_to_angular).unwrap_or(eit.omega);
    let r = blockade_radius(&bp, c, omega, p.gamma_e()?)?;
    let result = json!({
        "blockade_radius_um": m_to_um(r),
        "inverse_gamma_f_us": time_us_from_rate(bp.gamma_f),
        "c3_J_m3": bp.c3,
        "forster_defect_MHz": angular_to_mhz(bp.forster_defect),
        "C": c,
        "omega_over_2pi_MHz": angular_to_mhz(omega),
    });
    emit(common, "blockade", config, None, result)
}

#[derive(Debug, Clone, clap::Args, Serialize, Deserialize)]
pub struct CouplingArgs {
    #[arg(long)]
    pub preset: Option<String>,
    /// Single-atom coupling g/2π (MHz).
    #[arg(long, value_parser = crate::report::finite)]
    pub g_mhz: Option<f64>,
    /// Cavity decay κ/2π (MHz).
    #[arg(long, value_parser = crate::report::finite)]
    pub kappa_mhz: Option<f64>,
    /// Atomic coherence decay γ/2π (MHz).
    #[arg(long, value_parser = crate::report::finite)]
    pub gamma_mhz: Option<f64>,
    #[arg(long, value_parser = crate::report::finite)]
    pub atom_number: Option<f64>,
    /// Cavity waist (µm).
    #[arg(long, value_parser = crate::report::finite)]
    pub waist_um: Option<f64>,
    /// Cloud rms sizes (µm).
    #[arg(long, value_parser = crate::report::finite)]
    pub sigma_x_um: Option<f64>,
    #[arg(long, value_parser = crate::report::finite)]
    pub sigma_y_um: Option<f64>,
}

pub fn coupling(a: CouplingArgs, common: &Common) -> CliResult<()> {
    let (a, config) = crate::report::resolve(&a, common.config.as_deref())?;
    let p = preset(&a.preset)?;
    let mut geo = p.geometry()?;
    if let Some(w) = a.waist_um {
        geo.waist = um_to_m(w);
    }
    if let Some(s) = a.sigma_x_um {
        geo.sigma_x = um_to_m(s);
    }
    if let Some(s) = a.sigma_y_um {
        geo.sigma_y = um_to_m(s);
    }
    if let Some(n) = a.atom_number {
        geo.atom_number = n;
    }
    let kappa = mhz_to_angular(a.kappa_mhz.unwrap_or(p.scalar("coupling.kappa")?));
    let gamma = mhz_to_angular(a.gamma_mhz.unwrap_or(p.scalar("coupling.gamma")?));
    let g = mhz_to_angular(a.g_mhz.unwrap_or(p.scalar("coupling.g")?));
    let factor = transverse_factor(geo.sigma_x, geo.sigma_y, geo.waist);
    let chain = cooperativity_chain(g, kappa, gamma, geo.atom_number, factor)?;
    let geometric = coupling_and_cooperativity(&geo, kappa, gamma)?;
    let report = |r: &rydgate::cavity::CouplingReport| {
        json!({
            "g_over_2pi_MHz": angular_to_mhz(r.g),
            "single_atom_cooperativity": r.single_atom_cooperativity,
            "transverse_factor": r.transverse_factor,
            "c_max": r.c_max,
            "c_estimate": r.c_estimate,
        })
    };
    let result = json!({
        "from_coupling": report(&chain),
        "from_geometry": report(&geometric),
    });
    emit(common, "coupling", config, None, result)
}
