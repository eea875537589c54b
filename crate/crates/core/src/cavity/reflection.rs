use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, C64, I};

use super::CavityParams;

/// EIT and detuning parameters. All frequencies are angular (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitParams {
    /// Collective cooperativity `C`.
    pub cooperativity: f64,
    /// Coupling Rabi frequency `Ω`.
    pub omega: f64,
    /// Ground-Rydberg coherence decay rate `γ_rg` (1/s).
    pub gamma_rg: f64,
    pub delta_s: f64,
    pub delta_co: f64,
    pub delta_c: f64,
}

impl EitParams {
    pub fn resonant(cooperativity: f64, omega: f64, gamma_rg: f64) -> Self {
        EitParams { cooperativity, omega, gamma_rg, delta_s: 0.0, delta_co: 0.0, delta_c: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cooperativity >= 0.0 && self.gamma_rg >= 0.0 && self.omega >= 0.0) {
            return Err(Error::InvalidParameter("C, Ω and γ_rg must be non-negative".into()));
        }
        if [self.delta_s, self.delta_co, self.delta_c, self.cooperativity, self.omega, self.gamma_rg]
            .iter()
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidParameter("EIT parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Cavity quantities entering the reflection model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionModel {
    pub kappa: f64,
    pub kappa_in: f64,
    /// Full atomic linewidth `Γ_e = 2γ`.
    pub gamma_e: f64,
    pub finesse: f64,
    /// Global phase applied to every amplitude (absolute phase convention).
    #[serde(default)]
    pub phase_offset: f64,
    /// Constant offset added to `Δ_c` relative to the scanned signal detuning.
    #[serde(default)]
    pub cavity_detuning_offset: f64,
}

impl ReflectionModel {
    pub fn from_cavity(cavity: &CavityParams, gamma_e: f64) -> Result<Self> {
        match (cavity.kappa, cavity.kappa_in) {
            (Some(kappa), Some(kappa_in)) => Ok(ReflectionModel {
                kappa,
                kappa_in,
                gamma_e,
                finesse: cavity.finesse,
                phase_offset: 0.0,
                cavity_detuning_offset: 0.0,
            }),
            _ => Err(Error::UnderDetermined("cavity decay rates need the axial mode spacing".into())),
        }
    }
}

/// `C_eff = C Γ_e / (Γ_e − 2iΔ_s + Ω²/(γ_rg − 2i(Δ_co + Δ_s)))`.
/// The Ω term is dropped when Ω = 0.
pub fn effective_cooperativity(p: &EitParams, gamma_e: f64) -> Result<C64> {
    if p.cooperativity == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let eit = if p.omega == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        let inner = c(p.gamma_rg, -2.0 * (p.delta_co + p.delta_s));
        if inner.norm() == 0.0 {
            return Err(Error::SingularDenominator);
        }
        C64::from(p.omega * p.omega) / inner
    };
    let den = c(gamma_e, -2.0 * p.delta_s) + eit;
    if den.norm() == 0.0 || !den.is_finite() {
        return Err(Error::SingularDenominator);
    }
    Ok(p.cooperativity * gamma_e / den)
}

/// Reflection amplitude together with the single-mode validity advisory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionValue {
    pub amplitude: C64,
    pub c_eff: C64,
    /// Set when `|C_eff| ≥ F/π`, outside the single-axial-mode regime.
    pub advisory: bool,
}

/// `ℛ = −1 + 2κ_in / (κ(1 + C_eff) − iΔ_c)`.
pub fn reflection(p: &EitParams, model: &ReflectionModel) -> Result<ReflectionValue> {
    p.validate()?;
    let c_eff = effective_cooperativity(p, model.gamma_e)?;
    let den = model.kappa * (1.0 + c_eff) - I * p.delta_c;
    if den.norm() == 0.0 {
        return Err(Error::SingularDenominator);
    }
    let r = -1.0 + 2.0 * model.kappa_in / den;
    Ok(ReflectionValue {
        amplitude: r * C64::from_polar(1.0, model.phase_offset),
        c_eff,
        advisory: c_eff.norm() >= model.finesse / std::f64::consts::PI,
    })
}

/// Measured intensity `|ℛ|²` and phase `arg ℛ` with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub intensity: f64,
    pub intensity_err: f64,
    pub phase: f64,
    pub phase_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    /// Scanned detuning (rad/s); `Δ_s` equals it and `Δ_c` adds the model offset.
    pub detuning: f64,
    pub reflection: C64,
    pub measured: Option<Measured>,
}

fn at_detuning(p: &EitParams, model: &ReflectionModel, x: f64) -> EitParams {
    EitParams { delta_s: x, delta_c: x + model.cavity_detuning_offset, ..*p }
}

/// Model spectrum over a grid of scanned detunings.
pub fn spectrum(p: &EitParams, model: &ReflectionModel, grid: &[f64]) -> Result<Vec<SpectrumPoint>> {
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("detuning grid must be finite".into()));
    }
    grid.par_iter()
        .map(|&x| {
            reflection(&at_detuning(p, model, x), model).map(|r| SpectrumPoint {
                detuning: x,
                reflection: r.amplitude,
                measured: None,
            })
        })
        .collect()
}

/// `|arg ℛ(Ω = 0) − arg ℛ(Ω)|` at zero detuning, folded into [0, π].
pub fn conditional_phase(p: &EitParams, model: &ReflectionModel) -> Result<f64> {
    let on = EitParams { delta_s: 0.0, delta_c: 0.0, delta_co: 0.0, ..*p };
    let off = EitParams { omega: 0.0, ..on };
    let d = reflection(&off, model)?.amplitude.arg() - reflection(&on, model)?.amplitude.arg();
    let d = d.rem_euclid(2.0 * std::f64::consts::PI);
    Ok(if d > std::f64::consts::PI { 2.0 * std::f64::consts::PI - d } else { d })
}
