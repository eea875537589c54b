use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CONSISTENCY_TOL: f64 = 1e-6;

/// Partial cavity description. Any two of the three finesse values (or the
/// corresponding decay rates together with the axial mode spacing) determine
/// the rest. Rates are HWHM in rad/s.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialCavity {
    pub axial_mode_spacing: Option<f64>,
    pub finesse: Option<f64>,
    pub finesse_in: Option<f64>,
    pub finesse_h: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_in: Option<f64>,
    pub kappa_h: Option<f64>,
}

/// Fully resolved cavity. `κ = Δω_ax/(2F)`, `1/F = 1/F_in + 1/F_H`,
/// `|r_x|² = exp(−2π/F_x)`. The rates are present only when the axial mode
/// spacing is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub axial_mode_spacing: Option<f64>,
    pub finesse: f64,
    pub finesse_in: f64,
    pub finesse_h: f64,
    pub kappa: Option<f64>,
    pub kappa_in: Option<f64>,
    pub kappa_h: Option<f64>,
    pub r_in_sq: f64,
    pub r_h_sq: f64,
}

impl CavityParams {
    /// `κ_in/κ = F/F_in`.
    pub fn kappa_in_ratio(&self) -> f64 {
        self.finesse / self.finesse_in
    }

    /// Reflectivity of each of `n` identical high-reflector mirrors sharing `|r_H|²`.
    pub fn per_mirror_reflectivity(&self, n: u32) -> f64 {
        self.r_h_sq.powf(1.0 / n as f64)
    }

    /// Resonant empty-cavity reflection amplitude `−1 + 2κ_in/κ`.
    pub fn empty_reflection(&self) -> f64 {
        -1.0 + 2.0 * self.kappa_in_ratio()
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {x}")))
        }
        other => Ok(other),
    }
}

fn merge(name: &str, a: Option<f64>, b: Option<f64>) -> Result<Option<f64>> {
    match (a, b) {
        (Some(x), Some(y)) if ((x - y) / x).abs() > CONSISTENCY_TOL => Err(Error::OverDetermined(
            format!("{name} given both directly ({x}) and via its decay rate ({y})"),
        )),
        (Some(x), _) => Ok(Some(x)),
        (None, y) => Ok(y),
    }
}

pub fn complete_cavity_params(input: &PartialCavity) -> Result<CavityParams> {
    let dw = positive("axial mode spacing", input.axial_mode_spacing)?;
    let from_rate = |name: &str, k: Option<f64>| -> Result<Option<f64>> {
        match (positive(name, k)?, dw) {
            (Some(_), None) => Err(Error::UnderDetermined(format!(
                "{name} given without the axial mode spacing"
            ))),
            (Some(k), Some(dw)) => Ok(Some(dw / (2.0 * k))),
            (None, _) => Ok(None),
        }
    };
    let f = merge("F", positive("F", input.finesse)?, from_rate("κ", input.kappa)?)?;
    let f_in = merge("F_in", positive("F_in", input.finesse_in)?, from_rate("κ_in", input.kappa_in)?)?;
    let f_h = merge("F_H", positive("F_H", input.finesse_h)?, from_rate("κ_H", input.kappa_h)?)?;

    let (f, f_in, f_h) = match (f, f_in, f_h) {
        (Some(f), Some(fi), Some(fh)) => {
            let rel = (1.0 / f - 1.0 / fi - 1.0 / fh).abs() * f;
            if rel > CONSISTENCY_TOL {
                return Err(Error::Inconsistent(format!(
                    "1/F = 1/F_in + 1/F_H violated by {rel:.2e} (relative)"
                )));
            }
            (f, fi, fh)
        }
        (Some(f), Some(fi), None) => (f, fi, 1.0 / (1.0 / f - 1.0 / fi)),
        (Some(f), None, Some(fh)) => (f, 1.0 / (1.0 / f - 1.0 / fh), fh),
        (None, Some(fi), Some(fh)) => (1.0 / (1.0 / fi + 1.0 / fh), fi, fh),
        _ => {
            return Err(Error::UnderDetermined(
                "need two of F, F_in, F_H (or their decay rates)".into(),
            ))
        }
    };
    if !(f_in > 0.0 && f_h > 0.0 && f_in.is_finite() && f_h.is_finite()) {
        return Err(Error::Inconsistent(format!(
            "derived finesse values are unphysical (F_in = {f_in}, F_H = {f_h})"
        )));
    }
    let rate = |fx: f64| dw.map(|dw| dw / (2.0 * fx));
    Ok(CavityParams {
        axial_mode_spacing: dw,
        finesse: f,
        finesse_in: f_in,
        finesse_h: f_h,
        kappa: rate(f),
        kappa_in: rate(f_in),
        kappa_h: rate(f_h),
        r_in_sq: (-2.0 * std::f64::consts::PI / f_in).exp(),
        r_h_sq: (-2.0 * std::f64::consts::PI / f_h).exp(),
    })
}
