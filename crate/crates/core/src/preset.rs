//! Named parameter sets. Every entry carries a value, a unit and a short source
//! note; the bundled `paper` preset holds the measured reference values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cavity::{
    complete_cavity_params, BlockadeParams, CavityParams, PartialCavity, EitParams, GeometryParams,
    Polarizabilities, ReflectionModel,
};
use crate::error::{Error, Result};
use crate::gate::{GateParams, PhysicalDecomposition};
use crate::ghz::RateParams;
use crate::units::{
    ghz_to_angular, mhz_to_angular, rate_from_time_us, um_to_m, ATOMIC_UNIT_C3, SPEED_OF_LIGHT,
};

const BUNDLED_JSON: &str = include_str!("../presets/paper.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetEntry {
    pub value: serde_json::Value,
    pub unit: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Preset {
    pub entries: BTreeMap<String, PresetEntry>,
}

impl Preset {
    pub fn paper() -> Self {
        Preset::from_json(BUNDLED_JSON).expect("bundled preset parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `paper` or a path to a preset JSON file.
    pub fn load(name: &str) -> Result<Self> {
        if name == "paper" {
            return Ok(Preset::paper());
        }
        Preset::from_json(&std::fs::read_to_string(name)?)
    }

    pub fn entry(&self, key: &str) -> Result<&PresetEntry> {
        self.entries.get(key).ok_or_else(|| Error::InvalidParameter(format!("preset has no `{key}`")))
    }

    pub fn scalar(&self, key: &str) -> Result<f64> {
        self.entry(key)?
            .value
            .as_f64()
            .ok_or_else(|| Error::Parse(format!("preset `{key}` is not a number")))
    }

    pub fn vector(&self, key: &str) -> Result<Vec<f64>> {
        let bad = || Error::Parse(format!("preset `{key}` is not a list of numbers"));
        self.entry(key)?.value.as_array().ok_or_else(bad)?.iter().map(|v| v.as_f64().ok_or_else(bad)).collect()
    }

    pub fn array4(&self, key: &str) -> Result<[f64; 4]> {
        let v = self.vector(key)?;
        v.try_into().map_err(|_| Error::Parse(format!("preset `{key}` needs 4 entries")))
    }

    pub fn cavity(&self) -> Result<CavityParams> {
        complete_cavity_params(&PartialCavity {
            finesse: Some(self.scalar("cavity.finesse")?),
            finesse_h: Some(self.scalar("cavity.finesse_h")?),
            axial_mode_spacing: Some(ghz_to_angular(self.scalar("cavity.axial_mode_spacing")?)),
            ..Default::default()
        })
    }

    pub fn gamma_e(&self) -> Result<f64> {
        Ok(mhz_to_angular(self.scalar("atom.gamma_e")?))
    }

    pub fn reflection_model(&self) -> Result<ReflectionModel> {
        ReflectionModel::from_cavity(&self.cavity()?, self.gamma_e()?)
    }

    /// Fitted EIT parameters on resonance.
    pub fn eit(&self) -> Result<EitParams> {
        Ok(EitParams::resonant(
            self.scalar("eit.cooperativity")?,
            mhz_to_angular(self.scalar("eit.omega")?),
            rate_from_time_us(self.scalar("eit.coherence_time")?),
        ))
    }

    pub fn physical(&self) -> Result<PhysicalDecomposition> {
        Ok(PhysicalDecomposition {
            eta_sr: self.scalar("gate.eta_sr")?,
            eta_f: self.scalar("gate.eta_f")?,
            r_sq: self.scalar("gate.r_sq")?,
            eta_srt_rb_sq: self.scalar("gate.eta_srt_rb_sq")?,
        })
    }

    /// Measured CPHASE-basis efficiencies with the process-matrix visibilities.
    pub fn gate(&self) -> Result<GateParams> {
        GateParams::new(self.array4("gate.eta")?, self.scalar("gate.v_c")?, self.scalar("gate.v_t")?)
    }

    /// Efficiencies from the physical decomposition (naive `η_sr,t = η_sr` split).
    pub fn gate_physical(&self) -> Result<GateParams> {
        GateParams::from_physical(self.physical()?, self.scalar("gate.v_c")?, self.scalar("gate.v_t")?)
    }

    pub fn rates(&self) -> Result<RateParams> {
        Ok(RateParams {
            nu_c: self.scalar("rates.nu_c")?,
            nu_t: self.scalar("rates.nu_t")?,
            repetition_rate: self.scalar("rates.repetition_rate")?,
            breakdown: None,
        })
    }

    pub fn polarizabilities(&self) -> Result<Polarizabilities> {
        Ok(Polarizabilities {
            alpha_r_prime: self.scalar("blockade.alpha_r_prime")?,
            alpha_r: self.scalar("blockade.alpha_r")?,
            alpha_gamma_prime: self.scalar("blockade.alpha_gamma_prime")?,
        })
    }

    /// Blockade parameters with `γ_F` taken from the polarizability estimate.
    pub fn blockade(&self) -> Result<BlockadeParams> {
        let gamma_rg = rate_from_time_us(self.scalar("eit.coherence_time")?);
        Ok(BlockadeParams {
            c3: self.scalar("blockade.c3")? * ATOMIC_UNIT_C3,
            forster_defect: mhz_to_angular(self.scalar("blockade.forster_defect")?),
            gamma_f: crate::cavity::forster_gamma_estimate(gamma_rg, &self.polarizabilities()?)?,
        })
    }

    pub fn geometry(&self) -> Result<GeometryParams> {
        let spacing = ghz_to_angular(self.scalar("cavity.axial_mode_spacing")?);
        Ok(GeometryParams {
            waist: um_to_m(self.scalar("coupling.waist")?),
            round_trip_length: 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / spacing,
            sigma_x: um_to_m(self.scalar("coupling.sigma_x")?),
            sigma_y: um_to_m(self.scalar("coupling.sigma_y")?),
            atom_number: self.scalar("coupling.atom_number")?,
            dipole_moment: self.scalar("atom.dipole_moment")?,
            omega: 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / um_to_m(self.scalar("atom.wavelength")?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_preset_is_complete() {
        let p = Preset::paper();
        assert!(p.entries.values().all(|e| !e.source.is_empty() && !e.unit.is_empty()));
        let g = p.gate().unwrap();
        assert!((g.mean_efficiency() - p.scalar("gate.eta_bar").unwrap()).abs() < 1e-12);
        let phys = p.gate_physical().unwrap();
        assert!((phys.eta[3] - 0.585).abs() < 1e-12);
        assert!((p.cavity().unwrap().r_in_sq - 0.9825).abs() < 5e-4);
        p.reflection_model().unwrap();
        p.blockade().unwrap();
        p.geometry().unwrap();
        p.rates().unwrap().validate().unwrap();
        assert_eq!(p.vector("rates.measured").unwrap().len(), 5);
        assert!(p.scalar("gate.eta").is_err() && p.scalar("nope").is_err());
    }
}
