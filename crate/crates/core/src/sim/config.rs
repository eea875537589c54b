//! Simulation configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{GateParams, PhaseNoise};
use crate::sim::plan::Plan;

/// Photon-number statistics of the incoming pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SourceMode {
    /// Exactly one control photon and exactly `n_targets` target photons.
    #[default]
    ExactlyOne,
    /// Independent Poisson numbers in the control and target pulses.
    Poissonian { mean_control: f64, mean_target: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default)]
    pub source: SourceMode,
    /// Target photons required by the postselection.
    pub n_targets: usize,
    pub gate: GateParams,
    #[serde(default)]
    pub phase_noise: PhaseNoise,
    /// One `β_t` per shot shared by all targets instead of one per target photon.
    #[serde(default)]
    pub shared_target_phase: bool,
    /// Rotate every target D→V, A→H before analysis.
    #[serde(default)]
    pub target_rotation: bool,
    pub detection_efficiency: f64,
    /// Mean dark counts per detector and detection window.
    #[serde(default)]
    pub dark_count_rate: f64,
    /// Gate invocations per plan cell.
    pub shots: u64,
    pub seed: u64,
    pub plan: Plan,
}

/// Rule applied to extra photons; recorded in the output metadata.
pub const MULTI_PHOTON_RULE: &str = "approximation: all target photons of a pulse share the joint state with \
the first control photon; extra control photons propagate independently through the control map with the same \
β_c; every detected photon counts toward postselection; detectors resolve photon number";

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.shots == 0 {
            return Err(Error::InvalidParameter("shots must be at least 1".into()));
        }
        if self.n_targets == 0 {
            return Err(Error::InvalidParameter("need at least one target photon".into()));
        }
        if !unit(self.detection_efficiency) {
            return Err(Error::InvalidParameter("detection efficiency must lie in [0, 1]".into()));
        }
        if !(self.dark_count_rate >= 0.0 && self.dark_count_rate.is_finite()) {
            return Err(Error::InvalidParameter("dark count rate must be non-negative".into()));
        }
        if let SourceMode::Poissonian { mean_control, mean_target } = self.source {
            if !(mean_control >= 0.0 && mean_target >= 0.0 && mean_control <= 5.0 && mean_target <= 5.0) {
                return Err(Error::InvalidParameter("mean photon numbers must lie in [0, 5]".into()));
            }
        }
        self.gate.validate()?;
        self.gate.photon_amplitudes()?;
        let photons = self.plan.photons()?;
        if photons != self.n_targets + 1 {
            return Err(Error::DimensionMismatch { expected: self.n_targets + 1, got: photons });
        }
        for cell in &self.plan.cells {
            let t = &cell.input.0[1..];
            let bases = cell.setting.expand(photons);
            if t.iter().any(|&p| p != t[0]) || bases[1..].iter().any(|&b| b != bases[1]) {
                return Err(Error::InvalidParameter(format!(
                    "target photons share one pulse and one analyzer: `{}` / `{}`",
                    cell.input, cell.setting
                )));
            }
        }
        Ok(())
    }

    /// Config echo with the multi-photon rule, for sidecars and reports.
    pub fn metadata(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let serde_json::Value::Object(m) = &mut v {
            m.insert("multi_photon_rule".into(), MULTI_PHOTON_RULE.into());
        }
        v
    }
}
