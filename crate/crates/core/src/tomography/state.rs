use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::{pauli_string, DensityMatrix};
use crate::sim::counts::CountsTable;
use crate::sim::plan::local_pauli_settings;

/// Photon source used to turn counts into absolute probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PairSource {
    /// Every invocation carries exactly one photon per input mode.
    ExactlyOne,
    /// Independent Poisson sources; the reference is the probability of exactly
    /// one control photon and exactly `n − 1` target photons.
    Poissonian { mean_control: f64, mean_target: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateCalibration {
    pub detection_efficiency: f64,
    pub source: PairSource,
}

impl Default for StateCalibration {
    fn default() -> Self {
        StateCalibration { detection_efficiency: 1.0, source: PairSource::ExactlyOne }
    }
}

impl StateCalibration {
    /// Probability that an invocation yields all `n` photons and all are detected,
    /// for a lossless gate.
    pub fn reference_probability(&self, n: usize) -> f64 {
        let source = match self.source {
            PairSource::ExactlyOne => 1.0,
            PairSource::Poissonian { mean_control: c, mean_target: t } => {
                let k = n.saturating_sub(1) as i32;
                let fact: f64 = (1..=k).map(f64::from).product();
                c * (-c).exp() * t.powi(k) * (-t).exp() / fact
            }
        };
        source * self.detection_efficiency.powi(n as i32)
    }
}

/// Linear-inversion state estimate from the 3^n local Pauli settings of one input.
///
/// Each Stokes component is averaged over all settings compatible with it. The
/// trace is the postselected fraction relative to
/// [`StateCalibration::reference_probability`] (capped at 1), and the estimate is
/// projected onto the nearest positive semidefinite matrix of that trace.
pub fn state_tomography(
    counts: &CountsTable,
    input: &str,
    n_qubits: usize,
    calibration: &StateCalibration,
) -> Result<DensityMatrix> {
    let scale = calibration.reference_probability(n_qubits);
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter("reference probability must be positive".into()));
    }
    let settings = local_pauli_settings(n_qubits);
    // For each setting: per-photon (pauli index, sign) and outcome probabilities.
    let mut data = Vec::with_capacity(settings.len());
    for setting in &settings {
        let label = setting.to_string();
        let cell = counts.cell(input, &label).ok_or_else(|| Error::MissingSetting {
            input: input.to_string(),
            setting: label.clone(),
        })?;
        if cell.invocations == 0 {
            return Err(Error::InvalidParameter(format!("cell ({input}, {label}) has no invocations")));
        }
        let mut outcomes = Vec::with_capacity(cell.outcomes.len());
        for (o, &k) in &cell.outcomes {
            if o.len() != n_qubits {
                return Err(Error::Inconsistent(format!(
                    "outcome `{o}` in ({input}, {label}) does not have {n_qubits} photons"
                )));
            }
            let signs: Vec<f64> = o.chars().map(|ch| if ch == '+' { 1.0 } else { -1.0 }).collect();
            outcomes.push((signs, k as f64 / (cell.invocations as f64 * scale)));
        }
        let paulis: Vec<(usize, f64)> =
            setting.expand(n_qubits).iter().map(|b| b.pauli().expect("fixed basis")).collect();
        data.push((paulis, outcomes));
    }

    let d = 1usize << n_qubits;
    let mut rho = CMatrix::zeros(d, d);
    for sigma in 0..4usize.pow(n_qubits as u32) {
        let digits: Vec<usize> =
            (0..n_qubits).map(|q| (sigma / 4usize.pow((n_qubits - 1 - q) as u32)) % 4).collect();
        let mut sum = 0.0;
        let mut used = 0usize;
        for (paulis, outcomes) in &data {
            if digits.iter().zip(paulis).any(|(&s, &(p, _))| s != 0 && s != p) {
                continue;
            }
            used += 1;
            for (signs, p) in outcomes {
                let parity: f64 = digits
                    .iter()
                    .zip(paulis)
                    .zip(signs)
                    .filter(|((&s, _), _)| s != 0)
                    .map(|((_, &(_, b)), &o)| b * o)
                    .product();
                sum += parity * p;
            }
        }
        let stokes = sum / used as f64;
        rho += pauli_string(n_qubits, sigma).scale(stokes / d as f64);
    }
    let trace = linalg::trace(&rho).re.clamp(0.0, 1.0);
    DensityMatrix::new(linalg::project_psd_with_trace(&rho, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{cphase_unitary, Ket, Polarization, PolarizationLabel};

    /// Exact expected counts for a pure output state.
    fn ideal_counts(input: &str, out: &Ket, invocations: u64) -> CountsTable {
        let mut t = CountsTable::new();
        for s in local_pauli_settings(2) {
            let bases = s.expand(2);
            t.add_invocations(input, &s.to_string(), invocations);
            for (o, name) in ["++", "+-", "-+", "--"].iter().enumerate() {
                let a = bases[0].states()[o / 2];
                let b = bases[1].states()[o % 2];
                let proj = Ket::from_vec(vec![a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]).unwrap();
                let p = proj.inner(out).norm_sqr();
                t.add_count(input, &s.to_string(), name, (p * invocations as f64).round() as u64);
            }
        }
        t
    }

    #[test]
    fn bell_state_from_exact_counts() {
        let dd: PolarizationLabel = "DD".parse().unwrap();
        let bell = cphase_unitary().apply(&dd.ket());
        let counts = ideal_counts("DD", &bell, 1_000_000);
        let rho = state_tomography(&counts, "DD", 2, &StateCalibration::default()).unwrap();
        assert!(rho.fidelity_to_pure(&bell).unwrap() > 0.995);
        assert!((rho.trace() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn missing_setting() {
        let k = Polarization::H.ket().tensor(&Polarization::H.ket());
        let counts = ideal_counts("HH", &k, 100);
        let mut partial = CountsTable::new();
        for (i, s, cell) in counts.cells() {
            if s != "RL_RL" {
                partial.insert_cell(i, s, cell.clone());
            }
        }
        assert!(matches!(
            state_tomography(&partial, "HH", 2, &StateCalibration::default()),
            Err(Error::MissingSetting { .. })
        ));
    }

    #[test]
    fn loss_appears_as_trace_deficit() {
        let k = Polarization::R.ket().tensor(&Polarization::V.ket());
        let mut counts = ideal_counts("RV", &k, 10_000);
        for cell in counts.cells_mut() {
            for v in cell.outcomes.values_mut() {
                *v /= 4;
            }
        }
        let rho = state_tomography(&counts, "RV", 2, &StateCalibration::default()).unwrap();
        assert!((rho.trace() - 0.25).abs() < 1e-3);
        assert!((rho.expectation(&k) - 0.25).abs() < 1e-3);
        let expect = k.projector().into_matrix().scale(0.25);
        assert!(linalg::max_abs_diff(rho.matrix(), &expect) < 1e-3);
    }

    #[test]
    fn detection_efficiency_rescales() {
        let cal = StateCalibration { detection_efficiency: 0.5, source: PairSource::ExactlyOne };
        assert!((cal.reference_probability(2) - 0.25).abs() < 1e-15);
        let p = StateCalibration {
            detection_efficiency: 1.0,
            source: PairSource::Poissonian { mean_control: 0.1, mean_target: 0.2 },
        };
        assert!((p.reference_probability(2) - 0.1 * 0.2 * (-0.3f64).exp()).abs() < 1e-15);
    }
}
