//! Measurement plans: which input states are prepared and how each photon is analyzed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64};
use crate::quantum::{product_labels, Polarization, PolarizationLabel};

/// Two-outcome polarization analysis of one photon. The `+` outcome is the first
/// state of each pair: H, D, R, or `b_ϑ+ = (H + e^{iϑ}V)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AnalysisBasis {
    HV,
    DA,
    RL,
    Theta(f64),
}

impl AnalysisBasis {
    /// `[|+⟩, |−⟩]` amplitudes in (H, V).
    pub fn states(self) -> [[C64; 2]; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            AnalysisBasis::HV => [Polarization::H.amplitudes(), Polarization::V.amplitudes()],
            AnalysisBasis::DA => [Polarization::D.amplitudes(), Polarization::A.amplitudes()],
            AnalysisBasis::RL => [Polarization::R.amplitudes(), Polarization::L.amplitudes()],
            AnalysisBasis::Theta(t) => {
                let e = C64::from_polar(s, t);
                [[c(s, 0.0), e], [c(s, 0.0), -e]]
            }
        }
    }

    /// `P+ − P−` as a 2×2 matrix.
    pub fn observable(self) -> CMatrix {
        let [p, m] = self.states();
        CMatrix::from_fn(2, 2, |i, j| p[i] * p[j].conj() - m[i] * m[j].conj())
    }

    /// Pauli index (1 = X, 2 = Y, 3 = Z) and sign such that the observable is
    /// `sign · σ`. Only defined for the three fixed bases.
    pub fn pauli(self) -> Option<(usize, f64)> {
        match self {
            AnalysisBasis::HV => Some((3, 1.0)),
            AnalysisBasis::DA => Some((1, 1.0)),
            AnalysisBasis::RL => Some((2, -1.0)),
            AnalysisBasis::Theta(_) => None,
        }
    }
}

impl fmt::Display for AnalysisBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisBasis::HV => write!(f, "HV"),
            AnalysisBasis::DA => write!(f, "DA"),
            AnalysisBasis::RL => write!(f, "RL"),
            AnalysisBasis::Theta(t) => write!(f, "b{t}"),
        }
    }
}

impl FromStr for AnalysisBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "HV" => Ok(AnalysisBasis::HV),
            "DA" => Ok(AnalysisBasis::DA),
            "RL" => Ok(AnalysisBasis::RL),
            _ => s
                .strip_prefix('b')
                .and_then(|t| t.parse::<f64>().ok())
                .filter(|t| t.is_finite())
                .map(AnalysisBasis::Theta)
                .ok_or_else(|| Error::Parse(format!("unknown analysis basis `{s}`"))),
        }
    }
}

/// Analysis setting label: bases joined by `_`, control first. The last basis
/// repeats for any remaining photons, so `b0.5` analyzes every photon in `b_0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingLabel(pub Vec<AnalysisBasis>);

impl SettingLabel {
    pub fn uniform(basis: AnalysisBasis) -> Self {
        SettingLabel(vec![basis])
    }

    /// Basis of photon `i`.
    pub fn basis(&self, i: usize) -> AnalysisBasis {
        self.0.get(i).copied().unwrap_or_else(|| *self.0.last().expect("non-empty setting"))
    }

    pub fn expand(&self, n: usize) -> Vec<AnalysisBasis> {
        (0..n).map(|i| self.basis(i)).collect()
    }
}

impl fmt::Display for SettingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|b| b.to_string()).collect();
        write!(f, "{}", parts.join("_"))
    }
}

impl FromStr for SettingLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Parse("empty setting label".into()));
        }
        s.split('_').map(str::parse).collect::<Result<Vec<_>>>().map(SettingLabel)
    }
}

/// One (input, setting) cell of a plan. Serialized as a pair of label strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CellRepr", into = "CellRepr")]
pub struct PlanCell {
    pub input: PolarizationLabel,
    pub setting: SettingLabel,
}

#[derive(Serialize, Deserialize)]
struct CellRepr {
    input: String,
    setting: String,
}

impl TryFrom<CellRepr> for PlanCell {
    type Error = Error;

    fn try_from(r: CellRepr) -> Result<Self> {
        Ok(PlanCell { input: r.input.parse()?, setting: r.setting.parse()? })
    }
}

impl From<PlanCell> for CellRepr {
    fn from(c: PlanCell) -> Self {
        CellRepr { input: c.input.to_string(), setting: c.setting.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan {
    pub cells: Vec<PlanCell>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Number of photons per input (all inputs must agree).
    pub fn photons(&self) -> Result<usize> {
        let n = self.cells.first().map(|c| c.input.len()).ok_or_else(|| {
            Error::InvalidParameter("plan is empty".into())
        })?;
        if self.cells.iter().any(|c| c.input.len() != n) {
            return Err(Error::InvalidParameter("plan inputs have different photon numbers".into()));
        }
        Ok(n)
    }

    /// CSV with columns `input,setting`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["input", "setting"])?;
        for cell in &self.cells {
            w.write_record([cell.input.to_string(), cell.setting.to_string()])?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Parse(e.to_string()))?)
            .map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Plan> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut cells = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let get = |i: usize| rec.get(i).ok_or_else(|| Error::Parse("short plan row".into()));
            cells.push(PlanCell { input: get(0)?.parse()?, setting: get(1)?.parse()? });
        }
        Ok(Plan { cells })
    }
}

/// The 3^n local settings {HV, DA, RL}^n, first photon most significant.
pub fn local_pauli_settings(n: usize) -> Vec<SettingLabel> {
    let bases = [AnalysisBasis::HV, AnalysisBasis::DA, AnalysisBasis::RL];
    (0..3usize.pow(n as u32))
        .map(|idx| {
            SettingLabel((0..n).map(|q| bases[(idx / 3usize.pow((n - 1 - q) as u32)) % 3]).collect())
        })
        .collect()
}

/// 16 inputs from {H, V, D, R}² times the 9 two-photon settings.
pub fn tomography_plan() -> Plan {
    use Polarization::*;
    let settings = local_pauli_settings(2);
    let cells = product_labels(2, &[H, V, D, R])
        .into_iter()
        .flat_map(|input| {
            settings.iter().map(move |s| PlanCell { input: input.clone(), setting: s.clone() })
        })
        .collect();
    Plan { cells }
}

/// Grid `ϑ_k = kπ/m` for `k = 0..m`.
pub fn theta_grid(m: usize) -> Vec<f64> {
    (0..m).map(|k| k as f64 * std::f64::consts::PI / m as f64).collect()
}

/// `|D^{⊗N}⟩` input, every photon analyzed in `b_ϑ` for each grid angle, plus one
/// H/V population setting (appended last).
pub fn parity_plan(n: usize, thetas: &[f64]) -> Plan {
    let input = PolarizationLabel(vec![Polarization::D; n]);
    let mut cells: Vec<PlanCell> = thetas
        .iter()
        .map(|&t| PlanCell {
            input: input.clone(),
            setting: SettingLabel::uniform(AnalysisBasis::Theta(t)),
        })
        .collect();
    cells.push(PlanCell { input, setting: SettingLabel::uniform(AnalysisBasis::HV) });
    Plan { cells }
}

/// CPHASE-basis truth table: the four computational inputs analyzed in HV.
pub fn cphase_truth_plan() -> Plan {
    use Polarization::*;
    let cells = product_labels(2, &[H, V])
        .into_iter()
        .map(|input| PlanCell { input, setting: SettingLabel::uniform(AnalysisBasis::HV) })
        .collect();
    Plan { cells }
}

/// CNOT-basis truth table: control in {H, V}, target in {D, A}, analyzed HV_DA.
pub fn cnot_truth_plan() -> Plan {
    use Polarization::*;
    let setting = SettingLabel(vec![AnalysisBasis::HV, AnalysisBasis::DA]);
    let cells = [H, V]
        .into_iter()
        .flat_map(|c| [D, A].into_iter().map(move |t| PolarizationLabel(vec![c, t])))
        .map(|input| PlanCell { input, setting: setting.clone() })
        .collect();
    Plan { cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::quantum::pauli_matrices;

    #[test]
    fn plan_sizes() {
        assert_eq!(tomography_plan().len(), 144);
        let p = parity_plan(3, &theta_grid(12));
        assert_eq!(p.len(), 13);
        assert_eq!(p.cells.last().unwrap().setting.to_string(), "HV");
        assert_eq!(p.cells[0].input.to_string(), "DDD");
    }

    #[test]
    fn plan_csv_round_trip() {
        for plan in [tomography_plan(), parity_plan(4, &theta_grid(8)), cnot_truth_plan()] {
            let back = Plan::from_csv(&plan.to_csv().unwrap()).unwrap();
            assert_eq!(back, plan);
        }
    }

    #[test]
    fn observables_match_paulis() {
        let p = pauli_matrices();
        for b in [AnalysisBasis::HV, AnalysisBasis::DA, AnalysisBasis::RL] {
            let (i, s) = b.pauli().unwrap();
            assert!(linalg::max_abs_diff(&b.observable(), &p[i].scale(s)) < 1e-15);
        }
        let t = 0.7f64;
        let expect = p[1].scale(t.cos()) + p[2].scale(t.sin());
        assert!(linalg::max_abs_diff(&AnalysisBasis::Theta(t).observable(), &expect) < 1e-15);
    }

    #[test]
    fn setting_labels() {
        let s: SettingLabel = "HV_DA".parse().unwrap();
        assert_eq!(s.expand(3), vec![AnalysisBasis::HV, AnalysisBasis::DA, AnalysisBasis::DA]);
        let t: SettingLabel = "b0.2617993877991494".parse().unwrap();
        assert_eq!(t.to_string(), "b0.2617993877991494");
        assert!("XY".parse::<SettingLabel>().is_err());
    }
}
