//! Phenomenological gate channel: per-shot diagonal amplitude map with
//! fluctuating single-qubit phases, the reduced process matrix ξ, truth tables
//! and visibility fits.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, C64};
use crate::optimize::{least_squares, nelder_mead, NelderMeadOptions};
use crate::quantum::{matrix_unit_basis, Ket, OperatorBasis, Polarization, PolarizationLabel};
use crate::sim::counts::CountsTable;
use crate::tomography::{change_chi_basis, ProcessMatrix};

/// Sign pattern `(−1)^{δ_{i,2}}` of the CPHASE on (HH, HV, VH, VV).
pub const CPHASE_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

/// Efficiencies behind the four CPHASE-basis efficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalDecomposition {
    /// Control storage/retrieval efficiency `η_sr`.
    pub eta_sr: f64,
    /// Control fiber-delay efficiency `η_f`.
    pub eta_f: f64,
    /// `|ℛ|²` for a target seeing EIT.
    pub r_sq: f64,
    /// The measurable product `η_sr,t · |ℛ_b|²`.
    pub eta_srt_rb_sq: f64,
}

impl PhysicalDecomposition {
    /// `ℛ = +√|ℛ|²`.
    pub fn r(&self) -> f64 {
        self.r_sq.sqrt()
    }

    /// Naive split `η_sr,t = η_sr`, giving `ℛ_b = −√(product/η_sr)`.
    pub fn r_b_naive(&self) -> f64 {
        if self.eta_sr > 0.0 { -(self.eta_srt_rb_sq / self.eta_sr).sqrt() } else { 0.0 }
    }

    /// `(η_sr, η_sr,t|ℛ_b|², η_f, η_f|ℛ|²)`.
    pub fn etas(&self) -> [f64; 4] {
        [self.eta_sr, self.eta_srt_rb_sq, self.eta_f, self.eta_f * self.r_sq]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    /// `(η_HH, η_HV, η_VH, η_VV)`.
    pub eta: [f64; 4],
    pub v_c: f64,
    pub v_t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalDecomposition>,
}

impl GateParams {
    pub fn new(eta: [f64; 4], v_c: f64, v_t: f64) -> Result<Self> {
        let p = GateParams { eta, v_c, v_t, physical: None };
        p.validate()?;
        Ok(p)
    }

    pub fn from_physical(phys: PhysicalDecomposition, v_c: f64, v_t: f64) -> Result<Self> {
        let p = GateParams { eta: phys.etas(), v_c, v_t, physical: Some(phys) };
        p.validate()?;
        Ok(p)
    }

    pub fn ideal() -> Self {
        GateParams { eta: [1.0; 4], v_c: 1.0, v_t: 1.0, physical: None }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !self.eta.iter().all(|&e| unit(e)) || !unit(self.v_c) || !unit(self.v_t) {
            return Err(Error::InvalidParameter("efficiencies and visibilities must lie in [0, 1]".into()));
        }
        if let Some(ph) = &self.physical {
            let expect = ph.etas();
            if self.eta.iter().zip(expect).any(|(a, b)| (a - b).abs() > 1e-9) {
                return Err(Error::Inconsistent(
                    "efficiencies do not match the physical decomposition".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn mean_efficiency(&self) -> f64 {
        self.eta.iter().sum::<f64>() / 4.0
    }

    /// Per-photon amplitudes reproducing the four efficiencies.
    pub fn photon_amplitudes(&self) -> Result<PhotonAmplitudes> {
        if let Some(ph) = &self.physical {
            return Ok(PhotonAmplitudes {
                control: [ph.eta_sr.sqrt(), ph.eta_f.sqrt()],
                target_v: [ph.r_b_naive(), ph.r()],
            });
        }
        let [e1, e2, e3, e4] = self.eta;
        let ratio = |num: f64, den: f64| -> Result<f64> {
            if num == 0.0 {
                Ok(0.0)
            } else if den > 0.0 && num <= den {
                Ok((num / den).sqrt())
            } else {
                Err(Error::InvalidParameter(
                    "efficiencies do not factorize into per-photon amplitudes (need η₂ ≤ η₁, η₄ ≤ η₃)".into(),
                ))
            }
        };
        Ok(PhotonAmplitudes {
            control: [e1.sqrt(), e3.sqrt()],
            target_v: [-ratio(e2, e1)?, ratio(e4, e3)?],
        })
    }
}

/// Amplitude factorization of the diagonal map: control `c_H`, `c_V`; a target
/// in V picks up `ℛ_b` (control H) or `ℛ` (control V); a target in H bypasses
/// with amplitude 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonAmplitudes {
    pub control: [f64; 2],
    pub target_v: [f64; 2],
}

/// `diag(√η₁, −e^{iβ_t}√η₂, e^{iβ_c}√η₃, e^{i(β_c+β_t)}√η₄)`.
pub fn shot_map(params: &GateParams, beta_c: f64, beta_t: f64) -> CMatrix {
    CMatrix::from_diagonal(&shot_map_diagonal(params, beta_c, beta_t))
}

pub fn shot_map_diagonal(params: &GateParams, beta_c: f64, beta_t: f64) -> CVector {
    let phases = [0.0, beta_t, beta_c, beta_c + beta_t];
    CVector::from_iterator(
        4,
        (0..4).map(|i| C64::from_polar(CPHASE_SIGNS[i] * params.eta[i].sqrt(), phases[i])),
    )
}

/// Shot-to-shot phase law with `E[e^{iβ}] = V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseNoise {
    /// Zero-mean Gaussian with `σ = √(−2 ln V)`; `V = 0` gives a uniform phase.
    #[default]
    Gaussian,
    /// `±arccos V` with equal probability.
    TwoPoint,
}

impl PhaseNoise {
    pub fn sample<R: Rng + ?Sized>(self, visibility: f64, rng: &mut R) -> f64 {
        if visibility >= 1.0 {
            return 0.0;
        }
        match self {
            PhaseNoise::Gaussian => {
                if visibility <= 0.0 {
                    return rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                }
                let sigma = (-2.0 * visibility.ln()).sqrt();
                Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
            }
            PhaseNoise::TwoPoint => {
                let a = visibility.clamp(-1.0, 1.0).acos();
                if rng.random::<bool>() { a } else { -a }
            }
        }
    }
}

/// Real symmetric 4×4 ξ on the CPHASE basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedProcessMatrix {
    pub entries: [[f64; 4]; 4],
    pub postselected: bool,
}

impl ReducedProcessMatrix {
    pub fn ideal() -> Self {
        let mut e = [[0.0; 4]; 4];
        for (i, row) in e.iter_mut().enumerate() {
            for (k, x) in row.iter_mut().enumerate() {
                *x = CPHASE_SIGNS[i] * CPHASE_SIGNS[k];
            }
        }
        ReducedProcessMatrix { entries: e, postselected: true }
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.entries[i][i]).sum()
    }

    /// `|ξ_ik| ≤ √(ξ_ii ξ_kk)` within 1e-9.
    pub fn satisfies_cp_bound(&self) -> bool {
        (0..4).all(|i| {
            (0..4).all(|k| {
                self.entries[i][k].abs() <= (self.entries[i][i] * self.entries[k][k]).max(0.0).sqrt() + 1e-9
            })
        })
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..4 {
            for k in 0..4 {
                m = m.max((self.entries[i][k] - self.entries[k][i]).abs());
            }
        }
        m
    }
}

/// `[[1, V_c], [V_c, 1]] ⊗ [[1, V_t], [V_t, 1]]`.
pub fn visibility_matrix(v_c: f64, v_t: f64) -> [[f64; 4]; 4] {
    let mut v = [[0.0; 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        for (k, x) in row.iter_mut().enumerate() {
            let fc = if i / 2 == k / 2 { 1.0 } else { v_c };
            let ft = if i % 2 == k % 2 { 1.0 } else { v_t };
            *x = fc * ft;
        }
    }
    v
}

fn xi_for(eta: &[f64; 4], v_c: f64, v_t: f64) -> Result<ReducedProcessMatrix> {
    let mean = eta.iter().sum::<f64>() / 4.0;
    if !(mean > 0.0) {
        return Err(Error::ZeroEfficiency(mean));
    }
    let v = visibility_matrix(v_c, v_t);
    let mut e = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            e[i][k] = CPHASE_SIGNS[i] * CPHASE_SIGNS[k] * v[i][k] * (eta[i] * eta[k]).sqrt() / mean;
        }
    }
    Ok(ReducedProcessMatrix { entries: e, postselected: true })
}

/// `ξ_ik = (−1)^{δ_{i,2}+δ_{k,2}} V_ik √(η_i η_k)/η̄`.
pub fn xi_model(params: &GateParams) -> Result<ReducedProcessMatrix> {
    xi_for(&params.eta, params.v_c, params.v_t)
}

/// Monte Carlo average of the per-shot maps: `ξ_ik = E[d_i d_k*]/η̄` (real part),
/// with standard errors of each entry.
pub fn xi_from_samples<R: Rng + ?Sized>(
    params: &GateParams,
    noise: PhaseNoise,
    samples: usize,
    rng: &mut R,
) -> Result<(ReducedProcessMatrix, [[f64; 4]; 4])> {
    let mean = params.mean_efficiency();
    if !(mean > 0.0) {
        return Err(Error::ZeroEfficiency(mean));
    }
    let mut s1 = [[0.0; 4]; 4];
    let mut s2 = [[0.0; 4]; 4];
    for _ in 0..samples {
        let bc = noise.sample(params.v_c, rng);
        let bt = noise.sample(params.v_t, rng);
        let d = shot_map_diagonal(params, bc, bt);
        for i in 0..4 {
            for k in 0..4 {
                let x = (d[i] * d[k].conj()).re / mean;
                s1[i][k] += x;
                s2[i][k] += x * x;
            }
        }
    }
    let n = samples as f64;
    let mut e = [[0.0; 4]; 4];
    let mut err = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            e[i][k] = s1[i][k] / n;
            err[i][k] = ((s2[i][k] / n - e[i][k].powi(2)).max(0.0) / n).sqrt();
        }
    }
    Ok((ReducedProcessMatrix { entries: e, postselected: true }, err))
}

/// Embeds ξ into the projector basis `|u_i⟩⟨u_j|` (element `4i + j`):
/// `χ_{(ii),(kk)} = ξ_ik`.
pub fn chi_from_xi(xi: &ReducedProcessMatrix) -> ProcessMatrix {
    let basis = Arc::new(matrix_unit_basis(4));
    let mut chi = CMatrix::zeros(16, 16);
    for i in 0..4 {
        for k in 0..4 {
            chi[(5 * i, 5 * k)] = c(xi.entries[i][k], 0.0);
        }
    }
    ProcessMatrix::new(chi, basis, xi.postselected).expect("16×16 χ")
}

/// Extracts ξ from χ (changing to the projector basis if needed) and reports the
/// Frobenius weight of the 240 other entries relative to `|tr χ|`.
pub fn xi_from_chi(chi: &ProcessMatrix) -> Result<(ReducedProcessMatrix, f64)> {
    let units = matrix_unit_basis(4);
    let chi = if chi.basis_tag() == units.tag() {
        chi.clone()
    } else {
        change_chi_basis(chi, Arc::new(units))?
    };
    let m = chi.entries();
    let mut e = [[0.0; 4]; 4];
    let mut kept = vec![false; 256];
    for i in 0..4 {
        for k in 0..4 {
            e[i][k] = m[(5 * i, 5 * k)].re;
            kept[(5 * i) * 16 + 5 * k] = true;
        }
    }
    let other: f64 = (0..256).filter(|&x| !kept[x]).map(|x| m[(x / 16, x % 16)].norm_sqr()).sum();
    let tr = linalg::trace(m).norm();
    let weight = if tr > 0.0 { other.sqrt() / tr } else { f64::INFINITY };
    Ok((ReducedProcessMatrix { entries: e, postselected: chi.is_postselected() }, weight))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiFidelities {
    pub process: f64,
    pub bell: f64,
}

fn bell_ket() -> Ket {
    Ket::from_vec(CPHASE_SIGNS.iter().map(|&s| c(0.5 * s, 0.0)).collect()).expect("normalized")
}

/// Process fidelity `(1/16) tr(ξ^id ξ)` and the Bell-state fidelity obtained by
/// sending `|DD⟩` through the ξ channel. The two coincide.
pub fn fidelities_from_xi(xi: &ReducedProcessMatrix) -> XiFidelities {
    let id = ReducedProcessMatrix::ideal();
    let mut process = 0.0;
    for i in 0..4 {
        for k in 0..4 {
            process += id.entries[i][k] * xi.entries[i][k];
        }
    }
    process /= 16.0;
    let dd: PolarizationLabel = "DD".parse().expect("label");
    let rho = dd.ket().projector().into_matrix();
    let out = chi_from_xi(xi).apply(&rho);
    let bell = bell_ket();
    let v = bell.amplitudes();
    let bell_f = v.dotc(&(&out * v)).re;
    debug_assert!((process - bell_f).abs() < 1e-12);
    XiFidelities { process, bell: bell_f }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisibilityFit {
    pub v_c: f64,
    pub v_t: f64,
    pub v_c_err: f64,
    pub v_t_err: f64,
    pub residual_sum_squares: f64,
}

/// Least squares over all 16 entries of ξ^ps with the efficiencies held fixed.
pub fn fit_visibilities(measured: &ReducedProcessMatrix, eta: &[f64; 4]) -> Result<VisibilityFit> {
    if eta.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter("efficiencies must be positive".into()));
    }
    let residuals = |v: &[f64]| -> Vec<f64> {
        let model = xi_for(eta, v[0].clamp(0.0, 1.0), v[1].clamp(0.0, 1.0)).expect("positive η");
        (0..16).map(|x| measured.entries[x / 4][x % 4] - model.entries[x / 4][x % 4]).collect()
    };
    let rss = |v: &[f64]| residuals(v).iter().map(|r| r * r).sum::<f64>();
    let opts = NelderMeadOptions { max_evals: 20_000, xtol: 1e-13, ftol: 1e-24, initial_step: vec![0.1, 0.1] };
    let mut best = nelder_mead(rss, &[0.8, 0.8], &opts)?;
    for _ in 0..3 {
        let again = nelder_mead(rss, &best.x, &opts)?;
        if again.f <= best.f {
            best = again;
        }
    }
    if !best.converged && best.f > 1e-20 {
        return Err(Error::NonConvergence(best.evals));
    }
    let v = [best.x[0].clamp(0.0, 1.0), best.x[1].clamp(0.0, 1.0)];
    // Gauss-Newton covariance σ² (JᵀJ)⁻¹ with σ² = RSS/(16 − 2).
    let h = 1e-7;
    let r0 = residuals(&v);
    let mut jac = DMatrix::<f64>::zeros(16, 2);
    for p in 0..2 {
        let mut vp = v;
        vp[p] = if v[p] + h <= 1.0 { v[p] + h } else { v[p] - h };
        let rp = residuals(&vp);
        for x in 0..16 {
            jac[(x, p)] = -(rp[x] - r0[x]) / (vp[p] - v[p]);
        }
    }
    let rss0: f64 = r0.iter().map(|r| r * r).sum();
    let sigma2 = rss0 / 14.0;
    let jtj = jac.transpose() * &jac;
    let cov = least_squares(&jtj, &DVector::from_vec(vec![1.0, 0.0]))
        .zip(least_squares(&jtj, &DVector::from_vec(vec![0.0, 1.0])))
        .map(|(a, b)| [a[0] * sigma2, b[1] * sigma2]);
    let [cc, tt] = cov.unwrap_or([f64::NAN, f64::NAN]);
    Ok(VisibilityFit {
        v_c: v[0],
        v_t: v[1],
        v_c_err: cc.max(0.0).sqrt(),
        v_t_err: tt.max(0.0).sqrt(),
        residual_sum_squares: rss0,
    })
}

/// Computational basis of a truth table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthBasis {
    /// Inputs and outputs in (HH, HV, VH, VV).
    Cphase,
    /// Control in {H, V}, target in {D, A}: (HD, HA, VD, VA); control H flips the target.
    Cnot,
}

impl TruthBasis {
    pub fn labels(self) -> [&'static str; 4] {
        match self {
            TruthBasis::Cphase => ["HH", "HV", "VH", "VV"],
            TruthBasis::Cnot => ["HD", "HA", "VD", "VA"],
        }
    }

    pub fn setting(self) -> &'static str {
        match self {
            TruthBasis::Cphase => "HV",
            TruthBasis::Cnot => "HV_DA",
        }
    }

    /// Ideal output column for each input row.
    pub fn expected(self) -> [usize; 4] {
        match self {
            TruthBasis::Cphase => [0, 1, 2, 3],
            TruthBasis::Cnot => [1, 0, 2, 3],
        }
    }

    fn kets(self) -> Vec<Ket> {
        self.labels().iter().map(|l| l.parse::<PolarizationLabel>().expect("label").ket()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthTable {
    pub basis: TruthBasis,
    /// Rows: inputs; columns: outputs; each row postselected to sum 1.
    pub probabilities: [[f64; 4]; 4],
}

impl TruthTable {
    /// Mean of the four correct-output probabilities.
    pub fn fidelity(&self) -> f64 {
        let e = self.basis.expected();
        (0..4).map(|r| self.probabilities[r][e[r]]).sum::<f64>() / 4.0
    }
}

/// Truth table of a channel given as `ρ ↦ ℰ(ρ)`.
pub fn truth_table<F: Fn(&CMatrix) -> CMatrix>(channel: F, basis: TruthBasis) -> Result<TruthTable> {
    let kets = basis.kets();
    let mut p = [[0.0; 4]; 4];
    for (r, input) in kets.iter().enumerate() {
        let out = channel(&input.projector().into_matrix());
        let row: Vec<f64> = kets
            .iter()
            .map(|k| {
                let v = k.amplitudes();
                v.dotc(&(&out * v)).re.max(0.0)
            })
            .collect();
        let total: f64 = row.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroTrace);
        }
        for col in 0..4 {
            p[r][col] = row[col] / total;
        }
    }
    Ok(TruthTable { basis, probabilities: p })
}

/// Truth table of the phenomenological model.
pub fn truth_table_model(params: &GateParams, basis: TruthBasis) -> Result<TruthTable> {
    let chi = chi_from_xi(&xi_model(params)?);
    truth_table(|rho| chi.apply(rho), basis)
}

/// Truth table from postselected counts; outcome `+` is the first state of each
/// analysis pair.
pub fn truth_table_from_counts(counts: &CountsTable, basis: TruthBasis) -> Result<TruthTable> {
    let mut p = [[0.0; 4]; 4];
    for (r, input) in basis.labels().iter().enumerate() {
        let cell = counts.cell(input, basis.setting()).ok_or_else(|| Error::MissingSetting {
            input: input.to_string(),
            setting: basis.setting().to_string(),
        })?;
        let row = ["++", "+-", "-+", "--"].map(|o| cell.get(o) as f64);
        let total: f64 = row.iter().sum();
        if total == 0.0 {
            return Err(Error::EmptyCounts);
        }
        for col in 0..4 {
            p[r][col] = row[col] / total;
        }
    }
    Ok(TruthTable { basis, probabilities: p })
}

/// The operator basis of CPHASE-basis projectors used by [`chi_from_xi`].
pub fn projector_basis() -> OperatorBasis {
    matrix_unit_basis(4)
}

/// `|DD⟩` input label.
pub fn bell_input() -> PolarizationLabel {
    PolarizationLabel(vec![Polarization::D, Polarization::D])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::cphase_unitary;
    use crate::rng;

    pub(crate) fn reference() -> GateParams {
        GateParams::new([0.351, 0.157, 0.611, 0.549], 0.86, 0.78).unwrap()
    }

    #[test]
    fn ideal_shot_map_is_cphase() {
        let m = shot_map(&GateParams::ideal(), 0.0, 0.0);
        assert!(linalg::max_abs_diff(&m, cphase_unitary().matrix()) < 1e-15);
    }

    #[test]
    fn beta_t_pi_flips_target_v_coherences() {
        let p = reference();
        let a = shot_map_diagonal(&p, 0.0, 0.0);
        let b = shot_map_diagonal(&p, 0.0, std::f64::consts::PI);
        assert!((a[1] + b[1]).norm() < 1e-12 && (a[3] + b[3]).norm() < 1e-12);
        assert!((a[0] - b[0]).norm() < 1e-12 && (a[2] - b[2]).norm() < 1e-12);
    }

    #[test]
    fn model_fidelities() {
        let f = fidelities_from_xi(&xi_model(&reference()).unwrap());
        assert!((f.process - 0.78592).abs() < 1e-4);
        assert!((f.process - f.bell).abs() < 1e-12);
        let v1 = GateParams { v_c: 1.0, v_t: 1.0, ..reference() };
        assert!((fidelities_from_xi(&xi_model(&v1).unwrap()).process - 0.94523).abs() < 1e-4);
        let eq = GateParams { eta: [0.5; 4], ..reference() };
        assert!((fidelities_from_xi(&xi_model(&eq).unwrap()).process - 0.8277).abs() < 1e-4);
        let ideal = xi_model(&GateParams { eta: [0.3; 4], ..GateParams::ideal() }).unwrap();
        assert_eq!(ideal, ReducedProcessMatrix::ideal());
        assert!((fidelities_from_xi(&ideal).process - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_fidelity_from_shot_map() {
        let p = GateParams { v_c: 1.0, v_t: 1.0, ..reference() };
        let out = shot_map(&p, 0.0, 0.0) * bell_input().ket().amplitudes();
        let n = out.norm_squared();
        let f = bell_ket().amplitudes().dotc(&out).norm_sqr() / n;
        assert!((f - fidelities_from_xi(&xi_model(&p).unwrap()).bell).abs() < 1e-12);
    }

    #[test]
    fn dephased_fidelity() {
        let mut xi = xi_model(&reference()).unwrap();
        for i in 0..4 {
            for k in 0..4 {
                if i != k {
                    xi.entries[i][k] = 0.0;
                }
            }
        }
        assert!((fidelities_from_xi(&xi).process - 0.25).abs() < 1e-12);
    }

    #[test]
    fn xi_chi_round_trip_and_cp() {
        let xi = xi_model(&reference()).unwrap();
        assert!(xi.satisfies_cp_bound() && xi.max_asymmetry() < 1e-15);
        let (back, w) = xi_from_chi(&chi_from_xi(&xi)).unwrap();
        assert!(w < 1e-15);
        for i in 0..4 {
            for k in 0..4 {
                assert!((back.entries[i][k] - xi.entries[i][k]).abs() < 1e-12);
            }
        }
        // Through the Pauli basis and back.
        let pauli = Arc::new(crate::quantum::pauli_product_basis(2, true));
        let chi_p = change_chi_basis(&chi_from_xi(&xi), pauli).unwrap();
        let (back, w) = xi_from_chi(&chi_p).unwrap();
        assert!(w < 1e-10);
        assert!((back.entries[1][3] - xi.entries[1][3]).abs() < 1e-10);
        let ideal = crate::tomography::chi_of_kraus(
            &[cphase_unitary().matrix().clone()],
            Arc::new(matrix_unit_basis(4)),
        )
        .unwrap();
        assert_eq!(xi_from_chi(&ideal).unwrap().0.entries, ReducedProcessMatrix::ideal().entries);
    }

    #[test]
    fn sampled_maps_reproduce_model() {
        for noise in [PhaseNoise::Gaussian, PhaseNoise::TwoPoint] {
            let mut r = rng::stream(31, &[noise as u64]);
            let (xi, err) = xi_from_samples(&reference(), noise, 100_000, &mut r).unwrap();
            let model = xi_model(&reference()).unwrap();
            for i in 0..4 {
                for k in 0..4 {
                    let d = (xi.entries[i][k] - model.entries[i][k]).abs();
                    assert!(d <= 3.0 * err[i][k] + 1e-10, "{noise:?} ({i},{k}) off by {d}");
                }
            }
        }
    }

    #[test]
    fn visibility_round_trip() {
        let xi = xi_model(&reference()).unwrap();
        let fit = fit_visibilities(&xi, &reference().eta).unwrap();
        assert!((fit.v_c - 0.86).abs() < 1e-9 && (fit.v_t - 0.78).abs() < 1e-9, "{fit:?}");
    }

    #[test]
    fn truth_tables() {
        let ideal = truth_table(|r| {
            let u = cphase_unitary();
            u.matrix() * r * u.matrix().adjoint()
        }, TruthBasis::Cphase).unwrap();
        assert!((ideal.fidelity() - 1.0).abs() < 1e-12);
        let model = truth_table_model(&reference(), TruthBasis::Cphase).unwrap();
        assert!((model.fidelity() - 1.0).abs() < 1e-12);
        let cnot = truth_table_model(&reference(), TruthBasis::Cnot).unwrap();
        let p = reference();
        let row = |a: f64, b: f64| (a + b + 2.0 * p.v_t * (a * b).sqrt()) / (2.0 * (a + b));
        let expect = (row(p.eta[0], p.eta[1]) + row(p.eta[2], p.eta[3])) / 2.0;
        assert!((cnot.fidelity() - expect).abs() < 1e-12);
        assert!((cnot.fidelity() - 0.875).abs() < 0.002);
        let ideal_cnot = truth_table_model(&GateParams::ideal(), TruthBasis::Cnot).unwrap();
        assert!((ideal_cnot.fidelity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn photon_amplitudes_reproduce_etas() {
        let a = reference().photon_amplitudes().unwrap();
        let [ch, cv] = a.control;
        let etas = [ch * ch, (ch * a.target_v[0]).powi(2), cv * cv, (cv * a.target_v[1]).powi(2)];
        for (x, y) in etas.iter().zip(reference().eta) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(a.target_v[0] < 0.0 && a.target_v[1] > 0.0);
        let phys = PhysicalDecomposition { eta_sr: 0.39, eta_f: 0.65, r_sq: 0.90, eta_srt_rb_sq: 0.17 };
        let g = GateParams::from_physical(phys, 0.86, 0.78).unwrap();
        assert!((g.photon_amplitudes().unwrap().target_v[0] + (0.17f64 / 0.39).sqrt()).abs() < 1e-12);
        assert!(GateParams::new([0.1, 0.5, 0.5, 0.5], 1.0, 1.0).unwrap().photon_amplitudes().is_err());
    }
}
