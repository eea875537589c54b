//! Multiphoton GHZ analysis: generalized Stokes parities, coherence and
//! population extraction, the closed-form loss/dephasing model with its Monte
//! Carlo check, and Poissonian coincidence-rate estimates.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{GateParams, PhaseNoise, PhotonAmplitudes};
use crate::linalg::C64;
use crate::rng;
use crate::sim::counts::{CellCounts, CountsTable};
use crate::sim::plan::{AnalysisBasis, SettingLabel};

/// Generalized Stokes parameter measured at one analysis angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityPoint {
    pub theta_rad: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S_err")]
    pub s_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityDataset {
    pub n: usize,
    pub points: Vec<ParityPoint>,
}

#[derive(Serialize, Deserialize)]
struct ParityRow {
    theta_rad: f64,
    #[serde(rename = "S")]
    s: f64,
    #[serde(rename = "S_err")]
    s_err: f64,
    #[serde(rename = "N")]
    n: usize,
}

impl ParityDataset {
    pub fn new(n: usize, points: Vec<ParityPoint>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("GHZ analysis needs N ≥ 2, got {n}")));
        }
        if let Some(p) = points.iter().find(|p| !(p.s.abs() <= 1.0 + 1e-12) || !(p.s_err >= 0.0)) {
            return Err(Error::InvalidParameter(format!("invalid parity point at ϑ = {}", p.theta_rad)));
        }
        Ok(ParityDataset { n, points })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for p in &self.points {
            wr.serialize(ParityRow { theta_rad: p.theta_rad, s: p.s, s_err: p.s_err, n: self.n })?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut n = None;
        let mut points = Vec::new();
        for row in rd.deserialize::<ParityRow>() {
            let row = row?;
            if *n.get_or_insert(row.n) != row.n {
                return Err(Error::Inconsistent("parity file mixes photon numbers".into()));
            }
            points.push(ParityPoint { theta_rad: row.theta_rad, s: row.s, s_err: row.s_err });
        }
        let n = n.ok_or(Error::EmptyCounts)?;
        ParityDataset::new(n, points)
    }
}

/// `±1` parity of an outcome string: `(−1)^{#−}`.
pub fn outcome_parity(outcome: &str) -> f64 {
    if outcome.chars().filter(|&c| c == '-').count() % 2 == 0 { 1.0 } else { -1.0 }
}

/// Parity expectation `S = Σ parity · count / total` and its binomial error.
pub fn stokes_from_counts(cell: &CellCounts, n: usize) -> Result<(f64, f64)> {
    let total = cell.total();
    if total == 0 {
        return Err(Error::EmptyCounts);
    }
    let mut sum = 0.0;
    for (outcome, &count) in &cell.outcomes {
        if outcome.chars().count() != n {
            return Err(Error::Inconsistent(format!("outcome `{outcome}` does not have {n} photons")));
        }
        sum += outcome_parity(outcome) * count as f64;
    }
    let t = total as f64;
    let s = sum / t;
    Ok((s, ((1.0 - s * s).max(0.0) / t).sqrt()))
}

fn find_theta(points: &[ParityPoint], theta: f64) -> Option<&ParityPoint> {
    points.iter().find(|p| {
        let d = (p.theta_rad - theta).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d) < 1e-9
    })
}

/// `𝒞_N = (1/N) Σ_k (−1)^k S_{kπ/N}` with propagated error. Every angle `kπ/N`
/// must be present; other angles are ignored.
pub fn coherence_from_parities(data: &ParityDataset) -> Result<(f64, f64)> {
    let n = data.n;
    let mut sum = 0.0;
    let mut var = 0.0;
    for k in 0..n {
        let theta = k as f64 * PI / n as f64;
        let p = find_theta(&data.points, theta).ok_or_else(|| {
            Error::WrongSettings(format!("alternating sum needs ϑ = {k}π/{n}"))
        })?;
        sum += if k % 2 == 0 { p.s } else { -p.s };
        var += p.s_err * p.s_err;
    }
    Ok((sum / n as f64, var.sqrt() / n as f64))
}

/// Weighted least squares for `S_ϑ = p cos(Nϑ)`, projected onto `[0, 1]`.
/// Points with zero error are given unit weight.
pub fn fit_parity(data: &ParityDataset) -> Result<(f64, f64)> {
    if data.points.is_empty() {
        return Err(Error::EmptyCounts);
    }
    let n = data.n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for p in &data.points {
        let w = if p.s_err > 0.0 { 1.0 / (p.s_err * p.s_err) } else { 1.0 };
        let cs = (n * p.theta_rad).cos();
        num += w * p.s * cs;
        den += w * cs * cs;
    }
    if den <= 0.0 {
        return Err(Error::DegenerateData("all angles sit at nodes of cos(Nϑ)".into()));
    }
    Ok(((num / den).clamp(0.0, 1.0), den.sqrt().recip()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhzSummary {
    pub p_h: f64,
    pub p_v: f64,
    pub population: f64,
    pub coherence: f64,
    pub fidelity: f64,
    pub p_h_err: f64,
    pub p_v_err: f64,
    pub population_err: f64,
    pub coherence_err: f64,
    pub fidelity_err: f64,
    /// `F > 1/2`: genuine N-partite entanglement.
    pub entangled: bool,
}

/// `𝒫 = p_H + p_V`, `F = (𝒫 + 𝒞)/2`.
pub fn ghz_fidelity(p_h: f64, p_v: f64, coherence: f64) -> GhzSummary {
    ghz_fidelity_with_errors(p_h, p_v, coherence, [0.0; 3])
}

/// As [`ghz_fidelity`], propagating independent errors on `(p_H, p_V, 𝒞)`.
pub fn ghz_fidelity_with_errors(p_h: f64, p_v: f64, coherence: f64, errs: [f64; 3]) -> GhzSummary {
    let population = p_h + p_v;
    let fidelity = (population + coherence) / 2.0;
    let population_err = errs[0].hypot(errs[1]);
    GhzSummary {
        p_h,
        p_v,
        population,
        coherence,
        fidelity,
        p_h_err: errs[0],
        p_v_err: errs[1],
        population_err,
        coherence_err: errs[2],
        fidelity_err: population_err.hypot(errs[2]) / 2.0,
        entangled: fidelity > 0.5,
    }
}

/// How `𝒞_N` is extracted from parity data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceMethod {
    AlternatingSum,
    CosineFit,
    /// Cosine fit for N = 6, alternating sum otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GhzAnalysis {
    pub dataset: ParityDataset,
    pub method: CoherenceMethod,
    pub summary: GhzSummary,
}

/// Parity points, populations and fidelity from the counts of one input.
pub fn analyze_counts(counts: &CountsTable, input: &str, n: usize, method: CoherenceMethod) -> Result<GhzAnalysis> {
    let mut points = Vec::new();
    let mut pops = None;
    for (inp, setting, cell) in counts.cells() {
        if inp != input {
            continue;
        }
        let label: SettingLabel = setting.parse()?;
        let bases = label.expand(n);
        if bases.iter().all(|&b| b == AnalysisBasis::HV) {
            let t = cell.total();
            if t == 0 {
                return Err(Error::EmptyCounts);
            }
            let t = t as f64;
            let ph = cell.get(&"+".repeat(n)) as f64 / t;
            let pv = cell.get(&"-".repeat(n)) as f64 / t;
            let err = |p: f64| (p * (1.0 - p) / t).sqrt();
            pops = Some((ph, pv, err(ph), err(pv)));
        } else if let AnalysisBasis::Theta(theta) = bases[0] {
            if bases.iter().any(|&b| b != AnalysisBasis::Theta(theta)) {
                continue;
            }
            let (s, s_err) = stokes_from_counts(cell, n)?;
            points.push(ParityPoint { theta_rad: theta, s, s_err });
        }
    }
    let (ph, pv, ph_err, pv_err) = pops.ok_or_else(|| Error::MissingSetting {
        input: input.to_string(),
        setting: "HV".into(),
    })?;
    if points.is_empty() {
        return Err(Error::WrongSettings(format!("no b_ϑ parity settings for input `{input}`")));
    }
    points.sort_by(|a, b| a.theta_rad.total_cmp(&b.theta_rad));
    let dataset = ParityDataset::new(n, points)?;
    let resolved = match method {
        CoherenceMethod::Auto if n == 6 => CoherenceMethod::CosineFit,
        CoherenceMethod::Auto => CoherenceMethod::AlternatingSum,
        m => m,
    };
    let (coh, coh_err) = match resolved {
        CoherenceMethod::CosineFit => fit_parity(&dataset)?,
        _ => coherence_from_parities(&dataset)?,
    };
    let summary = ghz_fidelity_with_errors(ph, pv, coh, [ph_err, pv_err, coh_err]);
    Ok(GhzAnalysis { dataset, method: resolved, summary })
}

/// GHZ predictions for `N` photons (one control, `N − 1` targets).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GhzPrediction {
    pub n: usize,
    pub p_h: f64,
    pub p_v: f64,
    pub eta_n: f64,
    pub coherence: f64,
}

impl GhzPrediction {
    pub fn summary(&self) -> GhzSummary {
        ghz_fidelity(self.p_h, self.p_v, self.coherence)
    }
}

fn ghz_amplitudes(params: &GateParams) -> Result<PhotonAmplitudes> {
    params.photon_amplitudes()
}

/// Closed forms for `p_H`, `p_V`, `η_N` and `𝒞_N` with the control visibility
/// `v_c_eff` and the target visibility from `params`.
pub fn ghz_closed_forms(params: &GateParams, v_c_eff: f64, n: usize) -> Result<GhzPrediction> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("GHZ model needs N ≥ 2, got {n}")));
    }
    let a = ghz_amplitudes(params)?;
    let (eta_sr, eta_f) = (a.control[0].powi(2), a.control[1].powi(2));
    let (r_b, r) = (a.target_v[0], a.target_v[1]);
    let vt = params.v_t;
    let m = (n - 1) as i32;
    let eta_n = eta_sr / 2.0 * ((1.0 + r_b * r_b) / 2.0).powi(m) + eta_f / 2.0 * ((1.0 + r * r) / 2.0).powi(m);
    if !(eta_n > 0.0) {
        return Err(Error::ZeroEfficiency(eta_n));
    }
    let p_h = eta_sr / 2.0 * ((1.0 + r_b * r_b + 2.0 * vt * (-r_b)) / 4.0).powi(m) / eta_n;
    let p_v = eta_f / 2.0 * ((1.0 + r * r + 2.0 * vt * r) / 4.0).powi(m) / eta_n;
    let term = C64::new((1.0 - r_b * r + vt * (r - r_b)) / 4.0, 0.0).powi(m);
    let coherence = 2.0 * (v_c_eff / eta_n * (eta_sr * eta_f).sqrt() / 2.0 * term).re;
    Ok(GhzPrediction { n, p_h, p_v, eta_n, coherence })
}

/// Monte Carlo estimate with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GhzMonteCarlo {
    pub estimate: GhzPrediction,
    pub p_h_err: f64,
    pub p_v_err: f64,
    pub eta_n_err: f64,
    pub coherence_err: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhzMonteCarloOptions {
    pub noise: PhaseNoise,
    /// One `β_t` shared by all targets in a shot instead of one per target.
    pub shared_target_phase: bool,
}

impl Default for GhzMonteCarloOptions {
    fn default() -> Self {
        GhzMonteCarloOptions { noise: PhaseNoise::Gaussian, shared_target_phase: false }
    }
}

/// Unnormalized kept component of the post-gate state after the target rotation
/// D→V, A→H, on `N` photons (control is the most significant bit, bit 1 = V).
pub fn ghz_kept_state(a: &PhotonAmplitudes, n: usize, beta_c: f64, beta_t: &[f64]) -> Vec<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let m = n - 1;
    let mut psi = vec![C64::new(0.0, 0.0); 1 << n];
    for j in 0..2 {
        let ctrl = C64::from_polar(a.control[j] * h, if j == 1 { beta_c } else { 0.0 });
        // Rotated single-target amplitudes (H, V) for this control branch.
        let targets: Vec<[C64; 2]> = (0..m)
            .map(|k| {
                let th = C64::new(h, 0.0);
                let tv = C64::from_polar(a.target_v[j] * h, beta_t[k.min(beta_t.len() - 1)]);
                [(th - tv) * h, (th + tv) * h]
            })
            .collect();
        for rest in 0..(1usize << m) {
            let mut amp = ctrl;
            for (k, t) in targets.iter().enumerate() {
                amp *= t[(rest >> (m - 1 - k)) & 1];
            }
            psi[(j << m) | rest] += amp;
        }
    }
    psi
}

/// Monte Carlo over the phase noise: for each sample draws `β_c` and the target
/// phases, builds the full kept state and accumulates the exact postselected
/// moments. Parallel over fixed 4096-sample chunks, deterministic in `seed`.
pub fn monte_carlo_ghz(
    params: &GateParams,
    v_c_eff: f64,
    n: usize,
    samples: usize,
    seed: u64,
    opts: GhzMonteCarloOptions,
) -> Result<GhzMonteCarlo> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("GHZ model needs N ≥ 2, got {n}")));
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let a = ghz_amplitudes(params)?;
    const CHUNK: usize = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let all_h = 0usize;
    let all_v = (1usize << n) - 1;
    // Moments of (η, |ψ_HH..|², |ψ_VV..|², 2 Re ψ_H ψ_V*).
    let sums = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut r = rng::stream(seed, &[ci as u64]);
            let count = CHUNK.min(samples - ci * CHUNK);
            let mut s = [0.0f64; 4];
            let mut q = [[0.0f64; 4]; 4];
            let mut beta_t = vec![0.0; n - 1];
            for _ in 0..count {
                let bc = opts.noise.sample(v_c_eff, &mut r);
                if opts.shared_target_phase {
                    let b = opts.noise.sample(params.v_t, &mut r);
                    beta_t.iter_mut().for_each(|x| *x = b);
                } else {
                    beta_t.iter_mut().for_each(|x| *x = opts.noise.sample(params.v_t, &mut r));
                }
                let psi = ghz_kept_state(&a, n, bc, &beta_t);
                let x = [
                    psi.iter().map(|z| z.norm_sqr()).sum::<f64>(),
                    psi[all_h].norm_sqr(),
                    psi[all_v].norm_sqr(),
                    2.0 * (psi[all_h] * psi[all_v].conj()).re,
                ];
                for i in 0..4 {
                    s[i] += x[i];
                    for j in 0..4 {
                        q[i][j] += x[i] * x[j];
                    }
                }
            }
            (s, q)
        })
        .reduce(
            || ([0.0; 4], [[0.0; 4]; 4]),
            |(mut s, mut q), (s2, q2)| {
                for i in 0..4 {
                    s[i] += s2[i];
                    for j in 0..4 {
                        q[i][j] += q2[i][j];
                    }
                }
                (s, q)
            },
        );
    let nf = samples as f64;
    let mean: Vec<f64> = sums.0.iter().map(|s| s / nf).collect();
    let cov = |i: usize, j: usize| (sums.1[i][j] / nf - mean[i] * mean[j]) * nf / (nf - 1.0) / nf;
    let eta = mean[0];
    if !(eta > 0.0) {
        return Err(Error::ZeroEfficiency(eta));
    }
    // Delta method for the ratio y/η.
    let ratio = |i: usize| {
        let v = mean[i] / eta;
        let var = (cov(i, i) - 2.0 * v * cov(i, 0) + v * v * cov(0, 0)) / (eta * eta);
        (v, var.max(0.0).sqrt())
    };
    let (p_h, p_h_err) = ratio(1);
    let (p_v, p_v_err) = ratio(2);
    let (coh, coh_err) = ratio(3);
    Ok(GhzMonteCarlo {
        estimate: GhzPrediction { n, p_h, p_v, eta_n: eta, coherence: coh },
        p_h_err,
        p_v_err,
        eta_n_err: cov(0, 0).max(0.0).sqrt(),
        coherence_err: coh_err,
        samples,
    })
}

/// Inputs of the Poissonian coincidence-rate model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    /// Mean number of detected control photons per invocation.
    pub nu_c: f64,
    /// Mean number of detected target photons per invocation.
    pub nu_t: f64,
    /// Average gate invocations per second.
    pub repetition_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<RateBreakdown>,
}

/// `ν = η_d · η · n̄` for control and target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBreakdown {
    pub n_c: f64,
    pub n_t: f64,
    pub eta_d: f64,
    pub eta_c: f64,
    pub eta_t: f64,
}

impl RateBreakdown {
    pub fn nu(&self) -> (f64, f64) {
        (self.eta_d * self.eta_c * self.n_c, self.eta_d * self.eta_t * self.n_t)
    }
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.nu_c) || !unit(self.nu_t) || !(self.repetition_rate > 0.0) {
            return Err(Error::InvalidParameter("ν must lie in [0, 1] and the rate must be positive".into()));
        }
        if let Some(b) = &self.breakdown {
            if ![b.n_c, b.n_t, b.eta_d, b.eta_c, b.eta_t].into_iter().all(unit) {
                return Err(Error::InvalidParameter("rate breakdown entries must lie in [0, 1]".into()));
            }
            let (nc, nt) = b.nu();
            if (nc - self.nu_c).abs() > 1e-9 || (nt - self.nu_t).abs() > 1e-9 {
                return Err(Error::Inconsistent(format!(
                    "ν = η_d·η·n̄ gives ({nc}, {nt}), not ({}, {})",
                    self.nu_c, self.nu_t
                )));
            }
        }
        Ok(())
    }
}

/// `R_N = ν_c e^{−ν_c} ν_t^{N−1} e^{−ν_t}/(N−1)! · rate` for each `N` in `ns` (N ≥ 1).
pub fn coincidence_rates(rp: &RateParams, ns: impl IntoIterator<Item = usize>) -> Result<Vec<(usize, f64)>> {
    rp.validate()?;
    ns.into_iter()
        .map(|n| {
            if n == 0 {
                return Err(Error::InvalidParameter("N counts the control photon, so N ≥ 1".into()));
            }
            let k = (n - 1) as i32;
            let fact: f64 = (1..=n - 1).map(|x| x as f64).product();
            let p = rp.nu_c * (-rp.nu_c).exp() * rp.nu_t.powi(k) * (-rp.nu_t).exp() / fact;
            Ok((n, p * rp.repetition_rate))
        })
        .collect()
}

/// Two-photon coincidence rates: per incoming photon pair and per experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPhotonRate {
    pub per_pair: f64,
    pub per_experiment: f64,
}

/// `rate · η_d² · η̄`, and the same times `n̄_c n̄_t`.
pub fn two_photon_rate(n_c: f64, n_t: f64, eta_bar: f64, eta_d: f64, repetition_rate: f64) -> Result<TwoPhotonRate> {
    let unit = |x: f64| (0.0..=1.0).contains(&x);
    if !unit(eta_bar) || !unit(eta_d) || !(n_c >= 0.0) || !(n_t >= 0.0) || !(repetition_rate > 0.0) {
        return Err(Error::InvalidParameter("invalid two-photon rate inputs".into()));
    }
    let per_pair = repetition_rate * eta_d * eta_d * eta_bar;
    Ok(TwoPhotonRate { per_pair, per_experiment: per_pair * n_c * n_t })
}

/// Draws one sample of each phase, used by callers that want explicit control.
pub fn sample_phases<R: Rng + ?Sized>(params: &GateParams, v_c_eff: f64, n_targets: usize, noise: PhaseNoise, rng: &mut R) -> (f64, Vec<f64>) {
    let bc = noise.sample(v_c_eff, rng);
    (bc, (0..n_targets).map(|_| noise.sample(params.v_t, rng)).collect())
}
