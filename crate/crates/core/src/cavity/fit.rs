use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{hessian, nelder_mead, spd_inverse, NelderMeadOptions};
use crate::units::{angular_to_mhz, mhz_to_angular, rate_from_time_us, time_us_from_rate};

use super::reflection::{reflection, EitParams, Measured, ReflectionModel, SpectrumPoint};

/// Free parameters, expressed in reporting units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParam {
    /// Collective cooperativity `C`.
    Cooperativity,
    /// `Ω/2π` in MHz.
    RabiMhz,
    /// `1/γ_rg` in µs.
    CoherenceTimeUs,
}

impl FitParam {
    pub fn name(self) -> &'static str {
        match self {
            FitParam::Cooperativity => "C",
            FitParam::RabiMhz => "omega_over_2pi_MHz",
            FitParam::CoherenceTimeUs => "coherence_time_us",
        }
    }

    fn get(self, p: &EitParams) -> f64 {
        match self {
            FitParam::Cooperativity => p.cooperativity,
            FitParam::RabiMhz => angular_to_mhz(p.omega),
            FitParam::CoherenceTimeUs => time_us_from_rate(p.gamma_rg),
        }
    }

    fn set(self, p: &mut EitParams, v: f64) {
        match self {
            FitParam::Cooperativity => p.cooperativity = v,
            FitParam::RabiMhz => p.omega = mhz_to_angular(v),
            FitParam::CoherenceTimeUs => p.gamma_rg = rate_from_time_us(v),
        }
    }
}

/// Two-stage procedure: the absorption spectrum (no coupling light) fixes `C`,
/// the EIT spectrum then fixes `Ω` and `γ_rg` with `C` held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStage {
    Absorption,
    Eit,
}

impl FitStage {
    pub fn free(self) -> Vec<FitParam> {
        match self {
            FitStage::Absorption => vec![FitParam::Cooperativity],
            FitStage::Eit => vec![FitParam::RabiMhz, FitParam::CoherenceTimeUs],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub params: EitParams,
    pub names: Vec<&'static str>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chisq: f64,
    pub reduced_chisq: f64,
    pub n_points: usize,
    pub evaluations: usize,
}

fn wrap(phi: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let w = (phi + pi).rem_euclid(2.0 * pi) - pi;
    if w == -pi { pi } else { w }
}

fn chisq(points: &[(f64, Measured)], model: &ReflectionModel, p: &EitParams) -> f64 {
    let mut sum = 0.0;
    for (x, m) in points {
        let q = EitParams { delta_s: *x, delta_c: x + model.cavity_detuning_offset, ..*p };
        match reflection(&q, model) {
            Ok(r) => {
                let di = (r.amplitude.norm_sqr() - m.intensity) / m.intensity_err;
                let dp = wrap(r.amplitude.arg() - m.phase) / m.phase_err;
                sum += di * di + dp * dp;
            }
            Err(_) => return f64::INFINITY,
        }
    }
    sum
}

/// Weighted least squares over the intensity and wrapped-phase residuals.
///
/// Parameters are optimized relative to the initial guess in `base`; the
/// standard errors come from the covariance `2 H⁻¹`, with `H` the
/// finite-difference Hessian of χ² at the optimum.
pub fn fit_spectrum(
    points: &[SpectrumPoint],
    free: &[FitParam],
    base: &EitParams,
    model: &ReflectionModel,
) -> Result<FitResult> {
    let k = free.len();
    if k == 0 {
        return Err(Error::InvalidParameter("no free fit parameters".into()));
    }
    if points.len() < 3 * k {
        return Err(Error::InvalidParameter(format!(
            "{} points are too few for {k} free parameters (need {})",
            points.len(),
            3 * k
        )));
    }
    let data: Vec<(f64, Measured)> = points
        .iter()
        .map(|p| {
            p.measured
                .filter(|m| m.intensity_err > 0.0 && m.phase_err > 0.0)
                .map(|m| (p.detuning, m))
                .ok_or_else(|| Error::InvalidParameter("fit points need positive standard errors".into()))
        })
        .collect::<Result<_>>()?;
    let first = data[0];
    if data.iter().all(|(x, m)| *x == first.0 && *m == first.1) {
        return Err(Error::DegenerateData("all spectrum points are identical".into()));
    }

    let scale: Vec<f64> = free
        .iter()
        .map(|f| {
            let v = f.get(base);
            if v != 0.0 && v.is_finite() { v.abs() } else { 1.0 }
        })
        .collect();
    let unpack = |u: &[f64]| {
        let mut p = *base;
        for ((f, s), x) in free.iter().zip(&scale).zip(u) {
            f.set(&mut p, x * s);
        }
        p
    };
    let cost = |u: &[f64]| {
        if u.iter().any(|x| *x < 0.0) {
            return f64::INFINITY;
        }
        chisq(&data, model, &unpack(u))
    };

    let opts = NelderMeadOptions {
        max_evals: 20_000,
        xtol: 1e-6,
        ftol: 1e-10,
        initial_step: vec![0.05; k],
    };
    let u0: Vec<f64> = free.iter().zip(&scale).map(|(f, s)| f.get(base) / s).collect();
    let mut best = nelder_mead(cost, &u0, &opts)?;
    let mut evaluations = best.evals;
    for _ in 0..8 {
        let again = nelder_mead(cost, &best.x, &opts)?;
        evaluations += again.evals;
        let improved = best.f - again.f;
        let converged = again.converged;
        if again.f <= best.f {
            best = again;
        }
        if converged && improved.abs() <= 1e-10 * best.f.max(1.0) {
            break;
        }
    }
    if !best.converged || !best.f.is_finite() {
        return Err(Error::NonConvergence(evaluations));
    }

    let steps: Vec<f64> = best.x.iter().map(|x| 1e-4 * x.abs().max(1e-3)).collect();
    let h = hessian(cost, &best.x, &steps);
    let cov_u = spd_inverse(&h.scale(0.5))
        .ok_or_else(|| Error::DegenerateData("χ² curvature is not positive definite".into()))?;
    let covariance: Vec<Vec<f64>> =
        (0..k).map(|i| (0..k).map(|j| cov_u[(i, j)] * scale[i] * scale[j]).collect()).collect();
    let params = unpack(&best.x);
    let dof = (2 * data.len()).saturating_sub(k).max(1);
    Ok(FitResult {
        params,
        names: free.iter().map(|f| f.name()).collect(),
        values: free.iter().map(|f| f.get(&params)).collect(),
        errors: (0..k).map(|i| covariance[i][i].sqrt()).collect(),
        covariance,
        chisq: best.f,
        reduced_chisq: best.f / dof as f64,
        n_points: data.len(),
        evaluations,
    })
}

/// Gaussian measurement noise: absolute on `|ℛ|²` and on the phase (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub intensity_sigma: f64,
    pub phase_sigma: f64,
}

/// Model spectrum with simulated measurements attached.
pub fn synthetic_spectrum<R: Rng + ?Sized>(
    p: &EitParams,
    model: &ReflectionModel,
    grid: &[f64],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<SpectrumPoint>> {
    let clean = super::reflection::spectrum(p, model, grid)?;
    let ni = Normal::new(0.0, noise.intensity_sigma)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let np = Normal::new(0.0, noise.phase_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(clean
        .into_iter()
        .map(|pt| {
            let intensity = pt.reflection.norm_sqr() + ni.sample(rng);
            let phase = wrap(pt.reflection.arg() + np.sample(rng));
            SpectrumPoint {
                measured: Some(Measured {
                    intensity,
                    intensity_err: noise.intensity_sigma,
                    phase,
                    phase_err: noise.phase_sigma,
                }),
                ..pt
            }
        })
        .collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct SpectrumRow {
    #[serde(rename = "detuning_MHz")]
    detuning_mhz: f64,
    intensity: f64,
    intensity_err: f64,
    phase_rad: f64,
    phase_err: f64,
}

/// CSV columns `detuning_MHz, intensity, intensity_err, phase_rad, phase_err`.
/// Points without measurements are written with zero errors and model values.
pub fn write_spectrum_csv<W: Write>(points: &[SpectrumPoint], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for p in points {
        let m = p.measured.unwrap_or(Measured {
            intensity: p.reflection.norm_sqr(),
            intensity_err: 0.0,
            phase: p.reflection.arg(),
            phase_err: 0.0,
        });
        wr.serialize(SpectrumRow {
            detuning_mhz: angular_to_mhz(p.detuning),
            intensity: m.intensity,
            intensity_err: m.intensity_err,
            phase_rad: m.phase,
            phase_err: m.phase_err,
        })?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_spectrum_csv<R: Read>(r: R) -> Result<Vec<SpectrumPoint>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize::<SpectrumRow>()
        .map(|row| {
            let row = row?;
            let values = [row.detuning_mhz, row.intensity, row.intensity_err, row.phase_rad, row.phase_err];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse("non-finite value in spectrum CSV".into()));
            }
            Ok(SpectrumPoint {
                detuning: mhz_to_angular(row.detuning_mhz),
                reflection: crate::linalg::C64::from_polar(row.intensity.max(0.0).sqrt(), row.phase_rad),
                measured: Some(Measured {
                    intensity: row.intensity,
                    intensity_err: row.intensity_err,
                    phase: row.phase_rad,
                    phase_err: row.phase_err,
                }),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn model() -> ReflectionModel {
        ReflectionModel {
            kappa: mhz_to_angular(2.27),
            kappa_in: 0.9825 * mhz_to_angular(2.27),
            gamma_e: mhz_to_angular(6.0666),
            finesse: 350.0,
            phase_offset: 0.0,
            cavity_detuning_offset: 0.0,
        }
    }

    fn grid() -> Vec<f64> {
        (0..41).map(|k| mhz_to_angular(-30.0 + 1.5 * k as f64)).collect()
    }

    #[test]
    fn absorption_round_trip() {
        let truth = EitParams::resonant(21.4, 0.0, 0.0);
        let noise = NoiseModel { intensity_sigma: 0.01, phase_sigma: 0.02 };
        let pts = synthetic_spectrum(&truth, &model(), &grid(), &noise, &mut rng::stream(1, &[])).unwrap();
        let guess = EitParams { cooperativity: 15.0, ..truth };
        let fit = fit_spectrum(&pts, &FitStage::Absorption.free(), &guess, &model()).unwrap();
        assert!((fit.values[0] - 21.4).abs() < 0.5);
        assert!(fit.errors[0] > 0.0 && fit.errors[0] < 0.5);
        assert!(fit.reduced_chisq > 0.5 && fit.reduced_chisq < 2.0);
    }

    #[test]
    fn noise_free_limit_converges() {
        let truth = EitParams::resonant(21.4, mhz_to_angular(42.7), rate_from_time_us(0.22));
        for sigma in [0.01, 0.001] {
            let noise = NoiseModel { intensity_sigma: sigma, phase_sigma: 2.0 * sigma };
            let pts = synthetic_spectrum(&truth, &model(), &grid(), &noise, &mut rng::stream(2, &[])).unwrap();
            let guess = EitParams { omega: mhz_to_angular(35.0), gamma_rg: rate_from_time_us(0.3), ..truth };
            let fit = fit_spectrum(&pts, &FitStage::Eit.free(), &guess, &model()).unwrap();
            assert!((fit.values[0] - 42.7).abs() < 6.0 * fit.errors[0]);
            assert!((fit.values[1] - 0.22).abs() < 6.0 * fit.errors[1]);
            if sigma == 0.001 {
                assert!((fit.values[0] - 42.7).abs() < 0.05);
            }
        }
    }

    #[test]
    fn preconditions() {
        let truth = EitParams::resonant(21.4, 0.0, 0.0);
        let noise = NoiseModel { intensity_sigma: 0.01, phase_sigma: 0.02 };
        let pts = synthetic_spectrum(&truth, &model(), &grid(), &noise, &mut rng::stream(1, &[])).unwrap();
        assert!(matches!(fit_spectrum(&pts, &[], &truth, &model()), Err(Error::InvalidParameter(_))));
        assert!(fit_spectrum(&pts[..2], &[FitParam::Cooperativity], &truth, &model()).is_err());
        let same = vec![pts[0]; 10];
        assert!(matches!(
            fit_spectrum(&same, &[FitParam::Cooperativity], &truth, &model()),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let truth = EitParams::resonant(21.4, mhz_to_angular(42.7), rate_from_time_us(0.22));
        let noise = NoiseModel { intensity_sigma: 0.01, phase_sigma: 0.02 };
        let pts = synthetic_spectrum(&truth, &model(), &grid(), &noise, &mut rng::stream(4, &[])).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&pts, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("detuning_MHz,intensity,intensity_err,phase_rad,phase_err"));
        let back = read_spectrum_csv(buf.as_slice()).unwrap();
        for (a, b) in pts.iter().zip(&back) {
            assert!((a.detuning - b.detuning).abs() < 1e-6 * a.detuning.abs().max(1.0));
            assert_eq!(a.measured, b.measured);
        }
    }

    #[test]
    fn phase_wrapping() {
        let pi = std::f64::consts::PI;
        assert!((wrap(3.0 * pi / 2.0) + pi / 2.0).abs() < 1e-15);
        assert_eq!(wrap(-pi), pi);
    }
}
