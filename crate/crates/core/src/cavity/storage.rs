use crate::error::{Error, Result};

/// `η_sr = (κ_in/κ · C/(C+1))² · exp(−γ_rg t)` with `t = t_c + t_dark` in seconds.
pub fn storage_retrieval_efficiency(c: f64, kin_ratio: f64, gamma_rg: f64, t: f64) -> Result<f64> {
    if [c, kin_ratio, gamma_rg, t].iter().any(|x| x.is_nan() || *x < 0.0) || kin_ratio > 1.0 {
        return Err(Error::InvalidParameter(
            "storage parameters must be non-negative with κ_in/κ ≤ 1".into(),
        ));
    }
    let frac = if c.is_infinite() { 1.0 } else { c / (c + 1.0) };
    Ok((kin_ratio * frac).powi(2) * (-gamma_rg * t).exp())
}
