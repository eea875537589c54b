use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::c;
use crate::units::HBAR;

/// Static polarizabilities (any common unit; only ratios enter).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polarizabilities {
    pub alpha_r_prime: f64,
    pub alpha_r: f64,
    pub alpha_gamma_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockadeParams {
    /// `C3` in J·m³.
    pub c3: f64,
    /// Förster defect `Δ_F` (rad/s).
    pub forster_defect: f64,
    /// Förster dephasing rate `γ_F` (1/s).
    pub gamma_f: f64,
}

/// `γ_F = |(α_γ′ − α_r′)/α_r| · γ_rg`.
pub fn forster_gamma_estimate(gamma_rg: f64, alphas: &Polarizabilities) -> Result<f64> {
    if alphas.alpha_r == 0.0 {
        return Err(Error::InvalidParameter("α_r must be non-zero".into()));
    }
    Ok(((alphas.alpha_gamma_prime - alphas.alpha_r_prime) / alphas.alpha_r).abs() * gamma_rg)
}

/// `R_block = |(2C3/ħΩ)² · Γ_e/(γ_F − 2iΔ_F) · C|^{1/6}` in metres.
pub fn blockade_radius(bp: &BlockadeParams, cooperativity: f64, omega: f64, gamma_e: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::InvalidParameter("Rabi frequency Ω must be non-zero".into()));
    }
    if !(bp.c3 > 0.0) {
        return Err(Error::InvalidParameter("C3 must be positive".into()));
    }
    let den = c(bp.gamma_f, -2.0 * bp.forster_defect);
    if den.norm() == 0.0 {
        return Err(Error::InvalidParameter("need γ_F > 0 or a non-zero Förster defect".into()));
    }
    let x = (2.0 * bp.c3 / (HBAR * omega)).powi(2) * gamma_e / den * cooperativity;
    Ok(x.norm().powf(1.0 / 6.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz_to_angular, rate_from_time_us, ATOMIC_UNIT_C3};

    fn alphas() -> Polarizabilities {
        Polarizabilities { alpha_r_prime: 0.15e12, alpha_r: 0.20e12, alpha_gamma_prime: 1.9e12 }
    }

    #[test]
    fn forster_rate() {
        let g = forster_gamma_estimate(rate_from_time_us(0.22), &alphas()).unwrap();
        assert!(((1.0 / g) * 1e9 - 25.14).abs() < 0.01);
    }

    #[test]
    fn radius_and_scaling() {
        let bp = BlockadeParams { c3: 1.2e6 * ATOMIC_UNIT_C3, forster_defect: 0.0, gamma_f: 1.0 / 25e-9 };
        let r = blockade_radius(&bp, 21.4, mhz_to_angular(42.7), mhz_to_angular(6.0666)).unwrap();
        assert!(r > 6e-6 && r < 8e-6, "{r}");
        // R ∝ (C3² C)^{1/6}: C3 ×8 or C ×64 doubles the radius.
        let big = BlockadeParams { c3: bp.c3 * 8.0, ..bp };
        let r2 = blockade_radius(&big, 21.4, mhz_to_angular(42.7), mhz_to_angular(6.0666)).unwrap();
        assert!((r2 / r - 2.0).abs() < 1e-12);
        let r3 = blockade_radius(&bp, 21.4 * 64.0, mhz_to_angular(42.7), mhz_to_angular(6.0666)).unwrap();
        assert!((r3 / r - 2.0).abs() < 1e-12);
        assert!(blockade_radius(&bp, 21.4, 0.0, 1.0).is_err());
    }
}
