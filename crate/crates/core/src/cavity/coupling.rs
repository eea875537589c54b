use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{EPSILON_0, HBAR};

/// Atom-cavity geometry in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams {
    pub waist: f64,
    pub round_trip_length: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub atom_number: f64,
    /// Dipole matrix element `d_eg` (C·m).
    pub dipole_moment: f64,
    /// Transition angular frequency (rad/s).
    pub omega: f64,
}

impl GeometryParams {
    fn validate(&self) -> Result<()> {
        let all = [
            self.waist,
            self.round_trip_length,
            self.sigma_x,
            self.sigma_y,
            self.atom_number,
            self.dipole_moment,
            self.omega,
        ];
        if all.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter("geometry parameters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    /// Maximal single-atom coupling (rad/s).
    pub g: f64,
    pub single_atom_cooperativity: f64,
    pub transverse_factor: f64,
    /// `N_a g²/κγ` for all atoms maximally coupled.
    pub c_max: f64,
    /// `c_max` reduced by the transverse factor.
    pub c_estimate: f64,
}

/// `g = d_eg √(2/(π w² L)) √(ω/2ħε₀)` for a traveling-wave mode.
pub fn single_atom_coupling(geo: &GeometryParams) -> Result<f64> {
    geo.validate()?;
    let v0 = (2.0 / (std::f64::consts::PI * geo.waist.powi(2) * geo.round_trip_length)).sqrt();
    Ok(geo.dipole_moment * v0 * (geo.omega / (2.0 * HBAR * EPSILON_0)).sqrt())
}

/// `[1 + (2σ_x/w)²]^{−1/2} [1 + (2σ_y/w)²]^{−1/2}`.
pub fn transverse_factor(sigma_x: f64, sigma_y: f64, waist: f64) -> f64 {
    (1.0 + (2.0 * sigma_x / waist).powi(2)).powf(-0.5) * (1.0 + (2.0 * sigma_y / waist).powi(2)).powf(-0.5)
}

/// Cooperativity chain from a known coupling `g`, `κ` and `γ` (all rad/s, HWHM).
pub fn cooperativity_chain(g: f64, kappa: f64, gamma: f64, atom_number: f64, factor: f64) -> Result<CouplingReport> {
    if !(kappa > 0.0 && gamma > 0.0 && g >= 0.0 && atom_number >= 0.0) {
        return Err(Error::InvalidParameter("κ and γ must be positive".into()));
    }
    let single = g * g / (kappa * gamma);
    Ok(CouplingReport {
        g,
        single_atom_cooperativity: single,
        transverse_factor: factor,
        c_max: atom_number * single,
        c_estimate: atom_number * single * factor,
    })
}

/// Coupling and cooperativities from the geometry.
pub fn coupling_and_cooperativity(geo: &GeometryParams, kappa: f64, gamma: f64) -> Result<CouplingReport> {
    let g = single_atom_coupling(geo)?;
    let factor = transverse_factor(geo.sigma_x, geo.sigma_y, geo.waist);
    cooperativity_chain(g, kappa, gamma, geo.atom_number, factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{angular_to_mhz, ghz_to_angular, mhz_to_angular, um_to_m, SPEED_OF_LIGHT};

    #[test]
    fn reference_chain() {
        let f = transverse_factor(3.3, 4.5, 8.5);
        assert!((f - 0.5423).abs() < 1e-4);
        let r = cooperativity_chain(mhz_to_angular(1.0), mhz_to_angular(2.3), mhz_to_angular(3.0), 260.0, f).unwrap();
        assert!((r.single_atom_cooperativity - 0.14493).abs() < 1e-5);
        assert!((r.c_max - 37.68).abs() < 0.01);
        assert!((r.c_estimate - 20.43).abs() < 0.01);
    }

    #[test]
    fn geometric_coupling_magnitude() {
        let geo = GeometryParams {
            waist: um_to_m(8.5),
            round_trip_length: 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / ghz_to_angular(1.59),
            sigma_x: um_to_m(3.3),
            sigma_y: um_to_m(4.5),
            atom_number: 260.0,
            dipole_moment: 2.989e-29,
            omega: 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / 780.24e-9,
        };
        let g = angular_to_mhz(single_atom_coupling(&geo).unwrap());
        assert!(g > 0.9 && g < 1.3, "{g}");
        let bad = GeometryParams { waist: 0.0, ..geo };
        assert!(single_atom_coupling(&bad).is_err());
    }
}
