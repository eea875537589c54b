//! Boundary conversions between reporting units (ν = ω/2π in MHz, µs, µm)
//! and the SI/angular units used internally.

use std::f64::consts::TAU;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Atomic unit of the dipole-dipole coefficient C3, in J·m³.
pub const ATOMIC_UNIT_C3: f64 = 6.460e-49;
/// Atomic unit of static polarizability, in J·(m/V)².
pub const ATOMIC_UNIT_POLARIZABILITY: f64 = 1.649e-41;

/// `ν` in MHz to angular frequency in rad/s.
pub fn mhz_to_angular(nu_mhz: f64) -> f64 {
    TAU * nu_mhz * 1e6
}

pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

pub fn ghz_to_angular(nu_ghz: f64) -> f64 {
    TAU * nu_ghz * 1e9
}

pub fn us_to_s(t_us: f64) -> f64 {
    t_us * 1e-6
}

pub fn s_to_us(t: f64) -> f64 {
    t * 1e6
}

pub fn um_to_m(x_um: f64) -> f64 {
    x_um * 1e-6
}

pub fn m_to_um(x: f64) -> f64 {
    x * 1e6
}

/// Rate (1/s) from a 1/e time in µs. An infinite or non-positive time means zero rate.
pub fn rate_from_time_us(t_us: f64) -> f64 {
    if t_us.is_infinite() || t_us <= 0.0 {
        0.0
    } else {
        1.0 / us_to_s(t_us)
    }
}

pub fn time_us_from_rate(rate: f64) -> f64 {
    s_to_us(1.0 / rate)
}
