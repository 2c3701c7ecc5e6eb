//! Physical constants and boundary unit conversions.
//!
//! Everything inside the crate is strict SI: henries, farads, meters,
//! seconds, amperes, webers, and angular frequency in rad/s. The helpers
//! here convert the engineering units used at the interface (pH, fF, um,
//! uA, GHz) exactly once, on the way in or out.

/// Magnetic flux quantum h / 2e in Wb (2018 CODATA exact value).
pub const FLUX_QUANTUM: f64 = 2.067_833_848e-15;

/// Reduced flux quantum hbar / 2e in Wb. Sets the Josephson scale
/// `L_J = PHI0_BAR / I_0`.
pub const PHI0_BAR: f64 = FLUX_QUANTUM / std::f64::consts::TAU;

/// Picohenries to henries.
pub fn ph_to_h(l_ph: f64) -> f64 {
    l_ph * 1e-12
}

/// Femtofarads to farads.
pub fn ff_to_f(c_ff: f64) -> f64 {
    c_ff * 1e-15
}

/// Micrometers to meters.
pub fn um_to_m(a_um: f64) -> f64 {
    a_um * 1e-6
}

/// Microamperes to amperes.
pub fn ua_to_a(i_ua: f64) -> f64 {
    i_ua * 1e-6
}

/// Cyclic frequency in GHz to angular frequency in rad/s.
pub fn ghz_to_rad(f_ghz: f64) -> f64 {
    f_ghz * 1e9 * std::f64::consts::TAU
}

/// Angular frequency in rad/s to cyclic frequency in GHz.
pub fn rad_to_ghz(omega: f64) -> f64 {
    omega / (1e9 * std::f64::consts::TAU)
}

/// Power ratio to decibels.
pub fn db(power_ratio: f64) -> f64 {
    10.0 * power_ratio.log10()
}
