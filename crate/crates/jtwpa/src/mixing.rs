//! Degenerate four-wave mixing on a pumped line: coupling coefficients,
//! phase mismatches, and closed-form small-signal gain.
//!
//! A strong pump at `wp` converts a signal at `ws = wp (1 - delta)` into
//! an idler at `wi = wp (1 + delta)` through the current dependence of the
//! Josephson inductance. With the pump undepleted the sideband envelopes
//! obey
//!
//! ```text
//! dA_s/dx = i beta_s conj(A_i) e^{i dk x}
//! dA_i/dx = i beta_i conj(A_s) e^{i dk x}
//! ```
//!
//! whose solution grows as `sinh(g x)` with `g^2 = beta_s beta_i -
//! (dk/2)^2`. The total mismatch `dk` combines the cold-line contribution
//! `dk_L = 2 k(wp) - k(ws) - k(wi)` with the pump-induced Kerr shifts
//! `dk_NL = 2 alpha_p - alpha_s - alpha_i`. On a left-handed line below
//! the zero-dispersion frequency the two contributions carry opposite
//! signs, so the line phase-matches itself at a finite detuning; on a
//! right-handed line both are negative and the mismatch only accumulates.
//!
//! Everything here is evaluated through functions of `z = g^2 x^2` that
//! are entire in `g^2`, so sweeps cross the `g^2 = 0` boundary (where
//! exponential gain hands over to oscillatory conversion) without any
//! branch or loss of precision.

use crate::exec::map_ordered;
use crate::line::{sidebands, Handedness, LineParameters};
use crate::{Error, Result, C64};

/// Pump tone: angular frequency (rad/s) and drive current amplitude (A).
#[derive(Debug, Clone, Copy)]
pub struct PumpDrive {
    pub omega: f64,
    pub current: f64,
}

impl PumpDrive {
    /// Validates the drive against a line: in band, and below the junction
    /// critical current.
    pub fn new(omega: f64, current: f64, params: &LineParameters) -> Result<Self> {
        params.require_in_band(omega, "pump")?;
        if !current.is_finite() || current <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pump current must be positive and finite, got {current:e} A"
            )));
        }
        if current >= params.i_0 {
            return Err(Error::InvalidParameter(format!(
                "pump current {:.4e} A reaches the critical current {:.4e} A",
                current, params.i_0
            )));
        }
        Ok(Self { omega, current })
    }

    /// Builds the drive from a current expressed as a fraction of `I_0`.
    pub fn from_ratio(omega: f64, ratio: f64, params: &LineParameters) -> Result<Self> {
        Self::new(omega, ratio * params.i_0, params)
    }

    pub fn current_ratio(&self, params: &LineParameters) -> f64 {
        self.current / params.i_0
    }
}

/// Dimensionless pump strength `rho`, the small parameter of the mixing
/// expansion. Left-handed: `rho = (Ip/I0)^2 (w0 / 4 wp)^2`. Right-handed:
/// `rho = (Ip/I0)^2 / (16 (1 - wp^2/wJ^2))`, where the band factor
/// converts the drive current into the current actually flowing through
/// the series junctions.
pub fn pump_strength(params: &LineParameters, pump: &PumpDrive) -> Result<f64> {
    params.require_in_band(pump.omega, "pump")?;
    let r2 = (pump.current / params.i_0).powi(2);
    Ok(match params.handedness {
        Handedness::Left => r2 * (params.omega_0() / (4.0 * pump.omega)).powi(2),
        Handedness::Right => {
            let x = pump.omega / params.omega_j();
            r2 / (16.0 * (1.0 - x * x))
        }
    })
}

/// Per-tone phase coefficients of the pumped line at one detuning, all in
/// rad/m. `alpha_*` are the Kerr shifts (self- plus cross-phase for the
/// pump, cross-phase for the sidebands), `beta_*` the parametric coupling
/// rates. Their common building block is `rho * w / v_g(w)`, so every
/// coefficient is negative on a left-handed line.
#[derive(Debug, Clone, Copy)]
pub struct CouplingSet {
    pub omega_signal: f64,
    pub omega_idler: f64,
    pub alpha_pump: f64,
    pub alpha_signal: f64,
    pub alpha_idler: f64,
    pub beta_signal: f64,
    pub beta_idler: f64,
    /// Cold-line mismatch `2 k(wp) - k(ws) - k(wi)`, rad/m.
    pub dk_linear: f64,
    /// Pump-induced mismatch `2 alpha_p - alpha_s - alpha_i`, rad/m.
    pub dk_nonlinear: f64,
}

impl CouplingSet {
    pub fn dk_total(&self) -> f64 {
        self.dk_linear + self.dk_nonlinear
    }

    /// Squared parametric rate `g^2 = beta_s beta_i - (dk/2)^2`, 1/m^2.
    /// Positive means exponential gain, negative means oscillatory
    /// conversion.
    pub fn g_squared(&self) -> f64 {
        let half_dk = 0.5 * self.dk_total();
        self.beta_signal * self.beta_idler - half_dk * half_dk
    }

    /// `g` as a complex number on the natural branch: real when `g^2 >= 0`,
    /// positive imaginary otherwise.
    pub fn g(&self) -> C64 {
        let g2 = self.g_squared();
        if g2 >= 0.0 {
            C64::new(g2.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-g2).sqrt())
        }
    }
}

/// Evaluates the full coupling set for a pump/detuning pair. All three
/// tones must be in band.
pub fn coupling_set(params: &LineParameters, pump: &PumpDrive, delta: f64) -> Result<CouplingSet> {
    let rho = pump_strength(params, pump)?;
    let (omega_s, omega_i) = sidebands(pump.omega, delta)?;
    params.require_in_band(omega_s, "signal")?;
    params.require_in_band(omega_i, "idler")?;
    // rho * w / v_g(w); v_g carries the handedness sign
    let phase_rate = |omega: f64| -> Result<f64> {
        Ok(rho * omega / params.group_velocity(omega)?)
    };
    let p = phase_rate(pump.omega)?;
    let s = phase_rate(omega_s)?;
    let i = phase_rate(omega_i)?;
    Ok(CouplingSet {
        omega_signal: omega_s,
        omega_idler: omega_i,
        alpha_pump: p,
        alpha_signal: 2.0 * s,
        alpha_idler: 2.0 * i,
        beta_signal: s,
        beta_idler: i,
        dk_linear: params.linear_mismatch(pump.omega, delta)?,
        dk_nonlinear: 2.0 * p - 2.0 * s - 2.0 * i,
    })
}

/// Pump-induced mismatch alone; see [`CouplingSet::dk_nonlinear`].
pub fn nonlinear_mismatch(params: &LineParameters, pump: &PumpDrive, delta: f64) -> Result<f64> {
    Ok(coupling_set(params, pump, delta)?.dk_nonlinear)
}

/// Small-band approximation of the nonlinear mismatch on a left-handed
/// line, `dk_NL * a = 2 rho (w0/wp) (1 + delta^2) / (1 - delta^2)`.
/// Diagnostic companion to [`nonlinear_mismatch`].
pub fn nonlinear_mismatch_approx(
    params: &LineParameters,
    pump: &PumpDrive,
    delta: f64,
) -> Result<f64> {
    if params.handedness == Handedness::Right {
        return Err(Error::InvalidParameter(
            "small-band mismatch approximation is defined for left-handed lines".into(),
        ));
    }
    let rho = pump_strength(params, pump)?;
    let d2 = delta * delta;
    Ok(2.0 * rho * (params.omega_0() / pump.omega) * (1.0 + d2) / (1.0 - d2) / params.a)
}

/// Growth kernel pair `(S, C)` with `S = sinh(g x)/g` and `C = cosh(g x)`,
/// evaluated from `z = g^2 x^2` so both are entire across `g^2 = 0`:
/// hyperbolic for `z > 0`, trigonometric for `z < 0`, and a power series
/// inside `|z| < 1e-12` where either form would cancel.
pub(crate) fn growth_kernel(g2: f64, x: f64) -> (f64, f64) {
    let z = g2 * x * x;
    if z.abs() < 1e-12 {
        (
            x * (1.0 + z / 6.0 + z * z / 120.0),
            1.0 + z / 2.0 + z * z / 24.0,
        )
    } else if z > 0.0 {
        let g = g2.sqrt();
        ((g * x).sinh() / g, (g * x).cosh())
    } else {
        let q = (-g2).sqrt();
        ((q * x).sin() / q, (q * x).cos())
    }
}

/// Gain profile of one detuning point after a propagation length `x`.
/// Mismatches and `g` are per metre; gains are linear power ratios.
#[derive(Debug, Clone, Copy)]
pub struct GainPoint {
    pub delta: f64,
    pub omega_signal: f64,
    pub dk_linear: f64,
    pub dk_nonlinear: f64,
    pub dk_total: f64,
    pub g: C64,
    /// Signal-to-signal power gain `G_c = 1 + beta_s beta_i S^2`.
    pub gain_cis: f64,
    /// Signal-to-idler conversion gain `G_t = beta_i^2 S^2`.
    pub gain_trans: f64,
    /// Idler-to-signal conversion gain `beta_s^2 S^2`.
    pub gain_trans_reverse: f64,
    /// Phase of the transmitted signal relative to cold-line propagation,
    /// `dk x / 2 - atan2((dk/2) S, C)`, rad.
    pub phase: f64,
}

impl GainPoint {
    pub fn gain_cis_db(&self) -> f64 {
        crate::units::db(self.gain_cis)
    }

    pub fn gain_trans_db(&self) -> f64 {
        crate::units::db(self.gain_trans)
    }
}

/// Closed-form small-signal gain at one detuning after length `x` (m).
pub fn gain_at_length(
    params: &LineParameters,
    pump: &PumpDrive,
    delta: f64,
    x: f64,
) -> Result<GainPoint> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "propagation length must be positive, got {x:e} m"
        )));
    }
    let cs = coupling_set(params, pump, delta)?;
    let (s, c) = growth_kernel(cs.g_squared(), x);
    let bb = cs.beta_signal * cs.beta_idler;
    let half_dk = 0.5 * cs.dk_total();
    Ok(GainPoint {
        delta,
        omega_signal: cs.omega_signal,
        dk_linear: cs.dk_linear,
        dk_nonlinear: cs.dk_nonlinear,
        dk_total: cs.dk_total(),
        g: cs.g(),
        gain_cis: 1.0 + bb * s * s,
        gain_trans: cs.beta_idler * cs.beta_idler * s * s,
        gain_trans_reverse: cs.beta_signal * cs.beta_signal * s * s,
        phase: half_dk * x - f64::atan2(half_dk * s, c),
    })
}

/// Signal and idler envelopes after length `x`, given the inputs at the
/// start of the line:
///
/// ```text
/// A_s(x) = e^{i dk x/2} [ (C - i (dk/2) S) A_s0 + i beta_s S conj(A_i0) ]
/// A_i(x) = e^{i dk x/2} [ (C - i (dk/2) S) A_i0 + i beta_i S conj(A_s0) ]
/// ```
pub fn output_amplitudes(
    params: &LineParameters,
    pump: &PumpDrive,
    delta: f64,
    x: f64,
    a_s0: C64,
    a_i0: C64,
) -> Result<(C64, C64)> {
    let cs = coupling_set(params, pump, delta)?;
    let (s, c) = growth_kernel(cs.g_squared(), x);
    let half_dk = 0.5 * cs.dk_total();
    let rot = (C64::new(0.0, half_dk * x)).exp();
    let diag = C64::new(c, -half_dk * s);
    let a_s = rot * (diag * a_s0 + C64::new(0.0, cs.beta_signal * s) * a_i0.conj());
    let a_i = rot * (diag * a_i0 + C64::new(0.0, cs.beta_idler * s) * a_s0.conj());
    Ok((a_s, a_i))
}

/// Symmetric detuning grid covering the full band available to both
/// sidebands: `n` points over `+-delta_max`, where `delta_max` keeps the
/// upper sideband under the cutoff and shrinks by 1e-3 so the edge points
/// stay clear of the guard strip. Odd `n` lands a point exactly on
/// `delta = 0`.
pub fn default_detuning_grid(
    params: &LineParameters,
    pump: &PumpDrive,
    n: usize,
) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "detuning grid needs at least 2 points, got {n}"
        )));
    }
    params.require_in_band(pump.omega, "pump")?;
    let headroom = params.band_limit() / pump.omega - 1.0;
    let delta_max = headroom.min(1.0) * (1.0 - 1e-3);
    if delta_max <= 0.0 {
        return Err(Error::OutOfBand(
            "pump leaves no room for sidebands in band".into(),
        ));
    }
    Ok((0..n)
        .map(|i| -delta_max + 2.0 * delta_max * i as f64 / (n - 1) as f64)
        .collect())
}

/// Evaluates [`gain_at_length`] over a detuning grid, in input order.
/// Runs on the rayon pool when the `parallel` feature is enabled.
pub fn gain_sweep(
    params: &LineParameters,
    pump: &PumpDrive,
    deltas: &[f64],
    x: f64,
) -> Result<Vec<GainPoint>> {
    let results = map_ordered(deltas, |&d| gain_at_length(params, pump, d, x));
    results.into_iter().collect()
}

/// Phase-matched detuning of a left-handed line pumped below the
/// zero-dispersion frequency.
#[derive(Debug, Clone, Copy)]
pub struct PeakDetuning {
    /// Small-band estimate `sqrt(rho / (1 - rho))`, from balancing the
    /// approximate mismatches. `None` when the pump is so strong the
    /// balance has no solution.
    pub closed_form: Option<f64>,
    /// Root of the full `dk(delta) = 0`, bisected to machine precision.
    /// `None` when the mismatch never crosses zero in band.
    pub exact: Option<f64>,
}

/// Locates the detuning where the total mismatch vanishes. Scans the
/// positive-detuning half of the band for a sign change, then bisects.
pub fn peak_detuning(params: &LineParameters, pump: &PumpDrive) -> Result<PeakDetuning> {
    let rho = pump_strength(params, pump)?;
    let closed_form = match params.handedness {
        Handedness::Left if rho < 1.0 => Some((rho / (1.0 - rho)).sqrt()),
        _ => None,
    };

    let headroom = params.band_limit() / pump.omega - 1.0;
    let delta_max = headroom.min(1.0) * (1.0 - 1e-3);
    let dk = |d: f64| -> Result<f64> { Ok(coupling_set(params, pump, d)?.dk_total()) };
    const SCAN: usize = 1000;
    let mut exact = None;
    let mut prev_d = delta_max * 1e-6;
    let mut prev_f = dk(prev_d)?;
    for i in 1..=SCAN {
        let d = delta_max * i as f64 / SCAN as f64;
        let f = dk(d)?;
        if prev_f == 0.0 {
            exact = Some(prev_d);
            break;
        }
        if f.signum() != prev_f.signum() {
            let (mut lo, mut hi) = (prev_d, d);
            let lo_sign = prev_f.signum();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if dk(mid)?.signum() == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            exact = Some(0.5 * (lo + hi));
            break;
        }
        prev_d = d;
        prev_f = f;
    }
    Ok(PeakDetuning { closed_form, exact })
}

/// Parametric rate at perfect phase matching in the small-band limit of a
/// left-handed line, per cell: `(1/16) (w0/wp)^3 (Ip/I0)^2`. Multiplying
/// by the cell count gives the exponent of the peak amplitude gain.
pub fn peak_gain_per_cell(params: &LineParameters, pump: &PumpDrive) -> Result<f64> {
    if params.handedness == Handedness::Right {
        return Err(Error::InvalidParameter(
            "peak-gain estimate applies to left-handed lines".into(),
        ));
    }
    params.require_in_band(pump.omega, "pump")?;
    let r = pump.current / params.i_0;
    Ok((params.omega_0() / pump.omega).powi(3) * r * r / 16.0)
}

/// Sign structure of the two mismatch contributions at one detuning.
#[derive(Debug, Clone, Copy)]
pub struct MixingRegime {
    pub dk_linear: f64,
    pub dk_nonlinear: f64,
}

impl MixingRegime {
    /// True when the cold-line and pump-induced mismatches have opposite
    /// signs, so a phase-matched detuning exists nearby.
    ///
    /// A linear mismatch many orders below the Kerr term is treated as
    /// zero: near delta = 0 it vanishes quadratically and its floating
    /// point sign is noise, not a regime.
    pub fn is_compensating(&self) -> bool {
        let floor = 1e-9 * self.dk_nonlinear.abs();
        self.dk_linear.abs() > floor && self.dk_linear * self.dk_nonlinear < 0.0
    }
}

/// Classifies the mismatch signs for a pump/detuning pair.
pub fn classify(params: &LineParameters, pump: &PumpDrive, delta: f64) -> Result<MixingRegime> {
    let cs = coupling_set(params, pump, delta)?;
    Ok(MixingRegime {
        dk_linear: cs.dk_linear,
        dk_nonlinear: cs.dk_nonlinear,
    })
}
