//! Non-degenerate two-pump mixing: `w1 + w2 -> w3 + w4`.
//!
//! A single pump below the zero-dispersion frequency phase-matches only at
//! one detuning pair, so the gain profile is a pair of narrow lobes. Two
//! pumps placed symmetrically about the zero-dispersion frequency soften
//! that: the cold-line mismatch stays small over a wide signal range while
//! the Kerr shifts of both pumps supply the compensation, giving a broad
//! flat-topped gain band centred between the pumps.
//!
//! The coefficient set mirrors the single-pump one with each pump
//! contributing its own strength `rho_j = (1/2) (Ij/I0)^2 (w0 / 4 wj)^2`
//! (the 1/2 keeps one physical tone split across two slots consistent with
//! [`crate::depletion`], and makes two coincident pumps of current `Ip`
//! exactly equivalent to the single pump of current `Ip`):
//!
//! ```text
//! alpha_pj = (2/3) (rho_j + 2 rho_other) w_j / v_g(w_j)
//! alpha_t  = 2 (rho_1 + rho_2) w_t / v_g(w_t)      t = signal, idler
//! beta_t   = 2 sqrt(rho_1 rho_2) w_t / v_g(w_t)
//! ```
//!
//! and the gain kernel is shared with [`crate::mixing`]. Left-handed
//! lines only, like everything downstream of the flux normalisation.

use crate::line::{Handedness, LineParameters};
use crate::mixing::{growth_kernel, GainPoint, PumpDrive};
use crate::{exec::map_ordered, units::rad_to_ghz, Error, Result, C64};

/// Two validated pump tones. The frequencies may coincide, which reduces
/// the model exactly to the single-pump one.
#[derive(Debug, Clone, Copy)]
pub struct DoublePumpDrive {
    pub pump_1: PumpDrive,
    pub pump_2: PumpDrive,
}

impl DoublePumpDrive {
    pub fn new(
        params: &LineParameters,
        omega_1: f64,
        current_1: f64,
        omega_2: f64,
        current_2: f64,
    ) -> Result<Self> {
        Ok(Self {
            pump_1: PumpDrive::new(omega_1, current_1, params)?,
            pump_2: PumpDrive::new(omega_2, current_2, params)?,
        })
    }

    pub fn from_ratios(
        params: &LineParameters,
        omega_1: f64,
        ratio_1: f64,
        omega_2: f64,
        ratio_2: f64,
    ) -> Result<Self> {
        Self::new(
            params,
            omega_1,
            ratio_1 * params.i_0,
            omega_2,
            ratio_2 * params.i_0,
        )
    }

    /// Mean pump frequency; the gain band is centred on it.
    pub fn omega_mean(&self) -> f64 {
        0.5 * (self.pump_1.omega + self.pump_2.omega)
    }
}

fn check_left_handed(params: &LineParameters) -> Result<()> {
    if params.handedness == Handedness::Right {
        return Err(Error::InvalidParameter(
            "double-pump model is defined for the left-handed ladder only".into(),
        ));
    }
    Ok(())
}

/// Per-slot pump strengths `(rho_1, rho_2)`.
pub fn pump_strengths(params: &LineParameters, drive: &DoublePumpDrive) -> Result<(f64, f64)> {
    check_left_handed(params)?;
    let rho = |p: &PumpDrive| -> Result<f64> {
        params.require_in_band(p.omega, "pump")?;
        let r = p.current / params.i_0;
        Ok(0.5 * r * r * (params.omega_0() / (4.0 * p.omega)).powi(2))
    };
    Ok((rho(&drive.pump_1)?, rho(&drive.pump_2)?))
}

/// Coupling coefficients of the two-pump process at one signal frequency,
/// all rates in rad/m.
#[derive(Debug, Clone, Copy)]
pub struct DoublePumpCoupling {
    pub omega_signal: f64,
    /// Idler at `w1 + w2 - w_signal`.
    pub omega_idler: f64,
    pub alpha_pump_1: f64,
    pub alpha_pump_2: f64,
    pub alpha_signal: f64,
    pub alpha_idler: f64,
    pub beta_signal: f64,
    pub beta_idler: f64,
    /// `k1 + k2 - k3 - k4`, rad/m.
    pub dk_linear: f64,
    /// `alpha_p1 + alpha_p2 - alpha_s - alpha_i`, rad/m.
    pub dk_nonlinear: f64,
}

impl DoublePumpCoupling {
    pub fn dk_total(&self) -> f64 {
        self.dk_linear + self.dk_nonlinear
    }

    pub fn g_squared(&self) -> f64 {
        let half_dk = 0.5 * self.dk_total();
        self.beta_signal * self.beta_idler - half_dk * half_dk
    }

    pub fn g(&self) -> C64 {
        let g2 = self.g_squared();
        if g2 >= 0.0 {
            C64::new(g2.sqrt(), 0.0)
        } else {
            C64::new(0.0, (-g2).sqrt())
        }
    }
}

/// Evaluates the coupling set; all four tones must be in band.
pub fn coupling_set(
    params: &LineParameters,
    drive: &DoublePumpDrive,
    omega_signal: f64,
) -> Result<DoublePumpCoupling> {
    let (rho_1, rho_2) = pump_strengths(params, drive)?;
    let omega_idler = drive.pump_1.omega + drive.pump_2.omega - omega_signal;
    params.require_in_band(omega_signal, "signal")?;
    params.require_in_band(omega_idler, "idler")?;
    let phase_rate = |omega: f64| -> Result<f64> { Ok(omega / params.group_velocity(omega)?) };
    let p1 = phase_rate(drive.pump_1.omega)?;
    let p2 = phase_rate(drive.pump_2.omega)?;
    let s = phase_rate(omega_signal)?;
    let i = phase_rate(omega_idler)?;
    let k = |w: f64| params.wavevector(w);
    let dk_linear =
        k(drive.pump_1.omega)? + k(drive.pump_2.omega)? - k(omega_signal)? - k(omega_idler)?;
    let alpha_pump_1 = (2.0 / 3.0) * (rho_1 + 2.0 * rho_2) * p1;
    let alpha_pump_2 = (2.0 / 3.0) * (rho_2 + 2.0 * rho_1) * p2;
    let alpha_signal = 2.0 * (rho_1 + rho_2) * s;
    let alpha_idler = 2.0 * (rho_1 + rho_2) * i;
    Ok(DoublePumpCoupling {
        omega_signal,
        omega_idler,
        alpha_pump_1,
        alpha_pump_2,
        alpha_signal,
        alpha_idler,
        beta_signal: 2.0 * (rho_1 * rho_2).sqrt() * s,
        beta_idler: 2.0 * (rho_1 * rho_2).sqrt() * i,
        dk_linear,
        dk_nonlinear: alpha_pump_1 + alpha_pump_2 - alpha_signal - alpha_idler,
    })
}

/// Closed-form small-signal gain at one signal frequency after `x`
/// metres. The reported `delta` is relative to the mean pump frequency,
/// `w_signal = w_mean (1 - delta)`.
pub fn gain_at_length(
    params: &LineParameters,
    drive: &DoublePumpDrive,
    omega_signal: f64,
    x: f64,
) -> Result<GainPoint> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "propagation length must be positive, got {x:e} m"
        )));
    }
    let cs = coupling_set(params, drive, omega_signal)?;
    let (s, c) = growth_kernel(cs.g_squared(), x);
    let bb = cs.beta_signal * cs.beta_idler;
    let half_dk = 0.5 * cs.dk_total();
    Ok(GainPoint {
        delta: 1.0 - omega_signal / drive.omega_mean(),
        omega_signal,
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

/// Symmetric signal grid about the mean pump frequency: `n` frequencies
/// (rad/s) spanning the largest window that keeps both signal and idler
/// in band, shrunk by 1e-3 at the ends.
pub fn default_signal_grid(
    params: &LineParameters,
    drive: &DoublePumpDrive,
    n: usize,
) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "signal grid needs at least 2 points, got {n}"
        )));
    }
    check_left_handed(params)?;
    let mean = drive.omega_mean();
    // signal and idler swap under reflection about the mean, so the
    // in-band window is symmetric: both stay inside for |w - mean| < half
    let half = (params.band_limit() - mean).min(mean);
    if half <= 0.0 {
        return Err(Error::OutOfBand(
            "pump pair leaves no room for signal and idler in band".into(),
        ));
    }
    let half = half * (1.0 - 1e-3);
    Ok((0..n)
        .map(|i| mean - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect())
}

/// Evaluates [`gain_at_length`] over a signal grid, in input order.
pub fn gain_profile(
    params: &LineParameters,
    drive: &DoublePumpDrive,
    omegas: &[f64],
    x: f64,
) -> Result<Vec<GainPoint>> {
    let results = map_ordered(omegas, |&w| gain_at_length(params, drive, w, x));
    results.into_iter().collect()
}

/// One contiguous run of the profile holding at or above a threshold.
#[derive(Debug, Clone, Copy)]
pub struct BandSegment {
    /// Edges in rad/s, linearly interpolated to the threshold crossing
    /// where a neighbouring point below the threshold exists.
    pub omega_lo: f64,
    pub omega_hi: f64,
    /// Extremes of the gain over the grid points inside the run, dB.
    pub gain_min_db: f64,
    pub gain_max_db: f64,
}

impl BandSegment {
    pub fn width(&self) -> f64 {
        self.omega_hi - self.omega_lo
    }

    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.omega_lo && omega <= self.omega_hi
    }

    /// Peak-to-trough gain variation inside the band, dB.
    pub fn ripple_db(&self) -> f64 {
        self.gain_max_db - self.gain_min_db
    }
}

/// Splits a profile (monotone in signal frequency, ascending or
/// descending) into the contiguous segments where `gain_cis` holds at or
/// above `threshold_db`.
pub fn bands_above(points: &[GainPoint], threshold_db: f64) -> Vec<BandSegment> {
    let mut out = Vec::new();
    let mut run: Option<(usize, usize)> = None;
    let db_at = |i: usize| points[i].gain_cis_db();
    let cross = |inside: usize, outside: usize| -> f64 {
        let (gi, go) = (db_at(inside), db_at(outside));
        let (wi, wo) = (points[inside].omega_signal, points[outside].omega_signal);
        wi + (threshold_db - gi) * (wo - wi) / (go - gi)
    };
    for i in 0..=points.len() {
        let above = i < points.len() && db_at(i) >= threshold_db;
        match (above, run) {
            (true, None) => run = Some((i, i)),
            (true, Some((s, _))) => run = Some((s, i)),
            (false, Some((s, e))) => {
                let first = if s > 0 { cross(s, s - 1) } else { points[s].omega_signal };
                let last = if e + 1 < points.len() {
                    cross(e, e + 1)
                } else {
                    points[e].omega_signal
                };
                let (mut lo_db, mut hi_db) = (f64::INFINITY, f64::NEG_INFINITY);
                for p in &points[s..=e] {
                    lo_db = lo_db.min(p.gain_cis_db());
                    hi_db = hi_db.max(p.gain_cis_db());
                }
                out.push(BandSegment {
                    // detuning sweeps walk the signal frequency downward;
                    // the reported edges are orientation-free
                    omega_lo: first.min(last),
                    omega_hi: first.max(last),
                    gain_min_db: lo_db,
                    gain_max_db: hi_db,
                });
                run = None;
            }
            (false, None) => {}
        }
    }
    out
}

/// Convenience: the widest segment above `threshold_db`, if any.
pub fn widest_band(points: &[GainPoint], threshold_db: f64) -> Option<BandSegment> {
    bands_above(points, threshold_db)
        .into_iter()
        .max_by(|a, b| a.width().total_cmp(&b.width()))
}

/// Formats a band edge pair in GHz for reports.
pub fn describe_band(seg: &BandSegment) -> String {
    format!(
        "[{:.3}, {:.3}] GHz ({:.3} GHz wide, ripple {:.2} dB)",
        rad_to_ghz(seg.omega_lo),
        rad_to_ghz(seg.omega_hi),
        rad_to_ghz(seg.width()),
        seg.ripple_db()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line::tests::{flat_band_left, reference_left, reference_right};
    use crate::mixing;
    use crate::units::ghz_to_rad;
    use approx::assert_relative_eq;

    fn flat_drive(params: &LineParameters) -> DoublePumpDrive {
        DoublePumpDrive::from_ratios(params, ghz_to_rad(8.38), 0.5, ghz_to_rad(11.22), 0.5)
            .unwrap()
    }

    #[test]
    fn coincident_pumps_reduce_exactly_to_the_single_pump_model() {
        let p = reference_left();
        let wp = ghz_to_rad(7.5);
        let both = DoublePumpDrive::from_ratios(&p, wp, 0.5, wp, 0.5).unwrap();
        let single = PumpDrive::from_ratio(wp, 0.5, &p).unwrap();
        for delta in [0.02, 0.0805, 0.3] {
            let ws = wp * (1.0 - delta);
            let two = coupling_set(&p, &both, ws).unwrap();
            let one = mixing::coupling_set(&p, &single, delta).unwrap();
            assert_relative_eq!(
                two.alpha_pump_1 + two.alpha_pump_2,
                2.0 * one.alpha_pump,
                max_relative = 1e-12
            );
            assert_relative_eq!(two.alpha_signal, one.alpha_signal, max_relative = 1e-12);
            assert_relative_eq!(two.alpha_idler, one.alpha_idler, max_relative = 1e-12);
            assert_relative_eq!(two.beta_signal, one.beta_signal, max_relative = 1e-12);
            assert_relative_eq!(two.beta_idler, one.beta_idler, max_relative = 1e-12);
            assert_relative_eq!(two.dk_linear, one.dk_linear, max_relative = 1e-12);
            assert_relative_eq!(two.dk_nonlinear, one.dk_nonlinear, max_relative = 1e-12);

            let x = 1000.0 * p.a;
            let g_two = gain_at_length(&p, &both, ws, x).unwrap();
            let g_one = mixing::gain_at_length(&p, &single, delta, x).unwrap();
            assert_relative_eq!(g_two.gain_cis, g_one.gain_cis, max_relative = 1e-12);
            assert_relative_eq!(g_two.gain_trans, g_one.gain_trans, max_relative = 1e-12);
        }
    }

    #[test]
    fn straddling_pumps_reference_points() {
        let f = flat_band_left();
        let drive = flat_drive(&f);
        assert_relative_eq!(
            crate::units::rad_to_ghz(drive.omega_mean()),
            9.8,
            max_relative = 1e-12
        );
        let center = gain_at_length(&f, &drive, ghz_to_rad(9.8), 1650.0 * f.a).unwrap();
        assert_relative_eq!(center.dk_linear * f.a, -2.987182e-3, max_relative = 1e-6);
        assert_relative_eq!(center.dk_nonlinear * f.a, 3.120053e-3, max_relative = 1e-6);
        assert_relative_eq!(center.gain_cis_db(), 20.9297, max_relative = 1e-4);
    }

    #[test]
    fn flat_band_profile_holds_twenty_db_over_a_wide_window() {
        let f = flat_band_left();
        let drive = flat_drive(&f);
        let grid = default_signal_grid(&f, &drive, 2001).unwrap();
        let profile = gain_profile(&f, &drive, &grid, 1650.0 * f.a).unwrap();
        let peak = profile
            .iter()
            .map(|p| p.gain_cis_db())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(peak, 21.719, max_relative = 1e-3);

        let band = widest_band(&profile, 20.0).expect("a 20 dB band must exist");
        assert!(band.contains(ghz_to_rad(9.8)));
        assert_relative_eq!(rad_to_ghz(band.width()), 2.380, max_relative = 5e-3);
        assert_relative_eq!(rad_to_ghz(band.omega_lo), 8.610, max_relative = 2e-3);
        assert_relative_eq!(rad_to_ghz(band.omega_hi), 10.990, max_relative = 2e-3);
        assert!(band.ripple_db() < 2.0);
    }

    #[test]
    fn band_segmentation_handles_edges_and_gaps() {
        let f = flat_band_left();
        let drive = flat_drive(&f);
        let grid = default_signal_grid(&f, &drive, 801).unwrap();
        let profile = gain_profile(&f, &drive, &grid, 1650.0 * f.a).unwrap();
        // an absurd threshold yields no bands
        assert!(bands_above(&profile, 60.0).is_empty());
        // a generous one yields at least the central band, and every
        // segment is internally consistent
        let bands = bands_above(&profile, 10.0);
        assert!(!bands.is_empty());
        for b in &bands {
            assert!(b.omega_hi > b.omega_lo);
            assert!(b.gain_max_db >= b.gain_min_db);
            assert!(b.gain_min_db >= 10.0 - 0.5);
        }
    }

    #[test]
    fn right_handed_lines_are_rejected() {
        let r = reference_right();
        let drive =
            DoublePumpDrive::from_ratios(&r, ghz_to_rad(7.0), 0.3, ghz_to_rad(8.0), 0.3).unwrap();
        assert!(matches!(
            coupling_set(&r, &drive, ghz_to_rad(7.5)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn out_of_band_tones_are_rejected() {
        let f = flat_band_left();
        let drive = flat_drive(&f);
        // signal in band but implied idler above cutoff
        assert!(matches!(
            coupling_set(&f, &drive, ghz_to_rad(7.3)),
            Err(Error::OutOfBand(_))
        ));
    }
}
