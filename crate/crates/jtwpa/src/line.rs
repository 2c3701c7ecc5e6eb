//! Single-tone properties of the cold (linear) transmission line.
//!
//! The left-handed line is a ladder of series capacitors `C` with a
//! Josephson junction (`L_J` parallel `C_J`) shunting every node. In the
//! continuum limit its dispersion relation is
//!
//! ```text
//! k(w) = w0 * sqrt(1 - w^2/wJ^2) / (a * w)        (left-handed)
//! ```
//!
//! with `wJ = 1/sqrt(L_J C_J)` the junction plasma frequency, `w0 =
//! 1/sqrt(L_J C)`, and `a` the cell pitch. The wavevector falls with
//! frequency: phase velocity is positive while group velocity is negative,
//! the signature of a backward-wave line. The band closes at `wJ`.
//!
//! The right-handed comparison line swaps the roles of the elements
//! (series junction, shunt capacitor) and carries the familiar form
//!
//! ```text
//! k(w) = (w / w0) / sqrt(1 - w^2/wJ^2) / a        (right-handed)
//! ```
//!
//! valid as a continuum description for k*a below about one.
//!
//! Dispersion derivatives `D_m = d^m k / dw^m` are analytic for m <= 2 and
//! Richardson-extrapolated central differences for 3 <= m <= 8. For the
//! left-handed line `D_2` changes sign exactly once, at the zero-dispersion
//! frequency `w_zd = sqrt(2/3) * wJ`; the right-handed line has `D_2 > 0`
//! everywhere in band.

use crate::units::PHI0_BAR;
use crate::{Error, Result};

/// Relative width of the rejection strip under the plasma cutoff. Tones
/// closer to `wJ` than this are refused rather than evaluated on the
/// diverging edge of the band.
pub const BAND_EDGE_GUARD: f64 = 1e-6;

/// Maximum derivative order served by [`LineParameters::dispersion_derivative`].
pub const MAX_DERIVATIVE_ORDER: usize = 8;

/// Which of the two ladder topologies the parameters describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Handedness {
    /// Series C, shunt junction: backward waves, v_g < 0.
    Left,
    /// Series junction, shunt C: forward waves, v_g > 0.
    Right,
}

impl std::fmt::Display for Handedness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Handedness::Left => write!(f, "left"),
            Handedness::Right => write!(f, "right"),
        }
    }
}

/// Electrical parameters of one unit cell, strict SI.
#[derive(Debug, Clone, Copy)]
pub struct LineParameters {
    /// Josephson inductance per junction, H.
    pub l_j: f64,
    /// Junction self-capacitance, F.
    pub c_j: f64,
    /// Ladder capacitance, F. Series element for a left-handed line,
    /// shunt element for a right-handed one.
    pub c: f64,
    /// Cell pitch, m.
    pub a: f64,
    /// Junction critical current, A.
    pub i_0: f64,
    pub handedness: Handedness,
}

impl LineParameters {
    /// Validates and builds a parameter set. All values must be strictly
    /// positive and finite.
    pub fn new(
        l_j: f64,
        c_j: f64,
        c: f64,
        a: f64,
        i_0: f64,
        handedness: Handedness,
    ) -> Result<Self> {
        for (name, v) in [
            ("l_j", l_j),
            ("c_j", c_j),
            ("c", c),
            ("a", a),
            ("i_0", i_0),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v:e}"
                )));
            }
        }
        Ok(Self {
            l_j,
            c_j,
            c,
            a,
            i_0,
            handedness,
        })
    }

    /// Builds a parameter set with the critical current tied to the
    /// junction inductance through the Josephson relation
    /// `I_0 = (hbar/2e) / L_J`.
    pub fn with_josephson_i0(
        l_j: f64,
        c_j: f64,
        c: f64,
        a: f64,
        handedness: Handedness,
    ) -> Result<Self> {
        if !(l_j.is_finite() && l_j > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "l_j must be positive and finite, got {l_j:e}"
            )));
        }
        Self::new(l_j, c_j, c, a, PHI0_BAR / l_j, handedness)
    }

    /// Junction plasma frequency `wJ = 1/sqrt(L_J C_J)`, rad/s. The
    /// propagating band closes here for both handednesses.
    pub fn omega_j(&self) -> f64 {
        1.0 / (self.l_j * self.c_j).sqrt()
    }

    /// Ladder corner frequency `w0 = 1/sqrt(L_J C)`, rad/s.
    pub fn omega_0(&self) -> f64 {
        1.0 / (self.l_j * self.c).sqrt()
    }

    /// Characteristic impedance `Zc = sqrt(L_J / C)`, ohm.
    pub fn z_c(&self) -> f64 {
        (self.l_j / self.c).sqrt()
    }

    /// Upper edge of the accepted band: `wJ` shrunk by the guard strip.
    pub fn band_limit(&self) -> f64 {
        self.omega_j() * (1.0 - BAND_EDGE_GUARD)
    }

    /// True when `omega` is strictly inside the propagating band and clear
    /// of the guard strip.
    pub fn in_band(&self, omega: f64) -> bool {
        omega.is_finite() && omega > 0.0 && omega < self.band_limit()
    }

    /// Rejects tones outside the band with the appropriate error class.
    pub fn require_in_band(&self, omega: f64, label: &str) -> Result<()> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{label} must be a positive frequency, got {omega:e} rad/s"
            )));
        }
        if omega >= self.band_limit() {
            return Err(Error::OutOfBand(format!(
                "{label} = {:.6} GHz is at or above the cutoff {:.6} GHz \
                 (guard {:.0e} relative)",
                crate::units::rad_to_ghz(omega),
                crate::units::rad_to_ghz(self.omega_j()),
                BAND_EDGE_GUARD,
            )));
        }
        Ok(())
    }

    /// Wavevector `k(omega)` in rad/m, always positive in band.
    pub fn wavevector(&self, omega: f64) -> Result<f64> {
        self.require_in_band(omega, "omega")?;
        let u = self.band_factor(omega);
        Ok(match self.handedness {
            Handedness::Left => self.omega_0() * u / (self.a * omega),
            Handedness::Right => omega / (self.omega_0() * u * self.a),
        })
    }

    /// Phase velocity `w / k` in m/s, positive for both handednesses.
    pub fn phase_velocity(&self, omega: f64) -> Result<f64> {
        Ok(omega / self.wavevector(omega)?)
    }

    /// Group velocity `(dk/dw)^-1` in m/s. Negative for a left-handed
    /// line: energy moves against the phase.
    pub fn group_velocity(&self, omega: f64) -> Result<f64> {
        self.require_in_band(omega, "omega")?;
        let u = self.band_factor(omega);
        Ok(match self.handedness {
            Handedness::Left => -self.a * omega * omega * u / self.omega_0(),
            Handedness::Right => self.a * self.omega_0() * u * u * u,
        })
    }

    /// `sqrt(1 - w^2/wJ^2)`; collapses to zero at the band edge.
    fn band_factor(&self, omega: f64) -> f64 {
        let r = omega / self.omega_j();
        (1.0 - r * r).sqrt()
    }

    /// Dispersion derivative `D_m = d^m k / d w^m` in s^m/m, for
    /// 1 <= m <= 8. Orders one and two are analytic; higher orders apply
    /// Richardson-extrapolated central differences of order `m - 2` to
    /// the analytic curvature, which keeps the roundoff floor below
    /// 1e-4 relative across the band even at order eight.
    pub fn dispersion_derivative(&self, omega: f64, m: usize) -> Result<f64> {
        self.require_in_band(omega, "omega")?;
        match m {
            0 => Err(Error::InvalidParameter(
                "derivative order must be at least 1".into(),
            )),
            1 => Ok(self.d1_analytic(omega)),
            2 => Ok(self.d2_analytic(omega)),
            m if m <= MAX_DERIVATIVE_ORDER => self.dm_richardson(omega, m),
            m => Err(Error::InvalidParameter(format!(
                "derivative order {m} exceeds the supported maximum {MAX_DERIVATIVE_ORDER}"
            ))),
        }
    }

    fn d1_analytic(&self, omega: f64) -> f64 {
        let u = self.band_factor(omega);
        let wj = self.omega_j();
        match self.handedness {
            Handedness::Left => -self.omega_0() / (self.a * omega * omega * u),
            Handedness::Right => {
                // d/dw [ w / (w0 u) ] = 1 / (w0 u^3)
                let x = omega / wj;
                1.0 / (self.a * self.omega_0() * (1.0 - x * x).powf(1.5))
            }
        }
    }

    fn d2_analytic(&self, omega: f64) -> f64 {
        let u = self.band_factor(omega);
        let wj = self.omega_j();
        match self.handedness {
            Handedness::Left => {
                // zero exactly at w = sqrt(2/3) wJ
                self.omega_0() / self.a
                    * (2.0 / (omega.powi(3) * u) - 1.0 / (omega * wj * wj * u.powi(3)))
            }
            Handedness::Right => {
                let x = omega / wj;
                3.0 * omega / (self.a * self.omega_0() * wj * wj * (1.0 - x * x).powf(2.5))
            }
        }
    }

    fn dm_richardson(&self, omega: f64, m: usize) -> Result<f64> {
        // differencing the exact D_2 instead of k itself buys two orders:
        // the order-8 roundoff floor drops from percent level to ~1e-5
        let order = m - 2;
        let (offsets, coeffs) = central_stencil(order);
        let half_width = offsets.iter().map(|o| o.abs()).fold(0.0, f64::max);
        let up = self.band_limit() - omega;
        let down = omega;
        let h0 = (0.08 * omega)
            .min(0.9 * up / half_width)
            .min(0.9 * down / half_width);
        if h0 <= 0.0 || !h0.is_finite() {
            return Err(Error::Numeric(format!(
                "no room for an order-{m} stencil at {:.6} GHz",
                crate::units::rad_to_ghz(omega)
            )));
        }

        let eval = |h: f64| -> f64 {
            let mut acc = 0.0;
            for (o, c) in offsets.iter().zip(&coeffs) {
                if *c != 0.0 {
                    acc += c * self.d2_analytic(omega + o * h);
                }
            }
            acc / h.powi(order as i32)
        };

        // Richardson tableau in h^2; stop when successive diagonal entries
        // agree, bail out when roundoff makes them diverge again.
        const LEVELS: usize = 7;
        let mut diag: Vec<f64> = Vec::with_capacity(LEVELS);
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(LEVELS);
        let mut best = f64::NAN;
        let mut best_err = f64::INFINITY;
        for i in 0..LEVELS {
            let h = h0 / 2f64.powi(i as i32);
            let mut row = vec![eval(h)];
            for k in 1..=i {
                let fac = 4f64.powi(k as i32);
                let t = (fac * row[k - 1] - rows[i - 1][k - 1]) / (fac - 1.0);
                row.push(t);
            }
            let t_ii = *row.last().unwrap();
            if let Some(prev) = diag.last() {
                let err = (t_ii - prev).abs();
                if err < best_err {
                    best_err = err;
                    best = t_ii;
                } else if err > 4.0 * best_err && best_err.is_finite() {
                    break; // roundoff regime reached
                }
            }
            diag.push(t_ii);
            rows.push(row);
        }
        let scale = best.abs().max(1e-300);
        if !best.is_finite() || best_err > 1e-4 * scale {
            return Err(Error::Numeric(format!(
                "order-{m} dispersion derivative did not converge at {:.6} GHz \
                 (residual {:.3e} vs scale {:.3e})",
                crate::units::rad_to_ghz(omega),
                best_err,
                scale
            )));
        }
        Ok(best)
    }

    /// Zero-dispersion frequency of a left-handed line: the single in-band
    /// root of `D_2`, located by bisection and cross-checked against the
    /// closed form `sqrt(2/3) * wJ` to a relative 1e-9.
    pub fn zero_dispersion_frequency(&self) -> Result<f64> {
        if self.handedness == Handedness::Right {
            return Err(Error::InvalidParameter(
                "right-handed line has no zero-dispersion point: D_2 > 0 across the band".into(),
            ));
        }
        let mut lo = 1e-6 * self.omega_j();
        let mut hi = self.band_limit();
        let f_lo = self.d2_analytic(lo);
        if f_lo <= 0.0 || self.d2_analytic(hi) >= 0.0 {
            return Err(Error::Numeric(
                "D_2 does not bracket a sign change in band".into(),
            ));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.d2_analytic(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let closed = (2f64 / 3.0).sqrt() * self.omega_j();
        if ((root - closed) / closed).abs() > 1e-9 {
            return Err(Error::Numeric(format!(
                "zero-dispersion root {root:.6e} disagrees with sqrt(2/3)*wJ = {closed:.6e}"
            )));
        }
        Ok(root)
    }

    /// Linear phase mismatch of degenerate four-wave mixing,
    /// `dk_L = 2 k(wp) - k(ws) - k(wi)` in rad/m, with sidebands
    /// `ws = wp (1 - delta)` and `wi = wp (1 + delta)`. Even in `delta`.
    pub fn linear_mismatch(&self, omega_p: f64, delta: f64) -> Result<f64> {
        let (omega_s, omega_i) = sidebands(omega_p, delta)?;
        self.require_in_band(omega_p, "pump")?;
        self.require_in_band(omega_s, "signal")?;
        self.require_in_band(omega_i, "idler")?;
        Ok(2.0 * self.wavevector(omega_p)? - self.wavevector(omega_s)? - self.wavevector(omega_i)?)
    }

    /// Small-band approximation of the linear mismatch for a left-handed
    /// line, `dk_L * a = -(2 w0/wp) * delta^2 / (1 - delta^2)`, valid for
    /// `wp << wJ`. Diagnostic companion to [`Self::linear_mismatch`].
    pub fn linear_mismatch_approx(&self, omega_p: f64, delta: f64) -> Result<f64> {
        if self.handedness == Handedness::Right {
            return Err(Error::InvalidParameter(
                "small-band mismatch approximation is defined for left-handed lines".into(),
            ));
        }
        let (_, _) = sidebands(omega_p, delta)?;
        self.require_in_band(omega_p, "pump")?;
        let d2 = delta * delta;
        Ok(-(2.0 * self.omega_0() / omega_p) * d2 / (1.0 - d2) / self.a)
    }
}

/// Signal and idler frequencies for a dimensionless pump detuning,
/// `ws = wp (1 - delta)`, `wi = wp (1 + delta)`. Requires |delta| < 1 so
/// both sidebands stay at positive frequency.
pub fn sidebands(omega_p: f64, delta: f64) -> Result<(f64, f64)> {
    if !delta.is_finite() || delta.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "detuning must satisfy |delta| < 1, got {delta}"
        )));
    }
    Ok((omega_p * (1.0 - delta), omega_p * (1.0 + delta)))
}

/// Central-difference stencil for the m-th derivative with O(h^2) error:
/// offsets in units of h and matching coefficients. Even orders come from
/// the centered binomial difference; odd orders compose it with the
/// three-point first derivative.
fn central_stencil(m: usize) -> (Vec<f64>, Vec<f64>) {
    fn even_stencil(r: usize) -> Vec<f64> {
        // coefficients of delta^(2r) at offsets -r..=r
        let n = 2 * r;
        let mut c = vec![0.0; n + 1];
        for (i, slot) in c.iter_mut().enumerate() {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *slot = sign * binomial(n, i);
        }
        c.reverse(); // offset order -r..=r; symmetric anyway
        c
    }
    if m % 2 == 0 {
        let r = m / 2;
        let offsets: Vec<f64> = (-(r as i64)..=r as i64).map(|o| o as f64).collect();
        (offsets, even_stencil(r))
    } else {
        let r = (m - 1) / 2;
        let base = even_stencil(r); // offsets -r..=r
        let mut c = vec![0.0; base.len() + 2]; // offsets -(r+1)..=(r+1)
        for (j, b) in base.iter().enumerate() {
            c[j + 2] += 0.5 * b; // shifted +1
            c[j] -= 0.5 * b; // shifted -1
        }
        let w = r as i64 + 1;
        let offsets: Vec<f64> = (-w..=w).map(|o| o as f64).collect();
        (offsets, c)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::units::{ghz_to_rad, rad_to_ghz};
    use approx::assert_relative_eq;

    pub(crate) fn reference_left() -> LineParameters {
        LineParameters::with_josephson_i0(1.670e-9, 9.6e-15, 667e-15, 10e-6, Handedness::Left)
            .unwrap()
    }

    pub(crate) fn reference_right() -> LineParameters {
        LineParameters::with_josephson_i0(100e-12, 329e-15, 39e-15, 10e-6, Handedness::Right)
            .unwrap()
    }

    pub(crate) fn flat_band_left() -> LineParameters {
        LineParameters::with_josephson_i0(1.9894e-9, 88.4e-15, 795.8e-15, 10e-6, Handedness::Left)
            .unwrap()
    }

    #[test]
    fn derived_constants_match_reference_arithmetic() {
        let p = reference_left();
        assert_relative_eq!(rad_to_ghz(p.omega_j()), 39.749006621, max_relative = 1e-9);
        assert_relative_eq!(rad_to_ghz(p.omega_0()), 4.768688771, max_relative = 1e-9);
        assert_relative_eq!(p.z_c(), 50.037467221, max_relative = 1e-9);
        assert_relative_eq!(p.i_0, 0.197069448e-6, max_relative = 1e-9);

        let r = reference_right();
        assert_relative_eq!(rad_to_ghz(r.omega_j()), 27.747392829, max_relative = 1e-9);
        assert_relative_eq!(rad_to_ghz(r.omega_0()), 80.591238168, max_relative = 1e-9);
        assert_relative_eq!(r.z_c(), 50.636968354, max_relative = 1e-9);

        let f = flat_band_left();
        assert_relative_eq!(rad_to_ghz(f.omega_j()), 12.001428506, max_relative = 1e-9);
        assert_relative_eq!(rad_to_ghz(f.omega_0()), 3.999973438, max_relative = 1e-9);
        assert_relative_eq!(f.z_c(), 49.998743387, max_relative = 1e-9);
    }

    #[test]
    fn wavevector_reference_points() {
        let p = reference_left();
        let ka = |f_ghz: f64| p.wavevector(ghz_to_rad(f_ghz)).unwrap() * p.a;
        assert_relative_eq!(ka(7.5), 0.624404390265, max_relative = 1e-10);
        assert_relative_eq!(ka(5.25), 0.900364067426, max_relative = 1e-10);
        assert_relative_eq!(ka(9.75), 0.474154375342, max_relative = 1e-10);

        let f = flat_band_left();
        assert_relative_eq!(
            f.wavevector(ghz_to_rad(9.8)).unwrap() * f.a,
            0.235609532662,
            max_relative = 1e-10
        );

        let r = reference_right();
        assert_relative_eq!(
            r.wavevector(ghz_to_rad(7.5)).unwrap() * r.a,
            0.096660172115,
            max_relative = 1e-10
        );
    }

    #[test]
    fn wavevector_decreases_with_frequency_only_when_left_handed() {
        let p = reference_left();
        let r = reference_right();
        let mut prev_l = f64::INFINITY;
        let mut prev_r = 0.0;
        for i in 1..200 {
            let w = ghz_to_rad(0.2 + 39.0 * i as f64 / 200.0);
            let kl = p.wavevector(w).unwrap();
            assert!(kl < prev_l, "left-handed k must fall with frequency");
            prev_l = kl;
            if r.in_band(w) {
                let kr = r.wavevector(w).unwrap();
                assert!(kr > prev_r, "right-handed k must rise with frequency");
                prev_r = kr;
            }
        }
    }

    #[test]
    fn velocities_reference_points_and_signs() {
        let p = reference_left();
        let w = ghz_to_rad(7.5);
        let vw = p.phase_velocity(w).unwrap();
        let vg = p.group_velocity(w).unwrap();
        assert_relative_eq!(vw, 7.547014e5, max_relative = 1e-6);
        assert_relative_eq!(vg, -7.278328e5, max_relative = 1e-6);
        // |vg| = vw * (1 - w^2/wJ^2)
        let u2 = 1.0 - (w / p.omega_j()).powi(2);
        assert_relative_eq!(vg, -vw * u2, max_relative = 1e-12);

        let r = reference_right();
        assert!(r.phase_velocity(w).unwrap() > 0.0);
        assert!(r.group_velocity(w).unwrap() > 0.0);
    }

    #[test]
    fn group_velocity_matches_numeric_slope() {
        for p in [reference_left(), reference_right()] {
            for f_ghz in [3.0, 7.5, 12.0, 20.0] {
                let w = ghz_to_rad(f_ghz);
                if !p.in_band(w * 1.01) {
                    continue;
                }
                let h = 1e-6 * w;
                let slope =
                    (p.wavevector(w + h).unwrap() - p.wavevector(w - h).unwrap()) / (2.0 * h);
                assert_relative_eq!(
                    p.group_velocity(w).unwrap(),
                    1.0 / slope,
                    max_relative = 1e-8
                );
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_wavevector_differences() {
        // anchors D_1 and D_2 to the raw dispersion relation; orders three
        // and up are differenced off D_2 and inherit this anchor
        for p in [reference_left(), reference_right(), flat_band_left()] {
            for f_ghz in [3.0, 5.0, 7.5, 11.0, 20.0] {
                let w = ghz_to_rad(f_ghz);
                if !p.in_band(w * 1.5) {
                    continue;
                }
                let h = 1e-4 * w;
                let k = |x: f64| p.wavevector(x).unwrap();
                let d1 = (k(w + h) - k(w - h)) / (2.0 * h);
                let d2 = (k(w + h) - 2.0 * k(w) + k(w - h)) / (h * h);
                assert_relative_eq!(
                    p.dispersion_derivative(w, 1).unwrap(),
                    d1,
                    max_relative = 1e-6
                );
                assert_relative_eq!(
                    p.dispersion_derivative(w, 2).unwrap(),
                    d2,
                    max_relative = 1e-5
                );
            }
        }
    }

    #[test]
    fn extrapolated_third_order_tracks_the_curvature_slope() {
        for p in [reference_left(), reference_right()] {
            for f_ghz in [5.0, 12.0, 25.0] {
                let w = ghz_to_rad(f_ghz);
                if !p.in_band(w * 1.4) {
                    continue;
                }
                let h = 1e-4 * w;
                let d2 = |x: f64| p.dispersion_derivative(x, 2).unwrap();
                let slope = (d2(w + h) - d2(w - h)) / (2.0 * h);
                assert_relative_eq!(
                    p.dispersion_derivative(w, 3).unwrap(),
                    slope,
                    max_relative = 1e-6
                );
            }
        }
    }

    #[test]
    fn high_order_derivatives_keep_a_single_sign_above_the_zero_dispersion_point() {
        let p = reference_left();
        let wzd = p.zero_dispersion_frequency().unwrap();
        for m in [2usize, 4, 6, 8] {
            let above = p.dispersion_derivative(1.08 * wzd, m).unwrap();
            assert!(
                above < 0.0,
                "D_{m} above the zero-dispersion point should be negative, got {above:e}"
            );
        }
        assert!(p.dispersion_derivative(0.5 * wzd, 2).unwrap() > 0.0);
    }

    #[test]
    fn right_handed_curvature_is_positive_in_band() {
        let r = reference_right();
        for i in 1..40 {
            let w = r.band_limit() * i as f64 / 41.0;
            assert!(r.dispersion_derivative(w, 2).unwrap() > 0.0);
        }
        assert!(r.zero_dispersion_frequency().is_err());
    }

    #[test]
    fn zero_dispersion_frequency_reference_points() {
        let p = reference_left();
        assert_relative_eq!(
            rad_to_ghz(p.zero_dispersion_frequency().unwrap()),
            32.454928001,
            max_relative = 1e-9
        );
        let f = flat_band_left();
        assert_relative_eq!(
            rad_to_ghz(f.zero_dispersion_frequency().unwrap()),
            9.799125342,
            max_relative = 1e-9
        );
    }

    #[test]
    fn linear_mismatch_reference_point_and_parity() {
        let p = reference_left();
        let wp = ghz_to_rad(7.5);
        // 2 ka(7.5) - ka(5.25) - ka(9.75)
        let dkl_a = p.linear_mismatch(wp, 0.3).unwrap() * p.a;
        assert_relative_eq!(
            dkl_a,
            2.0 * 0.624404390265 - 0.900364067426 - 0.474154375342,
            max_relative = 1e-9
        );
        for d in [0.05, 0.2, 0.6] {
            assert_relative_eq!(
                p.linear_mismatch(wp, d).unwrap(),
                p.linear_mismatch(wp, -d).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn small_band_approximation_tracks_the_exact_mismatch() {
        let p = reference_left();
        let wp = ghz_to_rad(5.0); // wp/wJ = 0.13, deep in the approximation regime
        for d in [0.02, 0.05, 0.1] {
            let exact = p.linear_mismatch(wp, d).unwrap();
            let approx = p.linear_mismatch_approx(wp, d).unwrap();
            assert_relative_eq!(exact, approx, max_relative = 0.05);
        }
        assert!(reference_right().linear_mismatch_approx(wp, 0.1).is_err());
    }

    #[test]
    fn band_edges_are_rejected() {
        let p = reference_left();
        let wj = p.omega_j();
        assert!(matches!(
            p.wavevector(wj * (1.0 - 0.5e-6)),
            Err(Error::OutOfBand(_))
        ));
        assert!(matches!(p.wavevector(wj * 1.1), Err(Error::OutOfBand(_))));
        assert!(matches!(
            p.wavevector(-1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(p.wavevector(0.0), Err(Error::InvalidParameter(_))));
        // mismatch guards both sidebands
        assert!(p.linear_mismatch(ghz_to_rad(25.0), 0.7).is_err());
    }

    #[test]
    fn invalid_cell_values_are_rejected() {
        assert!(LineParameters::new(0.0, 1e-15, 1e-15, 1e-6, 1e-6, Handedness::Left).is_err());
        assert!(
            LineParameters::new(1e-9, -1e-15, 1e-15, 1e-6, 1e-6, Handedness::Left).is_err()
        );
        assert!(
            LineParameters::new(1e-9, 1e-15, 1e-15, 1e-6, f64::NAN, Handedness::Left).is_err()
        );
    }
}
