//! Pump depletion and gain compression: the four-tone coupled-mode system
//! beyond the undepleted-pump approximation.
//!
//! The degenerate pump is split into two slots so every tone obeys the
//! same first-order equation. Slots 1 and 2 carry the pump, slot 3 the
//! idler at `wp (1 + delta)`, slot 4 the signal at `wp (1 - delta)`:
//!
//! ```text
//! dA1/dx = i b1 conj(A2) A3 A4 e^{-i dkL x}
//!        + i A1 [ (2/3)(a11 |A1|^2 + a12 |A2|^2) + a13 |A3|^2 + a14 |A4|^2 ]
//! dA3/dx = i b3 conj(A4) A1 A2 e^{+i dkL x}
//!        + i A3 [ a31 |A1|^2 + a32 |A2|^2 + a33 |A3|^2 + a34 |A4|^2 ]
//! ```
//!
//! (slot 2 mirrors slot 1, slot 4 mirrors slot 3), with raw coefficients
//!
//! ```text
//! a_mn = (2 - delta_mn) w_m / (16 I0^2 LJ^2 v_g(w_m))
//! b_m  =                w_m / ( 8 I0^2 LJ^2 v_g(w_m))
//! ```
//!
//! The 2/3 factor on the pump-pair Kerr block compensates the double
//! counting introduced by splitting one physical tone across two slots;
//! with it, the small-signal limit of this system reproduces the closed
//! form in [`crate::mixing`] exactly.
//!
//! Flux amplitudes are of order `Ip Zc / wp ~ 1e-16` Wb, far below any
//! useful absolute tolerance, so the integrator works on amplitudes
//! normalised by the pump slot scale `Ip Zc / (sqrt(2) wp)`; the stated
//! tolerances in [`IntegrationSettings`] apply to that order-unity state.
//! Trajectories are reported back in physical flux units.
//!
//! Everything here is specific to the left-handed ladder: the coefficient
//! normalisation ties flux amplitude to junction current through the shunt
//! topology. Right-handed parameters are rejected.

use crate::line::{sidebands, Handedness, LineParameters};
use crate::mixing::{gain_at_length, peak_detuning, PumpDrive};
use crate::ode::{self, Node, OdeError, StepControl};
use crate::{exec::map_ordered, units::db, Error, Result, C64};

/// Kerr double-counting compensation for the two slots sharing one
/// physical pump.
const PUMP_BLOCK_KERR: f64 = 2.0 / 3.0;

/// Detunings below this are rejected: the slot bookkeeping needs the
/// sidebands spectrally distinct from the pump.
const MIN_DETUNING: f64 = 1e-6;

/// Error control for the coupled-mode integration. Tolerances apply to
/// the normalised (order-unity) amplitudes.
#[derive(Debug, Clone, Copy)]
pub struct IntegrationSettings {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

impl IntegrationSettings {
    fn validate(&self) -> Result<()> {
        if !(self.rtol.is_finite() && self.rtol > 0.0 && self.atol.is_finite() && self.atol > 0.0)
        {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive, got rtol {:e}, atol {:e}",
                self.rtol, self.atol
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be nonzero".into()));
        }
        Ok(())
    }

    fn control(&self) -> StepControl {
        StepControl {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
        }
    }
}

/// Raw coupled-mode coefficients for the four slots, in mixed flux/metre
/// units: `alpha[m][n] * |A_n|^2` and `beta[m] * |A|^2` are rates in
/// rad/m when `A` is a flux amplitude in Wb.
#[derive(Debug, Clone, Copy)]
pub struct DepletionCoefficients {
    /// Slot frequencies `[wp, wp, wp(1+delta), wp(1-delta)]`, rad/s.
    pub omega: [f64; 4],
    pub alpha: [[f64; 4]; 4],
    pub beta: [f64; 4],
    /// Cold-line mismatch `k1 + k2 - k3 - k4`, rad/m.
    pub dk_linear: f64,
}

fn check_left_handed(params: &LineParameters) -> Result<()> {
    if params.handedness == Handedness::Right {
        return Err(Error::InvalidParameter(
            "depletion model is defined for the left-handed ladder only".into(),
        ));
    }
    Ok(())
}

/// Evaluates the raw slot coefficients for a pump/detuning pair.
pub fn depletion_coefficients(
    params: &LineParameters,
    pump: &PumpDrive,
    delta: f64,
) -> Result<DepletionCoefficients> {
    check_left_handed(params)?;
    if delta.abs() < MIN_DETUNING {
        return Err(Error::InvalidParameter(format!(
            "detuning must be at least {MIN_DETUNING:e} in magnitude for the four-slot model, got {delta:e}"
        )));
    }
    let (omega_s, omega_i) = sidebands(pump.omega, delta)?;
    let omega = [pump.omega, pump.omega, omega_i, omega_s];
    for (label, w) in [("pump", pump.omega), ("idler", omega_i), ("signal", omega_s)] {
        params.require_in_band(w, label)?;
    }
    let denom = 16.0 * params.i_0.powi(2) * params.l_j.powi(2);
    let mut alpha = [[0.0; 4]; 4];
    let mut beta = [0.0; 4];
    for m in 0..4 {
        let rate = omega[m] / (denom * params.group_velocity(omega[m])?);
        for n in 0..4 {
            alpha[m][n] = if m == n { rate } else { 2.0 * rate };
        }
        beta[m] = 2.0 * rate;
    }
    let k = |w: f64| params.wavevector(w);
    let dk_linear = k(omega[0])? + k(omega[1])? - k(omega[2])? - k(omega[3])?;
    Ok(DepletionCoefficients {
        omega,
        alpha,
        beta,
        dk_linear,
    })
}

/// Four-tone evolution along the line, in physical flux amplitudes (Wb)
/// at the accepted solver nodes.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Slot frequencies, as in [`DepletionCoefficients::omega`].
    pub omega: [f64; 4],
    /// Positions of the accepted nodes, m; first is 0, last is the
    /// requested length for a completed run.
    pub positions: Vec<f64>,
    /// Slot amplitudes at each node.
    pub amplitudes: Vec<[C64; 4]>,
}

impl Trajectory {
    pub fn start(&self) -> &[C64; 4] {
        self.amplitudes.first().expect("trajectory is never empty")
    }

    pub fn end(&self) -> &[C64; 4] {
        self.amplitudes.last().expect("trajectory is never empty")
    }

    /// Signal power gain `|A4(end)/A4(0)|^2` in dB.
    pub fn signal_gain_db(&self) -> f64 {
        db(self.end()[3].norm_sqr() / self.start()[3].norm_sqr())
    }

    /// Idler power out over signal power in, dB.
    pub fn conversion_gain_db(&self) -> f64 {
        db(self.end()[2].norm_sqr() / self.start()[3].norm_sqr())
    }

    /// Fraction of the pump power given up along the line.
    pub fn pump_depletion(&self) -> f64 {
        let p0 = self.start()[0].norm_sqr() + self.start()[1].norm_sqr();
        let p1 = self.end()[0].norm_sqr() + self.end()[1].norm_sqr();
        1.0 - p1 / p0
    }
}

fn trajectory_from_nodes(omega: [f64; 4], scale: f64, nodes: &[Node<4>]) -> Trajectory {
    Trajectory {
        omega,
        positions: nodes.iter().map(|n| n.x).collect(),
        amplitudes: nodes
            .iter()
            .map(|n| {
                let mut a = n.y;
                for slot in &mut a {
                    *slot *= scale;
                }
                a
            })
            .collect(),
    }
}

/// Integrates the four-slot system from caller-supplied physical initial
/// amplitudes (Wb) over `length` metres.
pub fn propagate_amplitudes(
    params: &LineParameters,
    pump: &PumpDrive,
    delta: f64,
    initial: [C64; 4],
    length: f64,
    settings: &IntegrationSettings,
) -> Result<Trajectory> {
    settings.validate()?;
    if !length.is_finite() || length <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "propagation length must be positive, got {length:e} m"
        )));
    }
    let co = depletion_coefficients(params, pump, delta)?;
    let scale = pump_slot_amplitude(params, pump);
    // normalised coefficients: cubic terms pick up scale^2
    let s2 = scale * scale;
    let mut alpha = co.alpha;
    for row in &mut alpha {
        for v in row.iter_mut() {
            *v *= s2;
        }
    }
    let beta = [
        co.beta[0] * s2,
        co.beta[1] * s2,
        co.beta[2] * s2,
        co.beta[3] * s2,
    ];
    let dk = co.dk_linear;
    let y0 = [
        initial[0] / scale,
        initial[1] / scale,
        initial[2] / scale,
        initial[3] / scale,
    ];

    let rhs = move |x: f64, y: &[C64; 4]| -> [C64; 4] {
        let p = [
            y[0].norm_sqr(),
            y[1].norm_sqr(),
            y[2].norm_sqr(),
            y[3].norm_sqr(),
        ];
        let rot = C64::from_polar(1.0, dk * x); // e^{+i dkL x}
        let i = C64::new(0.0, 1.0);
        let kerr = |m: usize| -> f64 {
            if m < 2 {
                PUMP_BLOCK_KERR * (alpha[m][0] * p[0] + alpha[m][1] * p[1])
                    + alpha[m][2] * p[2]
                    + alpha[m][3] * p[3]
            } else {
                alpha[m][0] * p[0] + alpha[m][1] * p[1] + alpha[m][2] * p[2] + alpha[m][3] * p[3]
            }
        };
        [
            i * (beta[0] * y[1].conj() * y[2] * y[3] * rot.conj() + kerr(0) * y[0]),
            i * (beta[1] * y[0].conj() * y[2] * y[3] * rot.conj() + kerr(1) * y[1]),
            i * (beta[2] * y[3].conj() * y[0] * y[1] * rot + kerr(2) * y[2]),
            i * (beta[3] * y[2].conj() * y[0] * y[1] * rot + kerr(3) * y[3]),
        ]
    };

    match ode::integrate(rhs, 0.0, length, y0, &settings.control()) {
        Ok(nodes) => Ok(trajectory_from_nodes(co.omega, scale, &nodes)),
        Err(OdeError::StepsExhausted { max_steps, x, nodes }) => Err(Error::StepsExhausted {
            max_steps,
            x,
            partial: Box::new(trajectory_from_nodes(co.omega, scale, &nodes)),
        }),
        Err(OdeError::NotFinite { x }) => Err(Error::Numeric(format!(
            "coupled-mode state stopped being finite at x = {x:.6e} m"
        ))),
    }
}

/// Flux amplitude of one pump slot, `Ip Zc / (sqrt(2) wp)`, Wb. The two
/// slots together carry the full pump drive.
pub fn pump_slot_amplitude(params: &LineParameters, pump: &PumpDrive) -> f64 {
    pump.current * params.z_c() / (std::f64::consts::SQRT_2 * pump.omega)
}

/// Flux amplitude of the whole pump envelope, `Ip Zc / wp`, Wb. Signal
/// drives are specified relative to this.
pub fn pump_envelope_amplitude(params: &LineParameters, pump: &PumpDrive) -> f64 {
    pump.current * params.z_c() / pump.omega
}

/// Depleted-pump gain figures for one signal drive level.
#[derive(Debug, Clone)]
pub struct DepletedGain {
    /// Signal input amplitude as a fraction of the pump envelope.
    pub signal_ratio: f64,
    pub gain_db: f64,
    pub conversion_db: f64,
    pub pump_depletion: f64,
    pub trajectory: Trajectory,
}

/// Propagates a signal of the given relative drive (`A4(0) =
/// signal_ratio * Ip Zc / wp`, idler dark) and reports the depleted gain.
pub fn gain_with_depletion(
    params: &LineParameters,
    pump: &PumpDrive,
    delta: f64,
    signal_ratio: f64,
    length: f64,
    settings: &IntegrationSettings,
) -> Result<DepletedGain> {
    if !signal_ratio.is_finite() || signal_ratio <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "signal ratio must be positive, got {signal_ratio:e}"
        )));
    }
    let slot = pump_slot_amplitude(params, pump);
    let initial = [
        C64::new(slot, 0.0),
        C64::new(slot, 0.0),
        C64::new(0.0, 0.0),
        C64::new(signal_ratio * pump_envelope_amplitude(params, pump), 0.0),
    ];
    let trajectory = propagate_amplitudes(params, pump, delta, initial, length, settings)?;
    Ok(DepletedGain {
        signal_ratio,
        gain_db: trajectory.signal_gain_db(),
        conversion_db: trajectory.conversion_gain_db(),
        pump_depletion: trajectory.pump_depletion(),
        trajectory,
    })
}

/// One point of a drive sweep: the trajectory is dropped to keep sweeps
/// light.
#[derive(Debug, Clone, Copy)]
pub struct CompressionPoint {
    pub signal_ratio: f64,
    pub gain_db: f64,
    pub pump_depletion: f64,
}

/// Gain-versus-drive characterisation at fixed detuning.
#[derive(Debug, Clone)]
pub struct CompressionAnalysis {
    /// Detuning the sweep ran at.
    pub delta: f64,
    /// Undepleted-pump reference gain from the closed form, dB.
    pub small_signal_gain_db: f64,
    pub points: Vec<CompressionPoint>,
    /// Signal ratio where the gain first falls 1 dB below the small-signal
    /// value, interpolated between grid points; `None` if the sweep never
    /// crosses it. Past this point the four-tone exchange turns
    /// oscillatory and the gain is no longer monotone in the drive.
    pub one_db_ratio: Option<f64>,
}

/// Logarithmic default drive grid for compression sweeps.
pub fn default_ratio_grid() -> Vec<f64> {
    let (lo, hi, n) = (1e-3f64, 0.5f64, 41);
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Sweeps the signal drive at one detuning and locates the 1 dB
/// compression point. `delta = None` uses the phase-matched detuning of
/// the line. Points run in parallel under the `parallel` feature.
pub fn compression_analysis(
    params: &LineParameters,
    pump: &PumpDrive,
    delta: Option<f64>,
    length: f64,
    ratios: &[f64],
    settings: &IntegrationSettings,
) -> Result<CompressionAnalysis> {
    check_left_handed(params)?;
    let delta = match delta {
        Some(d) => d,
        None => peak_detuning(params, pump)?.exact.ok_or_else(|| {
            Error::InvalidParameter(
                "line has no phase-matched detuning here; pass an explicit delta".into(),
            )
        })?,
    };
    if ratios.len() < 2 {
        return Err(Error::InvalidParameter(
            "compression sweep needs at least two drive ratios".into(),
        ));
    }
    for w in ratios.windows(2) {
        if !(w[0] > 0.0 && w[1] > w[0]) {
            return Err(Error::InvalidParameter(
                "drive ratios must be positive and strictly increasing".into(),
            ));
        }
    }

    let small_signal_gain_db = gain_at_length(params, pump, delta, length)?.gain_cis_db();
    let runs = map_ordered(ratios, |&r| {
        gain_with_depletion(params, pump, delta, r, length, settings)
    });
    let mut points = Vec::with_capacity(ratios.len());
    for run in runs {
        let run = run?;
        points.push(CompressionPoint {
            signal_ratio: run.signal_ratio,
            gain_db: run.gain_db,
            pump_depletion: run.pump_depletion,
        });
    }

    let threshold = small_signal_gain_db - 1.0;
    let mut one_db_ratio = None;
    if points[0].gain_db > threshold {
        for w in points.windows(2) {
            if w[1].gain_db <= threshold {
                let (r0, g0) = (w[0].signal_ratio.ln(), w[0].gain_db);
                let (r1, g1) = (w[1].signal_ratio.ln(), w[1].gain_db);
                one_db_ratio = Some((r0 + (threshold - g0) * (r1 - r0) / (g1 - g0)).exp());
                break;
            }
        }
    }

    Ok(CompressionAnalysis {
        delta,
        small_signal_gain_db,
        points,
        one_db_ratio,
    })
}
