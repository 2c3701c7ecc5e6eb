//! Design and simulation toolkit for Josephson traveling-wave parametric
//! amplifiers built on left-handed (backward-wave) discrete transmission
//! lines, with right-handed lines supported as a comparison baseline.
//!
//! A left-handed Josephson transmission line is a ladder of series
//! capacitors `C` loaded at every node by a Josephson junction (inductance
//! `L_J` shunted by its self-capacitance `C_J`). Such a line propagates
//! backward waves: phase and energy travel in opposite directions, the
//! wavevector falls with frequency, and the quadratic nonlinearity of the
//! junctions phase-matches four-wave mixing over a broad band below the
//! zero-dispersion frequency `sqrt(2/3) * omega_J`.
//!
//! The crate is organized around that physics:
//!
//! * [`line`]: single-tone properties of the cold line. Wavevector, phase
//!   and group velocity, dispersion derivatives, zero-dispersion point,
//!   linear phase mismatch.
//! * [`mixing`]: degenerate-pump four-wave mixing in the stiff-pump limit.
//!   Coupled-mode coefficients, total mismatch, parametric gain rate,
//!   closed-form gain at length, detuning sweeps, quadrant classification.
//! * [`double_pump`]: two-pump operation with the pumps placed
//!   symmetrically about the zero-dispersion frequency, giving a flat,
//!   wideband gain profile.
//! * [`depletion`]: numerical integration of the full four-tone coupled
//!   amplitude equations, including pump depletion, for saturation and
//!   compression analysis.
//! * [`lattice`]: an independent time-domain oracle. The discrete lattice
//!   equations of motion are stepped directly and tones are extracted from
//!   the steady state, validating the frequency-domain model with no shared
//!   code path.
//!
//! All quantities are strict SI internally (H, F, m, s, rad/s, A, Wb).
//! Unit conversion belongs at the boundary; see [`units`].
//!
//! With the default `parallel` feature the sweep drivers fan work across a
//! rayon thread pool; disabling it yields a dependency-free sequential
//! build with identical results and ordering.

pub mod depletion;
pub mod double_pump;
mod error;
mod exec;
pub mod lattice;
pub mod line;
pub mod mixing;
mod ode;
pub mod units;

pub use error::{Error, Result};
pub use line::{Handedness, LineParameters};
pub use mixing::PumpDrive;

/// Complex amplitude type used throughout the coupled-mode layer.
pub type C64 = num_complex::Complex64;
