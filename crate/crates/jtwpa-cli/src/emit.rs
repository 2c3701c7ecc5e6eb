//! Result bundle and the artifact writers: curve CSVs with pinned headers
//! and the structured summary document.
//!
//! Everything a run computes lands in a [`ResultBundle`] first and is only
//! then written out, so a failing analysis leaves no files behind. The CSV
//! payload is deterministic; the summary carries the one timestamp.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::Format;
use crate::error::CliError;
use jtwpa::depletion::CompressionAnalysis;
use jtwpa::lattice::WavevectorFit;
use jtwpa::mixing::GainPoint;
use jtwpa::units::rad_to_ghz;

pub struct ResultBundle {
    pub summary: SummaryDoc,
    pub curves: Vec<Curve>,
}

pub struct Curve {
    /// Output file stem; `<name>.csv` in the output directory.
    pub name: String,
    pub data: CurveData,
}

pub enum CurveData {
    /// Gain sweep over detuning or signal frequency. `cell` is the lattice
    /// period, for the per-cell columns.
    Gain { cell: f64, points: Vec<GainPoint> },
    Dispersion(Vec<DispersionRow>),
    Compression(CompressionAnalysis),
    Oracle(Vec<WavevectorFit>),
    Classify { cell: f64, rows: Vec<ClassifyRow> },
}

pub struct DispersionRow {
    pub omega: f64,
    pub k_per_cell: f64,
    pub v_phase: f64,
    pub v_group: f64,
    pub d1: f64,
    pub d2: f64,
}

pub struct ClassifyRow {
    pub delta: f64,
    pub omega_signal: f64,
    pub dk_linear: f64,
    pub dk_nonlinear: f64,
    pub compensating: bool,
}

/// Top-level structured summary, mirrored into `summary.json`. Every
/// quantitative entry is recomputable from the emitted curves.
#[derive(Debug, Serialize)]
pub struct SummaryDoc {
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub timestamp: String,
    /// Worker thread request; 0 means the library picked (all cores).
    pub threads: usize,
    #[serde(rename = "f_zd_GHz", skip_serializing_if = "Option::is_none")]
    pub f_zd_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub curves: Vec<CurveSummary>,
}

#[derive(Debug, Default, Serialize)]
pub struct CurveSummary {
    pub label: String,
    pub rows: usize,
    #[serde(rename = "f_pump_GHz", skip_serializing_if = "Option::is_none")]
    pub f_pump_ghz: Option<f64>,
    #[serde(rename = "f_pumps_GHz", skip_serializing_if = "Option::is_none")]
    pub f_pumps_ghz: Option<[f64; 2]>,
    #[serde(rename = "peak_gain_dB", skip_serializing_if = "Option::is_none")]
    pub peak_gain_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_at_peak: Option<f64>,
    #[serde(rename = "f_at_peak_GHz", skip_serializing_if = "Option::is_none")]
    pub f_at_peak_ghz: Option<f64>,
    /// Width of the band holding within 3 dB of the peak.
    #[serde(rename = "bw_3dB_GHz", skip_serializing_if = "Option::is_none")]
    pub bw_3db_ghz: Option<f64>,
    /// Edges of the widest band holding at or above 20 dB.
    #[serde(rename = "band_20dB_GHz", skip_serializing_if = "Option::is_none")]
    pub band_20db_ghz: Option<[f64; 2]>,
    #[serde(rename = "bw_20dB_GHz", skip_serializing_if = "Option::is_none")]
    pub bw_20db_ghz: Option<f64>,
    /// Detuning a compression sweep ran at.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(rename = "small_signal_gain_dB", skip_serializing_if = "Option::is_none")]
    pub small_signal_gain_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub one_db_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_rel_error_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_squared_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Writes the bundle under `dir` and returns the file names written.
pub fn write_bundle(
    bundle: &ResultBundle,
    dir: &Path,
    format: Format,
    verbose: bool,
) -> Result<Vec<String>, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    if format.wants_csv() {
        for curve in &bundle.curves {
            let file = format!("{}.csv", curve.name);
            write_csv(&dir.join(&file), &curve.data)?;
            if verbose {
                eprintln!("wrote {}", dir.join(&file).display());
            }
            written.push(file);
        }
    }
    if format.wants_structured() {
        let path = dir.join("summary.json");
        let mut text = serde_json::to_string_pretty(&bundle.summary)
            .map_err(|e| CliError::Io(format!("cannot encode summary: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        if verbose {
            eprintln!("wrote {}", path.display());
        }
        written.push("summary.json".to_string());
    }
    Ok(written)
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("cannot write {}: {e}", path.display()))
}

fn write_csv(path: &Path, data: &CurveData) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    fill_csv(&mut w, data).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

fn fill_csv(w: &mut impl Write, data: &CurveData) -> std::io::Result<()> {
    match data {
        CurveData::Gain { cell, points } => {
            writeln!(
                w,
                "delta,f_signal_GHz,dkl_per_cell,dknl_per_cell,dk_per_cell,\
                 g_per_cell_re,g_per_cell_im,gain_cis_dB,gain_trans_dB,phase_rad"
            )?;
            for p in points {
                writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                    p.delta,
                    rad_to_ghz(p.omega_signal),
                    p.dk_linear * cell,
                    p.dk_nonlinear * cell,
                    p.dk_total * cell,
                    p.g.re * cell,
                    p.g.im * cell,
                    p.gain_cis_db(),
                    p.gain_trans_db(),
                    p.phase,
                )?;
            }
        }
        CurveData::Dispersion(rows) => {
            writeln!(
                w,
                "f_GHz,k_per_cell,phase_velocity_m_per_s,group_velocity_m_per_s,\
                 d1_s_per_m,d2_s2_per_m"
            )?;
            for r in rows {
                writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                    rad_to_ghz(r.omega),
                    r.k_per_cell,
                    r.v_phase,
                    r.v_group,
                    r.d1,
                    r.d2,
                )?;
            }
        }
        CurveData::Compression(analysis) => {
            writeln!(w, "signal_ratio,gain_dB,pump_depletion")?;
            for p in &analysis.points {
                writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e}",
                    p.signal_ratio, p.gain_db, p.pump_depletion
                )?;
            }
        }
        CurveData::Oracle(fits) => {
            writeln!(
                w,
                "f_GHz,k_fit_per_m,k_continuum_per_m,k_discrete_per_m,\
                 rel_error,r_squared,reflection_estimate"
            )?;
            for f in fits {
                writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                    rad_to_ghz(f.omega),
                    f.k,
                    f.continuum_k,
                    f.discrete_k,
                    (f.k.abs() - f.continuum_k) / f.continuum_k,
                    f.r_squared,
                    f.reflection_estimate,
                )?;
            }
        }
        CurveData::Classify { cell, rows } => {
            writeln!(w, "delta,f_signal_GHz,dkl_per_cell,dknl_per_cell,compensating")?;
            for r in rows {
                writeln!(
                    w,
                    "{:.12e},{:.12e},{:.12e},{:.12e},{}",
                    r.delta,
                    rad_to_ghz(r.omega_signal),
                    r.dk_linear * cell,
                    r.dk_nonlinear * cell,
                    u8::from(r.compensating),
                )?;
            }
        }
    }
    Ok(())
}

/// Current UTC time, RFC 3339, whole seconds.
pub fn rfc3339_now() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    rfc3339_utc(secs)
}

fn rfc3339_utc(secs: u64) -> String {
    let (days, rem) = (secs / 86_400, secs % 86_400);
    let (h, m, s) = (rem / 3600, (rem % 3600) / 60, rem % 60);
    // civil-from-days on the proleptic Gregorian calendar, era by era
    let z = days as i64 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + i64::from(month <= 2);
    format!("{year:04}-{month:02}-{day:02}T{h:02}:{m:02}:{s:02}Z")
}
