//! Command dispatch: resolves configs, drives the analysis library, and
//! assembles result bundles for the emitters. All computation happens
//! before any file is touched.

use std::path::PathBuf;
use std::time::Instant;

use crate::config::{self, Format, RunConfig, SinglePump, Sweep};
use crate::emit::{
    self, ClassifyRow, Curve, CurveData, CurveSummary, DispersionRow, ResultBundle, SummaryDoc,
};
use crate::error::CliError;
use crate::{Cli, Command, FormatArg, PresetName};
use jtwpa::depletion::{self, IntegrationSettings};
use jtwpa::double_pump::{self, DoublePumpDrive};
use jtwpa::lattice::{self, DriveTone, LatticeConfig, Termination};
use jtwpa::line::sidebands;
use jtwpa::mixing::{self, GainPoint};
use jtwpa::units::rad_to_ghz;
use jtwpa::{Handedness, PumpDrive};

/// Fraction of the critical current used for the lattice oracle's probe
/// tone; small enough that the line responds linearly.
const ORACLE_DRIVE_RATIO: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AnalysisKind {
    Dispersion,
    Gain,
    Compression,
    DoublePump,
    Oracle,
    Classify,
}

impl AnalysisKind {
    fn name(self) -> &'static str {
        match self {
            AnalysisKind::Dispersion => "dispersion",
            AnalysisKind::Gain => "gain",
            AnalysisKind::Compression => "compression",
            AnalysisKind::DoublePump => "double-pump",
            AnalysisKind::Oracle => "oracle",
            AnalysisKind::Classify => "classify",
        }
    }
}

struct PresetRun {
    label: &'static str,
    kind: AnalysisKind,
    text: &'static str,
}

fn preset_runs(name: PresetName) -> &'static [PresetRun] {
    const FIG2: &[PresetRun] = &[
        PresetRun {
            label: "fig2_left",
            kind: AnalysisKind::Gain,
            text: include_str!("../presets/fig2_left.toml"),
        },
        PresetRun {
            label: "fig2_right",
            kind: AnalysisKind::Gain,
            text: include_str!("../presets/fig2_right.toml"),
        },
    ];
    const FIG3A: &[PresetRun] = &[PresetRun {
        label: "fig3a",
        kind: AnalysisKind::Gain,
        text: include_str!("../presets/fig3a.toml"),
    }];
    const FIG3B: &[PresetRun] = &[PresetRun {
        label: "fig3b",
        kind: AnalysisKind::Compression,
        text: include_str!("../presets/fig3b.toml"),
    }];
    const FIG4: &[PresetRun] = &[PresetRun {
        label: "fig4",
        kind: AnalysisKind::DoublePump,
        text: include_str!("../presets/fig4.toml"),
    }];
    match name {
        PresetName::Fig2 => FIG2,
        PresetName::Fig3a => FIG3A,
        PresetName::Fig3b => FIG3B,
        PresetName::Fig4 => FIG4,
    }
}

fn preset_token(name: PresetName) -> &'static str {
    match name {
        PresetName::Fig2 => "fig2",
        PresetName::Fig3a => "fig3a",
        PresetName::Fig3b => "fig3b",
        PresetName::Fig4 => "fig4",
    }
}

fn kind_of(command: &Command) -> AnalysisKind {
    match command {
        Command::Dispersion => AnalysisKind::Dispersion,
        Command::Gain => AnalysisKind::Gain,
        Command::Compression => AnalysisKind::Compression,
        Command::DoublePump => AnalysisKind::DoublePump,
        Command::Oracle => AnalysisKind::Oracle,
        Command::Classify => AnalysisKind::Classify,
        Command::Preset { .. } => unreachable!("presets dispatch through preset_runs"),
    }
}

/// Summary fields that live above the per-curve entries.
#[derive(Default)]
struct Extra {
    f_zd_ghz: Option<f64>,
    quadrant: Option<String>,
    verdict: Option<String>,
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let threads = setup_threads(cli)?;

    let (command_name, runs) = match &cli.command {
        Command::Preset { name } => {
            let runs = preset_runs(*name)
                .iter()
                .map(|r| {
                    let cfg = config::load(r.text, &format!("preset {}", r.label))?;
                    Ok((r.label.to_string(), cfg, r.kind))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            (format!("preset {}", preset_token(*name)), runs)
        }
        other => {
            let kind = kind_of(other);
            let path = cli.config.as_ref().ok_or_else(|| {
                CliError::Config(format!("the {} command needs --config PATH", kind.name()))
            })?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            let cfg = config::load(&text, &path.display().to_string())?;
            (
                kind.name().to_string(),
                vec![(kind.name().to_string(), cfg, kind)],
            )
        }
    };

    let mut curves = Vec::new();
    let mut summaries = Vec::new();
    let mut extra = Extra::default();
    let mut hash_text = String::new();
    for (label, cfg, kind) in &runs {
        if cli.verbose {
            eprintln!("{label}: config hash {}", cfg.hash);
        }
        let t0 = Instant::now();
        run_analysis(*kind, cfg, label, &mut curves, &mut summaries, &mut extra)?;
        if cli.verbose {
            eprintln!("{label}: computed in {:.2} s", t0.elapsed().as_secs_f64());
        }
        hash_text.push_str(&cfg.hash);
    }
    let config_hash = if runs.len() == 1 {
        runs[0].1.hash.clone()
    } else {
        config::digest16(&hash_text)
    };

    let first = &runs[0].1;
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&first.output.dir));
    let format = match cli.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Structured) => Format::Structured,
        None => first.output.format,
    };

    let bundle = ResultBundle {
        summary: SummaryDoc {
            version: env!("CARGO_PKG_VERSION"),
            command: command_name.clone(),
            config_hash,
            timestamp: emit::rfc3339_now(),
            threads,
            f_zd_ghz: extra.f_zd_ghz,
            quadrant: extra.quadrant,
            verdict: extra.verdict,
            curves: summaries,
        },
        curves,
    };
    let written = emit::write_bundle(&bundle, &dir, format, cli.verbose)?;
    println!(
        "{command_name}: wrote {} to {}",
        written.join(", "),
        dir.display()
    );
    Ok(())
}

/// Applies `--threads`, then `JTWPA_THREADS`, to the global worker pool.
/// Returns the recorded request; 0 means "library default".
fn setup_threads(cli: &Cli) -> Result<usize, CliError> {
    let n = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var("JTWPA_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| {
                CliError::Config(format!(
                    "JTWPA_THREADS must be a nonnegative integer, got {v:?}"
                ))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n > 0 {
            // the global pool can only be installed once; a later failure
            // means an earlier installation already decided, which is fine
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    Ok(n.unwrap_or(0))
}

fn run_analysis(
    kind: AnalysisKind,
    cfg: &RunConfig,
    label: &str,
    curves: &mut Vec<Curve>,
    summaries: &mut Vec<CurveSummary>,
    extra: &mut Extra,
) -> Result<(), CliError> {
    if cfg.line.handedness == Handedness::Left && extra.f_zd_ghz.is_none() {
        extra.f_zd_ghz = Some(rad_to_ghz(cfg.line.zero_dispersion_frequency()?));
    }
    match kind {
        AnalysisKind::Dispersion => run_dispersion(cfg, label, curves, summaries),
        AnalysisKind::Gain => run_gain(cfg, label, curves, summaries),
        AnalysisKind::Compression => run_compression(cfg, label, curves, summaries),
        AnalysisKind::DoublePump => run_double_pump(cfg, label, curves, summaries),
        AnalysisKind::Oracle => run_oracle(cfg, label, curves, summaries),
        AnalysisKind::Classify => run_classify(cfg, label, curves, summaries, extra),
    }
}

fn run_dispersion(
    cfg: &RunConfig,
    label: &str,
    curves: &mut Vec<Curve>,
    summaries: &mut Vec<CurveSummary>,
) -> Result<(), CliError> {
    let grid = match cfg.sweep {
        Sweep::Frequency { min, max, points } => linspace(min, max, points.unwrap_or(501))?,
        Sweep::Points(n) => default_band_grid(cfg, n)?,
        Sweep::Unspecified => default_band_grid(cfg, 501)?,
        Sweep::Delta { .. } => {
            return Err(CliError::Config(
                "the dispersion command sweeps frequency; use [sweep].f_min_GHz/f_max_GHz"
                    .into(),
            ))
        }
    };
    let rows = grid
        .iter()
        .map(|&w| {
            Ok(DispersionRow {
                omega: w,
                k_per_cell: cfg.line.wavevector(w)? * cfg.line.a,
                v_phase: cfg.line.phase_velocity(w)?,
                v_group: cfg.line.group_velocity(w)?,
                d1: cfg.line.dispersion_derivative(w, 1)?,
                d2: cfg.line.dispersion_derivative(w, 2)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    summaries.push(CurveSummary {
        label: label.to_string(),
        rows: rows.len(),
        ..Default::default()
    });
    curves.push(Curve {
        name: label.to_string(),
        data: CurveData::Dispersion(rows),
    });
    Ok(())
}

/// Default dispersion grid: the propagating band, starting a few percent
/// up because the left-handed wavevector diverges toward zero frequency.
fn default_band_grid(cfg: &RunConfig, n: usize) -> Result<Vec<f64>, CliError> {
    let lo = 0.05 * cfg.line.omega_j();
    let hi = cfg.line.band_limit() * (1.0 - 1e-6);
    linspace(lo, hi, n)
}

fn run_gain(
    cfg: &RunConfig,
    label: &str,
    curves: &mut Vec<Curve>,
    summaries: &mut Vec<CurveSummary>,
) -> Result<(), CliError> {
    let spec = need_pump(cfg, "gain")?;
    let x = length(cfg, "gain")?;
    let multi = spec.omegas.len() > 1;
    for &omega in &spec.omegas {
        let pump = PumpDrive::from_ratio(omega, spec.ratio, &cfg.line)?;
        let deltas = delta_grid(cfg, &pump, 2001, "gain")?;
        let points = mixing::gain_sweep(&cfg.line, &pump, &deltas, x)?;
        let name = curve_label(label, multi, omega);
        summaries.push(gain_summary(&name, Some(rad_to_ghz(omega)), None, &points));
        curves.push(Curve {
            name,
            data: CurveData::Gain {
                cell: cfg.line.a,
                points,
            },
        });
    }
    Ok(())
}

fn run_double_pump(
    cfg: &RunConfig,
    label: &str,
    curves: &mut Vec<Curve>,
    summaries: &mut Vec<CurveSummary>,
) -> Result<(), CliError> {
    let dp = cfg.double_pump.ok_or_else(|| {
        CliError::Config("the double-pump command needs a [double_pump] section".into())
    })?;
    let x = length(cfg, "double-pump")?;
    let drive =
        DoublePumpDrive::from_ratios(&cfg.line, dp.omega_1, dp.ratio_1, dp.omega_2, dp.ratio_2)?;
    let omegas = match cfg.sweep {
        Sweep::Frequency { min, max, points } => linspace(min, max, points.unwrap_or(2001))?,
        Sweep::Points(n) => double_pump::default_signal_grid(&cfg.line, &drive, n)?,
        Sweep::Unspecified => double_pump::default_signal_grid(&cfg.line, &drive, 2001)?,
        Sweep::Delta { .. } => {
            return Err(CliError::Config(
                "the double-pump command sweeps signal frequency; \
                 use [sweep].f_min_GHz/f_max_GHz"
                    .into(),
            ))
        }
    };
    let points = double_pump::gain_profile(&cfg.line, &drive, &omegas, x)?;
    summaries.push(gain_summary(
        label,
        None,
        Some([rad_to_ghz(dp.omega_1), rad_to_ghz(dp.omega_2)]),
        &points,
    ));
    curves.push(Curve {
        name: label.to_string(),
        data: CurveData::Gain {
            cell: cfg.line.a,
            points,
        },
    });
    Ok(())
}

fn run_compression(
    cfg: &RunConfig,
    label: &str,
    curves: &mut Vec<Curve>,
    summaries: &mut Vec<CurveSummary>,
) -> Result<(), CliError> {
    let spec = need_pump(cfg, "compression")?;
    let x = length(cfg, "compression")?;
    let settings = IntegrationSettings {
        rtol: cfg.solver.rtol,
        atol: cfg.solver.atol,
        max_steps: cfg.solver.max_steps,
    };
    let ratios = cfg
        .compression
        .ratios
        .clone()
        .unwrap_or_else(depletion::default_ratio_grid);
    let multi = spec.omegas.len() > 1;
    for &omega in &spec.omegas {
        let pump = PumpDrive::from_ratio(omega, spec.ratio, &cfg.line)?;
        let analysis = depletion::compression_analysis(
            &cfg.line,
            &pump,
            cfg.compression.delta,
            x,
            &ratios,
            &settings,
        )?;
        let name = curve_label(label, multi, omega);
        summaries.push(CurveSummary {
            label: name.clone(),
            rows: analysis.points.len(),
            f_pump_ghz: Some(rad_to_ghz(omega)),
            delta: Some(analysis.delta),
            small_signal_gain_db: Some(analysis.small_signal_gain_db),
            one_db_ratio: analysis.one_db_ratio,
            note: analysis
                .one_db_ratio
                .is_none()
                .then(|| "no 1 dB crossing inside the drive grid".to_string()),
            ..Default::default()
        });
        curves.push(Curve {
            name,
            data: CurveData::Compression(analysis),
        });
    }
    Ok(())
}

fn run_oracle(
    cfg: &RunConfig,
    label: &str,
    curves: &mut Vec<Curve>,
    summaries: &mut Vec<CurveSummary>,
) -> Result<(), CliError> {
    let cells = need_cells(cfg, "oracle")?;
    let freqs = match cfg.sweep {
        Sweep::Frequency { min, max, points } => linspace(min, max, points.unwrap_or(3))?,
        _ => {
            return Err(CliError::Config(
                "the oracle command steps the full lattice per probe tone; \
                 give it explicit [sweep].f_min_GHz/f_max_GHz bounds (points defaults to 3)"
                    .into(),
            ))
        }
    };
    let config = LatticeConfig {
        cells: cells as usize,
        dt: cfg.solver.dt,
        termination: Termination::Matched,
    };
    let fits = freqs
        .iter()
        .map(|&w| {
            lattice::measure_wavevector(
                &cfg.line,
                &config,
                &DriveTone {
                    omega: w,
                    amplitude: ORACLE_DRIVE_RATIO * cfg.line.i_0,
                },
            )
            .map_err(CliError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rel_max = fits
        .iter()
        .map(|f| ((f.k.abs() - f.continuum_k) / f.continuum_k).abs())
        .fold(0.0f64, f64::max);
    let r2_min = fits.iter().map(|f| f.r_squared).fold(f64::INFINITY, f64::min);
    summaries.push(CurveSummary {
        label: label.to_string(),
        rows: fits.len(),
        k_rel_error_max: Some(rel_max),
        r_squared_min: Some(r2_min),
        ..Default::default()
    });
    curves.push(Curve {
        name: label.to_string(),
        data: CurveData::Oracle(fits),
    });
    Ok(())
}

fn run_classify(
    cfg: &RunConfig,
    label: &str,
    curves: &mut Vec<Curve>,
    summaries: &mut Vec<CurveSummary>,
    extra: &mut Extra,
) -> Result<(), CliError> {
    let spec = need_pump(cfg, "classify")?;
    let [omega] = spec.omegas[..] else {
        return Err(CliError::Config(
            "classify works one pump frequency at a time".into(),
        ));
    };
    let pump = PumpDrive::from_ratio(omega, spec.ratio, &cfg.line)?;
    let deltas = delta_grid(cfg, &pump, 201, "classify")?;
    let rows = deltas
        .iter()
        .map(|&d| {
            let regime = mixing::classify(&cfg.line, &pump, d)?;
            let (omega_signal, _) = sidebands(pump.omega, d)?;
            Ok(ClassifyRow {
                delta: d,
                omega_signal,
                dk_linear: regime.dk_linear,
                dk_nonlinear: regime.dk_nonlinear,
                compensating: regime.is_compensating(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let sign = |pick: fn(&ClassifyRow) -> f64| -> &'static str {
        // rows where the value sits at the roundoff floor (delta = 0 on a
        // symmetric grid) carry no sign information
        let scale = rows.iter().map(|r| pick(r).abs()).fold(0.0, f64::max);
        let mut live = rows.iter().map(pick).filter(|v| v.abs() > 1e-9 * scale);
        if live.clone().all(|v| v < 0.0) {
            "<0"
        } else if live.all(|v| v > 0.0) {
            ">0"
        } else {
            " mixed"
        }
    };
    extra.quadrant = Some(format!(
        "dkL{}, dkNL{}",
        sign(|r| r.dk_linear),
        sign(|r| r.dk_nonlinear)
    ));
    extra.verdict = Some(
        if rows.iter().any(|r| r.compensating) {
            "phase matchable"
        } else {
            "unmatchable"
        }
        .to_string(),
    );
    summaries.push(CurveSummary {
        label: label.to_string(),
        rows: rows.len(),
        f_pump_ghz: Some(rad_to_ghz(omega)),
        ..Default::default()
    });
    curves.push(Curve {
        name: label.to_string(),
        data: CurveData::Classify {
            cell: cfg.line.a,
            rows,
        },
    });
    Ok(())
}

fn gain_summary(
    label: &str,
    f_pump_ghz: Option<f64>,
    f_pumps_ghz: Option<[f64; 2]>,
    points: &[GainPoint],
) -> CurveSummary {
    let best = points
        .iter()
        .max_by(|a, b| a.gain_cis.total_cmp(&b.gain_cis))
        .expect("gain grids hold at least two points");
    let peak_db = best.gain_cis_db();
    let bw_3db = double_pump::bands_above(points, peak_db - 3.0)
        .into_iter()
        .find(|s| s.contains(best.omega_signal))
        .map(|s| rad_to_ghz(s.width()));
    let band_20db = double_pump::widest_band(points, 20.0);
    CurveSummary {
        label: label.to_string(),
        rows: points.len(),
        f_pump_ghz,
        f_pumps_ghz,
        peak_gain_db: Some(peak_db),
        delta_at_peak: Some(best.delta),
        f_at_peak_ghz: Some(rad_to_ghz(best.omega_signal)),
        bw_3db_ghz: bw_3db,
        band_20db_ghz: band_20db.map(|s| [rad_to_ghz(s.omega_lo), rad_to_ghz(s.omega_hi)]),
        bw_20db_ghz: band_20db.map(|s| rad_to_ghz(s.width())),
        ..Default::default()
    }
}

fn need_pump<'a>(cfg: &'a RunConfig, cmd: &str) -> Result<&'a SinglePump, CliError> {
    cfg.pump
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("the {cmd} command needs a [pump] section")))
}

fn need_cells(cfg: &RunConfig, cmd: &str) -> Result<u32, CliError> {
    match cfg.cells {
        Some(n) if n > 0 => Ok(n),
        Some(_) => Err(CliError::Config(format!(
            "the {cmd} command needs a positive cell count"
        ))),
        None => Err(CliError::Config(format!(
            "the {cmd} command needs `cells` in the config"
        ))),
    }
}

fn length(cfg: &RunConfig, cmd: &str) -> Result<f64, CliError> {
    Ok(f64::from(need_cells(cfg, cmd)?) * cfg.line.a)
}

fn delta_grid(
    cfg: &RunConfig,
    pump: &PumpDrive,
    default_n: usize,
    cmd: &str,
) -> Result<Vec<f64>, CliError> {
    match cfg.sweep {
        Sweep::Delta { min, max, points } => linspace(min, max, points.unwrap_or(default_n)),
        Sweep::Points(n) => Ok(mixing::default_detuning_grid(&cfg.line, pump, n)?),
        Sweep::Unspecified => Ok(mixing::default_detuning_grid(&cfg.line, pump, default_n)?),
        Sweep::Frequency { .. } => Err(CliError::Config(format!(
            "the {cmd} command sweeps detuning; use [sweep].delta_min/delta_max"
        ))),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if n < 2 {
        return Err(CliError::Config(format!(
            "[sweep].points must be at least 2, got {n}"
        )));
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

fn curve_label(base: &str, multi: bool, omega: f64) -> String {
    if multi {
        format!("{base}_{}GHz", fmt_ghz(omega))
    } else {
        base.to_string()
    }
}

/// Frequency tag for file names: three decimals, trailing zeros trimmed.
fn fmt_ghz(omega: f64) -> String {
    let s = format!("{:.3}", rad_to_ghz(omega));
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_tags_trim_cleanly() {
        use std::f64::consts::TAU;
        assert_eq!(fmt_ghz(TAU * 7e9), "7");
        assert_eq!(fmt_ghz(TAU * 8.38e9), "8.38");
        assert_eq!(fmt_ghz(TAU * 11.225e9), "11.225");
    }

    #[test]
    fn linspace_spans_inclusive_bounds() {
        let g = linspace(-1.0, 1.0, 5).unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(linspace(0.0, 1.0, 1).is_err());
    }
}
