//! TOML run configuration: schema, engineering-unit quantities, validation
//! and the semantic hash stamped into result metadata.
//!
//! Field names carry their bare-number unit (`l_j_pH = 1670`); every
//! quantity also accepts a string with an engineering suffix
//! (`l_j_pH = "1.67nH"`). Both spellings resolve to the same SI value and
//! therefore the same hash. The machine-readable schema ships in
//! `schema/config.schema.json` next to this crate.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use jtwpa::units::rad_to_ghz;
use jtwpa::{Handedness, LineParameters};

/// A quantity that is either a bare number in the field's named unit or a
/// string with an engineering suffix on the matching SI base unit.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    /// Resolves to SI. `base` is the SI unit symbol of the field and
    /// `field_exp` the decimal exponent of its bare-number unit (-12 for
    /// a `_pH` field and so on). The scaling is spliced into the decimal
    /// text before the one parse, so every spelling of a value lands on
    /// the same bit pattern and the config hash cannot split on rounding.
    fn resolve(&self, base: &str, field_exp: i32, field: &str) -> Result<f64, CliError> {
        let value = match self {
            Quantity::Number(x) => shift_decimal(&format!("{x}"), field_exp),
            Quantity::Text(s) => {
                let t = s.trim();
                let split = t
                    .rfind(|c: char| !(c.is_alphabetic() || c == 'µ'))
                    .map(|i| i + c_len(t, i))
                    .unwrap_or(0);
                let (num, suffix) = t.split_at(split);
                let exp = if suffix.is_empty() {
                    field_exp
                } else {
                    suffix_exp(suffix, base).ok_or_else(|| {
                        CliError::Config(format!(
                            "{field}: unit {suffix:?} does not measure {base} \
                             (expected e.g. \"p{base}\", \"n{base}\", \"{base}\")"
                        ))
                    })?
                };
                shift_decimal(num.trim(), exp)
            }
        };
        value.ok_or_else(|| {
            CliError::Config(format!("{field}: cannot parse a number out of {self:?}"))
        })
    }
}

/// Parses `num` with `exp` added to its decimal exponent; one rounding.
fn shift_decimal(num: &str, exp: i32) -> Option<f64> {
    if num.is_empty() || num.contains(|c: char| c.is_whitespace()) {
        return None;
    }
    let (mantissa, e) = match num.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().ok()?.checked_add(i64::from(exp))?),
        None => (num, i64::from(exp)),
    };
    // reject a bare exponent and anything the float grammar would not
    mantissa.parse::<f64>().ok()?;
    let value: f64 = format!("{mantissa}e{e}").parse().ok()?;
    value.is_finite().then_some(value)
}

/// Byte length of the char starting at `i` (suffix split helper).
fn c_len(s: &str, i: usize) -> usize {
    s[i..].chars().next().map_or(0, char::len_utf8)
}

/// Decimal exponent of an engineering suffix against the expected base.
fn suffix_exp(suffix: &str, base: &str) -> Option<i32> {
    if suffix == base {
        return Some(0);
    }
    let mut chars = suffix.chars();
    let prefix = chars.next()?;
    if chars.as_str() != base {
        return None;
    }
    Some(match prefix {
        'f' => -15,
        'p' => -12,
        'n' => -9,
        'u' | 'µ' => -6,
        'm' => -3,
        'k' => 3,
        'M' => 6,
        'G' => 9,
        'T' => 12,
        _ => return None,
    })
}

/// One value or a list of them; lets a single config request a family of
/// runs (one gain sweep per pump frequency).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(Quantity),
    Many(Vec<Quantity>),
}

impl OneOrMany {
    fn items(&self) -> Vec<Quantity> {
        match self {
            OneOrMany::One(q) => vec![q.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Raw deserialized file, before unit resolution and cross-field checks.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    line: LineSection,
    pump: Option<PumpSection>,
    double_pump: Option<DoublePumpSection>,
    sweep: Option<SweepSection>,
    cells: Option<u32>,
    solver: Option<SolverSection>,
    compression: Option<CompressionSection>,
    output: Option<OutputSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineSection {
    #[serde(rename = "l_j_pH")]
    l_j_ph: Quantity,
    #[serde(rename = "c_j_fF")]
    c_j_ff: Quantity,
    #[serde(rename = "c_fF")]
    c_ff: Quantity,
    a_um: Quantity,
    handedness: HandednessName,
    #[serde(rename = "i0_uA")]
    i0_ua: Option<Quantity>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum HandednessName {
    Left,
    Right,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PumpSection {
    #[serde(rename = "f_GHz")]
    f_ghz: OneOrMany,
    ip_ratio: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DoublePumpSection {
    #[serde(rename = "f1_GHz")]
    f1_ghz: Quantity,
    #[serde(rename = "f2_GHz")]
    f2_ghz: Quantity,
    i1_ratio: f64,
    i2_ratio: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    delta_min: Option<f64>,
    delta_max: Option<f64>,
    #[serde(rename = "f_min_GHz")]
    f_min_ghz: Option<Quantity>,
    #[serde(rename = "f_max_GHz")]
    f_max_ghz: Option<Quantity>,
    points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    rtol: Option<f64>,
    atol: Option<f64>,
    max_steps: Option<usize>,
    dt_ps: Option<Quantity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompressionSection {
    delta: Option<f64>,
    ratio_min: Option<f64>,
    ratio_max: Option<f64>,
    points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<String>,
    format: Option<FormatName>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FormatName {
    Csv,
    Structured,
    Both,
}

/// Fully resolved configuration: SI units, defaults applied, invariants
/// checked. Commands pull out the sections they need and reject runs
/// missing them.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub line: LineParameters,
    pub pump: Option<SinglePump>,
    pub double_pump: Option<DoublePumpSpec>,
    pub sweep: Sweep,
    pub cells: Option<u32>,
    pub solver: Solver,
    pub compression: Compression,
    pub output: Output,
    /// Hex digest over the resolved analysis fields; stable against
    /// comments, formatting and unit spelling, sensitive to any change
    /// that could alter results.
    pub hash: String,
}

#[derive(Debug, Clone)]
pub struct SinglePump {
    /// Pump frequencies, rad/s. More than one requests a family of runs.
    pub omegas: Vec<f64>,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct DoublePumpSpec {
    pub omega_1: f64,
    pub ratio_1: f64,
    pub omega_2: f64,
    pub ratio_2: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum Sweep {
    /// No section: each command applies its default grid.
    Unspecified,
    /// Only a point count: default bounds at that resolution.
    Points(usize),
    /// Detuning bounds, for the single-pump commands. A missing point
    /// count falls back to the command's default resolution.
    Delta {
        min: f64,
        max: f64,
        points: Option<usize>,
    },
    /// Signal frequency bounds in rad/s.
    Frequency {
        min: f64,
        max: f64,
        points: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct Solver {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Lattice timestep hint, seconds.
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct Compression {
    /// Detuning for the drive sweep; `None` follows the phase-matched
    /// detuning of the configured pump.
    pub delta: Option<f64>,
    /// Explicit drive-ratio grid; `None` uses the library default.
    pub ratios: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Output {
    pub dir: String,
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Structured,
    Both,
}

impl Format {
    pub fn wants_csv(self) -> bool {
        self != Format::Structured
    }
    pub fn wants_structured(self) -> bool {
        self != Format::Csv
    }
}

/// Parses and resolves a config file's text. `origin` names the source in
/// error messages (a path, or the preset name for embedded configs).
pub fn load(text: &str, origin: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    raw.resolve()
}

impl RawConfig {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let l_j = self.line.l_j_ph.resolve("H", -12, "[line].l_j_pH")?;
        let c_j = self.line.c_j_ff.resolve("F", -15, "[line].c_j_fF")?;
        let c = self.line.c_ff.resolve("F", -15, "[line].c_fF")?;
        let a = self.line.a_um.resolve("m", -6, "[line].a_um")?;
        let handedness = match self.line.handedness {
            HandednessName::Left => Handedness::Left,
            HandednessName::Right => Handedness::Right,
        };
        let line = match &self.line.i0_ua {
            Some(q) => {
                let i_0 = q.resolve("A", -6, "[line].i0_uA")?;
                LineParameters::new(l_j, c_j, c, a, i_0, handedness)?
            }
            None => LineParameters::with_josephson_i0(l_j, c_j, c, a, handedness)?,
        };

        if self.pump.is_some() && self.double_pump.is_some() {
            return Err(CliError::Config(
                "[pump] and [double_pump] are mutually exclusive; keep one".into(),
            ));
        }

        let pump = match &self.pump {
            None => None,
            Some(p) => {
                let mut omegas = Vec::new();
                for q in p.f_ghz.items() {
                    omegas.push(q.resolve("Hz", 9, "[pump].f_GHz")? * TAU);
                }
                if omegas.is_empty() {
                    return Err(CliError::Config(
                        "[pump].f_GHz lists no frequencies".into(),
                    ));
                }
                Some(SinglePump {
                    omegas,
                    ratio: p.ip_ratio,
                })
            }
        };

        let double_pump = match &self.double_pump {
            None => None,
            Some(d) => Some(DoublePumpSpec {
                omega_1: d.f1_ghz.resolve("Hz", 9, "[double_pump].f1_GHz")? * TAU,
                ratio_1: d.i1_ratio,
                omega_2: d.f2_ghz.resolve("Hz", 9, "[double_pump].f2_GHz")? * TAU,
                ratio_2: d.i2_ratio,
            }),
        };

        let sweep = self.resolve_sweep()?;

        let s = self.solver.as_ref();
        let solver = Solver {
            rtol: s.and_then(|s| s.rtol).unwrap_or(1e-9),
            atol: s.and_then(|s| s.atol).unwrap_or(1e-14),
            max_steps: s.and_then(|s| s.max_steps).unwrap_or(1_000_000),
            dt: match s.and_then(|s| s.dt_ps.as_ref()) {
                Some(q) => q.resolve("s", -12, "[solver].dt_ps")?,
                None => 0.5e-12,
            },
        };
        for (name, v) in [("rtol", solver.rtol), ("atol", solver.atol), ("dt_ps", solver.dt)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(CliError::Config(format!(
                    "[solver].{name} must be positive and finite"
                )));
            }
        }

        let compression = self.resolve_compression()?;

        let o = self.output.as_ref();
        let output = Output {
            dir: o
                .and_then(|o| o.dir.clone())
                .unwrap_or_else(|| ".".to_string()),
            format: match o.and_then(|o| o.format) {
                Some(FormatName::Csv) => Format::Csv,
                Some(FormatName::Structured) => Format::Structured,
                Some(FormatName::Both) | None => Format::Both,
            },
        };

        let mut cfg = RunConfig {
            line,
            pump,
            double_pump,
            sweep,
            cells: self.cells,
            solver,
            compression,
            output,
            hash: String::new(),
        };
        cfg.hash = semantic_hash(&cfg);
        Ok(cfg)
    }

    fn resolve_sweep(&self) -> Result<Sweep, CliError> {
        let Some(s) = &self.sweep else {
            return Ok(Sweep::Unspecified);
        };
        let has_delta = s.delta_min.is_some() || s.delta_max.is_some();
        let has_freq = s.f_min_ghz.is_some() || s.f_max_ghz.is_some();
        if has_delta && has_freq {
            return Err(CliError::Config(
                "[sweep] mixes delta_min/delta_max with f_min_GHz/f_max_GHz; \
                 a sweep runs over one variable"
                    .into(),
            ));
        }
        if has_delta {
            let (Some(min), Some(max)) = (s.delta_min, s.delta_max) else {
                return Err(CliError::Config(
                    "[sweep] needs both delta_min and delta_max".into(),
                ));
            };
            if !(min.is_finite() && max.is_finite() && min < max) {
                return Err(CliError::Config(format!(
                    "[sweep] delta bounds must satisfy delta_min < delta_max, got {min} and {max}"
                )));
            }
            return Ok(Sweep::Delta {
                min,
                max,
                points: s.points,
            });
        }
        if has_freq {
            let (Some(lo), Some(hi)) = (&s.f_min_ghz, &s.f_max_ghz) else {
                return Err(CliError::Config(
                    "[sweep] needs both f_min_GHz and f_max_GHz".into(),
                ));
            };
            let min = lo.resolve("Hz", 9, "[sweep].f_min_GHz")? * TAU;
            let max = hi.resolve("Hz", 9, "[sweep].f_max_GHz")? * TAU;
            if !(min.is_finite() && max.is_finite() && 0.0 < min && min < max) {
                return Err(CliError::Config(format!(
                    "[sweep] frequency bounds must satisfy 0 < f_min_GHz < f_max_GHz, \
                     got {} and {} GHz",
                    rad_to_ghz(min),
                    rad_to_ghz(max)
                )));
            }
            return Ok(Sweep::Frequency {
                min,
                max,
                points: s.points,
            });
        }
        match s.points {
            Some(n) => Ok(Sweep::Points(n)),
            None => Ok(Sweep::Unspecified),
        }
    }

    fn resolve_compression(&self) -> Result<Compression, CliError> {
        let Some(c) = &self.compression else {
            return Ok(Compression {
                delta: None,
                ratios: None,
            });
        };
        if let Some(d) = c.delta {
            if !(d.is_finite() && d.abs() < 1.0) {
                return Err(CliError::Config(format!(
                    "[compression].delta must lie in (-1, 1), got {d}"
                )));
            }
        }
        let any_grid = c.ratio_min.is_some() || c.ratio_max.is_some() || c.points.is_some();
        let ratios = if any_grid {
            let lo = c.ratio_min.unwrap_or(1e-3);
            let hi = c.ratio_max.unwrap_or(0.5);
            let n = c.points.unwrap_or(41);
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi && hi < 1.0) {
                return Err(CliError::Config(format!(
                    "[compression] ratio grid must satisfy 0 < ratio_min < ratio_max < 1, \
                     got {lo} and {hi}"
                )));
            }
            if n < 2 {
                return Err(CliError::Config(
                    "[compression].points must be at least 2".into(),
                ));
            }
            // log-spaced: compression is a decades-wide phenomenon
            Some(
                (0..n)
                    .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
                    .collect(),
            )
        } else {
            None
        };
        Ok(Compression {
            delta: c.delta,
            ratios,
        })
    }
}

/// Digest over everything that can change results. The output section is
/// excluded: where files land does not alter what is computed.
fn semantic_hash(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let p = &cfg.line;
    let _ = write!(
        s,
        "line {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:?};",
        p.l_j, p.c_j, p.c, p.a, p.i_0, p.handedness
    );
    match &cfg.pump {
        Some(sp) => {
            let _ = write!(s, "pump {:.17e}", sp.ratio);
            for w in &sp.omegas {
                let _ = write!(s, " {w:.17e}");
            }
            s.push(';');
        }
        None => s.push_str("pump none;"),
    }
    match &cfg.double_pump {
        Some(d) => {
            let _ = write!(
                s,
                "double {:.17e} {:.17e} {:.17e} {:.17e};",
                d.omega_1, d.ratio_1, d.omega_2, d.ratio_2
            );
        }
        None => s.push_str("double none;"),
    }
    match cfg.sweep {
        Sweep::Unspecified => s.push_str("sweep default;"),
        Sweep::Points(n) => {
            let _ = write!(s, "sweep points {n};");
        }
        Sweep::Delta { min, max, points } => {
            let _ = write!(s, "sweep delta {min:.17e} {max:.17e} {points:?};");
        }
        Sweep::Frequency { min, max, points } => {
            let _ = write!(s, "sweep freq {min:.17e} {max:.17e} {points:?};");
        }
    }
    match cfg.cells {
        Some(n) => {
            let _ = write!(s, "cells {n};");
        }
        None => s.push_str("cells none;"),
    }
    let _ = write!(
        s,
        "solver {:.17e} {:.17e} {} {:.17e};",
        cfg.solver.rtol, cfg.solver.atol, cfg.solver.max_steps, cfg.solver.dt
    );
    match cfg.compression.delta {
        Some(d) => {
            let _ = write!(s, "cdelta {d:.17e};");
        }
        None => s.push_str("cdelta none;"),
    }
    match &cfg.compression.ratios {
        Some(r) => {
            s.push_str("cratios");
            for v in r {
                let _ = write!(s, " {v:.17e}");
            }
            s.push(';');
        }
        None => s.push_str("cratios none;"),
    }
    digest16(&s)
}

/// First 16 hex characters of the SHA-256 of `text`.
pub fn digest16(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
