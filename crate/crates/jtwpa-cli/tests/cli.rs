//! End-to-end checks through the compiled binary. Every test here execs
//! the real executable and inspects exit status, stderr, and the files
//! it leaves behind; nothing links against internal modules.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_jtwpa");

const GAIN_HEADER: &str = "delta,f_signal_GHz,dkl_per_cell,dknl_per_cell,dk_per_cell,\
     g_per_cell_re,g_per_cell_im,gain_cis_dB,gain_trans_dB,phase_rad";

const LH_LINE: &str = "[line]
l_j_pH = 1670
c_j_fF = 9.6
c_fF = 667
a_um = 10
handedness = \"left\"
";

const RH_LINE: &str = "[line]
l_j_pH = 100
c_j_fF = 329
c_fF = 39
a_um = 10
handedness = \"right\"
";

fn gain_config() -> String {
    format!(
        "cells = 1000\n\n{LH_LINE}\n[pump]\nf_GHz = 7.5\nip_ratio = 0.5\n\n\
         [sweep]\ndelta_min = -0.1\ndelta_max = 0.1\npoints = 101\n"
    )
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("JTWPA_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary should spawn")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("summary.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let idx = header
        .split(',')
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name} in {header}"));
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn gain_run_writes_csv_and_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &gain_config());
    let out = run(&[
        "gain",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));

    let csv = tmp.path().join("gain.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), GAIN_HEADER);
    assert_eq!(text.lines().count(), 102); // header + one row per grid point

    let doc = summary(tmp.path());
    let f_zd = doc["f_zd_GHz"].as_f64().unwrap();
    assert!((f_zd - 32.454928).abs() < 1e-3, "f_zd = {f_zd}");
    let curve = &doc["curves"][0];
    assert_eq!(curve["rows"].as_u64().unwrap(), 101);
    let peak = curve["peak_gain_dB"].as_f64().unwrap();
    let best = csv_column(&csv, "gain_cis_dB")
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    // the CSV carries 12 significant digits, the summary a full f64
    assert!((peak - best).abs() <= 1e-9 * peak.abs() + 1e-12);
}

#[test]
fn reruns_are_byte_identical_except_the_timestamp() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &gain_config());
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    for dir in [&dir_a, &dir_b] {
        fs::create_dir(dir).unwrap();
        let out = run(&[
            "gain",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
    let csv_a = fs::read(dir_a.join("gain.csv")).unwrap();
    let csv_b = fs::read(dir_b.join("gain.csv")).unwrap();
    assert_eq!(csv_a, csv_b);

    let mut doc_a = summary(&dir_a);
    let mut doc_b = summary(&dir_b);
    doc_a.as_object_mut().unwrap().remove("timestamp");
    doc_b.as_object_mut().unwrap().remove("timestamp");
    assert_eq!(doc_a, doc_b);
}

#[test]
fn missing_line_section_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "");
    let out = run(&["dispersion", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("line"), "{}", stderr_of(&out));
}

#[test]
fn pump_sections_are_mutually_exclusive() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            "cells = 1000\n\n{LH_LINE}\n[pump]\nf_GHz = 7.5\nip_ratio = 0.5\n\n\
             [double_pump]\nf1_GHz = 8.38\ni1_ratio = 0.5\nf2_GHz = 11.22\ni2_ratio = 0.5\n"
        ),
    );
    let out = run(&["gain", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_of(&out).contains("mutually exclusive"),
        "{}",
        stderr_of(&out)
    );
}

#[test]
fn unknown_fields_are_rejected_by_name() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &format!("{LH_LINE}turbo = 3\n"));
    let out = run(&["dispersion", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("turbo"), "{}", stderr_of(&out));
}

#[test]
fn hash_tracks_values_not_spelling() {
    let tmp = TempDir::new().unwrap();
    let with_line = |line: &str| -> String {
        let dir = TempDir::new_in(tmp.path()).unwrap();
        let cfg = write_config(dir.path(), line);
        let out = run(&[
            "dispersion",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
        summary(dir.path())["config_hash"].as_str().unwrap().into()
    };
    // same resolved values, different spelling and comments
    let spelled = with_line(
        "# reference design\n[line]\nl_j_pH = \"1.67nH\"\nc_j_fF = 9.6\n\
         c_fF = \"667fF\"\na_um = 10\nhandedness = \"left\"\n",
    );
    let plain = with_line(LH_LINE);
    assert_eq!(spelled, plain);
    // any semantic change must move the hash
    let other = with_line(&format!("cells = 500\n\n{LH_LINE}"));
    assert_ne!(plain, other);
}

#[test]
fn out_of_band_pump_exits_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("cells = 1000\n\n{LH_LINE}\n[pump]\nf_GHz = 45\nip_ratio = 0.5\n"),
    );
    let out = run(&["gain", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("out of band"), "{}", stderr_of(&out));
}

#[test]
fn exhausted_step_budget_exits_2_and_writes_nothing() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            "cells = 800\n\n{LH_LINE}\n[pump]\nf_GHz = 7.0\nip_ratio = 0.5\n\n\
             [solver]\nmax_steps = 10\n\n[compression]\n"
        ),
    );
    let dir = tmp.path().join("out");
    fs::create_dir(&dir).unwrap();
    let out = run(&[
        "compression",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    // a failed run must not leave partial artifacts behind
    assert_eq!(fs::read_dir(&dir).unwrap().count(), 0);
}

#[test]
fn classify_reports_the_right_handed_quadrant() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("{RH_LINE}\n[pump]\nf_GHz = 7.5\nip_ratio = 0.5\n"),
    );
    let out = run(&[
        "classify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let doc = summary(tmp.path());
    assert_eq!(doc["quadrant"].as_str().unwrap(), "dkL<0, dkNL<0");
    assert_eq!(doc["verdict"].as_str().unwrap(), "unmatchable");
}

#[test]
fn classify_reports_the_left_handed_quadrant() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("{LH_LINE}\n[pump]\nf_GHz = 7.5\nip_ratio = 0.5\n"),
    );
    let out = run(&[
        "classify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let doc = summary(tmp.path());
    assert_eq!(doc["quadrant"].as_str().unwrap(), "dkL<0, dkNL>0");
    assert_eq!(doc["verdict"].as_str().unwrap(), "phase matchable");
}

#[test]
fn preset_fig2_emits_both_lines() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["preset", "fig2", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(tmp.path().join("fig2_left.csv").exists());
    assert!(tmp.path().join("fig2_right.csv").exists());
    let doc = summary(tmp.path());
    let peak_of = |label: &str| -> f64 {
        doc["curves"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["label"] == label)
            .unwrap()["peak_gain_dB"]
            .as_f64()
            .unwrap()
    };
    let left = peak_of("fig2_left");
    let right = peak_of("fig2_right");
    assert!((left - 29.6254).abs() < 0.01, "left peak {left}");
    assert!((right - 11.2578).abs() < 0.01, "right peak {right}");
}

#[test]
fn preset_fig3a_matches_expected_peaks() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["preset", "fig3a", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let doc = summary(tmp.path());
    let curves = doc["curves"].as_array().unwrap();
    let expect = [
        ("fig3a_7GHz", 28.9868),
        ("fig3a_8GHz", 17.5642),
        ("fig3a_9GHz", 10.7871),
    ];
    assert_eq!(curves.len(), expect.len());
    for (label, peak) in expect {
        let c = curves.iter().find(|c| c["label"] == label).unwrap();
        let got = c["peak_gain_dB"].as_f64().unwrap();
        assert!((got - peak).abs() < 1e-3, "{label}: {got}");
    }
}

#[test]
fn preset_fig4_reports_the_wide_band() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["preset", "fig4", "--out", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let doc = summary(tmp.path());
    let f_zd = doc["f_zd_GHz"].as_f64().unwrap();
    assert!((f_zd - 9.799125).abs() < 1e-3, "f_zd = {f_zd}");
    let curve = &doc["curves"][0];
    let peak = curve["peak_gain_dB"].as_f64().unwrap();
    assert!((peak - 21.7192).abs() < 0.01, "peak {peak}");
    let band = curve["band_20dB_GHz"].as_array().unwrap();
    let lo = band[0].as_f64().unwrap();
    let hi = band[1].as_f64().unwrap();
    assert!(lo < 9.8 && 9.8 < hi, "band [{lo}, {hi}]");
    let bw = curve["bw_20dB_GHz"].as_f64().unwrap();
    assert!((2.3..2.5).contains(&bw), "bw {bw}");
}

#[test]
fn format_flag_selects_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &gain_config());
    let only = |dir: &Path, format: &str| {
        fs::create_dir(dir).unwrap();
        let out = run(&[
            "gain",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--format",
            format,
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
        fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(only(&tmp.path().join("s"), "structured"), ["summary.json"]);
    assert_eq!(only(&tmp.path().join("c"), "csv"), ["gain.csv"]);
}

#[test]
fn config_is_required_for_gain() {
    let out = run(&["gain"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("--config"), "{}", stderr_of(&out));
}

#[test]
fn dispersion_covers_the_band() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), LH_LINE);
    let out = run(&[
        "dispersion",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = tmp.path().join("dispersion.csv");
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "f_GHz,k_per_cell,phase_velocity_m_per_s,group_velocity_m_per_s,d1_s_per_m,d2_s2_per_m"
    );
    assert_eq!(text.lines().count(), 502);
    // a left-handed branch: the wavevector falls as frequency rises
    let k = csv_column(&csv, "k_per_cell");
    assert!(k.first().unwrap() > k.last().unwrap());
    assert!(*k.last().unwrap() > 0.0);
    let v_g = csv_column(&csv, "group_velocity_m_per_s");
    assert!(v_g.iter().all(|&v| v < 0.0));
}

#[test]
fn oracle_fits_a_backward_wave() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("cells = 60\n\n{LH_LINE}\n[sweep]\nf_min_GHz = 13\nf_max_GHz = 15\npoints = 2\n"),
    );
    let out = run(&[
        "oracle",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = tmp.path().join("oracle.csv");
    let k_fit = csv_column(&csv, "k_fit_per_m");
    assert_eq!(k_fit.len(), 2);
    assert!(k_fit.iter().all(|&k| k < 0.0), "{k_fit:?}");
    let rel = csv_column(&csv, "rel_error");
    assert!(rel.iter().all(|&e| e.abs() < 0.02), "{rel:?}");
    let doc = summary(tmp.path());
    let r2 = doc["curves"][0]["r_squared_min"].as_f64().unwrap();
    assert!(r2 > 0.99, "r_squared_min = {r2}");
}

#[test]
fn thread_count_comes_from_flag_or_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &gain_config());
    let threads_with = |dir: &Path, extra: &[&str], env: &[(&str, &str)]| -> u64 {
        fs::create_dir(dir).unwrap();
        let mut args = vec![
            "gain",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let out = run_env(&args, env);
        assert!(out.status.success(), "{}", stderr_of(&out));
        summary(dir)["threads"].as_u64().unwrap()
    };
    let env_only = threads_with(&tmp.path().join("e"), &[], &[("JTWPA_THREADS", "2")]);
    assert_eq!(env_only, 2);
    // the flag wins over the environment
    let flagged = threads_with(
        &tmp.path().join("f"),
        &["--threads", "3"],
        &[("JTWPA_THREADS", "2")],
    );
    assert_eq!(flagged, 3);
}
