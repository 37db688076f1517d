use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pqe_core::experiments::{from_json, CSV_HEADER};

fn pqe(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqe"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const H2_SMALL: &str = r#"
[model]
kind = "h2"
bond_lengths = [0.75, 1.5, 2.95]

[backend]
kind = "shots"
shots = 1024

[backend.noise]
readout = [[[0.98, 0.04], [0.02, 0.96]]]

[solver]
tolerance = 0.03
max_iter = 40
"#;

const TFIM_SMALL: &str = r#"
[study]
symmetries = ["none", "postselect"]
extrapolations = ["none", "linear"]

[backend]
kind = "shots"
shots = 1024
"#;

#[test]
fn every_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let tfim = write_config(dir.path(), "tfim.toml", TFIM_SMALL);
    let h2 = write_config(dir.path(), "h2.toml", H2_SMALL);
    let scaling = write_config(
        dir.path(),
        "scaling.toml",
        "[study]\nsizes = [4]\nshot_magnification = 1\n[backend]\nkind = \"shots\"\nshots = 512\n",
    );
    let cases: [(&str, Vec<&str>); 6] = [
        ("h2-curve", vec!["--config", &h2, "--repeats", "2"]),
        ("tfim-matrix", vec!["--config", &tfim, "--repeats", "2"]),
        ("tfim-truncation", vec![]),
        ("tfim-correlations", vec![]),
        ("scaling", vec!["--config", &scaling]),
        ("calibrate", vec![]),
    ];
    for (cmd, extra) in cases {
        let mut args = vec![cmd];
        args.extend(extra);
        let out = pqe(&args, dir.path());
        assert!(
            out.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let path = dir.path().join(format!("{cmd}.json"));
        let text = fs::read_to_string(&path).unwrap();
        let records = from_json(&text).unwrap();
        assert!(!records.is_empty(), "{cmd}");
        assert!(!out.stdout.is_empty(), "{cmd} prints a summary");
    }
}

#[test]
fn json_round_trips_and_csv_rows_match_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let h2 = write_config(dir.path(), "h2.toml", H2_SMALL);
    let out = pqe(
        &["h2-curve", "--config", &h2, "--repeats", "3", "--seed", "5"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("h2-curve.json")).unwrap();
    let records = from_json(&text).unwrap();
    assert_eq!(records.len(), 3);
    assert_eq!(pqe_core::experiments::to_json(&records).unwrap(), text);
    for r in &records {
        assert_eq!(r.repeats.len(), 3);
        assert_eq!(r.recompute_summary(), r.summary);
    }

    let out = pqe(
        &[
            "h2-curve",
            "--config",
            &h2,
            "--repeats",
            "3",
            "--seed",
            "5",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("h2-curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let header = lines.next().unwrap();
    assert!(header.starts_with("experiment,label,repeat,seed,energy"));
    assert_eq!(lines.filter(|l| !l.is_empty()).count(), 3 * 3);
}

#[test]
fn identical_runs_write_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let tfim = write_config(a.path(), "tfim.toml", TFIM_SMALL);
    for dir in [&a, &b] {
        let out = pqe(
            &[
                "tfim-matrix",
                "--config",
                &tfim,
                "--repeats",
                "2",
                "--seed",
                "9",
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let x = fs::read(a.path().join("tfim-matrix.json")).unwrap();
    let y = fs::read(b.path().join("tfim-matrix.json")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn seed_changes_sampled_results() {
    let dir = tempfile::tempdir().unwrap();
    let tfim = write_config(dir.path(), "tfim.toml", TFIM_SMALL);
    let run = |seed: &str| {
        let out = pqe(
            &[
                "tfim-matrix",
                "--config",
                &tfim,
                "--repeats",
                "2",
                "--seed",
                seed,
            ],
            dir.path(),
        );
        assert!(out.status.success());
        fs::read(dir.path().join("tfim-matrix.json")).unwrap()
    };
    assert_ne!(run("1"), run("2"));
}

#[test]
fn bad_configs_fail_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.toml", "[solver]\ntolerence = 1e-6\n"),
        ("syntax.toml", "repeats = = 3\n"),
        ("zero.toml", "[backend]\nkind = \"shots\"\nshots = 0\n"),
        ("model.toml", "[model]\nkind = \"lattice\"\n"),
    ];
    for (name, text) in cases {
        let p = write_config(dir.path(), name, text);
        let out = pqe(&["tfim-matrix", "--config", &p], dir.path());
        assert!(!out.status.success(), "{name} should be rejected");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("error"), "{name}: {err}");
    }
    let out = pqe(
        &["tfim-matrix", "--config", "/nonexistent/cfg.toml"],
        dir.path(),
    );
    assert!(!out.status.success());
    let out = pqe(&["tfim-matrix", "--repeats", "0"], dir.path());
    assert!(!out.status.success());
    let out = pqe(&["h2-curve", "--format", "xml"], dir.path());
    assert!(!out.status.success());
    let out = pqe(&["no-such-experiment"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn print_config_shows_effective_settings() {
    let dir = tempfile::tempdir().unwrap();
    let out = pqe(
        &[
            "tfim-matrix",
            "--print-config",
            "--seed",
            "77",
            "--repeats",
            "4",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 77"));
    assert!(text.contains("repeats = 4"));
    assert!(!dir.path().join("tfim-matrix.json").exists());
}

#[test]
fn correlation_csv_has_all_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = pqe(&["tfim-correlations", "--format", "csv"], dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("tfim-correlations.csv")).unwrap();
    let rows = csv.lines().skip(2).filter(|l| !l.is_empty()).count();
    // three states, three axes, 6 pairs on 4 sites
    assert_eq!(rows, 3 * 3 * 6);
}
