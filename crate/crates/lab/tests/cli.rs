use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command as Process;

use mkdv_lab::commands::{apriori_sweep, decoherence, read_checkpoint_file, resolve, run, Command, Status};
use mkdv_lab::config::ExperimentConfig;
use mkdv_lab::output::read_csv;
use serde_json::Value;

fn cfg(dir: &Path, pairs: &[(&str, &str)]) -> ExperimentConfig {
    let mut c = ExperimentConfig::new().with("output", dir.display());
    for (k, v) in pairs {
        c.set(k, v);
    }
    c
}

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_mkdv-lab"))
}

fn small(command: Command) -> Vec<(&'static str, &'static str)> {
    match command {
        Command::Simulate => vec![("n_max", "16"), ("T", "0.05"), ("dt", "1e-3")],
        Command::AprioriSweep => vec![("n_max", "16"), ("seeds", "2"), ("amplitudes", "0.5,2"), ("s", "0.25,1")],
        Command::Decoherence => vec![("freqs", "2,4"), ("dt", "1e-3")],
        Command::Audit => vec![("n_max", "8"), ("prop_n_max", "8"), ("prop_T", "0.05"), ("prop_dt", "1.953125e-3")],
        Command::Miura => vec![("n_max", "16"), ("T", "0.02"), ("sample_every", "5"), ("band", "4")],
        Command::ProbeStrichartz => vec![("cutoffs", "4,8"), ("samples", "3")],
        Command::Envelope => vec![("n_max", "64")],
    }
}

#[test]
fn every_command_is_byte_reproducible() {
    for command in Command::ALL {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let first = run(command, &cfg(a.path(), &small(command))).unwrap();
        let second = run(command, &cfg(b.path(), &small(command))).unwrap();
        assert_eq!(first.status, Status::Success, "{command}");
        assert_eq!(first.files.len(), second.files.len());
        for (x, y) in first.files.iter().zip(&second.files) {
            let (bx, by) = (fs::read(x).unwrap(), fs::read(y).unwrap());
            assert_eq!(bx, by, "{command}: {} differs", x.display());
            let text = String::from_utf8(bx).unwrap();
            let hash = resolve(command, &cfg(a.path(), &small(command))).unwrap().hash(command.name());
            assert!(text.contains(&hash), "{command}: missing config hash");
            assert!(text.contains("kappa"), "{command}: missing constants");
            assert!(text.contains("tolerances"), "{command}: missing tolerances");
        }
    }
}

#[test]
fn constant_and_zero_data_are_stationary() {
    for (data, value) in [("zero", 0.0), ("constant", 0.7)] {
        let dir = tempfile::tempdir().unwrap();
        let amp = value.to_string();
        let out = run(Command::Simulate, &cfg(dir.path(), &[("n_max", "8"), ("T", "0.1"), ("data", data), ("amplitude", &amp)]))
            .unwrap();
        let (state, _) = read_checkpoint_file(&out.files[1]).unwrap();
        assert!((state.time - 0.1).abs() < 1e-15);
        assert!((state.u().get(0).re - 2.0 * PI * value).abs() < 1e-13);
        assert!((1..=8).all(|n| state.u().get(n).norm() <= 1e-13));
        let t = read_csv(&fs::read_to_string(&out.files[0]).unwrap()).unwrap();
        for m in t.column("mass").unwrap() {
            assert!((m.parse::<f64>().unwrap() - 2.0 * PI * value * value).abs() < 1e-12);
        }
    }
}

#[test]
fn simulate_reports_conservation_for_the_system() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(Command::Simulate, &cfg(dir.path(), &[("equation", "mkdv_mkdv_system"), ("n_max", "16"), ("T", "0.05")])).unwrap();
    let t = read_csv(&fs::read_to_string(&out.files[0]).unwrap()).unwrap();
    assert_eq!(t.header, ["time", "mass", "energy", "mean", "u_mass", "v_mass", "cross"]);
    let (state, eq) = read_checkpoint_file(&out.files[1]).unwrap();
    assert_eq!(eq.kind().components(), 2);
    assert!(state.v().is_some());
}

#[test]
fn audit_of_trivial_data_is_exact() {
    for (data, amp) in [("zero", "1"), ("constant", "1.3")] {
        let dir = tempfile::tempdir().unwrap();
        let mut pairs = small(Command::Audit);
        pairs.extend([("data", data), ("amplitude", amp)]);
        let out = run(Command::Audit, &cfg(dir.path(), &pairs)).unwrap();
        assert_eq!(out.exit_code(), 0);
        let v: Value = serde_json::from_str(&fs::read_to_string(&out.files[0]).unwrap()).unwrap();
        // Constant data leave rounding noise in the nonzero modes.
        let tol = if data == "zero" { 0.0 } else { 1e-15 };
        assert!(v["fundamental_identity"]["residual"].as_f64().unwrap() <= tol, "{data}");
        for l in v["dbp_identity"].as_array().unwrap() {
            assert!(l["residual"].as_f64().unwrap() <= tol, "{data}");
        }
        if data == "zero" {
            for key in ["linear", "nonlinear", "energy_line", "f_norm", "n_norm"] {
                assert_eq!(v["propagation"][key].as_f64().unwrap(), 0.0, "{key}");
            }
            assert!(v["envelope"]["undefined"].is_string());
        }
    }
}

#[test]
fn apriori_sweep_limits() {
    let dir = tempfile::tempdir().unwrap();
    // Tiny amplitudes follow the linear flow, which preserves every H^s norm.
    let (_, rows) =
        apriori_sweep(&resolve(Command::AprioriSweep, &cfg(dir.path(), &[("n_max", "16"), ("seeds", "3"), ("amplitudes", "1e-6")])).unwrap())
            .unwrap();
    for r in &rows {
        assert!((r.ratio - 1.0).abs() < 1e-9, "{r:?}");
    }
    // At s = 1 the ratio is controlled by the conserved energy.
    let (_, rows) = apriori_sweep(
        &resolve(Command::AprioriSweep, &cfg(dir.path(), &[("n_max", "16"), ("seeds", "3"), ("s", "1"), ("amplitudes", "1"), ("dt", "1e-4")]))
            .unwrap(),
    )
    .unwrap();
    for r in &rows {
        assert!(r.ratio.is_finite() && r.ratio < 2.0, "{r:?}");
        assert!(r.energy_drift < 1e-8 && r.mass_drift < 1e-10, "{r:?}");
    }
}

#[test]
fn blown_up_cells_are_flagged_not_fatal() {
    // The schedule T = A^{-2} follows the nonlinear time scale, so finite
    // data rarely fail; non-finite data trip the integrator's health check.
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(dir.path(), &[("n_max", "16"), ("seeds", "1"), ("amplitudes", "1,2"), ("sigma", "NaN")]);
    let (outcome, rows) = apriori_sweep(&resolve(Command::AprioriSweep, &c).unwrap()).unwrap();
    assert_eq!(outcome.exit_code(), 0);
    assert!(rows.iter().all(|r| r.blowup.is_some()));
    let t = read_csv(&fs::read_to_string(&outcome.files[0]).unwrap()).unwrap();
    assert_eq!(t.column("status").unwrap(), ["blowup", "blowup"]);
    assert_eq!(t.column("ratio").unwrap(), ["inf", "inf"]);
}

#[test]
fn decoherence_trivial_cases() {
    let dir = tempfile::tempdir().unwrap();
    let c = |pairs: &[(&str, &str)]| resolve(Command::Decoherence, &cfg(dir.path(), pairs)).unwrap();
    let (_, rows) = decoherence(&c(&[("freqs", "2,8"), ("a_prime", "1"), ("dt", "1e-3")])).unwrap();
    assert!(rows.iter().all(|r| r.distance == 0.0));
    let (_, rows) = decoherence(&c(&[("freqs", "2,8"), ("t", "0")])).unwrap();
    for r in rows {
        assert!((r.distance - 0.1 * PI.sqrt()).abs() < 1e-15);
        assert_eq!(r.distance, r.distance_t0);
    }
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let ok = bin().args(["envelope", "-o", out, "--set", "n_max=32"]).status().unwrap();
    assert_eq!(ok.code(), Some(0));
    let tol = bin().args(["miura", "-o", out, "-s", "n_max=16", "-s", "T=0.01", "-s", "band=4", "-s", "tol=1e-300"]).status().unwrap();
    assert_eq!(tol.code(), Some(2));
    let blowup = bin()
        .args(["simulate", "-o", out, "-s", "n_max=16", "-s", "norm=1e3", "-s", "sign=-1", "-s", "dt=0.05", "-s", "T=1"])
        .status()
        .unwrap();
    assert_eq!(blowup.code(), Some(3));
    let unknown = bin().args(["simulate", "-o", out, "-s", "nmax=16"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("unknown key"));
    let missing = bin().args(["miura", "-o", out, "-s", "calibration=uncalibrated"]).status().unwrap();
    assert_eq!(missing.code(), Some(1));
}

#[test]
fn config_file_and_print_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# decoherence grid\nfreqs=2,4\na=0.5\n").unwrap();
    let out = bin().args(["decoherence", "--print-config", "-c", path.to_str().unwrap(), "-s", "a=0.25"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("a=0.25\n") && text.contains("freqs=2,4\n") && text.contains("t=0.25\n"));
    assert!(text.contains("# config_sha256: "));
}
