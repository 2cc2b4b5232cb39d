use std::io::BufReader;
use std::path::Path;

use mkdv_core::calibration::CalibrationTable;
use mkdv_core::equations::{EquationKind, EquationSpec, SystemState};
use mkdv_core::integrator::{conservation_report, evolve, read_checkpoint, write_checkpoint};

use super::{datum, Command, RunOutcome};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{num, write_csv, Preamble, Table};

/// Tolerances default to `none` (reported, not enforced).
pub const SIMULATE_DEFAULTS: [(&str, &str); 8] = [
    ("equation", "mkdv"),
    ("sign", "1"),
    ("n_max", "64"),
    ("T", "1"),
    ("dt", "1e-3"),
    ("sample_every", "10"),
    ("mass_tol", "none"),
    ("energy_tol", "none"),
];

/// Reads a checkpoint written by `simulate`, skipping its preamble.
pub fn read_checkpoint_file(path: &Path) -> Result<(SystemState, EquationSpec)> {
    let text = std::fs::read_to_string(path)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    Ok(read_checkpoint(BufReader::new(body.as_bytes()))?)
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let eq = cfg.equation()?;
    let n_max = cfg.usize("n_max")?;
    let seed = cfg.u64("seed")?;
    let u = datum(cfg, n_max, seed)?;
    let state = if eq.kind() == EquationKind::MkdvMkdvSystem {
        SystemState::pair(u, datum(cfg, n_max, seed.wrapping_add(1))?, 0.0)?
    } else {
        SystemState::scalar(u, 0.0)
    };
    let traj = evolve(&state, &eq, cfg.positive("T")?, cfg.positive("dt")?, cfg.usize("sample_every")?)?;
    let report = conservation_report(&traj);

    let mut preamble = Preamble::new(Command::Simulate.name(), cfg, &CalibrationTable::shipped());
    let mut violations = Vec::new();
    for (name, key, drift) in [("mass", "mass_tol", report.mass_drift), ("energy", "energy_tol", report.energy_drift)] {
        if let Some(tol) = cfg.optional_f64(key)? {
            preamble = preamble.tolerance(key, tol);
            if !(drift <= tol) {
                violations.push(format!("relative {name} drift {} exceeds {}", num(drift), num(tol)));
            }
        }
    }
    preamble.note("mass_drift", num(report.mass_drift));
    preamble.note("energy_drift", num(report.energy_drift));
    preamble.note("mean_drift", num(report.mean_drift));
    preamble.note("dt_internal", num(traj.dt_internal));

    let mut header = vec!["time", "mass", "energy", "mean"];
    if report.system.is_some() {
        header.extend(["u_mass", "v_mass", "cross"]);
    }
    let mut table = Table::new(&header);
    for i in 0..report.times.len() {
        let mut row = vec![num(report.times[i]), num(report.mass[i]), num(report.energy[i]), num(report.mean[i])];
        if let Some(s) = &report.system {
            row.extend([num(s.u_mass[i]), num(s.v_mass[i]), num(s.cross[i])]);
        }
        table.push(row);
    }

    let dir = cfg.output_dir();
    let csv = write_csv(&dir, "simulate_conservation.csv", &preamble, &table)?;
    let mut ckpt = preamble.lines().into_bytes();
    write_checkpoint(traj.last(), &eq, &mut ckpt)?;
    let ckpt_path = dir.join("simulate.ckpt");
    std::fs::write(&ckpt_path, ckpt)?;
    Ok(RunOutcome::new(Command::Simulate, violations, vec![csv, ckpt_path]))
}
