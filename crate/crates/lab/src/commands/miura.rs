use mkdv_core::equations::{kdv_residual, EquationSpec, Sign, SystemState};
use mkdv_core::error::Error as CoreError;
use mkdv_core::exec::Execution;
use mkdv_core::integrator::evolve;

use super::{calibration, datum, Command, RunOutcome};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{num, write_csv, Preamble, Table};

/// Always a defocusing mKdV run.
pub const MIURA_DEFAULTS: [(&str, &str); 6] = [
    ("n_max", "64"),
    ("T", "0.25"),
    ("dt", "1e-3"),
    ("sample_every", "25"),
    ("tol", "1e-6"),
    ("calibration", "shipped"),
];

pub fn miura(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let table = calibration(cfg)?;
    let coeffs = table.miura.ok_or_else(|| CoreError::CalibrationRequired("Miura coefficients".into()))?;
    let n_max = cfg.usize("n_max")?;
    let u0 = datum(cfg, n_max, cfg.u64("seed")?)?;
    let eq = EquationSpec::mkdv(Sign::Defocusing);
    let traj = evolve(&SystemState::scalar(u0, 0.0), &eq, cfg.positive("T")?, cfg.positive("dt")?, cfg.usize("sample_every")?)?;
    let residuals: Vec<f64> = Execution::default()
        .map(&traj.slices, |s| kdv_residual(s.u(), &coeffs))
        .into_iter()
        .collect::<std::result::Result<_, _>>()?;
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    let tol = cfg.f64("tol")?;

    let mut preamble = Preamble::new(Command::Miura.name(), cfg, &table).tolerance("residual", tol);
    preamble.note("max_residual", num(worst));
    let mut out = Table::new(&["time", "residual"]);
    for (t, r) in traj.times.iter().zip(&residuals) {
        out.push(vec![num(*t), num(*r)]);
    }
    let path = write_csv(&cfg.output_dir(), "miura.csv", &preamble, &out)?;
    let violations = if worst <= tol {
        Vec::new()
    } else {
        vec![format!("KdV residual {} exceeds {}", num(worst), num(tol))]
    };
    Ok(RunOutcome::new(Command::Miura, violations, vec![path]))
}
