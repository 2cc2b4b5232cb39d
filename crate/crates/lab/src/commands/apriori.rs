use mkdv_core::calibration::CalibrationTable;
use mkdv_core::equations::SystemState;
use mkdv_core::error::Error as CoreError;
use mkdv_core::exec::Execution;
use mkdv_core::integrator::{conservation_report, evolve};
use mkdv_core::random::{random_field, RandomLaw};
use mkdv_core::spectral::sobolev_norm;

use super::{Command, RunOutcome};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::output::{num, write_csv, Preamble, Table};

/// Data are `⟨n⟩^{-sigma} g_n` on `|n| <= band`, rescaled to
/// `‖u₀‖_{H^s} = amplitude`; each cell runs to `T = min(1, amplitude^{-2})`.
pub const APRIORI_DEFAULTS: [(&str, &str); 11] = [
    ("equation", "mkdv"),
    ("sign", "1"),
    ("s", "0.25"),
    ("amplitudes", "0.5,1,2"),
    ("seeds", "10"),
    ("seed", "0"),
    ("n_max", "64"),
    ("sigma", "1"),
    ("band", "0"),
    ("dt", "5e-4"),
    ("sample_every", "1"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct AprioriRow {
    pub s: f64,
    pub amplitude: f64,
    pub seed: u64,
    pub t: f64,
    /// `sup_t ‖u(t)‖_{H^s} / ‖u₀‖_{H^s}`; infinite for blown-up cells.
    pub ratio: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub blowup: Option<f64>,
}

/// The documented amplitude schedule `T = min(1, A^{-2})`.
pub fn sweep_time(amplitude: f64) -> f64 {
    1f64.min(amplitude.powi(-2))
}

fn sorted(mut v: Vec<f64>, key: &str) -> Result<Vec<f64>> {
    if let Some(bad) = v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(LabError::Config(format!("{key} entries must be positive, got {bad}")));
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v)
}

pub fn apriori_sweep(cfg: &ExperimentConfig) -> Result<(RunOutcome, Vec<AprioriRow>)> {
    let eq = cfg.equation()?;
    let n_max = cfg.usize("n_max")?;
    let (sigma, band) = (cfg.f64("sigma")?, cfg.usize("band")?);
    let (dt, every) = (cfg.positive("dt")?, cfg.usize("sample_every")?);
    let s_grid = sorted(cfg.list("s")?, "s")?;
    let amplitudes = sorted(cfg.list("amplitudes")?, "amplitudes")?;
    let (seed0, seeds) = (cfg.u64("seed")?, cfg.u64("seeds")?);
    let mut cells = Vec::new();
    for &s in &s_grid {
        for &a in &amplitudes {
            cells.extend((0..seeds).map(|i| (s, a, seed0.wrapping_add(i))));
        }
    }

    let results: Vec<Result<AprioriRow>> = Execution::default().map(&cells, |&(s, amplitude, seed)| {
        let mut law = RandomLaw::new(sigma).normalized(s, amplitude);
        if band > 0 {
            law = law.band(band);
        }
        let u0 = random_field(n_max, &law, seed);
        let t = sweep_time(amplitude);
        let mut row = AprioriRow {
            s,
            amplitude,
            seed,
            t,
            ratio: f64::INFINITY,
            mass_drift: f64::NAN,
            energy_drift: f64::NAN,
            blowup: None,
        };
        match evolve(&SystemState::scalar(u0.clone(), 0.0), &eq, t, dt, every) {
            Ok(traj) => {
                let base = sobolev_norm(&u0, s);
                row.ratio = traj.slices.iter().map(|x| sobolev_norm(x.u(), s)).fold(0.0, f64::max) / base;
                let report = conservation_report(&traj);
                row.mass_drift = report.mass_drift;
                row.energy_drift = report.energy_drift;
            }
            Err(CoreError::BlowUp { last_good_time, .. }) => row.blowup = Some(last_good_time),
            Err(e) => return Err(e.into()),
        }
        Ok(row)
    });
    let rows: Vec<AprioriRow> = results.into_iter().collect::<Result<_>>()?;

    let mut preamble = Preamble::new(Command::AprioriSweep.name(), cfg, &CalibrationTable::shipped());
    preamble.note("schedule", "T = min(1, amplitude^-2)");
    let mut table =
        Table::new(&["s", "amplitude", "seed", "T", "ratio", "mass_drift", "energy_drift", "status", "last_good_time"]);
    for r in &rows {
        table.push(vec![
            num(r.s),
            num(r.amplitude),
            r.seed.to_string(),
            num(r.t),
            num(r.ratio),
            num(r.mass_drift),
            num(r.energy_drift),
            if r.blowup.is_some() { "blowup" } else { "ok" }.into(),
            r.blowup.map(num).unwrap_or_default(),
        ]);
    }
    let path = write_csv(&cfg.output_dir(), "apriori_sweep.csv", &preamble, &table)?;
    Ok((RunOutcome::new(Command::AprioriSweep, Vec::new(), vec![path]), rows))
}
