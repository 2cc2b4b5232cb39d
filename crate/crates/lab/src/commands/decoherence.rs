use std::f64::consts::PI;

use num_complex::Complex64;

use mkdv_core::calibration::CalibrationTable;
use mkdv_core::equations::{physical_l2_sq, EquationSpec, SystemState};
use mkdv_core::exec::Execution;
use mkdv_core::integrator::advance;
use mkdv_core::spectral::SpectralField;

use super::{Command, RunOutcome};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::output::{num, write_csv, Preamble, Table};

/// Each frequency `N` runs on `n_max = n_factor · N`.
pub const DECOHERENCE_DEFAULTS: [(&str, &str); 8] = [
    ("equation", "mkdv"),
    ("sign", "1"),
    ("a", "1"),
    ("a_prime", "0.9"),
    ("t", "0.25"),
    ("freqs", "8,16,32,64,128"),
    ("n_factor", "4"),
    ("dt", "1.25e-4"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceRow {
    pub n: usize,
    pub n_max: usize,
    /// Physical `L²` distance at time `t`.
    pub distance: f64,
    pub distance_t0: f64,
    /// `‖u₀‖ + ‖u₀′‖`, the largest possible distance under mass conservation.
    pub saturation: f64,
}

/// `amplitude · cos(freq · x)` on the band `n_max`.
pub fn cosine_datum(n_max: usize, freq: usize, amplitude: f64) -> SpectralField {
    let mut u = SpectralField::zeros(n_max);
    u.set(freq as i64, Complex64::new(PI * amplitude, 0.0));
    u
}

fn distance(a: &SpectralField, b: &SpectralField) -> f64 {
    physical_l2_sq(&(a - b)).sqrt()
}

fn row(eq: &EquationSpec, n: usize, factor: usize, (a, a2): (f64, f64), t: f64, dt: f64) -> Result<DecoherenceRow> {
    let n_max = factor * n;
    let (u, v) = (cosine_datum(n_max, n, a), cosine_datum(n_max, n, a2));
    let mut row = DecoherenceRow {
        n,
        n_max,
        distance: distance(&u, &v),
        distance_t0: distance(&u, &v),
        saturation: physical_l2_sq(&u).sqrt() + physical_l2_sq(&v).sqrt(),
    };
    if t != 0.0 {
        let ut = advance(&SystemState::scalar(u, 0.0), eq, t, dt)?;
        let vt = if a == a2 { ut.clone() } else { advance(&SystemState::scalar(v, 0.0), eq, t, dt)? };
        row.distance = distance(ut.u(), vt.u());
    }
    Ok(row)
}

pub fn decoherence(cfg: &ExperimentConfig) -> Result<(RunOutcome, Vec<DecoherenceRow>)> {
    let eq = cfg.equation()?;
    let amps = (cfg.f64("a")?, cfg.f64("a_prime")?);
    let (t, dt) = (cfg.f64("t")?, cfg.positive("dt")?);
    let factor = cfg.usize("n_factor")?;
    if factor < 1 {
        return Err(LabError::Config("n_factor must be at least 1".into()));
    }
    let mut freqs: Vec<usize> = cfg.list("freqs")?;
    freqs.sort_unstable();
    freqs.dedup();
    if freqs.contains(&0) {
        return Err(LabError::Config("frequencies must be positive".into()));
    }
    let rows: Vec<DecoherenceRow> = Execution::default()
        .map(&freqs, |&n| row(&eq, n, factor, amps, t, dt))
        .into_iter()
        .collect::<Result<_>>()?;

    let preamble = Preamble::new(Command::Decoherence.name(), cfg, &CalibrationTable::shipped());
    let mut table = Table::new(&["N", "n_max", "distance", "distance_t0", "saturation"]);
    for r in &rows {
        table.push(vec![r.n.to_string(), r.n_max.to_string(), num(r.distance), num(r.distance_t0), num(r.saturation)]);
    }
    let path = write_csv(&cfg.output_dir(), "decoherence.csv", &preamble, &table)?;
    Ok((RunOutcome::new(Command::Decoherence, Vec::new(), vec![path]), rows))
}
