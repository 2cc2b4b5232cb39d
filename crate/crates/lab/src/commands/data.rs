use std::f64::consts::PI;

use num_complex::Complex64;

use mkdv_core::calibration::CalibrationTable;
use mkdv_core::random::{random_field, RandomLaw};
use mkdv_core::spectral::SpectralField;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

/// Initial-datum keys shared by the single-datum commands.
///
/// `data` is one of `random`, `zero`, `constant` (value `amplitude`) or
/// `cosine` (`amplitude · cos(freq · x)`). Random data follow
/// `û(n) = ⟨n⟩^{-sigma} g_n` on `|n| <= band` (`0` for the full band),
/// rescaled to `‖u‖_{H^{norm_s}} = norm` unless `norm=none`.
pub const DATUM_DEFAULTS: [(&str, &str); 8] = [
    ("data", "random"),
    ("sigma", "2"),
    ("band", "0"),
    ("norm_s", "1"),
    ("norm", "1"),
    ("seed", "0"),
    ("amplitude", "1"),
    ("freq", "1"),
];

pub fn datum(cfg: &ExperimentConfig, n_max: usize, seed: u64) -> Result<SpectralField> {
    let amplitude = cfg.f64("amplitude")?;
    match cfg.str("data")? {
        "zero" => Ok(SpectralField::zeros(n_max)),
        "constant" => {
            let mut u = SpectralField::zeros(n_max);
            u.set(0, Complex64::new(2.0 * PI * amplitude, 0.0));
            Ok(u)
        }
        "cosine" => {
            let freq = cfg.usize("freq")?;
            if freq > n_max {
                return Err(LabError::Config(format!("freq = {freq} exceeds n_max = {n_max}")));
            }
            let mut u = SpectralField::zeros(n_max);
            // cos(Nx) has coefficients π at ±N, 2π at N = 0.
            let c = if freq == 0 { 2.0 * PI } else { PI };
            u.set(freq as i64, Complex64::new(c * amplitude, 0.0));
            Ok(u)
        }
        "random" => {
            let mut law = RandomLaw::new(cfg.f64("sigma")?);
            let band = cfg.usize("band")?;
            if band > 0 {
                law = law.band(band);
            }
            if let Some(norm) = cfg.optional_f64("norm")? {
                law = law.normalized(cfg.f64("norm_s")?, norm);
            }
            Ok(random_field(n_max, &law, seed))
        }
        other => Err(LabError::Config(format!("unknown data kind {other:?}"))),
    }
}

/// `shipped`, `uncalibrated`, or a path to a JSON calibration table.
pub fn calibration(cfg: &ExperimentConfig) -> Result<CalibrationTable> {
    match cfg.str("calibration")? {
        "shipped" => Ok(CalibrationTable::shipped()),
        "uncalibrated" => Ok(CalibrationTable::uncalibrated()),
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LabError::Config(format!("cannot read calibration table {path}: {e}")))?;
            serde_json::from_str(&text).map_err(|e| LabError::Config(format!("calibration table {path}: {e}")))
        }
    }
}
