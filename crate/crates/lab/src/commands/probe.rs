use mkdv_core::calibration::CalibrationTable;
use mkdv_core::exec::Execution;
use mkdv_core::strichartz::{strichartz_probe, ProbeConfig, ProbeKind};

use super::{Command, RunOutcome};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::output::{num, read_csv, write_csv, Preamble};

/// Empty `cutoffs` selects the default grid of the kind.
pub const PROBE_DEFAULTS: [(&str, &str); 4] = [("kind", "L4"), ("cutoffs", ""), ("samples", "8"), ("seed", "0")];

pub fn probe_config(cfg: &ExperimentConfig) -> Result<ProbeConfig> {
    let kind: ProbeKind = cfg.str("kind")?.parse()?;
    let mut pc = ProbeConfig::default_for(kind);
    let cutoffs: Vec<i64> = cfg.list("cutoffs")?;
    if !cutoffs.is_empty() {
        pc.cutoffs = cutoffs;
    }
    if let Some(bad) = pc.cutoffs.iter().find(|c| **c < 0) {
        return Err(LabError::Config(format!("cutoffs must be non-negative, got {bad}")));
    }
    pc.samples = cfg.usize("samples")?;
    pc.seed = cfg.u64("seed")?;
    Ok(pc)
}

pub fn probe_strichartz(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let pc = probe_config(cfg)?;
    let report = strichartz_probe(&pc, Execution::default());
    let mut preamble = Preamble::new(Command::ProbeStrichartz.name(), cfg, &CalibrationTable::shipped());
    if let Some(slope) = report.slope {
        preamble.note("slope", num(slope));
    }
    let table = read_csv(&report.to_csv())?;
    let name = format!("probe_{}.csv", pc.kind.name());
    let path = write_csv(&cfg.output_dir(), &name, &preamble, &table)?;
    Ok(RunOutcome::new(Command::ProbeStrichartz, Vec::new(), vec![path]))
}
