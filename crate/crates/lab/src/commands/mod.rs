//! The experiment commands. Each one resolves its config against a defaults
//! table, runs, and writes its result files into the `output` directory.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result, EXIT_OK, EXIT_TOLERANCE};

mod apriori;
mod audit;
mod data;
mod decoherence;
mod envelope;
mod miura;
mod probe;
mod simulate;

pub use apriori::{apriori_sweep, AprioriRow, APRIORI_DEFAULTS};
pub use audit::{audit, AUDIT_DEFAULTS};
pub use data::{calibration, datum, DATUM_DEFAULTS};
pub use decoherence::{cosine_datum, decoherence, DecoherenceRow, DECOHERENCE_DEFAULTS};
pub use envelope::{envelope, ENVELOPE_DEFAULTS};
pub use miura::{miura, MIURA_DEFAULTS};
pub use probe::{probe_strichartz, PROBE_DEFAULTS};
pub use simulate::{read_checkpoint_file, simulate, SIMULATE_DEFAULTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Simulate,
    AprioriSweep,
    Decoherence,
    Audit,
    Miura,
    ProbeStrichartz,
    Envelope,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::AprioriSweep,
        Command::Decoherence,
        Command::Audit,
        Command::Miura,
        Command::ProbeStrichartz,
        Command::Envelope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::AprioriSweep => "apriori-sweep",
            Command::Decoherence => "decoherence",
            Command::Audit => "audit",
            Command::Miura => "miura",
            Command::ProbeStrichartz => "probe-strichartz",
            Command::Envelope => "envelope",
        }
    }

    pub fn defaults(self) -> Vec<(&'static str, &'static str)> {
        match self {
            Command::Simulate => SIMULATE_DEFAULTS.to_vec(),
            Command::AprioriSweep => APRIORI_DEFAULTS.to_vec(),
            Command::Decoherence => DECOHERENCE_DEFAULTS.to_vec(),
            Command::Audit => AUDIT_DEFAULTS.to_vec(),
            Command::Miura => MIURA_DEFAULTS.to_vec(),
            Command::ProbeStrichartz => PROBE_DEFAULTS.to_vec(),
            Command::Envelope => ENVELOPE_DEFAULTS.to_vec(),
        }
        .into_iter()
        .chain(if self.takes_datum() { DATUM_DEFAULTS.to_vec() } else { Vec::new() })
        .collect()
    }

    fn takes_datum(self) -> bool {
        matches!(self, Command::Simulate | Command::Audit | Command::Miura | Command::Envelope)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| LabError::Config(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Success,
    /// Checks that exceeded their tolerance.
    ToleranceViolation(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub command: Command,
    pub status: Status,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub(crate) fn new(command: Command, violations: Vec<String>, files: Vec<PathBuf>) -> Self {
        let status = if violations.is_empty() { Status::Success } else { Status::ToleranceViolation(violations) };
        Self { command, status, files }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Success => EXIT_OK,
            Status::ToleranceViolation(_) => EXIT_TOLERANCE,
        }
    }
}

/// Resolves `cfg` for `command`.
pub fn resolve(command: Command, cfg: &ExperimentConfig) -> Result<ExperimentConfig> {
    cfg.resolve(&command.defaults())
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let cfg = resolve(command, cfg)?;
    log::info!("{command}: config sha256 {}", cfg.hash(command.name()));
    match command {
        Command::Simulate => simulate(&cfg),
        Command::AprioriSweep => apriori_sweep(&cfg).map(|(o, _)| o),
        Command::Decoherence => decoherence(&cfg).map(|(o, _)| o),
        Command::Audit => audit(&cfg),
        Command::Miura => miura(&cfg),
        Command::ProbeStrichartz => probe_strichartz(&cfg),
        Command::Envelope => envelope(&cfg),
    }
}
