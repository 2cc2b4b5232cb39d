use mkdv_core::calibration::CalibrationTable;
use mkdv_core::envelopes::{build_envelope, envelope_symbol, ENVELOPE_TOL};

use super::{datum, Command, RunOutcome};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{num, read_csv, write_csv, Preamble};

pub const ENVELOPE_DEFAULTS: [(&str, &str); 3] = [("n_max", "256"), ("s", "0.25"), ("eps", "0.125")];

pub fn envelope(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let n_max = cfg.usize("n_max")?;
    let (s, eps) = (cfg.f64("s")?, cfg.positive("eps")?);
    let u0 = datum(cfg, n_max, cfg.u64("seed")?)?;
    let env = build_envelope(&u0, s, eps)?;
    let check = env.verify();

    let mut preamble = Preamble::new(Command::Envelope.name(), cfg, &CalibrationTable::shipped()).tolerance("envelope", ENVELOPE_TOL);
    preamble.note("domination", num(check.domination));
    preamble.note("sum", num(check.sum));
    preamble.note("sum_bound", num(check.sum_bound));
    preamble.note("lipschitz", num(check.lipschitz));
    let mut violations = Vec::new();
    if !check.holds(eps, ENVELOPE_TOL) {
        violations.push(format!("envelope properties fail: {check:?}"));
    }
    match envelope_symbol(&env, s) {
        Ok((symbol, report)) => {
            preamble.note("symbol_eps", num(symbol.eps()));
            preamble.note("symbol_max_block_ratio", num(report.max_block_ratio));
            preamble.note("symbol_max_second_difference", num(report.max_second_difference));
        }
        Err(e) => violations.push(format!("envelope symbol: {e}")),
    }
    let table = read_csv(&env.to_csv())?;
    let path = write_csv(&cfg.output_dir(), "envelope.csv", &preamble, &table)?;
    Ok(RunOutcome::new(Command::Envelope, violations, vec![path]))
}
