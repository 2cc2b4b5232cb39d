use serde_json::{json, Value};

use mkdv_core::envelopes::{build_envelope, ENVELOPE_TOL};
use mkdv_core::equations::{EquationSpec, SystemState};
use mkdv_core::error::Error as CoreError;
use mkdv_core::exec::Execution;
use mkdv_core::integrator::evolve;
use mkdv_core::modified_energy::{dbp_identity_residual, fundamental_identity_residual, Quadrature};
use mkdv_core::resonance::SymbolFunction;
use mkdv_core::spacetime::propagation_ratios;

use super::{calibration, datum, Command, RunOutcome};
use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::output::{num, write_json, Preamble};

/// The identities run on a renormalized trajectory of `samples` slices over
/// `[0, T]`; the propagation ratios on a separate run over `[0, prop_T]`
/// with block-resolving sampling.
pub const AUDIT_DEFAULTS: [(&str, &str); 15] = [
    ("sign", "1"),
    ("n_max", "32"),
    ("T", "1e-4"),
    ("samples", "205"),
    ("s", "0.5"),
    ("eps", "0.125"),
    ("cutoffs", "1,4,16"),
    ("quadrature", "simpson"),
    ("identity_tol", "1e-6"),
    ("calibration", "shipped"),
    ("alpha", "1"),
    ("prop_n_max", "16"),
    ("prop_T", "0.125"),
    ("prop_dt", "9.765625e-4"),
    ("envelope_s", "0.25"),
];

fn quadrature(name: &str) -> Result<Quadrature> {
    match name {
        "simpson" => Ok(Quadrature::Simpson),
        "trapezoid" => Ok(Quadrature::Trapezoid),
        other => Err(LabError::Config(format!("unknown quadrature {other:?}"))),
    }
}

pub fn audit(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let table = calibration(cfg)?;
    let exec = Execution::default();
    let eq = EquationSpec::renormalized(cfg.sign("sign")?);
    let seed = cfg.u64("seed")?;
    let (s, eps) = (cfg.f64("s")?, cfg.positive("eps")?);
    let a = SymbolFunction::sobolev(s, eps);
    let rule = quadrature(cfg.str("quadrature")?)?;
    let tol = cfg.positive("identity_tol")?;
    let mut violations = Vec::new();

    let n_max = cfg.usize("n_max")?;
    let t = cfg.positive("T")?;
    let samples = cfg.usize("samples")?.max(1);
    let u0 = datum(cfg, n_max, seed)?;
    let traj = evolve(&SystemState::scalar(u0.clone(), 0.0), &eq, t, t / samples as f64, 1)?;

    let fundamental = fundamental_identity_residual(&traj, &a, &table, rule)?;
    if !(fundamental <= tol) {
        violations.push(format!("fundamental identity residual {} exceeds {}", num(fundamental), num(tol)));
    }
    let mut ledgers = Vec::new();
    let mut cutoffs: Vec<usize> = cfg.list("cutoffs")?;
    cutoffs.sort_unstable();
    cutoffs.dedup();
    for m in cutoffs {
        let ledger = dbp_identity_residual(&traj, &a, m, &table, rule, tol, exec)?;
        if !(ledger.residual <= tol) {
            violations.push(format!("dbp identity residual {} exceeds {} at M = {m}", num(ledger.residual), num(tol)));
        }
        ledgers.push(serde_json::to_value(&ledger).expect("ledger serializes"));
    }

    let prop_n = cfg.usize("prop_n_max")?;
    let prop_traj = evolve(
        &SystemState::scalar(datum(cfg, prop_n, seed)?, 0.0),
        &eq,
        cfg.positive("prop_T")?,
        cfg.positive("prop_dt")?,
        1,
    )?;
    let ratios = propagation_ratios(&prop_traj, s, cfg.positive("alpha")?, exec)?;

    let env_s = cfg.f64("envelope_s")?;
    let envelope = match build_envelope(&u0, env_s, eps) {
        Ok(env) => {
            let check = env.verify();
            let holds = check.holds(eps, ENVELOPE_TOL);
            if !holds {
                violations.push(format!("envelope properties fail: {check:?}"));
            }
            json!({
                "s": env_s,
                "domination": check.domination,
                "sum": check.sum,
                "sum_bound": check.sum_bound,
                "lipschitz": check.lipschitz,
                "holds": holds,
            })
        }
        Err(CoreError::UndefinedEnvelope(reason)) => json!({ "s": env_s, "undefined": reason }),
        Err(e) => return Err(e.into()),
    };

    let preamble = Preamble::new(Command::Audit.name(), cfg, &table)
        .tolerance("identity", tol)
        .tolerance("envelope", ENVELOPE_TOL);
    let body = json!({
        "fundamental_identity": { "residual": fundamental, "tolerance": tol, "time_window": [0.0, t] },
        "dbp_identity": Value::Array(ledgers),
        "propagation": serde_json::to_value(ratios).expect("ratios serialize"),
        "envelope": envelope,
        "violations": violations,
        "pass": violations.is_empty(),
    });
    let path = write_json(&cfg.output_dir(), "audit.json", &preamble, body)?;
    Ok(RunOutcome::new(Command::Audit, violations, vec![path]))
}
