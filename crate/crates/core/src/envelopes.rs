//! Frequency envelopes of initial data and the symbols built from them.
//!
//! Block energies are normalized by the dyadic form of the `H^s` norm,
//! `‖u‖²_{H^s,dy} = Σ_m 2^{2ms} ‖P_m u‖²`, so the normalized energies `c_m`
//! sum to exactly one.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::resonance::{ClassConstants, ClassReport, SymbolFunction};
use crate::spectral::{DyadicBlock, SpectralField};

/// Floating tolerance for the invariant re-checks.
pub const ENVELOPE_TOL: f64 = 1e-12;

/// Summation bound `C(ε) = 2/(1 - 2^{-ε/2})`.
pub fn envelope_sum_bound(eps: f64) -> f64 {
    2.0 / (1.0 - (-eps / 2.0).exp2())
}

/// A log-Lipschitz majorant `β_k` of the normalized block energies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyEnvelope {
    /// `β_k` for blocks `k = 0..=K`.
    pub beta: Vec<f64>,
    /// Normalized block energies `c_k`.
    pub energies: Vec<f64>,
    pub eps: f64,
    pub s: f64,
    /// `‖u₀‖²_{H^s}` in its dyadic form.
    pub norm_ref: f64,
}

/// Outcome of re-verifying the three envelope properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeCheck {
    /// `max_k c_k / β_k`; property (a) is `<= 1`.
    pub domination: f64,
    /// `Σ β_k`; property (b) is `<= C(ε)`.
    pub sum: f64,
    pub sum_bound: f64,
    /// `max |log₂ β_n − log₂ β_m| / |n − m|`; property (c) is `<= ε/2`.
    pub lipschitz: f64,
}

impl EnvelopeCheck {
    pub fn holds(&self, eps: f64, tol: f64) -> bool {
        self.domination <= 1.0 + tol && self.sum <= self.sum_bound + tol && self.lipschitz <= eps / 2.0 + tol
    }
}

/// `2^{2ms} ‖P_m u‖²` for every block meeting the support of `u`.
pub fn block_energies(u: &SpectralField, s: f64) -> Vec<f64> {
    let blocks = DyadicBlock::of(u.n_max() as i64).0 as usize + 1;
    let mut out = vec![0.0; blocks];
    for (n, c) in u.nonnegative().iter().enumerate() {
        let k = DyadicBlock::of(n as i64).0;
        let mult = if n == 0 { 1.0 } else { 2.0 };
        out[k as usize] += mult * c.norm_sqr();
    }
    for (k, e) in out.iter_mut().enumerate() {
        *e *= (2.0 * k as f64 * s).exp2();
    }
    out
}

/// Builds `β_n = max(max_m 2^{-(ε/2)|n-m|} c_m, 2^{-(ε/2)n} max_m c_m)`.
pub fn build_envelope(u0: &SpectralField, s: f64, eps: f64) -> Result<FrequencyEnvelope> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps = {eps} must be positive")));
    }
    let raw = block_energies(u0, s);
    let norm_ref: f64 = raw.iter().sum();
    if !(norm_ref > 0.0 && norm_ref.is_finite()) {
        return Err(Error::UndefinedEnvelope(format!("block energy {norm_ref} of the initial datum")));
    }
    let energies: Vec<f64> = raw.iter().map(|e| e / norm_ref).collect();
    let beta = envelope_of(&energies, eps);
    let env = FrequencyEnvelope { beta, energies, eps, s, norm_ref };
    let check = env.verify();
    if !check.holds(eps, ENVELOPE_TOL) {
        return Err(Error::UndefinedEnvelope(format!("invariants fail: {check:?}")));
    }
    Ok(env)
}

fn envelope_of(c: &[f64], eps: f64) -> Vec<f64> {
    let rate = -eps / 2.0;
    let top = c.iter().cloned().fold(0.0, f64::max);
    (0..c.len())
        .map(|n| {
            let spread = c
                .iter()
                .enumerate()
                .map(|(m, &cm)| (rate * n.abs_diff(m) as f64).exp2() * cm)
                .fold(0.0, f64::max);
            spread.max((rate * n as f64).exp2() * top)
        })
        .collect()
}

impl FrequencyEnvelope {
    pub fn blocks(&self) -> usize {
        self.beta.len()
    }

    /// Re-evaluates properties (a), (b) and (c) from the stored sequences.
    pub fn verify(&self) -> EnvelopeCheck {
        let domination = self
            .energies
            .iter()
            .zip(&self.beta)
            .map(|(c, b)| c / b)
            .fold(0.0, f64::max);
        let sum = self.beta.iter().sum();
        let logs: Vec<f64> = self.beta.iter().map(|b| b.log2()).collect();
        let mut lipschitz: f64 = 0.0;
        for n in 0..logs.len() {
            for m in n + 1..logs.len() {
                lipschitz = lipschitz.max((logs[n] - logs[m]).abs() / (m - n) as f64);
            }
        }
        EnvelopeCheck { domination, sum, sum_bound: envelope_sum_bound(self.eps), lipschitz }
    }

    /// `n,c_n,beta_n` with one row per block.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,c_n,beta_n\n");
        for (k, (c, b)) in self.energies.iter().zip(&self.beta).enumerate() {
            writeln!(out, "{k},{c:e},{b:e}").unwrap();
        }
        out
    }

    /// Growth half-width `ε′` of the associated symbol: the envelope's own
    /// slope `ε/2` plus the floor depth `log₂(1/max c)` spread over the
    /// first enforced growth octave.
    pub fn symbol_eps(&self, growth_from: u64) -> f64 {
        let top = self.energies.iter().cloned().fold(0.0, f64::max);
        let octaves = (1.0 + (growth_from * growth_from) as f64).log2();
        self.eps / 2.0 + (1.0 / top).log2() / octaves + self.eps / 8.0
    }
}

/// Monotone cubic Hermite slopes (Fritsch-Carlson) for unit-spaced nodes;
/// the end slope is `last_slope` clamped to the monotone range.
fn pchip_slopes(y: &[f64], last_slope: f64) -> Vec<f64> {
    let n = y.len();
    if n == 1 {
        return vec![last_slope];
    }
    let secant: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let mut d = vec![0.0; n];
    d[0] = secant[0];
    for i in 1..n - 1 {
        let (a, b) = (secant[i - 1], secant[i]);
        d[i] = if a * b <= 0.0 { 0.0 } else { 2.0 * a * b / (a + b) };
    }
    let tail = secant[n - 2];
    d[n - 1] = if tail * last_slope <= 0.0 { 0.0 } else { last_slope.abs().min(3.0 * tail.abs()) * tail.signum() };
    d
}

fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * d1
}

/// Class constants under which [`envelope_symbol`] is checked.
pub fn envelope_class_constants(env: &FrequencyEnvelope, s: f64) -> ClassConstants {
    let mut c = ClassConstants::standard(s, env.eps);
    c.slowly_varying = (2.0 * s.abs() + env.eps / 2.0).exp2() * (1.0 + 1e-12);
    c.growth_eps = env.symbol_eps(c.growth_from);
    c
}

/// The symbol with `a(2^k) = 2^{2ks}/β_k`, interpolated by a monotone cubic
/// in `(log₂ n, log₂ a)` and continued as `n^{2s}` past the last block.
///
/// The result is checked against [`envelope_class_constants`] on twice the
/// tabulated range.
pub fn envelope_symbol(env: &FrequencyEnvelope, s: f64) -> Result<(SymbolFunction, ClassReport)> {
    let nodes: Vec<f64> = env
        .beta
        .iter()
        .enumerate()
        .map(|(k, b)| 2.0 * k as f64 * s - b.log2())
        .collect();
    let slopes = pchip_slopes(&nodes, 2.0 * s);
    let last = nodes.len() - 1;
    let cap = 1usize << last;
    let mut values = Vec::with_capacity(cap + 1);
    for n in 0..=cap {
        let x = (n.max(1) as f64).log2();
        let i = (x.floor() as usize).min(last.saturating_sub(1));
        let y = if last == 0 {
            nodes[0]
        } else {
            hermite(nodes[i], nodes[i + 1], slopes[i], slopes[i + 1], x - i as f64)
        };
        values.push(y.exp2());
    }
    let constants = envelope_class_constants(env, s);
    let symbol = SymbolFunction::from_values(values, s, constants.growth_eps)?;
    let report = symbol.check_class(&constants, 2 * cap as u64)?;
    Ok((symbol, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, RandomLaw};
    use crate::resonance::Symbol;
    use num_complex::Complex64;

    fn block_field(n_max: usize, k: u32) -> SpectralField {
        SpectralField::from_fn(n_max, |n| {
            if DyadicBlock::of(n).0 == k {
                Complex64::new(1.0, 0.5)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn zero_field_is_rejected() {
        let err = build_envelope(&SpectralField::zeros(16), 0.5, 0.125).unwrap_err();
        assert!(matches!(err, Error::UndefinedEnvelope(_)));
    }

    #[test]
    fn single_block_profile() {
        let eps = 0.125;
        let env = build_envelope(&block_field(256, 4), 0.25, eps).unwrap();
        assert!((env.energies[4] - 1.0).abs() < 1e-15);
        for (n, b) in env.beta.iter().enumerate() {
            let spread = (-(eps / 2.0) * n.abs_diff(4) as f64).exp2();
            let floor = (-(eps / 2.0) * n as f64).exp2();
            assert_eq!(*b, spread.max(floor));
        }
    }

    #[test]
    fn flat_energies_give_flat_envelope() {
        let beta = envelope_of(&[0.2; 5], 0.125);
        assert!(beta.iter().all(|&b| b == 0.2));
    }

    #[test]
    fn random_spectra_satisfy_invariants() {
        for seed in 0..20 {
            for s in [0.0, 0.25, 0.5] {
                let u = random_field(200, &RandomLaw::new(0.5 + seed as f64 / 10.0), seed);
                let env = build_envelope(&u, s, 0.125).unwrap();
                assert!(env.verify().holds(0.125, ENVELOPE_TOL), "{:?}", env.verify());
                for (c, b) in env.energies.iter().zip(&env.beta) {
                    assert!(b >= c);
                }
            }
        }
    }

    #[test]
    fn scaling_leaves_envelope_unchanged() {
        let u = random_field(64, &RandomLaw::new(1.0), 3);
        let a = build_envelope(&u, 0.25, 0.125).unwrap();
        let b = build_envelope(&(&u * 4.0), 0.25, 0.125).unwrap();
        assert_eq!(a.beta, b.beta);
    }

    #[test]
    fn flat_envelope_symbol_is_scaled_power() {
        let env = FrequencyEnvelope { beta: vec![0.25; 6], energies: vec![0.1; 6], eps: 0.125, s: 0.5, norm_ref: 1.0 };
        let (a, _) = envelope_symbol(&env, 0.5).unwrap();
        for k in 0..6 {
            let n = 1i64 << k;
            assert!((a.value(n) - 4.0 * n as f64).abs() < 1e-12 * n as f64);
        }
        // Within a block the monotone cubic reproduces the linear log-log profile.
        assert!((a.value(5) - 20.0).abs() < 1e-10);
    }

    #[test]
    fn single_block_symbol_passes_class_checks() {
        let env = build_envelope(&block_field(512, 5), 0.25, 0.125).unwrap();
        let (a, report) = envelope_symbol(&env, 0.25).unwrap();
        for k in 0..env.blocks() {
            let n = 1i64 << k;
            let expected = (0.5 * k as f64).exp2() / env.beta[k];
            assert!((a.value(n) / expected - 1.0).abs() < 1e-12);
        }
        assert!(report.max_block_ratio <= (0.5f64 + 0.0625).exp2() * (1.0 + 1e-12));
    }

    #[test]
    fn random_envelope_symbols_pass_class_checks() {
        for seed in 0..10 {
            for s in [0.0, 0.25, 0.5] {
                let u = random_field(256, &RandomLaw::new(s + 0.6), seed);
                let env = build_envelope(&u, s, 0.125).unwrap();
                envelope_symbol(&env, s).unwrap();
            }
        }
    }

    #[test]
    fn csv_has_one_row_per_block() {
        let env = build_envelope(&block_field(64, 2), 0.0, 0.125).unwrap();
        let csv = env.to_csv();
        assert_eq!(csv.lines().count(), env.blocks() + 1);
        assert!(csv.starts_with("n,c_n,beta_n\n"));
    }
}
