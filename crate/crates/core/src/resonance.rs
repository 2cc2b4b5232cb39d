//! Integer resonance functions, the symbol class `S^s_ε`, and the
//! symmetrized quartic multiplier `ψ_{s,a}`.
//!
//! Resonance sums use 128-bit integers: `n³` leaves the `i64` range near
//! `|n| = 2²¹`, while `i128` is exact far beyond any frequency used here.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::spectral::{japanese, DyadicBlock};

/// A zero-sum frequency tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrequencyTuple<const N: usize>([i64; N]);

impl<const N: usize> FrequencyTuple<N> {
    pub fn new(n: [i64; N]) -> Result<Self> {
        let sum: i128 = n.iter().map(|&x| x as i128).sum();
        if sum != 0 {
            return Err(Error::Precondition(format!("frequencies {n:?} sum to {sum}, not 0")));
        }
        Ok(Self(n))
    }

    pub fn get(&self) -> &[i64; N] {
        &self.0
    }
}

fn cube_sum(n: &[i64]) -> i128 {
    n.iter().map(|&x| (x as i128).pow(3)).sum()
}

/// The (*) condition for a zero-sum quadruple.
#[inline]
pub fn non_resonant(n1: i64, n2: i64, n3: i64) -> bool {
    (n1 + n2) != 0 && (n1 + n3) != 0 && (n2 + n3) != 0
}

/// `Ω(n̄) = Σ n_i³ = -3(n₁+n₂)(n₁+n₃)(n₂+n₃)` for zero-sum quadruples.
pub fn omega4(n: &FrequencyTuple<4>) -> i128 {
    let [a, b, c, _] = n.0.map(|x| x as i128);
    let direct = cube_sum(&n.0);
    let factored = -3 * (a + b) * (a + c) * (b + c);
    assert_eq!(direct, factored, "quartic resonance identity failed for {:?}", n.0);
    direct
}

/// Bilinear resonance `Σ n_i³ = 3 n₁n₂n₃` for zero-sum triples.
pub fn omega3(n: &FrequencyTuple<3>) -> i128 {
    let [a, b, c] = n.0.map(|x| x as i128);
    let direct = cube_sum(&n.0);
    assert_eq!(direct, 3 * a * b * c, "cubic resonance identity failed for {:?}", n.0);
    direct
}

/// Second resonance: the six-frequency cube sum over
/// `(n₂, n₃, n₄, -n₅, -n₆, -n₇)` for quadruples `(n₁, n₂, n₃, n₄)` and
/// `(n₁, n₅, n₆, n₇)` sharing `n₁`. Equals `Ω(first) - Ω(second)`.
pub fn omega6(first: &FrequencyTuple<4>, second: &FrequencyTuple<4>, shared: i64) -> Result<i128> {
    if first.0[0] != shared || second.0[0] != shared {
        return Err(Error::Precondition(format!(
            "quadruples {:?} and {:?} do not both start with the shared frequency {shared}",
            first.0, second.0
        )));
    }
    let [_, n2, n3, n4] = first.0;
    let [_, n5, n6, n7] = second.0;
    let six = cube_sum(&[n2, n3, n4, -n5, -n6, -n7]);
    assert_eq!(six, omega4(first) - omega4(second), "second resonance identity failed");
    Ok(six)
}

/// A spherically symmetric weight `a(n)`.
pub trait Symbol: Sync {
    fn value(&self, n: i64) -> f64;
}

impl<F: Fn(i64) -> f64 + Sync> Symbol for F {
    fn value(&self, n: i64) -> f64 {
        self(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// `⟨n⟩^{2s}`.
    Sobolev,
    /// Tabulated `a(|n|)` for `|n| <= len-1`, extended by `(|n|/cap)^{2s}`.
    Table(Vec<f64>),
}

/// A sampled symbol `a ∈ S^s_ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFunction {
    s: f64,
    eps: f64,
    repr: Repr,
}

impl SymbolFunction {
    /// The Sobolev weight `⟨n⟩^{2s}`, which lies in every `S^s_ε`.
    pub fn sobolev(s: f64, eps: f64) -> Self {
        Self { s, eps, repr: Repr::Sobolev }
    }

    /// Tabulated values `a(0), a(1), ...`; must be positive and finite.
    pub fn from_values(values: Vec<f64>, s: f64, eps: f64) -> Result<Self> {
        if eps <= 0.0 {
            return Err(Error::InvalidSymbol(format!("eps = {eps} must be positive")));
        }
        if values.is_empty() {
            return Err(Error::InvalidSymbol("empty symbol table".into()));
        }
        if let Some((n, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidSymbol(format!("a({n}) = {v} is not positive")));
        }
        Ok(Self { s, eps, repr: Repr::Table(values) })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Dominating weight `ã(2^k) = 2^{2k(s+ε)}`.
    pub fn dominating(&self, k: u32) -> f64 {
        dominating_weight(self.s, self.eps, k)
    }

    /// Checks the three class properties on `|n| <= n_range`.
    pub fn check_class(&self, constants: &ClassConstants, n_range: u64) -> Result<ClassReport> {
        check_class(self, self.s, constants, n_range)
    }
}

pub fn dominating_weight(s: f64, eps: f64, k: u32) -> f64 {
    (2.0 * k as f64 * (s + eps)).exp2()
}

impl Symbol for SymbolFunction {
    fn value(&self, n: i64) -> f64 {
        let m = n.unsigned_abs();
        match &self.repr {
            Repr::Sobolev => japanese(m as f64).powf(2.0 * self.s),
            Repr::Table(values) => {
                let cap = values.len() as u64 - 1;
                if m <= cap {
                    values[m as usize]
                } else {
                    values[cap as usize] * (m as f64 / cap.max(1) as f64).powf(2.0 * self.s)
                }
            }
        }
    }
}

/// Constants used to make the class properties assertable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassConstants {
    /// `a(n)/a(n') ∈ [1/C, C]` within a dyadic block.
    pub slowly_varying: f64,
    /// `|Δa(n)| <= C₁ a(n) ⟨n⟩^{-1}`.
    pub first_difference: f64,
    /// `|Δ²a(n)| <= C₂ a(n) ⟨n⟩^{-2}`.
    pub second_difference: f64,
    /// Growth window is enforced for `|n| >= growth_from`.
    pub growth_from: u64,
    /// Half-width ε′ of the growth window around `s`.
    pub growth_eps: f64,
}

impl ClassConstants {
    /// Constants adequate for `⟨n⟩^{2s}` and for envelope-derived symbols
    /// with log-Lipschitz constant `eps/2`.
    pub fn standard(s: f64, eps: f64) -> Self {
        let p = 2.0 * s.abs() + 2.0 * eps;
        Self {
            slowly_varying: (2.0 * s.abs() + eps + 0.5).exp2(),
            first_difference: 2.0 * p + 1.0,
            second_difference: 4.0 * (p + 1.0) * (p + 1.0),
            growth_from: 8,
            growth_eps: eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub max_block_ratio: f64,
    pub max_first_difference: f64,
    pub max_second_difference: f64,
    pub growth_min: f64,
    pub growth_max: f64,
}

fn check_class(a: &dyn Symbol, s: f64, c: &ClassConstants, n_range: u64) -> Result<ClassReport> {
    let vals: Vec<f64> = (0..=n_range + 1).map(|n| a.value(n as i64)).collect();
    if let Some((n, v)) = vals.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::SymbolClass { property: "positivity", detail: format!("a({n}) = {v}") });
    }
    let mut report = ClassReport {
        max_block_ratio: 1.0,
        max_first_difference: 0.0,
        max_second_difference: 0.0,
        growth_min: f64::INFINITY,
        growth_max: f64::NEG_INFINITY,
    };
    for k in DyadicBlock::covering(n_range as usize) {
        let (lo, hi) = k.abs_range();
        let hi = hi.min(n_range);
        let block = &vals[lo as usize..=hi as usize];
        let max = block.iter().cloned().fold(f64::MIN, f64::max);
        let min = block.iter().cloned().fold(f64::MAX, f64::min);
        report.max_block_ratio = report.max_block_ratio.max(max / min);
    }
    if report.max_block_ratio > c.slowly_varying {
        return Err(Error::SymbolClass {
            property: "slowly varying",
            detail: format!("block ratio {} exceeds {}", report.max_block_ratio, c.slowly_varying),
        });
    }
    for n in 0..=n_range as usize {
        let w = japanese(n as f64);
        let d1 = (vals[n + 1] - vals[n]).abs() * w / vals[n];
        report.max_first_difference = report.max_first_difference.max(d1);
        if n >= 1 {
            let d2 = (vals[n + 1] - 2.0 * vals[n] + vals[n - 1]).abs() * w * w / vals[n];
            report.max_second_difference = report.max_second_difference.max(d2);
        }
        if n as u64 >= c.growth_from.max(2) {
            let g = vals[n].ln() / (1.0 + (n * n) as f64).ln();
            report.growth_min = report.growth_min.min(g);
            report.growth_max = report.growth_max.max(g);
        }
    }
    if report.max_first_difference > c.first_difference {
        return Err(Error::SymbolClass {
            property: "symbol regularity (first difference)",
            detail: format!("{} exceeds {}", report.max_first_difference, c.first_difference),
        });
    }
    if report.max_second_difference > c.second_difference {
        return Err(Error::SymbolClass {
            property: "symbol regularity (second difference)",
            detail: format!("{} exceeds {}", report.max_second_difference, c.second_difference),
        });
    }
    let slack = 1e-12;
    if report.growth_min < s - c.growth_eps - slack || report.growth_max > s + c.growth_eps + slack {
        return Err(Error::SymbolClass {
            property: "growth at infinity",
            detail: format!(
                "log a / log(1+n²) ranges over [{}, {}], outside [{}, {}]",
                report.growth_min,
                report.growth_max,
                s - c.growth_eps,
                s + c.growth_eps
            ),
        });
    }
    Ok(report)
}

/// `ψ_{s,a}(n̄) = Σ a(n_i) n_i`.
pub fn psi_multiplier(a: &dyn Symbol, n: &FrequencyTuple<4>) -> f64 {
    n.0.iter().map(|&k| a.value(k) * k as f64).sum()
}

/// Interaction geometry of a quadruple, following the case split of the
/// pointwise multiplier bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum InteractionCase {
    /// All four frequencies comparable, two small pair sums.
    Case1a,
    /// All comparable, one small pair sum.
    Case1b,
    /// All comparable, no small pair sum.
    Case1c,
    /// One frequency much lower than the other three.
    Case2,
    /// Two frequencies much lower than the other two.
    Case3,
}

impl InteractionCase {
    pub fn label(self) -> &'static str {
        match self {
            InteractionCase::Case1a => "1a",
            InteractionCase::Case1b => "1b",
            InteractionCase::Case1c => "1c",
            InteractionCase::Case2 => "2",
            InteractionCase::Case3 => "3",
        }
    }
}

/// Blocks separated by more than this many octaves count as "much lower".
const SEPARATION: u32 = 3;

/// Classifies a zero-sum quadruple and reports `k₁*`.
pub fn classify(n: &[i64; 4]) -> (InteractionCase, u32) {
    let mut ks = n.map(|x| DyadicBlock::of(x).0);
    ks.sort_unstable_by(|a, b| b.cmp(a));
    let top = ks[0];
    let low = |k: u32| k + SEPARATION < top;
    let case = if low(ks[2]) {
        InteractionCase::Case3
    } else if low(ks[3]) {
        InteractionCase::Case2
    } else {
        let scale = 1i64 << top.saturating_sub(SEPARATION);
        let small = [(n[0] + n[1]), (n[0] + n[2]), (n[1] + n[2])]
            .iter()
            .filter(|p| p.abs() < scale)
            .count();
        match small {
            0 => InteractionCase::Case1c,
            1 => InteractionCase::Case1b,
            _ => InteractionCase::Case1a,
        }
    };
    (case, top)
}

/// `|ψ| 2^{2k₁*} / (ã(2^{k₁*}) |Ω|)` for a non-resonant quadruple.
pub fn multiplier_ratio(a: &dyn Symbol, s: f64, eps: f64, n: &FrequencyTuple<4>) -> Option<(InteractionCase, u32, f64)> {
    let omega = omega4(n);
    if omega == 0 {
        return None;
    }
    let (case, k) = classify(n.get());
    let psi = psi_multiplier(a, n).abs();
    let ratio = psi * (2.0 * k as f64).exp2() / (dominating_weight(s, eps, k) * (omega as f64).abs());
    Some((case, k, ratio))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierProbeConfig {
    pub s: f64,
    pub eps: f64,
    pub max_freq: i64,
    pub samples: usize,
    pub seed: u64,
    pub batch: usize,
}

impl MultiplierProbeConfig {
    pub fn new(s: f64, eps: f64, max_freq: i64, samples: usize, seed: u64) -> Self {
        Self { s, eps, max_freq, samples, seed, batch: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierRow {
    pub case: InteractionCase,
    pub k1star: u32,
    pub ratio: f64,
    pub count: usize,
}

/// Empirical supremum of the pointwise multiplier ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierProbeReport {
    pub rows: Vec<MultiplierRow>,
    pub supremum: f64,
    pub sampled: usize,
    pub skipped_resonant: usize,
}

impl MultiplierProbeReport {
    /// CSV with columns `case,k1star,ratio,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,k1star,ratio,count\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:e},{}", r.case.label(), r.k1star, r.ratio, r.count);
        }
        out
    }

    pub fn case_supremum(&self, case: InteractionCase) -> Option<f64> {
        self.rows.iter().filter(|r| r.case == case).map(|r| r.ratio).reduce(f64::max)
    }
}

/// Draws one zero-sum quadruple from a mixture of the interaction
/// geometries, so that every case of the bound is populated.
fn sample_quadruple(rng: &mut ChaCha8Rng, max: i64) -> Option<[i64; 4]> {
    let small = (max / 64).max(1);
    let n = match rng.random_range(0..4u8) {
        0 => {
            let [a, b, c] = [(); 3].map(|_| rng.random_range(-max..=max));
            [a, b, c, -(a + b + c)]
        }
        1 => {
            let a = rng.random_range(-small..=small);
            let [b, c] = [(); 2].map(|_| rng.random_range(-max..=max));
            [a, b, c, -(a + b + c)]
        }
        2 => {
            let [a, b] = [(); 2].map(|_| rng.random_range(-small..=small));
            let c = rng.random_range(-max..=max);
            [a, b, c, -(a + b + c)]
        }
        _ => {
            let x = rng.random_range(-max..=max);
            let [p, q] = [(); 2].map(|_| rng.random_range(-small..=small));
            [x, p - x, x - p + q, -(x + q)]
        }
    };
    n.iter().all(|v| v.abs() <= max).then_some(n)
}

/// Samples quadruples with `|n_i| <= max_freq` and aggregates the multiplier
/// ratio per interaction case and top block. Resonant tuples are skipped and
/// counted. Batches use independent ChaCha streams, so the report does not
/// depend on the execution strategy.
pub fn multiplier_bound_probe(
    a: &dyn Symbol,
    config: &MultiplierProbeConfig,
    exec: Execution,
) -> Result<MultiplierProbeReport> {
    if !(config.s > 0.0 && config.eps > 0.0 && config.eps < config.s) {
        return Err(Error::Precondition(format!(
            "multiplier bound requires s > 0 and 0 < eps < s (got s = {}, eps = {})",
            config.s, config.eps
        )));
    }
    let batches = config.samples.div_ceil(config.batch.max(1));
    type Acc = (BTreeMap<(InteractionCase, u32), (f64, usize)>, usize, usize);
    let partial: Vec<Acc> = exec.map_range(batches, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(b as u64);
        let todo = config.batch.min(config.samples - b * config.batch);
        let mut acc: Acc = (BTreeMap::new(), 0, 0);
        let mut drawn = 0;
        while drawn < todo {
            let Some(n) = sample_quadruple(&mut rng, config.max_freq) else { continue };
            drawn += 1;
            let tuple = FrequencyTuple::new(n).expect("sampler builds zero-sum tuples");
            match multiplier_ratio(a, config.s, config.eps, &tuple) {
                None => acc.2 += 1,
                Some((case, k, ratio)) => {
                    let e = acc.0.entry((case, k)).or_insert((0.0, 0));
                    e.0 = e.0.max(ratio);
                    e.1 += 1;
                    acc.1 += 1;
                }
            }
        }
        acc
    });
    let mut merged: BTreeMap<(InteractionCase, u32), (f64, usize)> = BTreeMap::new();
    let (mut sampled, mut skipped) = (0, 0);
    for (map, s, r) in partial {
        sampled += s;
        skipped += r;
        for (key, (ratio, count)) in map {
            let e = merged.entry(key).or_insert((0.0, 0));
            e.0 = e.0.max(ratio);
            e.1 += count;
        }
    }
    let rows: Vec<MultiplierRow> = merged
        .into_iter()
        .map(|((case, k1star), (ratio, count))| MultiplierRow { case, k1star, ratio, count })
        .collect();
    let supremum = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(MultiplierProbeReport { rows, supremum, sampled, skipped_resonant: skipped })
}
