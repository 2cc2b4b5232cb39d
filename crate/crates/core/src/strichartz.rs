//! Empirical probes of linear and bilinear Strichartz-type estimates.
//!
//! Every probe reports the largest left/right ratio found over randomized
//! data; nothing here asserts an estimate. Physical normalizations are used
//! throughout: `u(t, x) = (1/2π) Σ_n c_n e^{i(nx + n³t)}` and `L^p` norms are
//! taken with respect to `dt dx`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fft;
use crate::random::{complex_normal, rng};
use crate::spectral::japanese;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ProbeKind {
    L4,
    L6Free,
    L6ShortTime,
    L8,
    Bilinear,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 5] =
        [ProbeKind::L4, ProbeKind::L6Free, ProbeKind::L6ShortTime, ProbeKind::L8, ProbeKind::Bilinear];

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::L4 => "L4",
            ProbeKind::L6Free => "L6_free",
            ProbeKind::L6ShortTime => "L6_shorttime",
            ProbeKind::L8 => "L8",
            ProbeKind::Bilinear => "bilinear",
        }
    }

    fn has_slope(self) -> bool {
        matches!(self, ProbeKind::L4 | ProbeKind::L6Free | ProbeKind::L8)
    }
}

impl fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProbeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown probe kind '{s}'")))
    }
}

/// Probe parameters. `cutoffs` are frequency cutoffs `N` for the global
/// kinds and block indices for `L6_shorttime` and `bilinear` (output block
/// `k` in the latter).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub kind: ProbeKind,
    pub cutoffs: Vec<i64>,
    pub samples: usize,
    pub seed: u64,
    /// `(j₁, j₂)` modulation pairs for the bilinear kind, `j₁ <= j₂`.
    pub modulations: Vec<(u32, u32)>,
    /// Input frequency range `|n| <= bilinear_band` for the bilinear kind.
    pub bilinear_band: i64,
    /// Modulation bins per unit `τ` for the bilinear kind.
    pub bilinear_bins_per_unit: i64,
}

impl ProbeConfig {
    pub fn default_for(kind: ProbeKind) -> Self {
        let cutoffs = match kind {
            ProbeKind::L4 => vec![4, 8, 16, 32, 64, 128, 256],
            ProbeKind::L6Free => vec![4, 8, 16, 32, 64],
            ProbeKind::L8 => vec![4, 8, 16, 32],
            ProbeKind::L6ShortTime => (2..=8).collect(),
            ProbeKind::Bilinear => vec![0, 2, 4],
        };
        Self {
            kind,
            cutoffs,
            samples: 8,
            seed: 0,
            modulations: vec![(0, 0), (0, 4), (2, 4), (4, 4)],
            bilinear_band: 12,
            bilinear_bins_per_unit: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub kind: ProbeKind,
    pub n_or_k: i64,
    pub j1: Option<u32>,
    pub j2: Option<u32>,
    pub ratio: f64,
    pub slope: Option<f64>,
    /// Seed of the maximizing sample.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    /// Least-squares slope of `log sup ratio` against `log N`.
    pub slope: Option<f64>,
}

impl ProbeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,N_or_k,j1,j2,ratio,slope,seed\n");
        let opt = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let slope = r.slope.map(|s| format!("{s:e}")).unwrap_or_default();
            writeln!(out, "{},{},{},{},{:e},{},{}", r.kind, r.n_or_k, opt(r.j1), opt(r.j2), r.ratio, slope, r.seed)
                .unwrap();
        }
        out
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `Σ |c_n|²` over a two-sided coefficient list.
fn l2_sq(c: &[Complex64]) -> f64 {
    c.iter().map(|x| x.norm_sqr()).sum()
}

/// Candidate data on `|n| <= n_max`: sample 0 is the flat sequence, sample 1
/// a single mode at `n_max`, later samples complex Gaussians on a random
/// subset of the band.
pub fn candidate(n_max: i64, sample: usize, seed: u64) -> Vec<Complex64> {
    let len = (2 * n_max + 1) as usize;
    match sample {
        0 => vec![Complex64::new(1.0, 0.0); len],
        1 => {
            let mut c = vec![Complex64::new(0.0, 0.0); len];
            c[len - 1] = Complex64::new(1.0, 0.0);
            c
        }
        _ => {
            let mut r = rng(seed);
            let density: f64 = r.random_range(0.2..=1.0);
            (0..len)
                .map(|_| if r.random::<f64>() < density { complex_normal(&mut r) } else { Complex64::new(0.0, 0.0) })
                .collect()
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `‖u‖_{L⁴(ℝ×𝕋)} / ‖u‖_{X^{0,1/3}}` for `u = (1/2π) Σ c_n e^{i(nx+n³t)} e^{-t²/2}`.
///
/// The space-time integral is evaluated exactly by grouping the quartic sum
/// over `n₁ + n₂ = m` and `n₁n₂ = p`, using `∫ e^{-2t²} e^{itΩ} dt =
/// (π/2)^{1/2} e^{-Ω²/8}` with `Ω = 3m(q − p)`.
pub fn l4_ratio(c: &[Complex64]) -> f64 {
    let n_max = (c.len() / 2) as i64;
    let at = |n: i64| c[(n + n_max) as usize];
    let mut total = 0.0;
    for m in -2 * n_max..=2 * n_max {
        let mut groups: Vec<(i64, Complex64)> = Vec::new();
        for n1 in (m - n_max).max(-n_max)..=(m + n_max).min(n_max) {
            groups.push((n1 * (m - n1), at(n1) * at(m - n1)));
        }
        groups.sort_by_key(|g| g.0);
        let mut merged: Vec<(i64, Complex64)> = Vec::new();
        for (p, v) in groups {
            match merged.last_mut() {
                Some(last) if last.0 == p => last.1 += v,
                _ => merged.push((p, v)),
            }
        }
        if m == 0 {
            let s: Complex64 = merged.iter().map(|g| g.1).sum();
            total += s.norm_sqr();
            continue;
        }
        for (i, &(p, a)) in merged.iter().enumerate() {
            for &(q, b) in &merged[i..] {
                let omega = 3.0 * m as f64 * (q - p) as f64;
                if omega.abs() > 30.0 {
                    break;
                }
                let w = (-omega * omega / 8.0).exp();
                let term = (a * b.conj()).re * w;
                total += if q == p { term } else { 2.0 * term };
            }
        }
    }
    let l4_4 = total * 2.0 * PI * (PI / 2.0).sqrt() / (2.0 * PI).powi(4);
    let weight = simpson(|l| japanese(l).powf(2.0 / 3.0) * (-l * l).exp(), -12.0, 12.0, 4800);
    let x_sq = l2_sq(c) * weight / (2.0 * PI);
    ratio(l4_4.powf(0.25), x_sq.sqrt())
}

/// Sums of products of `k` coefficients grouped by `(Σ n_i, Σ n_i³)`.
fn grouped_products(c: &[Complex64], k: usize) -> HashMap<(i64, i64), Complex64> {
    let n_max = (c.len() / 2) as i64;
    let mut acc: HashMap<(i64, i64), Complex64> = HashMap::new();
    acc.insert((0, 0), Complex64::new(1.0, 0.0));
    for _ in 0..k {
        let mut next: HashMap<(i64, i64), Complex64> = HashMap::with_capacity(acc.len() * c.len());
        for (&(m, w), &v) in &acc {
            for n in -n_max..=n_max {
                let cn = c[(n + n_max) as usize];
                if cn.norm_sqr() == 0.0 {
                    continue;
                }
                *next.entry((m + n, w + n * n * n)).or_default() += v * cn;
            }
        }
        acc = next;
    }
    acc
}

/// `‖S(t)u₀‖_{L^{2k}(𝕋×𝕋)} / ‖u₀‖_{L²}` for the `2π`-periodic free flow,
/// evaluated exactly by grouping `k`-fold products by `(Σ n, Σ n³)`.
pub fn free_lp_ratio(c: &[Complex64], k: usize) -> f64 {
    let groups = grouped_products(c, k);
    let sum: f64 = groups.values().map(|v| v.norm_sqr()).sum();
    let p = 2 * k;
    let integral = sum * (2.0 * PI).powi(2) / (2.0 * PI).powi(p as i32);
    let data = (l2_sq(c) / (2.0 * PI)).sqrt();
    ratio(integral.powf(1.0 / p as f64), data)
}

/// Gauss-Legendre nodes and weights on `[−1, 1]` (five points).
const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// `‖P_k S(t)u₀‖_{L⁶([0, 2^{-2k}]×𝕋)} 2^{k/6} / ‖P_k u₀‖_{L²}` for a real field
/// given by `c_n`, `n = 0..`, supported in block `k`. Space is integrated
/// exactly on a grid resolving `|u|⁶`; time by composite Gauss-Legendre with
/// one panel per period of the fastest sextic phase.
pub fn shorttime_l6_ratio(coeffs: &[Complex64], k: u32) -> f64 {
    let n_max = coeffs.len() - 1;
    let grid = fft::smooth_size(6 * n_max + 1);
    let length = (-2.0 * k as f64).exp2();
    let fastest = 6.0 * (n_max as f64).powi(3);
    let panels = ((fastest * length / (2.0 * PI)).ceil() as usize).max(4);
    let h = length / panels as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
    let mut integral = 0.0;
    for p in 0..panels {
        for &(x, w) in &GAUSS5 {
            let t = (p as f64 + 0.5 * (x + 1.0)) * h;
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for (n, c) in coeffs.iter().enumerate() {
                let v = c * Complex64::from_polar(1.0, (n as f64).powi(3) * t);
                buf[n] += v;
                if n > 0 {
                    buf[grid - n] += v.conj();
                }
            }
            fft::inverse(&mut buf);
            let sixth: f64 = buf.iter().map(|u| (u.re / (2.0 * PI)).powi(6)).sum();
            integral += 0.5 * h * w * sixth * 2.0 * PI / grid as f64;
        }
    }
    let data_sq: f64 = coeffs.iter().enumerate().map(|(n, c)| if n == 0 { 1.0 } else { 2.0 } * c.norm_sqr()).sum();
    let data = (data_sq / (2.0 * PI)).sqrt();
    ratio(integral.powf(1.0 / 6.0) * (k as f64 / 6.0).exp2(), data)
}

fn shorttime_candidate(k: u32, sample: usize, seed: u64) -> Vec<Complex64> {
    let lo = 1usize << k;
    let hi = (1usize << (k + 1)) - 1;
    let mut c = vec![Complex64::new(0.0, 0.0); hi + 1];
    let mut r = rng(seed);
    for (n, slot) in c.iter_mut().enumerate().skip(lo) {
        *slot = match sample {
            0 => Complex64::new(1.0, 0.0),
            1 if n == lo => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 0.0),
            _ => complex_normal(&mut r),
        };
    }
    c
}

/// Random space-time data with `⟨τ − n³⟩ <= 2^j` on `|n| <= band`, stored
/// as `(n, lattice τ index) -> value` on the lattice `τ = index / bins`.
fn bilinear_datum(band: i64, j: u32, bins: i64, seed: u64) -> Vec<(i64, i64, Complex64)> {
    let mut r = rng(seed);
    let reach = ((4f64.powi(j as i32) - 1.0).sqrt() * bins as f64).floor() as i64;
    let mut out = Vec::new();
    for n in -band..=band {
        for i in -reach..=reach {
            out.push((n, n * n * n * bins + i, complex_normal(&mut r)));
        }
    }
    out
}

/// `‖f₁ * f₂‖_{L²_τ ℓ²(|n| >= 2^k)} / (2^{j₁/2}(2^{(j₂−k)/4} + 1) ‖f₁‖ ‖f₂‖)`
/// for each output block in `ks`.
pub fn bilinear_ratios(
    f1: &[(i64, i64, Complex64)],
    f2: &[(i64, i64, Complex64)],
    bins: i64,
    j1: u32,
    j2: u32,
    ks: &[i64],
) -> Vec<f64> {
    let dtau = 1.0 / bins as f64;
    let mut conv: HashMap<(i64, i64), Complex64> = HashMap::new();
    for &(n1, t1, a) in f1 {
        for &(n2, t2, b) in f2 {
            *conv.entry((n1 + n2, t1 + t2)).or_default() += a * b * dtau;
        }
    }
    let norm = |f: &[(i64, i64, Complex64)]| (f.iter().map(|x| x.2.norm_sqr()).sum::<f64>() * dtau).sqrt();
    let inputs = norm(f1) * norm(f2);
    ks.iter()
        .map(|&k| {
            let floor = 1i64 << k.max(0);
            let lhs = (conv
                .iter()
                .filter(|((n, _), _)| n.abs() >= floor)
                .map(|(_, v)| v.norm_sqr())
                .sum::<f64>()
                * dtau)
                .sqrt();
            let rhs = (j1 as f64 / 2.0).exp2() * (((j2 as f64 - k as f64) / 4.0).exp2() + 1.0) * inputs;
            ratio(lhs, rhs)
        })
        .collect()
}

fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|&(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .cloned()
        .enumerate()
        .fold((0, 0.0), |best, (i, v)| if v > best.1 { (i, v) } else { best })
}

/// Runs a probe; samples are evaluated through `exec` and merged in seed order.
pub fn strichartz_probe(cfg: &ProbeConfig, exec: Execution) -> ProbeReport {
    let mut rows = Vec::new();
    let seeds: Vec<u64> = (0..cfg.samples as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    match cfg.kind {
        ProbeKind::Bilinear => {
            let bins = cfg.bilinear_bins_per_unit.max(1);
            for &(j1, j2) in &cfg.modulations {
                let (j1, j2) = (j1.min(j2), j1.max(j2));
                let per_seed: Vec<Vec<f64>> = exec.map(&seeds, |&seed| {
                    let f1 = bilinear_datum(cfg.bilinear_band, j1, bins, 2 * seed);
                    let f2 = bilinear_datum(cfg.bilinear_band, j2, bins, 2 * seed + 1);
                    bilinear_ratios(&f1, &f2, bins, j1, j2, &cfg.cutoffs)
                });
                for (i, &k) in cfg.cutoffs.iter().enumerate() {
                    let column: Vec<f64> = per_seed.iter().map(|r| r[i]).collect();
                    let (best, value) = argmax(&column);
                    rows.push(ProbeRow {
                        kind: cfg.kind,
                        n_or_k: k,
                        j1: Some(j1),
                        j2: Some(j2),
                        ratio: value,
                        slope: None,
                        seed: seeds.get(best).copied().unwrap_or(cfg.seed),
                    });
                }
            }
        }
        kind => {
            for &n in &cfg.cutoffs {
                let values: Vec<f64> = exec.map_range(seeds.len(), |i| match kind {
                    ProbeKind::L4 => l4_ratio(&candidate(n, i, seeds[i])),
                    ProbeKind::L6Free => free_lp_ratio(&candidate(n, i, seeds[i]), 3),
                    ProbeKind::L8 => free_lp_ratio(&candidate(n, i, seeds[i]), 4),
                    ProbeKind::L6ShortTime => shorttime_l6_ratio(&shorttime_candidate(n as u32, i, seeds[i]), n as u32),
                    ProbeKind::Bilinear => unreachable!(),
                });
                let (best, value) = argmax(&values);
                rows.push(ProbeRow {
                    kind,
                    n_or_k: n,
                    j1: None,
                    j2: None,
                    ratio: value,
                    slope: None,
                    seed: seeds.get(best).copied().unwrap_or(cfg.seed),
                });
            }
        }
    }
    let slope = if cfg.kind.has_slope() {
        fit_slope(&rows.iter().map(|r| (r.n_or_k as f64, r.ratio)).collect::<Vec<_>>())
    } else {
        None
    };
    for r in &mut rows {
        r.slope = slope;
    }
    ProbeReport { rows, slope }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct space-time quadrature of the windowed free solution.
    fn l4_direct(c: &[Complex64]) -> f64 {
        let n_max = (c.len() / 2) as i64;
        let grid = fft::smooth_size(4 * n_max as usize + 1);
        let mut total = 0.0;
        let h = 1.0 / 400.0;
        for i in -2400..=2400 {
            let t = i as f64 * h;
            let phi = (-t * t / 2.0).exp();
            let mut buf = vec![Complex64::new(0.0, 0.0); grid];
            for n in -n_max..=n_max {
                let idx = n.rem_euclid(grid as i64) as usize;
                buf[idx] += c[(n + n_max) as usize] * Complex64::from_polar(phi, (n as f64).powi(3) * t);
            }
            fft::inverse(&mut buf);
            let q: f64 = buf.iter().map(|u| (u.norm() / (2.0 * PI)).powi(4)).sum();
            total += q * 2.0 * PI / grid as f64 * h;
        }
        let weight = simpson(|l| japanese(l).powf(2.0 / 3.0) * (-l * l).exp(), -12.0, 12.0, 4800);
        let x = (l2_sq(c) * weight / (2.0 * PI)).sqrt();
        total.powf(0.25) / x
    }

    #[test]
    fn l4_grouping_matches_quadrature() {
        for seed in 2..4 {
            let c = candidate(3, seed as usize, seed);
            let (a, b) = (l4_ratio(&c), l4_direct(&c));
            assert!((a / b - 1.0).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn l4_single_mode_is_frequency_independent() {
        let reference = l4_ratio(&candidate(4, 1, 0));
        for n in [8, 16, 32, 64, 128, 256] {
            assert!((l4_ratio(&candidate(n, 1, 0)) / reference - 1.0).abs() < 1e-12);
        }
    }

    /// Literal `k`-fold periodic space-time quadrature on exact grids.
    fn free_direct(c: &[Complex64], k: usize) -> f64 {
        let n_max = (c.len() / 2) as i64;
        let grid = fft::smooth_size(2 * k * n_max as usize + 1);
        let tgrid = fft::smooth_size(2 * k * (n_max as usize).pow(3) + 1);
        let mut total = 0.0;
        for it in 0..tgrid {
            let t = 2.0 * PI * it as f64 / tgrid as f64;
            let mut buf = vec![Complex64::new(0.0, 0.0); grid];
            for n in -n_max..=n_max {
                buf[n.rem_euclid(grid as i64) as usize] +=
                    c[(n + n_max) as usize] * Complex64::from_polar(1.0, (n as f64).powi(3) * t);
            }
            fft::inverse(&mut buf);
            let q: f64 = buf.iter().map(|u| (u.norm() / (2.0 * PI)).powi(2 * k as i32)).sum();
            total += q * (2.0 * PI / grid as f64) * (2.0 * PI / tgrid as f64);
        }
        total.powf(1.0 / (2 * k) as f64) / (l2_sq(c) / (2.0 * PI)).sqrt()
    }

    #[test]
    fn free_grouping_matches_quadrature() {
        let c = candidate(3, 5, 11);
        for k in [2, 3, 4] {
            let (a, b) = (free_lp_ratio(&c, k), free_direct(&c, k));
            assert!((a / b - 1.0).abs() < 1e-10, "k = {k}: {a} vs {b}");
        }
    }

    #[test]
    fn zero_data_ratio_is_zero() {
        let zero = vec![Complex64::new(0.0, 0.0); 9];
        assert_eq!(l4_ratio(&zero), 0.0);
        assert_eq!(free_lp_ratio(&zero, 3), 0.0);
        assert_eq!(shorttime_l6_ratio(&zero, 2), 0.0);
    }

    #[test]
    fn shorttime_single_mode_closed_form() {
        // A single real mode gives |u| = |c| |cos(nx + n³t + θ)| / π.
        let k = 3;
        let c = shorttime_candidate(k, 1, 0);
        let got = shorttime_l6_ratio(&c, k);
        let length = (-2.0 * k as f64).exp2();
        let cos6_mean = 5.0 / 16.0;
        let l6 = (length * 2.0 * PI * cos6_mean / PI.powi(6)).powf(1.0 / 6.0);
        let expected = l6 * (k as f64 / 6.0).exp2() / (2.0 / (2.0 * PI)).sqrt();
        assert!((got / expected - 1.0).abs() < 1e-3, "{got} vs {expected}");
    }

    #[test]
    fn report_has_rows_slope_and_header() {
        let mut cfg = ProbeConfig::default_for(ProbeKind::L6Free);
        cfg.cutoffs = vec![2, 4, 8];
        cfg.samples = 3;
        let report = strichartz_probe(&cfg, Execution::Sequential);
        assert_eq!(report.rows.len(), 3);
        assert!(report.slope.is_some());
        let csv = report.to_csv();
        assert!(csv.starts_with("kind,N_or_k,j1,j2,ratio,slope,seed\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn bilinear_rows_cover_modulations_and_blocks() {
        let mut cfg = ProbeConfig::default_for(ProbeKind::Bilinear);
        cfg.samples = 2;
        cfg.bilinear_band = 4;
        cfg.modulations = vec![(0, 1), (1, 2)];
        cfg.cutoffs = vec![0, 2];
        let report = strichartz_probe(&cfg, Execution::Sequential);
        assert_eq!(report.rows.len(), 4);
        assert!(report.rows.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0));
    }

    #[test]
    fn kinds_round_trip() {
        for k in ProbeKind::ALL {
            assert_eq!(k.name().parse::<ProbeKind>().unwrap(), k);
        }
    }
}
