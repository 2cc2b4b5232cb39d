//! Quartic and sextic energy forms for the renormalized flow and the two
//! identities that relate them.
//!
//! For `ψ = ψ_{s,a}` and `Π û = û(n₁)û(n₂)û(n₃)û(n₄)`, the sums
//! `Σ ψ Π û` are purely imaginary for real fields because `ψ` is odd. All
//! forms here carry an extra factor `-i`, which makes them real:
//!
//! * `Q(t) = -i Σ_{(*)} ψ Π û`, so `d/dt ‖u‖²_{H^a} = C_sym Q` and
//!   `R₄ = ∫ Q dt`;
//! * `B(t) = -Σ_{X} (ψ/Ω) Π û`, where `X` is the `(*)` set with
//!   `max |n_j| > M`;
//! * `I(t) = -i Σ_X (ψ n₁/Ω) |û(n₁)|² û(n₁) û(n₂)û(n₃)û(n₄)` and
//!   `II(t) = -i Σ_X (ψ n₁/Ω) 𝔑(n₁) û(n₂)û(n₃)û(n₄)`, with `𝔑` the
//!   `(*)`-restricted triple convolution.
//!
//! Differentiation by parts gives `R₄ - R₄^M = [B]₀^T + c_I ∫I + c_II ∫II`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::calibration::CalibrationTable;
use crate::equations::{nonresonant_convolution, triple_convolution, EquationKind};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrator::{advance, Trajectory};
use crate::resonance::{Symbol, SymbolFunction};
use crate::spectral::{weighted_norm_sq, SpectralField, Weight};

/// Time quadrature over trajectory samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quadrature {
    Trapezoid,
    /// Composite Simpson; an odd interval count closes with the 3/8 rule.
    Simpson,
}

pub fn integrate(values: &[f64], h: f64, rule: Quadrature) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let trap = |v: &[f64]| h * (v.iter().sum::<f64>() - (v[0] + v[v.len() - 1]) / 2.0);
    let simpson = |v: &[f64]| {
        let inner: f64 = v[1..v.len() - 1].iter().enumerate().map(|(i, x)| if i % 2 == 0 { 4.0 * x } else { 2.0 * x }).sum();
        h / 3.0 * (v[0] + v[v.len() - 1] + inner)
    };
    match rule {
        Quadrature::Trapezoid => trap(values),
        Quadrature::Simpson => {
            let intervals = n - 1;
            if intervals == 1 {
                trap(values)
            } else if intervals % 2 == 0 {
                simpson(values)
            } else {
                let k = n - 4;
                let tail = &values[k..];
                let three_eighths = 3.0 * h / 8.0 * (tail[0] + 3.0 * tail[1] + 3.0 * tail[2] + tail[3]);
                (if k > 0 { simpson(&values[..=k]) } else { 0.0 }) + three_eighths
            }
        }
    }
}

/// Samples per unit time required per retained mode.
pub const SAMPLES_PER_MODE: f64 = 64.0;

fn check_sampling(traj: &Trajectory) -> Result<()> {
    if traj.times.len() < 2 {
        return Err(Error::Resolution("trajectory has a single slice".into()));
    }
    if traj.eq.kind().components() != 1 {
        return Err(Error::Precondition("energy forms are defined for scalar trajectories".into()));
    }
    let rate = 1.0 / traj.sample_step();
    let need = SAMPLES_PER_MODE * traj.n_max().max(1) as f64;
    if rate < need * (1.0 - 1e-9) {
        return Err(Error::Resolution(format!(
            "{rate:.1} samples per unit time, need >= {need:.1} at n_max = {}",
            traj.n_max()
        )));
    }
    Ok(())
}

fn check_cutoff(m: usize) -> Result<()> {
    if !m.is_power_of_two() {
        return Err(Error::Precondition(format!("cutoff M = {m} is not a power of two")));
    }
    Ok(())
}

/// Re-advances a few recorded slices by one sample step and compares them
/// with the next slice.
fn check_solution(traj: &Trajectory, tol: f64) -> Result<()> {
    if traj.eq.kind() != EquationKind::RenormalizedMkdv {
        return Err(Error::Precondition(format!(
            "identities need a renormalized mkdv trajectory, got {}",
            traj.eq.kind()
        )));
    }
    let last = traj.slices.len() - 1;
    let mut picks = vec![0, last / 2, last - 1];
    picks.dedup();
    for i in picks {
        let next = advance(&traj.slices[i], &traj.eq, traj.times[i + 1] - traj.times[i], traj.dt_internal)?;
        let err = next.distance_sq(&traj.slices[i + 1]).sqrt();
        let scale = traj.slices[i + 1].l2_sq().sqrt().max(f64::MIN_POSITIVE);
        if err > tol * scale {
            return Err(Error::Precondition(format!(
                "slice {i} does not evolve into slice {} (relative defect {:.3e})",
                i + 1,
                err / scale
            )));
        }
    }
    Ok(())
}

/// `a(n) n` and `a(n)` tabulated on `[-N, N]`.
struct Weights {
    n: i64,
    an: Vec<f64>,
}

impl Weights {
    fn new(a: &dyn Symbol, n: i64) -> Self {
        Self { n, an: (-n..=n).map(|k| a.value(k) * k as f64).collect() }
    }

    #[inline]
    fn psi(&self, k: [i64; 4]) -> f64 {
        k.iter().map(|&x| self.an[(x + self.n) as usize]).sum()
    }
}

#[inline]
fn omega(k: [i64; 4]) -> f64 {
    (-3 * (k[0] + k[1]) * (k[0] + k[2]) * (k[1] + k[2])) as f64
}

/// Per-`n₁` sums of `f(n₁, n₂, n₃, n₄)` over zero-sum quadruples inside
/// the band with `(*)` and `max |n_j| > m`, parallel over `n₁`. Entry `i`
/// holds `n₁ = i - n`.
fn sums_above<F>(n: i64, m: usize, exec: Execution, f: F) -> Vec<Complex64>
where
    F: Fn([i64; 4]) -> Complex64 + Sync + Send,
{
    let m = m as i64;
    exec.map_range((2 * n + 1) as usize, |i| {
        let n1 = i as i64 - n;
        let mut acc = Complex64::new(0.0, 0.0);
        for n2 in -n..=n {
            if n1 + n2 == 0 {
                continue;
            }
            let lo = (-n).max(-n - n1 - n2);
            let hi = n.min(n - n1 - n2);
            let low_pair = n1.abs().max(n2.abs()) <= m;
            for n3 in lo..=hi {
                let n4 = -(n1 + n2 + n3);
                if (n1 + n3) == 0 || (n2 + n3) == 0 {
                    continue;
                }
                if low_pair && n3.abs().max(n4.abs()) <= m {
                    continue;
                }
                acc += f([n1, n2, n3, n4]);
            }
        }
        acc
    })
}

/// `-i Σ_{(*)} ψ Π û` over `|n_j| <= cutoff` (all of the band if `None`),
/// returned with its imaginary rounding residue.
pub(crate) fn quartic_form_complex(u: &SpectralField, a: &dyn Symbol, cutoff: Option<usize>) -> Complex64 {
    let u = match cutoff {
        Some(m) if m < u.n_max() => u.resized(m),
        _ => u.clone(),
    };
    let t3 = triple_convolution(&u, u.n_max());
    let n = u.n_max() as i64;
    let sum: Complex64 = (-n..=n).map(|k| a.value(k) * k as f64 * u.get(k) * t3.get(-k)).sum();
    Complex64::new(0.0, -4.0) * sum
}

/// The quartic form `Q(t)`.
pub fn quartic_form(u: &SpectralField, a: &dyn Symbol, cutoff: Option<usize>) -> f64 {
    quartic_form_complex(u, a, cutoff).re
}

pub(crate) fn boundary_form_complex(u: &SpectralField, a: &dyn Symbol, m: usize, exec: Execution) -> Complex64 {
    let n = u.n_max() as i64;
    if m as i64 >= n {
        return Complex64::new(0.0, 0.0);
    }
    let w = Weights::new(a, n);
    let c: Vec<Complex64> = (-n..=n).map(|k| u.get(k)).collect();
    let at = |k: i64| c[(k + n) as usize];
    -sums_above(n, m, exec, |k| at(k[0]) * at(k[1]) * at(k[2]) * at(k[3]) * (w.psi(k) / omega(k)))
        .into_iter()
        .sum::<Complex64>()
}

/// The boundary form `B(t) = -Σ_X (ψ/Ω) Π û`.
pub fn boundary_form(u: &SpectralField, a: &dyn Symbol, m: usize, exec: Execution) -> f64 {
    boundary_form_complex(u, a, m, exec).re
}

pub(crate) fn sextic_forms_complex(
    u: &SpectralField,
    a: &dyn Symbol,
    m: usize,
    exec: Execution,
) -> (Complex64, Complex64) {
    let n = u.n_max() as i64;
    if m as i64 >= n {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let w = Weights::new(a, n);
    let c: Vec<Complex64> = (-n..=n).map(|k| u.get(k)).collect();
    let nr = nonresonant_convolution(u);
    let nrc: Vec<Complex64> = (-n..=n).map(|k| nr.get(k)).collect();
    let at = |k: i64| c[(k + n) as usize];
    // The n₁-dependent factors of I and II split off the shared kernel.
    let kernel = sums_above(n, m, exec, |k| (w.psi(k) * k[0] as f64 / omega(k)) * at(k[1]) * at(k[2]) * at(k[3]));
    let (mut i, mut ii) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (idx, s) in kernel.iter().enumerate() {
        let u1 = c[idx];
        i += u1.norm_sqr() * u1 * s;
        ii += nrc[idx] * s;
    }
    let minus_i = Complex64::new(0.0, -1.0);
    (minus_i * i, minus_i * ii)
}

/// Instantaneous integrands `(I(t), II(t))`.
pub fn sextic_forms(u: &SpectralField, a: &dyn Symbol, m: usize, exec: Execution) -> (f64, f64) {
    let (i, ii) = sextic_forms_complex(u, a, m, exec);
    (i.re, ii.re)
}

/// `R₄ = ∫₀^T Q dt`, restricted to `|n_j| <= M` when a cutoff is given.
pub fn r4(traj: &Trajectory, a: &dyn Symbol, m: Option<usize>, rule: Quadrature) -> Result<f64> {
    check_sampling(traj)?;
    if let Some(m) = m {
        check_cutoff(m)?;
    }
    let q: Vec<f64> = traj.slices.iter().map(|s| quartic_form(s.u(), a, m)).collect();
    Ok(integrate(&q, traj.sample_step(), rule))
}

/// `[B]₀^T`.
pub fn b4(traj: &Trajectory, a: &dyn Symbol, m: usize, exec: Execution) -> Result<f64> {
    check_sampling(traj)?;
    check_cutoff(m)?;
    Ok(boundary_form(traj.last().u(), a, m, exec) - boundary_form(traj.initial().u(), a, m, exec))
}

/// `(∫ I dt, ∫ II dt)`.
pub fn r6_terms(traj: &Trajectory, a: &dyn Symbol, m: usize, rule: Quadrature, exec: Execution) -> Result<(f64, f64)> {
    check_sampling(traj)?;
    check_cutoff(m)?;
    let (i, ii): (Vec<f64>, Vec<f64>) =
        traj.slices.iter().map(|s| sextic_forms(s.u(), a, m, exec)).unzip();
    let h = traj.sample_step();
    Ok((integrate(&i, h, rule), integrate(&ii, h, rule)))
}

/// Relative defect allowed when re-checking that a trajectory solves the flow.
pub const SOLUTION_TOL: f64 = 1e-6;

/// `|‖u(T)‖²_{H^a} - ‖u₀‖²_{H^a} - C_sym R₄| / ‖u₀‖²_{H^a}`.
pub fn fundamental_identity_residual(
    traj: &Trajectory,
    a: &dyn Symbol,
    table: &CalibrationTable,
    rule: Quadrature,
) -> Result<f64> {
    check_sampling(traj)?;
    check_solution(traj, SOLUTION_TOL)?;
    let e0 = weighted_norm_sq(traj.initial().u(), Weight::Symbol(a))?;
    let e1 = weighted_norm_sq(traj.last().u(), Weight::Symbol(a))?;
    let c = table.energy_growth * traj.eq.sigma();
    let lhs = e1 - e0;
    let rhs = c * r4(traj, a, None, rule)?;
    if e0 == 0.0 {
        return Ok((lhs - rhs).abs());
    }
    Ok((lhs - rhs).abs() / e0)
}

/// All scalars of the differentiation-by-parts identity at one cutoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub r4_full: f64,
    pub r4_below_m: f64,
    pub b4: f64,
    pub term_i: f64,
    pub term_ii: f64,
    pub s: f64,
    pub eps: f64,
    pub m: usize,
    pub time_window: [f64; 2],
    pub c_i: f64,
    pub c_ii: f64,
    pub quadrature: Quadrature,
    pub residual: f64,
    pub tolerance: f64,
}

impl EnergyLedger {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger fields serialize")
    }

    /// `r4_full - r4_below_m - (b4 + c_I I + c_II II)`.
    pub fn defect(&self) -> f64 {
        self.r4_full - self.r4_below_m - (self.b4 + self.c_i * self.term_i + self.c_ii * self.term_ii)
    }
}

/// Size below which the identity's terms are rounding noise:
/// `ε_mach · T · 4 n_max max a · max_t ‖û(t)‖⁴_{ℓ¹}`, which bounds the
/// quartic sums of the run.
fn roundoff_floor(traj: &Trajectory, a: &dyn Symbol) -> f64 {
    let n = traj.n_max() as i64;
    let a_max = (0..=n).map(|k| a.value(k)).fold(0.0, f64::max);
    let l1 = traj
        .slices
        .iter()
        .map(|s| (-n..=n).map(|k| s.u().get(k).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let duration = traj.times.last().unwrap() - traj.times[0];
    f64::EPSILON * duration * 4.0 * n as f64 * a_max * l1.powi(4)
}

/// Builds the ledger and the relative residual
/// `|defect| / max(|R₄|, |R₄^M|, |B₄|, |c_I I|, |c_II II|, floor)`, where the
/// floor is the rounding level of the quartic sums. The two quartic
/// integrals enter separately because their difference is formed in
/// floating point.
pub fn dbp_identity_residual(
    traj: &Trajectory,
    a: &SymbolFunction,
    m: usize,
    table: &CalibrationTable,
    rule: Quadrature,
    tolerance: f64,
    exec: Execution,
) -> Result<EnergyLedger> {
    check_sampling(traj)?;
    check_cutoff(m)?;
    check_solution(traj, SOLUTION_TOL)?;
    let sigma = traj.eq.sigma();
    let r4_full = r4(traj, a, None, rule)?;
    let r4_below_m = if m >= traj.n_max() { r4_full } else { r4(traj, a, Some(m), rule)? };
    let b4 = b4(traj, a, m, exec)?;
    let (term_i, term_ii) = r6_terms(traj, a, m, rule, exec)?;
    let mut ledger = EnergyLedger {
        r4_full,
        r4_below_m,
        b4,
        term_i,
        term_ii,
        s: a.s(),
        eps: a.eps(),
        m,
        time_window: [traj.times[0], *traj.times.last().unwrap()],
        c_i: table.sextic_diagonal * sigma,
        c_ii: table.sextic_offdiagonal * sigma,
        quadrature: rule,
        residual: 0.0,
        tolerance,
    };
    let scale = [r4_full, r4_below_m, b4, ledger.c_i * term_i, ledger.c_ii * term_ii]
        .iter()
        .map(|x| x.abs())
        .fold(roundoff_floor(traj, a), f64::max);
    let defect = ledger.defect().abs();
    ledger.residual = if scale > 0.0 { defect / scale } else { defect };
    Ok(ledger)
}

/// `‖u‖²_{H^a} - C_sym B(t)`: the energy corrected by the boundary form.
pub fn corrected_energy(
    u: &SpectralField,
    a: &dyn Symbol,
    m: usize,
    sigma: f64,
    table: &CalibrationTable,
    exec: Execution,
) -> Result<f64> {
    let e = weighted_norm_sq(u, Weight::Symbol(a))?;
    Ok(e - table.energy_growth * sigma * boundary_form(u, a, m, exec))
}

/// Physical `∫u²` of a field; used to normalize reported drifts.
pub fn mass(u: &SpectralField) -> f64 {
    u.l2_sq() / (2.0 * PI)
}
