//! Nonlinear tendencies for the mKdV family, the resonant split of the
//! renormalized nonlinearity, the gauge transform and the Miura map.
//!
//! Every flow is written as `∂_t û = i n³ û + 𝒩(û)`; this module evaluates
//! `𝒩` and leaves the Airy part to the integrator. Tendencies are computed as
//! `i n · FT(G(u))` for a polynomial flux `G`, so the zero mode vanishes
//! identically.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationTable, MiuraCoefficients};
use crate::error::{Error, Result};
use crate::fft::smooth_size;
use crate::integrator::Trajectory;
use crate::spectral::{grid_to_spectral, spectral_to_grid, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Defocusing,
    Focusing,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Defocusing => 1.0,
            Sign::Focusing => -1.0,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Defocusing),
            -1 => Ok(Sign::Focusing),
            _ => Err(Error::Parse(format!("sign must be +1 or -1, got {v}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EquationKind {
    /// `u_t + u_xxx = ±u² u_x`.
    Mkdv,
    /// `u_t + u_xxx = ±(u² - (1/2π)∫u²) u_x`.
    RenormalizedMkdv,
    /// `u_t + u_xxx = ∂_x(u²)/2`.
    Kdv,
    /// `u_t + u_xxx = u u_x ± u² u_x`.
    KdvMkdv,
    /// `u_t + u_xxx = ∂_x(u v²)`, `v_t + v_xxx = ∂_x(v u²)`.
    MkdvMkdvSystem,
    /// `u_t + u_xxx = 0`.
    Airy,
}

impl EquationKind {
    pub const ALL: [EquationKind; 6] = [
        EquationKind::Mkdv,
        EquationKind::RenormalizedMkdv,
        EquationKind::Kdv,
        EquationKind::KdvMkdv,
        EquationKind::MkdvMkdvSystem,
        EquationKind::Airy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EquationKind::Mkdv => "mkdv",
            EquationKind::RenormalizedMkdv => "renormalized_mkdv",
            EquationKind::Kdv => "kdv",
            EquationKind::KdvMkdv => "kdv_mkdv",
            EquationKind::MkdvMkdvSystem => "mkdv_mkdv_system",
            EquationKind::Airy => "airy",
        }
    }

    pub fn has_sign(self) -> bool {
        matches!(self, EquationKind::Mkdv | EquationKind::RenormalizedMkdv | EquationKind::KdvMkdv)
    }

    pub fn components(self) -> usize {
        if self == EquationKind::MkdvMkdvSystem {
            2
        } else {
            1
        }
    }

    /// Highest polynomial degree of the flux.
    fn degree(self) -> usize {
        match self {
            EquationKind::Kdv => 2,
            EquationKind::Airy => 1,
            _ => 3,
        }
    }
}

impl fmt::Display for EquationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EquationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EquationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown equation kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EquationSpec {
    kind: EquationKind,
    sign: Option<Sign>,
}

impl EquationSpec {
    /// The sign must be given exactly for the kinds with a `±` nonlinearity.
    pub fn new(kind: EquationKind, sign: Option<Sign>) -> Result<Self> {
        if kind.has_sign() != sign.is_some() {
            return Err(Error::Precondition(format!(
                "{kind} {} a sign",
                if kind.has_sign() { "requires" } else { "does not take" }
            )));
        }
        Ok(Self { kind, sign })
    }

    pub fn mkdv(sign: Sign) -> Self {
        Self { kind: EquationKind::Mkdv, sign: Some(sign) }
    }

    pub fn renormalized(sign: Sign) -> Self {
        Self { kind: EquationKind::RenormalizedMkdv, sign: Some(sign) }
    }

    pub fn kdv() -> Self {
        Self { kind: EquationKind::Kdv, sign: None }
    }

    pub fn kdv_mkdv(sign: Sign) -> Self {
        Self { kind: EquationKind::KdvMkdv, sign: Some(sign) }
    }

    pub fn system() -> Self {
        Self { kind: EquationKind::MkdvMkdvSystem, sign: None }
    }

    pub fn airy() -> Self {
        Self { kind: EquationKind::Airy, sign: None }
    }

    pub fn kind(&self) -> EquationKind {
        self.kind
    }

    pub fn sign(&self) -> Option<Sign> {
        self.sign
    }

    /// `±1` for signed kinds, `+1` otherwise.
    pub fn sigma(&self) -> f64 {
        self.sign.map_or(1.0, Sign::value)
    }

    /// Smallest grid on which this flux is evaluated without aliasing.
    pub fn min_grid(&self, n_max: usize) -> usize {
        (self.kind.degree() + 1) * n_max + 1
    }
}

/// One field for scalar equations, `(u, v)` for the system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    components: Vec<SpectralField>,
    pub time: f64,
}

impl SystemState {
    pub fn scalar(u: SpectralField, time: f64) -> Self {
        Self { components: vec![u], time }
    }

    pub fn pair(u: SpectralField, v: SpectralField, time: f64) -> Result<Self> {
        if u.n_max() != v.n_max() {
            return Err(Error::Precondition(format!(
                "components have different bands {} and {}",
                u.n_max(),
                v.n_max()
            )));
        }
        Ok(Self { components: vec![u, v], time })
    }

    pub(crate) fn from_components(components: Vec<SpectralField>, time: f64) -> Self {
        debug_assert!(components.windows(2).all(|w| w[0].n_max() == w[1].n_max()));
        Self { components, time }
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    pub(crate) fn components_mut(&mut self) -> &mut [SpectralField] {
        &mut self.components
    }

    pub fn u(&self) -> &SpectralField {
        &self.components[0]
    }

    pub fn v(&self) -> Option<&SpectralField> {
        self.components.get(1)
    }

    pub fn n_max(&self) -> usize {
        self.components[0].n_max()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(SpectralField::is_finite)
    }

    /// `Σ_c Σ_n |ĉ(n)|²` summed over components.
    pub fn l2_sq(&self) -> f64 {
        self.components.iter().map(SpectralField::l2_sq).sum()
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self { components: self.components.iter().map(f).collect(), time: self.time }
    }

    pub fn resized(&self, n_max: usize) -> Self {
        self.map(|c| c.resized(n_max))
    }

    /// Squared coefficient-side distance, summed over components.
    pub fn distance_sq(&self, other: &SystemState) -> f64 {
        self.components.iter().zip(&other.components).map(|(a, b)| (a - b).l2_sq()).sum()
    }
}

/// Physical `∫|f|² dx` from coefficients.
pub fn physical_l2_sq(u: &SpectralField) -> f64 {
    u.l2_sq() / (2.0 * PI)
}

fn grid_for(min: usize) -> usize {
    smooth_size(min)
}

/// `i n · FT(G)` for samples of the flux `G`, truncated to `n_max`.
fn flux_tendency(flux: &[f64], n_max: usize) -> SpectralField {
    grid_to_spectral(flux, n_max).derivative()
}

/// Nonlinear tendency of `eq` at `state` (Airy term excluded).
pub fn evaluate_rhs(state: &SystemState, eq: &EquationSpec) -> Result<SystemState> {
    evaluate_rhs_on_grid(state, eq, grid_for(eq.min_grid(state.n_max())))
}

/// As [`evaluate_rhs`] on a caller-chosen grid; rejects grids below the
/// dealiasing capacity.
pub fn evaluate_rhs_on_grid(state: &SystemState, eq: &EquationSpec, grid: usize) -> Result<SystemState> {
    let n_max = state.n_max();
    if state.components.len() != eq.kind.components() {
        return Err(Error::Precondition(format!(
            "{} expects {} component(s), state has {}",
            eq.kind,
            eq.kind.components(),
            state.components.len()
        )));
    }
    if grid < eq.min_grid(n_max) {
        return Err(Error::Bandwidth(format!(
            "{} at n_max = {n_max} needs a grid of >= {} points, got {grid}",
            eq.kind,
            eq.min_grid(n_max)
        )));
    }
    let sigma = eq.sigma();
    let out = match eq.kind {
        EquationKind::Airy => vec![SpectralField::zeros(n_max)],
        EquationKind::MkdvMkdvSystem => {
            let u = spectral_to_grid(&state.components[0], grid);
            let v = spectral_to_grid(&state.components[1], grid);
            let fu: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a * b * b).collect();
            let fv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| b * a * a).collect();
            vec![flux_tendency(&fu, n_max), flux_tendency(&fv, n_max)]
        }
        kind => {
            let u = spectral_to_grid(&state.components[0], grid);
            let mean_sq = state.components[0].l2_sq() / (4.0 * PI * PI);
            let flux: Vec<f64> = match kind {
                EquationKind::Mkdv => u.iter().map(|x| sigma * x * x * x / 3.0).collect(),
                EquationKind::RenormalizedMkdv => {
                    u.iter().map(|x| sigma * (x * x * x / 3.0 - mean_sq * x)).collect()
                }
                EquationKind::Kdv => u.iter().map(|x| x * x / 2.0).collect(),
                EquationKind::KdvMkdv => u.iter().map(|x| x * x / 2.0 + sigma * x * x * x / 3.0).collect(),
                _ => unreachable!(),
            };
            vec![flux_tendency(&flux, n_max)]
        }
    };
    Ok(SystemState::from_components(out, state.time))
}

/// Full triple convolution `Σ_{n₁+n₂+n₃=n} û(n₁)û(n₂)û(n₃) = (2π)² FT(u³)(n)`
/// for `|n| <= n_out`.
pub fn triple_convolution(u: &SpectralField, n_out: usize) -> SpectralField {
    let grid = grid_for(3 * u.n_max() + n_out + 1);
    let samples = spectral_to_grid(u, grid);
    let cubes: Vec<f64> = samples.iter().map(|x| x * x * x).collect();
    &grid_to_spectral(&cubes, n_out) * (4.0 * PI * PI)
}

/// `Σ_{n₁+n₂+n₃=n, (*)} û(n₁)û(n₂)û(n₃)` for `|n| <= n_max`, by
/// inclusion-exclusion of the non-resonant tuples out of the full convolution.
pub fn nonresonant_convolution(u: &SpectralField) -> SpectralField {
    let full = triple_convolution(u, u.n_max());
    let s = u.l2_sq();
    let mut out = SpectralField::zeros(u.n_max());
    for n in 0..=u.n_max() as i64 {
        let c = u.get(n);
        let excluded = if n == 0 { 3.0 * s * c - 2.0 * c * c * c } else { 3.0 * s * c - 3.0 * c.norm_sqr() * c };
        out.set(n, full.get(n) - excluded);
    }
    out
}

/// The diagonal term `𝓡(n) = i n |û(n)|² û(n)` and the `(*)`-restricted
/// convolution `𝓝(n) = i n Σ_{(*)} û(n₁)û(n₂)û(n₃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySplit {
    pub resonant: SpectralField,
    pub nonresonant: SpectralField,
}

impl NonlinearitySplit {
    /// `FT[(u² - (1/2π)∫u²) u_x]` from the table's convention constants.
    pub fn combine(&self, table: &CalibrationTable) -> SpectralField {
        let mut out = &self.resonant * table.resonant();
        out.axpy(table.nonresonant(), &self.nonresonant);
        out
    }
}

pub fn split_renormalized(u: &SpectralField) -> NonlinearitySplit {
    let resonant = u.map_modes(|n, c| Complex64::new(0.0, n as f64) * c.norm_sqr() * c);
    let nonresonant = nonresonant_convolution(u).derivative();
    NonlinearitySplit { resonant, nonresonant }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeDirection {
    /// mKdV trajectory to renormalized trajectory.
    ToRenormalized,
    /// Renormalized trajectory to mKdV trajectory.
    FromRenormalized,
}

/// Translates every slice by `±C σ t ‖u₀‖²_{L²}`, where `‖u₀‖²_{L²}` is the
/// physical mass.
pub fn gauge_translate(
    traj: &Trajectory,
    u0_l2_sq: f64,
    direction: GaugeDirection,
    table: &CalibrationTable,
) -> Result<Trajectory> {
    let c = table
        .gauge
        .ok_or_else(|| Error::CalibrationRequired("gauge drift constant C".into()))?;
    if !(u0_l2_sq >= 0.0) {
        return Err(Error::Precondition(format!("mass {u0_l2_sq} must be non-negative")));
    }
    let dir = match direction {
        GaugeDirection::ToRenormalized => 1.0,
        GaugeDirection::FromRenormalized => -1.0,
    };
    let speed = dir * c * traj.eq.sigma() * u0_l2_sq;
    let eq = match (traj.eq.kind(), direction) {
        (EquationKind::Mkdv, GaugeDirection::ToRenormalized) => EquationSpec::renormalized(traj.eq.sign().unwrap()),
        (EquationKind::RenormalizedMkdv, GaugeDirection::FromRenormalized) => {
            EquationSpec::mkdv(traj.eq.sign().unwrap())
        }
        (kind, _) => {
            return Err(Error::Precondition(format!("gauge transform does not apply to a {kind} trajectory")))
        }
    };
    Ok(translate_slices(traj, speed, eq))
}

fn translate_slices(traj: &Trajectory, speed: f64, eq: EquationSpec) -> Trajectory {
    let slices = traj.slices.iter().map(|s| s.map(|c| c.translated(speed * s.time))).collect();
    Trajectory { slices, eq, ..traj.clone() }
}

/// Fits the drift speed per unit `σ ‖u₀‖²_{L²}` by golden-section search on
/// the final-time distance between a translated mKdV trajectory and the
/// renormalized one. Returns `(C, distance)`.
pub fn calibrate_gauge(mkdv: &Trajectory, renormalized: &Trajectory, u0_l2_sq: f64) -> Result<(f64, f64)> {
    if mkdv.eq.kind() != EquationKind::Mkdv || renormalized.eq.kind() != EquationKind::RenormalizedMkdv {
        return Err(Error::Precondition("gauge calibration needs an mkdv and a renormalized trajectory".into()));
    }
    let (a, b) = (mkdv.slices.last().unwrap(), renormalized.slices.last().unwrap());
    let scale = mkdv.eq.sigma() * u0_l2_sq * a.time;
    let dist = |c: f64| (&a.u().translated(c * scale) - b.u()).l2_sq().sqrt();
    // Scan for the basin first: the distance is periodic in the shift.
    let coarse = (0..=400).map(|i| i as f64 / 400.0).min_by(|x, y| dist(*x).total_cmp(&dist(*y))).unwrap();
    let c = golden_section(&dist, coarse - 1.0 / 400.0, coarse + 1.0 / 400.0, 1e-14);
    Ok((c, dist(c)))
}

/// Minimizes a unimodal `f` on `[lo, hi]`.
pub(crate) fn golden_section(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    (lo + hi) / 2.0
}

/// Exact product of two band-limited fields (band `n_a + n_b`).
fn product(a: &SpectralField, b: &SpectralField) -> SpectralField {
    let band = a.n_max() + b.n_max();
    let grid = grid_for(2 * band + 1);
    let (fa, fb) = (spectral_to_grid(a, grid), spectral_to_grid(b, grid));
    let prod: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    grid_to_spectral(&prod, band)
}

fn widen(a: &SpectralField, band: usize) -> SpectralField {
    a.resized(band.max(a.n_max()))
}

/// `FT[α u² + β ∂_x u]` on the band `2 n_max`, without aliasing.
pub fn miura_map(u: &SpectralField, (alpha, beta): (f64, f64)) -> SpectralField {
    let band = 2 * u.n_max();
    let mut v = &product(u, u) * alpha;
    v.axpy(beta, &widen(&u.derivative(), band));
    v
}

/// KdV residual `v_t + v_xxx - c v v_x` of `v = α u² + β u_x`, where `u_t`
/// is the defocusing mKdV time derivative of the band-limited flow.
/// Returns the residual spectrum and the scale
/// `max(‖v_t‖, ‖v_xxx‖, ‖c v v_x‖)`.
fn kdv_residual_parts(u: &SpectralField, m: &MiuraCoefficients) -> Result<(SpectralField, f64)> {
    let n = u.n_max();
    let eq = EquationSpec::mkdv(Sign::Defocusing);
    let tendency = evaluate_rhs(&SystemState::scalar(u.clone(), 0.0), &eq)?;
    let cube = |k: i64| Complex64::new(0.0, (k as f64).powi(3));
    let ut = &u.map_modes(|k, c| cube(k) * c) + tendency.u();
    let band = 4 * n;
    let v = miura_map(u, (m.alpha, m.beta));
    let mut vt = &product(u, &ut) * (2.0 * m.alpha);
    vt.axpy(m.beta, &widen(&ut.derivative(), 2 * n));
    let vxxx = v.derivative().derivative().derivative();
    let nonlinear = &product(&v, &v.derivative()) * m.kdv_coupling;
    let vt = widen(&vt, band);
    let vxxx = widen(&vxxx, band);
    let residual = &(&vt + &vxxx) - &nonlinear;
    let scale = [vt.l2_sq(), vxxx.l2_sq(), nonlinear.l2_sq()].into_iter().fold(0.0, f64::max).sqrt();
    Ok((residual, scale))
}

/// Relative KdV residual of the Miura image of one defocusing mKdV state.
pub fn kdv_residual(u: &SpectralField, m: &MiuraCoefficients) -> Result<f64> {
    let (r, scale) = kdv_residual_parts(u, m)?;
    Ok(if scale > 0.0 { r.l2_sq().sqrt() / scale } else { 0.0 })
}

/// Largest relative KdV residual over the slices of a defocusing mKdV run.
pub fn miura_residual(traj: &Trajectory, table: &CalibrationTable) -> Result<f64> {
    let m = table.miura.ok_or_else(|| Error::CalibrationRequired("Miura coefficients".into()))?;
    check_defocusing(traj)?;
    traj.slices.iter().map(|s| kdv_residual(s.u(), &m)).try_fold(0.0, |acc, r| Ok(f64::max(acc, r?)))
}

fn check_defocusing(traj: &Trajectory) -> Result<()> {
    if traj.eq != EquationSpec::mkdv(Sign::Defocusing) {
        return Err(Error::Precondition("the Miura map applies to defocusing mkdv runs".into()));
    }
    Ok(())
}

/// Gauss-Newton fit of `(β, c)` with `α = 1` (the residual is homogeneous
/// under `α = β = 0`) on the given slices.
pub fn calibrate_miura(traj: &Trajectory, beta0: f64, c0: f64) -> Result<MiuraCoefficients> {
    check_defocusing(traj)?;
    let residual_vec = |beta: f64, c: f64| -> Result<Vec<f64>> {
        let m = MiuraCoefficients { alpha: 1.0, beta, kdv_coupling: c };
        let mut out = Vec::new();
        for s in &traj.slices {
            let (r, _) = kdv_residual_parts(s.u(), &m)?;
            out.extend(r.nonnegative().iter().flat_map(|z| [z.re, z.im]));
        }
        Ok(out)
    };
    let (mut beta, mut c) = (beta0, c0);
    for _ in 0..50 {
        let r = residual_vec(beta, c)?;
        let h = 1e-6;
        let rb: Vec<f64> = residual_vec(beta + h, c)?.iter().zip(&r).map(|(a, b)| (a - b) / h).collect();
        let rc: Vec<f64> = residual_vec(beta, c + h)?.iter().zip(&r).map(|(a, b)| (a - b) / h).collect();
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let (jbb, jbc, jcc) = (dot(&rb, &rb), dot(&rb, &rc), dot(&rc, &rc));
        let (gb, gc) = (dot(&rb, &r), dot(&rc, &r));
        let det = jbb * jcc - jbc * jbc;
        if det.abs() < f64::MIN_POSITIVE {
            return Err(Error::Precondition("degenerate Miura calibration data".into()));
        }
        let db = -(jcc * gb - jbc * gc) / det;
        let dc = -(jbb * gc - jbc * gb) / det;
        beta += db;
        c += dc;
        if db.abs() < 1e-13 * beta.abs().max(1.0) && dc.abs() < 1e-13 * c.abs().max(1.0) {
            break;
        }
    }
    Ok(MiuraCoefficients { alpha: 1.0, beta, kdv_coupling: c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_field, RandomLaw};
    use crate::resonance::{psi_multiplier, FrequencyTuple, Symbol, SymbolFunction};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cos_field(m: usize, n_max: usize) -> SpectralField {
        let mut u = SpectralField::zeros(n_max);
        u.set(m as i64, c(PI, 0.0));
        u
    }

    /// Direct `Σ_{n₁+n₂+n₃=n} f(n₁)g(n₂)h(n₃)`.
    fn conv3(f: &SpectralField, g: &SpectralField, h: &SpectralField, n: i64) -> Complex64 {
        let b = f.n_max() as i64;
        let mut acc = c(0.0, 0.0);
        for n1 in -b..=b {
            for n2 in -b..=b {
                let n3 = n - n1 - n2;
                if n3.abs() <= b {
                    acc += f.get(n1) * g.get(n2) * h.get(n3);
                }
            }
        }
        acc
    }

    fn conv2(f: &SpectralField, g: &SpectralField, n: i64) -> Complex64 {
        let b = f.n_max() as i64;
        (-b..=b).filter(|n1| (n - n1).abs() <= b).map(|n1| f.get(n1) * g.get(n - n1)).sum()
    }

    /// Brute-force tendency from the flux definitions.
    fn oracle(state: &SystemState, eq: &EquationSpec) -> Vec<SpectralField> {
        let n_max = state.n_max();
        let s = eq.sigma();
        let k2 = 1.0 / (4.0 * PI * PI);
        let k1 = 1.0 / (2.0 * PI);
        let u = state.u();
        let field = |f: &dyn Fn(i64) -> Complex64| {
            SpectralField::from_fn(n_max, |n| c(0.0, n as f64) * f(n))
        };
        match eq.kind() {
            EquationKind::Mkdv => vec![field(&|n| conv3(u, u, u, n) * k2 * s / 3.0)],
            EquationKind::RenormalizedMkdv => {
                let m = u.l2_sq() * k2;
                vec![field(&|n| (conv3(u, u, u, n) * k2 / 3.0 - m * u.get(n)) * s)]
            }
            EquationKind::Kdv => vec![field(&|n| conv2(u, u, n) * k1 / 2.0)],
            EquationKind::KdvMkdv => {
                vec![field(&|n| conv2(u, u, n) * k1 / 2.0 + conv3(u, u, u, n) * k2 * s / 3.0)]
            }
            EquationKind::MkdvMkdvSystem => {
                let v = state.v().unwrap();
                vec![field(&|n| conv3(u, v, v, n) * k2), field(&|n| conv3(v, u, u, n) * k2)]
            }
            EquationKind::Airy => vec![SpectralField::zeros(n_max)],
        }
    }

    fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        (a - b).max_abs()
    }

    fn all_specs() -> Vec<EquationSpec> {
        let mut v = Vec::new();
        for sign in [Sign::Defocusing, Sign::Focusing] {
            v.extend([EquationSpec::mkdv(sign), EquationSpec::renormalized(sign), EquationSpec::kdv_mkdv(sign)]);
        }
        v.extend([EquationSpec::kdv(), EquationSpec::system(), EquationSpec::airy()]);
        v
    }

    fn state_for(eq: &EquationSpec, n_max: usize, seed: u64) -> SystemState {
        let law = RandomLaw::new(1.0).normalized(0.0, 3.0);
        let u = random_field(n_max, &law, seed);
        if eq.kind() == EquationKind::MkdvMkdvSystem {
            SystemState::pair(u, random_field(n_max, &law, seed + 1000), 0.0).unwrap()
        } else {
            SystemState::scalar(u, 0.0)
        }
    }

    #[test]
    fn sign_presence_is_validated() {
        assert!(EquationSpec::new(EquationKind::Kdv, Some(Sign::Focusing)).is_err());
        assert!(EquationSpec::new(EquationKind::Mkdv, None).is_err());
        assert!(EquationSpec::new(EquationKind::KdvMkdv, Some(Sign::Focusing)).is_ok());
        for k in EquationKind::ALL {
            assert_eq!(k.name().parse::<EquationKind>().unwrap(), k);
        }
    }

    #[test]
    fn constant_field_has_zero_tendency() {
        let mut u = SpectralField::zeros(8);
        u.set(0, c(2.5, 0.0));
        for eq in all_specs() {
            let st = state_for(&eq, 8, 0).map(|_| u.clone());
            for comp in evaluate_rhs(&st, &eq).unwrap().components() {
                assert!(comp.max_abs() < 1e-13, "{:?}", eq);
            }
        }
    }

    #[test]
    fn cosine_mkdv_tendency_is_trig_identity() {
        // u²u_x = -(sin x + sin 3x)/4; FT(sin kx)(±k) = ∓iπ.
        let u = cos_field(1, 4);
        let t = evaluate_rhs(&SystemState::scalar(u, 0.0), &EquationSpec::mkdv(Sign::Defocusing)).unwrap();
        let expected = SpectralField::from_fn(4, |n| match n {
            1 | 3 => c(0.0, PI / 4.0),
            _ => c(0.0, 0.0),
        });
        assert!(max_diff(t.u(), &expected) < 1e-13);
    }

    #[test]
    fn pseudo_spectral_matches_direct_convolution() {
        for eq in all_specs() {
            for seed in 0..5 {
                let st = state_for(&eq, 8, seed);
                let fast = evaluate_rhs(&st, &eq).unwrap();
                let slow = oracle(&st, &eq);
                for (a, b) in fast.components().iter().zip(&slow) {
                    let scale = b.max_abs().max(1.0);
                    assert!(max_diff(a, b) <= 1e-13 * scale, "{:?} seed {seed}: {}", eq, max_diff(a, b));
                    assert_eq!(a.get(0), c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn undersized_grid_is_a_bandwidth_error() {
        let eq = EquationSpec::mkdv(Sign::Defocusing);
        let st = state_for(&eq, 8, 0);
        assert!(matches!(evaluate_rhs_on_grid(&st, &eq, 32), Err(Error::Bandwidth(_))));
        assert!(evaluate_rhs_on_grid(&st, &eq, 33).is_ok());
        let kdv = EquationSpec::kdv();
        assert!(evaluate_rhs_on_grid(&st, &kdv, 25).is_ok());
    }

    #[test]
    fn single_mode_split() {
        for m in 1..4 {
            let u = cos_field(m, 6);
            let split = split_renormalized(&u);
            // Only (m, m, m) satisfies (*), feeding the third harmonic.
            for n in 0..=6i64 {
                let expected = if n == 3 * m as i64 { c(0.0, n as f64 * PI.powi(3)) } else { c(0.0, 0.0) };
                assert!((split.nonresonant.get(n) - expected).norm() < 1e-10, "n = {n}");
            }
            let r = split.resonant.get(m as i64);
            assert!((r - c(0.0, m as f64 * PI.powi(3))).norm() < 1e-12);
        }
        let zero = split_renormalized(&SpectralField::zeros(5));
        assert_eq!(zero.resonant.max_abs() + zero.nonresonant.max_abs(), 0.0);
    }

    #[test]
    fn nonresonant_convolution_matches_enumeration() {
        for seed in 0..10 {
            let u = random_field(6, &RandomLaw::new(0.5), seed);
            let fast = nonresonant_convolution(&u);
            let b = 6i64;
            for n in -b..=b {
                let mut acc = c(0.0, 0.0);
                for n1 in -b..=b {
                    for n2 in -b..=b {
                        let n3 = n - n1 - n2;
                        if n3.abs() <= b && (n1 + n2) * (n1 + n3) * (n2 + n3) != 0 {
                            acc += u.get(n1) * u.get(n2) * u.get(n3);
                        }
                    }
                }
                assert!((fast.get(n) - acc).norm() < 1e-11 * acc.norm().max(1.0), "n = {n}");
            }
        }
    }

    #[test]
    fn split_reproduces_mean_subtracted_nonlinearity() {
        let table = CalibrationTable::shipped();
        for n_max in 1..=8 {
            for seed in 0..50 {
                let u = random_field(n_max, &RandomLaw::new(0.5), seed);
                let split = split_renormalized(&u);
                let physical = evaluate_rhs(&SystemState::scalar(u.clone(), 0.0), &EquationSpec::renormalized(Sign::Defocusing))
                    .unwrap();
                let scale = physical.u().max_abs().max(1.0);
                assert!(max_diff(&split.combine(&table), physical.u()) <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn split_constants_are_recovered_by_least_squares() {
        // Fit FT[(u² - m)u_x] = x R + y N over many seeds.
        let (mut a, mut b, mut cc, mut d, mut e) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for seed in 0..50 {
            let u = random_field(8, &RandomLaw::new(0.5), seed);
            let split = split_renormalized(&u);
            let target = evaluate_rhs(&SystemState::scalar(u, 0.0), &EquationSpec::renormalized(Sign::Defocusing)).unwrap();
            for n in 0..=8 {
                let (r, nn, t) = (split.resonant.get(n), split.nonresonant.get(n), target.u().get(n));
                a += r.norm_sqr();
                b += (r.conj() * nn).re;
                cc += nn.norm_sqr();
                d += (r.conj() * t).re;
                e += (nn.conj() * t).re;
            }
        }
        let det = a * cc - b * b;
        let x = (cc * d - b * e) / det;
        let y = (a * e - b * d) / det;
        let table = CalibrationTable::shipped();
        assert!((x - table.resonant()).abs() < 1e-14, "{x}");
        assert!((y - table.nonresonant()).abs() < 1e-14, "{y}");
    }

    #[test]
    fn miura_of_cosine() {
        let v = miura_map(&cos_field(1, 3), (1.0, 1.0));
        // cos²x - sin x = 1/2 + cos(2x)/2 - sin x.
        let expected = SpectralField::from_fn(6, |n| match n {
            0 => c(PI, 0.0),
            1 => c(0.0, PI),
            2 => c(PI / 2.0, 0.0),
            _ => c(0.0, 0.0),
        });
        assert!(max_diff(&v, &expected) < 1e-13);
        assert_eq!(miura_map(&SpectralField::zeros(4), (1.0, 1.0)).max_abs(), 0.0);
    }

    #[test]
    fn system_trivial_resonances_cancel() {
        let a = SymbolFunction::sobolev(0.5, 0.1);
        let b = 8i64;
        for k1 in -b..=b {
            for k2 in -b..=b {
                for k3 in -b..=b {
                    let k4 = -(k1 + k2 + k3);
                    if k4.abs() > b || (k1 + k2) * (k1 + k3) * (k2 + k3) != 0 {
                        continue;
                    }
                    let t = FrequencyTuple::new([k1, k2, k3, k4]).unwrap();
                    assert!(psi_multiplier(&a, &t).abs() < 1e-12, "{:?}", t);
                }
            }
        }
    }

    #[test]
    fn system_energy_derivative_is_symmetrized_quartic_form() {
        // d/dt (‖u‖²_a + ‖v‖²_a) = -(i/4π²) Σ ψ û û v̂ v̂.
        let a = SymbolFunction::sobolev(0.5, 0.1);
        let eq = EquationSpec::system();
        let st = state_for(&eq, 5, 7);
        let t = evaluate_rhs(&st, &eq).unwrap();
        let rate: f64 = st
            .components()
            .iter()
            .zip(t.components())
            .map(|(f, df)| {
                (-5..=5i64).map(|n| 2.0 * a.value(n) * (f.get(n).conj() * df.get(n)).re).sum::<f64>()
            })
            .sum();
        let (u, v) = (st.u(), st.v().unwrap());
        let mut q = c(0.0, 0.0);
        for k1 in -5..=5i64 {
            for k2 in -5..=5i64 {
                for k3 in -5..=5i64 {
                    let k4 = -(k1 + k2 + k3);
                    if k4.abs() > 5 {
                        continue;
                    }
                    let t = FrequencyTuple::new([k1, k2, k3, k4]).unwrap();
                    q += psi_multiplier(&a, &t) * u.get(k1) * u.get(k2) * v.get(k3) * v.get(k4);
                }
            }
        }
        let predicted = (c(0.0, -1.0) * q / (4.0 * PI * PI)).re;
        assert!((rate - predicted).abs() < 1e-12 * rate.abs().max(1.0), "{rate} vs {predicted}");
    }

    #[test]
    fn gauge_requires_calibration() {
        let eq = EquationSpec::mkdv(Sign::Defocusing);
        let traj = Trajectory {
            times: vec![0.0],
            slices: vec![state_for(&eq, 4, 0)],
            eq,
            dt_internal: 0.1,
        };
        let err = gauge_translate(&traj, 1.0, GaugeDirection::ToRenormalized, &CalibrationTable::uncalibrated());
        assert!(matches!(err, Err(Error::CalibrationRequired(_))));
        let ok = gauge_translate(&traj, 1.0, GaugeDirection::ToRenormalized, &CalibrationTable::shipped()).unwrap();
        assert_eq!(ok.slices[0], traj.slices[0]);
    }
}
