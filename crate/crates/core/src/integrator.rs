//! Integrating-factor RK4 in the Airy interaction picture.
//!
//! With `L(n) = n³`, the flow `∂_t û = iLû + 𝒩(û)` becomes
//! `∂_t w = e^{-iLt} 𝒩(e^{iLt} w)` for `w = e^{-iLt} û`, which is stepped
//! with the classical RK4 tableau. The linear factor is a pure phase and is
//! applied exactly.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use serde::Serialize;

use crate::equations::{evaluate_rhs, physical_l2_sq, EquationKind, EquationSpec, Sign, SystemState};
use crate::error::{Error, Result};
use crate::fft::smooth_size;
use crate::spectral::{read_dump, spectral_to_grid, write_dump, SpectralField};

/// Recorded solution at uniformly spaced times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub slices: Vec<SystemState>,
    pub eq: EquationSpec,
    pub dt_internal: f64,
}

impl Trajectory {
    pub fn initial(&self) -> &SystemState {
        &self.slices[0]
    }

    pub fn last(&self) -> &SystemState {
        self.slices.last().expect("trajectories are never empty")
    }

    /// Spacing between recorded slices.
    pub fn sample_step(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn n_max(&self) -> usize {
        self.slices[0].n_max()
    }
}

/// `L²` growth beyond this factor is treated as blow-up.
const GROWTH_LIMIT: f64 = 1e6;

fn phases(n_max: usize, tau: f64) -> Vec<Complex64> {
    (0..=n_max).map(|n| Complex64::from_polar(1.0, (n as f64).powi(3) * tau)).collect()
}

fn rotate(state: &SystemState, phase: &[Complex64]) -> SystemState {
    state.map(|f| f.map_modes(|n, c| c * phase[n as usize]))
}

fn combine(terms: &[(f64, &SystemState)]) -> SystemState {
    let mut out = terms[0].1.map(|f| f * terms[0].0);
    for (w, s) in &terms[1..] {
        for (dst, src) in out.components_mut().iter_mut().zip(s.components()) {
            dst.axpy(*w, src);
        }
    }
    out
}

/// Precomputed phases for one step size.
struct Stepper {
    eq: EquationSpec,
    h: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

impl Stepper {
    fn new(eq: EquationSpec, n_max: usize, h: f64) -> Self {
        Self { eq, h, half: phases(n_max, h / 2.0), full: phases(n_max, h) }
    }

    fn step(&self, u: &SystemState) -> Result<SystemState> {
        let h = self.h;
        let n = |s: &SystemState| evaluate_rhs(s, &self.eq);
        // Stages in the physical picture: a_i = 𝒩(stage state).
        let a1 = n(u)?;
        let base_half = rotate(u, &self.half);
        let a1_half = rotate(&a1, &self.half);
        let a2 = n(&combine(&[(1.0, &base_half), (h / 2.0, &a1_half)]))?;
        let a3 = n(&combine(&[(1.0, &base_half), (h / 2.0, &a2)]))?;
        let a3_half = rotate(&a3, &self.half);
        let base_full = rotate(u, &self.full);
        let a4 = n(&combine(&[(1.0, &base_full), (h, &a3_half)]))?;
        let a1_full = rotate(&a1, &self.full);
        let mid = rotate(&combine(&[(1.0, &a2), (1.0, &a3)]), &self.half);
        let mut out = combine(&[(1.0, &base_full), (h / 6.0, &a1_full), (h / 3.0, &mid), (h / 6.0, &a4)]);
        out.time = u.time + h;
        Ok(out)
    }
}

fn check_health(state: &SystemState, l2_0: f64, last_good: f64) -> Result<()> {
    if !state.is_finite() {
        return Err(Error::BlowUp { last_good_time: last_good, reason: "non-finite coefficients".into() });
    }
    let l2 = state.l2_sq();
    if l2_0 > 0.0 && l2 > GROWTH_LIMIT * GROWTH_LIMIT * l2_0 {
        return Err(Error::BlowUp {
            last_good_time: last_good,
            reason: format!("L² norm grew by {:.3e}x", (l2 / l2_0).sqrt()),
        });
    }
    Ok(())
}

fn check_components(u0: &SystemState, eq: &EquationSpec) -> Result<()> {
    if u0.components().len() != eq.kind().components() {
        return Err(Error::Precondition(format!(
            "{} expects {} component(s)",
            eq.kind(),
            eq.kind().components()
        )));
    }
    Ok(())
}

fn advise_cfl(dt: f64, n_max: usize) {
    let limit = 1.0 / (n_max.max(1) as f64).powi(3);
    if dt > limit {
        // Sweeps would repeat the same advisory for every cell.
        static WARNED: AtomicBool = AtomicBool::new(false);
        if WARNED.swap(true, Ordering::Relaxed) {
            log::debug!("dt = {dt:e} exceeds the advisory 1/n_max³ = {limit:e}");
        } else {
            log::warn!("dt = {dt:e} exceeds the advisory 1/n_max³ = {limit:e} (reported once)");
        }
    }
}

/// Evolves `u0` over `[t₀, t₀ + T]` with steps of at most `dt`, recording
/// every `sample_every`-th step. The step count is rounded up to a multiple
/// of `sample_every`, so the last slice lands exactly on `t₀ + T`.
pub fn evolve(u0: &SystemState, eq: &EquationSpec, t: f64, dt: f64, sample_every: usize) -> Result<Trajectory> {
    if !(t > 0.0 && dt > 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("need T > 0 and dt > 0, got T = {t}, dt = {dt}")));
    }
    if sample_every == 0 {
        return Err(Error::Precondition("sample_every must be positive".into()));
    }
    check_components(u0, eq)?;
    let blocks = (t / (dt * sample_every as f64) - 1e-9).ceil().max(1.0) as usize;
    let steps = blocks * sample_every;
    let h = t / steps as f64;
    advise_cfl(h, u0.n_max());
    let stepper = Stepper::new(*eq, u0.n_max(), h);
    let l2_0 = u0.l2_sq();
    let t0 = u0.time;
    let mut times = vec![t0];
    let mut slices = vec![u0.clone()];
    let mut u = u0.clone();
    for i in 1..=steps {
        let last_good = u.time;
        u = stepper.step(&u)?;
        u.time = t0 + i as f64 * h;
        check_health(&u, l2_0, last_good)?;
        if i % sample_every == 0 {
            times.push(u.time);
            slices.push(u.clone());
        }
    }
    Ok(Trajectory { times, slices, eq: *eq, dt_internal: h })
}

/// Final state after a signed `duration`, with `|step| <= dt`.
pub fn advance(u0: &SystemState, eq: &EquationSpec, duration: f64, dt: f64) -> Result<SystemState> {
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("dt = {dt} must be positive")));
    }
    check_components(u0, eq)?;
    if duration == 0.0 {
        return Ok(u0.clone());
    }
    let steps = (duration.abs() / dt - 1e-9).ceil().max(1.0) as usize;
    let h = duration / steps as f64;
    let stepper = Stepper::new(*eq, u0.n_max(), h);
    let l2_0 = u0.l2_sq();
    let mut u = u0.clone();
    for i in 1..=steps {
        let last_good = u.time;
        u = stepper.step(&u)?;
        u.time = u0.time + i as f64 * h;
        check_health(&u, l2_0, last_good)?;
    }
    Ok(u)
}

/// Oracle solution: 4× the modes and `dt/8`, projected back to the input band.
pub fn reference_solution(u0: &SystemState, eq: &EquationSpec, t: f64, dt: f64) -> Result<SystemState> {
    let wide = u0.resized(4 * u0.n_max());
    let fine = advance(&wide, eq, t, dt / 8.0)?;
    Ok(fine.resized(u0.n_max()))
}

/// Physical `∫ f dx` of a product of fields sampled on a grid fine enough
/// for the integrand's degree.
fn grid_integral(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() * 2.0 * PI / values.len() as f64
}

fn dirichlet_sq(u: &SpectralField) -> f64 {
    physical_l2_sq(&u.derivative())
}

/// Conserved energy with the sign convention of the equation.
pub fn energy(state: &SystemState, eq: &EquationSpec) -> f64 {
    let n_max = state.n_max();
    let sigma = eq.sigma();
    let grid = smooth_size(4 * n_max + 1);
    let u = state.u();
    let us = spectral_to_grid(u, grid);
    match eq.kind() {
        EquationKind::Airy => dirichlet_sq(u) / 2.0,
        EquationKind::Mkdv | EquationKind::RenormalizedMkdv => {
            dirichlet_sq(u) / 2.0 + sigma * grid_integral(&us.iter().map(|x| x.powi(4)).collect::<Vec<_>>()) / 12.0
        }
        EquationKind::Kdv => dirichlet_sq(u) / 2.0 + grid_integral(&us.iter().map(|x| x.powi(3)).collect::<Vec<_>>()) / 6.0,
        EquationKind::KdvMkdv => {
            let f: Vec<f64> = us.iter().map(|x| x.powi(3) / 6.0 + sigma * x.powi(4) / 12.0).collect();
            dirichlet_sq(u) / 2.0 + grid_integral(&f)
        }
        EquationKind::MkdvMkdvSystem => {
            let v = state.v().expect("system states carry two components");
            let vs = spectral_to_grid(v, grid);
            let f: Vec<f64> = us.iter().zip(&vs).map(|(a, b)| a * a * b * b / 2.0).collect();
            (dirichlet_sq(u) + dirichlet_sq(v)) / 2.0 + grid_integral(&f)
        }
    }
}

/// `∫u²`, `∫v²` and the non-conserved `∫uv` for system trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSeries {
    pub u_mass: Vec<f64>,
    pub v_mass: Vec<f64>,
    pub cross: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    /// `∫u²` (or `∫u² + ∫v²` for the system).
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    /// `∫u` (summed over components).
    pub mean: Vec<f64>,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub mean_drift: f64,
    pub system: Option<SystemSeries>,
}

fn drift(series: &[f64]) -> f64 {
    let q0 = series[0];
    let scale = if q0 != 0.0 { q0.abs() } else { 1.0 };
    series.iter().map(|q| (q - q0).abs() / scale).fold(0.0, f64::max)
}

pub fn conservation_report(traj: &Trajectory) -> ConservationReport {
    let mass: Vec<f64> = traj.slices.iter().map(|s| s.components().iter().map(physical_l2_sq).sum()).collect();
    let energy: Vec<f64> = traj.slices.iter().map(|s| energy(s, &traj.eq)).collect();
    let mean: Vec<f64> = traj.slices.iter().map(|s| s.components().iter().map(|c| c.get(0).re).sum()).collect();
    let system = (traj.eq.kind() == EquationKind::MkdvMkdvSystem).then(|| SystemSeries {
        u_mass: traj.slices.iter().map(|s| physical_l2_sq(s.u())).collect(),
        v_mass: traj.slices.iter().map(|s| physical_l2_sq(s.v().unwrap())).collect(),
        cross: traj.slices.iter().map(|s| s.u().inner(s.v().unwrap()) / (2.0 * PI)).collect(),
    });
    ConservationReport {
        times: traj.times.clone(),
        mass_drift: drift(&mass),
        energy_drift: drift(&energy),
        mean_drift: drift(&mean),
        mass,
        energy,
        mean,
        system,
    }
}

/// Writes `t n_max eq_kind sign` followed by one spectrum dump per component.
pub fn write_checkpoint(state: &SystemState, eq: &EquationSpec, out: &mut impl Write) -> Result<()> {
    let sign = match eq.sign() {
        Some(Sign::Defocusing) => "+1",
        Some(Sign::Focusing) => "-1",
        None => "none",
    };
    writeln!(out, "{:e} {} {} {}", state.time, state.n_max(), eq.kind(), sign)?;
    for c in state.components() {
        write_dump(c, out)?;
    }
    Ok(())
}

pub fn read_checkpoint(reader: impl BufRead) -> Result<(SystemState, EquationSpec)> {
    let mut lines = reader.lines().map(|l| l.unwrap_or_default()).filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty checkpoint".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [t, n_max, kind, sign] = fields[..] else {
        return Err(Error::Parse(format!("malformed checkpoint header {header:?}")));
    };
    let t: f64 = t.parse().map_err(|e| Error::Parse(format!("time {t:?}: {e}")))?;
    let n_max: usize = n_max.parse().map_err(|e| Error::Parse(format!("n_max {n_max:?}: {e}")))?;
    let kind: EquationKind = kind.parse()?;
    let sign = match sign {
        "none" => None,
        s => Some(Sign::from_value(s.parse().map_err(|e| Error::Parse(format!("sign {s:?}: {e}")))?)?),
    };
    let eq = EquationSpec::new(kind, sign)?;
    let mut comps = Vec::new();
    for _ in 0..kind.components() {
        let c = read_dump(&mut lines)?;
        if c.n_max() != n_max {
            return Err(Error::Parse(format!("dump band {} disagrees with header {n_max}", c.n_max())));
        }
        comps.push(c);
    }
    let state = match comps.len() {
        1 => SystemState::scalar(comps.pop().unwrap(), t),
        _ => {
            let v = comps.pop().unwrap();
            SystemState::pair(comps.pop().unwrap(), v, t)?
        }
    };
    Ok((state, eq))
}
