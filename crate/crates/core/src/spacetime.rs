//! Space-time Fourier transforms of sampled trajectories, Bourgain-type
//! norms and the short-time restriction norms `F^α_k`, `N^α_k`.
//!
//! Spectra are stored in the interaction picture: the time transform is
//! taken of `e^{-itn³} û(t, n)`, so the stored variable is the modulation
//! `λ = τ − n³` itself and no resolution is spent following the dispersion
//! surface. Coefficients follow the crate convention (no `1/2π` in space);
//! the time transform is `∫ f(t) e^{-iλt} dt` approximated by a zero-padded
//! DFT. Real fields are represented by `n >= 0`: the cell `(−n, −λ)` carries
//! the conjugate amplitude and the same weights, so it enters every norm
//! through a multiplicity of two.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::envelopes::block_energies;
use crate::equations::evaluate_rhs;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fft;
use crate::integrator::Trajectory;
use crate::spectral::{japanese, DyadicBlock, SpectralField};

/// Samples per time window demanded by [`short_time_norm`].
pub const SAMPLES_PER_WINDOW: f64 = 32.0;
/// Zero-padding factor of the discrete time transform.
pub const PADDING: usize = 8;
/// Outer edge and plateau edge of `η₀`.
pub const ETA_SUPPORT: f64 = 1.6;
pub const ETA_PLATEAU: f64 = 1.25;

fn transition(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Even bump, `1` on `[−5/4, 5/4]`, `0` outside `(−8/5, 8/5)`:
/// `η₀(x) = h((8/5 − |x|)/(8/5 − 5/4))` with `h(y) = e(y)/(e(y) + e(1 − y))`
/// and `e(y) = exp(−1/y)` for `y > 0`.
pub fn eta0(x: f64) -> f64 {
    let y = (ETA_SUPPORT - x.abs()) / (ETA_SUPPORT - ETA_PLATEAU);
    if y >= 1.0 {
        1.0
    } else if y <= 0.0 {
        0.0
    } else {
        let a = transition(y);
        a / (a + transition(1.0 - y))
    }
}

/// `η_0 = η₀`, `η_j(x) = η₀(x/2^j) − η₀(x/2^{j−1})`; `Σ_{j<=m} η_j = η₀(·/2^m)`.
pub fn eta_j(j: u32, x: f64) -> f64 {
    if j == 0 {
        eta0(x)
    } else {
        let scale = (j as f64).exp2();
        eta0(x / scale) - eta0(2.0 * x / scale)
    }
}

/// Time weight applied before transforming.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TimeWindow {
    /// All samples with unit weight.
    Full,
    /// `η₀((t − center)/scale)`.
    Bump { center: f64, scale: f64 },
}

impl TimeWindow {
    pub fn weight(&self, t: f64) -> f64 {
        match *self {
            TimeWindow::Full => 1.0,
            TimeWindow::Bump { center, scale } => eta0((t - center) / scale),
        }
    }
}

/// Sampled `f̃(λ, n)` on `n >= 0` and modulation bins `λ_b = (b − bins/2)Δτ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSpectrum {
    modes: Vec<i64>,
    bins: usize,
    tau_resolution: f64,
    values: Vec<Complex64>,
    window: TimeWindow,
}

fn multiplicity(n: i64) -> f64 {
    if n == 0 {
        1.0
    } else {
        2.0
    }
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Resolution("at least two time samples are needed".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::Precondition("sample times must increase".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(w[1].abs()) {
            return Err(Error::Precondition("sample times must be uniformly spaced".into()));
        }
    }
    Ok(dt)
}

impl SpaceTimeSpectrum {
    pub fn zeros(modes: Vec<i64>, bins: usize, tau_resolution: f64) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); modes.len() * bins];
        Self { modes, bins, tau_resolution, values, window: TimeWindow::Full }
    }

    /// Transforms uniformly spaced samples. Each slice is weighted by
    /// `window`, moved to the interaction picture and zero-padded to
    /// [`PADDING`] times the weighted sample count.
    pub fn from_samples(times: &[f64], slices: &[SpectralField], modes: &[i64], window: TimeWindow) -> Result<Self> {
        if times.len() != slices.len() {
            return Err(Error::Precondition("one slice per sample time is required".into()));
        }
        let dt = check_uniform(times)?;
        let weights: Vec<f64> = times.iter().map(|&t| window.weight(t)).collect();
        let first = weights.iter().position(|&w| w != 0.0).unwrap_or(0);
        let last = weights.iter().rposition(|&w| w != 0.0).unwrap_or(0);
        let count = last - first + 1;
        let bins = fft::smooth_size(PADDING * count).max(2);
        let bins = bins + bins % 2;
        let tau_resolution = 2.0 * PI / (bins as f64 * dt);
        let t0 = times[first];
        let mut values = Vec::with_capacity(modes.len() * bins);
        let mut buf = vec![Complex64::new(0.0, 0.0); bins];
        for &n in modes {
            if n < 0 || n as usize > slices[first].n_max() {
                return Err(Error::Bandwidth(format!("mode {n} is not stored by the slices")));
            }
            let cube = (n as f64).powi(3);
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for i in first..=last {
                let phase = Complex64::from_polar(1.0, -cube * times[i]);
                buf[i - first] = slices[i].get(n) * phase * weights[i];
            }
            fft::forward(&mut buf);
            for b in 0..bins {
                let m = b as i64 - (bins / 2) as i64;
                let src = m.rem_euclid(bins as i64) as usize;
                let lambda = m as f64 * tau_resolution;
                values.push(buf[src] * Complex64::from_polar(dt, -lambda * t0));
            }
        }
        Ok(Self { modes: modes.to_vec(), bins, tau_resolution, values, window })
    }

    /// Builds a spectrum from explicit cell values (`values[mode][bin]`).
    pub fn from_cells(modes: Vec<i64>, bins: usize, tau_resolution: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != modes.len() * bins {
            return Err(Error::Precondition("cell table does not match modes × bins".into()));
        }
        Ok(Self { modes, bins, tau_resolution, values, window: TimeWindow::Full })
    }

    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn tau_resolution(&self) -> f64 {
        self.tau_resolution
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    /// Modulation `λ = τ − n³` of bin `b`.
    pub fn modulation(&self, b: usize) -> f64 {
        (b as f64 - (self.bins / 2) as f64) * self.tau_resolution
    }

    pub fn value(&self, mode_index: usize, b: usize) -> Complex64 {
        self.values[mode_index * self.bins + b]
    }

    pub fn set(&mut self, mode_index: usize, b: usize, v: Complex64) {
        self.values[mode_index * self.bins + b] = v;
    }

    /// Largest `|λ|` represented.
    pub fn max_modulation(&self) -> f64 {
        (self.bins / 2) as f64 * self.tau_resolution
    }

    fn weighted_sum(&self, w: impl Fn(i64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (i, &n) in self.modes.iter().enumerate() {
            let mult = multiplicity(n);
            for b in 0..self.bins {
                let v = self.values[i * self.bins + b];
                if v.re != 0.0 || v.im != 0.0 {
                    total += mult * w(n, self.modulation(b)) * v.norm_sqr();
                }
            }
        }
        total * self.tau_resolution
    }

    /// `Σ |f̃|² Δτ` with multiplicity for `±n`.
    pub fn l2_sq(&self) -> f64 {
        self.weighted_sum(|_, _| 1.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Cellwise sum; the two spectra must share their layout.
    pub fn added(&self, other: &Self) -> Result<Self> {
        if self.modes != other.modes || self.bins != other.bins || self.tau_resolution != other.tau_resolution {
            return Err(Error::Precondition("spectra have different layouts".into()));
        }
        let mut out = self.clone();
        out.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    /// Multiplies each cell by `f(n, λ)`.
    pub fn weighted(&self, f: impl Fn(i64, f64) -> f64) -> Self {
        let mut out = self.clone();
        for (i, &n) in self.modes.iter().enumerate() {
            for b in 0..self.bins {
                out.values[i * self.bins + b] *= f(n, self.modulation(b));
            }
        }
        out
    }

    fn support_outside(&self, k: DyadicBlock) -> Option<i64> {
        self.modes.iter().enumerate().find_map(|(i, &n)| {
            let nonzero = self.values[i * self.bins..(i + 1) * self.bins].iter().any(|v| v.norm_sqr() > 0.0);
            (nonzero && !k.contains(n)).then_some(n)
        })
    }
}

/// Number of modulation shells needed for `Σ_j η_j ≡ 1` on the spectrum.
pub fn shell_count(data: &SpaceTimeSpectrum) -> u32 {
    let top = data.max_modulation();
    let mut j = 0;
    while (j as f64).exp2() * ETA_PLATEAU < top {
        j += 1;
    }
    j + 1
}

/// The slices `η_j(τ − n³) f̃` for `j = 0..shell_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationDecomposition {
    pub blocks: Vec<SpaceTimeSpectrum>,
}

impl ModulationDecomposition {
    pub fn new(data: &SpaceTimeSpectrum) -> Self {
        let blocks = (0..shell_count(data)).map(|j| data.weighted(|_, l| eta_j(j, l))).collect();
        Self { blocks }
    }

    /// Dispersion relation `ω(n) = n³`.
    pub fn omega(n: i64) -> f64 {
        (n as f64).powi(3)
    }

    pub fn reconstruct(&self) -> SpaceTimeSpectrum {
        let mut acc = self.blocks[0].clone();
        for b in &self.blocks[1..] {
            acc = acc.added(b).expect("shells share a layout");
        }
        acc
    }
}

/// `(Σ ⟨n⟩^{2s} ⟨τ − n³⟩^{2b} |f̃|² Δτ)^{1/2}`.
pub fn xsb_norm(data: &SpaceTimeSpectrum, s: f64, b: f64) -> f64 {
    data.weighted_sum(|n, l| japanese(n as f64).powf(2.0 * s) * japanese(l).powf(2.0 * b)).sqrt()
}

/// L²-masses `‖η_j f̃‖` of the modulation shells.
pub fn shell_masses(data: &SpaceTimeSpectrum) -> Vec<f64> {
    (0..shell_count(data))
        .map(|j| data.weighted_sum(|_, l| eta_j(j, l).powi(2)).sqrt())
        .collect()
}

/// `‖f‖_{X_k} = Σ_j 2^{j/2} ‖η_j(τ − n³) f̃‖`, for data supported in block `k`.
pub fn xk_norm(data: &SpaceTimeSpectrum, k: DyadicBlock) -> Result<f64> {
    if let Some(n) = data.support_outside(k) {
        return Err(Error::Precondition(format!("mode {n} lies outside block {}", k.0)));
    }
    Ok(shell_masses(data).iter().enumerate().map(|(j, m)| (j as f64 / 2.0).exp2() * m).sum())
}

/// Constant `C` with `sup_t ‖v(t)‖ <= C ‖f‖_{X_k}` on the plateau of the
/// window that produced `data`: `(2π)^{-1} max_j (|supp η_j| Δτ / 2^j)^{1/2}`
/// with the support counted in bins.
pub fn embedding_constant(data: &SpaceTimeSpectrum) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..shell_count(data) {
        let count = (0..data.bins()).filter(|&b| eta_j(j, data.modulation(b)) != 0.0).count();
        worst = worst.max(count as f64 * data.tau_resolution() / (j as f64).exp2());
    }
    worst.sqrt() / (2.0 * PI)
}

/// Short-time norm flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ShortTimeKind {
    /// `F^α_k`: plain `X_k` norm of each window.
    F,
    /// `N^α_k`: `X_k` norm after the weight `(τ − n³ + i 2^{αk})^{-1}`.
    N,
}

/// Samples of `v = e^{-itn³}û` held constant outside the recorded range,
/// i.e. the trajectory continued by the linear flow.
fn extended_samples(times: &[f64], slices: &[SpectralField], k: DyadicBlock, lo: f64, hi: f64) -> (Vec<f64>, Vec<SpectralField>) {
    let dt = times[1] - times[0];
    let before = ((times[0] - lo) / dt).ceil().max(0.0) as usize;
    let after = ((hi - times[times.len() - 1]) / dt).ceil().max(0.0) as usize;
    let block = |u: &SpectralField| crate::spectral::project_dyadic(u, k);
    let free = |u: &SpectralField, from: f64, to: f64| {
        u.map_modes(|n, c| c * Complex64::from_polar(1.0, (n as f64).powi(3) * (to - from)))
    };
    let first = block(&slices[0]);
    let end = block(&slices[slices.len() - 1]);
    let (t_first, t_end) = (times[0], times[times.len() - 1]);
    let mut ts = Vec::with_capacity(before + times.len() + after);
    let mut us = Vec::with_capacity(ts.capacity());
    for i in (1..=before).rev() {
        let t = t_first - i as f64 * dt;
        ts.push(t);
        us.push(free(&first, t_first, t));
    }
    for (t, u) in times.iter().zip(slices) {
        ts.push(*t);
        us.push(block(u));
    }
    for i in 1..=after {
        let t = t_end + i as f64 * dt;
        ts.push(t);
        us.push(free(&end, t_end, t));
    }
    (ts, us)
}

/// Window norms of one block at every window center, with the spectrum of
/// the maximizing window.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortTimeReport {
    pub value: f64,
    pub centers: Vec<f64>,
    pub per_center: Vec<f64>,
    pub tau_resolution: f64,
    pub embedding_constant: f64,
}

/// `sup_{t_k} ‖𝓕[P_k u · η₀(2^{αk}(t − t_k))]‖` over a grid of centers in
/// the sampled range with spacing at most `2^{-αk}/8`. Outside the sampled
/// range the data are continued by the linear flow. The finite grid makes
/// the value a lower bound for the true supremum.
pub fn short_time_report(
    times: &[f64],
    slices: &[SpectralField],
    k: DyadicBlock,
    alpha: f64,
    kind: ShortTimeKind,
    exec: Execution,
) -> Result<ShortTimeReport> {
    let dt = check_uniform(times)?;
    let width = (-alpha * k.0 as f64).exp2();
    if width / dt < SAMPLES_PER_WINDOW {
        return Err(Error::Resolution(format!(
            "window 2^(-{alpha}·{}) = {width:e} holds {:.1} samples, needs >= {SAMPLES_PER_WINDOW}",
            k.0,
            width / dt
        )));
    }
    let n_max = slices[0].n_max() as i64;
    let (lo_mode, hi_mode) = k.abs_range();
    let modes: Vec<i64> = (lo_mode as i64..=(hi_mode as i64).min(n_max)).collect();
    let stride = ((width / dt / 8.0).floor() as usize).max(1);
    let mut centers: Vec<f64> = (0..times.len()).step_by(stride).map(|i| times[i]).collect();
    if *centers.last().unwrap() != times[times.len() - 1] {
        centers.push(times[times.len() - 1]);
    }
    let reach = ETA_SUPPORT * width;
    let (ts, us) = extended_samples(times, slices, k, times[0] - reach, times[times.len() - 1] + reach);
    let modulation_weight = (alpha * k.0 as f64).exp2();
    let spectra: Vec<Result<(f64, f64, f64)>> = exec.map(&centers, |&c| {
        let spec = SpaceTimeSpectrum::from_samples(&ts, &us, &modes, TimeWindow::Bump { center: c, scale: width })?;
        let spec = match kind {
            ShortTimeKind::F => spec,
            ShortTimeKind::N => spec.weighted(|_, l| 1.0 / (l * l + modulation_weight * modulation_weight).sqrt()),
        };
        Ok((xk_norm(&spec, k)?, spec.tau_resolution(), embedding_constant(&spec)))
    });
    let mut per_center = Vec::with_capacity(centers.len());
    let mut tau_resolution = 0.0;
    let mut emb: f64 = 0.0;
    for r in spectra {
        let (v, dtau, c) = r?;
        per_center.push(v);
        tau_resolution = dtau;
        emb = emb.max(c);
    }
    let value = per_center.iter().cloned().fold(0.0, f64::max);
    Ok(ShortTimeReport { value, centers, per_center, tau_resolution, embedding_constant: emb })
}

/// [`short_time_report`] value for the first component of a trajectory.
pub fn short_time_norm(traj: &Trajectory, k: DyadicBlock, alpha: f64, kind: ShortTimeKind) -> Result<f64> {
    let slices: Vec<SpectralField> = traj.slices.iter().map(|s| s.u().clone()).collect();
    Ok(short_time_report(&traj.times, &slices, k, alpha, kind, Execution::default())?.value)
}

/// `(Σ_k sup_t 2^{2ks} ‖P_k u(t)‖²)^{1/2}` over the recorded slices.
pub fn energy_norm_samples(slices: &[SpectralField], s: f64) -> f64 {
    let mut sup: Vec<f64> = Vec::new();
    for u in slices {
        let e = block_energies(u, s);
        if sup.len() < e.len() {
            sup.resize(e.len(), 0.0);
        }
        for (a, b) in sup.iter_mut().zip(e) {
            *a = a.max(b);
        }
    }
    sup.iter().sum::<f64>().sqrt()
}

pub fn energy_norm(traj: &Trajectory, s: f64) -> f64 {
    let slices: Vec<SpectralField> = traj.slices.iter().map(|s| s.u().clone()).collect();
    energy_norm_samples(&slices, s)
}

/// Nonlinear tendency `𝔑(u(t))` (first component) at every recorded slice.
pub fn nonlinearity_samples(traj: &Trajectory) -> Result<Vec<SpectralField>> {
    traj.slices
        .iter()
        .map(|s| Ok(evaluate_rhs(s, &traj.eq)?.u().clone()))
        .collect()
}

/// `(Σ_k 2^{2ks} ‖P_k f‖²_{F^α_k or N^α_k})^{1/2}` over blocks `0..=K`.
pub fn short_time_sobolev(
    times: &[f64],
    slices: &[SpectralField],
    s: f64,
    alpha: f64,
    kind: ShortTimeKind,
    exec: Execution,
) -> Result<f64> {
    let mut total = 0.0;
    for k in DyadicBlock::covering(slices[0].n_max()) {
        let v = short_time_report(times, slices, k, alpha, kind, exec)?.value;
        total += (2.0 * k.0 as f64 * s).exp2() * v * v;
    }
    Ok(total.sqrt())
}

/// Measured sides of the three propagation estimates on one trajectory,
/// with all implicit constants, `T^θ` and `M` factors set to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagationRatios {
    pub f_norm: f64,
    pub n_norm: f64,
    pub energy: f64,
    pub data: f64,
    /// `‖u‖_F / (‖u‖_E + ‖𝔑(u)‖_N)`.
    pub linear: f64,
    /// `‖𝔑(u)‖_N / ‖u‖_F³`.
    pub nonlinear: f64,
    /// `‖u‖²_E / (‖u₀‖²_{H^s} + ‖u‖⁴_F + ‖u‖⁶_F)`.
    pub energy_line: f64,
}

pub fn propagation_ratios(traj: &Trajectory, s: f64, alpha: f64, exec: Execution) -> Result<PropagationRatios> {
    let u: Vec<SpectralField> = traj.slices.iter().map(|x| x.u().clone()).collect();
    let nl = nonlinearity_samples(traj)?;
    let f_norm = short_time_sobolev(&traj.times, &u, s, alpha, ShortTimeKind::F, exec)?;
    let n_norm = short_time_sobolev(&traj.times, &nl, s, alpha, ShortTimeKind::N, exec)?;
    let energy = energy_norm_samples(&u, s);
    let data = energy_norm_samples(&u[..1], s);
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    Ok(PropagationRatios {
        f_norm,
        n_norm,
        energy,
        data,
        linear: ratio(f_norm, energy + n_norm),
        nonlinear: ratio(n_norm, f_norm.powi(3)),
        energy_line: ratio(energy * energy, data * data + f_norm.powi(4) + f_norm.powi(6)),
    })
}
