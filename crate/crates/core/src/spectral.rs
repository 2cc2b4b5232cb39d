//! Fourier representation of real fields on the 2π-torus.
//!
//! Convention: `û(n) = ∫_T f(x) e^{-inx} dx`, so that
//! `f(x) = (1/2π) Σ_n û(n) e^{inx}` and `∫|f|² dx = (1/2π) Σ |û(n)|²`.
//! All norms in this crate are coefficient-side sums *without* the `1/2π`;
//! identities that cross between physical space and coefficients carry the
//! constant explicitly.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::resonance::Symbol;

/// `⟨x⟩ = (1 + x²)^{1/2}`.
#[inline]
pub fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Fourier coefficients of a real field, band-limited to `|n| <= n_max`.
///
/// Only `n >= 0` is stored; `û(-n) = conj(û(n))` is reconstructed on access,
/// so Hermitian symmetry holds structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<Complex64>,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl SpectralField {
    pub fn zeros(n_max: usize) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); n_max + 1] }
    }

    /// Builds a field from coefficients for `n = 0..=n_max`. The zero mode
    /// must be real up to rounding.
    pub fn from_nonnegative(mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Precondition("empty coefficient vector".into()));
        }
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let defect = coeffs[0].im.abs();
        if defect > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::SymmetryViolation { n: 0, defect });
        }
        coeffs[0].im = 0.0;
        Ok(Self { coeffs })
    }

    /// Builds a field from `f(n)` for `n = 0..=n_max`; the zero mode is
    /// projected onto the reals.
    pub fn from_fn(n_max: usize, f: impl Fn(i64) -> Complex64) -> Self {
        let mut coeffs: Vec<Complex64> = (0..=n_max as i64).map(f).collect();
        coeffs[0].im = 0.0;
        Self { coeffs }
    }

    /// Builds a field from the full two-sided list `û(-n_max..=n_max)`,
    /// rejecting non-Hermitian input.
    pub fn from_full(full: &[Complex64]) -> Result<Self> {
        if full.len() % 2 == 0 {
            return Err(Error::Precondition("two-sided spectrum must have odd length".into()));
        }
        let n_max = full.len() / 2;
        let scale = full.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let tol = SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE);
        for n in 0..=n_max {
            let pos = full[n_max + n];
            let neg = full[n_max - n];
            let defect = (neg - pos.conj()).norm();
            if defect > tol {
                return Err(Error::SymmetryViolation { n: n as i64, defect });
            }
        }
        Self::from_nonnegative(full[n_max..].to_vec())
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `û(n)` for any integer `n` (zero outside the band).
    #[inline]
    pub fn get(&self, n: i64) -> Complex64 {
        let m = n.unsigned_abs() as usize;
        if m > self.n_max() {
            return Complex64::new(0.0, 0.0);
        }
        if n >= 0 {
            self.coeffs[m]
        } else {
            self.coeffs[m].conj()
        }
    }

    /// Sets `û(n)` and, implicitly, `û(-n)`. Setting the zero mode keeps only
    /// the real part.
    pub fn set(&mut self, n: i64, value: Complex64) {
        let m = n.unsigned_abs() as usize;
        assert!(m <= self.n_max(), "frequency {n} outside band {}", self.n_max());
        let v = if n >= 0 { value } else { value.conj() };
        self.coeffs[m] = if m == 0 { Complex64::new(v.re, 0.0) } else { v };
    }

    pub fn nonnegative(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Two-sided coefficient list `û(-n_max..=n_max)`.
    pub fn to_full(&self) -> Vec<Complex64> {
        let n = self.n_max() as i64;
        (-n..=n).map(|k| self.get(k)).collect()
    }

    /// `Σ_n |û(n)|²` over all integer frequencies.
    pub fn l2_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| if n == 0 { c.norm_sqr() } else { 2.0 * c.norm_sqr() })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Zero-pads or truncates to a new band limit.
    pub fn resized(&self, n_max: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n_max + 1];
        for (dst, src) in coeffs.iter_mut().zip(&self.coeffs) {
            *dst = *src;
        }
        Self { coeffs }
    }

    /// Applies `f(n, û(n))` on `n >= 0`. `f` must commute with conjugation
    /// under `n -> -n` for the result to describe a real field; the zero mode
    /// is re-projected onto the reals.
    pub fn map_modes(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        let mut coeffs: Vec<Complex64> =
            self.coeffs.iter().enumerate().map(|(n, &c)| f(n as i64, c)).collect();
        coeffs[0].im = 0.0;
        Self { coeffs }
    }

    /// `∂_x`: multiplication by `in`.
    pub fn derivative(&self) -> Self {
        self.map_modes(|n, c| Complex64::new(0.0, n as f64) * c)
    }

    /// Spatial translation `f(x - shift)`: multiplication by `e^{-in·shift}`.
    pub fn translated(&self, shift: f64) -> Self {
        self.map_modes(|n, c| c * Complex64::from_polar(1.0, -(n as f64) * shift))
    }

    /// `self += factor * other` (bands must match).
    pub fn axpy(&mut self, factor: f64, other: &SpectralField) {
        assert_eq!(self.n_max(), other.n_max());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * factor;
        }
    }

    /// `⟨f, g⟩ = Σ_n û(n) conj(ĝ(n))` (real for real fields).
    pub fn inner(&self, other: &SpectralField) -> f64 {
        let n = self.n_max().max(other.n_max()) as i64;
        (-n..=n).map(|k| (self.get(k) * other.get(k).conj()).re).sum()
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let n = self.n_max().max(rhs.n_max());
        let mut out = self.resized(n);
        out.axpy(1.0, &rhs.resized(n));
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let n = self.n_max().max(rhs.n_max());
        let mut out = self.resized(n);
        out.axpy(-1.0, &rhs.resized(n));
        out
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.map_modes(|_, c| c * rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self * -1.0
    }
}

/// Littlewood-Paley block index: block 0 holds `|n| <= 1`, block `k >= 1`
/// holds `|n| ∈ [2^k, 2^{k+1} - 1]`. The blocks partition ℤ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicBlock(pub u32);

impl DyadicBlock {
    pub fn of(n: i64) -> Self {
        let m = n.unsigned_abs();
        if m <= 1 {
            DyadicBlock(0)
        } else {
            DyadicBlock(63 - m.leading_zeros())
        }
    }

    /// Inclusive range of `|n|` covered by the block.
    pub fn abs_range(self) -> (u64, u64) {
        if self.0 == 0 {
            (0, 1)
        } else {
            (1u64 << self.0, (1u64 << (self.0 + 1)) - 1)
        }
    }

    pub fn contains(self, n: i64) -> bool {
        DyadicBlock::of(n) == self
    }

    /// All blocks meeting `|n| <= n_max`.
    pub fn covering(n_max: usize) -> impl Iterator<Item = DyadicBlock> {
        (0..=DyadicBlock::of(n_max as i64).0).map(DyadicBlock)
    }
}

/// Real Sobolev regularity exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevIndex(pub f64);

/// Zeroes every coefficient outside block `k`.
pub fn project_dyadic(spec: &SpectralField, k: DyadicBlock) -> SpectralField {
    spec.map_modes(|n, c| if k.contains(n) { c } else { Complex64::new(0.0, 0.0) })
}

/// Weight for [`weighted_norm`].
#[derive(Clone, Copy)]
pub enum Weight<'a> {
    Sobolev(SobolevIndex),
    Symbol(&'a dyn Symbol),
}

/// `(Σ_n w(n) |û(n)|²)^{1/2}` with `w(n) = ⟨n⟩^{2s}` or `w(n) = a(n)`.
pub fn weighted_norm(spec: &SpectralField, weight: Weight<'_>) -> Result<f64> {
    Ok(weighted_norm_sq(spec, weight)?.sqrt())
}

pub fn weighted_norm_sq(spec: &SpectralField, weight: Weight<'_>) -> Result<f64> {
    let mut total = 0.0;
    for (n, c) in spec.nonnegative().iter().enumerate() {
        let w = match weight {
            Weight::Sobolev(SobolevIndex(s)) => japanese(n as f64).powf(2.0 * s),
            Weight::Symbol(a) => a.value(n as i64),
        };
        if !(w >= 0.0) {
            return Err(Error::InvalidSymbol(format!("weight {w} at n = {n}")));
        }
        let mult = if n == 0 { 1.0 } else { 2.0 };
        total += mult * w * c.norm_sqr();
    }
    Ok(total)
}

/// `‖f‖_{H^s}` in the coefficient convention.
pub fn sobolev_norm(spec: &SpectralField, s: f64) -> f64 {
    weighted_norm(spec, Weight::Sobolev(SobolevIndex(s))).expect("Sobolev weights are positive")
}

fn check_grid(n_max: usize, grid: usize) -> Result<()> {
    if grid < 2 * n_max + 1 {
        return Err(Error::Bandwidth(format!(
            "grid of {grid} points cannot resolve n_max = {n_max} (needs >= {})",
            2 * n_max + 1
        )));
    }
    Ok(())
}

/// Trapezoid-rule Fourier coefficients of samples `f(2πj/N)`, truncated to
/// `|n| <= n_max`. Exact for band-limited input.
pub fn forward_transform(samples: &[f64], n_max: usize) -> Result<SpectralField> {
    check_grid(n_max, samples.len())?;
    Ok(grid_to_spectral(samples, n_max))
}

/// Samples `f(x_j) = (1/2π) Σ_n û(n) e^{inx_j}` on a uniform grid.
pub fn inverse_transform(spec: &SpectralField, grid_size: usize) -> Result<Vec<f64>> {
    check_grid(spec.n_max(), grid_size)?;
    let buf = spectral_to_complex_grid(spec, grid_size);
    let scale = buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let residue = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SymmetryViolation { n: 0, defect: residue });
    }
    Ok(buf.into_iter().map(|c| c.re).collect())
}

fn spectral_to_complex_grid(spec: &SpectralField, grid: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); grid];
    let inv = 1.0 / (2.0 * PI);
    for (n, &c) in spec.nonnegative().iter().enumerate() {
        if n == 0 {
            buf[0] = c * inv;
        } else {
            buf[n % grid] += c * inv;
            buf[(grid - n % grid) % grid] += c.conj() * inv;
        }
    }
    fft::inverse(&mut buf);
    buf
}

/// Unchecked synthesis onto `grid` points (caller guarantees resolution).
pub(crate) fn spectral_to_grid(spec: &SpectralField, grid: usize) -> Vec<f64> {
    spectral_to_complex_grid(spec, grid).into_iter().map(|c| c.re).collect()
}

/// Unchecked analysis of grid samples, truncated to `n_max`.
pub(crate) fn grid_to_spectral(samples: &[f64], n_max: usize) -> SpectralField {
    let grid = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(&mut buf);
    let h = 2.0 * PI / grid as f64;
    SpectralField::from_fn(n_max, |n| {
        let idx = n as usize;
        if idx < grid {
            buf[idx] * h
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Writes the plain-text spectrum dump: one `n re im` line per frequency,
/// `n` ascending from `-n_max` to `n_max`, LF endings.
pub fn write_dump(spec: &SpectralField, out: &mut impl Write) -> Result<()> {
    let n = spec.n_max() as i64;
    for k in -n..=n {
        let c = spec.get(k);
        writeln!(out, "{k} {:e} {:e}", c.re, c.im)?;
    }
    Ok(())
}

/// Parses one spectrum dump from `lines`, consuming exactly `2·n_max + 1`
/// non-empty lines (the band is read off the first frequency). Validates
/// ordering and Hermitian symmetry.
pub fn read_dump(lines: &mut dyn Iterator<Item = String>) -> Result<SpectralField> {
    let mut full = Vec::new();
    let mut first: Option<i64> = None;
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(n), Some(re), Some(im), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("malformed dump line: {line:?}")));
        };
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let n: i64 = n.parse().map_err(|e| Error::Parse(format!("{n:?}: {e}")))?;
        let start = *first.get_or_insert(n);
        if start > 0 {
            return Err(Error::Parse(format!("dump must start at -n_max, found {n}")));
        }
        let expected = start + full.len() as i64;
        if n != expected {
            return Err(Error::Parse(format!("expected frequency {expected}, found {n}")));
        }
        full.push(Complex64::new(parse(re)?, parse(im)?));
        if n == -start {
            return SpectralField::from_full(&full);
        }
    }
    Err(Error::Parse("truncated spectrum dump".into()))
}

/// Reads a complete dump from a buffered reader.
pub fn read_dump_from(reader: impl BufRead) -> Result<SpectralField> {
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    read_dump(&mut lines.into_iter())
}
