//! Seeded random initial data: `û(n) = ⟨n⟩^{-σ} g_n`, with `g_n` complex
//! standard normal and Hermitian symmetrization (the zero mode is real).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::spectral::{japanese, sobolev_norm, SpectralField};

#[derive(Debug, Clone, PartialEq)]
pub struct RandomLaw {
    /// Decay exponent σ.
    pub sigma: f64,
    /// Highest excited frequency; defaults to the field's band limit.
    pub band: Option<usize>,
    /// Zero the mean mode.
    pub zero_mean: bool,
    /// Rescale to a prescribed `(s, ‖u‖_{H^s})`.
    pub normalize: Option<(f64, f64)>,
}

impl RandomLaw {
    pub fn new(sigma: f64) -> Self {
        Self { sigma, band: None, zero_mean: false, normalize: None }
    }

    pub fn band(mut self, band: usize) -> Self {
        self.band = Some(band);
        self
    }

    pub fn zero_mean(mut self) -> Self {
        self.zero_mean = true;
        self
    }

    pub fn normalized(mut self, s: f64, norm: f64) -> Self {
        self.normalize = Some((s, norm));
        self
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex standard normal `(X + iY)/√2`.
pub fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_field(n_max: usize, law: &RandomLaw, seed: u64) -> SpectralField {
    let mut rng = rng(seed);
    let band = law.band.unwrap_or(n_max).min(n_max);
    let mut field = SpectralField::zeros(n_max);
    for n in 0..=band as i64 {
        let g = complex_normal(&mut rng);
        if n == 0 && law.zero_mean {
            continue;
        }
        let g = if n == 0 { Complex64::new(g.re * std::f64::consts::SQRT_2, 0.0) } else { g };
        field.set(n, g * japanese(n as f64).powf(-law.sigma));
    }
    if let Some((s, target)) = law.normalize {
        let norm = sobolev_norm(&field, s);
        if norm > 0.0 {
            field = &field * (target / norm);
        }
    }
    field
}
