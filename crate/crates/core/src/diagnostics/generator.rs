use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{band_limit, Grid, RealField, SpectralField};

/// Relative spectral tail allowed at the dealiasing cutoff for bump fields.
const BUMP_TAIL_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    GaussianBump,
    MultiBump,
    RandomTrig,
    Constant,
}

/// Source of test fields. Every generated field is band-limited to the
/// 2/3-rule cutoff (or to `band_limit` when set); bump and constant kinds
/// are nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGenerator {
    pub kind: FieldKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    /// Largest signed frequency per axis for `random_trig`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_limit: Option<usize>,
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_width() -> f64 {
    0.5
}

impl FieldGenerator {
    pub fn new(kind: FieldKind, seed: u64, amplitude: f64, width: f64) -> Self {
        Self { kind, seed, amplitude, width, band_limit: None }
    }

    pub fn gaussian_bump(amplitude: f64, width: f64) -> Self {
        Self::new(FieldKind::GaussianBump, 0, amplitude, width)
    }

    pub fn constant(value: f64) -> Self {
        Self::new(FieldKind::Constant, 0, value, default_width())
    }

    pub fn random_trig(seed: u64, amplitude: f64, band_limit: usize) -> Self {
        Self { band_limit: Some(band_limit), ..Self::new(FieldKind::RandomTrig, seed, amplitude, 1.0) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_nonnegative_kind(&self) -> bool {
        !matches!(self.kind, FieldKind::RandomTrig) && self.amplitude >= 0.0
    }

    pub fn generate(&self, grid: Grid) -> Result<RealField> {
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidGenerator("amplitude must be finite".into()));
        }
        match self.kind {
            FieldKind::Constant => Ok(RealField::constant(grid, self.amplitude)),
            FieldKind::GaussianBump => {
                self.check_width(grid)?;
                let center = [0.5 * grid.side_length(); 3];
                let f = periodic_gaussians(grid, &[(center, self.amplitude)], self.width);
                Ok(band_limit(&f))
            }
            FieldKind::MultiBump => {
                self.check_width(grid)?;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let bumps: Vec<([f64; 3], f64)> = (0..3)
                    .map(|_| {
                        let mut c = [0.0; 3];
                        for x in c.iter_mut().take(grid.dim()) {
                            *x = rng.gen_range(0.0..grid.side_length());
                        }
                        (c, self.amplitude * rng.gen_range(0.5..1.0))
                    })
                    .collect();
                Ok(band_limit(&periodic_gaussians(grid, &bumps, self.width)))
            }
            FieldKind::RandomTrig => self.random_trig_field(grid),
        }
    }

    fn check_width(&self, grid: Grid) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::InvalidGenerator(format!("width must be positive, got {}", self.width)));
        }
        let xi_c = grid.fundamental() * grid.cutoff() as f64;
        let tail = (-(xi_c * self.width).powi(2) / 2.0).exp();
        if tail > BUMP_TAIL_TOLERANCE {
            return Err(Error::InvalidGenerator(format!(
                "bump width {} is under-resolved on N = {} (spectral tail {tail:e} at the cutoff)",
                self.width,
                grid.n_points()
            )));
        }
        Ok(())
    }

    fn random_trig_field(&self, grid: Grid) -> Result<RealField> {
        let band = self.band_limit.unwrap_or(grid.cutoff());
        if band == 0 || band > grid.cutoff() {
            return Err(Error::InvalidGenerator(format!(
                "band_limit must lie in 1..={}, got {band}",
                grid.cutoff()
            )));
        }
        let mut spectral = SpectralField::zeros(grid);
        for i in 0..grid.len() {
            let m = grid.mode(i);
            if m.iter().any(|k| k.unsigned_abs() as usize > band) {
                continue;
            }
            let neg = [-m[0], -m[1], -m[2]];
            let c = (self.mode_draw(m) + self.mode_draw(neg).conj()) * (0.5 * self.amplitude);
            spectral.coeffs_mut()[i] = c;
        }
        Ok(spectral.to_real_lossy())
    }

    /// Random coefficient attached to a lattice mode. Each mode owns its own
    /// stream, so a field drawn on a finer grid extends the coarse one.
    fn mode_draw(&self, m: [i64; 3]) -> Complex64 {
        let key = m.iter().fold(0u64, |acc, &k| (acc << 21) | ((k + (1 << 20)) as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(key);
        let k2: i64 = m.iter().map(|k| k * k).sum();
        let decay = (1.0 + k2 as f64).powi(-2);
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * decay
    }
}

fn periodic_gaussians(grid: Grid, bumps: &[([f64; 3], f64)], width: f64) -> RealField {
    let dim = grid.dim();
    let l = grid.side_length();
    let images: i32 = 2;
    let inv = 1.0 / (2.0 * width * width);
    let values = (0..grid.len())
        .map(|i| {
            let p = grid.position(i);
            let mut total = 0.0;
            for (center, amp) in bumps {
                // sum over periodic images makes the field smooth across the boundary
                let mut axis_sums = [1.0f64; 3];
                for a in 0..dim {
                    let d = p[a] - center[a];
                    axis_sums[a] = (-images..=images)
                        .map(|m| {
                            let x = d + m as f64 * l;
                            (-x * x * inv).exp()
                        })
                        .sum();
                }
                total += amp * axis_sums.iter().product::<f64>();
            }
            total
        })
        .collect();
    RealField::from_raw(grid, values)
}

/// Gaussian bump with an explicit center, used for localized perturbations.
pub fn bump_at(grid: Grid, center: &[f64], amplitude: f64, width: f64) -> Result<RealField> {
    let gen = FieldGenerator::gaussian_bump(amplitude, width);
    gen.check_width(grid)?;
    let mut c = [0.0; 3];
    for (dst, src) in c.iter_mut().zip(center) {
        *dst = src.rem_euclid(grid.side_length());
    }
    Ok(band_limit(&periodic_gaussians(grid, &[(c, amplitude)], width)))
}

/// `2*pi` side length, the default torus.
pub fn default_side_length() -> f64 {
    2.0 * PI
}
