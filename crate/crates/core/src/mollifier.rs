//! The mollifier `J_eps u = rho_eps * u` built from the compactly supported
//! bump `rho(x) = c0 * exp(-1 / (1 - |x|^2))` on the unit ball.
//!
//! `J_eps` acts as the Fourier multiplier `rho_hat(eps * |xi|)`, i.e. the
//! exact Fourier coefficients of the periodized `rho_eps` (Poisson summation).
//! The multiplier is evaluated by quadrature of the bump's slice profile, so
//! it does not depend on the grid resolution and `J_eps` converges under grid
//! refinement. `kernel_hat(0) = 1` holds exactly.

use std::collections::HashMap;
use std::sync::OnceLock;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{forward_transform, Grid, RealField, SpectralField};
use crate::ops::apply_real_multiplier;
use crate::quadrature::composite;

const OUTER_PANELS: usize = 96;
const INNER_PANELS: usize = 48;
const ORDER: usize = 16;

/// `exp(-1 / (1 - r^2))` for `r < 1`, zero outside the unit ball.
pub fn bump(r: f64) -> f64 {
    let q = 1.0 - r * r;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// Slice profile of the radial bump: `A_d(x) = integral of bump(|(x, y)|)`
/// over `y` in `R^(d-1)`. Its 1-D cosine transform is the d-dimensional
/// Fourier transform of the bump along any direction.
struct SliceProfile {
    nodes: Vec<f64>,
    weighted: Vec<f64>,
    total: f64,
}

impl SliceProfile {
    fn build(dim: usize) -> Self {
        let outer = composite(0.0, 1.0, OUTER_PANELS, ORDER);
        let mut nodes = Vec::with_capacity(outer.len());
        let mut weighted = Vec::with_capacity(outer.len());
        for (x, w) in outer {
            let a = match dim {
                1 => bump(x),
                2 => {
                    let half = (1.0 - x * x).max(0.0).sqrt();
                    2.0 * composite(0.0, half, INNER_PANELS, ORDER)
                        .iter()
                        .map(|(y, wy)| wy * bump((x * x + y * y).sqrt()))
                        .sum::<f64>()
                }
                // radial integral over the orthogonal disk, substituted u = x^2 + rho^2
                3 => {
                    std::f64::consts::PI
                        * composite(x * x, 1.0, INNER_PANELS, ORDER)
                            .iter()
                            .map(|(u, wu)| {
                                let q = 1.0 - u;
                                if q <= 0.0 {
                                    0.0
                                } else {
                                    wu * (-1.0 / q).exp()
                                }
                            })
                            .sum::<f64>()
                }
                _ => unreachable!("grid dimension is validated to 1..=3"),
            };
            nodes.push(x);
            // the profile is even: integrate over [0, 1] and double
            weighted.push(2.0 * w * a);
        }
        let total = weighted.iter().sum();
        Self { nodes, weighted, total }
    }

    fn cosine_transform(&self, eta: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weighted)
            .map(|(x, w)| w * (eta * x).cos())
            .sum::<f64>()
            / self.total
    }
}

fn profile(dim: usize) -> &'static SliceProfile {
    static PROFILES: [OnceLock<SliceProfile>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    PROFILES[dim - 1].get_or_init(|| SliceProfile::build(dim))
}

/// Normalizing constant `c0` with `integral of rho = 1` over `R^dim`.
pub fn bump_normalization(dim: usize) -> f64 {
    1.0 / profile(dim).total
}

/// Fourier transform of the unit bump `rho` at `|xi| = eta`, normalized so
/// the value at 0 is 1.
pub fn bump_transform(dim: usize, eta: f64) -> f64 {
    if eta == 0.0 {
        1.0
    } else {
        profile(dim).cosine_transform(eta)
    }
}

#[derive(Debug, Clone)]
pub struct MollifierKernel {
    epsilon: f64,
    grid: Grid,
    c0: f64,
    kernel_values: RealField,
    kernel_hat: SpectralField,
    multiplier: Vec<f64>,
}

impl MollifierKernel {
    /// Requires `2*spacing <= epsilon < L/2`.
    pub fn new(grid: Grid, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidKernel(format!("epsilon must be positive, got {epsilon}")));
        }
        if epsilon < 2.0 * grid.spacing() {
            return Err(Error::UnresolvedKernel { epsilon, spacing: grid.spacing() });
        }
        if epsilon >= 0.5 * grid.side_length() {
            return Err(Error::InvalidKernel(format!(
                "epsilon {epsilon} must be below half the side length {}",
                grid.side_length()
            )));
        }
        let dim = grid.dim();
        let c0 = bump_normalization(dim);

        // sampled kernel, nearest periodic image, renormalized to unit mass
        let l = grid.side_length();
        let scale = c0 / epsilon.powi(dim as i32);
        let mut values: Vec<f64> = (0..grid.len())
            .map(|i| {
                let p = grid.position(i);
                let r2: f64 = p[..dim]
                    .iter()
                    .map(|&x| {
                        let d = if x > 0.5 * l { x - l } else { x };
                        d * d
                    })
                    .sum();
                scale * bump(r2.sqrt() / epsilon)
            })
            .collect();
        let mass = compensated_sum(&values) * grid.cell_volume();
        values.iter_mut().for_each(|v| *v /= mass);
        let kernel_values = RealField::new(grid, values)?;

        let mut cache: HashMap<i64, f64> = HashMap::new();
        let multiplier: Vec<f64> = (0..grid.len())
            .map(|i| {
                let k2: i64 = grid.mode(i).iter().map(|k| k * k).sum();
                *cache.entry(k2).or_insert_with(|| {
                    bump_transform(dim, epsilon * grid.fundamental() * (k2 as f64).sqrt())
                })
            })
            .collect();
        let kernel_hat = SpectralField::new(
            grid,
            multiplier.iter().map(|&m| Complex64::new(m, 0.0)).collect(),
        )?;
        Ok(Self { epsilon, grid, c0, kernel_values, kernel_hat, multiplier })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// `rho_eps` sampled on the grid and renormalized to unit discrete mass.
    pub fn kernel_values(&self) -> &RealField {
        &self.kernel_values
    }

    /// Convolution multiplier of `J_eps` as a spectral field.
    pub fn kernel_hat(&self) -> &SpectralField {
        &self.kernel_hat
    }

    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    /// Largest gap between the transform of the sampled kernel and the exact
    /// multiplier. Measures how well the grid resolves `rho_eps`.
    pub fn sampling_defect(&self) -> f64 {
        let sampled = forward_transform(&self.kernel_values);
        let v = self.grid.volume();
        sampled
            .coeffs()
            .iter()
            .zip(&self.multiplier)
            .map(|(c, &m)| (c * v - Complex64::new(m, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn apply_spectral(&self, spectral: &SpectralField) -> SpectralField {
        apply_real_multiplier(spectral, &self.multiplier)
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `J_eps f`.
pub fn mollify(f: &RealField, kernel: &MollifierKernel) -> Result<RealField> {
    if f.grid() != kernel.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(kernel.apply_spectral(&forward_transform(f)).to_real_lossy())
}
