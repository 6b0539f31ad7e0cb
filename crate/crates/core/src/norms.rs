//! L^p, Sobolev `H^alpha`, homogeneous `H^alpha` and Besov `B^alpha_{1,inf}`
//! norms. Spectral norms use the Parseval-consistent weighting
//! `volume * sum |coeff|^2`, so `sobolev_norm(f, 0) == lp_norm(f, 2)`.

use crate::error::{Error, Result};
use crate::grid::{forward_transform, Grid, RealField, SpectralField};
use crate::ops::apply_real_multiplier;

/// `(sum |f|^p * spacing^dim)^(1/p)`, or `max |f|` for `p = inf`.
///
/// # Panics
/// If `p < 1`.
pub fn lp_norm(f: &RealField, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm needs p >= 1, got {p}");
    let v = f.values();
    let dv = f.grid().cell_volume();
    if p.is_infinite() {
        f.max_abs()
    } else if p == 1.0 {
        v.iter().map(|x| x.abs()).sum::<f64>() * dv
    } else if p == 2.0 {
        (v.iter().map(|x| x * x).sum::<f64>() * dv).sqrt()
    } else {
        (v.iter().map(|x| x.abs().powf(p)).sum::<f64>() * dv).powf(1.0 / p)
    }
}

pub(crate) fn weighted_spectral_norm(spectral: &SpectralField, weight: impl Fn(usize) -> f64) -> f64 {
    let s: f64 = spectral
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| weight(i) * c.norm_sqr())
        .sum();
    (spectral.grid().volume() * s).sqrt()
}

pub(crate) fn sobolev_norm_spectral(spectral: &SpectralField, alpha: f64) -> f64 {
    let g = *spectral.grid();
    weighted_spectral_norm(spectral, |i| (1.0 + g.xi_sq(i)).powf(alpha))
}

pub(crate) fn homogeneous_seminorm_spectral(spectral: &SpectralField, alpha: f64) -> f64 {
    let g = *spectral.grid();
    weighted_spectral_norm(spectral, |i| if i == 0 { 0.0 } else { g.xi_sq(i).powf(alpha) })
}

/// `||f||_{H^alpha}` with weight `(1 + |xi|^2)^alpha`, `alpha >= 0`.
pub fn sobolev_norm(f: &RealField, alpha: f64) -> f64 {
    sobolev_norm_spectral(&forward_transform(f), alpha)
}

/// `||f||_{\dot H^alpha}` with weight `|xi|^(2 alpha)`, zero mode excluded.
pub fn homogeneous_seminorm(f: &RealField, alpha: f64) -> f64 {
    homogeneous_seminorm_spectral(&forward_transform(f), alpha)
}

/// Smooth radial cutoff: 1 on `[0, 1]`, 0 on `[2, inf)`, C-infinity between.
pub fn smooth_cutoff(r: f64) -> f64 {
    fn g(t: f64) -> f64 {
        if t > 0.0 {
            (-1.0 / t).exp()
        } else {
            0.0
        }
    }
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let a = g(2.0 - r);
        a / (a + g(r - 1.0))
    }
}

/// Littlewood-Paley blocks on the retained modes of a grid.
///
/// Frequencies are measured in lattice units `eta = |xi| / (2*pi/L)`. Block
/// `j >= 0` is `chi(eta / 2^j) - chi(eta / 2^(j-1))`, supported in
/// `2^(j-1) <= eta <= 2^(j+1)`; the low block `j = -1` is `chi(2*eta)`,
/// supported in `eta <= 1`. `j_max` is the first level whose cutoff covers
/// every retained mode, so the blocks sum to one there.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: Grid,
    j_max: i32,
    blocks: Vec<Vec<f64>>,
}

impl DyadicPartition {
    pub fn new(grid: Grid) -> Self {
        let eta_max = grid.cutoff() as f64 * (grid.dim() as f64).sqrt();
        let j_max = eta_max.log2().ceil().max(0.0) as i32;
        let eta: Vec<Option<f64>> = (0..grid.len())
            .map(|i| {
                grid.is_retained(i).then(|| {
                    let k2: i64 = grid.mode(i).iter().map(|k| k * k).sum();
                    (k2 as f64).sqrt()
                })
            })
            .collect();
        let blocks = (-1..=j_max)
            .map(|j| {
                eta.iter()
                    .map(|e| match e {
                        None => 0.0,
                        Some(e) if j < 0 => smooth_cutoff(2.0 * e),
                        Some(e) => {
                            let s = 2f64.powi(j);
                            smooth_cutoff(e / s) - smooth_cutoff(2.0 * e / s)
                        }
                    })
                    .collect()
            })
            .collect();
        Self { grid, j_max, blocks }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn j_min(&self) -> i32 {
        -1
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        -1..=self.j_max
    }

    pub fn block_multiplier(&self, j: i32) -> &[f64] {
        &self.blocks[(j + 1) as usize]
    }

    fn check_grid(&self, f: &RealField) -> Result<()> {
        if f.grid() == &self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `Delta_j f`.
    pub fn block(&self, f: &RealField, j: i32) -> Result<RealField> {
        self.check_grid(f)?;
        Ok(apply_real_multiplier(&forward_transform(f), self.block_multiplier(j)).to_real_lossy())
    }

    /// Every block of `f`, from `j = -1` to `j_max`.
    pub fn blocks(&self, f: &RealField) -> Result<Vec<RealField>> {
        self.check_grid(f)?;
        let spectral = forward_transform(f);
        Ok(self
            .blocks
            .iter()
            .map(|m| apply_real_multiplier(&spectral, m).to_real_lossy())
            .collect())
    }
}

/// `sup_j 2^(j alpha) ||Delta_j f||_{L^1}`.
pub fn besov_norm(f: &RealField, alpha: f64, partition: &DyadicPartition) -> Result<f64> {
    Ok(partition
        .blocks(f)?
        .iter()
        .zip(partition.levels())
        .map(|(b, j)| 2f64.powf(j as f64 * alpha) * lp_norm(b, 1.0))
        .fold(0.0, f64::max))
}
