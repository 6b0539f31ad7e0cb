//! Periodic torus discretization, the two field representations, and the
//! forward/inverse Fourier transforms between them.
//!
//! Normalization: the forward transform divides by `N^dim`, so the zero mode
//! of a field equals its mean. Parseval then reads
//! `sum(f^2) * spacing^dim = volume * sum(|coeff|^2)`.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Imaginary residue above which an inverse transform is rejected, relative
/// to `max(1, max|re|)`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

/// Transforms of at least this many points split their line FFTs across tasks.
const PARALLEL_THRESHOLD: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n_points: usize,
    side_length: f64,
}

impl Grid {
    pub fn new(dim: usize, n_points: usize, side_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "side_length must be positive, got {side_length}"
            )));
        }
        Ok(Self { dim, n_points, side_length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn spacing(&self) -> f64 {
        self.side_length / self.n_points as f64
    }

    /// Total number of samples, `N^dim`.
    pub fn len(&self) -> usize {
        self.n_points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.side_length.powi(self.dim as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Wavenumber of the first Fourier mode, `2*pi/L`.
    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.side_length
    }

    /// Largest signed frequency magnitude kept by the 2/3-rule.
    pub fn cutoff(&self) -> usize {
        self.n_points / 3
    }

    /// Signed frequency of array index `i` along one axis, in `[-N/2, N/2)`.
    pub fn signed_index(&self, i: usize) -> i64 {
        let n = self.n_points;
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Signed integer frequency vector of a flat (row-major) index.
    /// Unused trailing axes are zero.
    pub fn mode(&self, flat: usize) -> [i64; 3] {
        let mut out = [0i64; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = self.signed_index(rem % self.n_points);
            rem /= self.n_points;
        }
        out
    }

    /// Array index of a signed frequency vector.
    pub fn flat_index(&self, mode: [i64; 3]) -> usize {
        let n = self.n_points as i64;
        let mut flat = 0usize;
        for &k in mode.iter().take(self.dim) {
            flat = flat * self.n_points + k.rem_euclid(n) as usize;
        }
        flat
    }

    /// Physical wavenumber component `xi_axis` of a flat index.
    pub fn xi(&self, flat: usize, axis: usize) -> f64 {
        self.fundamental() * self.mode(flat)[axis] as f64
    }

    /// `|xi|^2` of a flat index.
    pub fn xi_sq(&self, flat: usize) -> f64 {
        let m = self.mode(flat);
        let k2: i64 = m.iter().map(|k| k * k).sum();
        self.fundamental().powi(2) * k2 as f64
    }

    /// Whether the mode survives the 2/3-rule on every axis.
    pub fn is_retained(&self, flat: usize) -> bool {
        let c = self.cutoff() as i64;
        self.mode(flat).iter().all(|k| k.abs() <= c)
    }

    /// Whether the mode sits on the Nyquist frequency `-N/2` along `axis`.
    pub fn is_nyquist(&self, flat: usize, axis: usize) -> bool {
        self.mode(flat)[axis] == -(self.n_points as i64 / 2)
    }

    /// Largest `|xi|` among retained modes.
    pub fn xi_max_retained(&self) -> f64 {
        self.fundamental() * self.cutoff() as f64 * (self.dim as f64).sqrt()
    }

    /// Physical coordinates of sample `flat`.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        let mut rem = flat;
        let h = self.spacing();
        for axis in (0..self.dim).rev() {
            out[axis] = (rem % self.n_points) as f64 * h;
            rem /= self.n_points;
        }
        out
    }

    /// `|xi|^2` for every flat index.
    pub fn xi_sq_table(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.xi_sq(i)).collect()
    }

    /// 2/3-rule mask for every flat index.
    pub fn retained_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.is_retained(i)).collect()
    }
}

/// Real samples on a grid, row-major over the axes.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite sample at index {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Skips validation; callers guarantee length and finiteness.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Samples `f` at every grid position.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| f(&grid.position(i)[..grid.dim()]))
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &RealField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<RealField> {
        self.same_grid(other)?;
        Ok(RealField::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn add(&self, other: &RealField) -> Result<RealField> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RealField) -> Result<RealField> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &RealField) -> Result<RealField> {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, a: f64) -> RealField {
        self.map(|v| a * v)
    }

    /// `sum(f*g) * spacing^dim`.
    pub fn inner(&self, other: &RealField) -> Result<f64> {
        self.same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn to_spectral(&self) -> SpectralField {
        forward_transform(self)
    }
}

/// Fourier coefficients indexed like the sample array (index `i` on an axis
/// holds signed frequency `grid.signed_index(i)`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of a signed frequency vector.
    pub fn coeff(&self, mode: [i64; 3]) -> Complex64 {
        self.coeffs[self.grid.flat_index(mode)]
    }

    /// Largest violation of `coeff(-k) = conj(coeff(k))`. Nyquist-line
    /// modes are their own partners modulo `N` and are included.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| {
                let m = self.grid.mode(i);
                let j = self.grid.flat_index([-m[0], -m[1], -m[2]]);
                (self.coeffs[j] - self.coeffs[i].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Multiplies every coefficient by a real multiplier indexed like the array.
    pub fn scale_by(&mut self, multiplier: &[f64]) {
        debug_assert_eq!(multiplier.len(), self.coeffs.len());
        for (c, m) in self.coeffs.iter_mut().zip(multiplier) {
            *c *= *m;
        }
    }

    /// Inverse transform that drops imaginary parts without checking them.
    /// Only for outputs of multipliers that preserve Hermitian symmetry.
    pub(crate) fn to_real_lossy(&self) -> RealField {
        let mut buf = self.coeffs.clone();
        transform_in_place(&self.grid, &mut buf, Direction::Inverse);
        let values = buf.iter().map(|c| c.re).collect();
        RealField::from_raw(self.grid, values)
    }

    pub fn to_real(&self) -> Result<RealField> {
        inverse_transform(self)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, direction: Direction) -> Arc<dyn Fft<f64>> {
    let mut planner = planner().lock().unwrap_or_else(|e| e.into_inner());
    match direction {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    }
}

/// Unnormalized multi-axis transform of a row-major complex array.
fn transform_in_place(grid: &Grid, data: &mut [Complex64], direction: Direction) {
    let n = grid.n_points();
    let dim = grid.dim();
    let fft = plan(n, direction);
    // a task handles a block of whole lines
    let lines_per_task = (PARALLEL_THRESHOLD / n).max(1);
    let run_lines = |buf: &mut [Complex64]| {
        if buf.len() >= 2 * PARALLEL_THRESHOLD {
            par::for_each_chunk_mut(buf, n * lines_per_task, |chunk| fft.process(chunk));
        } else {
            fft.process(buf);
        }
    };
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            run_lines(data);
            continue;
        }
        let lines = data.len() / n;
        let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
        for line in 0..lines {
            let base = (line / stride) * n * stride + line % stride;
            for m in 0..n {
                buf[line * n + m] = data[base + m * stride];
            }
        }
        run_lines(&mut buf);
        for line in 0..lines {
            let base = (line / stride) * n * stride + line % stride;
            for m in 0..n {
                data[base + m * stride] = buf[line * n + m];
            }
        }
    }
}

/// Discrete Fourier coefficients normalized so that `coeff(0) = mean(f)`.
pub fn forward_transform(f: &RealField) -> SpectralField {
    let grid = f.grid;
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_in_place(&grid, &mut buf, Direction::Forward);
    let scale = 1.0 / grid.len() as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    SpectralField { grid, coeffs: buf }
}

/// Real samples of a Hermitian coefficient array. Fails with
/// [`Error::NonHermitianInput`] when the reconstruction carries an imaginary
/// part larger than [`HERMITIAN_TOLERANCE`] (scaled by `max(1, max|re|)`).
pub fn inverse_transform(spectral: &SpectralField) -> Result<RealField> {
    let grid = spectral.grid;
    let mut buf = spectral.coeffs.clone();
    transform_in_place(&grid, &mut buf, Direction::Inverse);
    let scale = buf.iter().fold(1.0f64, |m, c| m.max(c.re.abs()));
    let residue = buf.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if residue.is_nan() || residue > HERMITIAN_TOLERANCE * scale {
        return Err(Error::NonHermitianInput { residue });
    }
    let values: Vec<f64> = buf.iter().map(|c| c.re).collect();
    RealField::new(grid, values)
}

/// Zeroes every coefficient whose signed frequency exceeds `N/3` in magnitude
/// on any axis.
pub fn dealias(spectral: &SpectralField) -> SpectralField {
    let mut out = spectral.clone();
    dealias_in_place(&mut out);
    out
}

pub(crate) fn dealias_in_place(spectral: &mut SpectralField) {
    let grid = spectral.grid;
    for (i, c) in spectral.coeffs.iter_mut().enumerate() {
        if !grid.is_retained(i) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Projects a real field onto its retained (2/3-rule) modes.
pub fn band_limit(f: &RealField) -> RealField {
    dealias(&forward_transform(f)).to_real_lossy()
}

/// Dealiased pointwise product.
pub fn dealiased_product(f: &RealField, g: &RealField) -> Result<RealField> {
    Ok(band_limit(&f.mul(g)?))
}
