//! Fourier-multiplier operators: `Lambda^sigma = (-Delta)^(sigma/2)`, the
//! pressure operator `(-Delta)^(-s)`, gradient and divergence.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{forward_transform, Grid, RealField, SpectralField};

/// `|xi|^sigma` per flat index. The zero mode maps to 1 for `sigma = 0` and
/// to 0 otherwise.
pub fn lambda_multiplier(grid: &Grid, sigma: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            if sigma == 0.0 {
                1.0
            } else if i == 0 {
                0.0
            } else {
                grid.xi_sq(i).powf(0.5 * sigma)
            }
        })
        .collect()
}

/// `|xi|^(-2s)` per flat index with the zero mode projected out.
pub fn pressure_multiplier(grid: &Grid, s: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| if i == 0 { 0.0 } else { grid.xi_sq(i).powf(-s) })
        .collect()
}

/// `xi_axis` per flat index, zero on the Nyquist plane so that the odd
/// multiplier `i*xi` keeps real fields real.
pub fn gradient_multiplier(grid: &Grid, axis: usize) -> Vec<f64> {
    (0..grid.len())
        .map(|i| if grid.is_nyquist(i, axis) { 0.0 } else { grid.xi(i, axis) })
        .collect()
}

pub(crate) fn apply_real_multiplier(spectral: &SpectralField, m: &[f64]) -> SpectralField {
    let mut out = spectral.clone();
    out.scale_by(m);
    out
}

pub(crate) fn apply_derivative(spectral: &SpectralField, xi: &[f64]) -> SpectralField {
    let mut out = spectral.clone();
    for (c, &k) in out.coeffs_mut().iter_mut().zip(xi) {
        *c *= Complex64::new(0.0, k);
    }
    out
}

/// `Lambda^sigma f` for `sigma` in `[0, 2]`.
pub fn frac_laplacian(f: &RealField, sigma: f64) -> Result<RealField> {
    if !(0.0..=2.0).contains(&sigma) {
        return Err(Error::InvalidExponent { name: "sigma", value: sigma, range: "[0, 2]" });
    }
    Ok(fractional_power(f, sigma))
}

/// `Lambda^sigma f` for any `sigma >= 0`. Needed by the commutator check,
/// whose orders exceed the `[0, 2]` window of [`frac_laplacian`].
///
/// # Panics
/// If `sigma` is negative or not finite.
pub fn fractional_power(f: &RealField, sigma: f64) -> RealField {
    assert!(sigma.is_finite() && sigma >= 0.0, "fractional_power needs sigma >= 0");
    let m = lambda_multiplier(f.grid(), sigma);
    apply_real_multiplier(&forward_transform(f), &m).to_real_lossy()
}

/// Pressure `(-Delta)^(-s) f` of the mean-removed field, `s` in `(0, 1)`.
pub fn inv_frac_laplacian(f: &RealField, s: f64) -> Result<RealField> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidExponent { name: "s", value: s, range: "(0, 1)" });
    }
    let m = pressure_multiplier(f.grid(), s);
    Ok(apply_real_multiplier(&forward_transform(f), &m).to_real_lossy())
}

pub fn gradient(f: &RealField) -> Vec<RealField> {
    let grid = *f.grid();
    let spectral = forward_transform(f);
    (0..grid.dim())
        .map(|axis| apply_derivative(&spectral, &gradient_multiplier(&grid, axis)).to_real_lossy())
        .collect()
}

/// Spectral divergence of a vector field given by its components.
pub fn divergence(components: &[RealField]) -> Result<RealField> {
    let first = components
        .first()
        .ok_or_else(|| Error::InvalidField("divergence of an empty vector field".into()))?;
    let grid = *first.grid();
    if components.len() != grid.dim() {
        return Err(Error::InvalidField(format!(
            "expected {} components, got {}",
            grid.dim(),
            components.len()
        )));
    }
    let mut acc = SpectralField::zeros(grid);
    for (axis, c) in components.iter().enumerate() {
        first.same_grid(c)?;
        let d = apply_derivative(&forward_transform(c), &gradient_multiplier(&grid, axis));
        for (a, b) in acc.coeffs_mut().iter_mut().zip(d.coeffs()) {
            *a += b;
        }
    }
    Ok(acc.to_real_lossy())
}
