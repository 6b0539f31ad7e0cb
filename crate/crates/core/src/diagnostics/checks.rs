//! Numerical witnesses for the operator inequalities and estimates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dealias, forward_transform, RealField};
use crate::norms::{homogeneous_seminorm, lp_norm, sobolev_norm};
use crate::ops::{fractional_power, frac_laplacian, gradient};

const DEGENERATE_DENOMINATOR: f64 = 1e-14;
/// Allowed relative drift of an empirical constant under refinement.
pub const STABILITY_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    pub min_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl GapReport {
    fn from_gap(gap: &RealField, f: &RealField) -> Self {
        let min_gap = gap.min();
        let sup = f.max_abs();
        let tolerance = 1e-9 * (1.0 + sup * sup);
        Self { min_gap, tolerance, pass: min_gap >= -tolerance }
    }
}

/// Pointwise `2 f Lambda^s f >= Lambda^s (f^2)`. Exact for fields band-limited
/// to `N/6`, where the dealiased square carries no aliasing.
pub fn check_cordoba(f: &RealField, s: f64) -> Result<GapReport> {
    pointwise_gap(f, s, 2)
}

/// Pointwise `p |f|^(p-2) f Lambda^sigma f >= Lambda^sigma |f|^p` for even `p`
/// in `{2, 4}`.
pub fn check_pointwise_lp(f: &RealField, sigma: f64, p: f64) -> Result<GapReport> {
    if p == 2.0 {
        pointwise_gap(f, sigma, 2)
    } else if p == 4.0 {
        pointwise_gap(f, sigma, 4)
    } else {
        Err(Error::UnsupportedExponent(p))
    }
}

fn pointwise_gap(f: &RealField, sigma: f64, p: i32) -> Result<GapReport> {
    let lf = frac_laplacian(f, sigma)?;
    let power = dealias(&forward_transform(&f.map(|x| x.powi(p)))).to_real_lossy();
    let lpow = frac_laplacian(&power, sigma)?;
    let pf = p as f64;
    let gap = RealField::from_raw(
        *f.grid(),
        f.values()
            .iter()
            .zip(lf.values())
            .zip(lpow.values())
            .map(|((&x, &l), &r)| pf * x.powi(p - 1) * l - r)
            .collect(),
    );
    Ok(GapReport::from_gap(&gap, f))
}

/// Largest Euclidean length of the spectral gradient.
pub fn gradient_sup(f: &RealField) -> f64 {
    let g = gradient(f);
    (0..f.grid().len())
        .map(|i| g.iter().map(|c| c.values()[i].powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// `||Lambda^a (fg) - f Lambda^a g||_2 / (||grad f||_inf ||g||_{H^(a-1)} + ||f||_{H^a} ||g||_inf)`.
///
/// Products are taken pointwise, so `f` and `g` should be band-limited to
/// `N/6`. A constant `f` commutes with every multiplier and yields 0 even
/// though the denominator vanishes.
pub fn check_commutator(f: &RealField, g: &RealField, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidExponent { name: "alpha", value: alpha, range: "(0, inf)" });
    }
    f.same_grid(g)?;
    let denom = gradient_sup(f) * homogeneous_seminorm(g, alpha - 1.0)
        + homogeneous_seminorm(f, alpha) * lp_norm(g, f64::INFINITY);
    if denom < DEGENERATE_DENOMINATOR {
        let f_constant = f.max() - f.min() <= DEGENERATE_DENOMINATOR * f.max_abs().max(1.0);
        let g_constant = g.max() - g.min() <= DEGENERATE_DENOMINATOR * g.max_abs().max(1.0);
        if f_constant && !g_constant {
            return Ok(0.0);
        }
        return Err(Error::DegenerateDenominator(denom));
    }
    let fg = f.mul(g)?;
    let lhs = fractional_power(&fg, alpha);
    let rhs = f.mul(&fractional_power(g, alpha))?;
    Ok(lp_norm(&lhs.sub(&rhs)?, 2.0) / denom)
}

/// `||fg||_{H^(a1+a2-d/2)} / (||f||_{H^a1} ||g||_{H^a2})` (homogeneous norms).
pub fn product_ratio(f: &RealField, g: &RealField, alpha1: f64, alpha2: f64) -> Result<f64> {
    let d = f.grid().dim() as f64;
    let alpha = alpha1 + alpha2 - d / 2.0;
    let denom = homogeneous_seminorm(f, alpha1) * homogeneous_seminorm(g, alpha2);
    if denom < DEGENERATE_DENOMINATOR {
        return Err(Error::DegenerateDenominator(denom));
    }
    Ok(homogeneous_seminorm(&f.mul(g)?, alpha) / denom)
}

/// `||f||_inf / ||f||_{H^alpha}`.
pub fn embedding_ratio(f: &RealField, alpha: f64) -> Result<f64> {
    let denom = sobolev_norm(f, alpha);
    if denom < DEGENERATE_DENOMINATOR {
        return Err(Error::DegenerateDenominator(denom));
    }
    Ok(lp_norm(f, f64::INFINITY) / denom)
}

/// Comparison of an empirical constant measured on a base and a refined
/// discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    pub base: f64,
    pub refined: f64,
    pub relative_change: f64,
    pub pass: bool,
}

pub fn stability(base: f64, refined: f64) -> Stability {
    let scale = base.abs().max(refined.abs());
    let relative_change = if scale == 0.0 { 0.0 } else { (refined - base).abs() / scale };
    let pass = base.is_finite() && refined.is_finite() && relative_change <= STABILITY_TOLERANCE;
    Stability { base, refined, relative_change, pass }
}
