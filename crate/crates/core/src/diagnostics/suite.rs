use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::checks::{
    check_commutator, check_cordoba, check_pointwise_lp, embedding_ratio, product_ratio, stability,
};
use super::generator::{FieldGenerator, FieldKind};
use crate::error::{Error, Result};
use crate::grid::{Grid, RealField};
use crate::mollifier::{mollify, MollifierKernel};
use crate::norms::{lp_norm, sobolev_norm};
use crate::ops::frac_laplacian;
use crate::par;

pub const CORDOBA_ORDERS: [f64; 4] = [0.5, 0.8, 1.2, 2.0];
pub const LP_EXPONENTS: [f64; 2] = [2.0, 4.0];
pub const LP_ORDERS: [f64; 2] = [0.6, 1.0];
pub const COMMUTATOR_ORDER: f64 = 2.1;
pub const SMOOTHING_EPSILONS: [f64; 3] = [0.4, 0.2, 0.1];
const MOLLIFIER_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertySuiteConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    /// Random fields per pointwise check.
    #[serde(default = "default_fields")]
    pub fields: usize,
    /// Random pairs per ratio witness.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_dim() -> usize {
    2
}
fn default_n() -> usize {
    64
}
fn default_length() -> f64 {
    2.0 * PI
}
fn default_fields() -> usize {
    100
}
fn default_pairs() -> usize {
    200
}

impl Default for PropertySuiteConfig {
    fn default() -> Self {
        Self {
            dim: default_dim(),
            n: default_n(),
            length: default_length(),
            fields: default_fields(),
            pairs: default_pairs(),
            seed: 0,
        }
    }
}

/// One line of the property report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRow {
    pub check: String,
    pub seed: u64,
    pub statistic: f64,
    pub pass: bool,
}

impl PropertyRow {
    fn new(check: impl Into<String>, seed: u64, statistic: f64, pass: bool) -> Self {
        Self { check: check.into(), seed, statistic, pass }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SuiteReport {
    pub rows: Vec<PropertyRow>,
}

impl SuiteReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    pub fn rows_for<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a PropertyRow> + 'a {
        self.rows.iter().filter(move |r| r.check.starts_with(prefix))
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn random_field(grid: Grid, seed: u64, band: usize) -> Result<RealField> {
    FieldGenerator::random_trig(seed, 1.0, band.max(1)).generate(grid)
}

/// Runs every pointwise check, mollifier identity and ratio witness.
pub fn run_property_suite(config: &PropertySuiteConfig) -> Result<SuiteReport> {
    let grid = Grid::new(config.dim, config.n, config.length)?;
    let mut rows = Vec::new();
    rows.extend(pointwise_rows(grid, config)?);
    rows.extend(mollifier_rows(grid, config)?);
    rows.extend(ratio_rows(grid, config)?);
    Ok(SuiteReport { rows })
}

fn pointwise_rows(grid: Grid, config: &PropertySuiteConfig) -> Result<Vec<PropertyRow>> {
    let n = grid.n_points();
    let seeds: Vec<u64> = (0..config.fields as u64).map(|i| config.seed + i).collect();
    let per_field = par::map(&seeds, |&seed| -> Result<Vec<PropertyRow>> {
        let mut out = Vec::new();
        let f2 = random_field(grid, seed, n / 6)?;
        let f4 = random_field(grid, seed, n / 12)?;
        for s in CORDOBA_ORDERS {
            let r = check_cordoba(&f2, s)?;
            out.push(PropertyRow::new(format!("cordoba_s{s}"), seed, r.min_gap, r.pass));
        }
        for p in LP_EXPONENTS {
            let f = if p == 2.0 { &f2 } else { &f4 };
            for sigma in LP_ORDERS {
                let r = check_pointwise_lp(f, sigma, p)?;
                out.push(PropertyRow::new(format!("lp_p{p}_sigma{sigma}"), seed, r.min_gap, r.pass));
            }
        }
        let diff = (check_pointwise_lp(&f2, 0.8, 2.0)?.min_gap - check_cordoba(&f2, 0.8)?.min_gap).abs();
        out.push(PropertyRow::new("lp2_matches_cordoba", seed, diff, diff <= 1e-12));
        Ok(out)
    });
    flatten(per_field)
}

fn mollifier_rows(grid: Grid, config: &PropertySuiteConfig) -> Result<Vec<PropertyRow>> {
    let kernel = MollifierKernel::new(grid, 4.0 * grid.spacing())?;
    let band = grid.cutoff();
    let seeds: Vec<u64> = (0..config.fields as u64).map(|i| config.seed + i).collect();
    let per_field = par::map(&seeds, |&seed| -> Result<Vec<PropertyRow>> {
        let f = random_field(grid, seed, band)?;
        let g = random_field(grid, seed.wrapping_add(1 << 32), band)?;
        let lf = frac_laplacian(&f, 0.75)?;
        let a = frac_laplacian(&mollify(&f, &kernel)?, 0.75)?;
        let b = mollify(&lf, &kernel)?;
        let comm = a.sub(&b)?.max_abs() / lf.max_abs().max(f64::MIN_POSITIVE);
        let adj = (mollify(&f, &kernel)?.inner(&g)? - f.inner(&mollify(&g, &kernel)?)?).abs()
            / (lp_norm(&f, 2.0) * lp_norm(&g, 2.0)).max(f64::MIN_POSITIVE);
        let mean_drift = (mollify(&f, &kernel)?.mean() - f.mean()).abs();
        let bumps = FieldGenerator::new(FieldKind::MultiBump, seed, 1.0, 6.0 * grid.spacing().max(0.3));
        let positive = match bumps.generate(grid) {
            Ok(u) => mollify(&u, &kernel)?.min(),
            Err(_) => 0.0,
        };
        Ok(vec![
            PropertyRow::new("mollifier_commutation", seed, comm, comm <= MOLLIFIER_TOLERANCE),
            PropertyRow::new("mollifier_self_adjoint", seed, adj, adj <= MOLLIFIER_TOLERANCE),
            PropertyRow::new("mollifier_mean", seed, mean_drift, mean_drift <= 1e-13),
            PropertyRow::new("mollifier_positivity", seed, positive, positive >= -1e-13),
        ])
    });
    let mut rows = flatten(per_field)?;
    rows.extend(smoothing_rows(grid, config)?);
    Ok(rows)
}

/// `||J_eps u||_{H^(a+1)} eps / ||u||_{H^a}` across the epsilon ladder. The
/// grid is refined until the smallest epsilon is resolved.
fn smoothing_rows(grid: Grid, config: &PropertySuiteConfig) -> Result<Vec<PropertyRow>> {
    let eps_min = SMOOTHING_EPSILONS.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut n = grid.n_points();
    while 2.0 * grid.side_length() / n as f64 > eps_min {
        n *= 2;
    }
    let fine = Grid::new(grid.dim(), n, grid.side_length())?;
    let alpha = grid.dim() as f64 / 2.0 + 1.1;
    let kernels: Vec<MollifierKernel> =
        SMOOTHING_EPSILONS.iter().map(|&e| MollifierKernel::new(fine, e)).collect::<Result<_>>()?;
    let samples = config.fields.min(20) as u64;
    let mut rows = Vec::new();
    let mut max_ratio = 0.0f64;
    for seed in config.seed..config.seed + samples {
        let u = random_field(fine, seed, fine.cutoff())?;
        let base = sobolev_norm(&u, alpha);
        for k in &kernels {
            let ratio = sobolev_norm(&mollify(&u, k)?, alpha + 1.0) * k.epsilon() / base;
            max_ratio = max_ratio.max(ratio);
            rows.push(PropertyRow::new(format!("smoothing_eps{}", k.epsilon()), seed, ratio, ratio.is_finite()));
        }
    }
    rows.push(PropertyRow::new("smoothing_bound", config.seed, max_ratio, max_ratio.is_finite()));
    Ok(rows)
}

/// Empirical constants of the commutator, product and embedding estimates on
/// `N` and `2N`; each must move by at most the stability tolerance.
fn ratio_rows(grid: Grid, config: &PropertySuiteConfig) -> Result<Vec<PropertyRow>> {
    let refined = Grid::new(grid.dim(), 2 * grid.n_points(), grid.side_length())?;
    let d = grid.dim() as f64;
    let a_prod = 0.375 * d;
    let a_emb = d / 2.0 + 0.5;
    let mut rows = Vec::new();
    let mut maxima = [[0.0f64; 3]; 2];
    for (level, g) in [grid, refined].into_iter().enumerate() {
        let band = g.n_points() / 6;
        let seeds: Vec<u64> = (0..config.pairs as u64).map(|i| config.seed + 2 * i).collect();
        let results = par::map(&seeds, |&seed| -> Result<[Option<f64>; 3]> {
            let f = random_field(g, seed, band)?;
            let h = random_field(g, seed + 1, band)?;
            Ok([
                degenerate_as_none(check_commutator(&f, &h, COMMUTATOR_ORDER))?,
                degenerate_as_none(product_ratio(&f, &h, a_prod, a_prod))?,
                degenerate_as_none(embedding_ratio(&f, a_emb))?,
            ])
        });
        for (seed, r) in seeds.iter().zip(results) {
            let r = r?;
            for (k, (name, value)) in ["commutator", "product", "embedding"].iter().zip(r).enumerate() {
                let label = format!("{name}_ratio_n{}", g.n_points());
                match value {
                    Some(v) => {
                        maxima[level][k] = maxima[level][k].max(v);
                        rows.push(PropertyRow::new(label, *seed, v, v.is_finite()));
                    }
                    None => rows.push(PropertyRow::new(label, *seed, f64::NAN, true)),
                }
            }
        }
    }
    for (k, name) in ["commutator", "product", "embedding"].iter().enumerate() {
        let st = stability(maxima[0][k], maxima[1][k]);
        rows.push(PropertyRow::new(format!("{name}_stability"), config.seed, st.relative_change, st.pass));
    }
    Ok(rows)
}

fn degenerate_as_none(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::DegenerateDenominator(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn flatten(parts: Vec<Result<Vec<PropertyRow>>>) -> Result<Vec<PropertyRow>> {
    let mut rows = Vec::new();
    for p in parts {
        rows.extend(p?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let config = PropertySuiteConfig { n: 32, fields: 4, pairs: 6, ..Default::default() };
        let report = run_property_suite(&config).unwrap();
        let failed: Vec<_> = report.rows.iter().filter(|r| !r.pass).collect();
        assert!(failed.is_empty(), "{failed:?}");
        assert!(report.rows_for("cordoba_s0.5").count() == 4);
        assert!(report.rows_for("commutator_stability").count() == 1);
    }
}
