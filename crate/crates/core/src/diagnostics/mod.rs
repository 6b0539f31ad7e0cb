//! Per-run monitored functionals and the property-test engine.

mod checks;
mod generator;
mod suite;

use serde::{Deserialize, Serialize};

use crate::grid::{forward_transform, Grid, RealField};
use crate::norms::{besov_norm, sobolev_norm_spectral, DyadicPartition};

pub use checks::{
    check_commutator, check_cordoba, check_pointwise_lp, embedding_ratio, gradient_sup,
    product_ratio, stability, GapReport, Stability, STABILITY_TOLERANCE,
};
pub use generator::{bump_at, default_side_length, FieldGenerator, FieldKind};
pub use suite::{run_property_suite, PropertyRow, PropertySuiteConfig, SuiteReport};

/// One time sample of the monitored functionals. Field order matches the CSV
/// column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub l2: f64,
    pub h_alpha: f64,
    pub min_u: f64,
    pub mass: f64,
    /// Finite-difference Gronwall quotient against the previous record.
    pub c_meas: f64,
    pub besov_alpha: f64,
}

impl DiagnosticsRecord {
    pub fn is_finite(&self) -> bool {
        [self.t, self.dt, self.l2, self.h_alpha, self.min_u, self.mass, self.c_meas, self.besov_alpha]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// `(ln b - ln a) / (dt * scale)`, zero when any factor vanishes.
pub fn log_growth_quotient(a: f64, b: f64, dt: f64, scale: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 || dt <= 0.0 || scale <= 0.0 {
        0.0
    } else {
        (b / a).ln() / (dt * scale)
    }
}

/// Builds [`DiagnosticsRecord`]s for one run, keeping the previous record
/// for the finite-difference Gronwall quotient.
#[derive(Debug, Clone)]
pub struct Recorder {
    alpha: f64,
    partition: DyadicPartition,
    records: Vec<DiagnosticsRecord>,
}

impl Recorder {
    pub fn new(grid: Grid, alpha: f64) -> Self {
        Self { alpha, partition: DyadicPartition::new(grid), records: Vec::new() }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn partition(&self) -> &DyadicPartition {
        &self.partition
    }

    /// Appends the record of `u` at time `t`. `coefficient_norm` is the
    /// `H^alpha` norm of the frozen coefficient over the last interval.
    pub fn record(&mut self, u: &RealField, t: f64, dt: f64, coefficient_norm: f64) -> DiagnosticsRecord {
        let spectral = forward_transform(u);
        let h_alpha = sobolev_norm_spectral(&spectral, self.alpha);
        let c_meas = self
            .records
            .last()
            .map(|prev| log_growth_quotient(prev.h_alpha, h_alpha, t - prev.t, coefficient_norm))
            .unwrap_or(0.0);
        let rec = DiagnosticsRecord {
            t,
            dt,
            l2: sobolev_norm_spectral(&spectral, 0.0),
            h_alpha,
            min_u: u.min(),
            mass: spectral.coeffs()[0].re,
            c_meas,
            besov_alpha: besov_norm(u, self.alpha, &self.partition).unwrap_or(f64::NAN),
        };
        self.records.push(rec);
        rec
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<DiagnosticsRecord> {
        self.records
    }
}

/// Writes records as CSV with the standard header.
pub fn write_records_csv<W: std::io::Write>(w: W, records: &[DiagnosticsRecord]) -> crate::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::sobolev_norm;

    #[test]
    fn zero_field_record() {
        let g = Grid::new(1, 32, 1.0).unwrap();
        let mut r = Recorder::new(g, 2.1);
        let rec = r.record(&RealField::zeros(g), 0.0, 0.0, 1.0);
        assert_eq!((rec.l2, rec.h_alpha, rec.mass, rec.min_u, rec.c_meas), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(rec.besov_alpha, 0.0);
    }

    #[test]
    fn h_alpha_matches_norm_and_quotient_uses_previous() {
        let g = Grid::new(1, 64, 2.0 * std::f64::consts::PI).unwrap();
        let u0 = FieldGenerator::gaussian_bump(1.0, 0.6).generate(g).unwrap();
        let mut r = Recorder::new(g, 2.1);
        let a = r.record(&u0, 0.0, 0.0, 2.0);
        assert_eq!(a.h_alpha, sobolev_norm(&u0, 2.1));
        let b = r.record(&u0.scale(1.1), 0.5, 0.1, 2.0);
        assert!((b.c_meas - 1.1f64.ln() / (0.5 * 2.0)).abs() < 1e-12);
        assert!((b.mass - 1.1 * u0.mean()).abs() < 1e-14);
    }

    #[test]
    fn csv_header_order() {
        let rec = DiagnosticsRecord {
            t: 0.0,
            dt: 0.1,
            l2: 1.0,
            h_alpha: 2.0,
            min_u: 0.0,
            mass: 0.5,
            c_meas: 0.0,
            besov_alpha: 3.0,
        };
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,dt,l2,h_alpha,min_u,mass,c_meas,besov_alpha\n"));
    }
}
