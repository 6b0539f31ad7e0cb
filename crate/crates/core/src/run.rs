//! Executes a [`RunSpec`] and writes its outputs.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Mode, RunSpec};
use crate::diagnostics::{run_property_suite, write_records_csv};
use crate::error::{Error, Result};
use crate::linear::{positivity_report, solve_linear_with_snapshots, LinearProblem, LinearRun};
use crate::norms::lp_norm;
use crate::par;
use crate::picard::{nonlinear_residual, run_picard};
use crate::snapshot::save_snapshot;

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    mode: &'static str,
    input_sha256: String,
    spec: &'a RunSpec,
    versions: Versions,
}

#[derive(Debug, Serialize)]
struct Versions {
    fpme_core: &'static str,
    fft: &'static str,
}

/// What a finished job reports back.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    use std::io::Write;
    f.write_all(b"\n")?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `config.toml` (resolved spec) and `manifest.json` into the output
/// directory. The input hash is taken over the resolved spec so that two
/// documents with the same meaning share it.
pub fn write_manifest(spec: &RunSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let echo = spec.to_toml()?;
    let config_path = dir.join("config.toml");
    fs::write(&config_path, &echo)?;
    let manifest = Manifest {
        tool: "fpme",
        version: env!("CARGO_PKG_VERSION"),
        mode: spec.mode.as_str(),
        input_sha256: sha256_hex(&echo),
        spec,
        versions: Versions { fpme_core: env!("CARGO_PKG_VERSION"), fft: "rustfft 6" },
    };
    let manifest_path = dir.join("manifest.json");
    write_json(&manifest_path, &manifest)?;
    Ok(vec![config_path, manifest_path])
}

/// Runs the job described by `spec`. Outputs written before a failure are
/// kept; the error carries the exit status through [`Error::exit_code`].
pub fn execute(spec: &RunSpec) -> Result<RunSummary> {
    spec.validate()?;
    let dir = spec.output.dir.clone();
    let mut files = write_manifest(spec, &dir)?;
    match spec.mode {
        Mode::Linear => run_linear(spec, &dir, &mut files)?,
        Mode::Picard => run_picard_mode(spec, &dir, &mut files)?,
        Mode::SweepEpsilon => run_sweep(spec, &dir, &mut files)?,
        Mode::Properties => run_properties(spec, &dir, &mut files)?,
    }
    Ok(RunSummary { mode: spec.mode, output_dir: dir, files })
}

fn linear_problem(spec: &RunSpec, epsilon: f64) -> Result<LinearProblem> {
    let grid = spec.grid()?;
    let u0 = spec.initial.as_ref().expect("validated").generate(grid)?;
    let v = spec.coefficient.as_ref().expect("validated").generate(grid)?;
    LinearProblem::new(spec.solver.s, v, u0, epsilon, spec.solver.t_end.expect("validated"))?
        .with_alpha(spec.alpha())
}

fn write_linear_outputs(run: &LinearRun, problem: &LinearProblem, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let diag = dir.join("diagnostics.csv");
    write_records_csv(BufWriter::new(File::create(&diag)?), &run.records)?;
    files.push(diag);
    for (k, (t, field)) in run.snapshots.iter().enumerate() {
        let path = dir.join(format!("snapshot_{k:03}.fpm1"));
        save_snapshot(&path, field, *t)?;
        files.push(path);
    }
    let path = dir.join("final.fpm1");
    save_snapshot(&path, &run.final_field, problem.t_end())?;
    files.push(path);
    let summary = dir.join("summary.json");
    write_json(
        &summary,
        &serde_json::json!({
            "steps": run.steps,
            "dt": run.dt,
            "positivity": positivity_report(&run.records, lp_norm(problem.u0(), f64::INFINITY)),
        }),
    )?;
    files.push(summary);
    Ok(())
}

fn run_linear(spec: &RunSpec, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let problem = linear_problem(spec, spec.solver.epsilon)?;
    let run = solve_linear_with_snapshots(&problem, &spec.policy(), spec.solver.sample_every, &spec.output.snapshot_times)?;
    write_linear_outputs(&run, &problem, dir, files)
}

#[derive(Debug, Serialize)]
struct ResidualRow {
    t: f64,
    residual: f64,
}

fn run_picard_mode(spec: &RunSpec, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let grid = spec.grid()?;
    let u0 = spec.initial.as_ref().expect("validated").generate(grid)?;
    let config = spec.picard_config();
    let result = run_picard(&u0, &config);
    let (traj, state) = match result {
        Ok(ok) => ok,
        Err(Error::NoConvergence { deltas }) => {
            let path = dir.join("iterates.csv");
            let rows: Vec<_> = deltas.iter().enumerate().map(|(k, d)| (k + 2, d)).collect();
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["n", "delta"])?;
            for (n, d) in rows {
                w.write_record([n.to_string(), d.to_string()])?;
            }
            w.flush()?;
            return Err(Error::NoConvergence { deltas });
        }
        Err(e) => return Err(e),
    };
    let iterates = dir.join("iterates.csv");
    write_csv(&iterates, &state.iterate_rows())?;
    files.push(iterates);
    let diag = dir.join("diagnostics.csv");
    write_records_csv(BufWriter::new(File::create(&diag)?), &traj.records)?;
    files.push(diag);
    let residual: Vec<ResidualRow> = nonlinear_residual(&traj, &config)?
        .into_iter()
        .map(|(t, residual)| ResidualRow { t, residual })
        .collect();
    let res_path = dir.join("residual.csv");
    write_csv(&res_path, &residual)?;
    files.push(res_path);
    for (k, &t) in spec.output.snapshot_times.iter().enumerate() {
        if t > state.horizon {
            continue;
        }
        let m = ((t / state.dt).round() as usize).min(state.steps);
        let path = dir.join(format!("snapshot_{k:03}.fpm1"));
        save_snapshot(&path, &traj.states[m], traj.times[m])?;
        files.push(path);
    }
    let final_path = dir.join("final.fpm1");
    save_snapshot(&final_path, traj.final_field(), state.horizon)?;
    files.push(final_path);
    let max_residual = residual.iter().map(|r| r.residual).fold(0.0, f64::max);
    let mean0 = traj.states[0].mean();
    let mass_drift = traj.states.iter().map(|u| (u.mean() - mean0).abs()).fold(0.0, f64::max);
    let summary = dir.join("summary.json");
    write_json(
        &summary,
        &serde_json::json!({
            "state": state,
            "max_residual": max_residual,
            "mass_drift": mass_drift,
            "positivity": positivity_report(&traj.records, lp_norm(&traj.states[0], f64::INFINITY)),
        }),
    )?;
    files.push(summary);
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    epsilon: f64,
    l2_to_unmollified: f64,
    decreasing: bool,
}

fn run_sweep(spec: &RunSpec, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let mut eps = vec![0.0];
    eps.extend(&spec.sweep.epsilons);
    let policy = spec.policy();
    let runs = par::map(&eps, |&e| -> Result<(LinearProblem, LinearRun)> {
        let p = linear_problem(spec, e)?;
        let run = solve_linear_with_snapshots(&p, &policy, spec.solver.sample_every, &spec.output.snapshot_times)?;
        Ok((p, run))
    });
    let mut done = Vec::new();
    for (e, r) in eps.iter().zip(runs) {
        let (p, run) = r?;
        write_linear_outputs(&run, &p, &dir.join(format!("eps_{e}")), files)?;
        done.push(run);
    }
    let reference = &done[0].final_field;
    let mut rows: Vec<SweepRow> = Vec::new();
    for (e, run) in eps.iter().zip(&done).skip(1) {
        let d = lp_norm(&run.final_field.sub(reference)?, 2.0);
        let decreasing = rows.last().is_none_or(|prev| d < prev.l2_to_unmollified);
        rows.push(SweepRow { epsilon: *e, l2_to_unmollified: d, decreasing });
    }
    let path = dir.join("convergence.csv");
    write_csv(&path, &rows)?;
    files.push(path);
    let failures = rows.iter().filter(|r| !r.decreasing).count();
    if failures > 0 {
        return Err(Error::PropertyFailure(failures));
    }
    Ok(())
}

fn run_properties(spec: &RunSpec, dir: &Path, files: &mut Vec<PathBuf>) -> Result<()> {
    let report = run_property_suite(&spec.suite_config())?;
    let path = dir.join("report.csv");
    report.write_csv(BufWriter::new(File::create(&path)?))?;
    files.push(path);
    if !report.passed() {
        return Err(Error::PropertyFailure(report.failures()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_with;

    fn spec(text: &str, dir: &Path) -> RunSpec {
        parse_config_with(text, &[format!("output.dir=\"{}\"", dir.display())], None).unwrap()
    }

    #[test]
    fn picard_constant_writes_outputs() {
        let tmp = tempfile::tempdir().unwrap();
        let text = "mode = \"picard\"\ngrid.dim = 1\ngrid.n = 32\nsolver.alpha = 2.1\ninitial.kind = \"constant\"\ninitial.amplitude = 0.5\n";
        let s = spec(text, tmp.path());
        let out = execute(&s).unwrap();
        for f in ["manifest.json", "config.toml", "iterates.csv", "diagnostics.csv", "residual.csv", "final.fpm1"] {
            assert!(tmp.path().join(f).exists(), "{f}");
        }
        assert!(out.files.len() >= 6);
        let iters = fs::read_to_string(tmp.path().join("iterates.csv")).unwrap();
        assert!(iters.starts_with("n,sup_halpha,delta,c_meas,min_u\n"));
        assert_eq!(iters.lines().count(), 2);
    }

    #[test]
    fn linear_run_with_snapshots() {
        let tmp = tempfile::tempdir().unwrap();
        let text = "mode = \"linear\"\ngrid.dim = 1\ngrid.n = 64\nsolver.t_end = 0.05\n\
            output.snapshot_times = [0.0, 0.02]\n\
            initial.kind = \"gaussian_bump\"\ninitial.width = 0.6\n\
            coefficient.kind = \"gaussian_bump\"\ncoefficient.width = 0.7\n";
        execute(&spec(text, tmp.path())).unwrap();
        let (f, t) = crate::snapshot::load_snapshot(&tmp.path().join("snapshot_001.fpm1")).unwrap();
        assert_eq!(t, 0.02);
        assert_eq!(f.grid().n_points(), 64);
    }
}
