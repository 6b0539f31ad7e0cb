//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::PI;
use std::time::Instant;

use fpme_core::diagnostics::{
    bump_at, check_cordoba, check_pointwise_lp, log_growth_quotient, stability, FieldGenerator, FieldKind,
};
use fpme_core::linear::{gronwall_quotient, positivity_report, solve_linear, LinearProblem, TimeStepPolicy};
use fpme_core::ops::{gradient, inv_frac_laplacian};
use fpme_core::picard::{nonlinear_residual, run_picard, uniqueness_probe, PicardConfig};
use fpme_core::{
    execute, frac_laplacian, lp_norm, mollify, par, parse_config_with, sobolev_norm, Grid, MollifierKernel, RealField,
};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn rel_err(a: &RealField, b: &RealField) -> f64 {
    a.sub(b).unwrap().max_abs() / b.max_abs().max(f64::MIN_POSITIVE)
}

fn random(grid: Grid, seed: u64, band: usize) -> RealField {
    FieldGenerator::random_trig(seed, 1.0, band).generate(grid).unwrap()
}

/// Single Fourier modes against their closed-form images.
fn operator_exactness() -> Outcome {
    let mut worst = 0.0f64;
    for dim in [1usize, 2] {
        let l = 3.0;
        let g = Grid::new(dim, 64, l).unwrap();
        let w = 2.0 * PI / l;
        let modes: &[[i64; 2]] = if dim == 1 { &[[1, 0], [5, 0], [20, 0]] } else { &[[1, 0], [3, -2], [7, 11]] };
        for k in modes {
            let phase = |x: &[f64]| w * (k[0] as f64 * x[0] + if dim == 2 { k[1] as f64 * x[1] } else { 0.0 });
            let f = RealField::from_fn(g, |x| phase(x).cos()).unwrap();
            let sin = RealField::from_fn(g, |x| phase(x).sin()).unwrap();
            let kk = w * ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
            for sigma in [0.0, 0.5, 1.0, 1.5, 2.0] {
                worst = worst.max(rel_err(&frac_laplacian(&f, sigma).unwrap(), &f.scale(kk.powf(sigma))));
            }
            for s in [0.25, 0.5, 0.75] {
                worst = worst.max(rel_err(&inv_frac_laplacian(&f, s).unwrap(), &f.scale(kk.powf(-2.0 * s))));
            }
            let grad = gradient(&f);
            for (axis, c) in grad.iter().enumerate() {
                let expect = sin.scale(-w * k[axis] as f64);
                if k[axis] != 0 {
                    worst = worst.max(rel_err(c, &expect));
                } else {
                    worst = worst.max(c.max_abs());
                }
            }
        }
    }
    (worst <= 1e-12, format!("max relative error {worst:.2e} (tol 1e-12)"))
}

fn mollifier_identities() -> Outcome {
    let g = Grid::new(2, 64, 2.0 * PI).unwrap();
    let k = MollifierKernel::new(g, 0.3).unwrap();
    let mut comm = 0.0f64;
    let mut adj = 0.0f64;
    for seed in 0..100 {
        let f = random(g, seed, g.cutoff());
        let h = random(g, seed + 1000, g.cutoff());
        for sigma in [0.5, 1.5] {
            let lf = frac_laplacian(&f, sigma).unwrap();
            let a = frac_laplacian(&mollify(&f, &k).unwrap(), sigma).unwrap();
            let b = mollify(&lf, &k).unwrap();
            comm = comm.max(a.sub(&b).unwrap().max_abs() / lf.max_abs());
        }
        let lhs = mollify(&f, &k).unwrap().inner(&h).unwrap();
        let rhs = f.inner(&mollify(&h, &k).unwrap()).unwrap();
        adj = adj.max((lhs - rhs).abs() / (lp_norm(&f, 2.0) * lp_norm(&h, 2.0)));
    }
    (comm <= 1e-11 && adj <= 1e-11, format!("commutation {comm:.2e}, self-adjointness {adj:.2e} (tol 1e-11)"))
}

fn pointwise_inequalities() -> Outcome {
    let g = Grid::new(2, 64, 2.0 * PI).unwrap();
    let fields: Vec<u64> = (0..100).collect();
    let results = par::map(&fields, |&seed| {
        let f2 = random(g, seed, g.n_points() / 6);
        let f4 = random(g, seed, g.n_points() / 12);
        let mut worst = f64::INFINITY;
        let mut ok = true;
        let mut track = |r: fpme_core::diagnostics::GapReport| {
            worst = worst.min(r.min_gap / r.tolerance);
            ok &= r.pass;
        };
        for s in [0.5, 0.8, 1.2, 2.0] {
            track(check_cordoba(&f2, s).unwrap());
        }
        for sigma in [0.6, 1.0] {
            track(check_pointwise_lp(&f2, sigma, 2.0).unwrap());
            track(check_pointwise_lp(&f4, sigma, 4.0).unwrap());
        }
        (ok, worst)
    });
    let ok = results.iter().all(|r| r.0);
    let worst = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    (ok, format!("1200 gap checks, smallest min_gap/tol = {worst:.3e}"))
}

fn linear_problem(n: usize, epsilon: f64) -> LinearProblem {
    let g = Grid::new(1, n, 2.0 * PI).unwrap();
    let v = FieldGenerator::gaussian_bump(1.0, 0.6).generate(g).unwrap();
    let u0 = FieldGenerator::gaussian_bump(1.0, 0.5).generate(g).unwrap();
    LinearProblem::new(0.75, v, u0, epsilon, 0.2).unwrap()
}

fn linear_structure() -> Outcome {
    let policy = TimeStepPolicy::default();
    let p = linear_problem(128, 0.2);
    let run = solve_linear(&p, &policy, 1).unwrap();
    let l2_excess =
        run.records.windows(2).map(|w| w[1].l2 / w[0].l2 - 1.0).fold(f64::NEG_INFINITY, f64::max);
    let sup0 = lp_norm(p.u0(), f64::INFINITY);
    let pos = positivity_report(&run.records, sup0);
    let plain = solve_linear(&linear_problem(128, 0.0), &policy, 1).unwrap();
    let m0 = p.u0().mean();
    let drift = plain.records.iter().map(|r| (r.mass - m0).abs() / m0).fold(0.0, f64::max);
    let coarse = solve_linear(&linear_problem(64, 0.2), &policy, 1).unwrap();
    let selfconv = (0..64)
        .map(|i| (coarse.final_field.values()[i] - run.final_field.values()[2 * i]).abs())
        .fold(0.0, f64::max);
    let a = l2_excess <= 1e-6;
    let b = pos.min_over_run >= -1e-8 * sup0;
    let c = drift <= 1e-9;
    let d = selfconv <= 1e-6;
    (
        a && b && c && d,
        format!(
            "(a) max L2 step ratio - 1 = {l2_excess:.2e}; (b) min u = {:.2e}; (c) mass drift {drift:.2e}; (d) N64/N128 gap {selfconv:.2e}",
            pos.min_over_run
        ),
    )
}

fn gronwall_suite(safety: f64) -> f64 {
    let problems: Vec<usize> = (0..10).collect();
    let q = par::map(&problems, |&k| {
        let g = Grid::new(1, 64, 2.0 * PI).unwrap();
        let s = 0.5 + 0.045 * k as f64;
        let u0 = FieldGenerator::new(FieldKind::MultiBump, k as u64, 1.0, 0.5).generate(g).unwrap();
        let v = FieldGenerator::new(FieldKind::MultiBump, 100 + k as u64, 0.5 + 0.1 * k as f64, 0.6)
            .generate(g)
            .unwrap();
        let p = LinearProblem::new(s, v, u0, 0.2, 0.2).unwrap().with_alpha(2.1).unwrap();
        let run = solve_linear(&p, &TimeStepPolicy::new(safety, f64::INFINITY).unwrap(), 1).unwrap();
        gronwall_quotient(&run.records, sobolev_norm(p.v(), p.alpha()))
    });
    q.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn gronwall_envelope() -> Outcome {
    let base = gronwall_suite(0.5);
    let halved = gronwall_suite(0.25);
    let st = stability(base, halved);
    (
        st.pass,
        format!("max C_meas {base:.6e} at dt, {halved:.6e} at dt/2, change {:.2e} (tol 0.2)", st.relative_change),
    )
}

fn picard_u0(n: usize) -> RealField {
    let g = Grid::new(1, n, 2.0 * PI).unwrap();
    FieldGenerator::gaussian_bump(1.0, 0.5).generate(g).unwrap()
}

fn picard_config() -> PicardConfig {
    PicardConfig::new(0.75, 2.1)
}

fn picard_structure() -> Outcome {
    let u0 = picard_u0(64);
    let config = picard_config();
    let (traj, state) = match run_picard(&u0, &config) {
        Ok(r) => r,
        Err(e) => return (false, format!("run failed: {e}")),
    };
    let a = state.converged && state.outer_iterations() <= 30 && *state.deltas.last().unwrap() < 1e-8;
    let bound = 2.2 * sobolev_norm(&u0, config.alpha);
    let worst_sup = state.sup_halpha.iter().cloned().fold(0.0, f64::max);
    let b = worst_sup <= bound;
    let residual = nonlinear_residual(&traj, &config).unwrap().iter().map(|r| r.1).fold(0.0, f64::max);
    let c = residual <= 1e-6;
    let sup0 = lp_norm(&u0, f64::INFINITY);
    let min_u = state.min_u.iter().cloned().fold(f64::INFINITY, f64::min);
    let d = min_u >= -1e-8 * sup0 && positivity_report(&traj.records, sup0).first_violation_time.is_none();
    let m0 = u0.mean();
    let drift = traj.states.iter().map(|u| (u.mean() - m0).abs() / m0).fold(0.0, f64::max);
    let e = drift <= 1e-9;
    (
        a && b && c && d && e,
        format!(
            "(a) {} iterates, last delta {:.2e}; (b) sup H^a {worst_sup:.4} <= {bound:.4}; (c) residual {residual:.2e}; (d) min u {min_u:.2e}; (e) mass drift {drift:.2e}; T0 {:.4}, C {:.3}",
            state.outer_iterations(),
            state.deltas.last().unwrap(),
            state.horizon,
            state.c_gronwall
        ),
    )
}

fn uniqueness() -> Outcome {
    let u0 = picard_u0(64);
    let config = picard_config();
    let g = *u0.grid();
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in 0..3u64 {
        let center = 1.0 + 1.7 * seed as f64;
        let shape = bump_at(g, &[center], 1.0, 0.45).unwrap();
        let scale = 1e-6 / sobolev_norm(&shape, config.alpha);
        let delta = shape.scale(scale);
        match uniqueness_probe(&u0, &config, &delta) {
            Ok(r) => {
                ok &= r.within_envelope();
                parts.push(format!("seed {seed}: ratio {:.4} vs envelope {:.4}", r.ratio, r.envelope));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("seed {seed}: {e}"));
            }
        }
    }
    (ok, parts.join("; "))
}

/// `max_t ln(B(t)/B(0)) / (t sup_t B)` along the converged trajectory.
fn besov_quotient(n: usize) -> (f64, f64) {
    let (traj, _) = run_picard(&picard_u0(n), &picard_config()).unwrap();
    let sup_b = traj.records.iter().map(|r| r.besov_alpha).fold(0.0, f64::max);
    let b0 = traj.records[0].besov_alpha;
    let q = traj
        .records
        .iter()
        .skip(1)
        .map(|r| log_growth_quotient(b0, r.besov_alpha, r.t, sup_b))
        .fold(f64::NEG_INFINITY, f64::max);
    (sup_b, q)
}

fn besov_diagnostic() -> Outcome {
    let (sup64, q64) = besov_quotient(64);
    let (sup128, q128) = besov_quotient(128);
    let st = stability(q64, q128);
    let finite = sup64.is_finite() && sup128.is_finite();
    (
        finite && st.pass,
        format!(
            "sup B = {sup64:.4} (N=64), {sup128:.4} (N=128); quotient {q64:.6e} vs {q128:.6e}, change {:.2e} (tol 0.2)",
            st.relative_change
        ),
    )
}

const PICARD_JOB: &str = r#"
mode = "picard"
grid.dim = 1
grid.n = 64
solver.s = 0.75
solver.alpha = 2.1
initial.kind = "gaussian_bump"
initial.amplitude = 1.0
initial.width = 0.5
output.snapshot_times = [0.0, 0.03]
"#;

fn determinism() -> Outcome {
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (k, d) in dirs.iter().enumerate() {
        let spec = parse_config_with(PICARD_JOB, &[format!("output.dir=\"{}\"", d.path().display())], None).unwrap();
        let r = if k == 2 { par::force_sequential(|| execute(&spec)) } else { execute(&spec) };
        if let Err(e) = r {
            return (false, format!("run {k} failed: {e}"));
        }
    }
    let files = ["iterates.csv", "diagnostics.csv", "residual.csv", "final.fpm1", "snapshot_001.fpm1"];
    let mut identical = true;
    for f in files {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        for d in &dirs[1..] {
            identical &= a == std::fs::read(d.path().join(f)).unwrap();
        }
    }
    (identical, format!("{} files compared across 3 runs (one sequential)", files.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("operator exactness", operator_exactness),
        ("mollifier commutation and self-adjointness", mollifier_identities),
        ("pointwise inequalities", pointwise_inequalities),
        ("linear solver structure", linear_structure),
        ("Gronwall envelope", gronwall_envelope),
        ("Picard driver structure", picard_structure),
        ("uniqueness probe", uniqueness),
        ("Besov diagnostic", besov_diagnostic),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        let tag = if ok { "PASS" } else { "FAIL" };
        if !ok {
            failures += 1;
        }
        println!("{tag} criterion {}: {name} | {detail} | {:.2?}", k + 1, start.elapsed());
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
