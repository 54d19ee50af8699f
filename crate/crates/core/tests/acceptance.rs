//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs as a plain binary (`harness = false`).

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shallowbound::identities::check_identities;
use shallowbound::moments::{moment_series, nested_moments};
use shallowbound::perturbation::Perturbation;
use shallowbound::potential::PotentialSpec;
use shallowbound::predictor::{classify, complex_threshold_example, m_tilde, predict, Verdict};
use shallowbound::quadrature::{build_grid, RectDomain, TensorGrid};
use shallowbound::runner::{run_sweep, ResultRow, RowVerdict};
use shallowbound::scenario::Scenario;
use shallowbound::solver::{CharSystem, KSector, Lattice, RootOutcome, SolverConfig};
use shallowbound::special::bessel_k0;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"));
    Scenario::from_path(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn grid(half: f64, n: usize) -> Arc<TensorGrid> {
    Arc::new(build_grid(RectDomain::centered_square(0.0, 0.0, half).unwrap(), n).unwrap())
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn row(rows: &[ResultRow], eps: f64) -> &ResultRow {
    rows.iter().find(|r| r.epsilon == eps).expect("row")
}

fn c1_c2() -> (Outcome, Outcome) {
    let t = Instant::now();
    let s = scenario("ex1_positive_mean");
    let rows = match run_sweep(&s) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let secs = t.elapsed().as_secs_f64();

    let mut errs = Vec::new();
    let mut ok = true;
    for &eps in &[0.4, 0.3, 0.2] {
        let r = row(&rows, eps);
        let err = match (r.ln_neg_lambda_lead(), r.ln_k_oracle) {
            (Some(l), Some(ln_k)) => (l - 2.0 * ln_k).norm(),
            _ => f64::NAN,
        };
        ok &= err <= 1.5 * eps;
        errs.push(err);
    }
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    ok &= ratios.iter().all(|q| (1.1..=2.5).contains(q)) && secs <= 60.0;
    let c1 = ensure(
        ok,
        format!("ln(-λ) errors {:.3e} {:.3e} {:.3e}, ratios {:.2} {:.2}, {secs:.1} s", errs[0], errs[1], errs[2], ratios[0], ratios[1]),
    );

    let gap = |eps| {
        let r = row(&rows, eps);
        match (r.m_solved(), r.m_tilde()) {
            (Some(a), Some(b)) => (a - b).norm(),
            _ => f64::NAN,
        }
    };
    let (g4, g2) = (gap(0.4), gap(0.2));
    let c2 = ensure(g4 / g2 >= 4.0, format!("|m_solved - M̃₃| {g4:.3e} at ε=0.4, {g2:.3e} at ε=0.2, factor {:.2}", g4 / g2));
    (c1, c2)
}

fn c3() -> Outcome {
    let t = Instant::now();
    let u = PotentialSpec::polynomial_bump(1.0, [0.0, 0.0], 1.0, 8).laplacian();
    let rep = check_identities(&u, &grid(1.2, 96), 3.0).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let errs: Vec<String> = rep.checks.iter().map(|c| format!("{:.2e}", c.relative_error())).collect();
    ensure(rep.worst() <= 1e-6 && secs <= 30.0, format!("relative errors [{}], {secs:.1} s", errs.join(", ")))
}

fn c4() -> Outcome {
    let s = scenario("ex3_rho_one");
    let eps = 0.1;
    let g = Arc::new(build_grid(s.domain, s.solver.grid_n).unwrap());
    let p = &s.perturbation;
    let ms = moment_series(p, &g, eps, 3).map_err(|e| e.to_string())?;
    let nested = nested_moments(p, &g, eps, 3).map_err(|e| e.to_string())?;
    let dev = ms.coefficients.iter().zip(&nested).map(|(a, b)| (a - b).norm() / b.norm()).fold(0.0, f64::max);
    let m = m_tilde(&ms, eps).map_err(|e| e.to_string())?;
    let sys = CharSystem::new(p, &g, eps, SolverConfig::default()).map_err(|e| e.to_string())?;
    let out = sys.find_root(m).map_err(|e| e.to_string())?;
    let Some(sol) = out.solution() else { return Err(format!("solver found no root near M̃ = {m}")) };
    let rel = ((sol.m_solved - m) / m).norm();
    ensure(rel <= 1e-2 && dev <= 1e-8, format!("M̃ = {:.6}, m_solved rel {rel:.2e}, closed vs nested {dev:.2e}", m.re))
}

fn sector() -> KSector {
    KSector::new(1e-12, 0.3, FRAC_PI_2 - 0.05).unwrap()
}

fn absent_and_empty(p: &Perturbation, g: &Arc<TensorGrid>, eps: f64, m: Complex64) -> Result<String, String> {
    let sys = CharSystem::new(p, g, eps, SolverConfig::default()).map_err(|e| e.to_string())?;
    let absent = matches!(sys.find_root(m).map_err(|e| e.to_string())?, RootOutcome::AbsentBySolver(_));
    let count = sys.count_roots(&sector()).map_err(|e| e.to_string())?;
    ensure(absent && count == 0, format!("absent {absent}, count {count}"))
}

fn c5() -> Outcome {
    let g = grid(1.2, 32);
    let neg = Perturbation::multiplicative(PotentialSpec::polynomial_bump(-16.0 / PI, [0.0, 0.0], 1.0, 3), None);
    let eps = 0.2;
    let m = m_tilde(&moment_series(&neg, &g, eps, 3).map_err(|e| e.to_string())?, eps).map_err(|e| e.to_string())?;
    let a = absent_and_empty(&neg, &g, eps, m);

    let v = PotentialSpec::polynomial_bump(16.0 / PI, [0.0, 0.0], 1.0, 4);
    let t = complex_threshold_example(&v, 0.0, &g).map_err(|e| e.to_string())?.threshold;
    let cp = complex_threshold_example(&v, 2.0 * t, &g).map_err(|e| e.to_string())?.perturbation;
    let eps = 0.1;
    let mc = m_tilde(&moment_series(&cp, &g, eps, 3).map_err(|e| e.to_string())?, eps).map_err(|e| e.to_string())?;
    let wide = mc.im.abs() > FRAC_PI_2 + 0.1;
    let b = absent_and_empty(&cp, &g, eps, mc);
    let msg = format!("negative mean: {}; complex |Im M̃| = {:.3}: {}", a.clone().unwrap_or_else(|e| e), mc.im.abs(), b.clone().unwrap_or_else(|e| e));
    ensure(a.is_ok() && b.is_ok() && wide, msg)
}

fn c6() -> Outcome {
    let g = grid(1.2, 32);
    let eps = 0.1;
    let v = PotentialSpec::polynomial_bump(16.0 / PI, [0.0, 0.0], 1.0, 4);
    let t = complex_threshold_example(&v, 0.0, &g).map_err(|e| e.to_string())?.threshold;
    let verdict = |f: f64| -> Result<(Verdict, Complex64, Perturbation), String> {
        let p = complex_threshold_example(&v, f * t, &g).map_err(|e| e.to_string())?.perturbation;
        let pr = predict(&p, &g, eps, 3, 0.5, 0.0).map_err(|e| e.to_string())?;
        Ok((classify(pr.m_tilde, eps, 0.5, 0.0), pr.m_tilde, p))
    };
    let (lo, _, _) = verdict(0.5)?;
    let (hi, _, _) = verdict(2.0)?;
    let (mid, m, p) = verdict(0.8)?;
    let sys = CharSystem::new(&p, &g, eps, SolverConfig::default()).map_err(|e| e.to_string())?;
    let ratio = match sys.find_root(m).map_err(|e| e.to_string())? {
        RootOutcome::Found(s) => s.lambda.im.abs() / s.lambda.norm(),
        RootOutcome::AbsentBySolver(_) => 0.0,
    };
    ensure(
        lo == Verdict::Exists && hi == Verdict::Absent && mid == Verdict::Exists && ratio >= 0.1,
        format!("0.5T {lo}, 2T {hi}, 0.8T {mid} with |Im λ|/|λ| = {ratio:.3}"),
    )
}

fn c7() -> Outcome {
    let p = Perturbation::multiplicative(PotentialSpec::polynomial_bump(16.0 / PI, [0.0, 0.0], 1.0, 3), None);
    let g = grid(1.2, 48);
    let eps = 0.3;
    let m = m_tilde(&moment_series(&p, &g, eps, 3).map_err(|e| e.to_string())?, eps).map_err(|e| e.to_string())?;
    let sys = CharSystem::new(&p, &g, eps, SolverConfig::default()).map_err(|e| e.to_string())?;
    let RootOutcome::Found(mut sol) = sys.find_root(m).map_err(|e| e.to_string())? else {
        return Err("no root".into());
    };
    let mut res = Vec::new();
    for n in [32, 64, 128] {
        let lat = Lattice::new(RectDomain::centered_square(0.0, 0.0, 1.5).unwrap(), n).unwrap();
        sys.attach_eigenfunction(&p, &mut sol, &lat).map_err(|e| e.to_string())?;
        res.push(sol.residual_norm.unwrap_or(f64::NAN));
    }
    ensure(
        res[1] <= 2e-2 && res[0] > res[1] && res[1] > res[2],
        format!("residual {:.2e} (32²), {:.2e} (64²), {:.2e} (128²)", res[0], res[1], res[2]),
    )
}

fn c8() -> Outcome {
    let yes = run_sweep(&scenario("ex2_paradox_exists")).map_err(|e| e.to_string())?;
    let no = run_sweep(&scenario("ex2_paradox_absent")).map_err(|e| e.to_string())?;
    let ok_yes = yes.iter().all(|r| r.verdict == RowVerdict::Exists && r.solver_verdict == Some(RowVerdict::Exists));
    let ok_no = no.iter().all(|r| r.verdict == RowVerdict::Absent);
    let ms: Vec<String> = yes.iter().map(|r| format!("{:.2}", r.m_solved_re.unwrap_or(f64::NAN))).collect();
    ensure(
        ok_yes && ok_no,
        format!("a = -0.5 ratio: Exists with roots at M = [{}]; a = -2 ratio: {:?}", ms.join(", "), no.iter().map(|r| r.verdict).collect::<Vec<_>>()),
    )
}

fn c9() -> Outcome {
    let s = scenario("ex4_divergence_form");
    let eps = 0.3;
    let g = Arc::new(build_grid(s.domain, s.solver.grid_n).unwrap());
    let base = Perturbation::multiplicative(PotentialSpec::polynomial_bump(16.0 / PI, [0.0, 0.0], 1.0, 3), None);
    let solve = |p: &Perturbation| -> Result<(Complex64, Complex64), String> {
        let m = m_tilde(&moment_series(p, &g, eps, 3).map_err(|e| e.to_string())?, eps).map_err(|e| e.to_string())?;
        let sys = CharSystem::new(p, &g, eps, SolverConfig::default()).map_err(|e| e.to_string())?;
        let out = sys.find_root(m).map_err(|e| e.to_string())?;
        let ms = out.solution().ok_or("no root")?.m_solved;
        Ok((m, ms))
    };
    let (m0, s0) = solve(&base)?;
    let (m1, s1) = solve(&s.perturbation)?;
    let dm = ((m1 - m0) / m0).norm();
    let ds = ((s1 - s0) / s0).norm();
    ensure(dm <= 1e-8 && ds <= 1e-3, format!("M̃ change {dm:.2e}, m_solved change {ds:.2e}"))
}

fn c10() -> Outcome {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/k0_oracle.csv");
    let mut rdr = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let f = |i: usize| rec[i].parse::<f64>().unwrap();
        let z = Complex64::new(f(0), f(1));
        let want = Complex64::new(f(2), f(3));
        let got = bessel_k0(z).map_err(|e| e.to_string())?;
        worst = worst.max((got - want).norm() / want.norm());
        count += 1;
    }

    // z²K'' + zK' - z²K = 0 with five-point differences
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ode: f64 = 0.0;
    for _ in 0..200 {
        let r = 10f64.powf(rng.gen_range(-1.0..1.5));
        let z = Complex64::from_polar(r, rng.gen_range(-3.0..3.0));
        let h = 1e-2 * r.min(1.0);
        let k = |d: f64| bessel_k0(z + d).unwrap();
        let (k0, p1, m1, p2, m2) = (k(0.0), k(h), k(-h), k(2.0 * h), k(-2.0 * h));
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        let d2 = (-m2 + 16.0 * m1 - 30.0 * k0 + 16.0 * p1 - p2) / (12.0 * h * h);
        let scale = (z * z * k0).norm() + (z * d1).norm();
        ode = ode.max((z * z * d2 + z * d1 - z * z * k0).norm() / scale);
    }
    ensure(count == 200 && worst <= 1e-11 && ode <= 1e-6, format!("{count} points, worst relative {worst:.2e}; ODE residual {ode:.2e}"))
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let (r1, r2) = c1_c2();
    results.push((1, "radial triangle", r1));
    results.push((2, "power precision", r2));
    let rest: [Criterion; 8] = [
        (3, "identity suite", c3),
        (4, "rank-one closed form", c4),
        (5, "absence certification", c5),
        (6, "complex threshold flip", c6),
        (7, "eigenfunction residual", c7),
        (8, "zero-mean paradox", c8),
        (9, "divergence-form reduction", c9),
        (10, "special functions", c10),
    ];
    for (n, name, f) in rest {
        let out = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        results.push((n, name, out));
    }
    let mut failed = 0;
    for (n, name, out) in &results {
        match out {
            Ok(m) => println!("PASS criterion {n:>2} ({name}): {m}"),
            Err(m) => {
                failed += 1;
                println!("FAIL criterion {n:>2} ({name}): {m}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1} s", results.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
