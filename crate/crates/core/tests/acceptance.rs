//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::{Duration, Instant};

use latfrac::atoms::{make_atom, make_atom_with, validate_atom, AtomShape};
use latfrac::experiments::*;
use latfrac::hardy::{delta_maximal_closed_form, hardy_maximal, hp_quasinorm, DilationGrid};
use latfrac::operators::{apply_riesz, apply_t, apply_t_at, fractional_maximal, fractional_maximal_fast};
use latfrac::{CubeWindow, FractionalSpec, IntegerMatrix, LatticeIndex, LatticeSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel_close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.abs().max(f64::MIN_POSITIVE)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, r: i64) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(-r..=r)).collect()
}

fn random_spec(rng: &mut ChaCha8Rng) -> FractionalSpec {
    loop {
        let n = rng.random_range(1..=3usize);
        let m = rng.random_range(1..=3usize);
        let alpha = if m >= 2 && rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.05..0.95) * n as f64 };
        let mut w: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x *= (n as f64 - alpha) / total);
        let matrices = (0..m)
            .map(|_| IntegerMatrix::new((0..n).map(|_| random_point(rng, n, 3)).collect()).unwrap())
            .collect();
        let spec = FractionalSpec::new(n, alpha, w, matrices);
        if spec.validate().is_valid() {
            return spec;
        }
    }
}

fn c1_tail() -> Outcome {
    let r = run_tail(&TailParams::default()).unwrap();
    let spot = r.records.iter().find(|x| x.case == "n=1 eps=1 N=1").unwrap();
    let z = std::f64::consts::PI.powi(2) / 3.0;
    let min_slack = r.records.iter().map(|x| x.bound / x.measured).fold(f64::INFINITY, f64::min);
    let pass = r.passed() && r.records.len() == 45 && (spot.measured - z).abs() < 1e-6 && spot.bound == 8.0;
    outcome(pass, format!("45 cases, min slack {min_slack:.3}, spot {:.9} bound {}", spot.measured, spot.bound))
}

fn c2_kernel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut cases = vec![(FractionalSpec::reflection_pair(), vec![1], vec![2])];
    while cases.len() < 1000 {
        let s = random_spec(&mut rng);
        let n = s.n;
        cases.push((s, random_point(&mut rng, n, 20), random_point(&mut rng, n, 20)));
    }
    for (s, i, j) in &cases {
        let got: f64 = apply_t_at(s, &LatticeSequence::delta(LatticeIndex(i.clone()), 1.0), &LatticeIndex(j.clone())).unwrap();
        let mut expect = 1.0f64;
        for (a, e) in s.matrices.iter().zip(&s.exponents) {
            let aj = a.apply(j);
            let d2: i64 = i.iter().zip(&aj).map(|(x, y)| (x - y) * (x - y)).sum();
            expect = if d2 == 0 { 0.0 } else { expect * (d2 as f64).sqrt().powf(-e) };
        }
        let err = if expect == 0.0 { got.abs() } else { (got - expect).abs() / expect };
        worst = worst.max(err);
    }
    let first: f64 = apply_t_at(&cases[0].0, &LatticeSequence::delta(LatticeIndex(vec![1]), 1.0), &LatticeIndex(vec![2])).unwrap();
    let pass = worst <= 1e-12 && (first - 3f64.powf(-0.5)).abs() <= 1e-12 * first;
    outcome(pass, format!("1000 cases, worst relative error {worst:.2e}"))
}

fn c3_riesz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(1..=3usize);
        let alpha = rng.random_range(0.05..0.95) * n as f64;
        let k = rng.random_range(1..=20);
        let entries: std::collections::BTreeMap<Vec<i64>, f64> =
            (0..k).map(|_| (random_point(&mut rng, n, 15), rng.random_range(-1.0..1.0))).collect();
        let b = LatticeSequence::sparse(n, entries.into_iter().map(|(i, v)| (LatticeIndex(i), v)).collect()).unwrap();
        let out = CubeWindow::new(LatticeIndex(random_point(&mut rng, n, 10)), rng.random_range(0..=6));
        let spec = FractionalSpec::riesz(n, alpha);
        let t = apply_t(&spec, &b, &out).unwrap().values;
        let r = apply_riesz(&b, alpha, &out).unwrap().values;
        let scale = apply_riesz(&b.abs(), alpha, &out).unwrap().values;
        for j in out.iter() {
            let (x, y, s): (f64, f64, f64) = (t.get(&j.0), r.get(&j.0), scale.get(&j.0));
            if s > 0.0 {
                worst = worst.max((x - y).abs() / s);
            }
        }
    }
    outcome(worst <= 1e-12, format!("500 inputs, worst error relative to I_a|b| {worst:.2e}"))
}

fn c4_maximal() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = case % 3 + 1;
        let max_radius = [16, 16, 6][n - 1];
        let w = CubeWindow::new(LatticeIndex(random_point(&mut rng, n, 8)), rng.random_range(0..=max_radius));
        let b = LatticeSequence::from_fn(w.clone(), |_| rng.random_range(-1.0..1.0));
        let alpha = rng.random_range(0.0..n as f64);
        let slow = fractional_maximal(&b, alpha, &w).unwrap();
        let fast = fractional_maximal_fast(&b, alpha, &w).unwrap();
        for j in w.iter() {
            let (s, f) = (slow.get(&j.0), fast.get(&j.0));
            if !rel_close(s, f, s, 0.0) {
                worst = worst.max((s - f).abs() / s.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    outcome(worst <= 1e-12, format!("200 windows, n in 1..=3, worst relative error {worst:.2e}"))
}

fn c5_atoms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut made, mut failures, mut skipped, mut attempts) = (0, 0, 0, 0u64);
    while made < 1000 {
        attempts += 1;
        let n = rng.random_range(1..=2usize);
        let p = [0.5, 2.0 / 3.0, 1.0][rng.random_range(0..3)];
        let radius = rng.random_range(1..=32u64);
        let cube = CubeWindow::new(LatticeIndex(random_point(&mut rng, n, 1000)), radius);
        let seed = rng.random();
        let atom = match attempts % 3 {
            0 => make_atom(&cube, p, seed),
            1 => make_atom_with(&cube, p, seed, AtomShape::Coarse),
            _ => make_atom_with(&cube, p, seed, AtomShape::Block(2)),
        };
        let Ok(atom) = atom else {
            skipped += 1;
            continue;
        };
        made += 1;
        let report = validate_atom(&atom.sequence, &cube, p).unwrap();
        if !(report.is_valid() && report.exact) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("1000 atoms, {failures} failures, {skipped} cubes too small to construct"))
}

fn experiment_line(reports: &[ExperimentReport], summary: impl Fn(&ExperimentReport) -> String) -> Outcome {
    let pass = reports.iter().all(|r| r.passed());
    let mut parts: Vec<String> = reports.iter().map(|r| summary(r)).collect();
    for r in reports {
        parts.extend(r.failures());
    }
    outcome(pass, parts.join("; "))
}

fn check_value(r: &ExperimentReport, name: &str) -> f64 {
    r.check(name).map(|c| c.value).unwrap_or(f64::NAN)
}

fn c6_domination() -> Outcome {
    let reports: Vec<ExperimentReport> = Preset::ALL
        .iter()
        .map(|p| run_domination(&p.spec(), &DominationParams::new(p.p(), 40, 1000, 6)).unwrap())
        .collect();
    experiment_line(&reports, |r| {
        format!(
            "C = {:.4}, spread {:.3}, slope {:.3}",
            check_value(r, "fitted_C"),
            check_value(r, "constant_spread"),
            check_value(r, "slope")
        )
    })
}

fn c7_atom_uniform() -> Outcome {
    let reports: Vec<ExperimentReport> = Preset::ALL
        .iter()
        .map(|p| run_atom_uniform(&p.spec(), &AtomUniformParams::new(p.p(), 100, 7)).unwrap())
        .collect();
    experiment_line(&reports, |r| {
        format!("slope {:.3}, far/origin {:.3}", check_value(r, "slope"), check_value(r, "far_over_origin"))
    })
}

fn c8_regions() -> Outcome {
    let r = run_regions(&FractionalSpec::reflection_pair(), &RegionsParams::new(200, 8)).unwrap();
    let violations = r.records.iter().filter(|x| x.case == "I1" && !x.pass).count();
    let worst = r.records.iter().filter(|x| x.case == "I1").map(|x| x.ratio).fold(0.0, f64::max);
    let pass = r.passed() && violations == 0 && r.records.iter().filter(|x| x.case == "I1").count() == 200;
    let mut detail = format!("200 draws, {violations} I1 violations, max I1 sum/majorant {worst:.3}");
    for f in r.failures() {
        detail.push_str("; ");
        detail.push_str(&f);
    }
    outcome(pass, detail)
}

fn c9_hardy() -> Outcome {
    let grid = DilationGrid::default();
    let delta = LatticeSequence::delta(LatticeIndex::origin(1), 1.0);
    let mut worst: f64 = 0.0;
    for j in [5i64, 10, 20] {
        let m = hardy_maximal(&delta, &grid, &CubeWindow::new(LatticeIndex(vec![j]), 0)).unwrap();
        let exact = delta_maximal_closed_form(1, j as f64);
        worst = worst.max((m.get(&[j]) - exact).abs() / exact);
    }
    let d = hp_quasinorm(&delta, 1.0, &grid, None).unwrap();
    let a = make_atom_with(&CubeWindow::centered_at_origin(1, 4), 1.0, 9, AtomShape::Coarse).unwrap();
    let e = hp_quasinorm(&a.sequence, 1.0, &grid, None).unwrap();
    let doubled = CubeWindow::new(e.window.center.clone(), 2 * e.window.radius);
    let e2 = hp_quasinorm(&a.sequence, 1.0, &grid, Some(&doubled)).unwrap();
    let drift = (e2.value - e.value).abs() / e.value;
    let pass = worst <= 0.01 && d.divergent && !e.divergent && e.value.is_finite() && drift <= 0.02;
    outcome(
        pass,
        format!(
            "delta optimum error {:.3}%, delta divergent = {}, atom {:.5} -> {:.5} ({:.3}%)",
            100.0 * worst,
            d.divergent,
            e.value,
            e2.value,
            100.0 * drift
        ),
    )
}

fn c10_determinism() -> Outcome {
    let runs: Vec<Box<dyn Fn() -> ExperimentReport>> = vec![
        Box::new(|| run_tail(&TailParams::default()).unwrap()),
        Box::new(|| {
            run_lplq(&FractionalSpec::reflection_pair(), &LplqParams { p: 2.0, trials: 4, radii: vec![8, 16], seed: 10 })
                .unwrap()
        }),
        Box::new(|| {
            let mut p = AtomUniformParams::new(1.0, 12, 10);
            p.ns = vec![1, 2, 4];
            run_atom_uniform(&FractionalSpec::riesz(1, 0.5), &p).unwrap()
        }),
        Box::new(|| {
            let mut p = DominationParams::new(1.0, 2, 20, 10);
            p.ns = vec![1, 2, 4];
            run_domination(&FractionalSpec::reflection_pair(), &p).unwrap()
        }),
        Box::new(|| run_regions(&FractionalSpec::reflection_pair(), &RegionsParams::new(12, 10)).unwrap()),
        Box::new(|| {
            run_maximal_bound(&MaximalBoundParams { n: 1, p: 1.5, alpha: 0.5, trials: 3, radii: vec![8, 16], seed: 10 })
                .unwrap()
        }),
    ];
    let same = runs.iter().filter(|f| f().to_csv() == f().to_csv()).count();
    outcome(same == runs.len(), format!("{same}/{} experiments byte-identical on rerun", runs.len()))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("1 tail sum majorant", Duration::from_secs(60), c1_tail),
        ("2 kernel exactness", Duration::from_secs(30), c2_kernel),
        ("3 riesz reduction", Duration::from_secs(30), c3_riesz),
        ("4 maximal fast = direct", Duration::from_secs(120), c4_maximal),
        ("5 atom corpus", Duration::from_secs(60), c5_atoms),
        ("6 pointwise domination", Duration::from_secs(300), c6_domination),
        ("7 uniform atom estimate", Duration::from_secs(600), c7_atom_uniform),
        ("8 region majorants", Duration::from_secs(120), c8_regions),
        ("9 hardy sanity", Duration::from_secs(120), c9_hardy),
        ("10 determinism", Duration::from_secs(30), c10_determinism),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {} [{:.1}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
