//! One pass/fail line per acceptance criterion. Exits non-zero when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use degen_eigen::barrier::{lambda_threshold, BarrierShape, BarrierSpec, Sign};
use degen_eigen::eigen::{derivative_bounds_check, estimate_lambda, lambda_derivative_check, EigenBracket};
use degen_eigen::grid::*;
use degen_eigen::operator::builtins;
use degen_eigen::radial::{eigen_radial, scaling_invariant_check, RadialSolution};
use degen_eigen::verify::verify_solution;
use degen_eigen::OperatorSpec;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Fields collected from criteria 1 to 6 for the property battery.
#[derive(Default)]
struct Fields {
    profiles: Vec<(String, RadialSolution)>,
    grid: Vec<(OperatorSpec, GridDomain, FieldState)>,
    brackets: Vec<(String, EigenBracket)>,
}

fn unit_disk(h: f64) -> GridDomain {
    build_domain(&Shape::Disk { radius: 1.0 }, h, constant_fn(1.0), constant_fn(1.0), 16).unwrap()
}

fn unit_square(h: f64) -> GridDomain {
    build_domain(&Shape::Rectangle { a: 1.0, b: 1.0 }, h, constant_fn(1.0), constant_fn(1.0), 16).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn radial_eigenvalue(f: &mut Fields) -> Outcome {
    let t = Instant::now();
    let e = eigen_radial(&OperatorSpec::laplacian(2), 1.0, 1e-10).unwrap();
    let dt = t.elapsed();
    let want = bessel_j0_first_zero().powi(2);
    let err = rel(e.lambda_star, want);
    f.profiles.push(("laplacian".into(), e.profile));
    outcome(
        err <= 1e-4 && dt < Duration::from_secs(5) && rel(want, 5.78318596) < 1e-8,
        format!("lambda*={:.8} oracle={want:.8} rel={err:.1e} in {dt:.2?}", e.lambda_star),
    )
}

fn grid_eigenvalue(f: &mut Fields) -> Outcome {
    let op = OperatorSpec::laplacian(2);
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, dom, want) in [
        ("disk", unit_disk(1.0 / 64.0), disk_laplacian_eigenvalue()),
        ("square", unit_square(1.0 / 64.0), square_laplacian_eigenvalue()),
    ] {
        let t = Instant::now();
        let b = estimate_lambda(&op, &dom, 1.0, 0.02).unwrap();
        let dt = t.elapsed();
        let inside = b.lam_lo >= want * 0.98 && b.lam_hi <= want * 1.02;
        ok &= inside && dt < Duration::from_secs(120);
        parts.push(format!("{name} [{:.4}, {:.4}] vs {want:.4} in {dt:.1?}", b.lam_lo, b.lam_hi));
        let lo = estimate_field(&op, &dom, b.lam_lo);
        f.grid.push((op, dom, lo));
        f.brackets.push((name.into(), b));
    }
    outcome(ok, parts.join("; "))
}

fn estimate_field(op: &OperatorSpec, dom: &GridDomain, lam: f64) -> FieldState {
    solve_grid_bvp(op, dom, lam, &SolveOptions::default()).unwrap()
}

fn scaling_law(f: &mut Fields) -> Outcome {
    let ops = [
        OperatorSpec::laplacian(2),
        OperatorSpec::inf_type(2, 0.0).unwrap(),
        OperatorSpec::pucci_plus(2, 1.0, 2.0, 0.0).unwrap(),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for op in ops {
        let r = scaling_invariant_check(&op, &[0.5, 1.0, 2.0], 1e-3).unwrap();
        ok &= r.passed;
        parts.push(format!("{op}: spread {:.1e}", r.spread));
        f.profiles.push((op.to_string(), eigen_radial(&op, 1.0, 1e-9).unwrap().profile));
    }
    // The infinity-type value is also pinned by its closed form.
    let inf = eigen_radial(&ops[1], 1.0, 1e-10).unwrap().lambda_star;
    let closed = rel(inf, disk_infinity_eigenvalue());
    ok &= closed < 1e-4;
    parts.push(format!("inf lambda*={inf:.6} vs pi^4/64 rel={closed:.1e}"));
    outcome(ok, parts.join("; "))
}

fn pucci_degeneration(f: &mut Fields) -> Outcome {
    let op = OperatorSpec::pucci_plus(2, 1.0, 1.0, 0.0).unwrap();
    let e = eigen_radial(&op, 1.0, 1e-10).unwrap();
    let lap = eigen_radial(&OperatorSpec::laplacian(2), 1.0, 1e-10).unwrap();
    let err = rel(e.lambda_star, lap.lambda_star);
    f.profiles.push((op.to_string(), e.profile));
    outcome(err <= 1e-4, format!("pucci lambda*={:.8} laplacian={:.8} rel={err:.1e}", e.lambda_star, lap.lambda_star))
}

fn threshold_feasibility(f: &mut Fields) -> Outcome {
    let dom = unit_disk(1.0 / 32.0);
    let (_, nu) = dom.weight_bounds();
    let mut failures = Vec::new();
    let t = Instant::now();
    for op in builtins(2) {
        let th = lambda_threshold(&op, nu, dom.diameter(), dom.default_rho()).unwrap().value;
        let s = solve_grid_bvp(&op, &dom, 0.9 * th, &SolveOptions::default()).unwrap();
        if s.status != Status::Converged || s.inf() <= dom.boundary_min {
            failures.push(format!("{op}: {:?} inf={}", s.status, s.inf()));
        }
        f.grid.push((op, dom.clone(), s));
    }
    let detail = format!("{} builtins at h=1/32 in {:.1?}, failures: {:?}", builtins(2).len(), t.elapsed(), failures);
    outcome(failures.is_empty(), detail)
}

fn blowup_bracket(f: &mut Fields) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for (_, b) in &f.brackets {
        for e in b.feasible() {
            let m = e.m_lam.unwrap();
            let bound = b.delta * (1.0 + b.k * e.lam / (b.lam_hi - e.lam));
            worst = worst.min((m - bound * 0.95) / bound);
            count += 1;
        }
    }
    outcome(count > 0 && worst >= 0.0, format!("{count} feasible entries, worst relative margin {worst:.3}"))
}

fn lipschitz_in_lambda() -> Outcome {
    let op = OperatorSpec::laplacian(2);
    let dom = unit_disk(1.0 / 32.0);
    let lambdas = [3.0, 3.25, 3.5, 3.75, 4.0];
    let mut probes = Vec::new();
    for (i, r) in [0.1, 0.3, 0.5, 0.7].iter().enumerate() {
        for j in 0..6 {
            let a = (j as f64 + 0.25 * i as f64) * std::f64::consts::PI / 3.0;
            probes.push((r * a.cos(), r * a.sin()));
        }
    }
    let grid = lambda_derivative_check(&op, &dom, 1.0, &lambdas, &probes, &SolveOptions::default()).unwrap();

    // The same bounds on the closed form, and grid secants against its λ-derivative.
    let values: Vec<Vec<f64>> = lambdas
        .iter()
        .map(|&l| probes.iter().map(|&(x, y)| bessel_solution(l, 1.0, 1.0, x.hypot(y))).collect())
        .collect();
    let sups: Vec<f64> = lambdas.iter().map(|&l| bessel_solution(l, 1.0, 1.0, 0.0)).collect();
    let exact = derivative_bounds_check(&lambdas, &probes, &values, &sups, 1.0, 1.0, 0.1);
    let mut slope_err: f64 = 0.0;
    for p in &grid.probes {
        let mid = 0.5 * (p.lam_minus + p.lam_plus);
        let want = bessel_solution_dlam(mid, 1.0, 1.0, p.x.hypot(p.y));
        slope_err = slope_err.max(rel(p.slope, want));
    }
    outcome(
        grid.passed && exact.passed && slope_err <= 0.1 && probes.len() >= 20,
        format!(
            "{} probes x {} lambdas: grid margin {:.3}, closed-form margin {:.3}, slope vs Bessel rel {:.3}",
            probes.len(),
            lambdas.len(),
            grid.margin,
            exact.margin,
            slope_err
        ),
    )
}

fn homogeneity_samples() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ops: Vec<OperatorSpec> = builtins(2).into_iter().chain(builtins(3)).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let op = ops[rng.gen_range(0..ops.len())];
        let n = op.n();
        let p = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
        let x = (&m + m.transpose()) * 0.5;
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let t = rng.gen_range(0.01..10.0);
        let s = op.signature();
        let h = op.eval(&p, &x).unwrap();
        let scale = 1.0 + h.abs();
        let hess = op.eval(&p, &(&x * t)).unwrap() - t.powi(s.k2 as i32) * h;
        let grad = op.eval(&(&p * t), &x).unwrap() - t.powf(s.k1) * h;
        let mono = (h - op.eval(&p, &(&x + &b * b.transpose())).unwrap()).max(0.0);
        worst = worst.max(hess.abs() / (1.0 + (t.powi(s.k2 as i32) * h).abs())).max(grad.abs() / (1.0 + (t.powf(s.k1) * h).abs())).max(mono / scale);
    }
    (worst <= 1e-12, format!("homogeneity/monotonicity worst {worst:.1e}"))
}

fn property_suites(f: &Fields) -> Outcome {
    let (mut ok, mut parts) = {
        let (ok, d) = homogeneity_samples();
        (ok, vec![d])
    };
    let mut radial_bad = Vec::new();
    for (name, p) in &f.profiles {
        let n = p.v.len();
        let positive = p.v[..n - 1].iter().all(|&v| v > 0.0);
        let monotone = p.v.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        if !(positive && monotone) {
            radial_bad.push(name.clone());
        }
    }
    ok &= radial_bad.is_empty();
    parts.push(format!("{} radial profiles, bad {radial_bad:?}", f.profiles.len()));

    let mut checks = 0;
    let mut failed = Vec::new();
    let mut skipped = 0;
    for (op, dom, s) in &f.grid {
        if s.status != Status::Converged {
            continue;
        }
        let rep = verify_solution(op, s, dom).unwrap();
        checks += rep.checks.len();
        skipped += rep.skipped.len();
        failed.extend(rep.checks.iter().filter(|c| !c.passed).map(|c| format!("{op}/{}", c.check_id)));
        // Discrete comparison: the constant boundary value is a sub-solution below every field.
        let floor = FieldState::from_values(vec![dom.boundary_min; s.u.len()], s.lam);
        if !comparison_check(&floor, s, dom, 1e-9).passed {
            failed.push(format!("{op}/comparison"));
        }
        checks += 1;
    }
    ok &= failed.is_empty();
    parts.push(format!("{} fields, {checks} checks, {skipped} skipped, failed {failed:?}", f.grid.len()));
    outcome(ok, parts.join("; "))
}

fn consistency_orders_check() -> Outcome {
    let lap = consistency_orders(
        &OperatorSpec::laplacian(2),
        &BarrierSpec::new(BarrierShape::Power { beta: 4.0 }, Sign::Minus, 1.0, 1.0, vec![0.0, 0.0]).unwrap(),
    );
    let inf = OperatorSpec::inf_type(2, 0.0).unwrap();
    let cone = consistency_orders(
        &inf,
        &BarrierSpec::new(BarrierShape::AlphaCone, Sign::Minus, 1.0, 1.0, vec![0.0, 0.0]).unwrap(),
    );
    let ok = lap.iter().all(|&p| p >= 1.9) && cone.iter().all(|&p| p >= 2.0 / 3.0);
    outcome(ok, format!("laplacian orders {lap:.2?}, infinity orders {cone:.2?}"))
}

fn main() {
    let mut fields = Fields::default();
    let mut all = true;
    let mut report = |id: usize, name: &str, run: &mut dyn FnMut(&mut Fields) -> Outcome, fields: &mut Fields| {
        let t = Instant::now();
        let o = run(fields);
        all &= o.passed;
        println!(
            "criterion {id} {name}: {} ({:.1?}) {}",
            if o.passed { "PASS" } else { "FAIL" },
            t.elapsed(),
            o.detail
        );
    };
    report(1, "radial eigenvalue", &mut radial_eigenvalue, &mut fields);
    report(2, "grid eigenvalue", &mut grid_eigenvalue, &mut fields);
    report(3, "scaling law", &mut scaling_law, &mut fields);
    report(4, "pucci degeneration", &mut pucci_degeneration, &mut fields);
    report(5, "threshold feasibility", &mut threshold_feasibility, &mut fields);
    report(6, "blow-up bracket", &mut blowup_bracket, &mut fields);
    report(7, "lipschitz in lambda", &mut |_| lipschitz_in_lambda(), &mut fields);
    let snapshot = std::mem::take(&mut fields);
    report(8, "property suites", &mut |_| property_suites(&snapshot), &mut fields);
    report(9, "consistency orders", &mut |_| consistency_orders_check(), &mut fields);
    if !all {
        std::process::exit(1);
    }
}
