mod common;

use common::*;
use degen_eigen::operator::builtins;
use degen_eigen::radial::{eigen_radial, scaling_invariant_check, solve_radial_bvp, RadialOutcome, RadialProblem};
use degen_eigen::OperatorSpec;
use proptest::prelude::*;

fn solved(op: OperatorSpec, lam: f64, delta: f64) -> degen_eigen::radial::RadialSolution {
    match solve_radial_bvp(&RadialProblem::new(op, 1.0, delta, lam)).unwrap() {
        RadialOutcome::Solved(s) => s,
        other => panic!("{op} at {lam}: {other:?}"),
    }
}

#[test]
fn bessel_oracle_is_self_consistent() {
    let j = bessel_j0_first_zero();
    assert!((j - 2.404825557695773).abs() < 1e-12);
    assert!(bessel_j0(j).abs() < 1e-14);
    assert!((bessel_j0(2.0) - 0.22389077914123567).abs() < 1e-14);
    assert!((disk_infinity_eigenvalue() - disk_infinity_eigenvalue_quadrature()).abs() < 1e-6);
}

#[test]
fn laplacian_profile_matches_bessel_solution() {
    let s = solved(OperatorSpec::laplacian(2), 4.0, 1.0);
    assert!((s.v0 - 1.0 / bessel_j0(2.0)).abs() < 1e-4 * s.v0, "v0 {}", s.v0);
    for r in [0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
        let want = bessel_solution(4.0, 1.0, 1.0, r);
        assert!((s.value_at(r) - want).abs() < 1e-4 * want, "r={r}: {} vs {want}", s.value_at(r));
    }
}

#[test]
fn laplacian_beyond_eigenvalue_is_infeasible() {
    let out = solve_radial_bvp(&RadialProblem::new(OperatorSpec::laplacian(2), 1.0, 1.0, 6.0)).unwrap();
    assert!(matches!(out, RadialOutcome::Infeasible { .. }));
}

#[test]
fn zero_lambda_is_flat() {
    let s = solved(OperatorSpec::inf_type(2, 0.0).unwrap(), 0.0, 2.0);
    assert!(s.v.iter().all(|&v| (v - 2.0).abs() < 1e-12));
}

#[test]
fn eigenvalues_match_closed_forms() {
    let cases = [
        (OperatorSpec::laplacian(2), disk_laplacian_eigenvalue(), 1e-6),
        (OperatorSpec::pucci_plus(2, 1.0, 1.0, 0.0).unwrap(), disk_laplacian_eigenvalue(), 1e-6),
        (OperatorSpec::pucci_minus(2, 1.0, 1.0, 0.0).unwrap(), disk_laplacian_eigenvalue(), 1e-6),
        (OperatorSpec::inf_type(2, 0.0).unwrap(), disk_infinity_eigenvalue(), 1e-4),
        (OperatorSpec::plap_type(2, 0.0, -0.5).unwrap(), disk_plap_half_eigenvalue(), 1e-6),
    ];
    for (op, want, tol) in cases {
        let got = eigen_radial(&op, 1.0, 1e-10).unwrap().lambda_star;
        assert!((got - want).abs() <= tol * want, "{op}: {got} vs {want}");
    }
}

#[test]
fn eigenvalue_scales_with_radius() {
    let one = eigen_radial(&OperatorSpec::laplacian(2), 1.0, 1e-10).unwrap().lambda_star;
    let two = eigen_radial(&OperatorSpec::laplacian(2), 2.0, 1e-10).unwrap().lambda_star;
    assert!((two - one / 4.0).abs() < 1e-6 * one);
    for op in builtins(2).into_iter().filter(|o| o.symmetric()) {
        let r = scaling_invariant_check(&op, &[0.5, 1.0, 2.0], 1e-3).unwrap();
        assert!(r.passed, "{op}: spread {}", r.spread);
    }
    assert!(scaling_invariant_check(&OperatorSpec::laplacian(2), &[1.0], 1e-3).unwrap().passed);
}

#[test]
fn eigen_profile_is_positive_then_zero() {
    for op in builtins(2).into_iter().filter(|o| o.symmetric()) {
        let e = eigen_radial(&op, 1.0, 1e-9).unwrap();
        let p = &e.profile;
        let n = p.v.len();
        assert!(p.v[..n - 1].iter().all(|&v| v > 0.0), "{op}");
        assert!((e.zero_radius - 1.0).abs() < 1e-6, "{op}");
    }
}

fn symmetric_op(i: usize) -> OperatorSpec {
    let ops: Vec<_> = builtins(2).into_iter().filter(|o| o.symmetric()).collect();
    ops[i % ops.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solutions_increase_with_lambda(i in 0..7usize, f1 in 0.05..0.85f64, df in 0.02..0.1f64, delta in 0.5..2.0f64) {
        let op = symmetric_op(i);
        let star = eigen_radial(&op, 1.0, 1e-9).unwrap().lambda_star;
        let (a, b) = (solved(op, f1 * star, delta), solved(op, (f1 + df) * star, delta));
        for r in [0.0, 0.25, 0.5, 0.75, 0.95] {
            prop_assert!(a.value_at(r) <= b.value_at(r) + 1e-6 * delta, "{op} r={r}");
        }
    }

    #[test]
    fn strong_minimum_and_blowup_bracket(i in 0..7usize, f in 0.05..0.95f64, delta in 0.5..2.0f64) {
        let op = symmetric_op(i);
        let star = eigen_radial(&op, 1.0, 1e-9).unwrap().lambda_star;
        let lam = f * star;
        let s = solved(op, lam, delta);
        let n = s.r.len();
        for j in 0..n - 1 {
            prop_assert!(s.v[j] > delta, "{op}: v({}) = {}", s.r[j], s.v[j]);
        }
        let k = op.signature().k;
        let bound = delta * (1.0 + k * lam / (star - lam));
        prop_assert!(s.v0 >= bound * 0.95, "{op}: m = {} < {bound}", s.v0);
    }
}
