use degen_eigen::operator::builtins;
use degen_eigen::OperatorSpec;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn ops() -> Vec<OperatorSpec> {
    let mut v = builtins(2);
    v.extend(builtins(3));
    v
}

fn vector(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-2.0..2.0f64, n).prop_map(DVector::from_vec)
}

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0..2.0f64, n * n).prop_map(move |v| {
        let m = DMatrix::from_vec(n, n, v);
        (&m + m.transpose()) * 0.5
    })
}

/// (operator, p, X) with dimensions matching the operator.
fn case() -> impl Strategy<Value = (OperatorSpec, DVector<f64>, DMatrix<f64>)> {
    (0..ops().len()).prop_flat_map(|i| {
        let op = ops()[i];
        let n = op.n();
        (Just(op), vector(n), symmetric(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn hessian_homogeneity((op, p, x) in case(), theta in 0.01..10.0f64) {
        let k2 = op.signature().k2 as i32;
        let h = op.eval(&p, &x).unwrap();
        let ht = op.eval(&p, &(&x * theta)).unwrap();
        let want = theta.powi(k2) * h;
        prop_assert!((ht - want).abs() <= 1e-12 * (1.0 + want.abs()), "{op}: {ht} vs {want}");
    }

    #[test]
    fn gradient_homogeneity((op, p, x) in case(), theta in -10.0..10.0f64) {
        let k1 = op.signature().k1;
        let h = op.eval(&p, &x).unwrap();
        let hp = op.eval(&(&p * theta), &x).unwrap();
        let want = theta.abs().powf(k1) * h;
        prop_assert!((hp - want).abs() <= 1e-12 * (1.0 + want.abs()), "{op}: {hp} vs {want}");
    }

    #[test]
    fn degenerate_ellipticity((op, p, x) in case(), b in prop::collection::vec(-1.0..1.0f64, 9)) {
        let n = op.n();
        let b = DMatrix::from_fn(n, n, |i, j| b[i * 3 + j]);
        let psd = &b * b.transpose();
        let h = op.eval(&p, &x).unwrap();
        let hp = op.eval(&p, &(&x + psd)).unwrap();
        prop_assert!(hp - h >= -1e-12 * (1.0 + h.abs()), "{op}: {h} -> {hp}");
    }

    #[test]
    fn zero_hessian_is_zero((op, p, _x) in case()) {
        let n = op.n();
        prop_assert_eq!(op.eval(&p, &DMatrix::zeros(n, n)).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn radial_eval_is_direction_free(
        i in 0..18usize,
        r in 0.05..3.0f64,
        v1 in -3.0..3.0f64,
        v2 in -3.0..3.0f64,
        seeds in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 3), 32),
    ) {
        let op = ops()[i];
        prop_assume!(op.symmetric());
        let n = op.n();
        let g = op.radial_eval(r, v1, v2).unwrap();
        let mut values = Vec::new();
        for s in &seeds {
            let e = DVector::from_iterator(n, s.iter().cloned().take(n));
            prop_assume!(e.norm() > 1e-3);
            let e = e.normalize();
            let ee = &e * e.transpose();
            let x = (DMatrix::identity(n, n) - &ee) * (v1 / r) + ee * v2;
            values.push(op.eval(&(&e * v1), &x).unwrap());
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        let scale = 1.0 + g * g;
        prop_assert!(var / scale < 1e-24, "{op}: variance {var}");
        prop_assert!((mean - g).abs() <= 1e-10 * (1.0 + g.abs()), "{op}: {mean} vs {g}");
    }

    #[test]
    fn coercivity_is_monotone_in_s(i in 0..9usize, s in -5.0..10.0f64, ds in 0.0..3.0f64) {
        let op = builtins(2)[i];
        let (a, b) = (op.coercivity(s), op.coercivity(s + ds));
        // m1, m2 use I − s e⊗e (decreasing in s); m3, m4 use s e⊗e − I (increasing).
        for j in 0..4 {
            let (from, to) = if j < 2 { (a[j], b[j]) } else { (b[j], a[j]) };
            prop_assert!(to <= from + 1e-9 * (1.0 + from.abs()), "{op}: m{} {} -> {}", j + 1, a[j], b[j]);
        }
        prop_assert!(op.mlow(s) <= op.mhigh(s) + 1e-12);
    }
}

#[test]
fn every_builtin_meets_conditions_a_to_c() {
    for op in ops() {
        let r = op.check_conditions(7, 2000);
        assert!(r.required_pass(), "{op}: {r:?}");
        assert_eq!(r.d.passed, op.symmetric(), "{op}");
    }
}

#[test]
fn profile_samples_cover_the_scan_range() {
    for op in builtins(2) {
        let p = op.profile().unwrap();
        assert_eq!(p.samples.len(), degen_eigen::operator::S_SAMPLES);
        assert!(p.m1_hat > 0.0 && p.m4_hat < 0.0 && p.sigma > 0.0, "{op}");
        let s_bar = p.case.s_bar();
        assert!(op.mhigh(s_bar + 1e-6) < 0.0, "{op}: mhigh at s_bar {s_bar}");
        assert_eq!(p.to_csv().lines().count(), p.samples.len() + 1);
    }
}
