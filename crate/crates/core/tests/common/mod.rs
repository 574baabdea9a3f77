//! Independent reference values shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// J0 by its power series, accurate to ~1e-15 for |x| ≤ 10.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..80 {
        term *= q / (m as f64 * m as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// First positive zero of J0 by bisection on the series.
pub fn bessel_j0_first_zero() -> f64 {
    let (mut lo, mut hi) = (2.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Laplacian Dirichlet eigenvalue of the unit disk, j₀,₁².
pub fn disk_laplacian_eigenvalue() -> f64 {
    bessel_j0_first_zero().powi(2)
}

/// Solution of Δv + λv = 0, v = δ on ∂B_R: δ J0(√λ r)/J0(√λ R).
pub fn bessel_solution(lam: f64, delta: f64, radius: f64, r: f64) -> f64 {
    delta * bessel_j0(lam.sqrt() * r) / bessel_j0(lam.sqrt() * radius)
}

/// ∂_λ of `bessel_solution` by a centred difference on the closed form.
pub fn bessel_solution_dlam(lam: f64, delta: f64, radius: f64, r: f64) -> f64 {
    let e = 1e-6 * lam;
    (bessel_solution(lam + e, delta, radius, r) - bessel_solution(lam - e, delta, radius, r)) / (2.0 * e)
}

/// Unit-square Laplacian eigenvalue 2π².
pub fn square_laplacian_eigenvalue() -> f64 {
    2.0 * PI * PI
}

/// Radial infinity-Laplacian eigenvalue on the unit disk. The profile equation v'²v'' = −λv³
/// has the first integral v'⁴ = λ(1 − v⁴) for v(0) = 1, so λ^{1/4} = ∫₀¹(1 − v⁴)^{−1/4}dv
/// = Γ(1/4)Γ(3/4)/4 = π√2/4.
pub fn disk_infinity_eigenvalue() -> f64 {
    PI.powi(4) / 64.0
}

/// Same quantity by midpoint quadrature of ∫₀¹(1 − v⁴)^{−1/4}dv after v = 1 − t⁴, with
/// 1 − v⁴ = t⁴(1 + v)(1 + v²) so the integrand 4t²((1 + v)(1 + v²))^{−1/4} is smooth.
pub fn disk_infinity_eigenvalue_quadrature() -> f64 {
    let n = 20_000;
    let mut s = 0.0;
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64;
        let v: f64 = 1.0 - t.powi(4);
        s += 4.0 * t * t * ((1.0 + v) * (1.0 + v * v)).powf(-0.25);
    }
    (s / n as f64).powi(4)
}

/// (1/2)v'' + v'/r + λv = 0 is the 3-ball radial Laplacian after λ → 2λ: λ* = π²/2.
pub fn disk_plap_half_eigenvalue() -> f64 {
    PI * PI / 2.0
}

use degen_eigen::barrier::{barrier_residual, BarrierSpec};
use degen_eigen::grid::{build_domain, scheme_residual, Shape};
use degen_eigen::OperatorSpec;
use std::sync::Arc;

/// Max |H_h[v] − H(Dv, D²v)| over interior disk nodes with 0.3 ≤ |x| ≤ 0.6 for a radial
/// barrier v, the exact value taken from the closed form.
pub fn barrier_consistency_error(op: &OperatorSpec, b: &BarrierSpec, h: f64) -> f64 {
    let (bb, o) = (b.clone(), *op);
    let g: degen_eigen::grid::ScalarFn = Arc::new(move |x: f64, y: f64| bb.value(&o, x.hypot(y)));
    let dom = build_domain(&Shape::Disk { radius: 1.0 }, h, g.clone(), Arc::new(|_, _| 1.0), 16).unwrap();
    let u: Vec<f64> = dom
        .interior
        .iter()
        .map(|&l| {
            let (x, y) = dom.position(l);
            g(x, y)
        })
        .collect();
    let mut err: f64 = 0.0;
    for (i, &l) in dom.interior.iter().enumerate() {
        let (x, y) = dom.position(l);
        let r = x.hypot(y);
        if (0.3..=0.6).contains(&r) {
            let exact = barrier_residual(op, b, r).unwrap();
            err = err.max((scheme_residual(op, &dom, &u, i) - exact).abs());
        }
    }
    err
}

/// Observed orders log2(e(h)/e(h/2)) over h ∈ {1/16, 1/32, 1/64}.
pub fn consistency_orders(op: &OperatorSpec, b: &BarrierSpec) -> Vec<f64> {
    let e: Vec<f64> = [16.0, 32.0, 64.0].iter().map(|n| barrier_consistency_error(op, b, 1.0 / n)).collect();
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
