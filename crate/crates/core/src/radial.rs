//! Radial boundary-value problem and first eigenpair on balls for rotation-invariant operators.

use serde::{Deserialize, Serialize};

use crate::barrier::lambda_threshold;
use crate::error::{Error, Result};
use crate::operator::OperatorSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProblem {
    pub op: OperatorSpec,
    pub radius: f64,
    pub delta: f64,
    pub lam: f64,
    pub a0: f64,
    pub steps: usize,
    pub tol: f64,
    pub v0_max: Option<f64>,
}

impl RadialProblem {
    pub fn new(op: OperatorSpec, radius: f64, delta: f64, lam: f64) -> Self {
        RadialProblem { op, radius, delta, lam, a0: 1.0, steps: 4096, tol: 1e-5, v0_max: None }
    }

    fn validate(&self) -> Result<()> {
        if !self.op.symmetric() {
            return Err(Error::Unsupported(format!("{}", self.op)));
        }
        if !(self.radius > 0.0 && self.a0 > 0.0) {
            return Err(Error::Input("radius and a0 must be positive".into()));
        }
        if !(self.delta >= 0.0 && self.lam >= 0.0) {
            return Err(Error::Input("delta and lam must be nonnegative".into()));
        }
        if self.steps < 64 {
            return Err(Error::Input(format!("at least 64 steps required, got {}", self.steps)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    pub residual_sup: f64,
    pub v0: f64,
    pub monotone: bool,
    pub lam: f64,
    pub delta: f64,
    pub radius: f64,
}

impl RadialSolution {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,v,dv\n");
        for i in 0..self.r.len() {
            out.push_str(&format!("{},{},{}\n", self.r[i], self.v[i], self.dv[i]));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lambda": self.lam,
            "v0": self.v0,
            "residual_sup": self.residual_sup,
            "delta": self.delta,
            "radius": self.radius,
            "monotone": self.monotone,
        })
    }

    /// Linear interpolation of v at radius r.
    pub fn value_at(&self, r: f64) -> f64 {
        let i = self.r.partition_point(|&x| x < r);
        if i == 0 {
            return self.v[0];
        }
        if i >= self.r.len() {
            return *self.v.last().unwrap();
        }
        let t = (r - self.r[i - 1]) / (self.r[i] - self.r[i - 1]);
        self.v[i - 1] + t * (self.v[i] - self.v[i - 1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RadialOutcome {
    Solved(RadialSolution),
    /// No center value up to v0_max reaches the boundary value.
    Infeasible { zero_radius: Option<f64>, v_at_radius: f64, v0_needed: f64 },
}

impl RadialOutcome {
    pub fn solution(&self) -> Option<&RadialSolution> {
        match self {
            RadialOutcome::Solved(s) => Some(s),
            RadialOutcome::Infeasible { .. } => None,
        }
    }
}

/// Leading profile v ≈ v0 − c r^α with c = σ (λ a0)^{1/k} v0.
pub fn near_origin_expansion(op: &OperatorSpec, v0: f64, lam: f64, a0: f64) -> Result<(f64, f64)> {
    let sig = op.signature();
    let sigma = op.sigma()?;
    Ok((sig.alpha, sigma * (lam * a0).powf(1.0 / sig.k) * v0))
}

/// Coefficient c for which v0 − c r^α cancels the reaction exactly at r → 0 on the radial
/// operator itself. Agrees with `near_origin_expansion` whenever m1(ŝ) = −m4(ŝ).
fn start_coefficient(op: &OperatorSpec, v0: f64, lam: f64, a0: f64) -> f64 {
    let sig = op.signature();
    let a = sig.alpha;
    let g = -op.radial_unchecked(1.0, -a, -a * (a - 1.0));
    if lam == 0.0 || v0 == 0.0 {
        return 0.0;
    }
    (lam * a0 * v0.abs().powf(sig.k) / g).powf(1.0 / sig.k)
}

/// Solves G(r, v1, x) = target for x, G nondecreasing in x; warm started at `guess`.
fn invert_g(op: &OperatorSpec, r: f64, v1: f64, target: f64, guess: f64) -> Result<f64> {
    let f = |x: f64| op.radial_unchecked(r, v1, x) - target;
    let scale = 1e-14 * (1.0 + target.abs());
    let f0 = f(guess);
    if f0.abs() <= scale {
        return Ok(guess);
    }
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let mut step = 1.0f64.max(guess.abs()) * 1e-3;
    let (mut a, mut fa) = (guess, f0);
    let (mut b, mut fb);
    let mut expansions = 0;
    loop {
        b = guess + dir * step;
        fb = f(b);
        if fb.abs() <= scale {
            return Ok(b);
        }
        if fb.signum() != fa.signum() {
            break;
        }
        a = b;
        fa = fb;
        step *= 4.0;
        expansions += 1;
        if expansions > 80 || !fb.is_finite() {
            return Err(Error::Numerical(format!(
                "v'' inversion bracket failure at r={r}, v'={v1}, target={target}, last f={fb}"
            )));
        }
    }
    // Illinois regula falsi
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc.abs() <= scale || (b - a).abs() <= 1e-15 * (1.0 + c.abs()) {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

struct Trajectory {
    r: Vec<f64>,
    v: Vec<f64>,
    dv: Vec<f64>,
    /// First radius where v reaches zero, by linear interpolation.
    zero: Option<f64>,
}

/// Outward integration from the near-origin expansion with classic RK4 at fixed step.
fn integrate(op: &OperatorSpec, v0: f64, lam: f64, a0: f64, step: f64, r_end: f64, stop_at_zero: bool) -> Result<Trajectory> {
    let sig = op.signature();
    let alpha = sig.alpha;
    let c = start_coefficient(op, v0, lam, a0);
    let reaction = |v: f64| -lam * a0 * v.abs().powf(sig.k - 1.0) * v;
    let mut warm = -c * alpha * (alpha - 1.0) * step.powf(alpha - 2.0);
    if !warm.is_finite() {
        warm = 0.0;
    }
    let rhs = |r: f64, v: f64, w: f64, warm: &mut f64| -> Result<(f64, f64)> {
        let x = invert_g(op, r, w, reaction(v), *warm)?;
        *warm = x;
        Ok((w, x))
    };
    let n_steps = (r_end / step).round() as usize;
    let mut r = vec![0.0];
    let mut v = vec![v0];
    let mut dv = vec![0.0];
    let r0 = step;
    let (mut y, mut yp) = (v0 - c * r0.powf(alpha), -c * alpha * r0.powf(alpha - 1.0));
    r.push(r0);
    v.push(y);
    dv.push(yp);
    let mut zero = None;
    for i in 1..n_steps {
        let ri = i as f64 * step;
        let (k1a, k1b) = rhs(ri, y, yp, &mut warm)?;
        let (k2a, k2b) = rhs(ri + 0.5 * step, y + 0.5 * step * k1a, yp + 0.5 * step * k1b, &mut warm)?;
        let (k3a, k3b) = rhs(ri + 0.5 * step, y + 0.5 * step * k2a, yp + 0.5 * step * k2b, &mut warm)?;
        let (k4a, k4b) = rhs(ri + step, y + step * k3a, yp + step * k3b, &mut warm)?;
        let ny = y + step / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        let nyp = yp + step / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        if !ny.is_finite() || !nyp.is_finite() {
            return Err(Error::Numerical(format!("profile overflow at r={}", ri + step)));
        }
        let rn = ri + step;
        if ny <= 0.0 && y > 0.0 && zero.is_none() {
            zero = Some(ri + step * y / (y - ny));
            if stop_at_zero {
                r.push(rn);
                v.push(ny);
                dv.push(nyp);
                break;
            }
        }
        y = ny;
        yp = nyp;
        r.push(rn);
        v.push(y);
        dv.push(yp);
    }
    Ok(Trajectory { r, v, dv, zero })
}

/// Sup over r ≥ R/16 of the ODE residual with v'' from centered differences,
/// relative to λ a0 v0^k (absolute when λ = 0).
fn ode_residual(op: &OperatorSpec, t: &Trajectory, lam: f64, a0: f64, upto: usize) -> f64 {
    let k = op.signature().k;
    let r_end = t.r[upto - 1];
    let scale = if lam > 0.0 { lam * a0 * t.v[0].abs().powf(k) } else { 1.0 };
    let mut worst: f64 = 0.0;
    for i in 1..upto.saturating_sub(1) {
        if t.r[i] < r_end / 16.0 {
            continue;
        }
        let h1 = t.r[i] - t.r[i - 1];
        let h2 = t.r[i + 1] - t.r[i];
        let d2 = 2.0 * (h1 * (t.v[i + 1] - t.v[i]) - h2 * (t.v[i] - t.v[i - 1])) / (h1 * h2 * (h1 + h2));
        let g = op.radial_unchecked(t.r[i], t.dv[i], d2);
        let res = g + lam * a0 * t.v[i].abs().powf(k - 1.0) * t.v[i];
        worst = worst.max(res.abs() / scale);
    }
    worst
}

/// Positive radial solution of G(r, v', v'') + λ a0 v^k = 0 on [0, R), v(R) = δ, by shooting
/// on the center value. The shooting map is linear in v0 (homogeneity), so the secant
/// iteration terminates after one correction.
pub fn solve_radial_bvp(p: &RadialProblem) -> Result<RadialOutcome> {
    p.validate()?;
    let step = p.radius / p.steps as f64;
    let v0_max = p.v0_max.unwrap_or(1e6 * p.delta.max(f64::MIN_POSITIVE));
    let shoot = |v0: f64| integrate(&p.op, v0, p.lam, p.a0, step, p.radius, true);

    let unit = shoot(1.0)?;
    let w_r = *unit.v.last().unwrap();
    if unit.zero.is_some() || w_r <= 0.0 || w_r * v0_max < p.delta {
        return Ok(RadialOutcome::Infeasible {
            zero_radius: unit.zero,
            v_at_radius: w_r,
            v0_needed: if w_r > 0.0 { p.delta / w_r } else { f64::INFINITY },
        });
    }
    let (mut x0, mut f0) = (1.0, w_r - p.delta);
    let mut x1 = if p.delta > 0.0 { p.delta / w_r } else { 0.0 };
    let mut traj = shoot(x1)?;
    for _ in 0..20 {
        let f1 = traj.v.last().unwrap() - p.delta;
        if f1.abs() <= p.tol * p.delta.max(f64::MIN_POSITIVE) || f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        traj = shoot(x1)?;
    }
    let upto = traj.r.len();
    let residual_sup = ode_residual(&p.op, &traj, p.lam, p.a0, upto);
    let monotone = traj.v.windows(2).all(|w| w[1] <= w[0] + 1e-14 * w[0].abs());
    Ok(RadialOutcome::Solved(RadialSolution {
        r: traj.r,
        v: traj.v,
        dv: traj.dv,
        residual_sup,
        v0: x1,
        monotone,
        lam: p.lam,
        delta: p.delta,
        radius: p.radius,
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialEigen {
    pub lambda_star: f64,
    pub zero_radius: f64,
    pub iterations: usize,
    pub profile: RadialSolution,
}

/// First eigenvalue on B_R: shoots v(0) = 1, v'(0) = 0 and bisects λ on the first zero radius.
pub fn eigen_radial(op: &OperatorSpec, radius: f64, tol: f64) -> Result<RadialEigen> {
    eigen_radial_with_steps(op, radius, tol, 4096)
}

pub fn eigen_radial_with_steps(op: &OperatorSpec, radius: f64, tol: f64, steps: usize) -> Result<RadialEigen> {
    if !op.symmetric() {
        return Err(Error::Unsupported(format!("{op}")));
    }
    if !(radius > 0.0) || !(tol > 0.0) {
        return Err(Error::Input("radius and tol must be positive".into()));
    }
    let step = radius / steps as f64;
    let zero_of = |lam: f64| -> Result<Option<f64>> {
        Ok(integrate(op, 1.0, lam, 1.0, step, 2.0 * radius, true)?.zero)
    };
    let seed = lambda_threshold(op, 1.0, 2.0 * radius, Some(radius))?.value / 2.0;
    let mut lo = seed;
    let mut hi = seed;
    let mut iterations = 0;
    loop {
        iterations += 1;
        match zero_of(hi)? {
            Some(z) if z < radius => break,
            _ => {
                lo = hi;
                hi *= 2.0;
                if hi > 1e6 * radius.powf(-op.signature().gamma).max(1.0) {
                    return Err(Error::Search(format!("no eigenvalue bracket in [{seed}, {hi}]")));
                }
            }
        }
    }
    let mut zero_radius = f64::NAN;
    let mut lam = hi;
    for _ in 0..200 {
        iterations += 1;
        lam = 0.5 * (lo + hi);
        match zero_of(lam)? {
            Some(z) if z < radius => {
                hi = lam;
                zero_radius = z;
            }
            Some(z) => {
                lo = lam;
                zero_radius = z;
            }
            None => lo = lam,
        }
        if (zero_radius - radius).abs() <= tol * radius || (hi - lo) <= 1e-14 * hi {
            break;
        }
    }
    let traj = integrate(op, 1.0, lam, 1.0, step, 2.0 * radius, true)?;
    let z = traj.zero.ok_or_else(|| Error::Search("profile has no zero at the final lambda".into()))?;
    let keep = traj.r.iter().take_while(|&&r| r < z).count();
    let residual_sup = ode_residual(op, &traj, lam, 1.0, keep);
    let mut r = traj.r[..keep].to_vec();
    let mut v = traj.v[..keep].to_vec();
    let mut dv = traj.dv[..keep].to_vec();
    let t = (z - r[keep - 1]) / (traj.r[keep] - r[keep - 1]);
    r.push(z);
    v.push(0.0);
    dv.push(traj.dv[keep - 1] + t * (traj.dv[keep] - traj.dv[keep - 1]));
    let monotone = v.windows(2).all(|w| w[1] <= w[0]);
    Ok(RadialEigen {
        lambda_star: lam,
        zero_radius: z,
        iterations,
        profile: RadialSolution { r, v, dv, residual_sup, v0: 1.0, monotone, lam, delta: 0.0, radius },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub gamma: f64,
    /// (R, λ*(R), λ*(R) R^γ)
    pub entries: Vec<(f64, f64, f64)>,
    pub spread: f64,
    pub tol: f64,
    pub passed: bool,
}

/// λ*(R) R^γ across radii; passes when the max relative spread is within tol.
pub fn scaling_invariant_check(op: &OperatorSpec, radii: &[f64], tol: f64) -> Result<ScalingReport> {
    let gamma = op.signature().gamma;
    let mut entries = Vec::new();
    for &r in radii {
        let e = eigen_radial(op, r, 1e-9)?;
        entries.push((r, e.lambda_star, e.lambda_star * r.powf(gamma)));
    }
    let spread = if entries.len() < 2 {
        0.0
    } else {
        let max = entries.iter().map(|e| e.2).fold(f64::MIN, f64::max);
        let min = entries.iter().map(|e| e.2).fold(f64::MAX, f64::min);
        (max - min) / min
    };
    Ok(ScalingReport { gamma, entries, spread, tol, passed: spread <= tol })
}
