//! Bracketing of the principal eigenvalue on grid domains by continuation in λ.

use serde::{Deserialize, Serialize};

use crate::barrier::lambda_threshold;
use crate::error::{Error, Result};
use crate::grid::{constant_fn, solve_grid_bvp_from, FieldState, GridDomain, SolveOptions, Status};
use crate::operator::OperatorSpec;

/// Lower bound for λ_Ω rearranged from m_λ ≥ δ(1 + kλ/(λ_Ω − λ)): λ(1 + kδ/(m_λ − δ)).
pub fn lower_bound_from_solution(lam: f64, delta: f64, m_lam: f64, k: f64) -> Result<f64> {
    if !(lam > 0.0) || !(delta > 0.0) || !(k > 0.0) {
        return Err(Error::Input(format!("need lam, delta, k > 0, got {lam}, {delta}, {k}")));
    }
    if !(m_lam > delta) {
        return Err(Error::Precondition(format!("sup u = {m_lam} does not exceed delta = {delta}")));
    }
    Ok(lam * (1.0 + k * delta / (m_lam - delta)))
}

/// Super-solution increment ε = θλk(δ/m)/(1 − θδ/m).
pub fn epsilon_improvement(lam: f64, theta: f64, delta: f64, m: f64, k: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Input(format!("theta must lie in (0, 1), got {theta}")));
    }
    if !(delta > 0.0) || !(m >= delta) {
        return Err(Error::Input(format!("need m >= delta > 0, got m={m}, delta={delta}")));
    }
    let r = theta * delta / m;
    Ok(theta * lam * k * (delta / m) / (1.0 - r))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub lam: f64,
    /// sup u_λ, for converged solves only.
    pub m_lam: Option<f64>,
    pub inf_u: Option<f64>,
    pub status: Status,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenBracket {
    pub lam_lo: f64,
    pub lam_hi: f64,
    pub history: Vec<HistoryEntry>,
    pub k: f64,
    pub delta: f64,
    pub seed: f64,
    pub tol: f64,
}

impl EigenBracket {
    pub fn contains(&self, lam: f64) -> bool {
        self.lam_lo <= lam && lam <= self.lam_hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lam_lo + self.lam_hi)
    }

    pub fn feasible(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.history.iter().filter(|e| e.status == Status::Converged)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenOptions {
    pub solve: SolveOptions,
    /// Geometric growth floor for the continuation step.
    pub growth: f64,
    pub max_solves: usize,
    /// ρ for case-II thresholds; defaults to the domain's.
    pub rho: Option<f64>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { solve: SolveOptions::default(), growth: 1.5, max_solves: 200, rho: None }
    }
}

/// One solve with the stall policy: a stalled run is retried once at half the step fraction,
/// then counted as blow-up.
fn solve_classified(
    op: &OperatorSpec,
    dom: &GridDomain,
    lam: f64,
    opts: &SolveOptions,
    warm: Option<&[f64]>,
) -> Result<FieldState> {
    let s = solve_grid_bvp_from(op, dom, lam, opts, warm)?;
    if s.status != Status::Stalled {
        return Ok(s);
    }
    let half = SolveOptions { theta: 0.5 * opts.theta, ..opts.clone() };
    let mut s = solve_grid_bvp_from(op, dom, lam, &half, warm)?;
    if s.status == Status::Stalled {
        s.status = Status::Blowup;
    }
    Ok(s)
}

fn entry(s: &FieldState) -> HistoryEntry {
    let ok = s.status == Status::Converged;
    HistoryEntry {
        lam: s.lam,
        m_lam: ok.then(|| s.sup()),
        inf_u: ok.then(|| s.inf()),
        status: s.status,
        iterations: s.iteration,
        residual: s.residual_sup,
    }
}

/// Brackets the discrete λ_Ω of `op` on `dom` with constant boundary data δ.
pub fn estimate_lambda(op: &OperatorSpec, dom: &GridDomain, delta: f64, tol: f64) -> Result<EigenBracket> {
    estimate_lambda_with(op, dom, delta, tol, &EigenOptions::default())
}

pub fn estimate_lambda_with(
    op: &OperatorSpec,
    dom: &GridDomain,
    delta: f64,
    tol: f64,
    opts: &EigenOptions,
) -> Result<EigenBracket> {
    if !(delta > 0.0) {
        return Err(Error::Input(format!("delta must be positive, got {delta}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Input(format!("tol must be positive, got {tol}")));
    }
    let dom = dom.with_boundary(constant_fn(delta));
    let k = op.signature().k;
    let (_, nu) = dom.weight_bounds();
    let threshold = lambda_threshold(op, nu, dom.diameter(), opts.rho.or(dom.default_rho()))?;
    let seed = 0.9 * threshold.value;
    let first = solve_classified(op, &dom, seed, &opts.solve, None)?;
    let mut history = vec![entry(&first)];
    if first.status != Status::Converged {
        return Err(Error::InconsistentScheme(format!(
            "seed lambda {seed} (0.9 x threshold) did not converge: {:?} after {} iterations",
            first.status, first.iteration
        )));
    }
    let mut lam_lo = seed;
    let mut lam_hi = f64::INFINITY;
    let mut best = first;
    for _ in 1..opts.max_solves {
        if lam_hi.is_finite() && (lam_hi - lam_lo) / lam_lo <= tol {
            break;
        }
        let m = best.sup();
        let bound = lower_bound_from_solution(best.lam, delta, m, k).unwrap_or(lam_lo);
        let lam = if lam_hi.is_finite() {
            let lo = if bound < lam_hi { bound.max(lam_lo) } else { lam_lo };
            0.5 * (lo + lam_hi)
        } else {
            bound.max(opts.growth * lam_lo)
        };
        let s = solve_classified(op, &dom, lam, &opts.solve, Some(&best.u))?;
        history.push(entry(&s));
        match s.status {
            Status::Converged if s.inf() > 0.0 => {
                lam_lo = lam;
                best = s;
            }
            _ => lam_hi = lam_hi.min(lam),
        }
    }
    if !lam_hi.is_finite() || (lam_hi - lam_lo) / lam_lo > tol {
        return Err(Error::Search(format!(
            "no bracket within tolerance {tol} after {} solves: [{lam_lo}, {lam_hi}]",
            history.len()
        )));
    }
    Ok(EigenBracket { lam_lo, lam_hi, history, k, delta, seed, tol })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeProbe {
    pub x: f64,
    pub y: f64,
    pub lam_minus: f64,
    pub lam_plus: f64,
    pub slope: f64,
    pub lower: f64,
    pub upper: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub passed: bool,
    /// Smallest relative margin to either bound (negative on failure).
    pub margin: f64,
    pub slack: f64,
    pub probes: Vec<DerivativeProbe>,
}

/// Checks finite-difference λ-slopes of point values against
/// v log(v/δ)/(kλ) ≤ ∂_λ v ≤ (M_λ/(kδ))(v − δ)/λ. For a pair λ₋ < λ₊ the lower bound is taken
/// at λ₋ and the upper bound at λ₊, which brackets the secant slope of a convex λ ↦ v.
/// `values[i][j]` is v at probe j for `lambdas[i]`, `sups[i]` the corresponding M_λ.
pub fn derivative_bounds_check(
    lambdas: &[f64],
    points: &[(f64, f64)],
    values: &[Vec<f64>],
    sups: &[f64],
    delta: f64,
    k: f64,
    slack: f64,
) -> DerivativeReport {
    let mut probes = Vec::new();
    let mut margin = f64::INFINITY;
    for i in 1..lambdas.len() {
        let (lm, lp) = (lambdas[i - 1], lambdas[i]);
        for (j, &(x, y)) in points.iter().enumerate() {
            let (vm, vp) = (values[i - 1][j], values[i][j]);
            let slope = (vp - vm) / (lp - lm);
            let lower = vm * (vm / delta).max(1.0).ln() / (k * lm);
            let upper = sups[i] / (k * delta) * (vp - delta).max(0.0) / lp;
            let lo_ok = slope >= lower * (1.0 - slack) - 1e-12;
            let hi_ok = slope <= upper * (1.0 + slack) + 1e-12;
            let scale = upper.abs().max(lower.abs()).max(1e-12);
            margin = margin.min((slope - lower * (1.0 - slack)) / scale).min((upper * (1.0 + slack) - slope) / scale);
            probes.push(DerivativeProbe { x, y, lam_minus: lm, lam_plus: lp, slope, lower, upper, passed: lo_ok && hi_ok });
        }
    }
    let passed = probes.iter().all(|p| p.passed);
    DerivativeReport { passed, margin: if probes.is_empty() { 0.0 } else { margin }, slack, probes }
}

/// Solves at every λ (increasing, warm-started) and checks λ-slopes at the nodes nearest to
/// the probe points.
pub fn lambda_derivative_check(
    op: &OperatorSpec,
    dom: &GridDomain,
    delta: f64,
    lambdas: &[f64],
    probe_points: &[(f64, f64)],
    opts: &SolveOptions,
) -> Result<DerivativeReport> {
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("lambda grid must be strictly increasing".into()));
    }
    let dom = dom.with_boundary(constant_fn(delta));
    let nodes: Vec<usize> = probe_points
        .iter()
        .map(|&(x, y)| dom.nearest_node(x, y).ok_or_else(|| Error::Domain("empty domain".into())))
        .collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = nodes.iter().map(|&l| dom.position(l)).collect();
    let mut values = Vec::new();
    let mut sups = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    for &lam in lambdas {
        let s = solve_grid_bvp_from(op, &dom, lam, opts, warm.as_deref())?;
        if s.status != Status::Converged {
            return Err(Error::Numerical(format!("lambda {lam} is not feasible: {:?}", s.status)));
        }
        let field = dom.lattice_field(&s.u);
        values.push(nodes.iter().map(|&l| field[l]).collect());
        sups.push(s.sup());
        warm = Some(s.u);
    }
    Ok(derivative_bounds_check(lambdas, &points, &values, &sups, delta, op.signature().k, 0.1))
}
