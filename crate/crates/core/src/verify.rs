//! Runtime checks of comparison, extremum, Harnack and bound statements on computed fields.
//! Lattice fields hold values at interior and boundary nodes (see `GridDomain::lattice_field`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::barrier::{lambda_big_and_solution_bounds, sup_inf_bound};
use crate::error::{Error, Result};
use crate::grid::{scheme_apply, FieldState, GridDomain};
use crate::operator::{CaseTag, Family, OperatorSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: String,
    pub passed: bool,
    /// Worst-case slack left (negative on failure).
    pub margin: f64,
    pub witnesses: Vec<Witness>,
    pub detail: BTreeMap<String, f64>,
}

impl CheckResult {
    fn new(id: &str, margin: f64) -> Self {
        CheckResult { check_id: id.into(), passed: margin >= 0.0, margin, witnesses: Vec::new(), detail: BTreeMap::new() }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.detail.insert(key.into(), v);
        self
    }

    fn witness(mut self, dom: &GridDomain, lattice: Option<usize>, value: f64) -> Self {
        if let Some(l) = lattice {
            let (x, y) = dom.position(l);
            self.witnesses.push(Witness { x, y, value });
        }
        self
    }
}

/// Scheme consistency error model at spacing h: h² for linear operators, h^{2/3} for the
/// infinity family, h otherwise.
pub fn consistency_estimate(op: &OperatorSpec, h: f64) -> f64 {
    if op.is_linear() {
        h * h
    } else if matches!(op.family(), Family::InfType { .. }) {
        h.powf(2.0 / 3.0)
    } else {
        h
    }
}

/// Default relative slack max(5%, 4 · consistency estimate).
pub fn default_slack(op: &OperatorSpec, h: f64) -> f64 {
    0.05f64.max(4.0 * consistency_estimate(op, h))
}

fn interior_max(dom: &GridDomain, f: impl Fn(usize) -> f64) -> (f64, Option<usize>) {
    dom.interior.iter().fold((f64::NEG_INFINITY, None), |(m, at), &l| if f(l) > m { (f(l), Some(l)) } else { (m, at) })
}

fn boundary_max(dom: &GridDomain, f: impl Fn(usize) -> f64) -> (f64, Option<usize>) {
    dom.boundary.iter().fold((f64::NEG_INFINITY, None), |(m, at), &l| if f(l) > m { (f(l), Some(l)) } else { (m, at) })
}

/// sup_U u/v = sup_∂U u/v for a sub-solution u and a positive super-solution v.
pub fn quotient_comparison_check(u: &[f64], v: &[f64], dom: &GridDomain, slack: f64) -> Result<CheckResult> {
    if let Some(&l) = dom.interior.iter().chain(&dom.boundary).find(|&&l| !(v[l] > 0.0)) {
        let (x, y) = dom.position(l);
        return Err(Error::Precondition(format!("v = {} is not positive at ({x}, {y})", v[l])));
    }
    let ratio = |l: usize| u[l] / v[l];
    let (inner, at) = interior_max(dom, ratio);
    let (outer, bat) = boundary_max(dom, ratio);
    let margin = outer + slack * outer.abs() - inner;
    Ok(CheckResult::new("quotient_comparison", margin)
        .with("interior_max_ratio", inner)
        .with("boundary_max_ratio", outer)
        .witness(dom, at, inner)
        .witness(dom, bat, outer))
}

/// Harnack constant 1/(1 − (2/3)^β).
pub fn harnack_constant(beta: f64) -> f64 {
    1.0 / (1.0 - (2.0f64 / 3.0).powf(beta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnackOptions {
    /// Defaults to 2 − s̄ from the case classification.
    pub beta: Option<f64>,
    pub slack: f64,
    /// Allows case-II operators, for which the inequality is only conditional.
    pub experimental: bool,
}

impl Default for HarnackOptions {
    fn default() -> Self {
        HarnackOptions { beta: None, slack: 0.05, experimental: false }
    }
}

/// Harnack sup_{B_R} w ≤ C inf_{B_R} w and the Hölder bound
/// |w(x) − w(z)| ≤ (3R)^{−β} sup_{B_R} w |x − z|^β over node pairs in B_R(y).
pub fn harnack_holder_check(
    op: &OperatorSpec,
    w: &[f64],
    dom: &GridDomain,
    center: (f64, f64),
    radius: f64,
    opts: &HarnackOptions,
) -> Result<CheckResult> {
    let s_bar = match op.classify_case()? {
        CaseTag::CaseI { s_bar } => s_bar,
        CaseTag::CaseII { s_bar } if opts.experimental => s_bar,
        CaseTag::CaseII { .. } => {
            return Err(Error::Precondition(format!("Harnack check for case-II operator {op} needs the experimental flag")))
        }
    };
    let beta = opts.beta.unwrap_or(2.0 - s_bar);
    if !(beta > 0.0) {
        return Err(Error::Input(format!("beta must be positive, got {beta}")));
    }
    if !(radius > 0.0) || dom.distance_to_boundary(center.0, center.1) < 4.0 * radius {
        return Err(Error::Domain(format!("B_4R with R={radius} around {center:?} is not contained in the domain")));
    }
    let nodes: Vec<usize> = dom
        .interior
        .iter()
        .cloned()
        .filter(|&l| {
            let (x, y) = dom.position(l);
            (x - center.0).hypot(y - center.1) <= radius
        })
        .collect();
    if nodes.is_empty() {
        return Err(Error::Domain("no interior nodes in B_R".into()));
    }
    if let Some(&l) = nodes.iter().find(|&&l| !(w[l] > 0.0)) {
        return Err(Error::Precondition(format!("w = {} is not positive", w[l])));
    }
    let (sup, sup_at) = nodes.iter().fold((f64::NEG_INFINITY, 0), |a, &l| if w[l] > a.0 { (w[l], l) } else { a });
    let (inf, inf_at) = nodes.iter().fold((f64::INFINITY, 0), |a, &l| if w[l] < a.0 { (w[l], l) } else { a });
    let c = harnack_constant(beta);
    let harnack_margin = (c * inf * (1.0 + opts.slack) - sup) / sup;
    let holder = (3.0 * radius).powf(-beta) * sup;
    let stride = (nodes.len() / 1500).max(1);
    let mut holder_margin = f64::INFINITY;
    let mut worst_pair = (nodes[0], nodes[0]);
    for (a, &p) in nodes.iter().enumerate().step_by(stride) {
        let (px, py) = dom.position(p);
        for &q in nodes[a + 1..].iter().step_by(stride) {
            let (qx, qy) = dom.position(q);
            let bound = holder * (px - qx).hypot(py - qy).powf(beta) * (1.0 + opts.slack);
            let m = (bound - (w[p] - w[q]).abs()) / sup;
            if m < holder_margin {
                holder_margin = m;
                worst_pair = (p, q);
            }
        }
    }
    let margin = harnack_margin.min(holder_margin);
    Ok(CheckResult::new("harnack_holder", margin)
        .with("beta", beta)
        .with("C", c)
        .with("sup", sup)
        .with("inf", inf)
        .with("harnack_margin", harnack_margin)
        .with("holder_margin", holder_margin)
        .witness(dom, Some(sup_at), sup)
        .witness(dom, Some(inf_at), inf)
        .witness(dom, Some(worst_pair.0), w[worst_pair.0])
        .witness(dom, Some(worst_pair.1), w[worst_pair.1]))
}

/// v = u^β satisfies H_h[v] + β^k λ a v^k ≤ slack · scale at interior nodes, with u a positive
/// solution carrying the domain's boundary data and 0 < β ≤ 1.
pub fn change_of_variables_check(
    op: &OperatorSpec,
    u: &FieldState,
    beta: f64,
    lam: f64,
    dom: &GridDomain,
    slack: f64,
) -> Result<CheckResult> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Input(format!("beta must lie in (0, 1], got {beta}")));
    }
    if let Some(v) = u.u.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Precondition(format!("u = {v} is not positive")));
    }
    let g = dom.boundary_fn();
    let vdom = dom.with_boundary(std::sync::Arc::new(move |x, y| g(x, y).max(0.0).powf(beta)));
    let v: Vec<f64> = u.u.iter().map(|x| x.powf(beta)).collect();
    let k = op.signature().k;
    let hv = scheme_apply(op, &vdom, &v);
    let bk = beta.powf(k);
    let mut margin = f64::INFINITY;
    let mut at = None;
    let mut worst = 0.0;
    for (i, (&h, &vi)) in hv.iter().zip(&v).enumerate() {
        let react = bk * lam * dom.weight[i] * vi.powf(k);
        let r = h + react;
        let scale = react.abs().max(h.abs()).max(vi.abs().powf(k));
        let m = slack + 1e-10 - r / scale;
        if m < margin {
            margin = m;
            at = Some(dom.interior[i]);
            worst = r;
        }
    }
    Ok(CheckResult::new("change_of_variables", margin).with("beta", beta).with("worst_residual", worst).witness(dom, at, worst))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumMode {
    /// Interior sup ≤ boundary sup (sub-solutions).
    Max,
    /// Interior inf ≥ boundary inf, strictly when `strict` (super-solutions with positive reaction).
    Min { strict: bool },
}

pub fn extremum_principle_check(u: &[f64], dom: &GridDomain, mode: ExtremumMode, tol: f64) -> CheckResult {
    match mode {
        ExtremumMode::Max => {
            let (inner, at) = interior_max(dom, |l| u[l]);
            let (outer, bat) = boundary_max(dom, |l| u[l]);
            CheckResult::new("extremum_max", outer + tol - inner)
                .with("interior_sup", inner)
                .with("boundary_sup", outer)
                .witness(dom, at, inner)
                .witness(dom, bat, outer)
        }
        ExtremumMode::Min { strict } => {
            let (inner, at) = interior_max(dom, |l| -u[l]);
            let (outer, bat) = boundary_max(dom, |l| -u[l]);
            let (inner, outer) = (-inner, -outer);
            let gap = inner - outer;
            let margin = if strict { if gap > 0.0 { gap } else { gap.min(-f64::MIN_POSITIVE) } } else { gap + tol };
            CheckResult::new("extremum_min", margin)
                .with("interior_inf", inner)
                .with("boundary_inf", outer)
                .witness(dom, at, inner)
                .witness(dom, bat, outer)
        }
    }
}

/// sup u ≤ sup_∂ h + σ R_o^α (λν (sup u)^k)^{1/k} for a converged solution.
pub fn sup_bound_audit(op: &OperatorSpec, u: &FieldState, dom: &GridDomain, slack: f64) -> Result<CheckResult> {
    let k = op.signature().k;
    let (_, nu) = dom.weight_bounds();
    let (_, r_o) = dom.out_ball();
    let sup = u.sup();
    let f_plus = u.lam * nu * sup.max(0.0).powf(k);
    let rep = sup_inf_bound(op, dom.boundary_max, dom.boundary_min, f_plus, 0.0, r_o)?;
    let margin = (rep.value * (1.0 + slack) - sup) / rep.value.abs().max(1e-300);
    Ok(CheckResult::new("sup_bound", margin).with("sup_u", sup).with("bound", rep.value))
}

/// For 0 < λ < Λ: sup u ≤ κ₂/(1 − (λ/Λ)^{1/k}); vacuous pass otherwise.
pub fn solution_bound_audit(op: &OperatorSpec, u: &FieldState, dom: &GridDomain, slack: f64) -> Result<CheckResult> {
    let (_, nu) = dom.weight_bounds();
    let (_, r_o) = dom.out_ball();
    let rep = lambda_big_and_solution_bounds(op, nu, r_o, u.lam, dom.boundary_min, dom.boundary_max)?;
    let sup = u.sup();
    if !rep.applicable {
        return Ok(CheckResult::new("solution_bound", 0.0).with("lambda_big", rep.value).with("applicable", 0.0));
    }
    let upper = rep.extra["upper"];
    let margin = (upper * (1.0 + slack) - sup) / upper;
    Ok(CheckResult::new("solution_bound", margin)
        .with("lambda_big", rep.value)
        .with("upper", upper)
        .with("sup_u", sup)
        .with("applicable", 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub operator: String,
    pub lam: f64,
    pub h: f64,
    pub slack: f64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    /// Checks that could not run, with the reason.
    pub skipped: BTreeMap<String, String>,
}

/// Runs the battery on a converged positive solution at λ with the domain's boundary data.
pub fn verify_solution(op: &OperatorSpec, u: &FieldState, dom: &GridDomain) -> Result<VerificationReport> {
    let slack = default_slack(op, dom.h);
    let field = dom.lattice_field(&u.u);
    let mut checks = Vec::new();
    let mut skipped = BTreeMap::new();

    let floor = dom.boundary_min;
    if floor > 0.0 {
        let sub = dom.sample_lattice(|_, _| floor);
        checks.push(quotient_comparison_check(&sub, &field, dom, slack)?);
    } else {
        skipped.insert("quotient_comparison".into(), "boundary data not positive".into());
    }
    let strict = u.lam > 0.0;
    checks.push(extremum_principle_check(&field, dom, ExtremumMode::Min { strict }, slack * dom.boundary_min.abs()));
    if u.lam == 0.0 {
        checks.push(extremum_principle_check(&field, dom, ExtremumMode::Max, slack * dom.boundary_max.abs()));
    }
    checks.push(change_of_variables_check(op, u, 0.5, u.lam, dom, slack)?);

    let ((cx, cy), _) = dom.out_ball();
    let center = dom.nearest_node(cx, cy).map(|l| dom.position(l)).unwrap_or((cx, cy));
    let r = dom.distance_to_boundary(center.0, center.1) / 4.0;
    match harnack_holder_check(op, &field, dom, center, r, &HarnackOptions { slack, ..HarnackOptions::default() }) {
        Ok(c) => checks.push(c),
        Err(e) => {
            skipped.insert("harnack_holder".into(), e.to_string());
        }
    }
    checks.push(sup_bound_audit(op, u, dom, slack)?);
    checks.push(solution_bound_audit(op, u, dom, slack)?);
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport { operator: op.to_string(), lam: u.lam, h: dom.h, slack, passed, checks, skipped })
}
