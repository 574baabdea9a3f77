use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::domain::GridDomain;
use crate::grid::scheme::{scheme_apply, Assembly};
use crate::operator::OperatorSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Running,
    Blowup,
    Stalled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepping {
    /// Linearly implicit for linear operators, explicit otherwise.
    Auto,
    /// u ← u + τ (H_h[u] + λ a |u|^{k−1} u), global τ from the monotonicity bound.
    Explicit,
    /// (D_τ − J) Δ = H_h[u] + λ a |u|^{k−1} u, u ← u + Δ, with J the frozen stencil matrix.
    LinearlyImplicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Relative residual tolerance.
    pub tol: f64,
    /// Blow-up cap; default 10⁴ · sup of the boundary data.
    pub m_cap: Option<f64>,
    /// Iteration limit; default 10⁶ (explicit) or 2·10⁴ (linearly implicit).
    pub max_iter: Option<usize>,
    pub stepping: Stepping,
    /// CFL fraction for explicit stepping; the implicit reaction step uses 4θ.
    pub theta: f64,
    /// Refactorisation period of the implicit matrix for nonlinear operators.
    pub refactor_every: usize,
    /// Start with Newton-type steps, falling back to damped stepping once a step leaves the
    /// positive cone or stops reducing the residual.
    pub newton: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            m_cap: None,
            max_iter: None,
            stepping: Stepping::Auto,
            theta: 0.9,
            refactor_every: 5,
            newton: true,
        }
    }
}

impl SolveOptions {
    pub fn explicit() -> Self {
        SolveOptions { stepping: Stepping::Explicit, newton: false, ..SolveOptions::default() }
    }

    pub fn implicit() -> Self {
        SolveOptions { stepping: Stepping::LinearlyImplicit, ..SolveOptions::default() }
    }

    fn resolve(&self, op: &OperatorSpec) -> Stepping {
        match self.stepping {
            Stepping::Auto if op.is_linear() => Stepping::LinearlyImplicit,
            Stepping::Auto => Stepping::Explicit,
            s => s,
        }
    }

    fn max_iter(&self, stepping: Stepping) -> usize {
        self.max_iter.unwrap_or(match stepping {
            Stepping::LinearlyImplicit => 20_000,
            _ => 1_000_000,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    /// Values at interior nodes.
    pub u: Vec<f64>,
    pub iteration: usize,
    pub residual_sup: f64,
    pub status: Status,
    pub lam: f64,
}

impl FieldState {
    pub fn sup(&self) -> f64 {
        self.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.u.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn from_values(u: Vec<f64>, lam: f64) -> Self {
        FieldState { u, iteration: 0, residual_sup: f64::NAN, status: Status::Running, lam }
    }

    /// CSV rows (i, j, x, y, u) for interior and boundary nodes.
    pub fn to_csv(&self, dom: &GridDomain) -> String {
        let field = dom.lattice_field(&self.u);
        let mut nodes: Vec<usize> = dom.interior.iter().chain(&dom.boundary).cloned().collect();
        nodes.sort_unstable();
        let mut out = String::from("i,j,x,y,u\n");
        for l in nodes {
            let (i, j) = dom.lattice_ij(l);
            let (x, y) = dom.position(l);
            out.push_str(&format!("{i},{j},{x},{y},{}\n", field[l]));
        }
        out
    }
}

/// Relative residual scale (sup|u|)^k · max(λν, 1).
fn residual_scale(u: &[f64], dom: &GridDomain, k: f64, lam: f64) -> f64 {
    let (_, nu) = dom.weight_bounds();
    let m = u
        .iter()
        .fold(dom.boundary_max.abs().max(dom.boundary_min.abs()), |a, &v| a.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    m.powf(k) * (lam * nu).max(1.0)
}

/// Default starting field: the boundary minimum plus an α-cone bump scaled like the
/// near-origin expansion of the radial problem.
pub fn default_initial(op: &OperatorSpec, dom: &GridDomain, lam: f64) -> Vec<f64> {
    let base = dom.boundary_min.max(0.0);
    let sig = op.signature();
    let (_, nu) = dom.weight_bounds();
    let ((cx, cy), r_o) = dom.out_ball();
    let c = match op.sigma() {
        Ok(s) if lam > 0.0 => s * (lam * nu).powf(1.0 / sig.k) * base,
        _ => 0.0,
    };
    dom.sample(|x, y| base + c * (r_o.powf(sig.alpha) - (x - cx).hypot(y - cy).powf(sig.alpha)).max(0.0))
}

struct Factor {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl Factor {
    /// Factors diag(shift) − scale·J.
    fn new(asm: &Assembly, shift: &[f64], scale: f64) -> Result<Factor> {
        let n = asm.diag.len();
        let mut t = Vec::with_capacity(asm.vals.len() + n);
        for (i, &sh) in shift.iter().enumerate().take(n) {
            t.push(Triplet::new(i, i, sh - scale * asm.diag[i]));
            for k in asm.row_ptr[i]..asm.row_ptr[i + 1] {
                t.push(Triplet::new(i, asm.cols[k] as usize, -scale * asm.vals[k]));
            }
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &t)
            .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))?;
        let lu = m.sp_lu().map_err(|e| Error::Numerical(format!("sparse LU failed: {e:?}")))?;
        Ok(Factor { lu })
    }

    fn solve(&self, rhs: &mut [f64]) {
        let mut b = Col::<f64>::from_fn(rhs.len(), |i| rhs[i]);
        self.lu.solve_in_place(b.as_mat_mut());
        for (i, v) in rhs.iter_mut().enumerate() {
            *v = b[i];
        }
    }
}

/// Solves H_h[u] + λ a |u|^{k−1} u = 0 with the domain's boundary data.
pub fn solve_grid_bvp(op: &OperatorSpec, dom: &GridDomain, lam: f64, opts: &SolveOptions) -> Result<FieldState> {
    solve_grid_bvp_from(op, dom, lam, opts, None)
}

pub fn solve_grid_bvp_from(
    op: &OperatorSpec,
    dom: &GridDomain,
    lam: f64,
    opts: &SolveOptions,
    initial: Option<&[f64]>,
) -> Result<FieldState> {
    if !(lam >= 0.0) {
        return Err(Error::Input(format!("lambda must be nonnegative, got {lam}")));
    }
    if op.n() != 2 {
        return Err(Error::Input(format!("the grid solver is two-dimensional, operator has n={}", op.n())));
    }
    let n = dom.n_interior();
    let u0 = match initial {
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => return Err(Error::Input(format!("initial field has {} values, expected {n}", v.len()))),
        None => default_initial(op, dom, lam),
    };
    let mut ctx = Ctx {
        op,
        dom,
        lam,
        k: op.signature().k,
        m_cap: opts.m_cap.unwrap_or(1e4 * dom.boundary_max.abs().max(f64::MIN_POSITIVE)),
        tol: opts.tol,
        asm: Assembly::default(),
        res: vec![0.0; n],
    };
    let stepping = opts.resolve(op);
    let max_iter = opts.max_iter(stepping);
    let mut used = 0;
    if opts.newton {
        match accelerated(&mut ctx, u0.clone(), max_iter.min(NEWTON_ITERS))? {
            (Some(state), _) => return Ok(state),
            (None, it) => used = it,
        }
    }
    monotone(&mut ctx, u0, stepping, opts, used, max_iter)
}

const NEWTON_ITERS: usize = 200;

struct Ctx<'a> {
    op: &'a OperatorSpec,
    dom: &'a GridDomain,
    lam: f64,
    k: f64,
    m_cap: f64,
    tol: f64,
    asm: Assembly,
    res: Vec<f64>,
}

impl Ctx<'_> {
    /// Refreshes the frozen rows (if asked) and the residual; returns the relative sup norm.
    fn residual(&mut self, u: &[f64], rebuild: bool) -> Result<f64> {
        if rebuild {
            self.asm = Assembly::build(self.op, self.dom, u);
        }
        self.asm.apply(u, &mut self.res);
        for (i, r) in self.res.iter_mut().enumerate() {
            *r += self.lam * self.dom.weight[i] * u[i].abs().powf(self.k - 1.0) * u[i];
        }
        let rsup = self.res.iter().fold(0.0f64, |a, &r| a.max(r.abs())) / residual_scale(u, self.dom, self.k, self.lam);
        if !rsup.is_finite() || u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state: residual {rsup}")));
        }
        Ok(rsup)
    }

    /// True when w = u − max g is a strict sub-solution on {w > 0}: H_h[w] + λ a w^k > 0 there.
    /// The quotient comparison u_λ ≥ t w then fails for every t, so no positive solution exists
    /// at λ. Uses the residual of the last `residual` call.
    fn certifies_blowup(&self, u: &[f64]) -> bool {
        let top = self.dom.boundary_max;
        if !(self.lam > 0.0) || u.iter().cloned().fold(f64::NEG_INFINITY, f64::max) < 2.0 * top.abs() {
            return false;
        }
        let mut any = false;
        for (i, &ui) in u.iter().enumerate() {
            let w = ui - top;
            if w <= 0.0 {
                continue;
            }
            any = true;
            let react = self.lam * self.dom.weight[i];
            let hw = self.res[i] - react * ui.abs().powf(self.k - 1.0) * ui;
            if !(hw + react * w.powf(self.k) > 1e-9 * react * ui.abs().powf(self.k)) {
                return false;
            }
        }
        any
    }

    fn reaction_rate(&self, u: &[f64], i: usize) -> f64 {
        self.lam * self.dom.weight[i] * self.k * u[i].abs().powf(self.k - 1.0)
    }
}

/// Quasi-Newton phase on the frozen rows: (−k·J − λ a k |u|^{k−1}) Δ = R. Only returns a state
/// on convergence; steps leaving the positive cone or a stalling residual end the phase.
fn accelerated(ctx: &mut Ctx, mut u: Vec<f64>, iters: usize) -> Result<(Option<FieldState>, usize)> {
    let linear = ctx.op.is_linear();
    let n = u.len();
    let mut factor: Option<Factor> = None;
    let (mut prev, mut strikes) = (f64::INFINITY, 0);
    for it in 0..iters {
        let rsup = ctx.residual(&u, it == 0 || !linear)?;
        if rsup <= ctx.tol {
            let state = FieldState { u, iteration: it, residual_sup: rsup, status: Status::Converged, lam: ctx.lam };
            return Ok((Some(state), it));
        }
        strikes = if rsup > 0.9 * prev { strikes + 1 } else { 0 };
        prev = rsup;
        if strikes >= 3 {
            return Ok((None, it));
        }
        if factor.is_none() || !linear {
            let shift: Vec<f64> = (0..n).map(|i| -ctx.reaction_rate(&u, i)).collect();
            // H is k-homogeneous, so k·J is its derivative along u itself.
            factor = match Factor::new(&ctx.asm, &shift, ctx.k) {
                Ok(f) => Some(f),
                Err(_) => return Ok((None, it)),
            };
        }
        let mut step = ctx.res.clone();
        factor.as_ref().unwrap().solve(&mut step);
        let admissible = |t: f64| {
            u.iter().zip(&step).all(|(a, d)| {
                let v = a + t * d;
                v.is_finite() && v > 0.0 && v < ctx.m_cap
            })
        };
        let Some(t) = [1.0, 0.5, 0.25].into_iter().find(|&t| admissible(t)) else {
            return Ok((None, it));
        };
        for (a, d) in u.iter_mut().zip(&step) {
            *a += t * d;
        }
    }
    Ok((None, iters))
}

/// Damped monotone iteration; the only phase that classifies blow-up and stalling.
fn monotone(
    ctx: &mut Ctx,
    mut u: Vec<f64>,
    stepping: Stepping,
    opts: &SolveOptions,
    start: usize,
    max_iter: usize,
) -> Result<FieldState> {
    let n = u.len();
    let linear = ctx.op.is_linear();
    let mut factor: Option<Factor> = None;
    let mut since_factor = 0usize;
    let mut it = start;
    let mut first = true;
    loop {
        let rsup = ctx.residual(&u, first || !linear)?;
        first = false;
        let sup = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let status = if rsup <= ctx.tol {
            Status::Converged
        } else if sup > ctx.m_cap || ctx.certifies_blowup(&u) {
            Status::Blowup
        } else if it >= max_iter {
            Status::Stalled
        } else {
            Status::Running
        };
        if status != Status::Running {
            return Ok(FieldState { u, iteration: it, residual_sup: rsup, status, lam: ctx.lam });
        }
        it += 1;
        match stepping {
            Stepping::LinearlyImplicit => {
                let dmax = ctx.asm.diag.iter().fold(0.0f64, |a, &d| a.max(-d)).max(1.0);
                if factor.is_none() || (!linear && since_factor >= opts.refactor_every.max(1)) {
                    let shift: Vec<f64> =
                        (0..n).map(|i| ctx.reaction_rate(&u, i) / (4.0 * opts.theta) + 1e-10 * dmax).collect();
                    factor = Some(Factor::new(&ctx.asm, &shift, ctx.k)?);
                    since_factor = 0;
                }
                since_factor += 1;
                let mut step = ctx.res.clone();
                factor.as_ref().unwrap().solve(&mut step);
                for (a, d) in u.iter_mut().zip(&step) {
                    *a += d;
                }
            }
            _ => {
                let rate = (0..n).fold(0.0f64, |a, i| a.max(-ctx.asm.diag[i] + ctx.reaction_rate(&u, i)));
                let tau = opts.theta / rate.max(1e-300);
                for (a, r) in u.iter_mut().zip(&ctx.res) {
                    *a += tau * r;
                }
            }
        }
    }
}

/// Largest step τ for which one explicit update is monotone at u: 1/max(−diag + reaction rate).
pub fn stable_step(op: &OperatorSpec, dom: &GridDomain, lam: f64, u: &[f64]) -> f64 {
    let asm = Assembly::build(op, dom, u);
    let k = op.signature().k;
    let rate = (0..u.len()).fold(0.0f64, |a, i| {
        a.max(-asm.diag[i] + lam * dom.weight[i] * k * u[i].abs().powf(k - 1.0))
    });
    1.0 / rate.max(1e-300)
}

/// One explicit update u + τ (H_h[u] + λ a |u|^{k−1} u) on interior values.
pub fn explicit_step(op: &OperatorSpec, dom: &GridDomain, lam: f64, u: &[f64], tau: f64) -> Vec<f64> {
    let k = op.signature().k;
    scheme_apply(op, dom, u)
        .iter()
        .enumerate()
        .map(|(i, h)| u[i] + tau * (h + lam * dom.weight[i] * u[i].abs().powf(k - 1.0) * u[i]))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub passed: bool,
    /// tol + boundary gap − max interior (u_sub − u_super); nonnegative on pass.
    pub margin: f64,
    pub interior_gap: f64,
    pub boundary_gap: f64,
    pub worst_node: Option<(usize, usize)>,
}

/// max over the interior of (u_sub − u_super) ≤ max over the boundary + tol, for two fields
/// carrying the same boundary data.
pub fn comparison_check(u_sub: &FieldState, u_super: &FieldState, dom: &GridDomain, tol: f64) -> ComparisonReport {
    comparison_check_with_boundary(u_sub, u_super, dom, 0.0, tol)
}

/// As `comparison_check` with a given boundary gap max_∂(g_sub − g_super).
pub fn comparison_check_with_boundary(
    u_sub: &FieldState,
    u_super: &FieldState,
    dom: &GridDomain,
    boundary_gap: f64,
    tol: f64,
) -> ComparisonReport {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for (i, (a, b)) in u_sub.u.iter().zip(&u_super.u).enumerate() {
        if a - b > worst {
            worst = a - b;
            at = Some(dom.lattice_ij(dom.interior[i]));
        }
    }
    let margin = boundary_gap + tol - worst;
    ComparisonReport { passed: margin >= 0.0, margin, interior_gap: worst, boundary_gap, worst_node: at }
}
