//! Monotone wide-stencil discretisation H_h. Every family is assembled as a nonnegative
//! combination of directional second differences, so at a given state the scheme reads
//! H_h[u](x) = diag·u(x) + Σ c_j u(y_j) + constant with c_j ≥ 0 and diag = −Σ c_j (frozen
//! coefficients).

use crate::grid::domain::{Arm, GridDomain};
use crate::operator::{Family, OperatorSpec};

/// Frozen-coefficient row: H_h = diag·u_node + Σ coef·field[lattice] + constant.
#[derive(Clone, Debug, Default)]
pub struct Row {
    pub diag: f64,
    pub entries: Vec<(u32, f64)>,
    pub constant: f64,
}

impl Row {
    fn clear(&mut self) {
        self.diag = 0.0;
        self.entries.clear();
        self.constant = 0.0;
    }

    fn add_arm(&mut self, kappa: f64, arm: &Arm) {
        self.diag -= kappa;
        self.constant += kappa * arm.constant;
        for j in 0..arm.count as usize {
            self.entries.push((arm.idx[j], kappa * arm.w[j]));
        }
    }

    /// Adds kappa·D, D the non-uniform second difference along the pair of arms.
    fn add_pair(&mut self, kappa: f64, plus: &Arm, minus: &Arm) {
        if kappa == 0.0 {
            return;
        }
        let (tp, tm) = (plus.len, minus.len);
        let s = tp + tm;
        self.add_arm(kappa * 2.0 / (tp * s), plus);
        self.add_arm(kappa * 2.0 / (tm * s), minus);
    }

    pub fn value(&self, u_node: f64, field: &[f64]) -> f64 {
        let mut v = self.diag * u_node + self.constant;
        for &(l, c) in &self.entries {
            v += c * field[l as usize];
        }
        v
    }
}

#[inline]
fn second_difference(plus: &Arm, minus: &Arm, u: f64, field: &[f64]) -> f64 {
    let (tp, tm) = (plus.len, minus.len);
    2.0 / (tp + tm) * ((plus.value(field) - u) / tp + (minus.value(field) - u) / tm)
}

/// Centred first difference on a non-uniform pair and the cusp slope sqrt(−s₊s₋) when the
/// one-sided slopes have opposite signs (a local extremum along the axis), else 0. The product
/// form is smooth across symmetric extrema.
#[inline]
fn first_difference(plus: &Arm, minus: &Arm, u: f64, field: &[f64]) -> (f64, f64) {
    let (tp, tm) = (plus.len, minus.len);
    let (dp, dm) = (plus.value(field) - u, minus.value(field) - u);
    let p = (tm * tm * dp - tp * tp * dm) / (tp * tm * (tp + tm));
    let (sp, sm) = (dp / tp, -dm / tm);
    let cusp = (-sp * sm).max(0.0).sqrt();
    (p, cusp)
}

/// Discrete gradient: centred differences `p` and per-axis magnitudes `m`. For degenerate
/// families m_i = sqrt(p_i² + cusp_i²), so weights |p|^{k1} stay positive at smooth extrema
/// and depend continuously on the field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gradient {
    pub p: [f64; 2],
    pub m: [f64; 2],
    pub cusp: [f64; 2],
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        self.m[0].hypot(self.m[1])
    }

    /// Share of the centred gradient in the full slope, 0 at a symmetric extremum.
    pub fn resolved(&self) -> f64 {
        let p2 = self.p[0] * self.p[0] + self.p[1] * self.p[1];
        let c2 = self.cusp[0] * self.cusp[0] + self.cusp[1] * self.cusp[1];
        if p2 == 0.0 {
            0.0
        } else {
            p2 / (p2 + c2)
        }
    }
}

pub fn discrete_gradient(dom: &GridDomain, node: usize, field: &[f64], degenerate: bool) -> Gradient {
    let u = field[dom.interior[node]];
    let half = dom.k() / 2;
    let mut g = Gradient { p: [0.0; 2], m: [0.0; 2], cusp: [0.0; 2] };
    for (c, m) in [(0usize, 0usize), (1, half)] {
        let (p, cusp) = first_difference(dom.arm(node, m, 0), dom.arm(node, m, 1), u, field);
        g.p[c] = p;
        g.cusp[c] = cusp;
        g.m[c] = if degenerate { p.hypot(cusp) } else { p.abs() };
    }
    g
}

fn pucci_slope(plus: bool, lam: f64, lam_big: f64, d: f64) -> f64 {
    match (plus, d > 0.0) {
        (true, true) => lam_big,
        (true, false) => lam,
        (false, true) => lam,
        (false, false) => lam_big,
    }
}

/// Assembles the frozen row of H_h at interior node `node` for the lattice field.
pub fn assemble_row(op: &OperatorSpec, dom: &GridDomain, field: &[f64], node: usize, row: &mut Row) {
    row.clear();
    let u = field[dom.interior[node]];
    let half = dom.k() / 2;
    let k1 = op.signature().k1;
    let g = discrete_gradient(dom, node, field, k1 > 0.0);
    let norm = g.norm();
    let ax = (dom.arm(node, 0, 0), dom.arm(node, 0, 1));
    let ay = (dom.arm(node, half, 0), dom.arm(node, half, 1));
    match op.family() {
        Family::PlapType { q, a } => {
            let w = norm.powf(q);
            if w == 0.0 {
                return;
            }
            let pn = g.p[0].hypot(g.p[1]);
            if a == 0.0 || pn == 0.0 {
                let c = if a == 0.0 { 1.0 } else { 1.0 + a / 2.0 };
                row.add_pair(w * c, ax.0, ax.1);
                row.add_pair(w * c, ay.0, ay.1);
                return;
            }
            // Blend toward the isotropic average as the centred gradient fades against the
            // cusp slopes, so the row stays continuous at extrema.
            let s = g.resolved();
            let e = [g.p[0] / pn, g.p[1] / pn];
            let along = (dom.interp_arm(node, e, dom.arm_len), dom.interp_arm(node, [-e[0], -e[1]], dom.arm_len));
            if a > 0.0 {
                let c = w * (1.0 + a * (1.0 - s) / 2.0);
                row.add_pair(c, ax.0, ax.1);
                row.add_pair(c, ay.0, ay.1);
                row.add_pair(w * a * s, &along.0, &along.1);
            } else {
                let t = [-e[1], e[0]];
                let across = (dom.interp_arm(node, t, dom.arm_len), dom.interp_arm(node, [-t[0], -t[1]], dom.arm_len));
                let c = w * (2.0 + a) * (1.0 - s) / 2.0;
                row.add_pair(c, ax.0, ax.1);
                row.add_pair(c, ay.0, ay.1);
                row.add_pair(w * (1.0 + a) * s, &along.0, &along.1);
                row.add_pair(w * s, &across.0, &across.1);
            }
        }
        Family::PseudoPlap { p: pe, q } => {
            let w = norm.powf(q);
            if w == 0.0 {
                return;
            }
            row.add_pair(w * g.m[0].powf(pe), ax.0, ax.1);
            row.add_pair(w * g.m[1].powf(pe), ay.0, ay.1);
        }
        Family::InfType { q } => {
            let wm = [g.m[0].powf(q + 1.0), g.m[1].powf(q + 1.0)];
            let mag2 = wm[0] * wm[0] + wm[1] * wm[1];
            if mag2 == 0.0 {
                return;
            }
            let wv = [g.p[0] * g.m[0].powf(q), g.p[1] * g.m[1].powf(q)];
            let along2 = wv[0] * wv[0] + wv[1] * wv[1];
            // |w|²D_ee where the direction is resolved, isotropic average for the cusp part.
            let iso = ((mag2 - along2) / 2.0).max(0.0);
            row.add_pair(iso, ax.0, ax.1);
            row.add_pair(iso, ay.0, ay.1);
            if along2 > 0.0 {
                let m = along2.sqrt();
                let e = [wv[0] / m, wv[1] / m];
                let along = (dom.interp_arm(node, e, dom.arm_len), dom.interp_arm(node, [-e[0], -e[1]], dom.arm_len));
                row.add_pair(along2, &along.0, &along.1);
            }
        }
        Family::PucciPlus { lam, lam_big, q } | Family::PucciMinus { lam, lam_big, q } => {
            let plus = matches!(op.family(), Family::PucciPlus { .. });
            let w = norm.powf(q);
            if w == 0.0 {
                return;
            }
            let mut best: Option<(f64, usize, f64, f64)> = None;
            for m in 0..half {
                let d1 = second_difference(dom.arm(node, m, 0), dom.arm(node, m, 1), u, field);
                let d2 = second_difference(dom.arm(node, m + half, 0), dom.arm(node, m + half, 1), u, field);
                let s = pucci_slope(plus, lam, lam_big, d1) * d1 + pucci_slope(plus, lam, lam_big, d2) * d2;
                let better = match best {
                    None => true,
                    Some((b, ..)) => if plus { s > b } else { s < b },
                };
                if better {
                    best = Some((s, m, d1, d2));
                }
            }
            let (_, m, d1, d2) = best.expect("at least one frame");
            row.add_pair(w * pucci_slope(plus, lam, lam_big, d1), dom.arm(node, m, 0), dom.arm(node, m, 1));
            row.add_pair(
                w * pucci_slope(plus, lam, lam_big, d2),
                dom.arm(node, m + half, 0),
                dom.arm(node, m + half, 1),
            );
        }
    }
}

/// H_h[u] at one interior node; `u` holds values at interior nodes.
pub fn scheme_residual(op: &OperatorSpec, dom: &GridDomain, u: &[f64], node: usize) -> f64 {
    let field = dom.lattice_field(u);
    let mut row = Row::default();
    assemble_row(op, dom, &field, node, &mut row);
    row.value(u[node], &field)
}

/// H_h[u] at every interior node.
pub fn scheme_apply(op: &OperatorSpec, dom: &GridDomain, u: &[f64]) -> Vec<f64> {
    let field = dom.lattice_field(u);
    let mut row = Row::default();
    (0..dom.n_interior())
        .map(|n| {
            assemble_row(op, dom, &field, n, &mut row);
            row.value(u[n], &field)
        })
        .collect()
}

/// Frozen linear system over interior unknowns: H_h[u] = J u + b at the assembly state.
#[derive(Clone, Debug, Default)]
pub struct Assembly {
    pub diag: Vec<f64>,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
    pub b: Vec<f64>,
}

impl Assembly {
    pub fn build(op: &OperatorSpec, dom: &GridDomain, u: &[f64]) -> Assembly {
        let field = dom.lattice_field(u);
        let n = dom.n_interior();
        let mut asm = Assembly {
            diag: vec![0.0; n],
            row_ptr: Vec::with_capacity(n + 1),
            cols: Vec::new(),
            vals: Vec::new(),
            b: vec![0.0; n],
        };
        asm.row_ptr.push(0);
        let mut row = Row::default();
        let mut merged: Vec<(u32, f64)> = Vec::new();
        for node in 0..n {
            assemble_row(op, dom, &field, node, &mut row);
            asm.diag[node] = row.diag;
            asm.b[node] = row.constant;
            merged.clear();
            for &(l, c) in &row.entries {
                let i = dom.interior_of[l as usize];
                if i == u32::MAX {
                    asm.b[node] += c * field[l as usize];
                } else if i as usize == node {
                    asm.diag[node] += c;
                } else {
                    merged.push((i, c));
                }
            }
            merged.sort_unstable_by_key(|e| e.0);
            let mut last = u32::MAX;
            for &(i, c) in &merged {
                if i == last {
                    *asm.vals.last_mut().unwrap() += c;
                } else {
                    asm.cols.push(i);
                    asm.vals.push(c);
                    last = i;
                }
            }
            asm.row_ptr.push(asm.cols.len());
        }
        asm
    }

    /// J u + b.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for i in 0..self.diag.len() {
            let mut s = self.diag[i] * u[i] + self.b[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * u[self.cols[k] as usize];
            }
            out[i] = s;
        }
    }
}
