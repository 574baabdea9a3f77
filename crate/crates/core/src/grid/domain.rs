use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub fn constant_fn(c: f64) -> ScalarFn {
    Arc::new(move |_, _| c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// Disk of the given radius centred at the origin.
    Disk { radius: f64 },
    /// Rectangle [0, a] × [0, b].
    Rectangle { a: f64, b: f64 },
    /// Rows of {0,1,2} (exterior/interior/boundary); the first row is the top (largest y),
    /// node (row r, column c) sits at (c·h, (rows−1−r)·h).
    Mask { rows: Vec<String> },
}

impl Shape {
    pub fn load_mask(text: &str) -> Result<Shape> {
        let rows: Vec<String> = text
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(Error::Domain("mask file has no rows".into()));
        }
        let width = rows[0].chars().count();
        for (i, r) in rows.iter().enumerate() {
            if r.chars().count() != width {
                return Err(Error::Domain(format!("mask row {i} has a different width")));
            }
            if let Some(c) = r.chars().find(|c| !matches!(c, '0' | '1' | '2')) {
                return Err(Error::Domain(format!("mask row {i} has invalid symbol {c:?}")));
            }
        }
        Ok(Shape::Mask { rows })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Exterior,
    Interior,
    Boundary,
}

/// One end of a directional difference: value = Σ w·field[idx] + constant at distance `len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arm {
    pub len: f64,
    pub idx: [u32; 4],
    pub w: [f64; 4],
    pub count: u8,
    pub constant: f64,
}

impl Arm {
    fn boundary(len: f64, value: f64) -> Self {
        Arm { len, idx: [0; 4], w: [0.0; 4], count: 0, constant: value }
    }

    fn node(len: f64, idx: usize) -> Self {
        Arm { len, idx: [idx as u32, 0, 0, 0], w: [1.0, 0.0, 0.0, 0.0], count: 1, constant: 0.0 }
    }

    #[inline]
    pub fn value(&self, field: &[f64]) -> f64 {
        let mut s = self.constant;
        for j in 0..self.count as usize {
            s += self.w[j] * field[self.idx[j] as usize];
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainOptions {
    /// Number of stencil directions (even, at least 8).
    pub directions: usize,
    /// Length scale L of interpolated arms: ℓ = max(2h, sqrt(h L)).
    pub arm_scale: f64,
    /// Nodes closer than this fraction of h to an analytic boundary count as boundary nodes.
    pub boundary_gap: f64,
}

impl Default for DomainOptions {
    fn default() -> Self {
        DomainOptions { directions: 16, arm_scale: 0.5, boundary_gap: 0.1 }
    }
}

#[derive(Clone, Debug)]
enum Geometry {
    Disk { radius: f64 },
    Rectangle { a: f64, b: f64 },
    Mask,
}

/// Masked uniform 2-D grid with boundary data, weight a(x) and precomputed stencil arms.
#[derive(Clone)]
pub struct GridDomain {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub kind: Vec<NodeKind>,
    /// Lattice index of each interior node.
    pub interior: Vec<usize>,
    /// Interior number of each lattice node (u32::MAX when not interior).
    pub interior_of: Vec<u32>,
    /// Lattice indices of boundary nodes.
    pub boundary: Vec<usize>,
    /// Boundary values on the lattice (boundary nodes only; zero elsewhere).
    pub boundary_field: Vec<f64>,
    pub weight: Vec<f64>,
    pub directions: Vec<[f64; 2]>,
    pub arm_len: f64,
    pub shape: Shape,
    pub options: DomainOptions,
    geometry: Geometry,
    boundary_fn: ScalarFn,
    /// arms[node * 2K + 2m + side], side 0 along +w_m, 1 along −w_m.
    arms: Vec<Arm>,
    /// Largest and smallest boundary values attained by the boundary data (including
    /// values at arm crossings of analytic boundaries).
    pub boundary_max: f64,
    pub boundary_min: f64,
}

impl std::fmt::Debug for GridDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridDomain")
            .field("h", &self.h)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("interior", &self.interior.len())
            .field("boundary", &self.boundary.len())
            .field("shape", &self.shape)
            .finish()
    }
}

pub fn build_domain(
    shape: &Shape,
    h: f64,
    boundary_fn: ScalarFn,
    weight_fn: ScalarFn,
    directions: usize,
) -> Result<GridDomain> {
    let options = DomainOptions { directions, ..DomainOptions::default() };
    build_domain_with(shape, h, boundary_fn, weight_fn, &options)
}

pub fn build_domain_with(
    shape: &Shape,
    h: f64,
    boundary_fn: ScalarFn,
    weight_fn: ScalarFn,
    options: &DomainOptions,
) -> Result<GridDomain> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Input(format!("h must be positive, got {h}")));
    }
    let k = options.directions;
    if k < 8 || !k.is_multiple_of(2) {
        return Err(Error::Input(format!("K must be even and at least 8, got {k}")));
    }
    let gap = options.boundary_gap * h;
    let (nx, ny, x0, y0, mut kind, geometry) = match *shape {
        Shape::Disk { radius } => {
            if !(radius > 0.0) {
                return Err(Error::Domain(format!("disk radius must be positive, got {radius}")));
            }
            let m = (radius / h).ceil() as usize + 2;
            let n = 2 * m + 1;
            let x0 = -(m as f64) * h;
            let mut kind = vec![NodeKind::Exterior; n * n];
            for j in 0..n {
                for i in 0..n {
                    let (x, y) = (x0 + i as f64 * h, x0 + j as f64 * h);
                    if radius - x.hypot(y) > gap {
                        kind[j * n + i] = NodeKind::Interior;
                    }
                }
            }
            (n, n, x0, x0, kind, Geometry::Disk { radius })
        }
        Shape::Rectangle { a, b } => {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::Domain(format!("rectangle sides must be positive, got {a}x{b}")));
            }
            let nx = (a / h).ceil() as usize + 3;
            let ny = (b / h).ceil() as usize + 3;
            let mut kind = vec![NodeKind::Exterior; nx * ny];
            for j in 0..ny {
                for i in 0..nx {
                    let (x, y) = ((i as f64 - 1.0) * h, (j as f64 - 1.0) * h);
                    let d = x.min(a - x).min(y).min(b - y);
                    if d > gap {
                        kind[j * nx + i] = NodeKind::Interior;
                    }
                }
            }
            (nx, ny, -h, -h, kind, Geometry::Rectangle { a, b })
        }
        Shape::Mask { ref rows } => {
            let ny = rows.len();
            let nx = rows.first().map(|r| r.chars().count()).unwrap_or(0);
            let mut kind = vec![NodeKind::Exterior; nx * ny];
            for (r, row) in rows.iter().enumerate() {
                let j = ny - 1 - r;
                for (i, c) in row.chars().enumerate() {
                    kind[j * nx + i] = match c {
                        '1' => NodeKind::Interior,
                        '2' => NodeKind::Boundary,
                        '0' => NodeKind::Exterior,
                        other => return Err(Error::Domain(format!("invalid mask symbol {other:?}"))),
                    };
                }
            }
            (nx, ny, 0.0, 0.0, kind, Geometry::Mask)
        }
    };
    let is_mask = matches!(geometry, Geometry::Mask);

    let interior: Vec<usize> = (0..nx * ny).filter(|&l| kind[l] == NodeKind::Interior).collect();
    if interior.is_empty() {
        return Err(Error::Domain("domain has no interior nodes".into()));
    }
    // discrete boundary layer: non-interior nodes in the 3x3 block of an interior node
    for &l in &interior {
        let (i, j) = ((l % nx) as i64, (l / nx) as i64);
        for dj in -1..=1 {
            for di in -1..=1 {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                    return Err(Error::Domain(format!("interior node ({i}, {j}) touches the grid edge")));
                }
                let nb = b as usize * nx + a as usize;
                match kind[nb] {
                    NodeKind::Interior | NodeKind::Boundary => {}
                    NodeKind::Exterior if !is_mask => kind[nb] = NodeKind::Boundary,
                    NodeKind::Exterior => {
                        return Err(Error::Domain(format!(
                            "interior node ({i}, {j}) has an exterior neighbour"
                        )))
                    }
                }
            }
        }
    }
    let boundary: Vec<usize> = (0..nx * ny).filter(|&l| kind[l] == NodeKind::Boundary).collect();
    let mut interior_of = vec![u32::MAX; nx * ny];
    for (n, &l) in interior.iter().enumerate() {
        interior_of[l] = n as u32;
    }
    let pos = |l: usize| (x0 + (l % nx) as f64 * h, y0 + (l / nx) as f64 * h);
    let mut boundary_field = vec![0.0; nx * ny];
    for &l in &boundary {
        let (x, y) = pos(l);
        boundary_field[l] = boundary_fn(x, y);
    }
    let weight: Vec<f64> = interior
        .iter()
        .map(|&l| {
            let (x, y) = pos(l);
            weight_fn(x, y)
        })
        .collect();
    if let Some(w) = weight.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::Domain(format!("weight a(x) must be positive and finite, found {w}")));
    }
    let directions: Vec<[f64; 2]> = (0..k)
        .map(|m| {
            let t = m as f64 * PI / k as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    let arm_len = (2.0 * h).max((h * options.arm_scale).sqrt());

    let mut dom = GridDomain {
        h,
        nx,
        ny,
        x0,
        y0,
        kind,
        interior,
        interior_of,
        boundary,
        boundary_field,
        weight,
        directions,
        arm_len,
        shape: shape.clone(),
        options: options.clone(),
        geometry,
        boundary_fn,
        arms: Vec::new(),
        boundary_max: f64::NEG_INFINITY,
        boundary_min: f64::INFINITY,
    };
    dom.rebuild_arms();
    Ok(dom)
}

impl GridDomain {
    pub fn k(&self) -> usize {
        self.directions.len()
    }

    pub fn position(&self, lattice: usize) -> (f64, f64) {
        (self.x0 + (lattice % self.nx) as f64 * self.h, self.y0 + (lattice / self.nx) as f64 * self.h)
    }

    pub fn lattice_ij(&self, lattice: usize) -> (usize, usize) {
        (lattice % self.nx, lattice / self.nx)
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn boundary_value(&self, x: f64, y: f64) -> f64 {
        (self.boundary_fn)(x, y)
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.geometry, Geometry::Mask)
    }

    pub fn is_convex(&self) -> bool {
        self.is_analytic()
    }

    /// Diameter of the domain (of the interior ∪ boundary node cloud for masks).
    pub fn diameter(&self) -> f64 {
        match self.geometry {
            Geometry::Disk { radius } => 2.0 * radius,
            Geometry::Rectangle { a, b } => a.hypot(b),
            Geometry::Mask => {
                let pts: Vec<(f64, f64)> = self.interior.iter().chain(&self.boundary).map(|&l| self.position(l)).collect();
                let mut d: f64 = 0.0;
                for (i, p) in pts.iter().enumerate() {
                    for q in &pts[i + 1..] {
                        d = d.max((p.0 - q.0).hypot(p.1 - q.1));
                    }
                }
                d
            }
        }
    }

    /// Centre and radius of a ball containing the domain.
    pub fn out_ball(&self) -> ((f64, f64), f64) {
        match self.geometry {
            Geometry::Disk { radius } => ((0.0, 0.0), radius),
            Geometry::Rectangle { a, b } => ((a / 2.0, b / 2.0), 0.5 * a.hypot(b)),
            Geometry::Mask => {
                let pts = self.interior.iter().chain(&self.boundary).map(|&l| self.position(l));
                let (mut lo, mut hi) = ((f64::MAX, f64::MAX), (f64::MIN, f64::MIN));
                for (x, y) in pts {
                    lo = (lo.0.min(x), lo.1.min(y));
                    hi = (hi.0.max(x), hi.1.max(y));
                }
                let c = (0.5 * (lo.0 + hi.0), 0.5 * (lo.1 + hi.1));
                let r = self
                    .interior
                    .iter()
                    .chain(&self.boundary)
                    .map(|&l| {
                        let (x, y) = self.position(l);
                        (x - c.0).hypot(y - c.1)
                    })
                    .fold(0.0, f64::max);
                (c, r)
            }
        }
    }

    /// Default ρ for the case-II threshold on convex shapes (outer balls of radius diam).
    pub fn default_rho(&self) -> Option<f64> {
        self.is_convex().then(|| self.diameter() / 2.0)
    }

    pub fn weight_bounds(&self) -> (f64, f64) {
        let mu = self.weight.iter().cloned().fold(f64::INFINITY, f64::min);
        let nu = self.weight.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (mu, nu)
    }

    /// Same geometry with new boundary data.
    pub fn with_boundary(&self, boundary_fn: ScalarFn) -> GridDomain {
        let mut d = self.clone();
        d.boundary_fn = boundary_fn;
        for &l in &d.boundary {
            let (x, y) = d.position(l);
            d.boundary_field[l] = (d.boundary_fn)(x, y);
        }
        d.rebuild_arms();
        d
    }

    #[inline]
    pub fn arm(&self, node: usize, m: usize, side: usize) -> &Arm {
        &self.arms[node * 2 * self.k() + 2 * m + side]
    }

    fn rebuild_arms(&mut self) {
        let k = self.k();
        let mut arms = Vec::with_capacity(self.interior.len() * 2 * k);
        let (mut bmax, mut bmin) = (f64::NEG_INFINITY, f64::INFINITY);
        // analytic shapes read boundary data at arm crossings, masks at boundary nodes
        let nodes: &[usize] = if self.is_analytic() { &[] } else { &self.boundary };
        for &l in nodes {
            bmax = bmax.max(self.boundary_field[l]);
            bmin = bmin.min(self.boundary_field[l]);
        }
        for n in 0..self.interior.len() {
            for m in 0..k {
                let w = self.directions[m];
                for sgn in [1.0, -1.0] {
                    let a = self.build_arm_fixed(n, m, [sgn * w[0], sgn * w[1]]);
                    if a.count == 0 {
                        bmax = bmax.max(a.constant);
                        bmin = bmin.min(a.constant);
                    }
                    arms.push(a);
                }
            }
        }
        self.arms = arms;
        self.boundary_max = bmax;
        self.boundary_min = bmin;
    }

    fn lattice_step(&self, m: usize) -> Option<(i64, i64)> {
        let k = self.k();
        if m == 0 {
            Some((1, 0))
        } else if 2 * m == k {
            Some((0, 1))
        } else if k.is_multiple_of(4) && 4 * m == k {
            Some((1, 1))
        } else if k.is_multiple_of(4) && 4 * m == 3 * k {
            Some((-1, 1))
        } else {
            None
        }
    }

    fn build_arm_fixed(&self, node: usize, m: usize, w: [f64; 2]) -> Arm {
        match self.lattice_step(m) {
            Some((di, dj)) => {
                let flip = if w[0] * di as f64 + w[1] * dj as f64 > 0.0 { 1 } else { -1 };
                self.lattice_arm(node, w, (flip * di, flip * dj))
            }
            None => self.interp_arm(node, w, self.arm_len),
        }
    }

    fn lattice_arm(&self, node: usize, w: [f64; 2], step: (i64, i64)) -> Arm {
        let l = self.interior[node];
        let (i, j) = self.lattice_ij(l);
        let nb = ((j as i64 + step.1) as usize) * self.nx + (i as i64 + step.0) as usize;
        let len = self.h * ((step.0 * step.0 + step.1 * step.1) as f64).sqrt();
        if self.kind[nb] == NodeKind::Interior {
            return Arm::node(len, nb);
        }
        match self.ray_exit(l, w) {
            Some(t) => {
                let (x, y) = self.position(l);
                Arm::boundary(t, self.boundary_value(x + t * w[0], y + t * w[1]))
            }
            None => Arm::node(len, nb),
        }
    }

    /// Distance from lattice node l along unit w to the analytic boundary.
    fn ray_exit(&self, l: usize, w: [f64; 2]) -> Option<f64> {
        let (x, y) = self.position(l);
        match self.geometry {
            Geometry::Disk { radius } => {
                let b = x * w[0] + y * w[1];
                let c = x * x + y * y - radius * radius;
                Some(-b + (b * b - c).max(0.0).sqrt())
            }
            Geometry::Rectangle { a, b } => {
                let exit = |p: f64, d: f64, hi: f64| {
                    if d > 1e-15 {
                        (hi - p) / d
                    } else if d < -1e-15 {
                        -p / d
                    } else {
                        f64::INFINITY
                    }
                };
                Some(exit(x, w[0], a).min(exit(y, w[1], b)))
            }
            Geometry::Mask => None,
        }
    }

    /// Bilinear stencil at lattice coordinates (fx, fy); None when a used corner is unusable.
    fn bilinear(&self, fx: f64, fy: f64, analytic: bool) -> Option<([u32; 4], [f64; 4], u8)> {
        let snap = |v: f64| if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
        let (fx, fy) = (snap(fx), snap(fy));
        let (i0, j0) = (fx.floor(), fy.floor());
        if i0 < 0.0 || j0 < 0.0 || i0 as usize + 1 >= self.nx || j0 as usize + 1 >= self.ny {
            return None;
        }
        let (sx, sy) = (fx - i0, fy - j0);
        let (i0, j0) = (i0 as usize, j0 as usize);
        let mut idx = [0u32; 4];
        let mut wts = [0.0; 4];
        let mut count = 0u8;
        for (di, dj, wt) in [
            (0, 0, (1.0 - sx) * (1.0 - sy)),
            (1, 0, sx * (1.0 - sy)),
            (0, 1, (1.0 - sx) * sy),
            (1, 1, sx * sy),
        ] {
            if wt <= 0.0 {
                continue;
            }
            let l = (j0 + dj) * self.nx + i0 + di;
            let ok = match self.kind[l] {
                NodeKind::Interior => true,
                NodeKind::Boundary => !analytic,
                NodeKind::Exterior => false,
            };
            if !ok {
                return None;
            }
            idx[count as usize] = l as u32;
            wts[count as usize] = wt;
            count += 1;
        }
        Some((idx, wts, count))
    }

    /// Arm of nominal length `len` along unit w, interpolated bilinearly off-lattice. Arms that
    /// cross an analytic boundary end on it; arms whose stencil would touch non-interior nodes
    /// are shortened, falling back to the boundary crossing.
    pub fn interp_arm(&self, node: usize, w: [f64; 2], len: f64) -> Arm {
        let l = self.interior[node];
        let (x, y) = self.position(l);
        let analytic = self.is_analytic();
        let exit = self.ray_exit(l, w);
        if let Some(t) = exit {
            if t <= len {
                return Arm::boundary(t, self.boundary_value(x + t * w[0], y + t * w[1]));
            }
        }
        let (fi, fj) = ((l % self.nx) as f64, (l / self.nx) as f64);
        let mut t = len;
        let min_t = if analytic { 0.5 * len } else { 0.25 * self.h };
        while t >= min_t - 1e-12 {
            if let Some((idx, wts, count)) = self.bilinear(fi + t * w[0] / self.h, fj + t * w[1] / self.h, analytic) {
                return Arm { len: t, idx, w: wts, count, constant: 0.0 };
            }
            t -= 0.25 * self.h;
        }
        match exit {
            Some(t) => Arm::boundary(t, self.boundary_value(x + t * w[0], y + t * w[1])),
            None => {
                // mask domains always admit the arm inside the 3x3 block
                let t = 0.25 * self.h;
                let (idx, wts, count) = self
                    .bilinear(fi + t * w[0] / self.h, fj + t * w[1] / self.h, false)
                    .expect("validated 3x3 neighbourhood");
                Arm { len: t, idx, w: wts, count, constant: 0.0 }
            }
        }
    }

    /// Lattice field with interior values from `u` and boundary data elsewhere.
    pub fn lattice_field(&self, u: &[f64]) -> Vec<f64> {
        let mut f = self.boundary_field.clone();
        for (n, &l) in self.interior.iter().enumerate() {
            f[l] = u[n];
        }
        f
    }

    pub fn boundary_fn(&self) -> ScalarFn {
        self.boundary_fn.clone()
    }

    /// Distance from (x, y) to the boundary (to the nearest boundary node for masks);
    /// nonpositive outside analytic shapes.
    pub fn distance_to_boundary(&self, x: f64, y: f64) -> f64 {
        match self.geometry {
            Geometry::Disk { radius } => radius - x.hypot(y),
            Geometry::Rectangle { a, b } => x.min(a - x).min(y).min(b - y),
            Geometry::Mask => self
                .boundary
                .iter()
                .map(|&l| {
                    let (bx, by) = self.position(l);
                    (bx - x).hypot(by - y)
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Lattice vector of f at interior and boundary nodes (zero elsewhere).
    pub fn sample_lattice(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.kind.len()];
        for &l in self.interior.iter().chain(&self.boundary) {
            let (x, y) = self.position(l);
            out[l] = f(x, y);
        }
        out
    }

    /// Lattice index of the interior or boundary node nearest to (x, y).
    pub fn nearest_node(&self, x: f64, y: f64) -> Option<usize> {
        self.interior.iter().chain(&self.boundary).cloned().min_by(|&a, &b| {
            let (pa, pb) = (self.position(a), self.position(b));
            let da = (pa.0 - x).hypot(pa.1 - y);
            let db = (pb.0 - x).hypot(pb.1 - y);
            da.total_cmp(&db).then(a.cmp(&b))
        })
    }

    /// Interior values of a function sampled at interior nodes.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.interior
            .iter()
            .map(|&l| {
                let (x, y) = self.position(l);
                f(x, y)
            })
            .collect()
    }
}
