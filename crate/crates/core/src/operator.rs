//! Operator families H(p, X), their homogeneity signatures and coercivity profiles.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    PlapType { q: f64, a: f64 },
    PseudoPlap { p: f64, q: f64 },
    InfType { q: f64 },
    PucciPlus { lam: f64, lam_big: f64, q: f64 },
    PucciMinus { lam: f64, lam_big: f64, q: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::PlapType { .. } => "plap_type",
            Family::PseudoPlap { .. } => "pseudo_plap",
            Family::InfType { .. } => "inf_type",
            Family::PucciPlus { .. } => "pucci_plus",
            Family::PucciMinus { .. } => "pucci_minus",
        }
    }
}

/// A member of one of the built-in operator families in dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub struct OperatorSpec {
    family: Family,
    n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneitySignature {
    pub k1: f64,
    pub k2: u32,
    pub k: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub s_hat: f64,
}

impl HomogeneitySignature {
    pub fn new(k1: f64, k2: u32) -> Self {
        let k = k1 + k2 as f64;
        let gamma = k1 + 2.0 * k2 as f64;
        HomogeneitySignature { k1, k2, k, gamma, alpha: gamma / k, s_hat: k1 / k }
    }
}

impl OperatorSpec {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Input(format!("dimension must be at least 2, got {n}")));
        }
        let finite_nonneg = |v: f64, name: &str| -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Input(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        match family {
            Family::PlapType { q, a } => {
                finite_nonneg(q, "q")?;
                if !(a.is_finite() && a > -1.0) {
                    return Err(Error::Input(format!("a must exceed -1, got {a}")));
                }
            }
            Family::PseudoPlap { p, q } => {
                finite_nonneg(p, "p")?;
                finite_nonneg(q, "q")?;
            }
            Family::InfType { q } => finite_nonneg(q, "q")?,
            Family::PucciPlus { lam, lam_big, q } | Family::PucciMinus { lam, lam_big, q } => {
                finite_nonneg(q, "q")?;
                if !(lam > 0.0 && lam <= lam_big && lam_big.is_finite()) {
                    return Err(Error::Input(format!(
                        "pucci requires 0 < lam <= Lam, got lam={lam}, Lam={lam_big}"
                    )));
                }
            }
        }
        Ok(OperatorSpec { family, n })
    }

    pub fn laplacian(n: usize) -> Self {
        Self::plap_type(n, 0.0, 0.0).expect("valid laplacian")
    }
    pub fn plap_type(n: usize, q: f64, a: f64) -> Result<Self> {
        Self::new(Family::PlapType { q, a }, n)
    }
    pub fn pseudo_plap(n: usize, p: f64, q: f64) -> Result<Self> {
        Self::new(Family::PseudoPlap { p, q }, n)
    }
    pub fn inf_type(n: usize, q: f64) -> Result<Self> {
        Self::new(Family::InfType { q }, n)
    }
    pub fn pucci_plus(n: usize, lam: f64, lam_big: f64, q: f64) -> Result<Self> {
        Self::new(Family::PucciPlus { lam, lam_big, q }, n)
    }
    pub fn pucci_minus(n: usize, lam: f64, lam_big: f64, q: f64) -> Result<Self> {
        Self::new(Family::PucciMinus { lam, lam_big, q }, n)
    }

    pub fn family(&self) -> Family {
        self.family
    }
    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether the operator is invariant under rotations and reflections.
    pub fn symmetric(&self) -> bool {
        match self.family {
            Family::PlapType { .. } | Family::PucciPlus { .. } | Family::PucciMinus { .. } => true,
            Family::InfType { q } => q == 0.0,
            Family::PseudoPlap { .. } => false,
        }
    }

    /// True when H_h depends linearly on u (frozen coefficients never change).
    pub fn is_linear(&self) -> bool {
        match self.family {
            Family::PlapType { q, a } => q == 0.0 && a == 0.0,
            Family::PseudoPlap { p, q } => p == 0.0 && q == 0.0,
            Family::PucciPlus { lam, lam_big, q } | Family::PucciMinus { lam, lam_big, q } => {
                q == 0.0 && lam == lam_big
            }
            Family::InfType { .. } => false,
        }
    }

    pub fn signature(&self) -> HomogeneitySignature {
        let k1 = match self.family {
            Family::PlapType { q, .. } => q,
            Family::PseudoPlap { p, q } => q + p,
            Family::InfType { q } => 2.0 * q + 2.0,
            Family::PucciPlus { q, .. } | Family::PucciMinus { q, .. } => q,
        };
        HomogeneitySignature::new(k1, 1)
    }

    /// H(p, X) in closed form.
    pub fn eval(&self, p: &DVector<f64>, x: &DMatrix<f64>) -> Result<f64> {
        let n = self.n;
        if p.len() != n || x.nrows() != n || x.ncols() != n {
            return Err(Error::Input(format!(
                "dimension mismatch: n={n}, |p|={}, X is {}x{}",
                p.len(),
                x.nrows(),
                x.ncols()
            )));
        }
        let scale = x.amax().max(1.0);
        if (x - x.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Input("X must be symmetric".into()));
        }
        Ok(self.eval_unchecked(p.as_slice(), x))
    }

    fn eval_unchecked(&self, p: &[f64], x: &DMatrix<f64>) -> f64 {
        let n = self.n;
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let trace = x.trace();
        match self.family {
            Family::PlapType { q, a } => {
                let w = norm.powf(q);
                let directional = if a == 0.0 {
                    0.0
                } else if norm == 0.0 {
                    // direction undefined: average over directions
                    if q == 0.0 {
                        trace / n as f64
                    } else {
                        0.0
                    }
                } else {
                    quad(x, p) / (norm * norm)
                };
                w * (trace + a * directional)
            }
            Family::PseudoPlap { p: pe, q } => {
                let w = norm.powf(q);
                let s: f64 = (0..n).map(|i| p[i].abs().powf(pe) * x[(i, i)]).sum();
                w * s
            }
            Family::InfType { q } => {
                let w: Vec<f64> = p.iter().map(|&v| v.abs().powf(q) * v).collect();
                quad(x, &w)
            }
            Family::PucciPlus { lam, lam_big, q } => {
                let (pos, neg) = eig_parts(x);
                norm.powf(q) * (lam_big * pos + lam * neg)
            }
            Family::PucciMinus { lam, lam_big, q } => {
                let (pos, neg) = eig_parts(x);
                norm.powf(q) * (lam * pos + lam_big * neg)
            }
        }
    }

    /// G(r, v1, v2) = H(v1 e, (v1/r)(I - e⊗e) + v2 e⊗e), independent of the unit vector e.
    pub fn radial_eval(&self, r: f64, v1: f64, v2: f64) -> Result<f64> {
        if !self.symmetric() {
            return Err(Error::Unsupported(format!("{} with these parameters", self.family.name())));
        }
        if !(r > 0.0) {
            return Err(Error::Input(format!("radius must be positive, got {r}")));
        }
        Ok(self.radial_unchecked(r, v1, v2))
    }

    pub(crate) fn radial_unchecked(&self, r: f64, v1: f64, v2: f64) -> f64 {
        let m = (self.n - 1) as f64;
        let t = v1 / r;
        match self.family {
            Family::PlapType { q, a } => {
                let tr = m * t + v2;
                if v1 == 0.0 {
                    if q == 0.0 {
                        tr * (1.0 + a / self.n as f64)
                    } else {
                        0.0
                    }
                } else {
                    v1.abs().powf(q) * (tr + a * v2)
                }
            }
            Family::InfType { .. } => v1 * v1 * v2,
            Family::PucciPlus { lam, lam_big, q } => {
                let f = |x: f64| if x > 0.0 { lam_big * x } else { lam * x };
                v1.abs().powf(q) * (m * f(t) + f(v2))
            }
            Family::PucciMinus { lam, lam_big, q } => {
                let f = |x: f64| if x > 0.0 { lam * x } else { lam_big * x };
                v1.abs().powf(q) * (m * f(t) + f(v2))
            }
            Family::PseudoPlap { .. } => unreachable!("checked by caller"),
        }
    }

    /// (m1, m2, m3, m4) at s: extremes of H(e, I - s e⊗e) and H(e, s e⊗e - I) over unit e.
    pub fn coercivity(&self, s: f64) -> [f64; 4] {
        let n = self.n as f64;
        match self.family {
            Family::PlapType { a, .. } => {
                let v = n - s + a * (1.0 - s);
                [v, v, -v, -v]
            }
            Family::InfType { q: 0.0 } => [1.0 - s, 1.0 - s, s - 1.0, s - 1.0],
            Family::PucciPlus { lam, lam_big, .. } => {
                let f = |x: f64| if x > 0.0 { lam_big * x } else { lam * x };
                let a = (n - 1.0) * f(1.0) + f(1.0 - s);
                let b = (n - 1.0) * f(-1.0) + f(s - 1.0);
                [a, a, b, b]
            }
            Family::PucciMinus { lam, lam_big, .. } => {
                let f = |x: f64| if x > 0.0 { lam * x } else { lam_big * x };
                let a = (n - 1.0) * f(1.0) + f(1.0 - s);
                let b = (n - 1.0) * f(-1.0) + f(s - 1.0);
                [a, a, b, b]
            }
            _ => {
                let plus = |e: &[f64]| self.on_direction(e, s, 1.0);
                let minus = |e: &[f64]| self.on_direction(e, s, -1.0);
                [
                    sphere_extremum(self.n, &plus, false),
                    sphere_extremum(self.n, &plus, true),
                    sphere_extremum(self.n, &minus, false),
                    sphere_extremum(self.n, &minus, true),
                ]
            }
        }
    }

    /// H(e, sign·(I - s e⊗e)) for a unit vector e.
    pub(crate) fn on_direction(&self, e: &[f64], s: f64, sign: f64) -> f64 {
        let n = self.n;
        match self.family {
            Family::PseudoPlap { p, q } => {
                let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
                let t: f64 = e.iter().map(|&v| v.abs().powf(p) * (1.0 - s * v * v)).sum();
                return sign * norm.powf(q) * t;
            }
            Family::InfType { q } => {
                let (mut ww, mut we) = (0.0, 0.0);
                for &v in e {
                    let w = v.abs().powf(q) * v;
                    ww += w * w;
                    we += w * v;
                }
                return sign * (ww - s * we * we);
            }
            _ => {}
        }
        let mut x = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                x[(i, j)] -= s * e[i] * e[j];
            }
        }
        self.eval_unchecked(e, &(x * sign))
    }

    pub fn mlow(&self, s: f64) -> f64 {
        let m = self.coercivity(s);
        m[0].min(-m[3])
    }

    pub fn mhigh(&self, s: f64) -> f64 {
        let m = self.coercivity(s);
        m[1].max(-m[2])
    }

    /// m1 evaluated at s_hat, the constant entering sigma.
    pub fn m1_hat(&self) -> f64 {
        self.mlow(self.signature().s_hat)
    }

    /// sigma = 1 / (alpha m1_hat^{1/k}).
    pub fn sigma(&self) -> Result<f64> {
        let sig = self.signature();
        let m1 = self.m1_hat();
        if !(m1 > 0.0) {
            return Err(Error::Coercivity(format!("m1(s_hat) = {m1} is not positive")));
        }
        Ok(1.0 / (sig.alpha * m1.powf(1.0 / sig.k)))
    }

    pub fn profile(&self) -> Result<CoercivityProfile> {
        CoercivityProfile::compute(self)
    }

    pub fn classify_case(&self) -> Result<CaseTag> {
        Ok(self.profile()?.case)
    }

    pub fn check_conditions(&self, seed: u64, trials: usize) -> ConditionReport {
        check_conditions(self, seed, trials)
    }
}

fn quad(x: &DMatrix<f64>, w: &[f64]) -> f64 {
    let n = w.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += x[(i, j)] * w[j];
        }
        s += w[i] * row;
    }
    s
}

/// Sum of positive eigenvalues and sum of negative eigenvalues of a symmetric matrix.
fn eig_parts(x: &DMatrix<f64>) -> (f64, f64) {
    let split = |ev: &[f64]| {
        ev.iter().fold((0.0, 0.0), |(p, m), &e| if e > 0.0 { (p + e, m) } else { (p, m + e) })
    };
    if x.nrows() == 2 {
        let (a, b, d) = (x[(0, 0)], x[(0, 1)], x[(1, 1)]);
        let mid = 0.5 * (a + d);
        let rad = (0.5 * (a - d)).hypot(b);
        return split(&[mid + rad, mid - rad]);
    }
    let eig = SymmetricEigen::new(x.clone());
    split(eig.eigenvalues.as_slice())
}

/// Extremum of f over the unit sphere: coordinate-sparse candidates e_i = j^{-1/2}
/// on the first j coordinates, refined by plane rotations.
fn sphere_extremum(n: usize, f: &dyn Fn(&[f64]) -> f64, maximize: bool) -> f64 {
    let better = |a: f64, b: f64| if maximize { a > b } else { a < b };
    let mut best = f64::NAN;
    for j in 1..=n {
        let mut e = vec![0.0; n];
        let c = 1.0 / (j as f64).sqrt();
        e[..j].iter_mut().for_each(|v| *v = c);
        let mut val = f(&e);
        let mut step: f64 = 0.5;
        while step > 1e-12 {
            let mut improved = false;
            for i in 0..n {
                for k in (i + 1)..n {
                    for &t in &[step, -step] {
                        let (ct, st) = (t.cos(), t.sin());
                        let mut trial = e.clone();
                        trial[i] = ct * e[i] - st * e[k];
                        trial[k] = st * e[i] + ct * e[k];
                        let v = f(&trial);
                        let gain = if maximize { v - val } else { val - v };
                        if gain > 1e-14 * (1.0 + val.abs()) {
                            val = v;
                            e = trial;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if best.is_nan() || better(val, best) {
            best = val;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case")]
pub enum CaseTag {
    CaseI { s_bar: f64 },
    CaseII { s_bar: f64 },
}

impl CaseTag {
    pub fn s_bar(&self) -> f64 {
        match *self {
            CaseTag::CaseI { s_bar } | CaseTag::CaseII { s_bar } => s_bar,
        }
    }
}

pub const S_MIN: f64 = -5.0;
pub const S_MAX: f64 = 10.0;
pub const S_SAMPLES: usize = 400;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivitySample {
    pub s: f64,
    pub m: [f64; 4],
    pub mlow: f64,
    pub mhigh: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityProfile {
    pub samples: Vec<CoercivitySample>,
    pub m1_hat: f64,
    pub m4_hat: f64,
    pub sigma: f64,
    pub case: CaseTag,
    /// Zero crossing of mhigh located by bisection.
    pub s_cross: f64,
    pub s0: Option<f64>,
    pub s1: Option<f64>,
    pub ell: Option<f64>,
}

impl CoercivityProfile {
    pub fn compute(op: &OperatorSpec) -> Result<Self> {
        let sig = op.signature();
        let samples: Vec<CoercivitySample> = (0..S_SAMPLES)
            .map(|i| {
                let s = S_MIN + (S_MAX - S_MIN) * i as f64 / (S_SAMPLES - 1) as f64;
                let m = op.coercivity(s);
                CoercivitySample { s, m, mlow: m[0].min(-m[3]), mhigh: m[1].max(-m[2]) }
            })
            .collect();
        let hat = op.coercivity(sig.s_hat);
        let m1_hat = hat[0].min(-hat[3]);
        let m4_hat = hat[3];
        if !(m1_hat > 0.0) || !(m4_hat < 0.0) {
            return Err(Error::Coercivity(format!(
                "m1(s_hat) = {m1_hat}, m4(s_hat) = {m4_hat}"
            )));
        }
        let sigma = 1.0 / (sig.alpha * m1_hat.powf(1.0 / sig.k));

        // mhigh is nonincreasing, so its negative set is a half-line (s_cross, inf).
        let first_neg = samples
            .iter()
            .position(|c| c.mhigh < 0.0)
            .ok_or_else(|| Error::Coercivity("mhigh never negative on [-5, 10]".into()))?;
        let s_cross = if first_neg == 0 {
            S_MIN
        } else {
            let (mut lo, mut hi) = (samples[first_neg - 1].s, samples[first_neg].s);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if op.mhigh(mid) < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            lo
        };
        let case = if s_cross < 2.0 {
            CaseTag::CaseI { s_bar: 0.5 * (s_cross.max(1.0) + 2.0) }
        } else {
            CaseTag::CaseII { s_bar: s_cross.max(2.0) }
        };

        let s1 = samples
            .iter()
            .take_while(|c| c.s <= 1.0 && c.mlow > 0.0)
            .last()
            .map(|c| c.s);
        let s0 = samples.iter().skip(first_neg).find(|c| c.s >= 1.0).map(|c| c.s);
        let ell = s0.map(|s| -op.mhigh(s) / 2.0).filter(|l| *l > 0.0);
        Ok(CoercivityProfile { samples, m1_hat, m4_hat, sigma, case, s_cross, s0, s1, ell })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,m1,m2,m3,m4,mlow,mhigh\n");
        for c in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.s, c.m[0], c.m[1], c.m[2], c.m[3], c.mlow, c.mhigh
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub passed: bool,
    /// Worst normalized violation observed (nonpositive when passing).
    pub worst: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub operator: OperatorSpec,
    pub seed: u64,
    pub trials: usize,
    pub a: ConditionResult,
    pub b: ConditionResult,
    pub c: ConditionResult,
    pub d: ConditionResult,
}

impl ConditionReport {
    /// A, B and C are required; D is informational for non-symmetric families.
    pub fn required_pass(&self) -> bool {
        self.a.passed && self.b.passed && self.c.passed
    }
}

pub(crate) fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

pub(crate) fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::<f64>::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

pub(crate) fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

fn check_conditions(op: &OperatorSpec, seed: u64, trials: usize) -> ConditionReport {
    let n = op.n();
    let sig = op.signature();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut wa, mut wb, mut wd) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..trials.max(1) {
        let p = random_vector(&mut rng, n);
        let x = random_symmetric(&mut rng, n);
        let h = op.eval_unchecked(p.as_slice(), &x);

        let b = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let hp = op.eval_unchecked(p.as_slice(), &(&x + &b * b.transpose()));
        wa = wa.max((h - hp) / (1.0 + h.abs()));

        let theta: f64 = rng.gen_range(0.05..5.0);
        let hx = op.eval_unchecked(p.as_slice(), &(&x * theta));
        let want = theta.powi(sig.k2 as i32) * h;
        wb = wb.max((hx - want).abs() / (1.0 + want.abs()) - 1e-12);
        let theta: f64 = rng.gen_range(-5.0..5.0);
        let hp = op.eval_unchecked((&p * theta).as_slice(), &x);
        let want = theta.abs().powf(sig.k1) * h;
        wb = wb.max((hp - want).abs() / (1.0 + want.abs()) - 1e-12);

        let q = random_orthogonal(&mut rng, n);
        let hq = op.eval_unchecked((&q * &p).as_slice(), &(&q * &x * q.transpose()));
        wd = wd.max((hq - h).abs() / (1.0 + h.abs()) - 1e-10);
    }
    let wc = match op.profile() {
        Ok(pr) => (-pr.m1_hat).max(pr.m4_hat),
        Err(_) => f64::INFINITY,
    };
    ConditionReport {
        operator: *op,
        seed,
        trials,
        a: ConditionResult { passed: wa <= 1e-12, worst: wa },
        b: ConditionResult { passed: wb <= 0.0, worst: wb },
        c: ConditionResult { passed: wc < 0.0, worst: wc },
        d: ConditionResult { passed: wd <= 0.0, worst: wd },
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorRepr {
    family: String,
    n: usize,
    #[serde(default)]
    params: ParamsRepr,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsRepr {
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lam: Option<f64>,
    #[serde(rename = "Lam", skip_serializing_if = "Option::is_none")]
    lam_big: Option<f64>,
}

impl TryFrom<OperatorRepr> for OperatorSpec {
    type Error = Error;
    fn try_from(r: OperatorRepr) -> Result<Self> {
        let pr = r.params;
        let q = pr.q.unwrap_or(0.0);
        let need = |v: Option<f64>, name: &'static str| v.ok_or(Error::MissingParameter(name));
        let reject = |present: bool, name: &str| -> Result<()> {
            if present {
                Err(Error::Input(format!("parameter {name} not used by family {}", r.family)))
            } else {
                Ok(())
            }
        };
        let family = match r.family.as_str() {
            "plap_type" => {
                reject(pr.p.is_some() || pr.lam.is_some() || pr.lam_big.is_some(), "p/lam/Lam")?;
                Family::PlapType { q, a: pr.a.unwrap_or(0.0) }
            }
            "pseudo_plap" => {
                reject(pr.a.is_some() || pr.lam.is_some() || pr.lam_big.is_some(), "a/lam/Lam")?;
                Family::PseudoPlap { p: need(pr.p, "p")?, q }
            }
            "inf_type" => {
                reject(pr.a.is_some() || pr.p.is_some() || pr.lam.is_some() || pr.lam_big.is_some(), "a/p/lam/Lam")?;
                Family::InfType { q }
            }
            "pucci_plus" | "pucci_minus" => {
                reject(pr.a.is_some() || pr.p.is_some(), "a/p")?;
                let lam = need(pr.lam, "lam")?;
                let lam_big = need(pr.lam_big, "Lam")?;
                if r.family == "pucci_plus" {
                    Family::PucciPlus { lam, lam_big, q }
                } else {
                    Family::PucciMinus { lam, lam_big, q }
                }
            }
            other => return Err(Error::Input(format!("unknown operator family {other:?}"))),
        };
        OperatorSpec::new(family, r.n)
    }
}

impl From<OperatorSpec> for OperatorRepr {
    fn from(op: OperatorSpec) -> Self {
        let mut params = ParamsRepr::default();
        match op.family {
            Family::PlapType { q, a } => {
                params.q = Some(q);
                params.a = Some(a);
            }
            Family::PseudoPlap { p, q } => {
                params.p = Some(p);
                params.q = Some(q);
            }
            Family::InfType { q } => params.q = Some(q),
            Family::PucciPlus { lam, lam_big, q } | Family::PucciMinus { lam, lam_big, q } => {
                params.lam = Some(lam);
                params.lam_big = Some(lam_big);
                params.q = Some(q);
            }
        }
        OperatorRepr { family: op.family.name().to_string(), n: op.n, params }
    }
}

impl std::fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.family {
            Family::PlapType { q, a } => write!(f, "plap_type(n={}, q={q}, a={a})", self.n),
            Family::PseudoPlap { p, q } => write!(f, "pseudo_plap(n={}, p={p}, q={q})", self.n),
            Family::InfType { q } => write!(f, "inf_type(n={}, q={q})", self.n),
            Family::PucciPlus { lam, lam_big, q } => {
                write!(f, "pucci_plus(n={}, lam={lam}, Lam={lam_big}, q={q})", self.n)
            }
            Family::PucciMinus { lam, lam_big, q } => {
                write!(f, "pucci_minus(n={}, lam={lam}, Lam={lam_big}, q={q})", self.n)
            }
        }
    }
}

/// A representative set of admissible operators from every family in dimension n.
pub fn builtins(n: usize) -> Vec<OperatorSpec> {
    vec![
        OperatorSpec::laplacian(n),
        OperatorSpec::plap_type(n, 1.0, 0.5).unwrap(),
        OperatorSpec::plap_type(n, 0.0, -0.5).unwrap(),
        OperatorSpec::pseudo_plap(n, 2.0, 0.0).unwrap(),
        OperatorSpec::inf_type(n, 0.0).unwrap(),
        OperatorSpec::inf_type(n, 1.0).unwrap(),
        OperatorSpec::pucci_plus(n, 1.0, 2.0, 0.0).unwrap(),
        OperatorSpec::pucci_minus(n, 1.0, 2.0, 0.0).unwrap(),
        OperatorSpec::pucci_plus(n, 1.0, 2.0, 1.0).unwrap(),
    ]
}
