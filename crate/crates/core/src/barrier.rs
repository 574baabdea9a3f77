//! Radial barriers c ± d r^β, c ± d r^{-β}, c ± d r^α and the constants derived from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CaseTag, OperatorSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BarrierShape {
    Power { beta: f64 },
    InversePower { beta: f64 },
    AlphaCone,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub shape: BarrierShape,
    pub sign: Sign,
    pub c: f64,
    pub d: f64,
    pub center: Vec<f64>,
}

impl BarrierSpec {
    pub fn new(shape: BarrierShape, sign: Sign, c: f64, d: f64, center: Vec<f64>) -> Result<Self> {
        if !(d > 0.0) {
            return Err(Error::Input(format!("barrier slope d must be positive, got {d}")));
        }
        match shape {
            BarrierShape::Power { beta } | BarrierShape::InversePower { beta } if !(beta > 0.0) => {
                Err(Error::Input(format!("barrier exponent must be positive, got {beta}")))
            }
            _ => Ok(BarrierSpec { shape, sign, c, d, center }),
        }
    }

    /// Exponent of r, with the alpha cone resolved against the operator.
    pub fn exponent(&self, op: &OperatorSpec) -> f64 {
        match self.shape {
            BarrierShape::Power { beta } => beta,
            BarrierShape::InversePower { beta } => -beta,
            BarrierShape::AlphaCone => op.signature().alpha,
        }
    }

    pub fn value(&self, op: &OperatorSpec, r: f64) -> f64 {
        self.c + self.sign.value() * self.d * r.powf(self.exponent(op))
    }

    /// (v'(r), v''(r)).
    pub fn derivatives(&self, op: &OperatorSpec, r: f64) -> (f64, f64) {
        let e = self.exponent(op);
        let sd = self.sign.value() * self.d;
        (sd * e * r.powf(e - 1.0), sd * e * (e - 1.0) * r.powf(e - 2.0))
    }

    pub fn value_at(&self, op: &OperatorSpec, x: &[f64]) -> f64 {
        let r = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        self.value(op, r)
    }
}

/// H(e, I - s e⊗e) (sign = +1) or H(e, s e⊗e - I) (sign = -1) for a symmetric operator.
fn h_on_profile(op: &OperatorSpec, s: f64, sign: f64) -> f64 {
    let mut e = vec![0.0; op.n()];
    e[0] = 1.0;
    op.on_direction(&e, s, sign)
}

/// H(Dv, D²v) of the barrier at radius r, in closed form.
pub fn barrier_residual(op: &OperatorSpec, b: &BarrierSpec, r: f64) -> Result<f64> {
    if !op.symmetric() {
        return Err(Error::Unsupported(format!("{op}")));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    let sig = op.signature();
    let sg = b.sign.value();
    Ok(match b.shape {
        BarrierShape::Power { beta } => {
            (b.d * beta).powf(sig.k) * r.powf(sig.k * beta - sig.gamma) * h_on_profile(op, 2.0 - beta, sg)
        }
        BarrierShape::AlphaCone => {
            let beta = sig.alpha;
            (b.d * beta).powf(sig.k) * h_on_profile(op, 2.0 - beta, sg)
        }
        BarrierShape::InversePower { beta } => {
            (b.d * beta).powf(sig.k) / r.powf(sig.k * beta + sig.gamma) * h_on_profile(op, beta + 2.0, -sg)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub formula_id: String,
    pub value: f64,
    pub applicable: bool,
    pub inputs: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(formula_id: &str, value: f64, inputs: &[(&str, f64)]) -> Self {
        BoundReport {
            formula_id: formula_id.to_string(),
            value,
            applicable: value.is_finite(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            extra: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.extra.insert(key.to_string(), v);
        self
    }
}

/// Upper bound sup_h + σ (sup f⁺)^{1/k} R_o^α (value) and lower bound
/// inf_h − σ |inf f⁻|^{1/k} R_o^α (extra "lower").
pub fn sup_inf_bound(
    op: &OperatorSpec,
    sup_h: f64,
    inf_h: f64,
    sup_f_plus: f64,
    inf_f_minus: f64,
    r_o: f64,
) -> Result<BoundReport> {
    if !(r_o > 0.0) {
        return Err(Error::Input(format!("R_o must be positive, got {r_o}")));
    }
    let sig = op.signature();
    let sigma = op.sigma()?;
    let reach = sigma * r_o.powf(sig.alpha);
    let upper = sup_h + reach * sup_f_plus.max(0.0).powf(1.0 / sig.k);
    let lower = inf_h - reach * inf_f_minus.min(0.0).abs().powf(1.0 / sig.k);
    Ok(BoundReport::new(
        "sup_inf_bound",
        upper,
        &[
            ("sup_h", sup_h),
            ("inf_h", inf_h),
            ("sup_f_plus", sup_f_plus),
            ("inf_f_minus", inf_f_minus),
            ("R_o", r_o),
            ("sigma", sigma),
        ],
    )
    .with("lower", lower))
}

/// Default exponent for the inverse-power barrier in case II.
pub fn default_case_ii_beta(s_bar: f64) -> f64 {
    1.0f64.max(s_bar - 2.0 + 0.5)
}

/// Existence threshold for positive solutions with positive boundary data.
/// `r` is the diameter of the domain; `rho` is half the outer-ball radius (case II only).
pub fn lambda_threshold(op: &OperatorSpec, nu: f64, r: f64, rho: Option<f64>) -> Result<BoundReport> {
    lambda_threshold_with_beta(op, nu, r, rho, None)
}

pub fn lambda_threshold_with_beta(
    op: &OperatorSpec,
    nu: f64,
    r: f64,
    rho: Option<f64>,
    beta: Option<f64>,
) -> Result<BoundReport> {
    if !(nu > 0.0) || !(r > 0.0) {
        return Err(Error::Input(format!("nu and R must be positive, got nu={nu}, R={r}")));
    }
    let sig = op.signature();
    match op.classify_case()? {
        CaseTag::CaseI { s_bar } => {
            let m = op.mhigh(s_bar);
            let value = m.abs() * (2.0 - s_bar).powf(sig.k) / (nu * r.powf(sig.gamma));
            Ok(BoundReport::new(
                "threshold_case_i",
                value,
                &[("nu", nu), ("R", r), ("s_bar", s_bar), ("mhigh", m)],
            ))
        }
        CaseTag::CaseII { s_bar } => {
            let rho = rho.ok_or(Error::MissingParameter("rho"))?;
            if !(rho > 0.0) {
                return Err(Error::Input(format!("rho must be positive, got {rho}")));
            }
            let beta = beta.unwrap_or_else(|| default_case_ii_beta(s_bar));
            if !(beta > s_bar - 2.0) {
                return Err(Error::Input(format!("beta must exceed s_bar - 2 = {}", s_bar - 2.0)));
            }
            let s = beta + 2.0;
            let m = op.mhigh(s);
            let value = m.abs() * beta.powf(sig.k) / (nu * r.powf(sig.gamma))
                * (rho / r).powf(sig.k * beta);
            Ok(BoundReport::new(
                "threshold_case_ii",
                value,
                &[("nu", nu), ("R", r), ("rho", rho), ("s_bar", s_bar), ("beta", beta), ("mhigh", m)],
            ))
        }
    }
}

/// Λ = ν^{-1} (σ R_o^α)^{-k} (value); for λ < Λ also θ = (1 − (λ/Λ)^{1/k})^{-1}
/// and the solution bracket [κ₁, θ κ₂] (extras "theta", "lower", "upper").
pub fn lambda_big_and_solution_bounds(
    op: &OperatorSpec,
    nu: f64,
    r_o: f64,
    lam: f64,
    kappa1: f64,
    kappa2: f64,
) -> Result<BoundReport> {
    if !(nu > 0.0) || !(r_o > 0.0) {
        return Err(Error::Input(format!("nu and R_o must be positive, got nu={nu}, R_o={r_o}")));
    }
    let sig = op.signature();
    let sigma = op.sigma()?;
    let big = (sigma * r_o.powf(sig.alpha)).powf(-sig.k) / nu;
    let mut rep = BoundReport::new(
        "lambda_big",
        big,
        &[("nu", nu), ("R_o", r_o), ("lam", lam), ("kappa1", kappa1), ("kappa2", kappa2)],
    );
    if lam >= 0.0 && lam < big {
        let theta = 1.0 / (1.0 - (lam / big).powf(1.0 / sig.k));
        rep = rep.with("theta", theta).with("lower", kappa1).with("upper", theta * kappa2);
    } else {
        rep.applicable = false;
    }
    Ok(rep)
}
