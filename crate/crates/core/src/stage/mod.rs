//! Stage points `ρ: C∞(M) → A`, lifted functions `f̄(ρ) = ρ(f)`, and the
//! lifted Einstein check.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};
use thiserror::Error;

use crate::einstein::{
    einstein_check, CovariantTensor, Derivation, EinsteinError, EinsteinMode, EinsteinVerdict,
    EnergyMomentum, MetricField, RESIDUAL_TOL,
};
use crate::grassmann::{Blade, GrassmannError, Multivector};
use crate::scalar::Scalar;
use crate::symalg::{
    differentiate, evaluate, fmt_point, is_identically_zero, new_rng, random_polynomial, Chart,
    ChartError, Expr,
};

/// Values of stage points: Grassmann numbers with real coefficients.
/// The real stage is `Λ_0`.
pub type StageValue = Multivector<Scalar>;

/// Tolerance for comparing non-exact stage values.
pub const VALUE_TOL: f64 = 1e-12;
pub const PROBE_PAIRS: usize = 64;
pub const PROBE_PAIR_SEED: u64 = 0x0b5e_55ed;
pub const SEPARATION_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StageError {
    #[error("category error: {0}")]
    Category(String),
    #[error("value {value} does not lie in the {carrier} carrier")]
    Carrier { value: String, carrier: String },
    #[error("expected {expected} components, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("malformed stage point: {0}")]
    Format(String),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
    #[error(transparent)]
    Einstein(#[from] EinsteinError),
}

impl From<crate::symalg::EvalError> for StageError {
    fn from(e: crate::symalg::EvalError) -> Self {
        StageError::Chart(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    /// Multiplicative maps (`C∞`).
    Smooth,
    /// Linear maps (`Lin`).
    Linear,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Smooth => "smooth",
            Category::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        match s {
            "smooth" => Some(Category::Smooth),
            "linear" | "lin" => Some(Category::Linear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Carrier {
    Reals,
    Grassmann(u8),
    GrassmannEven(u8),
    GrassmannOdd(u8),
}

impl Carrier {
    pub fn n(self) -> u8 {
        match self {
            Carrier::Reals => 0,
            Carrier::Grassmann(n) | Carrier::GrassmannEven(n) | Carrier::GrassmannOdd(n) => n,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Carrier::Reals => "reals",
            Carrier::Grassmann(_) => "grassmann",
            Carrier::GrassmannEven(_) => "grassmann_even",
            Carrier::GrassmannOdd(_) => "grassmann_odd",
        }
    }

    pub fn parse(name: &str, n: u8) -> Option<Carrier> {
        match name {
            "reals" if n == 0 => Some(Carrier::Reals),
            "grassmann" => Some(Carrier::Grassmann(n)),
            "grassmann_even" | "even" => Some(Carrier::GrassmannEven(n)),
            "grassmann_odd" | "odd" => Some(Carrier::GrassmannOdd(n)),
            _ => None,
        }
    }

    /// `ℝ ⊂ A`; fails only for the odd part, which lacks the unit blade.
    pub fn contains_reals(self) -> bool {
        !matches!(self, Carrier::GrassmannOdd(_))
    }

    /// Closed under multiplication; the odd part is not an algebra.
    pub fn is_algebra(self) -> bool {
        !matches!(self, Carrier::GrassmannOdd(_))
    }

    pub fn admits(self, v: &StageValue) -> bool {
        if v.n() != self.n() {
            return false;
        }
        match self {
            Carrier::Reals | Carrier::Grassmann(_) => true,
            Carrier::GrassmannEven(_) => v.terms().all(|(b, _)| b.is_even()),
            Carrier::GrassmannOdd(_) => v.terms().all(|(b, _)| !b.is_even()),
        }
    }
}

impl std::fmt::Display for Carrier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Carrier::Reals => write!(f, "reals"),
            other => write!(f, "{}({})", other.name(), other.n()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stage {
    pub carrier: Carrier,
    pub category: Category,
}

impl Stage {
    pub fn new(carrier: Carrier, category: Category) -> Result<Stage, StageError> {
        if !carrier.is_algebra() && category == Category::Smooth {
            return Err(StageError::Category(format!(
                "the {carrier} carrier is not an algebra; only the linear category applies"
            )));
        }
        Ok(Stage { carrier, category })
    }

    pub fn reals() -> Stage {
        Stage {
            carrier: Carrier::Reals,
            category: Category::Smooth,
        }
    }

    pub fn grassmann(n: u8, category: Category) -> Stage {
        Stage {
            carrier: Carrier::Grassmann(n),
            category,
        }
    }

    pub fn n(&self) -> u8 {
        self.carrier.n()
    }

    pub fn unit(&self) -> Result<StageValue, StageError> {
        if !self.carrier.contains_reals() {
            return Err(StageError::Category(format!(
                "the {} carrier has no unit",
                self.carrier
            )));
        }
        Ok(StageValue::one(self.n()))
    }

    /// `ab` in the carrier, failing when the carrier is not an algebra.
    pub fn mul(&self, a: &StageValue, b: &StageValue) -> Result<StageValue, StageError> {
        if !self.carrier.is_algebra() {
            return Err(StageError::Category(format!(
                "the {} carrier has no multiplication",
                self.carrier
            )));
        }
        Ok(a.try_mul(b)?)
    }
}

/// Elementary functionals on `C∞(M)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    Eval { point: Vec<Scalar> },
    DirDeriv { point: Vec<Scalar>, v: Vec<Scalar> },
}

impl Functional {
    pub fn point(&self) -> &[Scalar] {
        match self {
            Functional::Eval { point } | Functional::DirDeriv { point, .. } => point,
        }
    }

    pub fn apply(&self, chart: &Chart, f: &Expr) -> Result<Scalar, StageError> {
        chart.check_point(self.point())?;
        let b = chart.bindings(self.point())?;
        match self {
            Functional::Eval { .. } => Ok(evaluate(f, &b)?),
            Functional::DirDeriv { v, .. } => {
                if v.len() != chart.dim() {
                    return Err(StageError::Arity {
                        expected: chart.dim(),
                        got: v.len(),
                    });
                }
                let mut acc = Scalar::from(0);
                for (i, vi) in v.iter().enumerate() {
                    if vi.is_zero_within(0.0) {
                        continue;
                    }
                    let d = differentiate(f, chart.coord(i)?);
                    acc = acc + vi.clone() * evaluate(&d, &b)?;
                }
                Ok(acc)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTerm {
    pub lambda: StageValue,
    pub functional: Functional,
}

/// `ρ(f) = Σ_j λ_j L_j(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePoint {
    stage: Stage,
    terms: Vec<StageTerm>,
}

impl StagePoint {
    pub fn new(stage: Stage, terms: Vec<StageTerm>) -> Result<StagePoint, StageError> {
        for t in &terms {
            if !stage.carrier.admits(&t.lambda) {
                return Err(StageError::Carrier {
                    value: t.lambda.to_string(),
                    carrier: stage.carrier.to_string(),
                });
            }
        }
        Ok(StagePoint { stage, terms })
    }

    /// The classical point `ev_p` on a stage containing `ℝ`.
    pub fn ev(stage: Stage, point: Vec<Scalar>) -> Result<StagePoint, StageError> {
        let lambda = stage.unit()?;
        StagePoint::new(
            stage,
            vec![StageTerm {
                lambda,
                functional: Functional::Eval { point },
            }],
        )
    }

    pub fn zero(stage: Stage) -> StagePoint {
        StagePoint {
            stage,
            terms: Vec::new(),
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn terms(&self) -> &[StageTerm] {
        &self.terms
    }

    /// Single term `1 · ev_p`.
    pub fn is_evaluation(&self) -> bool {
        matches!(self.terms.as_slice(),
            [StageTerm { lambda, functional: Functional::Eval { .. } }] if *lambda == StageValue::one(self.stage.n()))
    }

    pub fn apply(&self, chart: &Chart, f: &Expr) -> Result<StageValue, StageError> {
        let mut acc = StageValue::zero(self.stage.n());
        for t in &self.terms {
            let v = t.functional.apply(chart, f)?;
            acc = acc.try_add(&t.lambda.scale(&v))?;
        }
        Ok(acc)
    }

    /// In the smooth category the point must be (probe-)multiplicative.
    pub fn validate(&self, chart: &Chart) -> Result<(), StageError> {
        for t in &self.terms {
            chart.check_point(t.functional.point())?;
        }
        if self.stage.category == Category::Smooth {
            if let Some(total) = self.single_evaluation_weight() {
                // ρ = Λ·ev_p is multiplicative iff Λ² = Λ.
                if !values_agree(&(&total * &total), &total, VALUE_TOL) {
                    return Err(StageError::Category(format!(
                        "weight {total} of an evaluation point is not idempotent but the stage category is smooth"
                    )));
                }
                return Ok(());
            }
            let probes = default_probe_pairs(chart);
            if let MultiplicativityVerdict::NotMultiplicative { f, g, .. } =
                is_multiplicative_probe(self, chart, &probes)?
            {
                return Err(StageError::Category(format!(
                    "point is not multiplicative (fails on f = {f}, g = {g}) but the stage category is smooth"
                )));
            }
        }
        Ok(())
    }

    /// `Σ λ_i` when every term evaluates at one common point.
    fn single_evaluation_weight(&self) -> Option<StageValue> {
        let mut point = None;
        let mut total = StageValue::zero(self.stage.n());
        for t in &self.terms {
            let Functional::Eval { point: p } = &t.functional else {
                return None;
            };
            match point {
                None => point = Some(p),
                Some(q) if q == p => {}
                Some(_) => return None,
            }
            total = &total + &t.lambda;
        }
        Some(total)
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|t| {
                let mut obj = json!({ "lambda": t.lambda.to_json_value() });
                match &t.functional {
                    Functional::Eval { point } => {
                        obj["kind"] = json!("eval");
                        obj["point"] = json!(point);
                    }
                    Functional::DirDeriv { point, v } => {
                        obj["kind"] = json!("dirderiv");
                        obj["point"] = json!(point);
                        obj["v"] = json!(v);
                    }
                }
                obj
            })
            .collect();
        json!({
            "category": self.stage.category.name(),
            "carrier": self.stage.carrier.name(),
            "n": self.stage.n(),
            "terms": terms,
        })
    }

    pub fn from_json(v: &Value) -> Result<StagePoint, StageError> {
        let bad = |m: String| StageError::Format(m);
        let category = v
            .get("category")
            .and_then(Value::as_str)
            .and_then(Category::parse)
            .ok_or_else(|| bad("\"category\" must be \"smooth\" or \"linear\"".into()))?;
        let raw_terms = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"terms\"".into()))?;
        let mut terms = Vec::with_capacity(raw_terms.len());
        for t in raw_terms {
            let lambda = StageValue::from_json_value(
                t.get("lambda")
                    .ok_or_else(|| bad("term without \"lambda\"".into()))?,
            )?;
            let scalars = |key: &str| -> Result<Vec<Scalar>, StageError> {
                let raw = t
                    .get(key)
                    .ok_or_else(|| bad(format!("term without \"{key}\"")))?;
                serde_json::from_value(raw.clone()).map_err(|e| bad(format!("\"{key}\": {e}")))
            };
            let functional = match t.get("kind").and_then(Value::as_str) {
                Some("eval") => Functional::Eval {
                    point: scalars("point")?,
                },
                Some("dirderiv") => Functional::DirDeriv {
                    point: scalars("point")?,
                    v: scalars("v")?,
                },
                other => return Err(bad(format!("unknown term kind {other:?}"))),
            };
            terms.push(StageTerm { lambda, functional });
        }
        let n = match v.get("n").and_then(Value::as_u64) {
            Some(n) => n as u8,
            None => terms.first().map(|t| t.lambda.n()).unwrap_or(0),
        };
        let carrier_name = v
            .get("carrier")
            .and_then(Value::as_str)
            .unwrap_or(if n == 0 { "reals" } else { "grassmann" });
        let carrier = Carrier::parse(carrier_name, n)
            .ok_or_else(|| bad(format!("unknown carrier {carrier_name:?}")))?;
        StagePoint::new(Stage::new(carrier, category)?, terms)
    }
}

impl Serialize for StagePoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl std::fmt::Display for StagePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match &t.functional {
                Functional::Eval { point } => write!(f, "({})·ev{}", t.lambda, fmt_point(point))?,
                Functional::DirDeriv { point, v } => {
                    write!(f, "({})·D{}{}", t.lambda, fmt_point(v), fmt_point(point))?
                }
            }
        }
        Ok(())
    }
}

/// Coefficientwise agreement, exact where both sides are exact.
pub fn values_agree(a: &StageValue, b: &StageValue, tol: f64) -> bool {
    if a.n() != b.n() {
        return false;
    }
    let blades: std::collections::BTreeSet<Blade> =
        a.terms().chain(b.terms()).map(|(bl, _)| bl).collect();
    blades
        .into_iter()
        .all(|bl| a.coeff(bl).approx_eq(&b.coeff(bl), tol))
}

/// Largest coefficient magnitude.
pub fn value_norm(v: &StageValue) -> f64 {
    v.terms().map(|(_, c)| c.to_f64().abs()).fold(0.0, f64::max)
}

/// `f̄`, acting by `f̄(ρ) = ρ(f)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftedFunction {
    pub base: Expr,
}

pub fn lift_function(f: &Expr) -> LiftedFunction {
    LiftedFunction { base: f.clone() }
}

impl LiftedFunction {
    pub fn apply(&self, chart: &Chart, rho: &StagePoint) -> Result<StageValue, StageError> {
        rho.apply(chart, &self.base)
    }
}

/// `f̄ + ḡ = (f + g)‾`.
pub fn lifted_add(f: &LiftedFunction, g: &LiftedFunction) -> LiftedFunction {
    LiftedFunction {
        base: Expr::add(vec![f.base.clone(), g.base.clone()]),
    }
}

/// `f̄ · ḡ = (f g)‾`.
pub fn lifted_mul(f: &LiftedFunction, g: &LiftedFunction) -> LiftedFunction {
    LiftedFunction {
        base: Expr::mul(vec![f.base.clone(), g.base.clone()]),
    }
}

/// `f̄(ρ) + ḡ(ρ)`, the pointwise sum.
pub fn pointwise_add(
    f: &LiftedFunction,
    g: &LiftedFunction,
    chart: &Chart,
    rho: &StagePoint,
) -> Result<StageValue, StageError> {
    Ok(f.apply(chart, rho)?.try_add(&g.apply(chart, rho)?)?)
}

/// `f̄(ρ) · ḡ(ρ)`, the pointwise product in the carrier.
pub fn pointwise_mul(
    f: &LiftedFunction,
    g: &LiftedFunction,
    chart: &Chart,
    rho: &StagePoint,
) -> Result<StageValue, StageError> {
    rho.stage.mul(&f.apply(chart, rho)?, &g.apply(chart, rho)?)
}

/// `(1, 1)` followed by fixed-seed random polynomial pairs.
pub fn default_probe_pairs(chart: &Chart) -> Vec<(Expr, Expr)> {
    probe_pairs(chart, PROBE_PAIRS, PROBE_PAIR_SEED)
}

pub fn probe_pairs(chart: &Chart, count: usize, seed: u64) -> Vec<(Expr, Expr)> {
    let mut rng = new_rng(seed);
    let vars = chart.coords().to_vec();
    let mut out = vec![(Expr::one(), Expr::one())];
    while out.len() < count {
        out.push((
            random_polynomial(&mut rng, &vars, 3, 3),
            random_polynomial(&mut rng, &vars, 3, 3),
        ));
    }
    out.truncate(count.max(1));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MultiplicativityVerdict {
    /// `ρ(fg) = ρ(f)ρ(g)` on every probe; not a proof.
    ProbeMultiplicative { probes: usize },
    NotMultiplicative {
        f: Expr,
        g: Expr,
        rho_fg: StageValue,
        rho_f_rho_g: StageValue,
    },
}

impl MultiplicativityVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, MultiplicativityVerdict::ProbeMultiplicative { .. })
    }
}

pub fn is_multiplicative_probe(
    rho: &StagePoint,
    chart: &Chart,
    probes: &[(Expr, Expr)],
) -> Result<MultiplicativityVerdict, StageError> {
    if !rho.stage.carrier.is_algebra() {
        return Err(StageError::Category(format!(
            "the {} carrier has no multiplication",
            rho.stage.carrier
        )));
    }
    if probes.is_empty() {
        return Err(StageError::Arity {
            expected: 1,
            got: 0,
        });
    }
    for (f, g) in probes {
        let rho_fg = rho.apply(chart, &Expr::mul(vec![f.clone(), g.clone()]))?;
        let rho_f_rho_g = rho
            .stage
            .mul(&rho.apply(chart, f)?, &rho.apply(chart, g)?)?;
        if !values_agree(&rho_fg, &rho_f_rho_g, VALUE_TOL) {
            return Ok(MultiplicativityVerdict::NotMultiplicative {
                f: f.clone(),
                g: g.clone(),
                rho_fg,
                rho_f_rho_g,
            });
        }
    }
    Ok(MultiplicativityVerdict::ProbeMultiplicative {
        probes: probes.len(),
    })
}

/// A Lin point at which the lifted product differs from the pointwise one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicationWitness {
    pub rho: StagePoint,
    pub f: Expr,
    pub g: Expr,
    /// `(f̄·ḡ)(ρ) = ρ(fg)`
    pub lifted: StageValue,
    /// `f̄(ρ)·ḡ(ρ)`
    pub pointwise: StageValue,
    pub attempts: usize,
}

fn random_grassmann(rng: &mut ChaCha8Rng, n: u8) -> StageValue {
    let mut v = StageValue::zero(n);
    let terms = rng.gen_range(1..=3);
    for _ in 0..terms {
        let mask = rng.gen_range(0..(1u32 << n)) as u16;
        let c = rng.gen_range(-2i64..=2);
        v = v
            .try_add(&StageValue::from_blade(
                n,
                Blade::from_mask(mask),
                Scalar::from(c),
            ))
            .expect("same n");
    }
    v
}

fn random_functional(rng: &mut ChaCha8Rng, chart: &Chart) -> Result<Functional, StageError> {
    let point = chart.sample_points(rng, 1)?.pop().expect("one point");
    if rng.gen_bool(0.5) {
        Ok(Functional::Eval { point })
    } else {
        let v = (0..chart.dim())
            .map(|_| Scalar::from(rng.gen_range(-2i64..=2)))
            .collect();
        Ok(Functional::DirDeriv { point, v })
    }
}

/// Randomized search over two-term Lin points on `Λ_n` for a pair `f, g`
/// with `ρ(fg) ≠ ρ(f)ρ(g)`.
pub fn find_nonpointwise_witness(
    chart: &Chart,
    n: u8,
    seed: u64,
    max_attempts: usize,
) -> Result<Option<MultiplicationWitness>, StageError> {
    let mut rng = new_rng(seed);
    let stage = Stage::grassmann(n, Category::Linear);
    let vars: Vec<Arc<str>> = chart.coords().to_vec();
    for attempt in 1..=max_attempts {
        let terms = (0..2)
            .map(|_| {
                Ok(StageTerm {
                    lambda: random_grassmann(&mut rng, n),
                    functional: random_functional(&mut rng, chart)?,
                })
            })
            .collect::<Result<Vec<_>, StageError>>()?;
        let rho = StagePoint::new(stage, terms)?;
        let f = lift_function(&random_polynomial(&mut rng, &vars, 2, 2));
        let g = lift_function(&random_polynomial(&mut rng, &vars, 2, 2));
        let lifted = lifted_mul(&f, &g).apply(chart, &rho)?;
        let pointwise = pointwise_mul(&f, &g, chart, &rho)?;
        if !values_agree(&lifted, &pointwise, VALUE_TOL) {
            return Ok(Some(MultiplicationWitness {
                rho,
                f: f.base,
                g: g.base,
                lifted,
                pointwise,
                attempts: attempt,
            }));
        }
    }
    Ok(None)
}

/// `X̄`, acting by `X̄ f̄ = (X f)‾`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedDerivation {
    pub base: Derivation,
}

pub fn lift_derivation(x: &Derivation) -> LiftedDerivation {
    LiftedDerivation { base: x.clone() }
}

impl LiftedDerivation {
    pub fn apply(&self, chart: &Chart, f: &LiftedFunction) -> Result<LiftedFunction, StageError> {
        Ok(LiftedFunction {
            base: self.base.apply(chart, &f.base)?,
        })
    }
}

/// `T̄`, acting by `T̄(X̄_1, …, X̄_k) = T(X_1, …, X_k)‾`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedTensor {
    pub base: CovariantTensor,
}

pub fn lift_tensor(t: &CovariantTensor) -> LiftedTensor {
    LiftedTensor { base: t.clone() }
}

pub fn lift_metric(g: &MetricField) -> LiftedTensor {
    LiftedTensor {
        base: CovariantTensor::from_matrix(&g.g),
    }
}

impl LiftedTensor {
    pub fn apply(&self, args: &[LiftedDerivation]) -> Result<LiftedFunction, StageError> {
        let base: Vec<Derivation> = args.iter().map(|a| a.base.clone()).collect();
        Ok(LiftedFunction {
            base: self.base.apply(&base)?,
        })
    }
}

/// Stage points used by the lifted Einstein check: every probe point as
/// `ev_p`, and consecutive probe pairs as `(1+β₁)ev_p + (β₂+β₁β₂)ev_q`
/// on `Λ_2` in the linear category. The two coefficients have disjoint
/// blade supports, so no cancellation between the terms can occur.
pub fn einstein_stage_points(g: &MetricField) -> Result<Vec<StagePoint>, StageError> {
    let probes = g.probe_points()?;
    let stage = Stage::grassmann(2, Category::Linear);
    let b = |idx: &[usize]| {
        StageValue::from_terms(2, [(idx.to_vec(), Scalar::from(1))]).expect("valid blade")
    };
    let lam1 = b(&[]).try_add(&b(&[1]))?;
    let lam2 = b(&[2]).try_add(&b(&[1, 2]))?;
    let mut out = Vec::with_capacity(2 * probes.len());
    for p in &probes {
        out.push(StagePoint::ev(
            Stage::grassmann(2, Category::Smooth),
            p.clone(),
        )?);
    }
    for pair in probes.windows(2) {
        out.push(StagePoint::new(
            stage,
            vec![
                StageTerm {
                    lambda: lam1.clone(),
                    functional: Functional::Eval {
                        point: pair[0].clone(),
                    },
                },
                StageTerm {
                    lambda: lam2.clone(),
                    functional: Functional::Eval {
                        point: pair[1].clone(),
                    },
                },
            ],
        )?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LiftedVerdict {
    EinsteinAlgebra,
    NumericallyEinstein {
        max_residual: f64,
    },
    NotEinstein {
        max_residual: f64,
        witness: StagePoint,
        component: [usize; 2],
    },
}

impl LiftedVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            LiftedVerdict::EinsteinAlgebra => "einstein_algebra",
            LiftedVerdict::NumericallyEinstein { .. } => "numerically_einstein",
            LiftedVerdict::NotEinstein { .. } => "not_einstein",
        }
    }
}

pub fn base_kind(v: &EinsteinVerdict) -> &'static str {
    match v {
        EinsteinVerdict::EinsteinAlgebra => "einstein_algebra",
        EinsteinVerdict::NumericallyEinstein { .. } => "numerically_einstein",
        EinsteinVerdict::NotEinstein { .. } => "not_einstein",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftedEinsteinReport {
    pub metric: String,
    pub mode: EinsteinMode,
    pub base: EinsteinVerdict,
    pub lifted: LiftedVerdict,
    pub stage_points: usize,
    pub agrees: bool,
}

/// Evaluates `(Ric − ½ r g + Λ g − 8π T)‾` (or the vacuum form) at the stage
/// points of [`einstein_stage_points`] and compares with the base verdict.
pub fn lifted_einstein_check(
    g: &MetricField,
    lambda: &Expr,
    t: &EnergyMomentum,
    mode: EinsteinMode,
) -> Result<LiftedEinsteinReport, StageError> {
    let base = einstein_check(g, lambda, t, mode)?;
    let points = einstein_stage_points(g)?;
    let lifted_residual: Vec<Vec<LiftedFunction>> = base
        .residual
        .iter()
        .map(|row| row.iter().map(lift_function).collect())
        .collect();
    let mut worst: Option<(f64, usize, [usize; 2])> = None;
    for (k, rho) in points.iter().enumerate() {
        for (i, row) in lifted_residual.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if e.base.is_zero() {
                    continue;
                }
                let norm = value_norm(&e.apply(&g.chart, rho)?);
                if worst.as_ref().is_none_or(|(w, _, _)| norm > *w) {
                    worst = Some((norm, k, [i, j]));
                }
            }
        }
    }
    let symbolic_zero = lifted_residual
        .iter()
        .flatten()
        .all(|e| is_identically_zero(&e.base));
    let lifted = match worst {
        _ if symbolic_zero => LiftedVerdict::EinsteinAlgebra,
        None => LiftedVerdict::EinsteinAlgebra,
        Some((max_residual, _, _)) if max_residual < RESIDUAL_TOL => {
            LiftedVerdict::NumericallyEinstein { max_residual }
        }
        Some((max_residual, k, component)) => LiftedVerdict::NotEinstein {
            max_residual,
            witness: points[k].clone(),
            component,
        },
    };
    let agrees = base_kind(&base.verdict) == lifted.kind();
    Ok(LiftedEinsteinReport {
        metric: g.name.clone(),
        mode,
        base: base.verdict,
        lifted,
        stage_points: points.len(),
        agrees,
    })
}

/// An evaluation point separating `f̄` and `ḡ`, searched over fixed-seed
/// domain samples.
pub fn separating_point(
    chart: &Chart,
    f: &Expr,
    g: &Expr,
    seed: u64,
) -> Result<Option<Vec<Scalar>>, StageError> {
    let mut rng = new_rng(seed);
    for p in chart.sample_points(&mut rng, SEPARATION_SAMPLES)? {
        let b = chart.bindings(&p)?;
        if !evaluate(f, &b)?.approx_eq(&evaluate(g, &b)?, VALUE_TOL) {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::einstein::catalog;
    use crate::symalg::parse_expr;

    fn e(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn s(x: i64) -> Scalar {
        Scalar::from(x)
    }

    fn beta(n: u8, i: usize) -> StageValue {
        StageValue::generator(n, i).unwrap()
    }

    fn dual_point(p: Vec<Scalar>, v: Vec<Scalar>) -> StagePoint {
        StagePoint::new(
            Stage::grassmann(1, Category::Linear),
            vec![
                StageTerm {
                    lambda: StageValue::one(1),
                    functional: Functional::Eval { point: p.clone() },
                },
                StageTerm {
                    lambda: beta(1, 1),
                    functional: Functional::DirDeriv { point: p, v },
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn odd_carrier_is_linear_only() {
        assert!(matches!(
            Stage::new(Carrier::GrassmannOdd(2), Category::Smooth),
            Err(StageError::Category(_))
        ));
        let odd = Stage::new(Carrier::GrassmannOdd(2), Category::Linear).unwrap();
        assert!(odd.unit().is_err());
        assert!(StagePoint::ev(odd, vec![s(0)]).is_err());
        let even = Stage::new(Carrier::GrassmannEven(2), Category::Linear).unwrap();
        let bad = StageTerm {
            lambda: beta(2, 1),
            functional: Functional::Eval { point: vec![s(0)] },
        };
        assert!(matches!(
            StagePoint::new(even, vec![bad]),
            Err(StageError::Carrier { .. })
        ));
        let chart = Chart::new(&["x"]).unwrap();
        let rho = StagePoint::new(
            odd,
            vec![StageTerm {
                lambda: beta(2, 1),
                functional: Functional::Eval { point: vec![s(1)] },
            }],
        )
        .unwrap();
        assert!(matches!(
            is_multiplicative_probe(&rho, &chart, &default_probe_pairs(&chart)),
            Err(StageError::Category(_))
        ));
    }

    #[test]
    fn lifted_functions_act_by_evaluation() {
        let chart = Chart::uniform(&["x"], -5, 5).unwrap();
        let rho = StagePoint::ev(Stage::reals(), vec![s(3)]).unwrap();
        assert_eq!(
            lift_function(&e("x^2")).apply(&chart, &rho).unwrap(),
            StageValue::scalar(0, s(9))
        );
        let rho = dual_point(vec![s(1)], vec![s(1)]);
        let expected = StageValue::one(1).try_add(&beta(1, 1)).unwrap();
        assert_eq!(
            lift_function(&e("x")).apply(&chart, &rho).unwrap(),
            expected
        );
        let stage = Stage::grassmann(2, Category::Linear);
        let lams = [StageValue::scalar(2, s(3)), beta(2, 1), beta(2, 2)];
        let terms = lams
            .iter()
            .enumerate()
            .map(|(i, l)| StageTerm {
                lambda: l.clone(),
                functional: Functional::Eval {
                    point: vec![s(i as i64)],
                },
            })
            .collect();
        let rho = StagePoint::new(stage, terms).unwrap();
        let sum = lams
            .iter()
            .skip(1)
            .fold(lams[0].clone(), |a, b| a.try_add(b).unwrap());
        assert_eq!(
            lift_function(&Expr::one()).apply(&chart, &rho).unwrap(),
            sum
        );
    }

    #[test]
    fn multiplicativity_probe() {
        let chart = Chart::uniform(&["x", "y"], -3, 3).unwrap();
        let probes = default_probe_pairs(&chart);
        let ev = StagePoint::ev(Stage::reals(), vec![s(1), s(2)]).unwrap();
        assert!(is_multiplicative_probe(&ev, &chart, &probes)
            .unwrap()
            .passed());
        let two = StagePoint::new(
            Stage {
                carrier: Carrier::Reals,
                category: Category::Linear,
            },
            vec![StageTerm {
                lambda: StageValue::scalar(0, s(2)),
                functional: Functional::Eval {
                    point: vec![s(1), s(2)],
                },
            }],
        )
        .unwrap();
        match is_multiplicative_probe(&two, &chart, &probes).unwrap() {
            MultiplicativityVerdict::NotMultiplicative {
                f,
                g,
                rho_fg,
                rho_f_rho_g,
            } => {
                assert!(f.is_one() && g.is_one());
                assert_eq!(rho_fg, StageValue::scalar(0, s(2)));
                assert_eq!(rho_f_rho_g, StageValue::scalar(0, s(4)));
            }
            other => panic!("{other:?}"),
        }
        assert!(two.validate(&chart).is_ok());
        let as_smooth = StagePoint::new(Stage::reals(), two.terms().to_vec()).unwrap();
        assert!(matches!(
            as_smooth.validate(&chart),
            Err(StageError::Category(_))
        ));
        // A single derivation term with nilpotent weight is a dual-number point.
        let dual = dual_point(vec![s(1), s(1)], vec![s(1), s(1)]);
        assert!(is_multiplicative_probe(&dual, &chart, &probes)
            .unwrap()
            .passed());
    }

    #[test]
    fn witness_of_nonpointwise_multiplication() {
        let chart = Chart::uniform(&["x", "y"], -3, 3).unwrap();
        let w = find_nonpointwise_witness(&chart, 2, 7, 100)
            .unwrap()
            .expect("witness");
        assert_eq!(w.rho.terms().len(), 2);
        assert!(!values_agree(&w.lifted, &w.pointwise, VALUE_TOL));
        assert_eq!(
            lifted_mul(&lift_function(&w.f), &lift_function(&w.g))
                .apply(&chart, &w.rho)
                .unwrap(),
            w.lifted
        );
    }

    #[test]
    fn lifted_derivations_and_metric() {
        let chart = Chart::uniform(&["x"], -5, 5).unwrap();
        let x = lift_derivation(&Derivation::coordinate(1, 0));
        let rho = StagePoint::ev(Stage::reals(), vec![s(3)]).unwrap();
        let xf = x.apply(&chart, &lift_function(&e("x^2"))).unwrap();
        assert_eq!(xf.base, e("2*x"));
        assert_eq!(xf.apply(&chart, &rho).unwrap(), StageValue::scalar(0, s(6)));
        let g = catalog::builtin("minkowski").unwrap();
        let gbar = lift_metric(&g);
        let dt = lift_derivation(&Derivation::coordinate(4, 0));
        let v = gbar.apply(&[dt.clone(), dt.clone()]).unwrap();
        let rho = StagePoint::ev(Stage::reals(), vec![s(0); 4]).unwrap();
        assert_eq!(
            v.apply(&g.chart, &rho).unwrap(),
            StageValue::scalar(0, s(-1))
        );
        assert!(gbar.apply(&[dt]).is_err());
    }

    #[test]
    fn stage_point_json_round_trip() {
        let rho = dual_point(vec![s(1), s(2)], vec![s(1), s(0)]);
        let v = rho.to_json();
        assert_eq!(v["terms"][1]["kind"], "dirderiv");
        assert_eq!(StagePoint::from_json(&v).unwrap(), rho);
        assert!(StagePoint::from_json(&json!({ "category": "weird", "terms": [] })).is_err());
    }

    #[test]
    fn lifted_einstein_matches_base() {
        let g = catalog::builtin("minkowski").unwrap();
        let zero_t = EnergyMomentum::zero(4);
        let ok = lifted_einstein_check(&g, &Expr::zero(), &zero_t, EinsteinMode::Vacuum).unwrap();
        assert!(ok.agrees);
        assert_eq!(ok.lifted, LiftedVerdict::EinsteinAlgebra);
        let bad = lifted_einstein_check(&g, &Expr::one(), &zero_t, EinsteinMode::Vacuum).unwrap();
        assert!(bad.agrees);
        assert!(matches!(bad.lifted, LiftedVerdict::NotEinstein { .. }));
    }

    #[test]
    fn evaluation_points_separate_distinct_functions() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        assert!(separating_point(&chart, &e("x*y"), &e("y*x + x"), 1)
            .unwrap()
            .is_some());
        assert!(
            separating_point(&chart, &e("(x+1)^2"), &e("x^2 + 2*x + 1"), 1)
                .unwrap()
                .is_none()
        );
    }
}
