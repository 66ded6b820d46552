//! Sections of `C∞(U) ⊗ Λ_n` on a single chart, the body quotient, the
//! supermap compatibility identity, and the Einstein–Grassmann condition.

use std::collections::BTreeMap;

use num_rational::BigRational;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::einstein::{
    einstein_check, EinsteinError, EinsteinMode, EinsteinVerdict, EnergyMomentum, MetricField,
};
use crate::grassmann::{Blade, GrassmannElement, GrassmannError};
use crate::scalar::Scalar;
use crate::singular::{Prolongation, SingularError, SingularSpace};
use crate::stage::{
    values_agree, Category, Functional, Stage, StageError, StagePoint, StageTerm, StageValue,
    VALUE_TOL,
};
use crate::supercurve::{CurveError, SmoothMap};
use crate::symalg::{
    equivalent, evaluate, expr_from_json, expr_to_json, is_identically_zero, new_rng, parse_expr,
    Chart, ChartError, Expr,
};

pub const SUPERMAP_PROBE_SEED: u64 = 0x5e_c7_10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SheafError {
    #[error("sections live on different charts")]
    ChartMismatch,
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Einstein(#[from] EinsteinError),
    #[error(transparent)]
    Singular(#[from] SingularError),
    #[error("malformed section: {0}")]
    Format(String),
}

impl From<crate::symalg::EvalError> for SheafError {
    fn from(e: crate::symalg::EvalError) -> Self {
        SheafError::Chart(e.into())
    }
}

/// `s = Σ_I f_I ⊗ β_I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperSection {
    chart: Chart,
    n: u8,
    terms: BTreeMap<Blade, Expr>,
}

impl SuperSection {
    pub fn zero(chart: &Chart, n: u8) -> SuperSection {
        SuperSection {
            chart: chart.clone(),
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I>(chart: &Chart, n: u8, terms: I) -> Result<SuperSection, SheafError>
    where
        I: IntoIterator<Item = (Vec<usize>, Expr)>,
    {
        let mut s = SuperSection::zero(chart, n);
        for (idx, f) in terms {
            s.add_term(Blade::from_indices(&idx, n)?, f);
        }
        Ok(s)
    }

    /// `c ⊗ λ` for a constant Grassmann number `λ`.
    pub fn constant(chart: &Chart, lambda: &GrassmannElement) -> SuperSection {
        let mut s = SuperSection::zero(chart, lambda.n());
        for (b, c) in lambda.terms() {
            s.add_term(b, Expr::num(c.clone()));
        }
        s
    }

    fn add_term(&mut self, blade: Blade, f: Expr) {
        let sum = match self.terms.remove(&blade) {
            Some(old) => Expr::add(vec![old, f]),
            None => f,
        };
        if !is_identically_zero(&sum) {
            self.terms.insert(blade, sum);
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (Blade, &Expr)> {
        self.terms.iter().map(|(b, f)| (*b, f))
    }

    pub fn component(&self, blade: Blade) -> Expr {
        self.terms.get(&blade).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Member of the nilpotent ideal: vanishing unit-blade component.
    pub fn is_nilpotent(&self) -> bool {
        !self.terms.contains_key(&Blade::UNIT)
    }

    pub fn homogeneous_grade(&self) -> Option<u32> {
        let mut grades = self.terms.keys().map(|b| b.grade());
        let first = grades.next()?;
        grades.all(|g| g == first).then_some(first)
    }

    fn compatible(&self, other: &SuperSection) -> Result<(), SheafError> {
        if self.chart.coords() != other.chart.coords() {
            return Err(SheafError::ChartMismatch);
        }
        if self.n != other.n {
            return Err(GrassmannError::Dimension {
                left: self.n,
                right: other.n,
            }
            .into());
        }
        Ok(())
    }

    pub fn add(&self, other: &SuperSection) -> Result<SuperSection, SheafError> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (b, f) in &other.terms {
            out.add_term(*b, f.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> SuperSection {
        let terms = self
            .terms
            .iter()
            .map(|(b, f)| (*b, Expr::neg(f.clone())))
            .collect();
        SuperSection {
            chart: self.chart.clone(),
            n: self.n,
            terms,
        }
    }

    pub fn pow(&self, k: u32) -> Result<SuperSection, SheafError> {
        let mut acc = SuperSection::constant(&self.chart, &GrassmannElement::one(self.n));
        for _ in 0..k {
            acc = section_mul(&acc, self)?;
        }
        Ok(acc)
    }

    /// Componentwise equality of functions, decided by the zero test.
    pub fn equivalent(&self, other: &SuperSection) -> bool {
        if self.compatible(other).is_err() {
            return false;
        }
        let blades: std::collections::BTreeSet<&Blade> =
            self.terms.keys().chain(other.terms.keys()).collect();
        blades
            .into_iter()
            .all(|b| equivalent(&self.component(*b), &other.component(*b)))
    }

    /// `Σ f_I(p) β_I`.
    pub fn at(&self, point: &[Scalar]) -> Result<StageValue, SheafError> {
        let b = self.chart.bindings(point)?;
        let mut out = StageValue::zero(self.n);
        for (blade, f) in &self.terms {
            out = out.try_add(&StageValue::from_blade(self.n, *blade, evaluate(f, &b)?))?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(b, f)| json!({ "blade": b.indices(), "f": expr_to_json(f) }))
            .collect();
        let coords: Vec<&str> = self.chart.coords().iter().map(|c| &**c).collect();
        json!({ "chart": { "coords": coords }, "n": self.n, "terms": terms })
    }

    /// Reads `{ "chart": {"coords": [...]}, "n", "terms": [{"blade", "f"}] }`;
    /// `f` may be an AST object or an infix string.
    pub fn from_json(v: &Value) -> Result<SuperSection, SheafError> {
        let bad = |m: &str| SheafError::Format(m.to_string());
        let coords: Vec<String> = v
            .pointer("/chart/coords")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing chart coordinates"))?
            .iter()
            .map(|c| {
                c.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| bad("coordinate names must be strings"))
            })
            .collect::<Result<_, _>>()?;
        let coords: Vec<&str> = coords.iter().map(String::as_str).collect();
        let chart = Chart::new(&coords)?;
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing \"n\""))? as u8;
        let mut terms = Vec::new();
        for t in v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"terms\""))?
        {
            let blade: Vec<usize> =
                serde_json::from_value(t.get("blade").cloned().unwrap_or(Value::Null))
                    .map_err(|e| SheafError::Format(e.to_string()))?;
            if blade.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("blade indices must be strictly increasing"));
            }
            let f = match t.get("f") {
                Some(Value::String(s)) => {
                    parse_expr(s).map_err(|e| SheafError::Format(e.to_string()))?
                }
                Some(other) => {
                    expr_from_json(other).map_err(|e| SheafError::Format(e.to_string()))?
                }
                None => return Err(bad("term without \"f\"")),
            };
            terms.push((blade, f));
        }
        SuperSection::from_terms(&chart, n, terms)
    }
}

impl Serialize for SuperSection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// `(Σ f_I β_I)(Σ g_J β_J) = Σ f_I g_J β_I β_J`.
pub fn section_mul(s: &SuperSection, t: &SuperSection) -> Result<SuperSection, SheafError> {
    s.compatible(t)?;
    let mut out = SuperSection::zero(&s.chart, s.n);
    for (a, f) in &s.terms {
        for (b, g) in &t.terms {
            let (sign, blade) = a.product(*b);
            if sign == 0 {
                continue;
            }
            out.add_term(
                blade,
                Expr::mul(vec![Expr::int(sign as i64), f.clone(), g.clone()]),
            );
        }
    }
    Ok(out)
}

/// `A → A/N ≅ C∞`: the unit-blade component.
pub fn body_quotient(s: &SuperSection) -> Expr {
    s.component(Blade::UNIT)
}

/// Element of `Λ_m ⊗ Λ_n` (stage blade, section blade).
pub type TensorValue = BTreeMap<(Blade, Blade), Scalar>;

fn tensor_add(acc: &mut TensorValue, stage_value: &StageValue, section_blade: Blade) {
    for (b, c) in stage_value.terms() {
        let entry = acc
            .entry((b, section_blade))
            .or_insert_with(|| Scalar::from(0));
        *entry = entry.clone() + c.clone();
    }
}

fn tensors_agree(a: &TensorValue, b: &TensorValue) -> bool {
    let zero = Scalar::from(0);
    a.keys().chain(b.keys()).all(|k| {
        a.get(k)
            .unwrap_or(&zero)
            .approx_eq(b.get(k).unwrap_or(&zero), VALUE_TOL)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupermapProbe {
    pub rho: StagePoint,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupermapCheck {
    pub probes: Vec<SupermapProbe>,
    pub holds: bool,
}

/// Checks `(Σ f̄_I ⊗ β_I) ∘ F̄ = Σ (f̄_I ∘ F̄) ⊗ β_I` at each probe `ρ`.
/// The left side evaluates `s` at the concrete pushed point `F̄(ρ)`; the
/// right side applies `ρ` to the pulled-back functions `F* f_I`.
pub fn lift_supermap_check(
    map: &SmoothMap,
    s: &SuperSection,
    probes: &[StagePoint],
) -> Result<SupermapCheck, SheafError> {
    if s.chart.coords() != map.target.coords() {
        return Err(SheafError::ChartMismatch);
    }
    let mut out = Vec::with_capacity(probes.len());
    for rho in probes {
        let pushed = map.pushforward(rho)?;
        let mut lhs = TensorValue::new();
        let mut rhs = TensorValue::new();
        for (blade, f) in s.terms() {
            tensor_add(&mut lhs, &pushed.apply(&map.target, f)?, blade);
            tensor_add(&mut rhs, &rho.apply(&map.source, &map.pullback(f))?, blade);
        }
        out.push(SupermapProbe {
            rho: rho.clone(),
            holds: tensors_agree(&lhs, &rhs),
        });
    }
    let holds = out.iter().all(|p| p.holds);
    Ok(SupermapCheck { probes: out, holds })
}

/// Eight evaluation points and four two-term linear points on `Λ_2`.
pub fn default_supermap_probes(chart: &Chart) -> Result<Vec<StagePoint>, SheafError> {
    let mut rng = new_rng(SUPERMAP_PROBE_SEED);
    let smooth = Stage::grassmann(2, Category::Smooth);
    let linear = Stage::grassmann(2, Category::Linear);
    let mut out = Vec::with_capacity(12);
    for p in chart.sample_points(&mut rng, 8)? {
        out.push(StagePoint::ev(smooth, p)?);
    }
    for _ in 0..4 {
        let mut terms = Vec::with_capacity(2);
        for _ in 0..2 {
            let mask = rng.gen_range(0..4u16);
            let c = Scalar::from(rng.gen_range(1i64..=3));
            let lambda = StageValue::from_blade(2, Blade::from_mask(mask), c);
            let point = chart.sample_points(&mut rng, 1)?.pop().expect("one point");
            let functional = if rng.gen_bool(0.5) {
                Functional::Eval { point }
            } else {
                let v = (0..chart.dim())
                    .map(|_| Scalar::from(rng.gen_range(-2i64..=2)))
                    .collect();
                Functional::DirDeriv { point, v }
            };
            terms.push(StageTerm { lambda, functional });
        }
        out.push(StagePoint::new(linear, terms)?);
    }
    Ok(out)
}

/// A map paired with the super element the identity is checked on.
#[derive(Debug, Clone)]
pub struct SupermapCase {
    pub name: String,
    pub map: SmoothMap,
    pub section: SuperSection,
}

/// Sorted by name.
pub fn builtin_supermaps() -> Vec<SupermapCase> {
    let e = |s: &str| parse_expr(s).expect("valid built-in expression");
    let plane = Chart::uniform(&["x", "y"], -3, 3).expect("valid chart");
    let line = Chart::uniform(&["t"], -1, 1).expect("valid chart");
    let polar = Chart::with_domain(
        &["r", "theta"],
        vec![
            crate::symalg::Interval {
                lo: e("1/2"),
                hi: e("2"),
            },
            crate::symalg::Interval {
                lo: e("0"),
                hi: e("2*pi"),
            },
        ],
        vec![],
        Default::default(),
    )
    .expect("valid chart");
    let wide = Chart::uniform(&["x", "y"], -10, 10).expect("valid chart");
    let section = |chart: &Chart, terms: Vec<(Vec<usize>, &str)>| {
        SuperSection::from_terms(chart, 2, terms.into_iter().map(|(b, f)| (b, e(f))))
            .expect("valid section")
    };
    vec![
        SupermapCase {
            name: "curve".into(),
            map: SmoothMap::new(line, wide.clone(), vec![e("t"), e("t^2")]).expect("valid map"),
            section: section(&wide, vec![(vec![1], "x")]),
        },
        SupermapCase {
            name: "identity".into(),
            map: SmoothMap::identity(&plane),
            section: section(
                &plane,
                vec![(vec![], "x*y"), (vec![1], "sin(x)"), (vec![1, 2], "y^2")],
            ),
        },
        SupermapCase {
            name: "linear".into(),
            map: SmoothMap::new(plane, wide.clone(), vec![e("2*x + y"), e("x - y")])
                .expect("valid map"),
            section: section(&wide, vec![(vec![], "x^2 - y"), (vec![2], "x*y")]),
        },
        SupermapCase {
            name: "polar".into(),
            map: SmoothMap::new(
                polar,
                wide.clone(),
                vec![e("r*cos(theta)"), e("r*sin(theta)")],
            )
            .expect("valid map"),
            section: section(
                &wide,
                vec![(vec![], "x^2 + y^2"), (vec![1], "x"), (vec![2], "exp(y)")],
            ),
        },
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct EinsteinGrassmannReport {
    pub metric: String,
    pub n: u8,
    pub mode: EinsteinMode,
    pub body: EinsteinVerdict,
    pub einstein_grassmann: bool,
    pub note: &'static str,
}

/// A super-chart over `g` is Einstein–Grassmann iff its body is Einstein.
pub fn einstein_grassmann_check(
    g: &MetricField,
    lambda: &Expr,
    t: &EnergyMomentum,
    mode: EinsteinMode,
    n: u8,
) -> Result<EinsteinGrassmannReport, SheafError> {
    let body = einstein_check(g, lambda, t, mode)?.verdict;
    Ok(EinsteinGrassmannReport {
        metric: g.name.clone(),
        n,
        mode,
        einstein_grassmann: body.is_einstein(),
        body,
        note: "decided on the body metric; tensoring with the Grassmann algebra adds no condition",
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum SectionProlongation {
    Prolongs { image: StageValue },
    DoesNotProlong { blade: Vec<usize>, function: Expr },
}

/// Global super sections over `M*`: `ℝ1 ⊗ Λ_n ≅ Λ_n`.
#[derive(Debug, Clone)]
pub struct SuperStructure {
    pub space: SingularSpace,
    pub n: u8,
}

pub fn singular_super_structure(space: &SingularSpace, n: u8) -> SuperStructure {
    SuperStructure {
        space: space.clone(),
        n,
    }
}

impl SuperStructure {
    pub fn dimension(&self) -> usize {
        1 << self.n
    }

    /// The constant section `λ ⊗ 1`-style embedding of `Λ_n`.
    pub fn embed(&self, lambda: &GrassmannElement) -> SuperSection {
        SuperSection::constant(&self.space.base, lambda)
    }

    /// Prolongs iff every component prolongs; the image lies in `Λ_n`.
    pub fn prolong(&self, s: &SuperSection) -> Result<SectionProlongation, SheafError> {
        let mut image = StageValue::zero(s.n);
        for (blade, f) in s.terms() {
            match self.space.prolong(f)? {
                Prolongation::Prolongs { value, .. } => {
                    image = image.try_add(&StageValue::from_blade(s.n, blade, value))?;
                }
                Prolongation::DoesNotProlong { .. } => {
                    return Ok(SectionProlongation::DoesNotProlong {
                        blade: blade.indices(),
                        function: f.clone(),
                    })
                }
            }
        }
        Ok(SectionProlongation::Prolongs { image })
    }

    /// Every basis blade `β_I` survives prolongation as itself.
    pub fn basis_round_trip(&self) -> Result<bool, SheafError> {
        for mask in 0..(1u32 << self.n) {
            let blade = Blade::from_mask(mask as u16);
            let lambda =
                GrassmannElement::from_blade(self.n, blade, BigRational::from_integer(1.into()));
            match self.prolong(&self.embed(&lambda))? {
                SectionProlongation::Prolongs { image } => {
                    if !values_agree(
                        &image,
                        &lambda.map_coeffs(|c| Scalar::Exact(c.clone())),
                        0.0,
                    ) {
                        return Ok(false);
                    }
                }
                SectionProlongation::DoesNotProlong { .. } => return Ok(false),
            }
        }
        Ok(true)
    }
}
