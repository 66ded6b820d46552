//! Curves in the body, their pullbacks, and supercurves `γ̄(τ) = τ ∘ γ*`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::grassmann::GrassmannElement;
use crate::scalar::Scalar;
use crate::singular::{classify_multiplicative_point, PointClass, SingularError, StarPoint};
use crate::stage::{
    Carrier, Category, Functional, Stage, StageError, StagePoint, StageTerm, StageValue,
};
use crate::symalg::{
    differentiate, evaluate, parse_expr, Bindings, Chart, ChartError, Expr, Interval,
};

/// Name of the curve parameter.
pub const PARAM: &str = "t";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("category error: {0}")]
    Category(String),
    #[error("map has {got} components, target chart has {dim}")]
    Arity { got: usize, dim: usize },
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("curve `{0}` is not flagged as terminating at the singularity")]
    NotTerminating(String),
    #[error("unknown curve `{0}`")]
    Unknown(String),
    #[error("malformed curve: {0}")]
    Format(String),
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error(transparent)]
    Singular(#[from] SingularError),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

impl From<crate::symalg::EvalError> for CurveError {
    fn from(e: crate::symalg::EvalError) -> Self {
        CurveError::Chart(e.into())
    }
}

/// A smooth map `F: U → V` given by target-coordinate expressions over the
/// source chart.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    pub source: Chart,
    pub target: Chart,
    pub components: Vec<Expr>,
}

impl SmoothMap {
    pub fn new(
        source: Chart,
        target: Chart,
        components: Vec<Expr>,
    ) -> Result<SmoothMap, CurveError> {
        if components.len() != target.dim() {
            return Err(CurveError::Arity {
                got: components.len(),
                dim: target.dim(),
            });
        }
        if let Some(bad) = components.iter().flat_map(Expr::symbols).find(|s| {
            source.coord_index(s).is_none() && source.params().get(s).is_none() && &**s != "pi"
        }) {
            return Err(CurveError::ChartMismatch(format!(
                "component mentions `{bad}`, unknown to the source chart"
            )));
        }
        Ok(SmoothMap {
            source,
            target,
            components,
        })
    }

    pub fn identity(chart: &Chart) -> SmoothMap {
        let components = (0..chart.dim()).map(|i| chart.coord_expr(i)).collect();
        SmoothMap {
            source: chart.clone(),
            target: chart.clone(),
            components,
        }
    }

    /// `F* f = f ∘ F`.
    pub fn pullback(&self, f: &Expr) -> Expr {
        let mut map: BTreeMap<Arc<str>, Expr> = self
            .target
            .coords()
            .iter()
            .cloned()
            .zip(self.components.iter().cloned())
            .collect();
        for (name, v) in self.target.params().iter() {
            if self.source.params().get(name).is_none() {
                if let Scalar::Exact(r) = v {
                    map.insert(Arc::from(name), Expr::num(r.clone()));
                }
            }
        }
        f.substitute(&map)
    }

    /// `δ ∘ self`.
    pub fn then(&self, delta: &SmoothMap) -> Result<SmoothMap, CurveError> {
        if delta.source.coords() != self.target.coords() {
            return Err(CurveError::ChartMismatch(
                "composition needs matching charts".into(),
            ));
        }
        let components = delta.components.iter().map(|c| self.pullback(c)).collect();
        Ok(SmoothMap {
            source: self.source.clone(),
            target: delta.target.clone(),
            components,
        })
    }

    pub fn image_of(&self, p: &[Scalar]) -> Result<Vec<Scalar>, CurveError> {
        let b = self.source.bindings(p)?;
        Ok(self
            .components
            .iter()
            .map(|c| evaluate(c, &b))
            .collect::<Result<_, _>>()?)
    }

    /// `dF_p(v)`.
    pub fn differential(&self, p: &[Scalar], v: &[Scalar]) -> Result<Vec<Scalar>, CurveError> {
        if v.len() != self.source.dim() {
            return Err(CurveError::Arity {
                got: v.len(),
                dim: self.source.dim(),
            });
        }
        let b = self.source.bindings(p)?;
        let mut out = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let mut acc = Scalar::from(0);
            for (j, vj) in v.iter().enumerate() {
                if vj.is_zero_within(0.0) {
                    continue;
                }
                acc = acc + vj.clone() * evaluate(&differentiate(c, self.source.coord(j)?), &b)?;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// `F̄(ρ) = ρ ∘ F*` as a concrete stage point on the target: evaluations
    /// move to `F(p)` and directional derivatives are pushed by `dF_p`.
    pub fn pushforward(&self, rho: &StagePoint) -> Result<StagePoint, CurveError> {
        let mut terms = Vec::with_capacity(rho.terms().len());
        for t in rho.terms() {
            let p = t.functional.point();
            self.source.check_point(p)?;
            let q = self.image_of(p)?;
            self.target.check_point(&q)?;
            let functional = match &t.functional {
                Functional::Eval { .. } => Functional::Eval { point: q },
                Functional::DirDeriv { point, v } => Functional::DirDeriv {
                    point: q,
                    v: self.differential(point, v)?,
                },
            };
            terms.push(StageTerm {
                lambda: t.lambda.clone(),
                functional,
            });
        }
        Ok(StagePoint::new(rho.stage(), terms)?)
    }

    /// `(F̄ρ)(f) = ρ(F* f)`, without building the pushed point.
    pub fn apply_pushed(&self, rho: &StagePoint, f: &Expr) -> Result<StageValue, CurveError> {
        Ok(rho.apply(&self.source, &self.pullback(f))?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub map: SmoothMap,
    /// Reaches the singularity as `t → t₁`.
    pub terminates: bool,
}

impl Curve {
    pub fn new(
        name: &str,
        interval: (Expr, Expr),
        target: Chart,
        coords: Vec<Expr>,
        terminates: bool,
    ) -> Result<Curve, CurveError> {
        let chart = Chart::with_domain(
            &[PARAM],
            vec![Interval {
                lo: interval.0,
                hi: interval.1,
            }],
            Vec::new(),
            Bindings::new(),
        )?;
        Ok(Curve {
            name: name.to_string(),
            map: SmoothMap::new(chart, target, coords)?,
            terminates,
        })
    }

    pub fn interval_chart(&self) -> &Chart {
        &self.map.source
    }

    pub fn target(&self) -> &Chart {
        &self.map.target
    }

    pub fn at(&self, t: &Scalar) -> Result<Vec<Scalar>, CurveError> {
        self.map.image_of(std::slice::from_ref(t))
    }
}

/// `γ*f`.
pub fn pullback_apply(curve: &Curve, f: &Expr) -> Expr {
    curve.map.pullback(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurveGrading {
    /// (1,0)
    #[serde(rename = "10")]
    Even,
    /// (0,1)
    #[serde(rename = "01")]
    Odd,
    /// (1,1)
    #[serde(rename = "11")]
    Full,
}

impl CurveGrading {
    pub fn parse(s: &str) -> Option<CurveGrading> {
        match s {
            "10" | "(1,0)" | "even" => Some(CurveGrading::Even),
            "01" | "(0,1)" | "odd" => Some(CurveGrading::Odd),
            "11" | "(1,1)" | "full" => Some(CurveGrading::Full),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            CurveGrading::Even => "10",
            CurveGrading::Odd => "01",
            CurveGrading::Full => "11",
        }
    }

    /// The interval stage this grading restricts to.
    pub fn stage(self, n: u8, category: Category) -> Result<Stage, CurveError> {
        let carrier = match self {
            CurveGrading::Even => Carrier::GrassmannEven(n),
            CurveGrading::Odd => Carrier::GrassmannOdd(n),
            CurveGrading::Full => Carrier::Grassmann(n),
        };
        check_grading(self, category)?;
        Ok(Stage::new(carrier, category)?)
    }

    fn admits(self, carrier: Carrier) -> bool {
        matches!(
            (self, carrier),
            (CurveGrading::Full, Carrier::Grassmann(_) | Carrier::Reals)
                | (
                    CurveGrading::Even,
                    Carrier::GrassmannEven(_) | Carrier::Reals
                )
                | (CurveGrading::Odd, Carrier::GrassmannOdd(_))
        )
    }
}

fn check_grading(grading: CurveGrading, category: Category) -> Result<(), CurveError> {
    if grading == CurveGrading::Odd && category != Category::Linear {
        return Err(CurveError::Category(
            "odd (0,1) supercurves exist only in the linear category".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedCurve {
    pub curve: Curve,
    pub stage: Stage,
    pub grading: CurveGrading,
}

pub fn lift_curve(
    curve: &Curve,
    stage: Stage,
    grading: CurveGrading,
) -> Result<LiftedCurve, CurveError> {
    check_grading(grading, stage.category)?;
    if !grading.admits(stage.carrier) {
        return Err(CurveError::Category(format!(
            "grading ({}) does not match the {} carrier",
            grading.code(),
            stage.carrier
        )));
    }
    Ok(LiftedCurve {
        curve: curve.clone(),
        stage,
        grading,
    })
}

impl LiftedCurve {
    fn check(&self, tau: &StagePoint) -> Result<(), CurveError> {
        if tau.stage() != self.stage {
            return Err(CurveError::ChartMismatch(
                "interval point lives on a different stage".into(),
            ));
        }
        tau.validate(self.curve.interval_chart())?;
        Ok(())
    }

    /// `γ̄(τ)(f) = τ(γ* f)`.
    pub fn apply(&self, tau: &StagePoint, f: &Expr) -> Result<StageValue, CurveError> {
        self.check(tau)?;
        self.curve.map.apply_pushed(tau, f)
    }

    /// `γ̄(τ)` as a stage point on the target chart.
    pub fn image(&self, tau: &StagePoint) -> Result<StagePoint, CurveError> {
        self.check(tau)?;
        self.curve.map.pushforward(tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "endpoint", rename_all = "snake_case")]
pub enum Endpoint {
    /// The unique multiplicative point `ρ(r1) = r`.
    Collapsed {
        class: PointClass,
    },
    Zero,
    SoulBearing {
        lambda: GrassmannElement,
        soul: GrassmannElement,
    },
}

/// Limit stage point of a curve running into `*`, determined by `λ = ρ(1)`.
pub fn singular_endpoint(
    lifted: &LiftedCurve,
    lambda: &GrassmannElement,
) -> Result<Endpoint, CurveError> {
    if !lifted.curve.terminates {
        return Err(CurveError::NotTerminating(lifted.curve.name.clone()));
    }
    let point = StarPoint::new(lifted.stage.category, lambda.clone())?;
    Ok(match point.category {
        Category::Smooth => match classify_multiplicative_point(&point.lambda)?.class {
            PointClass::ZeroMap => Endpoint::Zero,
            PointClass::UnitPoint => Endpoint::Collapsed {
                class: PointClass::UnitPoint,
            },
        },
        Category::Linear => Endpoint::SoulBearing {
            lambda: point.lambda.clone(),
            soul: point.lambda.soul(),
        },
    })
}

#[derive(Debug, Deserialize)]
struct CurveFile {
    name: String,
    interval: [Value; 2],
    coords: Vec<Value>,
    #[serde(default)]
    terminates: bool,
    #[serde(default)]
    target: Option<TargetFile>,
}

#[derive(Debug, Deserialize)]
struct TargetFile {
    coords: Vec<String>,
    #[serde(default)]
    domain: BTreeMap<String, [Value; 2]>,
}

fn expr_of(v: &Value) -> Result<Expr, CurveError> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => {
            return serde_json::from_value(other.clone())
                .map_err(|e| CurveError::Format(e.to_string()))
        }
    };
    parse_expr(&text).map_err(|e| CurveError::Format(format!("{text:?}: {e}")))
}

const DEFAULT_TARGET_NAMES: [&str; 4] = ["x", "y", "z", "w"];

/// Curve catalog format:
/// `{ "name", "interval": [t0, t1], "coords": [...], "terminates": bool }`,
/// optionally with `"target": { "coords": [...], "domain": {name: [lo, hi]} }`.
/// Without a target the coordinates are `x, y, z, w` over `(-1000, 1000)`.
pub fn curve_from_json(v: &Value) -> Result<Curve, CurveError> {
    let file: CurveFile =
        serde_json::from_value(v.clone()).map_err(|e| CurveError::Format(e.to_string()))?;
    let coords = file
        .coords
        .iter()
        .map(expr_of)
        .collect::<Result<Vec<_>, _>>()?;
    let m = coords.len();
    let (names, domain) = match file.target {
        Some(t) => (t.coords, t.domain),
        None if m <= DEFAULT_TARGET_NAMES.len() => (
            DEFAULT_TARGET_NAMES[..m]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            BTreeMap::new(),
        ),
        None => ((1..=m).map(|i| format!("x{i}")).collect(), BTreeMap::new()),
    };
    let boxes = names
        .iter()
        .map(|n| match domain.get(n) {
            Some([lo, hi]) => Ok(Interval {
                lo: expr_of(lo)?,
                hi: expr_of(hi)?,
            }),
            None => Ok(Interval {
                lo: Expr::int(-1000),
                hi: Expr::int(1000),
            }),
        })
        .collect::<Result<Vec<_>, CurveError>>()?;
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let target = Chart::with_domain(&name_refs, boxes, Vec::new(), Bindings::new())?;
    Curve::new(
        &file.name,
        (expr_of(&file.interval[0])?, expr_of(&file.interval[1])?),
        target,
        coords,
        file.terminates,
    )
}

pub const BUILTIN_CURVES: [&str; 4] = [
    "circular",
    "radial_infall",
    "radial_infall_cubic",
    "straight_line",
];

fn builtin_json(name: &str) -> Option<Value> {
    let radial_target =
        serde_json::json!({ "coords": ["t", "r"], "domain": { "t": [-10, 10], "r": [0, 10] } });
    Some(match name {
        "radial_infall" => serde_json::json!({
            "name": "radial_infall",
            "interval": [0, 1],
            "coords": ["t", "2*(1 - t^2)"],
            "terminates": true,
            "target": radial_target
        }),
        "radial_infall_cubic" => serde_json::json!({
            "name": "radial_infall_cubic",
            "interval": [0, 1],
            "coords": ["t", "3*(1 - t)^3"],
            "terminates": true,
            "target": radial_target
        }),
        "circular" => serde_json::json!({
            "name": "circular",
            "interval": [0, "2*pi"],
            "coords": ["cos(t)", "sin(t)"],
            "terminates": false
        }),
        "straight_line" => serde_json::json!({
            "name": "straight_line",
            "interval": [-1, 1],
            "coords": ["t", "2*t - 1"],
            "terminates": false
        }),
        _ => return None,
    })
}

pub fn builtin_curve(name: &str) -> Result<Curve, CurveError> {
    curve_from_json(&builtin_json(name).ok_or_else(|| CurveError::Unknown(name.to_string()))?)
}

/// All built-in curves, sorted by name.
pub fn builtin_curves() -> Vec<Curve> {
    BUILTIN_CURVES
        .iter()
        .map(|n| builtin_curve(n).expect("built-in curves are valid"))
        .collect()
}

/// A built-in name, a file path, or a name inside `dir`.
pub fn resolve_curve(spec: &str, dir: Option<&Path>) -> Result<Curve, CurveError> {
    if builtin_json(spec).is_some() {
        return builtin_curve(spec);
    }
    let mut candidates = vec![Path::new(spec).to_path_buf()];
    if let Some(dir) = dir {
        candidates.push(dir.join(spec));
        candidates.push(dir.join(format!("{spec}.json")));
    }
    for c in candidates {
        if c.is_file() {
            let text =
                std::fs::read_to_string(&c).map_err(|e| CurveError::Format(e.to_string()))?;
            let v: Value =
                serde_json::from_str(&text).map_err(|e| CurveError::Format(e.to_string()))?;
            return curve_from_json(&v);
        }
    }
    Err(CurveError::Unknown(spec.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};
    use crate::symalg::equivalent;

    fn e(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn plane_curve(coords: &[&str]) -> Curve {
        let v = serde_json::json!({ "name": "c", "interval": [-3, 3], "coords": coords });
        curve_from_json(&v).unwrap()
    }

    #[test]
    fn pullbacks() {
        let c = plane_curve(&["t", "t^2"]);
        assert_eq!(pullback_apply(&c, &e("x*y")), e("t^3"));
        assert_eq!(pullback_apply(&c, &Expr::one()), Expr::one());
        let circle = builtin_curve("circular").unwrap();
        assert!(equivalent(
            &pullback_apply(&circle, &e("x^2 + y^2")),
            &Expr::one()
        ));
    }

    #[test]
    fn lifted_evaluation_is_evaluation_at_the_image() {
        let c = plane_curve(&["t", "t^2"]);
        let stage = Stage::grassmann(1, Category::Smooth);
        let lifted = lift_curve(&c, stage, CurveGrading::Full).unwrap();
        let tau = StagePoint::ev(stage, vec![Scalar::Exact(ratio(1, 2))]).unwrap();
        let v = lifted.apply(&tau, &e("x*y")).unwrap();
        assert_eq!(v, StageValue::scalar(1, Scalar::Exact(ratio(1, 8))));
        let image = lifted.image(&tau).unwrap();
        let expected = StagePoint::ev(
            stage,
            vec![Scalar::Exact(ratio(1, 2)), Scalar::Exact(ratio(1, 4))],
        )
        .unwrap();
        assert_eq!(image, expected);
    }

    #[test]
    fn chain_rule_through_the_pullback() {
        let c = plane_curve(&["t"]);
        let stage = Stage::grassmann(1, Category::Smooth);
        let lifted = lift_curve(&c, stage, CurveGrading::Full).unwrap();
        let one = Scalar::from(1);
        let tau = StagePoint::new(
            stage,
            vec![
                StageTerm {
                    lambda: StageValue::one(1),
                    functional: Functional::Eval {
                        point: vec![one.clone()],
                    },
                },
                StageTerm {
                    lambda: StageValue::generator(1, 1).unwrap(),
                    functional: Functional::DirDeriv {
                        point: vec![one.clone()],
                        v: vec![one],
                    },
                },
            ],
        )
        .unwrap();
        let v = lifted.apply(&tau, &e("x^2")).unwrap();
        let expected = StageValue::one(1)
            .try_add(&StageValue::generator(1, 1).unwrap().scale(&Scalar::from(2)))
            .unwrap();
        assert_eq!(v, expected);
        let pushed = lifted.image(&tau).unwrap();
        assert_eq!(pushed.apply(c.target(), &e("x^2")).unwrap(), expected);
    }

    #[test]
    fn odd_curves_need_the_linear_category() {
        let c = builtin_curve("straight_line").unwrap();
        assert!(matches!(
            CurveGrading::Odd.stage(2, Category::Smooth),
            Err(CurveError::Category(_))
        ));
        let odd = CurveGrading::Odd.stage(2, Category::Linear).unwrap();
        assert!(lift_curve(&c, odd, CurveGrading::Odd).is_ok());
        assert!(matches!(
            lift_curve(&c, odd, CurveGrading::Full),
            Err(CurveError::Category(_))
        ));
        let smooth_full = Stage::grassmann(2, Category::Smooth);
        assert!(matches!(
            lift_curve(&c, smooth_full, CurveGrading::Odd),
            Err(CurveError::Category(_))
        ));
    }

    #[test]
    fn endpoints_at_the_singularity() {
        let unit = GrassmannElement::one(1);
        let mut seen = Vec::new();
        for name in ["radial_infall", "radial_infall_cubic"] {
            let c = builtin_curve(name).unwrap();
            let lifted = lift_curve(
                &c,
                Stage::grassmann(1, Category::Smooth),
                CurveGrading::Full,
            )
            .unwrap();
            seen.push(singular_endpoint(&lifted, &unit).unwrap());
        }
        assert_eq!(
            seen[0],
            Endpoint::Collapsed {
                class: PointClass::UnitPoint
            }
        );
        assert_eq!(seen[0], seen[1]);
        let c = builtin_curve("radial_infall").unwrap();
        let lin = lift_curve(
            &c,
            Stage::grassmann(1, Category::Linear),
            CurveGrading::Full,
        )
        .unwrap();
        let lam = GrassmannElement::from_terms(1, [(vec![], int(1)), (vec![1], int(1))]).unwrap();
        match singular_endpoint(&lin, &lam).unwrap() {
            Endpoint::SoulBearing { soul, .. } => {
                assert_eq!(soul, GrassmannElement::generator(1, 1).unwrap())
            }
            other => panic!("{other:?}"),
        }
        let line = builtin_curve("straight_line").unwrap();
        let lifted = lift_curve(
            &line,
            Stage::grassmann(1, Category::Smooth),
            CurveGrading::Full,
        )
        .unwrap();
        assert!(matches!(
            singular_endpoint(&lifted, &unit),
            Err(CurveError::NotTerminating(_))
        ));
    }

    #[test]
    fn pullback_is_contravariant() {
        let c = plane_curve(&["t", "t^2"]);
        let delta = SmoothMap::new(
            c.target().clone(),
            Chart::new(&["u"]).unwrap(),
            vec![e("x*y + x")],
        )
        .unwrap();
        let composed = c.map.then(&delta).unwrap();
        let f = e("u^2");
        assert_eq!(composed.pullback(&f), c.map.pullback(&delta.pullback(&f)));
        assert!(SmoothMap::new(
            Chart::new(&["t"]).unwrap(),
            Chart::new(&["x"]).unwrap(),
            vec![e("q")]
        )
        .is_err());
    }
}
