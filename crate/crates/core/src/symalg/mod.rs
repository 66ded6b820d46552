//! Smooth functions on a single coordinate chart, represented symbolically.

mod diff;
mod eval;
mod expr;
mod json;
mod parse;
mod ratfun;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diff::differentiate;
pub use eval::{evaluate, evaluate_f64, rel_diff, Bindings, EvalError};
pub use expr::{as_integer, Expr, Func};
pub use json::{from_json as expr_from_json, to_json as expr_to_json};
pub use parse::{parse_expr, ParseError};
pub use ratfun::{equivalent, is_identically_zero};

use crate::scalar::{rational_from_f64, Scalar};

/// Tolerance for "all sampled values agree" in [`is_constant`].
pub const CONSTANCY_TOL: f64 = 1e-12;
/// Number of sample points used by [`is_constant`].
pub const CONSTANCY_SAMPLES: usize = 32;
/// Seed for the constancy sampler.
pub const CONSTANCY_SEED: u64 = 0x5eed_c0de;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("chart needs at least one coordinate")]
    Empty,
    #[error("duplicate coordinate name `{0}`")]
    DuplicateCoordinate(String),
    #[error("coordinate index {index} out of range for a {dim}-dimensional chart")]
    CoordinateIndex { index: usize, dim: usize },
    #[error("point has {got} coordinates, chart has {dim}")]
    Dimension { got: usize, dim: usize },
    #[error("point {0} lies outside the chart domain")]
    OutsideDomain(String),
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("composition expects {expected} functions, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("could not find {0} sample points inside the chart domain")]
    Sampling(usize),
}

/// Open coordinate interval `lo < x < hi`; the bounds may mention parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Expr,
    pub hi: Expr,
}

/// A single coordinate chart: names, sampling box, extra strict
/// inequalities `c > 0`, and numeric values of named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    coords: Vec<Arc<str>>,
    boxes: Vec<Interval>,
    constraints: Vec<Expr>,
    params: Bindings,
}

impl Chart {
    /// Chart with every coordinate ranging over `(-2, 2)`.
    pub fn new(coords: &[&str]) -> Result<Chart, ChartError> {
        Chart::uniform(coords, -2, 2)
    }

    /// Chart with every coordinate ranging over `(lo, hi)`.
    pub fn uniform(coords: &[&str], lo: i64, hi: i64) -> Result<Chart, ChartError> {
        let iv = Interval {
            lo: Expr::int(lo),
            hi: Expr::int(hi),
        };
        Chart::with_domain(coords, vec![iv; coords.len()], Vec::new(), Bindings::new())
    }

    pub fn with_domain(
        coords: &[&str],
        boxes: Vec<Interval>,
        constraints: Vec<Expr>,
        params: Bindings,
    ) -> Result<Chart, ChartError> {
        if coords.is_empty() {
            return Err(ChartError::Empty);
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(ChartError::DuplicateCoordinate(c.to_string()));
            }
        }
        if boxes.len() != coords.len() {
            return Err(ChartError::Dimension {
                got: boxes.len(),
                dim: coords.len(),
            });
        }
        Ok(Chart {
            coords: coords.iter().map(|c| Arc::from(*c)).collect(),
            boxes,
            constraints,
            params,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Arc<str>] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> Result<&str, ChartError> {
        self.coords
            .get(i)
            .map(|c| &**c)
            .ok_or(ChartError::CoordinateIndex {
                index: i,
                dim: self.dim(),
            })
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| &**c == name)
    }

    pub fn coord_expr(&self, i: usize) -> Expr {
        Expr::Sym(self.coords[i].clone())
    }

    pub fn params(&self) -> &Bindings {
        &self.params
    }

    pub fn boxes(&self) -> &[Interval] {
        &self.boxes
    }

    pub fn constraints(&self) -> &[Expr] {
        &self.constraints
    }

    pub fn set_param(&mut self, name: &str, v: impl Into<Scalar>) {
        self.params.set(name, v);
    }

    /// Parameters plus the coordinates of `point`.
    pub fn bindings(&self, point: &[Scalar]) -> Result<Bindings, ChartError> {
        if point.len() != self.dim() {
            return Err(ChartError::Dimension {
                got: point.len(),
                dim: self.dim(),
            });
        }
        let mut b = self.params.clone();
        for (c, v) in self.coords.iter().zip(point) {
            b.set(c, v.clone());
        }
        Ok(b)
    }

    /// Numeric sampling box of coordinate `i`.
    pub fn bounds(&self, i: usize) -> Result<(f64, f64), ChartError> {
        let iv = &self.boxes[i];
        Ok((
            evaluate_f64(&iv.lo, &self.params)?,
            evaluate_f64(&iv.hi, &self.params)?,
        ))
    }

    pub fn contains(&self, point: &[Scalar]) -> bool {
        if point.len() != self.dim() {
            return false;
        }
        for (i, x) in point.iter().enumerate() {
            match self.bounds(i) {
                Ok((lo, hi)) => {
                    let x = x.to_f64();
                    if !(x > lo && x < hi) {
                        return false;
                    }
                }
                Err(_) => return false,
            }
        }
        let Ok(b) = self.bindings(point) else {
            return false;
        };
        self.constraints
            .iter()
            .all(|c| matches!(evaluate_f64(c, &b), Ok(v) if v > 0.0))
    }

    /// Random exact points inside the domain, on a grid of step 1/4096.
    pub fn sample_points(
        &self,
        rng: &mut ChaCha8Rng,
        count: usize,
    ) -> Result<Vec<Vec<Scalar>>, ChartError> {
        let bounds: Vec<(f64, f64)> = (0..self.dim())
            .map(|i| self.bounds(i))
            .collect::<Result<_, _>>()?;
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count {
            attempts += 1;
            if attempts > 200 * count + 1000 {
                return Err(ChartError::Sampling(count));
            }
            let p: Vec<Scalar> = bounds
                .iter()
                .map(|(lo, hi)| {
                    let x = lo + (hi - lo) * rng.gen_range(0.02..0.98);
                    grid_rational(x)
                })
                .collect();
            if self.contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    pub fn check_point(&self, point: &[Scalar]) -> Result<(), ChartError> {
        if point.len() != self.dim() {
            return Err(ChartError::Dimension {
                got: point.len(),
                dim: self.dim(),
            });
        }
        if !self.contains(point) {
            return Err(ChartError::OutsideDomain(fmt_point(point)));
        }
        Ok(())
    }
}

/// Round to the nearest multiple of 1/4096 as an exact rational.
pub fn grid_rational(x: f64) -> Scalar {
    let k = (x * 4096.0).round();
    Scalar::Exact(rational_from_f64(k).expect("finite") / BigRational::from_integer(4096.into()))
}

pub fn fmt_point(point: &[Scalar]) -> String {
    let parts: Vec<String> = point.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// A point of a chart that satisfies the domain predicate.
#[derive(Debug, Clone)]
pub struct PointEvaluation<'a> {
    chart: &'a Chart,
    point: Vec<Scalar>,
}

impl<'a> PointEvaluation<'a> {
    pub fn new(chart: &'a Chart, point: Vec<Scalar>) -> Result<Self, ChartError> {
        chart.check_point(&point)?;
        Ok(PointEvaluation { chart, point })
    }

    pub fn point(&self) -> &[Scalar] {
        &self.point
    }

    /// `ev_p(f) = f(p)`.
    pub fn evaluate(&self, f: &Expr) -> Result<Scalar, ChartError> {
        Ok(evaluate(f, &self.chart.bindings(&self.point)?)?)
    }
}

/// Partial derivative along coordinate `i` of `chart`.
pub fn partial(chart: &Chart, f: &Expr, i: usize) -> Result<Expr, ChartError> {
    Ok(differentiate(f, chart.coord(i)?))
}

/// Substitute `fs[j]` for the `j`-th slot symbol of `omega`.
pub fn compose_smooth(omega: &Expr, slots: &[&str], fs: &[Expr]) -> Result<Expr, ChartError> {
    if slots.len() != fs.len() {
        return Err(ChartError::Arity {
            expected: slots.len(),
            got: fs.len(),
        });
    }
    let map: BTreeMap<Arc<str>, Expr> = slots
        .iter()
        .zip(fs)
        .map(|(s, f)| (Arc::from(*s), f.clone()))
        .collect();
    Ok(omega.substitute(&map))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Constancy {
    ConstantExactly {
        value: Scalar,
    },
    NumericallyConstant {
        value: Scalar,
        warning: String,
    },
    NotConstant {
        witness: [Vec<Scalar>; 2],
        values: [Scalar; 2],
    },
}

impl Constancy {
    pub fn is_constant(&self) -> bool {
        !matches!(self, Constancy::NotConstant { .. })
    }

    pub fn value(&self) -> Option<&Scalar> {
        match self {
            Constancy::ConstantExactly { value } | Constancy::NumericallyConstant { value, .. } => {
                Some(value)
            }
            Constancy::NotConstant { .. } => None,
        }
    }
}

/// Three-valued constancy decision over the chart coordinates.
pub fn is_constant(f: &Expr, chart: &Chart) -> Result<Constancy, ChartError> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(CONSTANCY_SEED);
    let exact = (0..chart.dim()).all(|i| is_identically_zero(&differentiate(f, &chart.coords[i])));
    let mut samples: Vec<(Vec<Scalar>, Scalar)> = Vec::with_capacity(CONSTANCY_SAMPLES);
    let needed = if exact { 1 } else { CONSTANCY_SAMPLES };
    let mut attempts = 0;
    while samples.len() < needed {
        attempts += 1;
        if attempts > 64 * CONSTANCY_SAMPLES {
            return Err(ChartError::Sampling(CONSTANCY_SAMPLES));
        }
        let p = chart.sample_points(&mut rng, 1)?.pop().expect("one point");
        if let Ok(v) = evaluate(f, &chart.bindings(&p)?) {
            samples.push((p, v));
        }
    }
    if exact {
        let value = samples.pop().expect("one sample").1;
        return Ok(Constancy::ConstantExactly { value });
    }
    let (p0, v0) = samples[0].clone();
    for (p, v) in &samples[1..] {
        if !v.approx_eq(&v0, CONSTANCY_TOL) {
            return Ok(Constancy::NotConstant {
                witness: [p0, p.clone()],
                values: [v0, v.clone()],
            });
        }
    }
    Ok(Constancy::NumericallyConstant {
        value: v0,
        warning: format!("{CONSTANCY_SAMPLES} samples agree within {CONSTANCY_TOL:e}; not a proof"),
    })
}

/// Random polynomial in `vars` with up to `max_terms` monomials of total
/// degree at most `max_degree` and integer coefficients in `[-5, 5]`.
pub fn random_polynomial(
    rng: &mut ChaCha8Rng,
    vars: &[Arc<str>],
    max_degree: u32,
    max_terms: usize,
) -> Expr {
    let terms = rng.gen_range(1..=max_terms.max(1));
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let c = rng.gen_range(-5i64..=5);
        let mut factors = vec![Expr::int(c)];
        let mut budget = rng.gen_range(0..=max_degree);
        while budget > 0 && !vars.is_empty() {
            let v = &vars[rng.gen_range(0..vars.len())];
            let k = rng.gen_range(1..=budget);
            factors.push(Expr::pow(Expr::Sym(v.clone()), k as i64));
            budget -= k;
        }
        out.push(Expr::mul(factors));
    }
    Expr::add(out)
}

/// Random expression tree of depth at most `depth` over `vars`, mixing
/// rational constants, sums, products, integer powers in `[-2, 3]`,
/// quotients with positive denominators and the elementary functions.
pub fn random_expr(rng: &mut ChaCha8Rng, vars: &[Arc<str>], depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return if !vars.is_empty() && rng.gen_bool(0.7) {
            Expr::Sym(vars[rng.gen_range(0..vars.len())].clone())
        } else {
            Expr::num(crate::scalar::ratio(
                rng.gen_range(-5..=5),
                rng.gen_range(1..=3),
            ))
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_expr(rng, vars, depth - 1);
    match rng.gen_range(0..5) {
        0 => Expr::add(vec![sub(rng), sub(rng)]),
        1 => Expr::mul(vec![sub(rng), sub(rng)]),
        2 => Expr::pow(sub(rng), rng.gen_range(-2..=3)),
        3 => {
            let num = sub(rng);
            Expr::div(num, Expr::add(vec![Expr::int(3), Expr::pow(sub(rng), 2)]))
        }
        _ => {
            const FUNCS: [Func; 8] = [
                Func::Exp,
                Func::Ln,
                Func::Sin,
                Func::Cos,
                Func::Tan,
                Func::Sinh,
                Func::Cosh,
                Func::Sqrt,
            ];
            Expr::apply(FUNCS[rng.gen_range(0..FUNCS.len())], sub(rng))
        }
    }
}

pub fn new_rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}
