//! Lorentz metrics on a chart, their Levi-Civita curvature, and the
//! Einstein-algebra check.

pub mod catalog;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::symalg::{
    differentiate, evaluate, evaluate_f64, fmt_point, is_identically_zero, new_rng, Chart,
    ChartError, EvalError, Expr,
};

/// Probe points per metric for numeric checks.
pub const PROBE_COUNT: usize = 8;
pub const PROBE_SEED: u64 = 42;
/// Residual tolerance for the numeric Einstein verdict.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Determinant magnitude below which a probe point counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Largest dimension handled by the symbolic adjugate inverse.
pub const MAX_SYMBOLIC_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EinsteinError {
    #[error("metric must be a non-empty square matrix matching the chart dimension {dim}")]
    Shape { dim: usize },
    #[error("metric is not symmetric: g[{0}][{1}] != g[{1}][{0}]")]
    Asymmetric(usize, usize),
    #[error("metric determinant vanishes identically")]
    Degenerate,
    #[error("metric is degenerate at probe point {0}")]
    DegenerateAt(String),
    #[error("metric signature at {point} is {found}, expected {expected}")]
    Signature {
        point: String,
        found: String,
        expected: String,
    },
    #[error("symbolic inverse supports at most {MAX_SYMBOLIC_DIM} dimensions, got {0}")]
    TooLarge(usize),
    #[error("energy-momentum tensor is not symmetric at [{0}][{1}]")]
    AsymmetricSource(usize, usize),
    #[error("expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Matrix = Vec<Vec<Expr>>;

/// A derivation `X(f) = Σ X^μ ∂f/∂x^μ` of the chart's function algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub coeffs: Vec<Expr>,
}

impl Derivation {
    pub fn new(coeffs: Vec<Expr>) -> Self {
        Derivation { coeffs }
    }

    /// The coordinate vector field `∂/∂x^i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut coeffs = vec![Expr::zero(); dim];
        coeffs[i] = Expr::one();
        Derivation { coeffs }
    }

    pub fn apply(&self, chart: &Chart, f: &Expr) -> Result<Expr, EinsteinError> {
        if self.coeffs.len() != chart.dim() {
            return Err(EinsteinError::Arity {
                expected: chart.dim(),
                got: self.coeffs.len(),
            });
        }
        let terms = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                Ok(Expr::mul(vec![
                    c.clone(),
                    differentiate(f, chart.coord(i)?),
                ]))
            })
            .collect::<Result<Vec<_>, ChartError>>()?;
        Ok(Expr::add(terms))
    }
}

/// Covariant tensor of rank `k`, components stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariantTensor {
    dim: usize,
    rank: usize,
    components: Vec<Expr>,
}

impl CovariantTensor {
    pub fn new(dim: usize, rank: usize, components: Vec<Expr>) -> Result<Self, EinsteinError> {
        if components.len() != dim.pow(rank as u32) {
            return Err(EinsteinError::Arity {
                expected: dim.pow(rank as u32),
                got: components.len(),
            });
        }
        Ok(CovariantTensor {
            dim,
            rank,
            components,
        })
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        let dim = m.len();
        CovariantTensor {
            dim,
            rank: 2,
            components: m.iter().flatten().cloned().collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn component(&self, idx: &[usize]) -> &Expr {
        let flat = idx.iter().fold(0, |acc, i| acc * self.dim + i);
        &self.components[flat]
    }

    /// `T(X_1, …, X_k) = Σ T_{μ1…μk} X_1^{μ1} ⋯ X_k^{μk}`.
    pub fn apply(&self, args: &[Derivation]) -> Result<Expr, EinsteinError> {
        if args.len() != self.rank {
            return Err(EinsteinError::Arity {
                expected: self.rank,
                got: args.len(),
            });
        }
        if let Some(bad) = args.iter().find(|a| a.coeffs.len() != self.dim) {
            return Err(EinsteinError::Arity {
                expected: self.dim,
                got: bad.coeffs.len(),
            });
        }
        let mut terms = Vec::new();
        for (flat, comp) in self.components.iter().enumerate() {
            if comp.is_zero() {
                continue;
            }
            let mut idx = vec![0; self.rank];
            let mut rest = flat;
            for slot in (0..self.rank).rev() {
                idx[slot] = rest % self.dim;
                rest /= self.dim;
            }
            let mut factors = vec![comp.clone()];
            for (arg, &i) in args.iter().zip(&idx) {
                factors.push(arg.coeffs[i].clone());
            }
            terms.push(Expr::mul(factors));
        }
        Ok(Expr::add(terms))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    pub name: String,
    pub chart: Chart,
    pub g: Matrix,
    pub riemannian: bool,
}

impl MetricField {
    /// Validates shape, exact symmetry, and (at the probe points)
    /// non-degeneracy and signature.
    pub fn new(
        name: &str,
        chart: Chart,
        g: Matrix,
        riemannian: bool,
    ) -> Result<Self, EinsteinError> {
        let m = chart.dim();
        if g.len() != m || g.iter().any(|row| row.len() != m) {
            return Err(EinsteinError::Shape { dim: m });
        }
        for i in 0..m {
            for j in (i + 1)..m {
                if g[i][j] != g[j][i] {
                    return Err(EinsteinError::Asymmetric(i, j));
                }
            }
        }
        let metric = MetricField {
            name: name.to_string(),
            chart,
            g,
            riemannian,
        };
        for p in metric.probe_points()? {
            metric.check_signature_at(&p)?;
        }
        Ok(metric)
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn probe_points(&self) -> Result<Vec<Vec<Scalar>>, EinsteinError> {
        let mut rng = new_rng(PROBE_SEED);
        Ok(self.chart.sample_points(&mut rng, PROBE_COUNT)?)
    }

    pub fn numeric_at(&self, point: &[Scalar]) -> Result<DMatrix<f64>, EinsteinError> {
        let b = self.chart.bindings(point)?;
        let m = self.dim();
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                out[(i, j)] = evaluate_f64(&self.g[i][j], &b)?;
            }
        }
        Ok(out)
    }

    fn check_signature_at(&self, p: &[Scalar]) -> Result<(), EinsteinError> {
        let g = self.numeric_at(p)?;
        if g.determinant().abs() <= DEGENERACY_TOL {
            return Err(EinsteinError::DegenerateAt(fmt_point(p)));
        }
        let eig = g.symmetric_eigen();
        let negatives = eig.eigenvalues.iter().filter(|v| **v < 0.0).count();
        let expected = if self.riemannian { 0 } else { 1 };
        if negatives != expected {
            let sig = |neg: usize| {
                let mut s = "-".repeat(neg);
                s.push_str(&"+".repeat(self.dim() - neg));
                s
            };
            return Err(EinsteinError::Signature {
                point: fmt_point(p),
                found: sig(negatives),
                expected: sig(expected),
            });
        }
        Ok(())
    }

    /// `g(X, Y)`.
    pub fn pair(&self, x: &Derivation, y: &Derivation) -> Result<Expr, EinsteinError> {
        CovariantTensor::from_matrix(&self.g).apply(&[x.clone(), y.clone()])
    }
}

/// Determinant by cofactor expansion along the first row, skipping zeros.
pub fn determinant(m: &Matrix) -> Expr {
    let n = m.len();
    if n == 0 {
        return Expr::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut terms = Vec::new();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor = minor(m, 0, j);
        let sign = if j % 2 == 0 {
            Expr::one()
        } else {
            Expr::int(-1)
        };
        terms.push(Expr::mul(vec![sign, m[0][j].clone(), determinant(&minor)]));
    }
    Expr::add(terms)
}

fn minor(m: &Matrix, row: usize, col: usize) -> Matrix {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

/// Symbolic inverse via adjugate over determinant.
pub fn inverse(m: &Matrix) -> Result<Matrix, EinsteinError> {
    let n = m.len();
    if n > MAX_SYMBOLIC_DIM {
        return Err(EinsteinError::TooLarge(n));
    }
    let det = determinant(m);
    if is_identically_zero(&det) {
        return Err(EinsteinError::Degenerate);
    }
    let inv_det = Expr::pow(det, -1);
    let mut out = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            // inverse[i][j] = cofactor[j][i] / det
            let sign = if (i + j) % 2 == 0 {
                Expr::one()
            } else {
                Expr::int(-1)
            };
            let cof = determinant(&minor(m, j, i));
            if !cof.is_zero() {
                out[i][j] = Expr::mul(vec![sign, cof, inv_det.clone()]);
            }
        }
    }
    Ok(out)
}

/// `Γ^μ_{νσ}` stored as `gamma[μ][ν][σ]`.
pub type Christoffel = Vec<Vec<Vec<Expr>>>;

pub fn christoffel(g: &MetricField) -> Result<(Matrix, Christoffel), EinsteinError> {
    let m = g.dim();
    let ginv = inverse(&g.g)?;
    let coords: Vec<&str> = (0..m).map(|i| g.chart.coord(i)).collect::<Result<_, _>>()?;
    // dg[k][a][b] = ∂_k g_ab
    let dg: Vec<Matrix> = coords
        .iter()
        .map(|c| {
            g.g.iter()
                .map(|row| row.iter().map(|x| differentiate(x, c)).collect())
                .collect()
        })
        .collect();
    let mut gamma = vec![vec![vec![Expr::zero(); m]; m]; m];
    for mu in 0..m {
        for nu in 0..m {
            for sigma in nu..m {
                let mut terms = Vec::new();
                for k in 0..m {
                    if ginv[mu][k].is_zero() {
                        continue;
                    }
                    let bracket = Expr::add(vec![
                        dg[nu][k][sigma].clone(),
                        dg[sigma][k][nu].clone(),
                        Expr::neg(dg[k][nu][sigma].clone()),
                    ]);
                    if bracket.is_zero() {
                        continue;
                    }
                    terms.push(Expr::mul(vec![ginv[mu][k].clone(), bracket]));
                }
                let value = Expr::mul(vec![
                    Expr::num(crate::scalar::ratio(1, 2)),
                    Expr::add(terms),
                ]);
                gamma[mu][sigma][nu] = value.clone();
                gamma[mu][nu][sigma] = value;
            }
        }
    }
    Ok((ginv, gamma))
}

/// `R^μ_{νστ}` stored as `riemann[μ][ν][σ][τ]`.
pub type Riemann = Vec<Vec<Vec<Vec<Expr>>>>;

#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub metric: String,
    pub inverse: Matrix,
    pub christoffel: Christoffel,
    pub riemann: Riemann,
    pub ricci: Matrix,
    pub scalar: Expr,
}

pub fn curvature(g: &MetricField) -> Result<CurvatureReport, EinsteinError> {
    let m = g.dim();
    let (ginv, gamma) = christoffel(g)?;
    let coords: Vec<&str> = (0..m).map(|i| g.chart.coord(i)).collect::<Result<_, _>>()?;
    let mut riemann = vec![vec![vec![vec![Expr::zero(); m]; m]; m]; m];
    for mu in 0..m {
        for nu in 0..m {
            for sigma in 0..m {
                for tau in (sigma + 1)..m {
                    let mut terms = vec![
                        differentiate(&gamma[mu][nu][tau], coords[sigma]),
                        Expr::neg(differentiate(&gamma[mu][nu][sigma], coords[tau])),
                    ];
                    for k in 0..m {
                        if !gamma[mu][sigma][k].is_zero() && !gamma[k][nu][tau].is_zero() {
                            terms.push(Expr::mul(vec![
                                gamma[mu][sigma][k].clone(),
                                gamma[k][nu][tau].clone(),
                            ]));
                        }
                        if !gamma[mu][tau][k].is_zero() && !gamma[k][nu][sigma].is_zero() {
                            terms.push(Expr::neg(Expr::mul(vec![
                                gamma[mu][tau][k].clone(),
                                gamma[k][nu][sigma].clone(),
                            ])));
                        }
                    }
                    let value = Expr::add(terms);
                    riemann[mu][nu][tau][sigma] = Expr::neg(value.clone());
                    riemann[mu][nu][sigma][tau] = value;
                }
            }
        }
    }
    let mut ricci = vec![vec![Expr::zero(); m]; m];
    for nu in 0..m {
        for tau in 0..m {
            ricci[nu][tau] = Expr::add((0..m).map(|k| riemann[k][nu][k][tau].clone()).collect());
        }
    }
    let mut scalar_terms = Vec::new();
    for mu in 0..m {
        for nu in 0..m {
            if !ginv[mu][nu].is_zero() && !ricci[mu][nu].is_zero() {
                scalar_terms.push(Expr::mul(vec![ginv[mu][nu].clone(), ricci[mu][nu].clone()]));
            }
        }
    }
    Ok(CurvatureReport {
        metric: g.name.clone(),
        inverse: ginv,
        christoffel: gamma,
        riemann,
        ricci,
        scalar: Expr::add(scalar_terms),
    })
}

/// Symmetric source term `T_{μν}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMomentum(Matrix);

impl EnergyMomentum {
    pub fn new(t: Matrix) -> Result<Self, EinsteinError> {
        let m = t.len();
        if t.iter().any(|row| row.len() != m) {
            return Err(EinsteinError::Shape { dim: m });
        }
        for i in 0..m {
            for j in (i + 1)..m {
                if t[i][j] != t[j][i] {
                    return Err(EinsteinError::AsymmetricSource(i, j));
                }
            }
        }
        Ok(EnergyMomentum(t))
    }

    pub fn zero(dim: usize) -> Self {
        EnergyMomentum(vec![vec![Expr::zero(); dim]; dim])
    }

    pub fn components(&self) -> &Matrix {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EinsteinMode {
    /// `Ric − ½ r g + Λ g = 8π T`
    Full,
    /// `Ric = Λ g`
    Vacuum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EinsteinVerdict {
    EinsteinAlgebra,
    NumericallyEinstein {
        max_residual: f64,
    },
    NotEinstein {
        max_residual: f64,
        worst_point: Vec<Scalar>,
        component: [usize; 2],
    },
}

impl EinsteinVerdict {
    /// Both the symbolic and the numeric positive verdicts.
    pub fn is_einstein(&self) -> bool {
        !matches!(self, EinsteinVerdict::NotEinstein { .. })
    }
}

#[derive(Debug, Clone)]
pub struct EinsteinCheck {
    pub mode: EinsteinMode,
    pub residual: Matrix,
    pub verdict: EinsteinVerdict,
    /// Largest `|E_{μν}|` at each probe point.
    pub probe_residuals: Vec<f64>,
}

/// `Ric − ½ r g + Λ g − 8π T` (full) or `Ric − Λ g` (vacuum).
pub fn einstein_residual(
    g: &MetricField,
    curv: &CurvatureReport,
    lambda: &Expr,
    t: &EnergyMomentum,
    mode: EinsteinMode,
) -> Result<Matrix, EinsteinError> {
    let m = g.dim();
    if t.0.len() != m {
        return Err(EinsteinError::Shape { dim: m });
    }
    let half = Expr::num(crate::scalar::ratio(1, 2));
    let eight_pi = Expr::mul(vec![Expr::int(8), Expr::sym("pi")]);
    let mut out = vec![vec![Expr::zero(); m]; m];
    for i in 0..m {
        for j in 0..m {
            let gij = &g.g[i][j];
            out[i][j] = match mode {
                EinsteinMode::Full => Expr::add(vec![
                    curv.ricci[i][j].clone(),
                    Expr::neg(Expr::mul(vec![
                        half.clone(),
                        curv.scalar.clone(),
                        gij.clone(),
                    ])),
                    Expr::mul(vec![lambda.clone(), gij.clone()]),
                    Expr::neg(Expr::mul(vec![eight_pi.clone(), t.0[i][j].clone()])),
                ]),
                EinsteinMode::Vacuum => Expr::sub(
                    curv.ricci[i][j].clone(),
                    Expr::mul(vec![lambda.clone(), gij.clone()]),
                ),
            };
        }
    }
    Ok(out)
}

/// Max `|E_{μν}|` over components at one point, with the worst component.
pub fn residual_at(
    g: &MetricField,
    residual: &Matrix,
    point: &[Scalar],
) -> Result<(f64, [usize; 2]), EinsteinError> {
    let b = g.chart.bindings(point)?;
    let mut worst = (0.0f64, [0, 0]);
    for (i, row) in residual.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            let v = evaluate(e, &b)?.to_f64().abs();
            if v > worst.0 || v.is_nan() {
                worst = (v, [i, j]);
            }
        }
    }
    Ok(worst)
}

pub fn einstein_check(
    g: &MetricField,
    lambda: &Expr,
    t: &EnergyMomentum,
    mode: EinsteinMode,
) -> Result<EinsteinCheck, EinsteinError> {
    let curv = curvature(g)?;
    einstein_check_with(g, &curv, lambda, t, mode)
}

/// [`einstein_check`] reusing an already computed curvature report.
pub fn einstein_check_with(
    g: &MetricField,
    curv: &CurvatureReport,
    lambda: &Expr,
    t: &EnergyMomentum,
    mode: EinsteinMode,
) -> Result<EinsteinCheck, EinsteinError> {
    let residual = einstein_residual(g, curv, lambda, t, mode)?;
    let mut probe_residuals = Vec::with_capacity(PROBE_COUNT);
    let mut worst: Option<(f64, Vec<Scalar>, [usize; 2])> = None;
    for p in g.probe_points()? {
        let (v, comp) = residual_at(g, &residual, &p)?;
        probe_residuals.push(v);
        if worst.as_ref().is_none_or(|(w, _, _)| v > *w) {
            worst = Some((v, p, comp));
        }
    }
    let symbolic_zero = residual.iter().flatten().all(is_identically_zero);
    let (max_residual, worst_point, component) = worst.expect("at least one probe point");
    let verdict = if symbolic_zero {
        EinsteinVerdict::EinsteinAlgebra
    } else if max_residual < RESIDUAL_TOL {
        EinsteinVerdict::NumericallyEinstein { max_residual }
    } else {
        EinsteinVerdict::NotEinstein {
            max_residual,
            worst_point,
            component,
        }
    };
    Ok(EinsteinCheck {
        mode,
        residual,
        verdict,
        probe_residuals,
    })
}

/// `T := (Ric − ½ r g + Λ g) / 8π`.
pub fn induced_energy_momentum(
    g: &MetricField,
    lambda: &Expr,
) -> Result<EnergyMomentum, EinsteinError> {
    let curv = curvature(g)?;
    induced_energy_momentum_with(g, &curv, lambda)
}

pub fn induced_energy_momentum_with(
    g: &MetricField,
    curv: &CurvatureReport,
    lambda: &Expr,
) -> Result<EnergyMomentum, EinsteinError> {
    let lhs = einstein_residual(
        g,
        curv,
        lambda,
        &EnergyMomentum::zero(g.dim()),
        EinsteinMode::Full,
    )?;
    let inv_eight_pi = Expr::pow(Expr::mul(vec![Expr::int(8), Expr::sym("pi")]), -1);
    let t = lhs
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|e| Expr::mul(vec![inv_eight_pi.clone(), e]))
                .collect()
        })
        .collect();
    EnergyMomentum::new(t)
}

/// Numeric value of a matrix of expressions at a point.
pub fn numeric_matrix(
    chart: &Chart,
    m: &Matrix,
    point: &[Scalar],
) -> Result<DMatrix<f64>, EinsteinError> {
    let b = chart.bindings(point)?;
    let n = m.len();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = evaluate_f64(&m[i][j], &b)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symalg::{parse_expr, Bindings, Interval};

    fn minkowski() -> MetricField {
        catalog::builtin("minkowski").unwrap()
    }

    #[test]
    fn rejects_bad_metrics() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let asym = vec![
            vec![Expr::int(-1), Expr::sym("x")],
            vec![Expr::zero(), Expr::one()],
        ];
        assert!(matches!(
            MetricField::new("a", chart.clone(), asym, false),
            Err(EinsteinError::Asymmetric(0, 1))
        ));
        let degenerate = vec![
            vec![Expr::one(), Expr::one()],
            vec![Expr::one(), Expr::one()],
        ];
        assert!(matches!(
            MetricField::new("d", chart.clone(), degenerate.clone(), false),
            Err(EinsteinError::DegenerateAt(_))
        ));
        assert!(matches!(
            inverse(&degenerate),
            Err(EinsteinError::Degenerate)
        ));
        let euclid = vec![
            vec![Expr::one(), Expr::zero()],
            vec![Expr::zero(), Expr::one()],
        ];
        assert!(matches!(
            MetricField::new("e", chart.clone(), euclid.clone(), false),
            Err(EinsteinError::Signature { .. })
        ));
        assert!(MetricField::new("e", chart, euclid, true).is_ok());
    }

    #[test]
    fn inverse_of_general_symmetric_matrix() {
        let m: Matrix = vec![
            vec![parse_expr("x").unwrap(), parse_expr("y").unwrap()],
            vec![parse_expr("y").unwrap(), parse_expr("2").unwrap()],
        ];
        let inv = inverse(&m).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let prod = Expr::add(
                    (0..2)
                        .map(|k| m[i][k].clone() * inv[k][j].clone())
                        .collect(),
                );
                let target = if i == j { Expr::one() } else { Expr::zero() };
                assert!(crate::symalg::equivalent(&prod, &target), "{i}{j}: {prod}");
            }
        }
    }

    #[test]
    fn minkowski_is_flat() {
        let g = minkowski();
        let curv = curvature(&g).unwrap();
        assert!(curv
            .christoffel
            .iter()
            .flatten()
            .flatten()
            .all(Expr::is_zero));
        assert!(curv.ricci.iter().flatten().all(Expr::is_zero));
        assert!(curv.scalar.is_zero());
        let check = einstein_check(
            &g,
            &Expr::zero(),
            &EnergyMomentum::zero(4),
            EinsteinMode::Full,
        )
        .unwrap();
        assert_eq!(check.verdict, EinsteinVerdict::EinsteinAlgebra);
        let bad = einstein_check(
            &g,
            &Expr::one(),
            &EnergyMomentum::zero(4),
            EinsteinMode::Vacuum,
        )
        .unwrap();
        assert!(!bad.verdict.is_einstein());
        assert_eq!(bad.residual[0][0], Expr::one());
    }

    #[test]
    fn derivations_and_tensors() {
        let chart = Chart::new(&["x", "y"]).unwrap();
        let f = parse_expr("x^2*y").unwrap();
        let x = Derivation::coordinate(2, 0);
        assert_eq!(x.apply(&chart, &f).unwrap(), parse_expr("2*x*y").unwrap());
        let field = Derivation::new(vec![Expr::sym("y"), Expr::sym("x")]);
        assert_eq!(
            field.apply(&chart, &f).unwrap(),
            parse_expr("2*x*y^2 + x^3").unwrap()
        );
        let t = CovariantTensor::new(2, 1, vec![Expr::sym("y"), Expr::one()]).unwrap();
        assert_eq!(
            t.apply(&[field.clone()]).unwrap(),
            parse_expr("y^2 + x").unwrap()
        );
        assert!(t.apply(&[]).is_err());
        assert!(CovariantTensor::new(2, 2, vec![Expr::one()]).is_err());
    }

    #[test]
    fn energy_momentum_must_be_symmetric() {
        let t = vec![
            vec![Expr::zero(), Expr::one()],
            vec![Expr::zero(), Expr::zero()],
        ];
        assert!(matches!(
            EnergyMomentum::new(t),
            Err(EinsteinError::AsymmetricSource(0, 1))
        ));
    }

    #[test]
    fn two_sphere_curvature() {
        let params = Bindings::new().with("a", 2i64);
        let boxes = vec![
            Interval {
                lo: parse_expr("1/5").unwrap(),
                hi: parse_expr("pi - 1/5").unwrap(),
            },
            Interval {
                lo: Expr::zero(),
                hi: parse_expr("2*pi").unwrap(),
            },
        ];
        let chart = Chart::with_domain(&["theta", "phi"], boxes, vec![], params).unwrap();
        let g = vec![
            vec![parse_expr("a^2").unwrap(), Expr::zero()],
            vec![Expr::zero(), parse_expr("a^2*sin(theta)^2").unwrap()],
        ];
        let g = MetricField::new("sphere", chart, g, true).unwrap();
        let curv = curvature(&g).unwrap();
        let gamma = &curv.christoffel;
        assert!(crate::symalg::equivalent(
            &gamma[0][1][1],
            &parse_expr("-sin(theta)*cos(theta)").unwrap()
        ));
        assert!(crate::symalg::equivalent(
            &gamma[1][0][1],
            &parse_expr("cos(theta)/sin(theta)").unwrap()
        ));
        assert!(gamma[0][0][0].is_zero() && gamma[1][1][1].is_zero() && gamma[1][0][0].is_zero());
        assert!(crate::symalg::equivalent(
            &curv.scalar,
            &parse_expr("2/a^2").unwrap()
        ));
    }
}

#[cfg(test)]
mod catalog_tests {
    use super::*;
    use crate::symalg::{equivalent, parse_expr};

    #[test]
    fn schwarzschild_is_ricci_flat() {
        let entry = catalog::builtin_entry("schwarzschild").unwrap();
        let g = &entry.metric;
        let curv = curvature(g).unwrap();
        let gamma_t_tr = parse_expr("GM/(r^2*(1 - 2*GM/r))").unwrap();
        assert!(
            equivalent(&curv.christoffel[0][0][1], &gamma_t_tr),
            "{}",
            curv.christoffel[0][0][1]
        );
        for p in g.probe_points().unwrap() {
            let ric = numeric_matrix(&g.chart, &curv.ricci, &p).unwrap();
            assert!(ric.abs().max() < 1e-9, "{ric}");
        }
        let check = einstein_check_with(
            g,
            &curv,
            &entry.lambda,
            &EnergyMomentum::zero(4),
            entry.mode,
        )
        .unwrap();
        assert!(check.verdict.is_einstein());
    }

    #[test]
    fn de_sitter_vacuum_with_cosmological_constant() {
        let entry = catalog::builtin_entry("de_sitter_static").unwrap();
        let check = einstein_check(
            &entry.metric,
            &entry.lambda,
            &EnergyMomentum::zero(4),
            EinsteinMode::Vacuum,
        )
        .unwrap();
        assert!(check.verdict.is_einstein(), "{:?}", check.verdict);
        let wrong = einstein_check(
            &entry.metric,
            &Expr::zero(),
            &EnergyMomentum::zero(4),
            EinsteinMode::Vacuum,
        )
        .unwrap();
        assert!(!wrong.verdict.is_einstein());
    }

    #[test]
    fn closed_flrw_energy_density() {
        let g = catalog::builtin("flrw_closed").unwrap();
        let curv = curvature(&g).unwrap();
        let t = induced_energy_momentum_with(&g, &curv, &Expr::zero()).unwrap();
        let expected = parse_expr("3/(8*pi) * ((2*t/(1 + t^2))^2 + 1/(1 + t^2)^2)").unwrap();
        let diff = Expr::sub(t.components()[0][0].clone(), expected.clone());
        assert!(
            equivalent(&t.components()[0][0], &expected) || {
                g.probe_points().unwrap().iter().all(|p| {
                    evaluate_f64(&diff, &g.chart.bindings(p).unwrap())
                        .unwrap()
                        .abs()
                        < 1e-12
                })
            }
        );
        let round = einstein_check_with(&g, &curv, &Expr::zero(), &t, EinsteinMode::Full).unwrap();
        assert_eq!(round.verdict, EinsteinVerdict::EinsteinAlgebra);
    }
}
