//! The space `M* = M ∪ {*}` with a malicious boundary point: only constant
//! functions survive, `*` has a single neighbourhood, and stage points over
//! `M*` collapse to their value on the unit.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::grassmann::{BodyCase, GrassmannElement, IdempotentReport};
use crate::scalar::Scalar;
use crate::stage::Category;
use crate::symalg::{is_constant, Chart, ChartError, Constancy, Expr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SingularError {
    #[error("ρ(1) = {0} is not idempotent, so ρ is not a multiplicative point")]
    NotIdempotent(String),
    #[error("box has {got} coordinates, space has {dim}")]
    Dimension { got: usize, dim: usize },
    #[error("empty box: lower bound {lo} is not below upper bound {hi}")]
    EmptyBox { lo: String, hi: String },
    #[error("points coincide; nothing to separate")]
    SamePoint,
    #[error("`{0}` is not constant, so it is not a function on M*")]
    NotConstant(String),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Prolongation {
    Prolongs {
        value: Scalar,
        certified: bool,
    },
    DoesNotProlong {
        witness: [Vec<Scalar>; 2],
        values: [Scalar; 2],
    },
}

impl Prolongation {
    pub fn prolongs(&self) -> bool {
        matches!(self, Prolongation::Prolongs { .. })
    }
}

/// A point of `M*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacePoint {
    Base(Vec<BigRationalStr>),
    Star,
}

/// Rational serialized as `"p/q"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BigRationalStr(#[serde(with = "crate::scalar::rational_str")] pub BigRational);

impl SpacePoint {
    pub fn base(coords: Vec<BigRational>) -> SpacePoint {
        SpacePoint::Base(coords.into_iter().map(BigRationalStr).collect())
    }
}

/// Open box `lo_i < x_i < hi_i` with rational bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RationalBox {
    pub lo: Vec<BigRationalStr>,
    pub hi: Vec<BigRationalStr>,
}

impl RationalBox {
    pub fn new(lo: Vec<BigRational>, hi: Vec<BigRational>) -> Result<RationalBox, SingularError> {
        if lo.len() != hi.len() {
            return Err(SingularError::Dimension {
                got: hi.len(),
                dim: lo.len(),
            });
        }
        for (a, b) in lo.iter().zip(&hi) {
            if a >= b {
                return Err(SingularError::EmptyBox {
                    lo: a.to_string(),
                    hi: b.to_string(),
                });
            }
        }
        Ok(RationalBox {
            lo: lo.into_iter().map(BigRationalStr).collect(),
            hi: hi.into_iter().map(BigRationalStr).collect(),
        })
    }

    /// Cube of half-width `r` around `c`.
    pub fn around(c: &[BigRational], r: &BigRational) -> Result<RationalBox, SingularError> {
        RationalBox::new(
            c.iter().map(|x| x - r).collect(),
            c.iter().map(|x| x + r).collect(),
        )
    }

    pub fn contains(&self, p: &[BigRational]) -> bool {
        p.len() == self.lo.len()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| &a.0 < x && x < &b.0)
    }

    pub fn intersects(&self, other: &RationalBox) -> bool {
        self.lo.len() == other.lo.len()
            && (0..self.lo.len()).all(|i| {
                self.lo[i].0.clone().max(other.lo[i].0.clone())
                    < self.hi[i].0.clone().min(other.hi[i].0.clone())
            })
    }
}

/// Opens of `M*`: the opens of `M` plus `M*` itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Open {
    Base(RationalBox),
    Whole,
}

impl Open {
    pub fn contains(&self, x: &SpacePoint) -> bool {
        match (self, x) {
            (Open::Whole, _) => true,
            (Open::Base(_), SpacePoint::Star) => false,
            (Open::Base(b), SpacePoint::Base(p)) => {
                let p: Vec<BigRational> = p.iter().map(|c| c.0.clone()).collect();
                b.contains(&p)
            }
        }
    }

    pub fn intersects(&self, other: &Open) -> bool {
        match (self, other) {
            (Open::Whole, _) | (_, Open::Whole) => true,
            (Open::Base(a), Open::Base(b)) => a.intersects(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborhoodFilter {
    pub point: SpacePoint,
    /// Neighbourhood basis; for a base point, cubes of half-width `2^-k`.
    pub basis: Vec<Open>,
    /// For `*` the basis is the whole filter.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Separation {
    Separated {
        u: Open,
        v: Open,
    },
    /// Every pair of neighbourhoods meets; `checked` pairs were examined.
    Inseparable {
        checked: usize,
    },
}

/// Finite model of `top M* = top M ∪ {M*}`, with opens of `M` generated by
/// rational boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyModel {
    dim: usize,
    /// Depth of the dyadic neighbourhood basis reported for base points.
    pub depth: u32,
}

impl TopologyModel {
    pub fn new(dim: usize) -> TopologyModel {
        TopologyModel { dim, depth: 6 }
    }

    pub fn neighborhoods(&self, x: &SpacePoint) -> Result<NeighborhoodFilter, SingularError> {
        match x {
            SpacePoint::Star => Ok(NeighborhoodFilter {
                point: SpacePoint::Star,
                basis: vec![Open::Whole],
                complete: true,
            }),
            SpacePoint::Base(p) => {
                if p.len() != self.dim {
                    return Err(SingularError::Dimension {
                        got: p.len(),
                        dim: self.dim,
                    });
                }
                let c: Vec<BigRational> = p.iter().map(|x| x.0.clone()).collect();
                let mut basis = Vec::with_capacity(self.depth as usize + 2);
                for k in 0..=self.depth {
                    let r = BigRational::new(1.into(), num_bigint::BigInt::from(1u64 << k));
                    basis.push(Open::Base(RationalBox::around(&c, &r)?));
                }
                basis.push(Open::Whole);
                Ok(NeighborhoodFilter {
                    point: x.clone(),
                    basis,
                    complete: false,
                })
            }
        }
    }

    /// Disjoint neighbourhoods of `x` and `y`, or a proof that none exist
    /// among the generated opens.
    pub fn separate(&self, x: &SpacePoint, y: &SpacePoint) -> Result<Separation, SingularError> {
        match (x, y) {
            (SpacePoint::Base(p), SpacePoint::Base(q)) => {
                let p: Vec<BigRational> = p.iter().map(|c| c.0.clone()).collect();
                let q: Vec<BigRational> = q.iter().map(|c| c.0.clone()).collect();
                if p.len() != self.dim || q.len() != self.dim {
                    return Err(SingularError::Dimension {
                        got: p.len().max(q.len()),
                        dim: self.dim,
                    });
                }
                let d = p
                    .iter()
                    .zip(&q)
                    .map(|(a, b)| (a - b).abs())
                    .max()
                    .unwrap_or_else(BigRational::zero);
                if d.is_zero() {
                    return Err(SingularError::SamePoint);
                }
                let r = d / BigRational::from_integer(2.into());
                let u = RationalBox::around(&p, &r)?;
                let v = RationalBox::around(&q, &r)?;
                debug_assert!(!u.intersects(&v));
                Ok(Separation::Separated {
                    u: Open::Base(u),
                    v: Open::Base(v),
                })
            }
            (SpacePoint::Star, SpacePoint::Star) => Err(SingularError::SamePoint),
            _ => {
                let nx = self.neighborhoods(x)?;
                let ny = self.neighborhoods(y)?;
                let mut checked = 0;
                for u in &nx.basis {
                    for v in &ny.basis {
                        checked += 1;
                        if !u.intersects(v) {
                            return Ok(Separation::Separated {
                                u: u.clone(),
                                v: v.clone(),
                            });
                        }
                    }
                }
                Ok(Separation::Inseparable { checked })
            }
        }
    }

    /// `*` lies in the closure of any nonempty family of opens: its only
    /// neighbourhood `M*` meets every nonempty open.
    pub fn star_in_closure(&self, family: &[Open]) -> bool {
        !family.is_empty() && family.iter().all(|u| Open::Whole.intersects(u))
    }
}

/// `M* = M ∪ {*}` over a single chart of `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpace {
    pub base: Chart,
    pub topology: TopologyModel,
}

impl SingularSpace {
    pub fn new(base: Chart) -> SingularSpace {
        let topology = TopologyModel::new(base.dim());
        SingularSpace { base, topology }
    }

    /// The element `r·1` of the structure algebra `C∞(M*) = ℝ1`.
    pub fn constant(&self, r: BigRational) -> Expr {
        Expr::num(r)
    }

    /// Only constants extend continuously to `*`.
    pub fn prolong(&self, f: &Expr) -> Result<Prolongation, SingularError> {
        Ok(match is_constant(f, &self.base)? {
            Constancy::ConstantExactly { value } => Prolongation::Prolongs {
                value,
                certified: true,
            },
            Constancy::NumericallyConstant { value, .. } => Prolongation::Prolongs {
                value,
                certified: false,
            },
            Constancy::NotConstant { witness, values } => {
                Prolongation::DoesNotProlong { witness, values }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    /// `ρ = 0`.
    ZeroMap,
    /// `ρ(r1) = r`.
    UnitPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub class: PointClass,
    pub report: IdempotentReport,
}

/// Multiplicative points over `M*` are determined by the idempotent `ρ(1)`;
/// the nilpotence chain forces its soul to vanish.
pub fn classify_multiplicative_point(
    rho_one: &GrassmannElement,
) -> Result<Classification, SingularError> {
    let report = rho_one.verify_idempotent_is_body();
    if !report.idempotent {
        return Err(SingularError::NotIdempotent(rho_one.to_string()));
    }
    let class = match report.case {
        Some(BodyCase::Zero) => PointClass::ZeroMap,
        Some(BodyCase::One) => PointClass::UnitPoint,
        _ => unreachable!("an idempotent has body 0 or 1"),
    };
    Ok(Classification { class, report })
}

/// A stage point over `M*`, i.e. a map `ℝ1 → Λ_n` fixed by `λ = ρ(1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarPoint {
    pub category: Category,
    pub lambda: GrassmannElement,
}

impl StarPoint {
    /// In the smooth category `λ` must be idempotent.
    pub fn new(category: Category, lambda: GrassmannElement) -> Result<StarPoint, SingularError> {
        if category == Category::Smooth {
            classify_multiplicative_point(&lambda)?;
        }
        Ok(StarPoint { category, lambda })
    }

    /// `ρ(r1) = rλ`.
    pub fn apply(&self, r: &BigRational) -> GrassmannElement {
        self.lambda.scale(r)
    }

    /// `ρ(f)` for a function on `M*`, which must be an exact constant.
    pub fn apply_function(
        &self,
        space: &SingularSpace,
        f: &Expr,
    ) -> Result<GrassmannElement, SingularError> {
        match space.prolong(f)? {
            Prolongation::Prolongs {
                value: Scalar::Exact(r),
                ..
            } => Ok(self.apply(&r)),
            _ => Err(SingularError::NotConstant(f.to_string())),
        }
    }
}

/// `λ ↦ ρ_λ` with `ρ_λ(r1) = rλ`.
pub fn linear_point_from_lambda(lambda: &GrassmannElement) -> StarPoint {
    StarPoint {
        category: Category::Linear,
        lambda: lambda.clone(),
    }
}

pub fn point_to_lambda(rho: &StarPoint) -> GrassmannElement {
    rho.apply(&BigRational::one())
}

/// `soul(ρ(1))`: zero in the smooth category, `soul(λ)` in the linear one.
pub fn soul_survival(rho: &StarPoint) -> GrassmannElement {
    point_to_lambda(rho).soul()
}

/// Every element of `Λ_n` with coefficients in `{-1, 0, 1}`.
pub fn ternary_elements(n: u8) -> impl Iterator<Item = GrassmannElement> {
    let blades = 1usize << n;
    let total = 3usize.pow(blades as u32);
    (0..total).map(move |mut code| {
        let mut terms = Vec::new();
        for mask in 0..blades {
            let digit = code % 3;
            code /= 3;
            if digit != 0 {
                let idx: Vec<usize> = (0..n as usize)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| i + 1)
                    .collect();
                terms.push((
                    idx,
                    BigRational::from_integer(if digit == 1 { 1.into() } else { (-1).into() }),
                ));
            }
        }
        GrassmannElement::from_terms(n, terms).expect("valid blades")
    })
}

/// Idempotents among the `{-1, 0, 1}` elements of `Λ_n`.
pub fn ternary_idempotents(n: u8) -> Vec<GrassmannElement> {
    ternary_elements(n).filter(|x| &(x * x) == x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};
    use crate::symalg::parse_expr;

    fn g(n: u8, terms: &[(&[usize], i64)]) -> GrassmannElement {
        GrassmannElement::from_terms(n, terms.iter().map(|(b, c)| (b.to_vec(), int(*c)))).unwrap()
    }

    fn space() -> SingularSpace {
        SingularSpace::new(Chart::new(&["x", "y"]).unwrap())
    }

    #[test]
    fn only_constants_prolong() {
        let s = space();
        assert_eq!(
            s.prolong(&Expr::int(5)).unwrap(),
            Prolongation::Prolongs {
                value: Scalar::from(5),
                certified: true
            }
        );
        assert!(!s.prolong(&parse_expr("x").unwrap()).unwrap().prolongs());
        match s
            .prolong(&parse_expr("sin(x)^2 + cos(x)^2").unwrap())
            .unwrap()
        {
            Prolongation::Prolongs { value, .. } => {
                assert!(value.approx_eq(&Scalar::from(1), 1e-12))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn star_has_one_neighbourhood() {
        let t = TopologyModel::new(2);
        let nb = t.neighborhoods(&SpacePoint::Star).unwrap();
        assert_eq!(nb.basis, vec![Open::Whole]);
        let p = SpacePoint::base(vec![int(0), int(0)]);
        let q = SpacePoint::base(vec![int(1), ratio(1, 3)]);
        match t.separate(&p, &q).unwrap() {
            Separation::Separated { u, v } => {
                assert!(u.contains(&p) && v.contains(&q) && !u.intersects(&v));
            }
            other => panic!("{other:?}"),
        }
        let pn = t.neighborhoods(&p).unwrap();
        assert!(pn.basis.iter().all(|u| u.contains(&p)));
        assert!(
            matches!(t.separate(&p, &SpacePoint::Star).unwrap(), Separation::Inseparable { checked } if checked == pn.basis.len())
        );
        assert!(t.star_in_closure(&pn.basis[..1]));
    }

    #[test]
    fn multiplicative_points_collapse() {
        assert_eq!(
            classify_multiplicative_point(&g(2, &[])).unwrap().class,
            PointClass::ZeroMap
        );
        let unit = classify_multiplicative_point(&g(2, &[(&[], 1)])).unwrap();
        assert_eq!(unit.class, PointClass::UnitPoint);
        assert!(unit.report.soul_vanishes);
        assert!(matches!(
            classify_multiplicative_point(&g(2, &[(&[], 1), (&[1], 1)])),
            Err(SingularError::NotIdempotent(_))
        ));
        assert!(StarPoint::new(Category::Smooth, g(2, &[(&[], 2)])).is_err());
    }

    #[test]
    fn linear_points_are_lambda() {
        let l = g(2, &[(&[1, 2], 1)]);
        let rho = linear_point_from_lambda(&l);
        assert_eq!(rho.apply(&int(3)), g(2, &[(&[1, 2], 3)]));
        assert_eq!(point_to_lambda(&rho), l);
        assert!(point_to_lambda(&linear_point_from_lambda(&g(2, &[]))).is_zero());
        let f = parse_expr("3").unwrap();
        assert_eq!(
            rho.apply_function(&space(), &f).unwrap(),
            g(2, &[(&[1, 2], 3)])
        );
        assert!(rho
            .apply_function(&space(), &parse_expr("x").unwrap())
            .is_err());
    }

    #[test]
    fn soul_survives_only_linearly() {
        let unit = StarPoint::new(Category::Smooth, g(3, &[(&[], 1)])).unwrap();
        assert!(soul_survival(&unit).is_zero());
        let lam = g(3, &[(&[], 2), (&[1], 1), (&[2, 3], 1)]);
        assert_eq!(
            soul_survival(&linear_point_from_lambda(&lam)),
            g(3, &[(&[1], 1), (&[2, 3], 1)])
        );
        assert!(soul_survival(&linear_point_from_lambda(&g(3, &[(&[], 7)]))).is_zero());
    }

    #[test]
    fn small_idempotents_are_zero_or_one() {
        let found = ternary_idempotents(2);
        assert_eq!(found, vec![g(2, &[]), g(2, &[(&[], 1)])]);
    }
}
