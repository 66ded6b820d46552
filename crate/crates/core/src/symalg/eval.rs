use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use thiserror::Error;

use super::expr::{Expr, Func};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("`{subexpr}` is undefined here: {reason}")]
    Domain { subexpr: String, reason: String },
}

/// Values for the free symbols of an expression (coordinates and parameters).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    values: BTreeMap<Arc<str>, Scalar>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, v: impl Into<Scalar>) {
        self.values.insert(Arc::from(name), v.into());
    }

    pub fn with(mut self, name: &str, v: impl Into<Scalar>) -> Self {
        self.set(name, v);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Scalar> {
        self.values.get(name)
    }

    pub fn extend(&mut self, other: &Bindings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Scalar)> {
        self.values.iter().map(|(k, v)| (&**k, v))
    }
}

/// Value of `e` under `b`; exact whenever only rational operations are met.
/// The symbol `pi` is always available.
pub fn evaluate(e: &Expr, b: &Bindings) -> Result<Scalar, EvalError> {
    match e {
        Expr::Num(r) => Ok(Scalar::Exact(r.clone())),
        Expr::Sym(s) => match b.get(s) {
            Some(v) => Ok(v.clone()),
            None if &**s == "pi" => Ok(Scalar::Float(std::f64::consts::PI)),
            None => Err(EvalError::Unbound(s.to_string())),
        },
        Expr::Add(ts) => {
            let mut acc = Scalar::Exact(Zero::zero());
            for t in ts {
                acc = acc + evaluate(t, b)?;
            }
            Ok(acc)
        }
        Expr::Mul(fs) => {
            let mut acc = Scalar::from(1);
            for f in fs {
                acc = acc * evaluate(f, b)?;
            }
            Ok(acc)
        }
        Expr::Pow(base, k) => {
            let v = evaluate(base, b)?;
            if *k < 0 && v.is_zero_within(0.0) {
                return Err(domain(e, "division by zero"));
            }
            let out = v.powi(*k).ok_or_else(|| domain(e, "division by zero"))?;
            check_finite(e, out)
        }
        Expr::Apply(f, arg) => {
            let v = evaluate(arg, b)?;
            if let Some(exact) = exact_apply(*f, &v) {
                return Ok(exact);
            }
            let x = v.to_f64();
            let out = match f {
                Func::Exp => x.exp(),
                Func::Ln => {
                    if x <= 0.0 {
                        return Err(domain(e, "logarithm of a non-positive value"));
                    }
                    x.ln()
                }
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => {
                    if x.cos().abs() < 1e-300 {
                        return Err(domain(e, "tangent pole"));
                    }
                    x.tan()
                }
                Func::Sinh => x.sinh(),
                Func::Cosh => x.cosh(),
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(domain(e, "square root of a negative value"));
                    }
                    x.sqrt()
                }
            };
            check_finite(e, Scalar::Float(out))
        }
    }
}

/// f64 shortcut; same domain checks as [`evaluate`].
pub fn evaluate_f64(e: &Expr, b: &Bindings) -> Result<f64, EvalError> {
    evaluate(e, b).map(|s| s.to_f64())
}

fn exact_apply(f: Func, v: &Scalar) -> Option<Scalar> {
    let r = v.as_exact()?;
    if r.is_zero() {
        return match f {
            Func::Sin | Func::Tan | Func::Sinh | Func::Sqrt => Some(Scalar::from(0)),
            Func::Cos | Func::Cosh | Func::Exp => Some(Scalar::from(1)),
            Func::Ln => None,
        };
    }
    match f {
        Func::Ln if *r == num_traits::One::one() => Some(Scalar::from(0)),
        Func::Sqrt if r.is_positive() => {
            let simplified = Expr::sqrt(Expr::Num(r.clone()));
            simplified.as_num().map(|q| Scalar::Exact(q.clone()))
        }
        _ => None,
    }
}

fn check_finite(e: &Expr, v: Scalar) -> Result<Scalar, EvalError> {
    match &v {
        Scalar::Float(x) if !x.is_finite() => Err(domain(e, "non-finite value")),
        _ => Ok(v),
    }
}

fn domain(e: &Expr, reason: &str) -> EvalError {
    let mut text = e.to_string();
    if text.len() > 120 {
        text.truncate(117);
        text.push_str("...");
    }
    EvalError::Domain {
        subexpr: text,
        reason: reason.to_string(),
    }
}

/// Relative difference helper used by numeric oracles.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    #[test]
    fn exact_polynomial_evaluation() {
        let e = Expr::pow(Expr::sym("x"), 2) + Expr::sym("y");
        let b = Bindings::new().with("x", int(2)).with("y", int(3));
        assert_eq!(evaluate(&e, &b).unwrap(), Scalar::from(7));
        assert!(evaluate(&e, &b).unwrap().is_exact());
        assert_eq!(
            evaluate(&Expr::one(), &Bindings::new()).unwrap(),
            Scalar::from(1)
        );
    }

    #[test]
    fn transcendental_evaluation() {
        let x = Expr::sym("x");
        let e = Expr::add(vec![
            Expr::pow(Expr::sin(x.clone()), 3),
            Expr::mul(vec![
                Expr::sin(x.clone()),
                Expr::pow(Expr::cos(x.clone()), 2),
            ]),
        ]);
        let v = evaluate_f64(&e, &Bindings::new().with("x", 0.7)).unwrap();
        assert!((v - 0.7f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = Expr::ln(Expr::sym("x"));
        let err = evaluate(&e, &Bindings::new().with("x", int(-1))).unwrap_err();
        match err {
            EvalError::Domain { subexpr, .. } => assert_eq!(subexpr, "ln(x)"),
            other => panic!("unexpected {other:?}"),
        }
        let inv = Expr::pow(Expr::sym("x"), -1);
        assert!(evaluate(&inv, &Bindings::new().with("x", int(0))).is_err());
        assert!(matches!(
            evaluate(&Expr::sym("q"), &Bindings::new()),
            Err(EvalError::Unbound(_))
        ));
    }
}
