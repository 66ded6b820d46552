//! Rational-function normal form used to decide whether an expression is
//! identically zero.
//!
//! Symbols and elementary-function applications are treated as independent
//! atoms, except for the relations `sin² + cos² = 1`, `cosh² - sinh² = 1`,
//! `tan = sin/cos` and `sqrt(u)² = u`, which are applied to the numerator.
//! The test is sound (a `true` answer is a proof) but not complete.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::expr::{Expr, Func};

type Monomial = BTreeMap<Expr, u32>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
struct Poly(BTreeMap<Monomial, BigRational>);

impl Poly {
    fn constant(c: BigRational) -> Poly {
        let mut p = Poly::default();
        if !c.is_zero() {
            p.0.insert(Monomial::new(), c);
        }
        p
    }

    fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    fn atom(e: Expr) -> Poly {
        let mut m = Monomial::new();
        m.insert(e, 1);
        let mut p = Poly::default();
        p.0.insert(m, BigRational::one());
        p
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.0.entry(m) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.0 {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                let mut m = ma.clone();
                for (atom, e) in mb {
                    *m.entry(atom.clone()).or_insert(0) += e;
                }
                out.add_term(m, ca * cb);
            }
        }
        out
    }

    fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    fn scale(&self, c: &BigRational) -> Poly {
        let mut out = Poly::default();
        for (m, x) in &self.0 {
            out.add_term(m.clone(), x * c);
        }
        out
    }
}

#[derive(Clone, Debug)]
struct RatFun {
    num: Poly,
    den: BTreeMap<Poly, u32>,
}

impl RatFun {
    fn poly(p: Poly) -> RatFun {
        RatFun {
            num: p,
            den: BTreeMap::new(),
        }
    }

    fn mul(&self, other: &RatFun) -> RatFun {
        let mut den = self.den.clone();
        for (f, e) in &other.den {
            *den.entry(f.clone()).or_insert(0) += e;
        }
        RatFun {
            num: self.num.mul(&other.num),
            den,
        }
    }

    fn add(&self, other: &RatFun) -> RatFun {
        let mut lcm = self.den.clone();
        for (f, e) in &other.den {
            let entry = lcm.entry(f.clone()).or_insert(0);
            *entry = (*entry).max(*e);
        }
        let lift = |r: &RatFun| -> Poly {
            let mut p = r.num.clone();
            for (f, e) in &lcm {
                let have = r.den.get(f).copied().unwrap_or(0);
                if *e > have {
                    p = p.mul(&f.pow(e - have));
                }
            }
            p
        };
        RatFun {
            num: lift(self).add(&lift(other)),
            den: lcm,
        }
    }

    fn pow(&self, k: u32) -> RatFun {
        RatFun {
            num: self.num.pow(k),
            den: self.den.iter().map(|(f, e)| (f.clone(), e * k)).collect(),
        }
    }

    fn invert(&self) -> Option<RatFun> {
        let (first_m, c) = self.num.0.iter().next()?;
        let inv_c = c.recip();
        let mut num = Poly::constant(inv_c.clone());
        for (f, e) in &self.den {
            num = num.mul(&f.pow(*e));
        }
        let mut den = BTreeMap::new();
        if self.num.0.len() == 1 {
            for (atom, e) in first_m {
                *den.entry(Poly::atom(atom.clone())).or_insert(0) += e;
            }
        } else {
            den.insert(self.num.scale(&inv_c), 1);
        }
        Some(RatFun { num, den })
    }
}

fn to_ratfun(e: &Expr) -> Option<RatFun> {
    match e {
        Expr::Num(r) => Some(RatFun::poly(Poly::constant(r.clone()))),
        Expr::Sym(_) => Some(RatFun::poly(Poly::atom(e.clone()))),
        Expr::Apply(Func::Tan, u) => to_ratfun(&Expr::mul(vec![
            Expr::sin((**u).clone()),
            Expr::pow(Expr::cos((**u).clone()), -1),
        ])),
        Expr::Apply(f, u) => Some(RatFun::poly(Poly::atom(Expr::apply(*f, u.expand())))),
        Expr::Add(ts) => {
            let mut acc = RatFun::poly(Poly::default());
            for t in ts {
                acc = acc.add(&to_ratfun(t)?);
            }
            Some(acc)
        }
        Expr::Mul(fs) => {
            let mut acc = RatFun::poly(Poly::one());
            for f in fs {
                acc = acc.mul(&to_ratfun(f)?);
            }
            Some(acc)
        }
        Expr::Pow(b, k) => {
            let base = to_ratfun(b)?;
            if *k >= 0 {
                Some(base.pow(*k as u32))
            } else {
                Some(base.invert()?.pow(k.unsigned_abs() as u32))
            }
        }
    }
}

/// One rewrite of a monomial using the algebraic relations, if any applies.
fn rewrite_monomial(m: &Monomial) -> Option<Poly> {
    for (atom, e) in m {
        if *e < 2 {
            continue;
        }
        let Expr::Apply(f, u) = atom else { continue };
        let replacement = match f {
            // cos² = 1 - sin²
            Func::Cos => {
                let s2 = Poly::atom(Expr::sin((**u).clone())).pow(2);
                Poly::one().add(&s2.scale(&-BigRational::one()))
            }
            // cosh² = 1 + sinh²
            Func::Cosh => {
                Poly::one().add(&Poly::atom(Expr::apply(Func::Sinh, (**u).clone())).pow(2))
            }
            Func::Sqrt => {
                let inner = to_ratfun(u)?;
                if !inner.den.is_empty() {
                    continue;
                }
                inner.num
            }
            _ => continue,
        };
        let mut rest = m.clone();
        *rest.get_mut(atom).expect("present") -= 2;
        rest.retain(|_, e| *e > 0);
        let mut rest_poly = Poly::default();
        rest_poly.0.insert(rest, BigRational::one());
        return Some(rest_poly.mul(&replacement));
    }
    None
}

fn reduce(p: Poly) -> Poly {
    let mut done = Poly::default();
    let mut work: Vec<(Monomial, BigRational)> = p.0.into_iter().collect();
    while let Some((m, c)) = work.pop() {
        match rewrite_monomial(&m) {
            Some(r) => work.extend(r.0.into_iter().map(|(m2, c2)| (m2, c2 * &c))),
            None => done.add_term(m, c),
        }
    }
    done
}

/// Sound zero test: `true` only if `e` vanishes identically wherever it is defined.
pub fn is_identically_zero(e: &Expr) -> bool {
    if e.is_zero() {
        return true;
    }
    match to_ratfun(e) {
        Some(rf) => reduce(rf.num).is_zero(),
        None => false,
    }
}

/// `a - b` is identically zero.
pub fn equivalent(a: &Expr, b: &Expr) -> bool {
    a == b || is_identically_zero(&Expr::sub(a.clone(), b.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symalg::parse::parse_expr;

    fn zero(src: &str) -> bool {
        is_identically_zero(&parse_expr(src).unwrap())
    }

    #[test]
    fn rational_identities() {
        assert!(zero("x*(1+y) - x - x*y"));
        assert!(zero("1/(1 - 2*GM/r) - r/(r - 2*GM)"));
        assert!(zero("1/x + 1/y - (x+y)/(x*y)"));
        assert!(zero("(x^2 - 1)/(x - 1) - x - 1"));
        assert!(!zero("1/x + 1/y"));
        assert!(!zero("x - y"));
    }

    #[test]
    fn trig_identities() {
        assert!(zero("cos(t)^2/sin(t)^2 + 1 - 1/sin(t)^2"));
        assert!(zero("tan(x)*cos(x) - sin(x)"));
        assert!(zero("cosh(u)^4 - sinh(u)^4 - cosh(u)^2 - sinh(u)^2"));
        assert!(zero("sqrt(x)*sqrt(x)*sqrt(x) - x*sqrt(x)"));
        assert!(!zero("sin(x)^2 - cos(x)^2"));
    }
}
