//! Expression trees kept in canonical form by construction.
//!
//! Every public constructor returns a canonical expression:
//! * sums and products are flattened, sorted, and like terms/bases merged;
//! * rational constants are folded, and a numeric factor leads any product;
//! * a sum is monic: its leading term (in monomial order) has coefficient 1,
//!   any other content is pulled out as `c * (sum)`;
//! * integer powers of powers and of products are distributed;
//! * `sin(u)^2 + cos(u)^2` collapses to 1, `exp(ln u)` and `ln(exp u)` to `u`.
//!
//! Products are *not* distributed over sums here; see [`Expr::expand`].

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::scalar::int;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Exp,
        Func::Ln,
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        match s {
            "log" => Some(Func::Ln),
            _ => Func::ALL.into_iter().find(|f| f.name() == s),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Num(BigRational),
    Sym(Arc<str>),
    Pow(Box<Expr>, i64),
    Apply(Func, Box<Expr>),
    Mul(Vec<Expr>),
    Add(Vec<Expr>),
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Num(BigRational::zero())
    }

    pub fn one() -> Expr {
        Expr::Num(BigRational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Num(int(n))
    }

    pub fn num(r: BigRational) -> Expr {
        Expr::Num(r)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::Sym(Arc::from(name))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Num(r) if r.is_one())
    }

    pub fn as_num(&self) -> Option<&BigRational> {
        match self {
            Expr::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut acc: BTreeMap<Expr, BigRational> = BTreeMap::new();
        for t in terms {
            accumulate_term(&mut acc, t, &BigRational::one());
        }
        build_sum(acc)
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut coeff = BigRational::one();
        let mut bases: BTreeMap<Expr, i64> = BTreeMap::new();
        for f in factors {
            absorb_factor(&mut coeff, &mut bases, f, 1);
            if coeff.is_zero() {
                return Expr::zero();
            }
        }
        build_product(coeff, bases)
    }

    pub fn pow(base: Expr, e: i64) -> Expr {
        if e == 0 {
            return Expr::one();
        }
        if e == 1 {
            return base;
        }
        let mut coeff = BigRational::one();
        let mut bases = BTreeMap::new();
        absorb_factor(&mut coeff, &mut bases, base, e);
        build_product(coeff, bases)
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::mul(vec![Expr::int(-1), e])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(vec![a, Expr::neg(b)])
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::mul(vec![a, Expr::pow(b, -1)])
    }

    pub fn scale(c: BigRational, e: Expr) -> Expr {
        Expr::mul(vec![Expr::Num(c), e])
    }

    pub fn apply(f: Func, arg: Expr) -> Expr {
        if let Expr::Num(r) = &arg {
            if r.is_zero() {
                match f {
                    Func::Sin | Func::Tan | Func::Sinh | Func::Sqrt => return Expr::zero(),
                    Func::Cos | Func::Cosh | Func::Exp => return Expr::one(),
                    Func::Ln => {}
                }
            }
            if r.is_one() && matches!(f, Func::Ln) {
                return Expr::zero();
            }
            if f == Func::Sqrt && r.is_positive() {
                if let Some(root) = rational_sqrt(r) {
                    return Expr::Num(root);
                }
            }
        }
        match (f, &arg) {
            (Func::Exp, Expr::Apply(Func::Ln, inner))
            | (Func::Ln, Expr::Apply(Func::Exp, inner)) => {
                return (**inner).clone();
            }
            _ => {}
        }
        Expr::Apply(f, Box::new(arg))
    }

    pub fn exp(e: Expr) -> Expr {
        Expr::apply(Func::Exp, e)
    }
    pub fn ln(e: Expr) -> Expr {
        Expr::apply(Func::Ln, e)
    }
    pub fn sin(e: Expr) -> Expr {
        Expr::apply(Func::Sin, e)
    }
    pub fn cos(e: Expr) -> Expr {
        Expr::apply(Func::Cos, e)
    }
    pub fn sqrt(e: Expr) -> Expr {
        Expr::apply(Func::Sqrt, e)
    }

    /// Rebuild bottom-up through the canonical constructors.
    pub fn canonicalize(&self) -> Expr {
        match self {
            Expr::Num(_) | Expr::Sym(_) => self.clone(),
            Expr::Pow(b, e) => Expr::pow(b.canonicalize(), *e),
            Expr::Apply(f, a) => Expr::apply(*f, a.canonicalize()),
            Expr::Mul(fs) => Expr::mul(fs.iter().map(Expr::canonicalize).collect()),
            Expr::Add(ts) => Expr::add(ts.iter().map(Expr::canonicalize).collect()),
        }
    }

    /// Distribute products and positive integer powers over sums. Negative
    /// powers of sums stay as atoms; function arguments are expanded too.
    pub fn expand(&self) -> Expr {
        match self {
            Expr::Num(_) | Expr::Sym(_) => self.clone(),
            Expr::Apply(f, a) => Expr::apply(*f, a.expand()),
            Expr::Add(ts) => Expr::add(ts.iter().map(Expr::expand).collect()),
            Expr::Pow(b, e) => {
                let base = b.expand();
                if *e > 0 {
                    if let Some(terms) = sum_terms(&base) {
                        let mut acc = vec![Expr::one()];
                        for _ in 0..*e {
                            acc = distribute(&acc, &terms);
                        }
                        return Expr::add(acc);
                    }
                }
                Expr::pow(base, *e)
            }
            Expr::Mul(fs) => {
                let mut acc = vec![Expr::one()];
                for f in fs {
                    let f = f.expand();
                    match sum_terms(&f) {
                        Some(terms) => acc = distribute(&acc, &terms),
                        None => {
                            acc = acc
                                .into_iter()
                                .map(|a| Expr::mul(vec![a, f.clone()]))
                                .collect()
                        }
                    }
                }
                Expr::add(acc)
            }
        }
    }

    /// True when `name` occurs anywhere in the tree.
    pub fn contains_sym(&self, name: &str) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Sym(s) => &**s == name,
            Expr::Pow(b, _) => b.contains_sym(name),
            Expr::Apply(_, a) => a.contains_sym(name),
            Expr::Mul(xs) | Expr::Add(xs) => xs.iter().any(|x| x.contains_sym(name)),
        }
    }

    pub fn symbols(&self) -> Vec<Arc<str>> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_symbols(&mut out);
        out.into_iter().collect()
    }

    fn collect_symbols(&self, out: &mut std::collections::BTreeSet<Arc<str>>) {
        match self {
            Expr::Num(_) => {}
            Expr::Sym(s) => {
                out.insert(s.clone());
            }
            Expr::Pow(b, _) => b.collect_symbols(out),
            Expr::Apply(_, a) => a.collect_symbols(out),
            Expr::Mul(xs) | Expr::Add(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
        }
    }

    /// Simultaneous substitution of symbols, re-canonicalized.
    pub fn substitute(&self, map: &BTreeMap<Arc<str>, Expr>) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Sym(s) => map.get(s).cloned().unwrap_or_else(|| self.clone()),
            Expr::Pow(b, e) => Expr::pow(b.substitute(map), *e),
            Expr::Apply(f, a) => Expr::apply(*f, a.substitute(map)),
            Expr::Mul(fs) => Expr::mul(fs.iter().map(|f| f.substitute(map)).collect()),
            Expr::Add(ts) => Expr::add(ts.iter().map(|t| t.substitute(map)).collect()),
        }
    }

    /// Number of nodes; a rough size measure.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Sym(_) => 1,
            Expr::Pow(b, _) => 1 + b.size(),
            Expr::Apply(_, a) => 1 + a.size(),
            Expr::Mul(xs) | Expr::Add(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
        }
    }

    /// Split into numeric coefficient and the remaining monomial.
    pub fn split_coeff(&self) -> (BigRational, Expr) {
        match self {
            Expr::Num(r) => (r.clone(), Expr::one()),
            Expr::Mul(fs) => match fs.first() {
                Some(Expr::Num(c)) => {
                    let rest = &fs[1..];
                    let rest = if rest.len() == 1 {
                        rest[0].clone()
                    } else {
                        Expr::Mul(rest.to_vec())
                    };
                    (c.clone(), rest)
                }
                _ => (BigRational::one(), self.clone()),
            },
            _ => (BigRational::one(), self.clone()),
        }
    }
}

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| BigRational::new(n, d))
}

/// Terms of a sum, including a scaled sum `c * (t1 + t2 + …)`.
fn sum_terms(e: &Expr) -> Option<Vec<Expr>> {
    match e {
        Expr::Add(ts) => Some(ts.clone()),
        Expr::Mul(fs) if fs.len() == 2 => match (&fs[0], &fs[1]) {
            (Expr::Num(c), Expr::Add(ts)) => Some(
                ts.iter()
                    .map(|t| Expr::scale(c.clone(), t.clone()))
                    .collect(),
            ),
            _ => None,
        },
        _ => None,
    }
}

fn distribute(acc: &[Expr], terms: &[Expr]) -> Vec<Expr> {
    let mut out = Vec::with_capacity(acc.len() * terms.len());
    for a in acc {
        for t in terms {
            out.push(Expr::mul(vec![a.clone(), t.clone()]));
        }
    }
    out
}

fn accumulate_term(acc: &mut BTreeMap<Expr, BigRational>, t: Expr, scale: &BigRational) {
    match t {
        Expr::Add(ts) => {
            for t in ts {
                accumulate_term(acc, t, scale);
            }
        }
        Expr::Mul(ref fs)
            if fs.len() == 2 && matches!((&fs[0], &fs[1]), (Expr::Num(_), Expr::Add(_))) =>
        {
            if let (Expr::Num(c), Expr::Add(ts)) = (&fs[0], &fs[1]) {
                let s = scale * c;
                for t in ts {
                    accumulate_term(acc, t.clone(), &s);
                }
            }
        }
        other => {
            let (c, m) = other.split_coeff();
            if c.is_zero() {
                return;
            }
            let entry = acc.entry(m).or_insert_with(BigRational::zero);
            *entry += c * scale;
        }
    }
}

fn monomial_factors(m: &Expr) -> BTreeMap<Expr, i64> {
    let mut coeff = BigRational::one();
    let mut bases = BTreeMap::new();
    absorb_factor(&mut coeff, &mut bases, m.clone(), 1);
    debug_assert!(coeff.is_one());
    bases
}

/// `c·R·sin(u)^2 + c·R·cos(u)^2 → c·R` (and the `cosh² - sinh² = 1` analogue).
fn apply_pythagorean(acc: &mut BTreeMap<Expr, BigRational>) {
    loop {
        let mut rewrite = None;
        'search: for (m, c) in acc.iter() {
            if c.is_zero() {
                continue;
            }
            let factors = monomial_factors(m);
            for (base, e) in &factors {
                let Expr::Apply(f, arg) = base else { continue };
                if *e < 2 {
                    continue;
                }
                let (partner_fn, partner_sign) = match f {
                    Func::Sin => (Func::Cos, 1),
                    Func::Cosh => (Func::Sinh, -1),
                    _ => continue,
                };
                let mut rest = factors.clone();
                *rest.get_mut(base).expect("present") -= 2;
                let partner = Expr::Apply(partner_fn, arg.clone());
                let mut partner_factors = rest.clone();
                *partner_factors.entry(partner).or_insert(0) += 2;
                let partner_m = build_product(BigRational::one(), partner_factors);
                let Some(pc) = acc.get(&partner_m) else {
                    continue;
                };
                let wanted = if partner_sign == 1 {
                    c.clone()
                } else {
                    -c.clone()
                };
                if *pc == wanted {
                    let r = build_product(BigRational::one(), rest);
                    rewrite = Some((m.clone(), partner_m, r, c.clone()));
                    break 'search;
                }
            }
        }
        let Some((m, partner, r, c)) = rewrite else {
            return;
        };
        acc.remove(&m);
        acc.remove(&partner);
        let (rc, rm) = r.split_coeff();
        *acc.entry(rm).or_insert_with(BigRational::zero) += c * rc;
    }
}

fn build_sum(mut acc: BTreeMap<Expr, BigRational>) -> Expr {
    acc.retain(|_, c| !c.is_zero());
    apply_pythagorean(&mut acc);
    acc.retain(|_, c| !c.is_zero());
    let mut iter = acc.into_iter();
    let Some((m0, c0)) = iter.next() else {
        return Expr::zero();
    };
    let rest: Vec<(Expr, BigRational)> = iter.collect();
    if rest.is_empty() {
        return Expr::mul(vec![Expr::Num(c0), m0]);
    }
    let mut terms = Vec::with_capacity(rest.len() + 1);
    terms.push(m0);
    for (m, c) in rest {
        let c = c / &c0;
        terms.push(if c.is_one() {
            m
        } else {
            Expr::mul(vec![Expr::Num(c), m])
        });
    }
    let sum = Expr::Add(terms);
    if c0.is_one() {
        sum
    } else {
        Expr::Mul(vec![Expr::Num(c0), sum])
    }
}

fn absorb_factor(coeff: &mut BigRational, bases: &mut BTreeMap<Expr, i64>, f: Expr, e: i64) {
    match f {
        Expr::Num(r) => {
            if r.is_zero() && e < 0 {
                // Division by an exact zero: keep it visible for evaluation to report.
                *bases.entry(Expr::Num(r)).or_insert(0) += e;
            } else {
                *coeff *= pow_rational(&r, e);
            }
        }
        Expr::Mul(fs) => {
            for f in fs {
                absorb_factor(coeff, bases, f, e);
            }
        }
        Expr::Pow(b, k) => absorb_factor(coeff, bases, *b, k * e),
        Expr::Apply(Func::Sqrt, arg) if e.abs() >= 2 => {
            // sqrt(u)^(2k+r) = u^k sqrt(u)^r, r in {0, 1}
            let k = e.div_euclid(2);
            let r = e.rem_euclid(2);
            absorb_factor(coeff, bases, *arg.clone(), k);
            if r == 1 {
                *bases.entry(Expr::Apply(Func::Sqrt, arg)).or_insert(0) += 1;
            }
        }
        other => {
            *bases.entry(other).or_insert(0) += e;
        }
    }
}

fn pow_rational(r: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(r.clone(), e as usize)
    } else {
        num_traits::pow(r.recip(), e.unsigned_abs() as usize)
    }
}

fn build_product(mut coeff: BigRational, mut bases: BTreeMap<Expr, i64>) -> Expr {
    if coeff.is_zero() {
        return Expr::zero();
    }
    // Merging can expose new sqrt simplifications (sqrt(u)·sqrt(u) = u).
    loop {
        let key = bases.iter().find_map(|(b, e)| {
            (matches!(b, Expr::Apply(Func::Sqrt, _)) && e.abs() >= 2).then(|| b.clone())
        });
        let Some(key) = key else { break };
        let e = bases.remove(&key).unwrap_or(0);
        absorb_factor(&mut coeff, &mut bases, key, e);
    }
    bases.retain(|_, e| *e != 0);
    let mut factors: Vec<Expr> = Vec::with_capacity(bases.len() + 1);
    for (b, e) in bases {
        factors.push(if e == 1 { b } else { Expr::Pow(Box::new(b), e) });
    }
    if factors.is_empty() {
        return Expr::Num(coeff);
    }
    if !coeff.is_one() {
        factors.insert(0, Expr::Num(coeff));
    }
    if factors.len() == 1 {
        factors.pop().expect("one factor")
    } else {
        Expr::Mul(factors)
    }
}

// ---------------------------------------------------------------------------
// Printing: infix form that the parser reads back.

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(_) => 1,
            Expr::Mul(_) => 2,
            Expr::Num(r) if !r.is_integer() || r.is_negative() => 2,
            Expr::Pow(..) => 3,
            _ => 4,
        }
    }

    fn fmt_wrapped(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(r) => write!(f, "{}", fmt_rational(r)),
            Expr::Sym(s) => write!(f, "{s}"),
            Expr::Pow(b, e) => {
                b.fmt_wrapped(f, 4)?;
                if *e < 0 {
                    write!(f, "^({e})")
                } else {
                    write!(f, "^{e}")
                }
            }
            Expr::Apply(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Mul(fs) => {
                let mut rest = &fs[..];
                if let Some(Expr::Num(c)) = fs.first() {
                    if *c == -BigRational::one() {
                        write!(f, "-")?;
                    } else if c.is_integer() {
                        write!(f, "{}*", fmt_rational(c))?;
                    } else {
                        write!(f, "({})*", fmt_rational(c))?;
                    }
                    rest = &fs[1..];
                }
                for (i, x) in rest.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    x.fmt_wrapped(f, 3)?;
                }
                Ok(())
            }
            Expr::Add(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    let text = t.to_string();
                    if i == 0 {
                        write!(f, "{text}")?;
                    } else if let Some(stripped) = text.strip_prefix('-') {
                        write!(f, " - {stripped}")?;
                    } else {
                        write!(f, " + {text}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<BigRational> for Expr {
    fn from(r: BigRational) -> Self {
        Expr::Num(r)
    }
}

/// Integer value of an exact numeric expression.
pub fn as_integer(e: &Expr) -> Option<i64> {
    match e {
        Expr::Num(r) if r.is_integer() => r.numer().to_i64(),
        _ => None,
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(vec![self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
