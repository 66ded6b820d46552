//! The Grassmann algebra on `n <= 16` anticommuting generators.
//!
//! Elements are sparse maps from [`Blade`]s to coefficients. Blades store
//! their generator set as a bitmask; generator `β_i` (1-based) lives in bit
//! `i - 1`. Products of blades are reordered into increasing index order and
//! pick up the sign of the permutation.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::scalar::{parse_rational, Scalar};

pub const MAX_GENERATORS: u8 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrassmannError {
    #[error("generator count mismatch: {left} vs {right}")]
    Dimension { left: u8, right: u8 },
    #[error("generator index {index} outside 1..={n}")]
    GeneratorIndex { index: usize, n: u8 },
    #[error("too many generators: {0} (at most 16)")]
    TooManyGenerators(usize),
    #[error("element has non-zero body {0}, so it is not nilpotent")]
    NotNilpotent(String),
    #[error("invalid Grassmann element: {0}")]
    Parse(String),
}

/// A product `β_{i1} … β_{ik}` with `i1 < … < ik`; the empty blade is the unit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Blade(u16);

impl Blade {
    pub const UNIT: Blade = Blade(0);

    pub fn from_mask(mask: u16) -> Self {
        Blade(mask)
    }

    pub fn generator(i: usize) -> Self {
        debug_assert!((1..=16).contains(&i));
        Blade(1 << (i - 1))
    }

    /// Build a blade from generator indices; the indices must be distinct.
    pub fn from_indices(indices: &[usize], n: u8) -> Result<Self, GrassmannError> {
        let mut mask = 0u16;
        for &i in indices {
            if i == 0 || i > n as usize {
                return Err(GrassmannError::GeneratorIndex { index: i, n });
            }
            let bit = 1u16 << (i - 1);
            if mask & bit != 0 {
                return Err(GrassmannError::Parse(format!(
                    "repeated generator {i} in blade"
                )));
            }
            mask |= bit;
        }
        Ok(Blade(mask))
    }

    pub fn mask(self) -> u16 {
        self.0
    }

    pub fn grade(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_unit(self) -> bool {
        self.0 == 0
    }

    pub fn is_even(self) -> bool {
        self.grade() % 2 == 0
    }

    pub fn indices(self) -> Vec<usize> {
        (0..16)
            .filter(|b| self.0 & (1 << b) != 0)
            .map(|b| b + 1)
            .collect()
    }

    /// Highest generator index used, 0 for the unit blade.
    pub fn max_index(self) -> u8 {
        16 - self.0.leading_zeros() as u8
    }

    /// Product of two blades as `(sign, blade)`. The sign is 0 when the
    /// generator sets overlap, otherwise `(-1)^s` with `s` the number of
    /// transpositions needed to restore increasing order.
    pub fn product(self, other: Blade) -> (i8, Blade) {
        if self.0 & other.0 != 0 {
            return (0, Blade::UNIT);
        }
        let mut swaps = 0u32;
        let mut rest = other.0;
        while rest != 0 {
            let i = rest.trailing_zeros();
            rest &= rest - 1;
            swaps += (self.0 >> (i + 1)).count_ones();
        }
        let sign = if swaps % 2 == 0 { 1 } else { -1 };
        (sign, Blade(self.0 | other.0))
    }
}

/// Grade first, then lexicographic order of the increasing index lists.
impl Ord for Blade {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.grade()
            .cmp(&other.grade())
            .then_with(|| other.0.reverse_bits().cmp(&self.0.reverse_bits()))
    }
}

impl PartialOrd for Blade {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Blade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Blade{:?}", self.indices())
    }
}

impl fmt::Display for Blade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unit() {
            return write!(f, "1");
        }
        for i in self.indices() {
            write!(f, "b{i}")?;
        }
        Ok(())
    }
}

/// `blade_product` with the generator-count check.
pub fn blade_product(a: Blade, na: u8, b: Blade, nb: u8) -> Result<(i8, Blade), GrassmannError> {
    if na != nb {
        return Err(GrassmannError::Dimension {
            left: na,
            right: nb,
        });
    }
    Ok(a.product(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grading {
    Even,
    Odd,
}

impl Grading {
    pub fn of(blade: Blade) -> Self {
        if blade.is_even() {
            Grading::Even
        } else {
            Grading::Odd
        }
    }
}

/// Coefficient ring of a Grassmann algebra.
pub trait Coefficient:
    Clone
    + fmt::Debug
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Option<Self>;
    fn from_rational(r: &BigRational) -> Self;
}

impl Coefficient for BigRational {
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => n.as_i64().map(crate::scalar::int),
            _ => None,
        }
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
}

impl Coefficient for Scalar {
    fn to_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Null)
    }
    fn from_json(v: &Value) -> Option<Self> {
        serde_json::from_value(v.clone()).ok()
    }
    fn from_rational(r: &BigRational) -> Self {
        Scalar::Exact(r.clone())
    }
}

/// Element of `Λ_n` with coefficients in `T`, stored sparsely.
#[derive(Clone, PartialEq)]
pub struct Multivector<T> {
    n: u8,
    terms: BTreeMap<Blade, T>,
}

/// Exact Grassmann numbers.
pub type GrassmannElement = Multivector<BigRational>;

impl<T: Coefficient> Multivector<T> {
    pub fn zero(n: u8) -> Self {
        assert!(n <= MAX_GENERATORS, "at most 16 generators");
        Multivector {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n: u8) -> Self {
        Self::scalar(n, T::one())
    }

    pub fn scalar(n: u8, c: T) -> Self {
        Self::from_blade(n, Blade::UNIT, c)
    }

    pub fn from_blade(n: u8, blade: Blade, c: T) -> Self {
        let mut x = Self::zero(n);
        x.add_term(blade, c);
        x
    }

    /// The generator `β_i`, `1 <= i <= n`.
    pub fn generator(n: u8, i: usize) -> Result<Self, GrassmannError> {
        if i == 0 || i > n as usize {
            return Err(GrassmannError::GeneratorIndex { index: i, n });
        }
        Ok(Self::from_blade(n, Blade::generator(i), T::one()))
    }

    pub fn from_terms<I>(n: u8, terms: I) -> Result<Self, GrassmannError>
    where
        I: IntoIterator<Item = (Vec<usize>, T)>,
    {
        if n > MAX_GENERATORS {
            return Err(GrassmannError::TooManyGenerators(n as usize));
        }
        let mut x = Self::zero(n);
        for (idx, c) in terms {
            x.add_term(Blade::from_indices(&idx, n)?, c);
        }
        Ok(x)
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (Blade, &T)> {
        self.terms.iter().map(|(b, c)| (*b, c))
    }

    pub fn coeff(&self, blade: Blade) -> T {
        self.terms.get(&blade).cloned().unwrap_or_else(T::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, blade: Blade, c: T) {
        debug_assert!(blade.max_index() <= self.n);
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&blade) {
            Some(old) => {
                let sum = old + c;
                if !sum.is_zero() {
                    self.terms.insert(blade, sum);
                }
            }
            None => {
                self.terms.insert(blade, c);
            }
        }
    }

    fn check_dim(&self, other: &Self) -> Result<(), GrassmannError> {
        if self.n != other.n {
            return Err(GrassmannError::Dimension {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.add_term(*b, c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.try_add(&other.neg_ref())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (sign, blade) = a.product(*b);
                match sign {
                    0 => {}
                    1 => out.add_term(blade, ca.clone() * cb.clone()),
                    _ => out.add_term(blade, -(ca.clone() * cb.clone())),
                }
            }
        }
        Ok(out)
    }

    pub fn neg_ref(&self) -> Self {
        Multivector {
            n: self.n,
            terms: self.terms.iter().map(|(b, c)| (*b, -c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self::zero(self.n);
        for (b, x) in &self.terms {
            out.add_term(*b, x.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.n);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Coefficient of the unit blade.
    pub fn body(&self) -> T {
        self.coeff(Blade::UNIT)
    }

    /// `x - body(x)·1`.
    pub fn soul(&self) -> Self {
        let mut out = self.clone();
        out.terms.remove(&Blade::UNIT);
        out
    }

    pub fn grade_project(&self, p: Grading) -> Self {
        Multivector {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(b, _)| Grading::of(**b) == p)
                .map(|(b, c)| (*b, c.clone()))
                .collect(),
        }
    }

    /// `Some(grade)` when every stored blade has the same grade.
    pub fn homogeneous_grade(&self) -> Option<u32> {
        let mut grades = self.terms.keys().map(|b| b.grade());
        let first = grades.next().unwrap_or(0);
        grades.all(|g| g == first).then_some(first)
    }

    pub fn parity(&self) -> Option<Grading> {
        let mut parities = self.terms.keys().map(|b| Grading::of(*b));
        let first = parities.next().unwrap_or(Grading::Even);
        parities.all(|p| p == first).then_some(first)
    }

    /// Smallest `k` with `x^k = 0`; requires a vanishing body.
    pub fn nilpotency_index(&self) -> Result<u32, GrassmannError> {
        let body = self.body();
        if !body.is_zero() {
            return Err(GrassmannError::NotNilpotent(format!("{body:?}")));
        }
        let mut k = 1;
        let mut acc = self.clone();
        while !acc.is_zero() {
            acc = &acc * self;
            k += 1;
            debug_assert!(k <= self.n as u32 + 1);
        }
        Ok(k)
    }

    pub fn map_coeffs<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> Multivector<U> {
        let mut out = Multivector::<U>::zero(self.n);
        for (b, c) in &self.terms {
            out.add_term(*b, f(c));
        }
        out
    }

    /// Re-embed into `Λ_m` for `m >= max index used`.
    pub fn with_generators(&self, m: u8) -> Result<Self, GrassmannError> {
        if let Some(b) = self.terms.keys().find(|b| b.max_index() > m) {
            return Err(GrassmannError::GeneratorIndex {
                index: b.max_index() as usize,
                n: m,
            });
        }
        Ok(Multivector {
            n: m,
            terms: self.terms.clone(),
        })
    }

    pub fn to_json_value(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(b, c)| serde_json::json!({ "blade": b.indices(), "coeff": c.to_json() }))
            .collect();
        serde_json::json!({ "n": self.n, "terms": terms })
    }

    pub fn from_json_value(v: &Value) -> Result<Self, GrassmannError> {
        let bad = |m: &str| GrassmannError::Parse(m.to_string());
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing \"n\""))?;
        if n > MAX_GENERATORS as u64 {
            return Err(GrassmannError::TooManyGenerators(n as usize));
        }
        let n = n as u8;
        let mut x = Self::zero(n);
        let terms = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"terms\""))?;
        for t in terms {
            let blade: Vec<usize> = t
                .get("blade")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("term without \"blade\""))?
                .iter()
                .map(|i| {
                    i.as_u64()
                        .map(|i| i as usize)
                        .ok_or_else(|| bad("blade index"))
                })
                .collect::<Result<_, _>>()?;
            if blade.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("blade indices must be strictly increasing"));
            }
            let coeff = t
                .get("coeff")
                .and_then(T::from_json)
                .ok_or_else(|| bad("term without valid \"coeff\""))?;
            x.add_term(Blade::from_indices(&blade, n)?, coeff);
        }
        Ok(x)
    }
}

impl GrassmannElement {
    /// Checks `x·x = x` and, if so, replays the nilpotence argument that forces
    /// the soul to vanish and the body into `{0, 1}`.
    pub fn verify_idempotent_is_body(&self) -> IdempotentReport {
        let square = self * self;
        let body = self.body();
        let soul = self.soul();
        let idempotent = square == *self;
        let mut report = IdempotentReport {
            idempotent,
            body: body.clone(),
            soul: soul.clone(),
            square,
            case: None,
            chain: Vec::new(),
            soul_vanishes: soul.is_zero(),
        };
        if !idempotent {
            return report;
        }
        let one = BigRational::one();
        // body is a homomorphism, so body² = body.
        let case = if body.is_zero() {
            BodyCase::Zero
        } else if body == one {
            BodyCase::One
        } else {
            BodyCase::Other
        };
        report.case = Some(case);
        // Case body 0: s² = s, hence s = s^k. Case body 1: s² = -s, hence s^k = (-1)^(k-1) s.
        let sign_for = |k: u32| -> BigRational {
            match case {
                BodyCase::One if k % 2 == 0 => -one.clone(),
                _ => one.clone(),
            }
        };
        let mut power = soul.clone();
        let mut chain_holds = true;
        for k in 1..=(self.n as u32 + 1) {
            if k > 1 {
                power = &power * &soul;
            }
            let expected = soul.scale(&sign_for(k));
            let holds = power == expected;
            chain_holds &= holds;
            let relation = match (case, k % 2 == 0) {
                (BodyCase::One, true) => format!("s^{k} = -s"),
                _ => format!("s^{k} = s"),
            };
            report.chain.push(ChainStep {
                power: k,
                relation,
                value: power.clone(),
                holds,
            });
        }
        report.soul_vanishes = chain_holds && power.is_zero() && soul.is_zero();
        report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyCase {
    Zero,
    One,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainStep {
    pub power: u32,
    pub relation: String,
    pub value: GrassmannElement,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdempotentReport {
    pub idempotent: bool,
    #[serde(with = "crate::scalar::rational_str")]
    pub body: BigRational,
    pub soul: GrassmannElement,
    pub square: GrassmannElement,
    pub case: Option<BodyCase>,
    pub chain: Vec<ChainStep>,
    pub soul_vanishes: bool,
}

impl<T: Coefficient> Serialize for Multivector<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

impl<'de, T: Coefficient> Deserialize<'de> for Multivector<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Self::from_json_value(&v).map_err(serde::de::Error::custom)
    }
}

impl<T: Coefficient> fmt::Debug for Multivector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Λ{}[", self.n)?;
        for (i, (b, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c:?}·{b}")?;
        }
        write!(f, "]")
    }
}

impl<T: Coefficient + fmt::Display> fmt::Display for Multivector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (b, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if b.is_unit() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{b}")?;
            } else {
                write!(f, "({c})*{b}")?;
            }
        }
        Ok(())
    }
}

// Operator forms panic on a generator-count mismatch; use the `try_*`
// methods where the counts are not known to agree.
impl<T: Coefficient> std::ops::Add for &Multivector<T> {
    type Output = Multivector<T>;
    fn add(self, rhs: Self) -> Multivector<T> {
        self.try_add(rhs).expect("generator count mismatch")
    }
}

impl<T: Coefficient> std::ops::Sub for &Multivector<T> {
    type Output = Multivector<T>;
    fn sub(self, rhs: Self) -> Multivector<T> {
        self.try_sub(rhs).expect("generator count mismatch")
    }
}

impl<T: Coefficient> std::ops::Mul for &Multivector<T> {
    type Output = Multivector<T>;
    fn mul(self, rhs: Self) -> Multivector<T> {
        self.try_mul(rhs).expect("generator count mismatch")
    }
}

impl<T: Coefficient> Neg for &Multivector<T> {
    type Output = Multivector<T>;
    fn neg(self) -> Multivector<T> {
        self.neg_ref()
    }
}
