//! JSON AST: `{ "kind": "...", "args": [...] }`.
//!
//! Kinds written: `num` (with `"value": "p/q"`), `sym` (with `"name"`),
//! `add`, `mul`, `pow` (args `[base, exponent]`), and one kind per
//! elementary function (`sin`, `exp`, ...). Reading additionally accepts
//! `sub`, `div`, `neg`, and `coord`/`const` as aliases of `sym`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use super::expr::{as_integer, Expr, Func};
use super::parse::ParseError;
use crate::scalar::parse_rational;

pub fn to_json(e: &Expr) -> Value {
    match e {
        Expr::Num(r) => json!({ "kind": "num", "value": r.to_string() }),
        Expr::Sym(s) => json!({ "kind": "sym", "name": &**s }),
        Expr::Add(ts) => {
            json!({ "kind": "add", "args": ts.iter().map(to_json).collect::<Vec<_>>() })
        }
        Expr::Mul(fs) => {
            json!({ "kind": "mul", "args": fs.iter().map(to_json).collect::<Vec<_>>() })
        }
        Expr::Pow(b, k) => json!({ "kind": "pow", "args": [to_json(b), to_json(&Expr::int(*k))] }),
        Expr::Apply(f, a) => json!({ "kind": f.name(), "args": [to_json(a)] }),
    }
}

fn bad(msg: impl Into<String>) -> ParseError {
    ParseError {
        pos: 0,
        msg: msg.into(),
    }
}

pub fn from_json(v: &Value) -> Result<Expr, ParseError> {
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("AST node without \"kind\""))?;
    let args = || -> Result<Vec<Expr>, ParseError> {
        v.get("args")
            .and_then(Value::as_array)
            .ok_or_else(|| bad(format!("\"{kind}\" node without \"args\"")))?
            .iter()
            .map(from_json)
            .collect()
    };
    let exactly = |n: usize| -> Result<Vec<Expr>, ParseError> {
        let a = args()?;
        if a.len() != n {
            return Err(bad(format!(
                "\"{kind}\" takes {n} argument(s), got {}",
                a.len()
            )));
        }
        Ok(a)
    };
    match kind {
        "num" | "const" if v.get("value").is_some() => {
            let value = v.get("value").expect("checked");
            let text = match value {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                _ => return Err(bad("\"value\" must be a string or number")),
            };
            parse_rational(&text)
                .map(Expr::Num)
                .ok_or_else(|| bad(format!("bad rational {text:?}")))
        }
        "sym" | "coord" | "const" | "coordinate" | "constant" => v
            .get("name")
            .and_then(Value::as_str)
            .map(Expr::sym)
            .ok_or_else(|| bad("symbol without \"name\"")),
        "add" => Ok(Expr::add(args()?)),
        "mul" => Ok(Expr::mul(args()?)),
        "sub" => {
            let mut a = exactly(2)?;
            let rhs = a.pop().expect("two");
            Ok(Expr::sub(a.pop().expect("two"), rhs))
        }
        "div" => {
            let mut a = exactly(2)?;
            let rhs = a.pop().expect("two");
            if rhs.is_zero() {
                return Err(bad("division by literal zero"));
            }
            Ok(Expr::div(a.pop().expect("two"), rhs))
        }
        "neg" => Ok(Expr::neg(exactly(1)?.pop().expect("one"))),
        "pow" => {
            let mut a = exactly(2)?;
            let e = a.pop().expect("two");
            let k = as_integer(&e)
                .ok_or_else(|| bad(format!("exponent must be an integer, got {e}")))?;
            Ok(Expr::pow(a.pop().expect("two"), k))
        }
        other => match Func::from_name(other) {
            Some(f) => Ok(Expr::apply(f, exactly(1)?.pop().expect("one"))),
            None => Err(bad(format!("unknown AST kind {other:?}"))),
        },
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        to_json(self).serialize(s)
    }
}

/// Accepts either the AST object or an infix string.
impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        match &v {
            Value::String(s) => super::parse::parse_expr(s).map_err(serde::de::Error::custom),
            Value::Number(n) => {
                super::parse::parse_expr(&n.to_string()).map_err(serde::de::Error::custom)
            }
            _ => from_json(&v).map_err(serde::de::Error::custom),
        }
    }
}
