//! Built-in metrics and the JSON metric file format.
//!
//! ```json
//! {
//!   "name": "schwarzschild",
//!   "coords": ["t", "r", "theta", "phi"],
//!   "domain": { "r": ["3*GM", "50*GM"], "theta": ["1/5", "pi - 1/5"] },
//!   "constraints": ["r - 2*GM"],
//!   "riemannian": false,
//!   "g": [["-(1 - 2*GM/r)", "0", "0", "0"], ...],
//!   "params": { "GM": 1 },
//!   "lambda": "0",
//!   "mode": "ii"
//! }
//! ```
//!
//! Coordinates missing from `domain` range over `(-2, 2)`. `lambda` and
//! `mode` are the cosmological constant and equation form the metric is
//! meant to be checked with; they default to `0` and `i`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use super::{EinsteinError, EinsteinMode, MetricField};
use crate::scalar::{parse_rational, Scalar};
use crate::symalg::{parse_expr, Bindings, Chart, Expr, Interval};

pub const BUILTIN_NAMES: [&str; 5] = [
    "minkowski",
    "schwarzschild",
    "de_sitter_static",
    "flrw_closed",
    "sphere2",
];

/// Scale factor used for the closed FLRW entry.
pub const FLRW_SCALE_FACTOR: &str = "1 + t^2";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown metric `{0}`")]
    Unknown(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed metric file: {0}")]
    Format(String),
    #[error(transparent)]
    Metric(#[from] EinsteinError),
}

/// A metric together with the `Λ` and equation form it is checked against.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub metric: MetricField,
    pub lambda: Expr,
    pub mode: EinsteinMode,
}

#[derive(Debug, Deserialize)]
struct MetricFile {
    name: String,
    coords: Vec<String>,
    #[serde(default)]
    domain: BTreeMap<String, [Value; 2]>,
    #[serde(default)]
    constraints: Vec<Value>,
    #[serde(default)]
    riemannian: bool,
    g: Vec<Vec<Value>>,
    #[serde(default)]
    params: BTreeMap<String, Value>,
    #[serde(default)]
    lambda: Option<Value>,
    #[serde(default)]
    mode: Option<String>,
}

fn expr_of(v: &Value) -> Result<Expr, CatalogError> {
    let parsed = match v {
        Value::String(s) => parse_expr(s).map_err(|e| e.to_string()),
        Value::Number(n) => parse_expr(&n.to_string()).map_err(|e| e.to_string()),
        other => serde_json::from_value::<Expr>(other.clone()).map_err(|e| e.to_string()),
    };
    parsed.map_err(|e| CatalogError::Format(format!("bad expression {v}: {e}")))
}

fn rational_of(v: &Value) -> Result<Scalar, CatalogError> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => {
            return Err(CatalogError::Format(format!(
                "parameter value must be a number, got {other}"
            )))
        }
    };
    parse_rational(&text)
        .map(Scalar::Exact)
        .ok_or_else(|| CatalogError::Format(format!("bad parameter value {text:?}")))
}

pub fn parse_mode(s: &str) -> Option<EinsteinMode> {
    match s {
        "i" | "full" | "1" => Some(EinsteinMode::Full),
        "ii" | "vacuum" | "2" => Some(EinsteinMode::Vacuum),
        _ => None,
    }
}

pub fn entry_from_json(v: &Value) -> Result<CatalogEntry, CatalogError> {
    let file: MetricFile =
        serde_json::from_value(v.clone()).map_err(|e| CatalogError::Format(e.to_string()))?;
    let mut params = Bindings::new();
    for (k, v) in &file.params {
        params.set(k, rational_of(v)?);
    }
    for c in file.domain.keys() {
        if !file.coords.contains(c) {
            return Err(CatalogError::Format(format!(
                "domain names unknown coordinate `{c}`"
            )));
        }
    }
    let boxes = file
        .coords
        .iter()
        .map(|c| match file.domain.get(c) {
            Some([lo, hi]) => Ok(Interval {
                lo: expr_of(lo)?,
                hi: expr_of(hi)?,
            }),
            None => Ok(Interval {
                lo: Expr::int(-2),
                hi: Expr::int(2),
            }),
        })
        .collect::<Result<Vec<_>, CatalogError>>()?;
    let constraints = file
        .constraints
        .iter()
        .map(expr_of)
        .collect::<Result<Vec<_>, _>>()?;
    let coords: Vec<&str> = file.coords.iter().map(String::as_str).collect();
    let chart =
        Chart::with_domain(&coords, boxes, constraints, params).map_err(EinsteinError::from)?;
    let g = file
        .g
        .iter()
        .map(|row| row.iter().map(expr_of).collect())
        .collect::<Result<Vec<Vec<_>>, _>>()?;
    let metric = MetricField::new(&file.name, chart, g, file.riemannian)?;
    let lambda = file
        .lambda
        .as_ref()
        .map(expr_of)
        .transpose()?
        .unwrap_or_else(Expr::zero);
    let mode = match file.mode.as_deref() {
        None => EinsteinMode::Full,
        Some(m) => {
            parse_mode(m).ok_or_else(|| CatalogError::Format(format!("unknown mode {m:?}")))?
        }
    };
    Ok(CatalogEntry {
        metric,
        lambda,
        mode,
    })
}

pub fn entry_from_file(path: &Path) -> Result<CatalogEntry, CatalogError> {
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CatalogError::Format(e.to_string()))?;
    entry_from_json(&v)
}

fn builtin_json(name: &str) -> Option<Value> {
    let v = match name {
        "minkowski" => serde_json::json!({
            "name": "minkowski",
            "coords": ["t", "x", "y", "z"],
            "g": [["-1", "0", "0", "0"], ["0", "1", "0", "0"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]],
            "lambda": "0",
            "mode": "i"
        }),
        "schwarzschild" => serde_json::json!({
            "name": "schwarzschild",
            "coords": ["t", "r", "theta", "phi"],
            "domain": {
                "t": ["-10", "10"],
                "r": ["3*GM", "50*GM"],
                "theta": ["1/5", "pi - 1/5"],
                "phi": ["0", "2*pi"]
            },
            "constraints": ["r - 2*GM"],
            "g": [
                ["-(1 - 2*GM/r)", "0", "0", "0"],
                ["0", "1/(1 - 2*GM/r)", "0", "0"],
                ["0", "0", "r^2", "0"],
                ["0", "0", "0", "r^2*sin(theta)^2"]
            ],
            "params": { "GM": 1 },
            "lambda": "0",
            "mode": "ii"
        }),
        "de_sitter_static" => serde_json::json!({
            "name": "de_sitter_static",
            "coords": ["t", "r", "theta", "phi"],
            "domain": {
                "t": ["-10", "10"],
                "r": ["l/10", "9*l/10"],
                "theta": ["1/5", "pi - 1/5"],
                "phi": ["0", "2*pi"]
            },
            "g": [
                ["-(1 - r^2/l^2)", "0", "0", "0"],
                ["0", "1/(1 - r^2/l^2)", "0", "0"],
                ["0", "0", "r^2", "0"],
                ["0", "0", "0", "r^2*sin(theta)^2"]
            ],
            "params": { "l": 2 },
            "lambda": "3/l^2",
            "mode": "ii"
        }),
        "flrw_closed" => {
            let a2 = format!("({FLRW_SCALE_FACTOR})^2");
            serde_json::json!({
                "name": "flrw_closed",
                "coords": ["t", "chi", "theta", "phi"],
                "domain": {
                    "t": ["0", "2"],
                    "chi": ["1/5", "pi - 1/5"],
                    "theta": ["1/5", "pi - 1/5"],
                    "phi": ["0", "2*pi"]
                },
                "g": [
                    ["-1", "0", "0", "0"],
                    ["0", a2, "0", "0"],
                    ["0", "0", format!("{a2}*sin(chi)^2"), "0"],
                    ["0", "0", "0", format!("{a2}*sin(chi)^2*sin(theta)^2")]
                ],
                "lambda": "0",
                "mode": "ii"
            })
        }
        "sphere2" => serde_json::json!({
            "name": "sphere2",
            "coords": ["theta", "phi"],
            "domain": { "theta": ["1/5", "pi - 1/5"], "phi": ["0", "2*pi"] },
            "riemannian": true,
            "g": [["a^2", "0"], ["0", "a^2*sin(theta)^2"]],
            "params": { "a": 2 },
            "lambda": "1/a^2",
            "mode": "ii"
        }),
        _ => return None,
    };
    Some(v)
}

pub fn builtin_entry(name: &str) -> Result<CatalogEntry, CatalogError> {
    let v = builtin_json(name).ok_or_else(|| CatalogError::Unknown(name.to_string()))?;
    entry_from_json(&v)
}

pub fn builtin(name: &str) -> Result<MetricField, CatalogError> {
    builtin_entry(name).map(|e| e.metric)
}

/// All built-in entries, sorted by name.
pub fn builtin_catalog() -> Vec<CatalogEntry> {
    let mut names = BUILTIN_NAMES.to_vec();
    names.sort_unstable();
    names
        .into_iter()
        .map(|n| builtin_entry(n).expect("built-in metrics are valid"))
        .collect()
}

/// Resolves a built-in name, a file path, or a name inside `dir`.
pub fn resolve(spec: &str, dir: Option<&Path>) -> Result<CatalogEntry, CatalogError> {
    if builtin_json(spec).is_some() {
        return builtin_entry(spec);
    }
    let direct = Path::new(spec);
    if direct.is_file() {
        return entry_from_file(direct);
    }
    if let Some(dir) = dir {
        for candidate in [dir.join(spec), dir.join(format!("{spec}.json"))] {
            if candidate.is_file() {
                return entry_from_file(&candidate);
            }
        }
    }
    Err(CatalogError::Unknown(spec.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load() {
        let all = builtin_catalog();
        assert_eq!(all.len(), 5);
        let names: Vec<&str> = all.iter().map(|e| e.metric.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "de_sitter_static",
                "flrw_closed",
                "minkowski",
                "schwarzschild",
                "sphere2"
            ]
        );
        assert!(builtin("sphere2").unwrap().riemannian);
        assert!(matches!(builtin("nope"), Err(CatalogError::Unknown(_))));
    }

    #[test]
    fn probe_points_respect_domain() {
        let g = builtin("schwarzschild").unwrap();
        for p in g.probe_points().unwrap() {
            let r = p[1].to_f64();
            assert!(r > 3.0 && r < 50.0);
        }
    }

    #[test]
    fn file_format_errors() {
        let bad = serde_json::json!({ "name": "x", "coords": ["t"], "g": [["1", "0"]] });
        assert!(entry_from_json(&bad).is_err());
        let unknown = serde_json::json!({ "name": "x", "coords": ["t"], "domain": { "q": [0, 1] }, "g": [["-1"]] });
        assert!(matches!(
            entry_from_json(&unknown),
            Err(CatalogError::Format(_))
        ));
        let ok =
            serde_json::json!({ "name": "line", "coords": ["t"], "g": [["-1"]], "mode": "vacuum" });
        let e = entry_from_json(&ok).unwrap();
        assert_eq!(e.mode, EinsteinMode::Vacuum);
    }
}
