//! JSON spec files.
//!
//! ```json
//! {"id": "skewed", "dim": 2, "family": "discrete",
//!  "atoms": [[0, 0], [1, 2], [3, 1]], "weights": [0.2, 0.5, 0.3],
//!  "standardize": true}
//! ```
//!
//! Other families use `means`/`covariances`/`weights` (`gaussian_mixture`),
//! `marginal`/`copies` (`product_1d`, marginal is `"rademacher"`,
//! `"standardized_exponential"`, `"uniform_pm"` or
//! `{"kind": "two_point", "a": .., "b": .., "w": ..}`) and `location`
//! (`point_mass`).

use super::{DistributionSpec, Marginal};
use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use std::path::Path;

/// A parsed spec file.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub id: String,
    pub spec: DistributionSpec,
}

fn line_of(text: &str, field: &str) -> usize {
    let needle = format!("\"{field}\"");
    text.find(&needle)
        .map(|pos| text[..pos].matches('\n').count() + 1)
        .unwrap_or(1)
}

fn located(text: &str, field: &str, reason: impl Into<String>) -> Error {
    Error::SpecFile {
        location: format!("line {}, field `{field}`", line_of(text, field)),
        reason: reason.into(),
    }
}

fn take<T: DeserializeOwned>(text: &str, obj: &Map<String, Value>, field: &str) -> Result<T> {
    let v = obj
        .get(field)
        .ok_or_else(|| located(text, field, "missing required field"))?;
    serde_json::from_value(v.clone()).map_err(|e| located(text, field, e.to_string()))
}

fn parse_marginal(text: &str, v: &Value) -> Result<Marginal> {
    match v {
        Value::String(s) => match s.as_str() {
            "rademacher" => Ok(Marginal::rademacher()),
            "standardized_exponential" => Ok(Marginal::standardized_exponential()),
            "uniform_pm" => Ok(Marginal::uniform_pm()),
            other => Err(located(text, "marginal", format!("unknown marginal `{other}`"))),
        },
        Value::Object(o) => {
            let kind: String = take(text, o, "kind")?;
            if kind != "two_point" {
                return parse_marginal(text, &Value::String(kind));
            }
            let a: f64 = take(text, o, "a")?;
            let b: f64 = take(text, o, "b")?;
            let w: f64 = take(text, o, "w")?;
            Marginal::two_point(a, b, w).map_err(|e| located(text, "w", e.to_string()))
        }
        _ => Err(located(text, "marginal", "expected a string or an object")),
    }
}

/// Parses a spec document; `fallback_id` names specs without an `id` field.
pub fn parse_spec(text: &str, fallback_id: &str) -> Result<SpecFile> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::SpecFile {
        location: format!("line {}, column {}", e.line(), e.column()),
        reason: e.to_string(),
    })?;
    let obj = root
        .as_object()
        .ok_or_else(|| located(text, "", "top level must be an object"))?;
    let family: String = take(text, obj, "family")?;
    let allowed: &[&str] = match family.as_str() {
        "discrete" => &["atoms", "weights"],
        "gaussian_mixture" => &["means", "covariances", "weights"],
        "product_1d" => &["marginal", "copies"],
        "point_mass" => &["location"],
        other => return Err(located(text, "family", format!("unknown family `{other}`"))),
    };
    for key in obj.keys() {
        let common = matches!(key.as_str(), "id" | "dim" | "family" | "standardize");
        if !common && !allowed.contains(&key.as_str()) {
            return Err(located(text, key, format!("unexpected field for family `{family}`")));
        }
    }
    let id = match obj.get("id") {
        None => fallback_id.to_string(),
        Some(_) => take(text, obj, "id")?,
    };
    let standardize = match obj.get("standardize") {
        None => false,
        Some(_) => take::<bool>(text, obj, "standardize")?,
    };
    let schema = |field: &'static str| move |e: Error| located(text, field, e.to_string());
    let spec = match family.as_str() {
        "discrete" => DistributionSpec::discrete(take(text, obj, "atoms")?, take(text, obj, "weights")?).map_err(schema("atoms"))?,
        "gaussian_mixture" => DistributionSpec::gaussian_mixture(
            take(text, obj, "means")?,
            take(text, obj, "covariances")?,
            take(text, obj, "weights")?,
        )
        .map_err(schema("means"))?,
        "product_1d" => {
            let marginal = parse_marginal(text, obj.get("marginal").ok_or_else(|| located(text, "marginal", "missing required field"))?)?;
            let copies: usize = match obj.get("copies") {
                Some(_) => take(text, obj, "copies")?,
                None => take(text, obj, "dim")?,
            };
            DistributionSpec::product(marginal, copies).map_err(schema("copies"))?
        }
        "point_mass" => DistributionSpec::point_mass(take(text, obj, "location")?).map_err(schema("location"))?,
        _ => unreachable!(),
    };
    if let Some(_) = obj.get("dim") {
        let dim: usize = take(text, obj, "dim")?;
        if dim != spec.dim {
            return Err(located(text, "dim", format!("declared dim {dim} but the law has dim {}", spec.dim)));
        }
    }
    let spec = if standardize {
        spec.standardize().map_err(schema("standardize"))?
    } else {
        spec
    };
    Ok(SpecFile { id, spec })
}

pub fn load_spec(path: &Path) -> Result<SpecFile> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("spec");
    parse_spec(&text, stem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Family;

    #[test]
    fn parses_discrete_and_standardises() {
        let f = parse_spec(
            r#"{"dim":1,"family":"discrete","atoms":[[0],[1]],"weights":[0.5,0.5],"standardize":true}"#,
            "fallback",
        )
        .unwrap();
        assert_eq!(f.id, "fallback");
        assert!(f.spec.standardized);
        let Family::Discrete { atoms, .. } = &f.spec.family else { panic!() };
        assert!((atoms[0][0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn parses_products() {
        let f = parse_spec(r#"{"id":"e2","family":"product_1d","marginal":"standardized_exponential","copies":2}"#, "x").unwrap();
        assert_eq!(f.id, "e2");
        assert_eq!(f.spec, DistributionSpec::standardized_exponential(2));
        let f = parse_spec(
            r#"{"family":"product_1d","dim":1,"marginal":{"kind":"two_point","a":0,"b":1,"w":0.3},"standardize":true}"#,
            "x",
        )
        .unwrap();
        assert!(f.spec.standardized);
    }

    #[test]
    fn reports_line_and_field() {
        let text = "{\n  \"family\": \"discrete\",\n  \"atoms\": [[0],[1]],\n  \"weights\": [0.5, 0.7]\n}";
        match parse_spec(text, "x") {
            Err(Error::SpecFile { location, reason }) => {
                assert!(location.contains("line 3"), "{location}");
                assert!(reason.contains("sum"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        match parse_spec("{\"family\": \"discrete\", \"atom\": 1}", "x") {
            Err(Error::SpecFile { location, .. }) => assert!(location.contains("`atom`")),
            other => panic!("{other:?}"),
        }
        match parse_spec("{\"family\": \n [", "x") {
            Err(Error::SpecFile { location, .. }) => assert!(location.contains("line 2")),
            other => panic!("{other:?}"),
        }
        match parse_spec("{\"family\": \"discrete\", \"dim\": 2, \"atoms\": [[1]], \"weights\": [1]}", "x") {
            Err(Error::SpecFile { location, .. }) => assert!(location.contains("`dim`")),
            other => panic!("{other:?}"),
        }
    }
}
