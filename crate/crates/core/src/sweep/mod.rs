//! Scenario-driven parameter sweeps.
//!
//! A scenario is a JSON document (see [`Scenario`]) with a `sweep.axes` list.
//! Each axis writes its values into one or more dotted parameter paths of the
//! document; the Cartesian product of all axes is evaluated and every
//! requested quantity becomes one row of a long-format [`Table`].

mod eval;
mod scenario;
mod table;

use std::path::Path;

use rayon::prelude::*;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use scenario::{
    AxisConfig, ChannelConfig, ChannelPair, EntanglementConfig, FilterConfig, FilterPair, GridSettings, Method,
    MuConfig, Quantity, Scenario, ShapeName, SourceConfig, SweepConfig, DEFAULT_WAVELENGTH_NM,
};
pub use table::{format_value, AxisValue, Format, Row, Table};

use crate::error::{Error, FieldError, Result};
use scenario::Resolved;

/// Result of [`run_scenario`].
pub type SweepResult = Table;

/// Reads, validates and evaluates a scenario file. Relative filter-table
/// paths are resolved against the file's directory.
pub fn run_scenario(path: impl AsRef<Path>) -> Result<SweepResult> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    run_scenario_bytes(&bytes, base)
}

/// Same as [`run_scenario`] for an in-memory document.
pub fn run_scenario_bytes(bytes: &[u8], base_dir: &Path) -> Result<SweepResult> {
    let raw: Value = serde_json::from_slice(bytes)
        .map_err(|e| Error::Scenario(vec![FieldError::new("<document>", e.to_string())]))?;
    let plan = Plan::new(&raw, base_dir)?;
    plan.run(&hex::encode(Sha256::digest(bytes)))
}

/// Validates a scenario without evaluating it.
pub fn validate_scenario(bytes: &[u8], base_dir: &Path) -> Result<()> {
    let raw: Value = serde_json::from_slice(bytes)
        .map_err(|e| Error::Scenario(vec![FieldError::new("<document>", e.to_string())]))?;
    Plan::new(&raw, base_dir).map(|_| ())
}

fn parse_scenario(v: &Value) -> std::result::Result<Scenario, FieldError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        FieldError::new(if path == "." { "<document>".to_string() } else { path }, e.into_inner().to_string())
    })
}

struct PlanAxis {
    name: String,
    paths: Vec<String>,
    values: Vec<Value>,
}

struct Point {
    coords: Vec<AxisValue>,
    label: String,
    resolved: Resolved,
}

struct Plan {
    base: Scenario,
    axes: Vec<PlanAxis>,
    points: Vec<Point>,
}

impl Plan {
    fn new(raw: &Value, base_dir: &Path) -> Result<Self> {
        let base = parse_scenario(raw).map_err(|e| Error::Scenario(vec![e]))?;
        let mut errors = Vec::new();
        let axes: Vec<PlanAxis> =
            base.sweep.axes.iter().enumerate().filter_map(|(k, a)| plan_axis(raw, k, a, &mut errors)).collect();
        for (k, a) in axes.iter().enumerate() {
            if axes[..k].iter().any(|b| b.name == a.name) {
                errors.push(FieldError::new(
                    format!("sweep.axes[{k}].name"),
                    format!("duplicate axis name {:?}", a.name),
                ));
            }
        }
        if !errors.is_empty() {
            return Err(Error::Scenario(errors));
        }

        let mut points = Vec::new();
        for index in grid_indices(&axes) {
            let mut doc = raw.clone();
            let mut coords = Vec::with_capacity(axes.len());
            let mut label = Vec::with_capacity(axes.len());
            for (a, &k) in axes.iter().zip(&index) {
                let v = &a.values[k];
                for (j, p) in a.paths.iter().enumerate() {
                    let item = match v {
                        Value::Array(items) => items[j].clone(),
                        other => other.clone(),
                    };
                    set_path(&mut doc, p, item);
                }
                coords.push(AxisValue::from_json(v));
                label.push(format!("{}={}", a.name, v));
            }
            let label = label.join(", ");
            let at = |e: FieldError| {
                let message = if label.is_empty() { e.message } else { format!("{} (at {label})", e.message) };
                FieldError { path: e.path, message }
            };
            match parse_scenario(&doc) {
                Err(e) => errors.push(at(e)),
                Ok(s) => match s.resolve(base_dir) {
                    Ok(resolved) => points.push(Point { coords, label: label.clone(), resolved }),
                    Err(list) => errors.extend(list.into_iter().map(at)),
                },
            }
        }
        if !errors.is_empty() {
            return Err(Error::Scenario(dedupe(errors)));
        }
        Ok(Self { base, axes, points })
    }

    fn run(&self, sha: &str) -> Result<Table> {
        let outputs = &self.base.outputs;
        let evaluated: Vec<_> = self.points.par_iter().map(|p| eval::evaluate(&p.resolved, outputs)).collect();
        let mut table = Table::new(self.axes.iter().map(|a| a.name.clone()).collect())
            .provenance("scenario", if self.base.name.is_empty() { "unnamed" } else { &self.base.name })
            .provenance("scenario_sha256", sha);
        if self.base.source.is_some() {
            let g = &self.base.grid;
            let method = match self.base.method {
                Method::Quadrature => "quadrature",
                Method::ClosedForm => "closed_form",
            };
            table = table.provenance("method", method).provenance(
                "grid",
                format!(
                    "points={} truncation={} min_points_per_feature={} convergence_tol={}",
                    g.points, g.truncation, g.min_points_per_feature, g.convergence_tol
                ),
            );
        }
        table = table.provenance("grid_points", self.points.len());
        let mut errors = Vec::new();
        for (p, r) in self.points.iter().zip(evaluated) {
            match r {
                Ok(values) => {
                    for v in values {
                        table.push(p.coords.clone(), v.quantity.name(), v.value, v.flags);
                    }
                }
                Err(e) => errors.push(FieldError::new(
                    "<evaluation>",
                    if p.label.is_empty() { e.to_string() } else { format!("{e} (at {})", p.label) },
                )),
            }
        }
        if !errors.is_empty() {
            return Err(Error::Scenario(errors));
        }
        Ok(table)
    }
}

fn plan_axis(raw: &Value, k: usize, a: &AxisConfig, errors: &mut Vec<FieldError>) -> Option<PlanAxis> {
    let here = |field: &str| format!("sweep.axes[{k}].{field}");
    let before = errors.len();
    let paths = match (&a.path, &a.paths) {
        (Some(p), None) => vec![p.clone()],
        (None, Some(ps)) if !ps.is_empty() => ps.clone(),
        (None, Some(_)) => {
            errors.push(FieldError::new(here("paths"), "empty path list"));
            vec![]
        }
        _ => {
            errors.push(FieldError::new(here("path"), "give exactly one of path and paths"));
            vec![]
        }
    };
    for p in &paths {
        if let Err(msg) = check_path(raw, p) {
            errors.push(FieldError::new(here("path"), format!("{p:?}: {msg}")));
        }
    }
    let values = match (&a.values, a.linspace, a.logspace) {
        (Some(v), None, None) => v.clone(),
        (None, Some((lo, hi, n)), None) => linspace(lo, hi, n).into_iter().map(Value::from).collect(),
        (None, None, Some((lo, hi, n))) => {
            if !(lo > 0.0 && hi > 0.0) {
                errors.push(FieldError::new(here("logspace"), "bounds must be positive"));
                vec![]
            } else {
                logspace(lo, hi, n).into_iter().map(Value::from).collect()
            }
        }
        _ => {
            errors.push(FieldError::new(here("values"), "give exactly one of values, linspace and logspace"));
            vec![]
        }
    };
    if values.is_empty() && errors.len() == before {
        errors.push(FieldError::new(here("values"), "axis has no values"));
    }
    let scalar = |v: &Value| match v {
        Value::Number(n) => n.as_f64().is_some_and(f64::is_finite),
        Value::String(_) | Value::Bool(_) | Value::Null => true,
        _ => false,
    };
    for (j, v) in values.iter().enumerate() {
        let ok = match v {
            // one entry per path
            Value::Array(items) => items.len() == paths.len() && items.iter().all(scalar),
            // linspace/logspace with non-finite bounds turn into nulls
            Value::Null => a.values.is_some(),
            other => scalar(other),
        };
        if !ok {
            errors.push(FieldError::new(
                format!("{}[{j}]", here("values")),
                format!("not a finite scalar or per-path list: {v}"),
            ));
        }
    }
    if errors.len() > before {
        return None;
    }
    let name = a.name.clone().unwrap_or_else(|| paths.join("+"));
    Some(PlanAxis { name, paths, values })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect(),
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect();
    if let Some(first) = v.first_mut() {
        *first = lo;
    }
    if n > 1 {
        v[n - 1] = hi;
    }
    v
}

/// The parent of the target must already be an object in the document.
fn check_path(raw: &Value, path: &str) -> std::result::Result<(), String> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err("malformed path".into());
    }
    if matches!(parts[0], "sweep" | "outputs") {
        return Err("sweep definitions cannot be swept".into());
    }
    let mut node = raw;
    for (depth, p) in parts[..parts.len() - 1].iter().enumerate() {
        node = match node.get(p) {
            Some(n) if n.is_object() => n,
            _ => return Err(format!("no object at {}", parts[..=depth].join("."))),
        };
    }
    if node.is_object() {
        Ok(())
    } else {
        Err("parent is not an object".into())
    }
}

fn set_path(doc: &mut Value, path: &str, value: Value) {
    let mut node = doc;
    let mut parts = path.split('.').peekable();
    while let Some(p) = parts.next() {
        let obj = node.as_object_mut().expect("path checked");
        if parts.peek().is_none() {
            obj.insert(p.to_string(), value);
            return;
        }
        node = obj.get_mut(p).expect("path checked");
    }
}

/// Row-major (first axis slowest) index tuples of the Cartesian grid.
fn grid_indices(axes: &[PlanAxis]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for a in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..a.values.len()).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

/// Drops repeats of the same problem at different grid points, keeping the
/// first occurrence.
fn dedupe(errors: Vec<FieldError>) -> Vec<FieldError> {
    let key = |e: &FieldError| (e.path.clone(), e.message.split(" (at ").next().unwrap_or("").to_string());
    let mut seen = std::collections::HashSet::new();
    errors.into_iter().filter(|e| seen.insert(key(e))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn doc() -> Value {
        json!({
            "mu": {"mu_s": 1e-3, "mu_i": 1e-3, "mu_both": 5e-4},
            "channels": {"signal": {"eta": 0.1, "noise_density": 1.0, "delta_lambda_pm": 100}, "idler": {"eta": 0.1}},
            "sweep": {"axes": [{"path": "mu.mu_s", "values": [1e-3, 2e-3]}]},
            "outputs": ["car", "singles_s"]
        })
    }

    fn run(v: &Value) -> Result<Table> {
        run_scenario_bytes(v.to_string().as_bytes(), Path::new("."))
    }

    #[test]
    fn one_row_per_point_and_quantity() {
        let t = run(&doc()).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.axis_names, vec!["mu.mu_s"]);
        assert_eq!(t.rows[0].quantity, "car");
        assert_eq!(t.rows[1].quantity, "singles_s");
        assert_eq!(t.rows[2].axes, vec![AxisValue::Num(2e-3)]);
    }

    #[test]
    fn grid_order_is_first_axis_slowest() {
        let axes = vec![
            PlanAxis { name: "a".into(), paths: vec![], values: vec![1.into(), 2.into()] },
            PlanAxis { name: "b".into(), paths: vec![], values: vec![1.into(), 2.into(), 3.into()] },
        ];
        let idx = grid_indices(&axes);
        assert_eq!(idx.len(), 6);
        assert_eq!(idx[1], vec![0, 1]);
        assert_eq!(idx[3], vec![1, 0]);
    }

    #[test]
    fn errors_are_itemized() {
        let mut v = doc();
        v["sweep"]["axes"] = json!([
            {"path": "mu.mu_s", "values": []},
            {"path": "nothing.here", "values": [1]},
            {"path": "mu.mu_i", "linspace": [1, 2, 3], "values": [1]}
        ]);
        let Err(Error::Scenario(list)) = run(&v) else { panic!("expected scenario error") };
        assert_eq!(list.len(), 3, "{list:?}");
        assert!(list[0].path == "sweep.axes[0].values");
        assert!(list[1].message.contains("nothing"));
    }

    #[test]
    fn physical_violation_rejected_before_running() {
        let mut v = doc();
        v["sweep"]["axes"][0]["values"] = json!([1e-3, 1e-4]);
        let Err(Error::Scenario(list)) = run(&v) else { panic!() };
        assert_eq!(list.len(), 1);
        assert!(list[0].message.contains("mu.mu_s=0.0001"), "{}", list[0].message);
    }

    #[test]
    fn unknown_field_is_reported_with_path() {
        let mut v = doc();
        v["channels"]["signal"]["etta"] = json!(0.2);
        let Err(Error::Scenario(list)) = run(&v) else { panic!() };
        assert_eq!(list[0].path, "channels.signal.etta");
        assert!(list[0].message.contains("etta"));
    }

    #[test]
    fn multi_path_axis_sets_all_targets() {
        let mut v = doc();
        v["sweep"]["axes"] =
            json!([{"name": "eta", "paths": ["channels.signal.eta", "channels.idler.eta"], "values": [0.5]}]);
        v["outputs"] = json!(["coincidences"]);
        let t = run(&v).unwrap();
        // fiber-output noise passes η_r and the polarizer
        let expected = 5e-4 * 0.25 + (1e-3 * 0.5 + 0.5 * 0.5 * 100.0 * 300e-12) * (1e-3 * 0.5);
        assert!((t.rows[0].value - expected).abs() < 1e-18);
    }

    #[test]
    fn zipped_values_set_each_path() {
        let mut v = doc();
        v["sweep"]["axes"] = json!([{"name": "eta", "paths": ["channels.signal.eta", "channels.idler.eta"],
                                     "values": [[0.5, 0.25], [0.5]]}]);
        let Err(Error::Scenario(list)) = run(&v) else { panic!() };
        assert_eq!(list[0].path, "sweep.axes[0].values[1]");
        v["sweep"]["axes"][0]["values"] = json!([[0.5, 0.25]]);
        v["outputs"] = json!(["coincidences"]);
        let t = run(&v).unwrap();
        let expected = 5e-4 * 0.125 + (1e-3 * 0.5 + 0.5 * 0.5 * 100.0 * 300e-12) * (1e-3 * 0.25);
        assert!((t.rows[0].value - expected).abs() < 1e-18);
    }

    #[test]
    fn logspace_endpoints_exact() {
        assert_eq!(linspace(1.0, 3.0, 3), vec![1.0, 2.0, 3.0]);
        let mut v = doc();
        v["sweep"]["axes"][0] = json!({"path": "mu.mu_s", "logspace": [1e-3, 1e-1, 3]});
        let t = run(&v).unwrap();
        let xs: Vec<f64> = t.series("car").iter().map(|(a, _)| a[0].as_f64().unwrap()).collect();
        assert!((xs[1] - 1e-2).abs() < 1e-15);
    }
}
