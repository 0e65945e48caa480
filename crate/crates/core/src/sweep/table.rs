//! Long-format result tables with CSV and JSON writers.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One coordinate of a grid point: numeric or a label such as a shape name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Num(f64),
    Text(String),
}

impl AxisValue {
    pub fn from_json(v: &serde_json::Value) -> Self {
        match v.as_f64() {
            Some(x) => AxisValue::Num(x),
            None => AxisValue::Text(match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            }),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AxisValue::Num(x) => Some(*x),
            AxisValue::Text(_) => None,
        }
    }

    fn to_field(&self) -> String {
        match self {
            AxisValue::Num(x) => format_value(*x),
            AxisValue::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub axes: Vec<AxisValue>,
    pub quantity: String,
    /// Non-finite values always carry a flag explaining them.
    pub value: f64,
    pub flags: Vec<String>,
}

/// Rows plus the key/value provenance written ahead of them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table {
    pub provenance: Vec<(String, String)>,
    pub axis_names: Vec<String>,
    pub rows: Vec<Row>,
}

/// Output format of a [`Table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// 17 significant digits, enough to recover any f64.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

impl Table {
    pub fn new(axis_names: Vec<String>) -> Self {
        Self { provenance: vec![("pairfilter".into(), env!("CARGO_PKG_VERSION").into())], axis_names, rows: Vec::new() }
    }

    pub fn provenance(mut self, key: &str, value: impl ToString) -> Self {
        self.provenance.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, axes: Vec<AxisValue>, quantity: &str, value: f64, flags: Vec<String>) {
        self.rows.push(Row { axes, quantity: quantity.into(), value, flags });
    }

    /// First row for `quantity` at the given axis coordinates.
    pub fn get(&self, axes: &[AxisValue], quantity: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.quantity == quantity && r.axes == axes)
    }

    /// All `(axes, value)` pairs for one quantity, in row order.
    pub fn series(&self, quantity: &str) -> Vec<(&[AxisValue], f64)> {
        self.rows.iter().filter(|r| r.quantity == quantity).map(|r| (r.axes.as_slice(), r.value)).collect()
    }

    pub fn write<W: Write>(&self, format: Format, w: W) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.provenance {
            writeln!(w, "# {k}: {v}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = self.axis_names.iter().map(String::as_str).collect();
        header.extend(["quantity", "value", "flags"]);
        out.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.axes.iter().map(AxisValue::to_field).collect();
            rec.push(r.quantity.clone());
            rec.push(format_value(r.value));
            rec.push(r.flags.join(";"));
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// JSON with non-finite values written as null; their flags say why.
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        #[derive(Serialize)]
        struct JsonRow<'a> {
            axes: &'a [AxisValue],
            quantity: &'a str,
            value: Option<f64>,
            flags: &'a [String],
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            provenance: serde_json::Map<String, serde_json::Value>,
            axis_names: &'a [String],
            rows: Vec<JsonRow<'a>>,
        }
        let doc = Doc {
            provenance: self.provenance.iter().map(|(k, v)| (k.clone(), v.clone().into())).collect(),
            axis_names: &self.axis_names,
            rows: self
                .rows
                .iter()
                .map(|r| JsonRow {
                    axes: &r.axes,
                    quantity: &r.quantity,
                    value: r.value.is_finite().then_some(r.value),
                    flags: &r.flags,
                })
                .collect(),
        };
        let mut w = w;
        serde_json::to_writer_pretty(&mut w, &doc).map_err(std::io::Error::from)?;
        writeln!(w)?;
        Ok(())
    }

    /// Parses the CSV layout written by [`Table::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut provenance = Vec::new();
        let mut body = String::new();
        for line in r.lines() {
            let line = line?;
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) =
                    rest.split_once(": ").ok_or_else(|| Error::Parse(format!("bad provenance line {line:?}")))?;
                provenance.push((k.to_string(), v.to_string()));
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let header = rdr.headers().map_err(csv_err)?.clone();
        let n_axes = header.len().checked_sub(3).ok_or_else(|| Error::Parse("missing columns".into()))?;
        let axis_names = header.iter().take(n_axes).map(String::from).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let axes = rec
                .iter()
                .take(n_axes)
                .map(|f| parse_value(f).map(AxisValue::Num).unwrap_or_else(|| AxisValue::Text(f.to_string())))
                .collect();
            let value = parse_value(&rec[n_axes + 1])
                .ok_or_else(|| Error::Parse(format!("bad value {:?}", &rec[n_axes + 1])))?;
            let flags = rec[n_axes + 2].split(';').filter(|s| !s.is_empty()).map(String::from).collect();
            rows.push(Row { axes, quantity: rec[n_axes].to_string(), value, flags });
        }
        Ok(Self { provenance, axis_names, rows })
    }
}

fn parse_value(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Parse(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = Table::new(vec!["fwhm_pm".into(), "shape".into()]).provenance("scenario_sha256", "ab");
        let vals = [0.1 + 0.2, std::f64::consts::PI * 1e-300, -7.0e22, f64::INFINITY, 5e-324];
        for (k, v) in vals.iter().enumerate() {
            let flags = if v.is_finite() { vec![] } else { vec!["unbounded".to_string()] };
            t.push(vec![AxisValue::Num(k as f64 * 0.1), AxisValue::Text("flat_top".into())], "car", *v, flags);
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = Table::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn json_nulls_non_finite() {
        let mut t = Table::new(vec![]);
        t.push(vec![], "car_max", f64::INFINITY, vec!["unbounded".into()]);
        let mut buf = Vec::new();
        t.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert!(v["rows"][0]["value"].is_null());
        assert_eq!(v["rows"][0]["flags"][0], "unbounded");
    }
}
