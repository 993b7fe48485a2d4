use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Logged time series on a uniform grid. Channels are stored column-wise and
/// always have the same length as `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub step: f64,
    time: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

/// `printf("%.12e")` rendering: mantissa with 12 decimals, signed exponent of
/// at least two digits.
pub fn format_c_exp(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}

impl Trajectory {
    pub fn new(names: Vec<String>, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
        }
        for (i, n) in names.iter().enumerate() {
            if n == "t" || names[..i].contains(n) {
                return Err(Error::InvalidParameter(format!("duplicate or reserved channel name `{n}`")));
            }
        }
        let columns = vec![Vec::new(); names.len()];
        Ok(Trajectory {
            step,
            time: Vec::new(),
            names,
            columns,
        })
    }

    pub fn push(&mut self, t: f64, row: &[f64]) -> Result<()> {
        if row.len() != self.names.len() {
            return Err(Error::Dimension(format!(
                "row has {} values for {} channels",
                row.len(),
                self.names.len()
            )));
        }
        self.time.push(t);
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_channel(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::MissingChannel(name.to_string()))
    }

    /// Channels whose names start with `prefix`, in logging order.
    pub fn channels_with_prefix(&self, prefix: &str) -> Vec<&str> {
        self.names
            .iter()
            .filter(|n| n.starts_with(prefix))
            .map(String::as_str)
            .collect()
    }

    /// Row vectors of the named channels.
    pub fn rows(&self, names: &[&str]) -> Result<Vec<nalgebra::DVector<f64>>> {
        let cols: Vec<&[f64]> = names.iter().map(|n| self.channel(n)).collect::<Result<_>>()?;
        Ok((0..self.len())
            .map(|k| nalgebra::DVector::from_fn(cols.len(), |i, _| cols[i][k]))
            .collect())
    }

    /// First sample index with `time >= t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.time.partition_point(|&s| s < t - 1e-9 * self.step)
    }

    /// Header `t,<channels...>` and one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.names.len() + 1) * 20);
        out.push('t');
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for k in 0..self.len() {
            out.push_str(&format_c_exp(self.time[k]));
            for c in &self.columns {
                let _ = write!(out, ",{}", format_c_exp(c[k]));
            }
            out.push('\n');
        }
        out
    }

    /// Column-oriented JSON: `{"step", "t", "channels": {name: [...]}}`.
    /// Non-finite samples are written as `null`.
    pub fn to_json(&self) -> Value {
        let num = |v: f64| serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number);
        let mut ch = Map::new();
        for (n, c) in self.names.iter().zip(&self.columns) {
            ch.insert(n.clone(), Value::Array(c.iter().map(|v| num(*v)).collect()));
        }
        json!({
            "step": self.step,
            "t": self.time.iter().map(|v| num(*v)).collect::<Vec<_>>(),
            "channels": Value::Object(ch),
        })
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string(&self.to_json()).expect("JSON values serialize"))
    }
}
