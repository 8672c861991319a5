//! Paths on the uniform grid `t_i = i/m` of `[0, 1]`.
//!
//! A [`GridPath`] stands for the piecewise-linear function through its node
//! values, so its sup norm and modulus of continuity are attained at grid
//! nodes and can be computed exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real-valued path sampled at `m + 1` uniform nodes of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridPath", into = "RawGridPath")]
pub struct GridPath {
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGridPath {
    m: usize,
    values: Vec<f64>,
}

impl TryFrom<RawGridPath> for GridPath {
    type Error = Error;

    fn try_from(raw: RawGridPath) -> Result<Self> {
        if raw.values.len() != raw.m + 1 {
            return Err(Error::InvalidPath(format!("expected m + 1 = {} values, got {}", raw.m + 1, raw.values.len())));
        }
        GridPath::new(raw.values)
    }
}

impl From<GridPath> for RawGridPath {
    fn from(p: GridPath) -> Self {
        RawGridPath { m: p.m(), values: p.values }
    }
}

impl GridPath {
    /// Builds a path from node values; needs at least two finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidPath(format!("need at least 2 node values, got {}", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPath(format!("non-finite value at node {i}")));
        }
        Ok(GridPath { values })
    }

    pub fn zeros(m: usize) -> Self {
        assert!(m >= 1, "grid resolution must be positive");
        GridPath { values: vec![0.0; m + 1] }
    }

    /// Samples `f` at `t_i = i/m`.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("grid resolution must be positive".into()));
        }
        GridPath::new((0..=m).map(|i| f(i as f64 / m as f64)).collect())
    }

    /// Grid resolution.
    pub fn m(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `max_t |f(t)|`, exact for the piecewise-linear extension.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// `max_t f(t)`.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Piecewise-linear evaluation at `t`, clamped into `[0, 1]`.
    pub fn eval_at(&self, t: f64) -> f64 {
        let m = self.m();
        let x = t.clamp(0.0, 1.0) * m as f64;
        let i = (x.floor() as usize).min(m - 1);
        let frac = x - i as f64;
        if frac == 0.0 {
            return self.values[i];
        }
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    fn check_same_m(&self, other: &GridPath) -> Result<()> {
        if self.m() != other.m() {
            return Err(Error::ResolutionMismatch { left: self.m(), right: other.m() });
        }
        Ok(())
    }

    /// Pointwise `self - other`.
    pub fn subtract(&self, other: &GridPath) -> Result<GridPath> {
        self.check_same_m(other)?;
        Ok(GridPath { values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() })
    }

    /// Pointwise `self + other`.
    pub fn add(&self, other: &GridPath) -> Result<GridPath> {
        self.check_same_m(other)?;
        Ok(GridPath { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() })
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &GridPath) -> Result<GridPath> {
        self.check_same_m(other)?;
        GridPath::new(self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect())
    }

    pub fn scale(&self, c: f64) -> GridPath {
        GridPath { values: self.values.iter().map(|v| c * v).collect() }
    }
}

/// Parses CSV text holding one path per row (`m + 1` reals each).
///
/// A first row starting with `t0` is treated as the header `t0,...,tm`.
/// All rows must share the same resolution.
pub fn parse_csv_paths(text: &str) -> Result<Vec<GridPath>> {
    let mut paths = Vec::new();
    let mut expected: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.starts_with("t0") {
            let cols = line.split(',').count();
            for (i, name) in line.split(',').enumerate() {
                if name.trim() != format!("t{i}") {
                    return Err(Error::Parse(format!("bad header column {i}: {name:?}")));
                }
            }
            expected = Some(cols);
            continue;
        }
        let values = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {s:?}: {e}", lineno + 1))))
            .collect::<Result<Vec<f64>>>()?;
        match expected {
            Some(n) if n != values.len() => {
                return Err(Error::Parse(format!("line {}: expected {n} values, got {}", lineno + 1, values.len())))
            }
            None => expected = Some(values.len()),
            _ => {}
        }
        paths.push(GridPath::new(values)?);
    }
    Ok(paths)
}

/// Writes paths as CSV with a `t0,...,tm` header row.
pub fn write_csv_paths(paths: &[GridPath]) -> String {
    let mut out = String::new();
    if let Some(first) = paths.first() {
        let header: Vec<String> = (0..=first.m()).map(|i| format!("t{i}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
    }
    for p in paths {
        let row: Vec<String> = p.values.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
