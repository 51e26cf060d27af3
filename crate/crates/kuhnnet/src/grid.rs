//! Lattice samples of a target on the unit cube.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID_FORMAT: &str = "kuhnnet-grid/1";

/// Default limit on the number of lattice points `(n + 1)^d`.
pub const DEFAULT_MAX_LATTICE: u128 = 1_000_000;

/// `(n + 1)^d`, saturating.
pub fn lattice_size(d: usize, n: usize) -> u128 {
    let base = n as u128 + 1;
    (0..d).fold(1u128, |acc, _| acc.saturating_mul(base))
}

pub fn check_lattice(d: usize, n: usize, cap: u128) -> Result<()> {
    let size = lattice_size(d, n);
    if size > cap {
        return Err(Error::Resource { requested: size, cap });
    }
    Ok(())
}

/// Values of a function at the points `j / n`, `j` in `{0..n}^d`, stored in
/// lexicographic order with the first coordinate most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    d: usize,
    n: usize,
    values: Vec<f64>,
}

impl SampleGrid {
    pub fn new(d: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_cap(d, n, values, DEFAULT_MAX_LATTICE)
    }

    pub fn with_cap(d: usize, n: usize, values: Vec<f64>, cap: u128) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::input("grid dimension and resolution must be positive"));
        }
        check_lattice(d, n, cap)?;
        let want = lattice_size(d, n) as usize;
        if values.len() != want {
            return Err(Error::input(format!(
                "grid of d={d}, n={n} needs {want} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("grid value {i} is not finite")));
        }
        Ok(Self { d, n, values })
    }

    /// Samples `f` at every lattice point.
    pub fn from_fn(d: usize, n: usize, cap: u128, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::input("grid dimension and resolution must be positive"));
        }
        check_lattice(d, n, cap)?;
        let len = lattice_size(d, n) as usize;
        let mut values = Vec::with_capacity(len);
        let mut x = vec![0.0; d];
        for flat in 0..len {
            let idx = unflatten(flat, d, n);
            for (xi, &j) in x.iter_mut().zip(&idx) {
                *xi = j as f64 / n as f64;
            }
            let v = f(&x);
            if !v.is_finite() {
                return Err(Error::input(format!("non-finite sample at lattice point {idx:?}")));
            }
            values.push(v);
        }
        Ok(Self { d, n, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        flatten(idx, self.n)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        unflatten(flat, self.d, self.n)
    }

    pub fn value(&self, idx: &[usize]) -> f64 {
        self.values[self.flat_index(idx)]
    }

    /// Lattice indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.values.len()).map(move |f| self.multi_index(f))
    }

    /// Cube coordinates `idx / n` of a lattice point.
    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&j| j as f64 / self.n as f64).collect()
    }

    /// Copy with one value replaced.
    pub fn with_value(&self, flat: usize, v: f64) -> Result<Self> {
        let mut values = self.values.clone();
        values[flat] = v;
        Self::with_cap(self.d, self.n, values, u128::MAX)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_json(&self) -> String {
        let doc = GridDoc {
            format: GRID_FORMAT.into(),
            d: self.d,
            n: self.n,
            values: self.values.clone(),
        };
        serde_json::to_string(&doc).expect("finite grid") + "\n"
    }

    pub fn from_json(s: &str, cap: u128) -> Result<Self> {
        let doc: GridDoc = serde_json::from_str(s).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        if doc.format != GRID_FORMAT {
            return Err(Error::parse("format", format!("expected \"{GRID_FORMAT}\"")));
        }
        match Self::with_cap(doc.d, doc.n, doc.values, cap) {
            Err(Error::Input(m)) => Err(Error::parse("values", m)),
            other => other,
        }
    }

    /// One row per lattice point: index components, then the value.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 1..=self.d {
            out.push_str(&format!("i{i},"));
        }
        out.push_str("value\n");
        for (flat, v) in self.values.iter().enumerate() {
            for j in self.multi_index(flat) {
                out.push_str(&format!("{j},"));
            }
            out.push_str(&format!("{v}\n"));
        }
        out
    }

    /// Reads the CSV layout written by [`SampleGrid::to_csv`]. A header row is
    /// optional; rows may come in any order but must cover every lattice
    /// point exactly once.
    pub fn from_csv(s: &str, cap: u128) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(s.as_bytes());
        let mut rows: Vec<(Vec<usize>, f64)> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(format!("row {}", line + 1), e.to_string()))?;
            if rec.len() < 2 {
                return Err(Error::parse(format!("row {}", line + 1), "expected index columns and a value"));
            }
            let parsed: std::result::Result<Vec<usize>, _> =
                rec.iter().take(rec.len() - 1).map(str::parse::<usize>).collect();
            let idx = match parsed {
                Ok(idx) => idx,
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::parse(format!("row {}", line + 1), e.to_string())),
            };
            let v: f64 = rec[rec.len() - 1]
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::parse(format!("row {}", line + 1), e.to_string()))?;
            if !v.is_finite() {
                return Err(Error::parse(format!("row {}", line + 1), "value is not finite"));
            }
            if let Some(first) = rows.first() {
                if first.0.len() != idx.len() {
                    return Err(Error::parse(format!("row {}", line + 1), "inconsistent index arity"));
                }
            }
            rows.push((idx, v));
        }
        let d = rows.first().map(|r| r.0.len()).ok_or_else(|| Error::parse("row 1", "no data rows"))?;
        let n = rows.iter().flat_map(|r| r.0.iter().copied()).max().unwrap_or(0);
        if n == 0 {
            return Err(Error::parse("rows", "resolution must be positive"));
        }
        check_lattice(d, n, cap)?;
        let len = lattice_size(d, n) as usize;
        let mut values = vec![f64::NAN; len];
        for (idx, v) in rows {
            let f = flatten(&idx, n);
            if !values[f].is_nan() {
                return Err(Error::parse(format!("index {idx:?}"), "duplicate lattice point"));
            }
            values[f] = v;
        }
        if let Some(missing) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::parse(
                format!("index {:?}", unflatten(missing, d, n)),
                "missing lattice point",
            ));
        }
        Self::with_cap(d, n, values, cap)
    }
}

pub(crate) fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &j| acc * (n + 1) + j)
}

pub(crate) fn unflatten(mut flat: usize, d: usize, n: usize) -> Vec<usize> {
    let mut idx = vec![0; d];
    for slot in idx.iter_mut().rev() {
        *slot = flat % (n + 1);
        flat /= n + 1;
    }
    idx
}

#[derive(Serialize, Deserialize)]
struct GridDoc {
    format: String,
    d: usize,
    n: usize,
    values: Vec<f64>,
}
