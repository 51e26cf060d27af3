use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Deserialize;

use crate::compose::{LayerDraft, Lin, NetBuilder};
use crate::error::{Error, Result};
use crate::net::ReluNet;

/// Samples `(x_i, y_i)` with strictly increasing `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples1D {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Samples1D {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        let (xs, ys) = pairs.into_iter().unzip();
        Self::from_xy(xs, ys)
    }

    pub fn from_xy(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::input("x and y lists differ in length"));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite sample"));
        }
        if let Some(i) = xs.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::input(format!("x values not strictly increasing at index {}", i + 1)));
        }
        Ok(Self { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Piecewise-linear interpolant, constant outside `[x_1, x_K]`.
    pub fn interpolate(&self, x: f64) -> f64 {
        let k = self.xs.len();
        if k == 0 {
            return 0.0;
        }
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[k - 1] {
            return self.ys[k - 1];
        }
        let i = self.xs.partition_point(|&t| t <= x);
        let (x0, x1, y0, y1) = (self.xs[i - 1], self.xs[i], self.ys[i - 1], self.ys[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Largest slope between consecutive samples.
    pub fn max_slope(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
            .fold(0.0, f64::max)
    }

    /// One `x,y` pair per line. A non-numeric first line is taken as a header.
    pub fn from_csv(s: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(s.as_bytes());
        let mut pairs = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(format!("row {}", line + 1), e.to_string()))?;
            if rec.len() != 2 {
                return Err(Error::parse(format!("row {}", line + 1), "expected two columns"));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(y)) => pairs.push((x, y)),
                _ if line == 0 => continue,
                (Err(e), _) | (_, Err(e)) => {
                    return Err(Error::parse(format!("row {}", line + 1), e.to_string()))
                }
            }
        }
        Self::new(pairs).map_err(|e| Error::parse("samples", e.to_string()))
    }

    /// A JSON list of `[x, y]` pairs.
    pub fn from_json(s: &str) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = serde_json::from_str::<Vec<Pair>>(s)
            .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?
            .into_iter()
            .map(|Pair(x, y)| (x, y))
            .collect();
        Self::new(pairs).map_err(|e| Error::parse("samples", e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for (x, y) in self.xs.iter().zip(&self.ys) {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }

    /// Jumps `f'(x_i+) - f'(x_i-)` of the interpolant, signs decided exactly.
    fn slope_jumps(&self) -> Vec<(i8, f64)> {
        let k = self.xs.len();
        let q = |v: f64| BigRational::from_float(v).expect("finite");
        let slopes: Vec<BigRational> = (0..k.saturating_sub(1))
            .map(|i| (q(self.ys[i + 1]) - q(self.ys[i])) / (q(self.xs[i + 1]) - q(self.xs[i])))
            .collect();
        let zero = BigRational::zero();
        (0..k)
            .map(|i| {
                let right = if i + 1 < k { &slopes[i] } else { &zero };
                let left = if i > 0 { &slopes[i - 1] } else { &zero };
                let j = right - left;
                let sign = if j.is_zero() { 0 } else if j.is_positive() { 1 } else { -1 };
                (sign, j.abs().to_f64().unwrap_or(f64::MAX))
            })
            .collect()
    }
}

#[derive(Deserialize)]
struct Pair(f64, f64);

/// Weights of a two-hidden-layer memorizer.
///
/// First layer: `σ(x - breaks[i])`. Second layer: `σ(rows[r])`, each row an
/// affine form in the first layer. Output: `Σ out[r] σ(rows[r])`.
#[derive(Clone, Debug)]
pub(crate) struct TwoLayerPlan {
    pub breaks: Vec<f64>,
    pub rows: Vec<PlanRow>,
    pub out: Vec<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct PlanRow {
    pub coeffs: Vec<f64>,
    pub bias: f64,
}

impl PlanRow {
    fn zero(m: usize) -> Self {
        Self { coeffs: vec![0.0; m], bias: 0.0 }
    }

    fn eval(&self, breaks: &[f64], t: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(breaks)
            .fold(self.bias, |acc, (c, b)| if *c == 0.0 { acc } else { acc + c * (t - b).max(0.0) })
    }

    /// Row from per-interval slopes (interval `i` starts at `breaks[i]`) and
    /// the value at `breaks[0]`; constant to the left of `breaks[0]`.
    fn from_slopes(slopes: &[f64], start: f64) -> Self {
        let mut prev = 0.0;
        let coeffs = slopes
            .iter()
            .map(|&s| {
                let c = s - prev;
                prev = s;
                c
            })
            .collect();
        Self { coeffs, bias: start }
    }
}

impl TwoLayerPlan {
    pub fn first_layer(&self, d: &mut LayerDraft, x: &Lin) -> Vec<Lin> {
        self.breaks.iter().map(|&b| d.relu(x.clone() + (-b))).collect()
    }

    pub fn row_form(&self, r: usize, h: &[Lin]) -> Lin {
        let row = &self.rows[r];
        let mut acc = Lin::konst(row.bias);
        for (c, hi) in row.coeffs.iter().zip(h) {
            if *c != 0.0 {
                acc = acc + hi.clone() * *c;
            }
        }
        acc
    }

    pub fn output_form(&self, hs: &[Lin]) -> Lin {
        Lin::sum(
            hs.iter()
                .zip(&self.out)
                .filter(|(_, w)| **w != 0.0)
                .map(|(h, w)| h.clone() * *w),
        )
    }

    pub fn to_net(&self) -> ReluNet {
        let mut nb = NetBuilder::new(1);
        let x = nb.inputs().remove(0);
        let mut d = nb.begin();
        let h = self.first_layer(&mut d, &x);
        nb.push(d);
        let mut d = nb.begin();
        let hs: Vec<Lin> = (0..self.rows.len()).map(|r| d.relu(self.row_form(r, &h))).collect();
        nb.push(d);
        nb.finish(&[self.output_form(&hs).compact()])
    }
}

/// Builds the plan for memorizing `samples` with `M = m`, `N = n`.
///
/// Samples are split into consecutive batches of `n`; batch `i` starts at
/// `X_i`. For each parity `r`, in-batch position `j ≥ 2` and jump sign, one
/// row `g` is linear with slope `±|J|` through zero at the `j`-th sample on
/// each selected batch interval, with alternating signs so that `σ(g)` has
/// no other zero crossings. The remainder `g_0` only bends at the `X_i` and is
/// emitted as `σ(g_0) - σ(-g_0)`.
pub(crate) fn plan_two_layer(samples: &Samples1D, m: usize, n: usize) -> Result<TwoLayerPlan> {
    let k = samples.len();
    if k == 0 {
        return Err(Error::input("memorizer needs at least one sample"));
    }
    if m == 0 || n == 0 {
        return Err(Error::input("memorizer shape parameters must be positive"));
    }
    let capacity = m.saturating_mul(n);
    if k > capacity {
        return Err(Error::Capacity { requested: k, capacity: capacity.min(i64::MAX as usize) as i64 });
    }
    let xs = samples.xs();
    let used = k.div_ceil(n);
    let breaks: Vec<f64> = (0..used).map(|i| xs[i * n]).collect();
    let jumps = samples.slope_jumps();

    let mut rows = Vec::with_capacity(4 * n - 2);
    let mut out = Vec::with_capacity(4 * n - 2);
    for parity in 0..2 {
        for j in 1..n {
            for sign in [1i8, -1] {
                let members: Vec<(usize, f64, f64)> = (parity..used)
                    .step_by(2)
                    .filter_map(|i| {
                        let idx = i * n + j;
                        (idx < k && jumps[idx].0 == sign).then(|| (i, xs[idx], jumps[idx].1))
                    })
                    .collect();
                rows.push(jump_row(&breaks, &members));
                out.push(sign as f64);
            }
        }
    }

    // g0 = f - Σ ± σ(g) only bends at the breaks
    let residual = |t: f64| -> f64 {
        let fitted: f64 = rows
            .iter()
            .zip(&out)
            .map(|(r, w): (&PlanRow, &f64)| w * r.eval(&breaks, t).max(0.0))
            .sum();
        samples.interpolate(t) - fitted
    };
    let at: Vec<f64> = breaks.iter().map(|&b| residual(b)).collect();
    let far = xs[k - 1].max(breaks[used - 1]) + 1.0;
    let mut slopes: Vec<f64> = (0..used.saturating_sub(1))
        .map(|i| (at[i + 1] - at[i]) / (breaks[i + 1] - breaks[i]))
        .collect();
    slopes.push((residual(far) - at[used - 1]) / (far - breaks[used - 1]));
    let g0 = PlanRow::from_slopes(&slopes, at[0]);
    let neg = PlanRow {
        coeffs: g0.coeffs.iter().map(|c| -c).collect(),
        bias: -g0.bias,
    };
    rows.push(g0);
    out.push(1.0);
    rows.push(neg);
    out.push(-1.0);
    Ok(TwoLayerPlan { breaks, rows, out })
}

/// Row for one jump family. `members` lists `(batch, zero, |jump|)` in
/// increasing batch order.
fn jump_row(breaks: &[f64], members: &[(usize, f64, f64)]) -> PlanRow {
    let used = breaks.len();
    if members.is_empty() {
        return PlanRow::zero(used);
    }
    let mut slopes = vec![0.0; used];
    let value_at = |slope: f64, zero: f64, t: f64| slope * (t - zero);
    let mut prev_end: Option<(usize, f64)> = None;
    for (pos, &(i, zero, mag)) in members.iter().enumerate() {
        let s = if pos % 2 == 0 { -mag } else { mag };
        let start = value_at(s, zero, breaks[i]);
        if let Some((end_idx, end_val)) = prev_end {
            let gap = (start - end_val) / (breaks[i] - breaks[end_idx]);
            for sl in &mut slopes[end_idx..i] {
                *sl = gap;
            }
        }
        slopes[i] = s;
        prev_end = (i + 1 < used).then(|| (i + 1, value_at(s, zero, breaks[i + 1])));
    }
    let (first, zero0, mag0) = members[0];
    PlanRow::from_slopes(&slopes, value_at(-mag0, zero0, breaks[first]))
}

/// Two-hidden-layer memorizer with `widthvec = [M', 4N - 2]`, where `M'` is
/// the number of batches actually used.
///
/// The net interpolates the samples, is linear between consecutive samples and
/// constant outside `[x_1, x_K]`.
pub fn build_memorizer_2layer(samples: &Samples1D, m: usize, n: usize) -> Result<ReluNet> {
    Ok(plan_two_layer(samples, m, n)?.to_net())
}

/// `(M, N) = (2⌈√K⌉, ⌈⌈√K⌉/2⌉)`.
pub fn sqrt_shape(k: usize) -> (usize, usize) {
    let s = ceil_sqrt(k as u128) as usize;
    (2 * s, s.div_ceil(2))
}

/// Width at most `2⌈√K⌉`, depth 2.
pub fn build_memorizer_sqrt(samples: &Samples1D) -> Result<ReluNet> {
    let (m, n) = sqrt_shape(samples.len().max(1));
    build_memorizer_2layer(samples, m, n)
}

pub(crate) fn ceil_sqrt(v: u128) -> u128 {
    if v == 0 {
        return 0;
    }
    let mut r = (v as f64).sqrt() as u128;
    while r * r > v {
        r -= 1;
    }
    while r * r < v {
        r += 1;
    }
    r
}
