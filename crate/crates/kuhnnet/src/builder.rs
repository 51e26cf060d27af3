//! Approximator networks that interpolate a [`SampleGrid`] on the Kuhn
//! triangulation.
//!
//! The net is `Σ_y f(y) T_y(n x)`, one hat per lattice point. A hat takes the
//! max of `|x_i - y_i|` over even and odd coordinates with two pairwise max
//! trees of depth `⌈log₂ d⌉`, then subtracts both from 1 under a ReLU.

use std::collections::HashMap;

use serde::Serialize;

use crate::analysis::{Check, VerificationReport};
use crate::compose::{LayerDraft, Lin, NetBuilder};
use crate::error::{Error, Result};
use crate::grid::{check_lattice, lattice_size, SampleGrid, DEFAULT_MAX_LATTICE};
use crate::net::ReluNet;

/// Environment variable that overrides [`DEFAULT_MAX_LATTICE`].
pub const MAX_LATTICE_ENV: &str = "KUHNNET_MAX_LATTICE";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    pub max_lattice: u128,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { max_lattice: DEFAULT_MAX_LATTICE }
    }
}

impl BuildOptions {
    /// Default options with the cap taken from `KUHNNET_MAX_LATTICE` if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(MAX_LATTICE_ENV) {
            Ok(s) => {
                let cap = s
                    .trim()
                    .parse::<u128>()
                    .map_err(|e| Error::input(format!("{MAX_LATTICE_ENV}={s:?}: {e}")))?;
                Ok(Self { max_lattice: cap })
            }
            Err(_) => Ok(Self::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "batches")]
pub enum BuildKind {
    Flat,
    Shaped(Vec<usize>),
    Global,
    Baseline,
}

/// Outcome of the structural weight checks, one flag per clause.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StructureFlags {
    pub values_only_in_output: bool,
    pub interior_biases_zero: bool,
    pub interior_weights_half: bool,
    pub magnitudes: bool,
}

impl StructureFlags {
    pub fn all(&self) -> bool {
        self.values_only_in_output && self.interior_biases_zero && self.interior_weights_half && self.magnitudes
    }
}

#[derive(Clone, Debug)]
pub struct BuildReport {
    pub kind: BuildKind,
    pub d: usize,
    pub n: usize,
    pub net: ReluNet,
    pub width: usize,
    pub depth: usize,
    pub nonzero_params: usize,
    pub bound_width: usize,
    pub bound_depth: usize,
    /// `None` where no parameter budget is stated.
    pub bound_params: Option<usize>,
    pub structure: Option<StructureFlags>,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    format: &'static str,
    kind: &'a BuildKind,
    d: usize,
    n: usize,
    width: usize,
    depth: usize,
    widthvec: Vec<usize>,
    nonzero_params: usize,
    bound_width: usize,
    bound_depth: usize,
    bound_params: Option<usize>,
    within_bounds: bool,
    structure: Option<StructureFlags>,
}

pub const BUILD_REPORT_FORMAT: &str = "kuhnnet-build/1";

impl BuildReport {
    pub(crate) fn new(
        kind: BuildKind,
        d: usize,
        n: usize,
        net: ReluNet,
        bounds: (usize, usize, Option<usize>),
    ) -> Self {
        Self {
            kind,
            d,
            n,
            width: net.width(),
            depth: net.depth(),
            nonzero_params: net.count_nonzero_params(0.0),
            net,
            bound_width: bounds.0,
            bound_depth: bounds.1,
            bound_params: bounds.2,
            structure: None,
        }
    }

    pub fn within_bounds(&self) -> bool {
        self.width <= self.bound_width
            && self.depth <= self.bound_depth
            && self.bound_params.map_or(true, |b| self.nonzero_params <= b)
    }

    /// Summary document without the weights.
    pub fn to_json(&self) -> String {
        let doc = ReportDoc {
            format: BUILD_REPORT_FORMAT,
            kind: &self.kind,
            d: self.d,
            n: self.n,
            width: self.width,
            depth: self.depth,
            widthvec: self.net.widthvec(),
            nonzero_params: self.nonzero_params,
            bound_width: self.bound_width,
            bound_depth: self.bound_depth,
            bound_params: self.bound_params,
            within_bounds: self.within_bounds(),
            structure: self.structure,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }
}

pub(crate) fn ceil_log2(d: usize) -> usize {
    d.max(1).next_power_of_two().trailing_zeros() as usize
}

/// Samples `f` at the `(n + 1)^d` lattice points `j / n`.
pub fn encode(f: impl Fn(&[f64]) -> f64, d: usize, n: usize) -> Result<SampleGrid> {
    encode_with(f, d, n, &BuildOptions::default())
}

pub fn encode_with(f: impl Fn(&[f64]) -> f64, d: usize, n: usize, opts: &BuildOptions) -> Result<SampleGrid> {
    SampleGrid::from_fn(d, n, opts.max_lattice, f)
}

/// Wraps an explicit value list in lexicographic order.
pub fn encode_values(values: Vec<f64>, d: usize, n: usize) -> Result<SampleGrid> {
    SampleGrid::new(d, n, values)
}

/// Half-weight hats over `xs`, all ending in the same layer.
///
/// Every intermediate quantity is a plain sum of neurons, so all interior
/// weights are `±1/2` and interior biases vanish. Each returned pair of forms
/// holds `T_y / 2` twice.
fn typical_hats(nb: &mut NetBuilder, xs: &[Lin], scale: f64, points: &[Vec<usize>]) -> Vec<(Lin, Lin)> {
    let d = xs.len();
    let mut l = nb.begin();
    let mut one = l.relu(Lin::konst(1.0));
    let mut abs: HashMap<(usize, usize), Lin> = HashMap::new();
    let mut lists: Vec<[Vec<Lin>; 2]> = Vec::with_capacity(points.len());
    for y in points {
        let mut even_odd: [Vec<Lin>; 2] = [Vec::new(), Vec::new()];
        for (i, &yi) in y.iter().enumerate() {
            let a = abs
                .entry((i, yi))
                .or_insert_with(|| {
                    let z = xs[i].clone() * scale;
                    let p = l.relu(z.clone() + -(yi as f64));
                    let m = l.relu(-z + yi as f64);
                    p + m
                })
                .clone();
            even_odd[yi % 2].push(a);
        }
        lists.push(even_odd);
    }
    nb.push(l);

    for _ in 0..ceil_log2(d) {
        let mut l = nb.begin();
        let c1 = l.relu(one.clone() * 0.5);
        let c2 = l.relu(one * 0.5);
        one = c1 + c2;
        for pair in &mut lists {
            for list in pair.iter_mut() {
                *list = list.chunks(2).map(|c| half_max(&mut l, c)).collect();
            }
        }
        nb.push(l);
    }

    let mut l = nb.begin();
    let out = lists
        .into_iter()
        .map(|[even, odd]| {
            let arg = (one.clone() - Lin::sum(even) - Lin::sum(odd)) * 0.5;
            (l.relu(arg.clone()), l.relu(arg))
        })
        .collect();
    nb.push(l);
    out
}

/// `max{a, b}` of non-negative sums, or a pass-through of a single value.
fn half_max(l: &mut LayerDraft, c: &[Lin]) -> Lin {
    match c {
        [a, b] => {
            let s = l.relu((a.clone() + b.clone()) * 0.5);
            let p = l.relu((a.clone() - b.clone()) * 0.5);
            let q = l.relu((b.clone() - a.clone()) * 0.5);
            s + p + q
        }
        [a] => {
            let h1 = l.relu(a.clone() * 0.5);
            let h2 = l.relu(a.clone() * 0.5);
            h1 + h2
        }
        _ => unreachable!("chunks of two"),
    }
}

/// Network for a single hat `T_y`, with input in lattice units.
pub fn build_hat_net(y: &[usize], d: usize, n: usize) -> Result<ReluNet> {
    if y.len() != d || d == 0 {
        return Err(Error::input(format!("lattice point has {} coordinates, expected d={d}", y.len())));
    }
    if let Some(v) = y.iter().find(|&&v| v > n) {
        return Err(Error::input(format!("coordinate {v} exceeds n={n}")));
    }
    let mut nb = NetBuilder::new(d);
    let xs = nb.inputs();
    let hats = typical_hats(&mut nb, &xs, 1.0, &[y.to_vec()]);
    let (a, b) = hats.into_iter().next().expect("one hat");
    Ok(nb.finish(&[a + b]))
}

fn output_form(grid: &SampleGrid, hats: Vec<(Lin, Lin)>) -> Lin {
    let mut out = Lin::zero();
    for (&v, (a, b)) in grid.values().iter().zip(hats) {
        out = out + a * v + b * v;
    }
    out
}

fn flat_bounds(d: usize, n: usize, extra_depth: usize, param_factor: usize) -> (usize, usize, Option<usize>) {
    let size = lattice_size(d, n) as usize;
    (
        8 * d * size,
        ceil_log2(d) + 4 + extra_depth,
        Some(param_factor.saturating_mul(d).saturating_mul(size)),
    )
}

/// Flat approximator: all hats side by side, then a weighted sum.
pub fn build_approximator(grid: &SampleGrid) -> Result<BuildReport> {
    build_approximator_with(grid, &BuildOptions::default())
}

pub fn build_approximator_with(grid: &SampleGrid, opts: &BuildOptions) -> Result<BuildReport> {
    let mut rep = flat_report(grid, opts)?;
    rep.structure = Some(structure_flags(&check_structure(&rep, grid)));
    Ok(rep)
}

fn flat_report(grid: &SampleGrid, opts: &BuildOptions) -> Result<BuildReport> {
    let (d, n) = (grid.d(), grid.n());
    check_lattice(d, n, opts.max_lattice)?;
    let mut nb = NetBuilder::new(d);
    let xs = nb.inputs();
    let points: Vec<Vec<usize>> = grid.indices().collect();
    let hats = typical_hats(&mut nb, &xs, n as f64, &points);
    let net = nb.finish(&[output_form(grid, hats)]);
    Ok(BuildReport::new(BuildKind::Flat, d, n, net, flat_bounds(d, n, 0, 16)))
}

/// Same function as [`build_approximator`] composed with the coordinatewise
/// clamp `x ↦ σ(x) - σ(x - 1)`, so it is defined and regular on all of `ℝ^d`.
pub fn build_global(grid: &SampleGrid) -> Result<BuildReport> {
    build_global_with(grid, &BuildOptions::default())
}

pub fn build_global_with(grid: &SampleGrid, opts: &BuildOptions) -> Result<BuildReport> {
    let mut rep = global_report(grid, opts)?;
    rep.structure = Some(structure_flags(&check_structure(&rep, grid)));
    Ok(rep)
}

fn global_report(grid: &SampleGrid, opts: &BuildOptions) -> Result<BuildReport> {
    let (d, n) = (grid.d(), grid.n());
    check_lattice(d, n, opts.max_lattice)?;
    let mut nb = NetBuilder::new(d);
    let inputs = nb.inputs();
    let mut l = nb.begin();
    let xs: Vec<Lin> = inputs
        .into_iter()
        .map(|x| {
            let lo = l.relu(x.clone());
            let hi = l.relu(x + -1.0);
            lo - hi
        })
        .collect();
    nb.push(l);
    let points: Vec<Vec<usize>> = grid.indices().collect();
    let hats = typical_hats(&mut nb, &xs, n as f64, &points);
    let net = nb.finish(&[output_form(grid, hats)]);
    Ok(BuildReport::new(BuildKind::Global, d, n, net, flat_bounds(d, n, 1, 18)))
}

/// Approximator assembled in `L = m.len()` sequential stages, stage `k`
/// holding `m_k` hats. The running sum and the input are carried between
/// stages through ReLU pairs; the input carry assumes `x ≥ 0`, so the
/// function agrees with the flat build on `[0, 1]^d`.
pub fn build_approximator_shaped(grid: &SampleGrid, m: &[usize]) -> Result<BuildReport> {
    build_approximator_shaped_with(grid, m, &BuildOptions::default())
}

pub fn build_approximator_shaped_with(grid: &SampleGrid, m: &[usize], opts: &BuildOptions) -> Result<BuildReport> {
    let (d, n) = (grid.d(), grid.n());
    check_lattice(d, n, opts.max_lattice)?;
    if m.is_empty() || m.contains(&0) {
        return Err(Error::input("batch sizes must be positive and non-empty"));
    }
    let total = m.iter().try_fold(0usize, |a, &b| a.checked_add(b));
    if total != Some(grid.len()) {
        return Err(Error::input(format!(
            "batch sizes sum to {}, lattice has {} points",
            total.map_or("overflow".to_string(), |t| t.to_string()),
            grid.len()
        )));
    }
    let points: Vec<Vec<usize>> = grid.indices().collect();
    let mut nb = NetBuilder::new(d);
    let mut xs = nb.inputs();
    let mut sum: Option<Lin> = None;
    let mut start = 0;
    let levels = ceil_log2(d);
    for (stage, &mk) in m.iter().enumerate() {
        let last = stage + 1 == m.len();
        let batch = &points[start..start + mk];
        let values = &grid.values()[start..start + mk];
        start += mk;

        let carry = |l: &mut LayerDraft, xs: &[Lin], sum: &Option<Lin>| {
            let xs_c: Vec<Lin> = if last { Vec::new() } else { xs.iter().map(|x| l.relu(x.clone())).collect() };
            let sum_c = sum.as_ref().map(|s| l.keep(s.clone()));
            (xs_c, sum_c)
        };

        let mut l = nb.begin();
        let mut abs: HashMap<(usize, usize), Lin> = HashMap::new();
        let mut lists: Vec<[Vec<Lin>; 2]> = Vec::with_capacity(mk);
        for y in batch {
            let mut even_odd: [Vec<Lin>; 2] = [Vec::new(), Vec::new()];
            for (i, &yi) in y.iter().enumerate() {
                let a = abs
                    .entry((i, yi))
                    .or_insert_with(|| {
                        let z = xs[i].clone() * n as f64;
                        let p = l.relu(z.clone() + -(yi as f64));
                        let q = l.relu(-z + yi as f64);
                        p + q
                    })
                    .clone();
                even_odd[yi % 2].push(a);
            }
            lists.push(even_odd);
        }
        let (mut xs_c, mut sum_c) = carry(&mut l, &xs, &sum);
        nb.push(l);

        for _ in 0..levels {
            let mut l = nb.begin();
            for pair in &mut lists {
                for list in pair.iter_mut() {
                    *list = list
                        .chunks(2)
                        .map(|c| match c {
                            [a, b] => {
                                let keep_b = l.relu(b.clone());
                                let over = l.relu(a.clone() - b.clone());
                                keep_b + over
                            }
                            [a] => l.relu(a.clone()),
                            _ => unreachable!("chunks of two"),
                        })
                        .collect();
                }
            }
            (xs_c, sum_c) = carry(&mut l, &xs_c, &sum_c);
            nb.push(l);
        }

        let mut l = nb.begin();
        let mut acc = Lin::zero();
        for ([even, odd], &v) in lists.into_iter().zip(values) {
            let hat = l.relu(Lin::konst(1.0) - Lin::sum(even) - Lin::sum(odd));
            acc = acc + hat * v;
        }
        (xs_c, sum_c) = carry(&mut l, &xs_c, &sum_c);
        nb.push(l);
        sum = Some(sum_c.map_or(acc.clone(), |s| s + acc));
        xs = xs_c;
    }
    let net = nb.finish(&[sum.expect("at least one stage").compact()]);
    let size = lattice_size(d, n) as usize;
    let max_m = m.iter().copied().max().unwrap_or(0);
    let bounds = (
        8 * d * max_m + d + 2,
        m.len() * (levels + 4),
        Some(16 * d * size + m.len() * (d + 2)),
    );
    Ok(BuildReport::new(BuildKind::Shaped(m.to_vec()), d, n, net, bounds))
}

fn rebuild(kind: &BuildKind, grid: &SampleGrid) -> Option<Result<BuildReport>> {
    let opts = BuildOptions { max_lattice: u128::MAX };
    match kind {
        BuildKind::Flat => Some(flat_report(grid, &opts)),
        BuildKind::Global => Some(global_report(grid, &opts)),
        BuildKind::Shaped(m) => Some(build_approximator_shaped_with(grid, m, &opts)),
        BuildKind::Baseline => None,
    }
}

fn is_half(w: f64) -> bool {
    w == 0.0 || w == 0.5 || w == -0.5
}

/// Checks the weight structure of a built net.
///
/// Clause (i) rebuilds with one grid value raised by 1 and requires every
/// layer but the output layer to be unchanged. Clauses (ii) and (iii) look at
/// the layers strictly between the first hat layer and the output layer.
/// Clause (iv) bounds first-layer weights and biases by `n` and output
/// weights by `max |f|`. The clamp layer of a global build is skipped.
pub fn check_structure(report: &BuildReport, grid: &SampleGrid) -> VerificationReport {
    let net = &report.net;
    let layers = net.layers();
    let last = layers.len() - 1;
    let first = usize::from(report.kind == BuildKind::Global);
    let n = grid.n() as f64;
    let mut checks = Vec::new();

    let changed = match rebuild(&report.kind, &grid.with_value(0, grid.values()[0] + 1.0).expect("finite")) {
        Some(Ok(other)) => {
            let ol = other.net.layers();
            if ol.len() != layers.len() {
                f64::INFINITY
            } else {
                layers[..last]
                    .iter()
                    .zip(&ol[..last])
                    .map(|(a, b)| {
                        if a.rows() != b.rows() || a.cols() != b.cols() {
                            f64::INFINITY
                        } else {
                            let w = a.weights().iter().zip(b.weights()).filter(|(x, y)| x != y).count();
                            let c = a.bias().iter().zip(b.bias()).filter(|(x, y)| x != y).count();
                            (w + c) as f64
                        }
                    })
                    .sum()
            }
        }
        _ => f64::INFINITY,
    };
    checks.push(Check::new("structure.values_only_in_output", changed, 0.0, 0.0, 1, 0));

    let interior = if first + 1 < last { &layers[first + 1..last] } else { &[][..] };
    let bias = interior
        .iter()
        .flat_map(|l| l.bias())
        .fold(0.0f64, |m, b| m.max(b.abs()));
    checks.push(Check::new("structure.interior_biases_zero", bias, 0.0, 0.0, interior.len() as u64, 0));
    let odd = interior
        .iter()
        .flat_map(|l| l.weights())
        .filter(|w| !is_half(**w))
        .count();
    checks.push(Check::new("structure.interior_weights_half", odd as f64, 0.0, 0.0, interior.len() as u64, 0));

    let fl = &layers[first.min(last)];
    let w1 = fl.weights().iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let b1 = fl.bias().iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let wl = layers[last].weights().iter().fold(0.0f64, |m, w| m.max(w.abs()));
    checks.push(Check::new("structure.first_layer_weights", w1, n, 0.0, 1, 0));
    checks.push(Check::new("structure.first_layer_biases", b1, n, 0.0, 1, 0));
    checks.push(Check::new("structure.output_weights", wl, grid.max_abs(), 0.0, 1, 0));
    VerificationReport::new(checks)
}

fn structure_flags(rep: &VerificationReport) -> StructureFlags {
    let ok = |name: &str| rep.get(name).is_some_and(|c| c.pass);
    StructureFlags {
        values_only_in_output: ok("structure.values_only_in_output"),
        interior_biases_zero: ok("structure.interior_biases_zero"),
        interior_weights_half: ok("structure.interior_weights_half"),
        magnitudes: ok("structure.first_layer_weights")
            && ok("structure.first_layer_biases")
            && ok("structure.output_weights"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kuhn::{cpwl_eval, hat_value};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(d: usize, n: usize, f: impl Fn(&[f64]) -> f64) -> SampleGrid {
        encode(f, d, n).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(grid(2, 1, |_| 0.0).values(), &[0.0; 4]);
        assert_eq!(grid(2, 1, |x| x[0] + x[1]).values(), &[0.0, 1.0, 1.0, 2.0]);
        let g = grid(2, 2, |x| x[0].min(x[1]));
        for idx in g.indices() {
            let p = g.point(&idx);
            assert_eq!(g.value(&idx), p[0].min(p[1]));
        }
        assert!(matches!(encode(|_| f64::NAN, 1, 1), Err(Error::Input(_))));
    }

    #[test]
    fn hat_net_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (d, n) in [(1, 3), (2, 2), (3, 2), (5, 1)] {
            let y: Vec<usize> = (0..d).map(|i| (i * 7 + 1) % (n + 1)).collect();
            let net = build_hat_net(&y, d, n).unwrap();
            assert!(net.width() <= 8 * d);
            assert!(net.depth() <= ceil_log2(d) + 3);
            let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
            assert_eq!(net.eval1(&yf), 1.0);
            for _ in 0..2000 {
                let x: Vec<f64> = y.iter().map(|&v| v as f64 + rng.random_range(-1.5..1.5)).collect();
                assert!((net.eval1(&x) - hat_value(&y, &x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hat_vanishes_on_other_lattice_points() {
        let net = build_hat_net(&[1, 2], 2, 3).unwrap();
        for i in 0..=3 {
            for j in 0..=3 {
                let want = if (i, j) == (1, 2) { 1.0 } else { 0.0 };
                assert_eq!(net.eval1(&[i as f64, j as f64]), want);
            }
        }
    }

    #[test]
    fn linear_target_reproduced() {
        let g = grid(2, 2, |x| x[0]);
        let rep = build_approximator(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            assert!((rep.net.eval1(&x) - x[0]).abs() < 1e-9);
        }
        assert_eq!(rep.net.eval1(&[-1.0, -1.0]), 0.0);
        assert!(rep.within_bounds());
        assert!(rep.structure.unwrap().all());
    }

    #[test]
    fn small_builds_within_budget() {
        for d in 1..=3 {
            for n in 1..=3 {
                let g = grid(d, n, |x| x.iter().sum::<f64>().sin());
                let rep = build_approximator(&g).unwrap();
                assert!(rep.within_bounds(), "d={d} n={n}: {}", rep.to_json());
                assert!(rep.structure.unwrap().all(), "d={d} n={n}");
            }
        }
    }

    #[test]
    fn shaped_matches_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (d, n, m) in [(2, 1, vec![2, 2]), (2, 2, vec![3, 3, 3]), (3, 1, vec![8]), (1, 4, vec![1, 3, 1])] {
            let g = grid(d, n, |x| x.iter().map(|v| (3.0 * v).cos()).sum());
            let flat = build_approximator(&g).unwrap();
            let shaped = build_approximator_shaped(&g, &m).unwrap();
            assert!(shaped.within_bounds(), "{}", shaped.to_json());
            for _ in 0..2000 {
                let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
                assert!((flat.net.eval1(&x) - shaped.net.eval1(&x)).abs() < 1e-9);
            }
        }
        let g = grid(2, 2, |x| x[0]);
        assert!(build_approximator_shaped(&g, &[3, 3, 3]).unwrap().width <= 52);
        assert!(matches!(build_approximator_shaped(&g, &[3, 3]), Err(Error::Input(_))));
    }

    #[test]
    fn global_clamps() {
        let g = grid(2, 4, |x| x[0].min(x[1]));
        let flat = build_approximator(&g).unwrap();
        let glob = build_global(&g).unwrap();
        assert!(glob.within_bounds());
        assert!(glob.structure.unwrap().all());
        assert_eq!(glob.net.eval1(&[2.0, 2.0]), flat.net.eval1(&[1.0, 1.0]));
        assert_eq!(glob.net.eval1(&[-0.5, 0.3]), flat.net.eval1(&[0.0, 0.3]));
        let x = [0.3, 0.71];
        assert!((glob.net.eval1(&x) - cpwl_eval(&g, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mutated_weight_fails_half_check() {
        let g = grid(2, 2, |x| x[0] * x[1]);
        let mut rep = build_approximator(&g).unwrap();
        rep.net = rep.net.with_layer_edit(1, |l| {
            let c = (0..l.cols()).find(|&c| l.weight(0, c) != 0.0).unwrap();
            l.set_weight(0, c, 0.3);
        });
        let chk = check_structure(&rep, &g);
        assert!(!chk.get("structure.interior_weights_half").unwrap().pass);
    }

    #[test]
    fn resource_cap() {
        let g = grid(2, 4, |_| 1.0);
        let opts = BuildOptions { max_lattice: 10 };
        assert!(matches!(build_approximator_with(&g, &opts), Err(Error::Resource { requested: 25, cap: 10 })));
    }
}
