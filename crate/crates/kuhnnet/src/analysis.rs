//! Measurement oracles and verification reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::builder::{check_structure, BuildKind, BuildReport};
use crate::error::{Error, Result};
use crate::grid::SampleGrid;
use crate::kuhn::{cpwl_eval, exact_lipschitz_l1};
use crate::modulus::Modulus;
use crate::net::ReluNet;

pub const REPORT_FORMAT: &str = "kuhnnet-report/1";

/// Structured point sets are skipped when they would exceed this many points.
const STRUCTURED_LIMIT: usize = 200_000;

/// Offset used for near-coincident Lipschitz pairs.
pub const NEAR_OFFSET: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub samples: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// Passes iff `measured ≤ bound + tolerance`; NaN never passes.
    pub fn new(name: impl Into<String>, measured: f64, bound: f64, tolerance: f64, samples: u64, seed: u64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            tolerance,
            pass: measured <= bound + tolerance,
            samples,
            seed,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    format: &'static str,
    all_pass: bool,
    checks: &'a [Check],
}

impl VerificationReport {
    pub fn new(checks: Vec<Check>) -> Self {
        Self { checks }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        let doc = ReportDoc { format: REPORT_FORMAT, all_pass: self.all_pass(), checks: &self.checks };
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned plain-text table, one row per check.
    pub fn to_table(&self) -> String {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut out = format!(
            "{:<w$}  {:>14}  {:>14}  {:>9}  {:>8}  {}\n",
            "check", "measured", "bound", "tol", "samples", "result"
        );
        for c in &self.checks {
            out.push_str(&format!(
                "{:<w$}  {:>14.6e}  {:>14.6e}  {:>9.1e}  {:>8}  {}",
                c.name,
                c.measured,
                c.bound,
                c.tolerance,
                c.samples,
                if c.pass { "pass" } else { "FAIL" }
            ));
            if let Some(n) = &c.note {
                out.push_str(&format!("  ({n})"));
            }
            out.push('\n');
        }
        out
    }
}

/// The box `[lo, hi]^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub d: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn unit(d: usize) -> Self {
        Self { d, lo: 0.0, hi: 1.0 }
    }

    pub fn cube(d: usize, lo: f64, hi: f64) -> Self {
        Self { d, lo, hi }
    }

    fn map(&self, u: f64) -> f64 {
        (self.lo + (self.hi - self.lo) * u).clamp(self.lo, self.hi)
    }
}

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// Halton points with a seeded Cranley-Patterson shift; uniform random
/// coordinates beyond the tabulated primes.
pub fn low_discrepancy(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.random()).collect();
    (0..count)
        .map(|i| {
            (0..d)
                .map(|k| match PRIMES.get(k) {
                    Some(&p) => (radical_inverse(i as u64 + 1, p) + shift[k]).fract(),
                    None => rng.random(),
                })
                .collect()
        })
        .collect()
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..d).collect();
    fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

fn factorial(d: usize) -> usize {
    (1..=d).fold(1usize, |a, b| a.saturating_mul(b))
}

/// Lattice points, cell midpoints and Kuhn simplex barycenters at resolution
/// `n`, mapped into `domain`. Each family is included only while the running
/// total stays under a fixed limit.
pub fn structured_points(domain: &Domain, n: usize) -> Vec<Vec<f64>> {
    let d = domain.d;
    let nf = n as f64;
    let mut out = Vec::new();
    let lattice = (n + 1).checked_pow(d as u32).unwrap_or(usize::MAX);
    let cells = n.checked_pow(d as u32).unwrap_or(usize::MAX);
    let mut budget = STRUCTURED_LIMIT;
    let mut take = |count: usize| {
        if count <= budget {
            budget -= count;
            true
        } else {
            false
        }
    };
    let unflat = |mut k: usize, base: usize| -> Vec<usize> {
        let mut idx = vec![0; d];
        for slot in idx.iter_mut().rev() {
            *slot = k % base;
            k /= base;
        }
        idx
    };
    if take(lattice) {
        for k in 0..lattice {
            out.push(unflat(k, n + 1).iter().map(|&j| domain.map(j as f64 / nf)).collect());
        }
    }
    if take(cells) {
        for k in 0..cells {
            out.push(unflat(k, n).iter().map(|&j| domain.map((j as f64 + 0.5) / nf)).collect());
        }
    }
    if take(cells.saturating_mul(factorial(d))) {
        let perms = permutations(d);
        for k in 0..cells {
            let cell = unflat(k, n);
            for p in &perms {
                let mut x = vec![0.0; d];
                for (pos, &axis) in p.iter().enumerate() {
                    let u = (d - pos) as f64 / (d + 1) as f64;
                    let frac = if cell[axis] % 2 == 1 { 1.0 - u } else { u };
                    x[axis] = domain.map((cell[axis] as f64 + frac) / nf);
                }
                out.push(x);
            }
        }
    }
    out
}

/// Scan set: `num_points` shifted Halton points, plus structured points at
/// resolution `n` when given.
pub fn scan_points(domain: &Domain, num_points: usize, seed: u64, n: Option<usize>) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = low_discrepancy(domain.d, num_points, seed)
        .into_iter()
        .map(|p| p.into_iter().map(|u| domain.map(u)).collect())
        .collect();
    if let Some(n) = n {
        pts.extend(structured_points(domain, n));
    }
    pts
}

/// `max_x g(x)` over a point set, in parallel.
pub fn max_over<G>(points: &[Vec<f64>], g: G) -> f64
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    points
        .par_iter()
        .map(|x| g(x))
        .reduce(|| f64::NEG_INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

/// `max |target(x) - net(x)|` over the scan set.
pub fn sup_error_scan<F>(net: &ReluNet, target: F, domain: &Domain, num_points: usize, seed: u64, n: Option<usize>) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let pts = scan_points(domain, num_points, seed, n);
    pts.par_iter()
        .map_init(|| net.evaluator(), |ev, x| (target(x) - ev.eval1(x)).abs())
        .reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

/// Pairs for Lipschitz estimation: `num_pairs` uniform pairs, the same
/// number of near pairs at `l1` offset [`NEAR_OFFSET`], and every
/// axis-parallel lattice edge at resolution `n` when given.
pub fn lipschitz_pairs(domain: &Domain, num_pairs: usize, seed: u64, n: Option<usize>) -> Vec<(Vec<f64>, Vec<f64>)> {
    let d = domain.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(2 * num_pairs);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..d).map(|_| domain.map(rng.random())).collect() };
    for _ in 0..num_pairs {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        pairs.push((a, b));
    }
    for _ in 0..num_pairs {
        let a = draw(&mut rng);
        let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm: f64 = dir.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        let b: Vec<f64> = a
            .iter()
            .zip(&dir)
            .map(|(x, v)| (x + NEAR_OFFSET * v / norm).clamp(domain.lo, domain.hi))
            .collect();
        pairs.push((a, b));
    }
    if let Some(n) = n {
        let lattice = (n + 1).checked_pow(d as u32).unwrap_or(usize::MAX);
        if lattice.saturating_mul(d) <= STRUCTURED_LIMIT {
            for k in 0..lattice {
                let mut idx = vec![0; d];
                let mut r = k;
                for slot in idx.iter_mut().rev() {
                    *slot = r % (n + 1);
                    r /= n + 1;
                }
                let a: Vec<f64> = idx.iter().map(|&j| domain.map(j as f64 / n as f64)).collect();
                for axis in 0..d {
                    if idx[axis] < n {
                        let mut b = a.clone();
                        b[axis] = domain.map((idx[axis] + 1) as f64 / n as f64);
                        pairs.push((a.clone(), b));
                    }
                }
            }
        }
    }
    pairs
}

/// Largest `|net(x) - net(y)| / ‖x - y‖₁` over [`lipschitz_pairs`].
///
/// A lower estimate of the true `l1` Lipschitz constant.
pub fn empirical_lipschitz(net: &ReluNet, domain: &Domain, num_pairs: usize, seed: u64, n: Option<usize>) -> f64 {
    let pairs = lipschitz_pairs(domain, num_pairs, seed, n);
    pairs
        .par_iter()
        .map_init(
            || net.evaluator(),
            |ev, (a, b)| {
                let dist: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
                if dist == 0.0 {
                    return 0.0;
                }
                let fa = ev.eval1(a);
                let fb = ev.eval1(b);
                (fa - fb).abs() / dist
            },
        )
        .reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

/// `C_d = (8(d+1)² 16^d)^{1/(d+3)} + 2^{5/2} 16^{d/(d+3)} / (18(d+1))^{(d+1)/(d+3)}`.
pub fn c_d(d: usize) -> f64 {
    let df = d as f64;
    let e = 1.0 / (df + 3.0);
    let first = (8.0 * (df + 1.0).powi(2) * 16f64.powf(df)).powf(e);
    let second = 2f64.powf(2.5) * 16f64.powf(df * e) / (18.0 * (df + 1.0)).powf((df + 1.0) * e);
    first + second
}

/// Arguments of [`generalization_bound`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundArgs {
    /// Depth `Δ`.
    pub depth: u64,
    /// Width `W`.
    pub width: u64,
    /// Lipschitz constant `L` of the hypothesis class.
    pub lip: f64,
    /// Lipschitz constant of the loss.
    pub loss_lip: f64,
    pub d: usize,
    /// Sample count `N`.
    pub samples: u64,
    pub delta: f64,
    /// Accepted for completeness; it does not enter the formula.
    pub c: f64,
    pub c_dx: f64,
}

impl BoundArgs {
    pub fn new(depth: u64, width: u64, lip: f64, d: usize, samples: u64, delta: f64) -> Self {
        Self { depth, width, lip, loss_lip: 1.0, d, samples, delta, c: 1.0, c_dx: 1.0 }
    }
}

/// The three pieces of the bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundTerms {
    pub confidence: f64,
    pub parameter_term: f64,
    pub function_term: f64,
    pub total: f64,
}

/// `√(8 ln(4/δ)) / √N + 2 L_ℓ min{P, C_d L^{d/(d+3)} / N^{1/(d+3)}}` where
/// `P = 4/N^{3/2} + 26 ln N ln(2W) W^{3Δ/2} / (2^{max(0, Δ-2)} N) ·
/// (√d + C_dX √N + C_dX √ln(4/δ))`.
///
/// `P` is computed in log space and saturates to infinity.
pub fn generalization_bound(a: &BoundArgs) -> Result<f64> {
    Ok(bound_terms(a)?.total)
}

pub fn bound_terms(a: &BoundArgs) -> Result<BoundTerms> {
    if a.depth == 0 || a.width == 0 || a.samples == 0 {
        return Err(Error::input("depth, width and sample count must be at least 1"));
    }
    if !(a.delta > 0.0 && a.delta < 1.0) {
        return Err(Error::input(format!("confidence δ={} outside (0, 1)", a.delta)));
    }
    if !(a.lip >= 0.0 && a.loss_lip >= 0.0) || !a.lip.is_finite() || !a.loss_lip.is_finite() {
        return Err(Error::input("Lipschitz constants must be finite and non-negative"));
    }
    if !(a.c > 0.0 && a.c_dx > 0.0) || !a.c.is_finite() || !a.c_dx.is_finite() {
        return Err(Error::input("constants C and C_dX must be positive"));
    }
    if a.d == 0 {
        return Err(Error::input("d must be at least 1"));
    }
    let n = a.samples as f64;
    let w = a.width as f64;
    let depth = a.depth as f64;
    let d = a.d as f64;
    let log4d = (4.0 / a.delta).ln();
    let confidence = (8.0 * log4d).sqrt() / n.sqrt();

    let bracket = d.sqrt() + a.c_dx * n.sqrt() + a.c_dx * log4d.sqrt();
    let log_p = 26f64.ln() + n.ln().ln() + (2.0 * w).ln().ln() + 1.5 * depth * w.ln()
        - (depth - 2.0).max(0.0) * 2f64.ln()
        - n.ln()
        + bracket.ln();
    let parameter_term = 4.0 / n.powf(1.5) + log_p.exp();
    let function_term = c_d(a.d) * a.lip.powf(d / (d + 3.0)) / n.powf(1.0 / (d + 3.0));
    let total = confidence + 2.0 * a.loss_lip * parameter_term.min(function_term);
    Ok(BoundTerms { confidence, parameter_term, function_term, total })
}

/// Closed-form target used by the error checks.
pub type TargetFn<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Settings for [`verify_all`].
pub struct VerifyOptions<'a> {
    pub seed: u64,
    pub scan_points: usize,
    pub pairs: usize,
    pub kind: BuildKind,
    /// Closed-form target; when absent the error bound is checked against the
    /// grid interpolant.
    pub target: Option<TargetFn<'a>>,
}

impl Default for VerifyOptions<'_> {
    fn default() -> Self {
        Self { seed: 0, scan_points: 10_000, pairs: 10_000, kind: BuildKind::Flat, target: None }
    }
}

/// Interpolation, error bound, regularity, structure, size and support
/// checks for a net built from `grid`.
pub fn verify_all(net: &ReluNet, grid: &SampleGrid, modulus: &Modulus, opts: &VerifyOptions) -> VerificationReport {
    let (d, n) = (grid.d(), grid.n());
    let seed = opts.seed;
    let mut rep = VerificationReport::default();

    if net.input_dim() != d || net.output_dim() != 1 {
        rep.push(
            Check::new("shape", f64::INFINITY, 0.0, 0.0, 0, seed)
                .with_note(format!("net maps {} -> {}, grid has d={d}", net.input_dim(), net.output_dim())),
        );
        return rep;
    }

    let lattice: Vec<Vec<usize>> = grid.indices().collect();
    let interp = lattice
        .par_iter()
        .zip(grid.values())
        .map_init(|| net.evaluator(), |ev, (idx, &v)| (ev.eval1(&grid.point(idx)) - v).abs())
        .reduce(|| 0.0, f64::max);
    rep.push(Check::new("interpolation", interp, 0.0, 1e-9, lattice.len() as u64, seed));

    let unit = Domain::unit(d);
    let oracle = |x: &[f64]| cpwl_eval(grid, x).unwrap_or(f64::NAN);
    let eq = sup_error_scan(net, oracle, &unit, opts.scan_points, seed, Some(n));
    rep.push(Check::new("oracle_equivalence", eq, 0.0, 1e-9, opts.scan_points as u64, seed));

    let t = d as f64 / (2.0 * n as f64);
    match (opts.target, modulus.eval(t)) {
        (Some(f), Ok(bound)) => {
            let err = sup_error_scan(net, f, &unit, opts.scan_points, seed, Some(n));
            rep.push(Check::new("error_bound", err, bound, 1e-9, opts.scan_points as u64, seed));
        }
        (Some(_), Err(e)) => {
            rep.push(Check::new("error_bound", f64::NAN, f64::NAN, 1e-9, 0, seed).with_note(e.to_string()));
        }
        (None, _) => {}
    }

    let exact = exact_lipschitz_l1(grid);
    let emp = empirical_lipschitz(net, &unit, opts.pairs, seed, Some(n));
    rep.push(Check::new("lipschitz", emp, exact, 1e-9, opts.pairs as u64, seed));

    if matches!(opts.kind, BuildKind::Flat | BuildKind::Global) {
        let report = BuildReport::new(opts.kind.clone(), d, n, net.clone(), (0, 0, None));
        rep.extend(check_structure(&report, grid));
    }

    if opts.kind == BuildKind::Flat {
        let outer = Domain::cube(d, -2.0, 3.0);
        let margin = 1.0 / n as f64;
        let outside: Vec<Vec<f64>> = scan_points(&outer, opts.scan_points, seed, None)
            .into_iter()
            .filter(|x| x.iter().any(|&v| v < -margin || v > 1.0 + margin))
            .collect();
        let count = outside.len() as u64;
        let leak = max_over(&outside, |x| net.eval1(x).abs()).max(0.0);
        rep.push(Check::new("support", leak, 0.0, 0.0, count, seed));
    }
    rep
}
