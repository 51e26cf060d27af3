//! Step-function baseline: `2d + 1` shifted piecewise-constant approximators
//! combined by a median.
//!
//! Channel `k` snaps each coordinate to a plateau index with a staircase
//! `p_k` whose ramps live in thin bands (the trifling region `Ω_k`),
//! encodes the cuboid index as an integer `π_k`, and looks the sample up with
//! a 1D memorizer `φ_k`. Every point lies outside at least `d + 1` of the
//! `Ω_k`, so the median of the channels is accurate everywhere. The ramps are
//! steep, which is what this baseline is meant to show.

use crate::builder::{BuildKind, BuildOptions, BuildReport};
use crate::compose::{LayerDraft, Lin, NetBuilder};
use crate::error::{Error, Result};
use crate::gadgets::{build_median_net, ceil_sqrt, plan_two_layer, Samples1D};
use crate::grid::check_lattice;
use crate::net::ReluNet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TriflingSpec {
    pub d: usize,
    pub n: usize,
    /// Band index in `1..=2d+1`.
    pub k: usize,
}

impl TriflingSpec {
    pub fn new(d: usize, n: usize, k: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::input("d and n must be positive"));
        }
        if !(1..=2 * d + 1).contains(&k) {
            return Err(Error::input(format!("band index {k} outside 1..={}", 2 * d + 1)));
        }
        Ok(Self { d, n, k })
    }

    /// The `n` open bands `((k-1)/(2d+1) + j) / n .. (k/(2d+1) + j) / n`.
    pub fn bands(&self) -> Vec<(f64, f64)> {
        let m = (2 * self.d + 1) as f64;
        let n = self.n as f64;
        let k = self.k as f64;
        (0..self.n)
            .map(|j| {
                let j = j as f64;
                (((k - 1.0) / m + j) / n, (k / m + j) / n)
            })
            .collect()
    }

    /// Bands that separate two plateaus of positive length. For `k = 1` the
    /// first band starts at 0 and for `k = 2d+1` the last band ends at 1; the
    /// plateau beyond each is a single point and is merged.
    pub fn ramps(&self) -> Vec<(f64, f64)> {
        let last = 2 * self.d + 1;
        let bands = self.bands();
        let count = bands.len();
        bands
            .into_iter()
            .enumerate()
            .filter(|&(j, _)| !(self.k == 1 && j == 0) && !(self.k == last && j + 1 == count))
            .map(|(_, b)| b)
            .collect()
    }

    /// Closed plateaus in `[0, 1]`, left to right; plateau `i` maps to `i`.
    pub fn plateaus(&self) -> Vec<(f64, f64)> {
        let ramps = self.ramps();
        let mut out = Vec::with_capacity(ramps.len() + 1);
        let mut lo = 0.0;
        for &(a, b) in &ramps {
            out.push((lo, a));
            lo = b;
        }
        out.push((lo, 1.0));
        out
    }
}

/// True iff some coordinate lies in one of the open bands of `spec`.
pub fn in_trifling(spec: &TriflingSpec, x: &[f64]) -> bool {
    let bands = spec.bands();
    x.iter().any(|&v| bands.iter().any(|&(a, b)| a < v && v < b))
}

fn ramp_sum(l: &mut LayerDraft, x: &Lin, ramps: &[(f64, f64)]) -> Lin {
    let mut acc = Lin::zero();
    for &(a, b) in ramps {
        let lo = l.relu(x.clone() + -a);
        let hi = l.relu(x.clone() + -b);
        acc = acc + (lo - hi) * (1.0 / (b - a));
    }
    acc
}

/// The staircase `p_k` on one coordinate: plateau `i` maps to `i`, linear in
/// between. Width `2 × ramps ≤ 2n`, depth 1.
pub fn build_projection_pk(spec: &TriflingSpec) -> ReluNet {
    let mut nb = NetBuilder::new(1);
    let x = nb.inputs().remove(0);
    let mut l = nb.begin();
    let p = ramp_sum(&mut l, &x, &spec.ramps());
    if l.len() == 0 {
        l.relu(Lin::zero());
    }
    nb.push(l);
    nb.finish(&[p.compact()])
}

/// `π_k(x) = Σ_i (n+1)^{i-1} p_k(x_i)`, the first coordinate least
/// significant.
pub fn build_pi_k(spec: &TriflingSpec) -> ReluNet {
    let mut nb = NetBuilder::new(spec.d);
    let xs = nb.inputs();
    let mut l = nb.begin();
    let pi = pi_form(&mut l, &xs, spec);
    if l.len() == 0 {
        l.relu(Lin::zero());
    }
    nb.push(l);
    nb.finish(&[pi.compact()])
}

fn pi_form(l: &mut LayerDraft, xs: &[Lin], spec: &TriflingSpec) -> Lin {
    let ramps = spec.ramps();
    let base = (spec.n + 1) as f64;
    let mut acc = Lin::zero();
    let mut scale = 1.0;
    for x in xs {
        acc = acc + ramp_sum(l, x, &ramps) * scale;
        scale *= base;
    }
    acc
}

/// Centers of the cuboids of `Q_k` with their `π_k` values.
pub fn cuboid_centers(spec: &TriflingSpec) -> Vec<(u64, Vec<f64>)> {
    let plats = spec.plateaus();
    let per = plats.len();
    let total = per.pow(spec.d as u32);
    let base = (spec.n + 1) as u64;
    (0..total)
        .map(|mut c| {
            let mut code = 0u64;
            let mut scale = 1u64;
            let mut x = Vec::with_capacity(spec.d);
            for _ in 0..spec.d {
                let i = c % per;
                c /= per;
                let (a, b) = plats[i];
                x.push(0.5 * (a + b));
                code += i as u64 * scale;
                scale *= base;
            }
            (code, x)
        })
        .collect()
}

/// `ν (d² / (n (2d+1)))^α` for `d ≥ 2`, `ν / (2n²)^α` for `d = 1`.
pub fn sota_error_bound(nu: f64, alpha: f64, d: usize, n: usize) -> f64 {
    let (d, n) = (d as f64, n as f64);
    if d == 1.0 {
        nu / (2.0 * n * n).powf(alpha)
    } else {
        nu * (d * d / (n * (2.0 * d + 1.0))).powf(alpha)
    }
}

/// `ν (n+1)^d (2d+1) d^α`.
pub fn sota_lipschitz_bound(nu: f64, alpha: f64, d: usize, n: usize) -> f64 {
    nu * ((n + 1) as f64).powi(d as i32) * (2 * d + 1) as f64 * (d as f64).powf(alpha)
}

/// `max{(2n+3)d, 6d+3, 2⌈(n+1)^{d/2}⌉ + 2d}`.
pub fn sota_width_bound(d: usize, n: usize) -> usize {
    let s = ceil_sqrt((n as u128 + 1).pow(d as u32)) as usize;
    ((2 * n + 3) * d).max(6 * d + 3).max(2 * s + 2 * d)
}

/// Builds the baseline for `f`, sampled at cuboid centers (or, for `d = 1`,
/// at the points `i / n²`).
pub fn build_sota<F>(f: F, nu: f64, alpha: f64, d: usize, n: usize) -> Result<BuildReport>
where
    F: Fn(&[f64]) -> f64,
{
    build_sota_with(f, nu, alpha, d, n, &BuildOptions::default())
}

pub fn build_sota_with<F>(f: F, nu: f64, alpha: f64, d: usize, n: usize, opts: &BuildOptions) -> Result<BuildReport>
where
    F: Fn(&[f64]) -> f64,
{
    if d == 0 || n == 0 {
        return Err(Error::input("d and n must be positive"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) || !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::input("need ν ≥ 0 and α in (0, 1]"));
    }
    check_lattice(d, n, opts.max_lattice)?;
    let bounds = (sota_width_bound(d, n), 23 * d + 9, None);
    if d == 1 {
        let net = one_dim(&f, n, opts)?;
        return Ok(BuildReport::new(BuildKind::Baseline, d, n, net, bounds));
    }

    let channels = 2 * d + 1;
    let specs: Vec<TriflingSpec> = (1..=channels).map(|k| TriflingSpec::new(d, n, k)).collect::<Result<_>>()?;
    let mut samples: Vec<Vec<(f64, f64)>> = Vec::with_capacity(channels);
    for s in &specs {
        let mut pts = Vec::new();
        for (code, x) in cuboid_centers(s) {
            let v = f(&x);
            if !v.is_finite() {
                return Err(Error::input(format!("non-finite sample at {x:?}")));
            }
            pts.push((code as f64, v));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        samples.push(pts);
    }
    let shift = samples.iter().flatten().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let s = ceil_sqrt((n as u128 + 1).pow(d as u32)) as usize;
    let (m, big_n) = (2 * s, (2 * s + 2) / 4);
    let plans = samples
        .into_iter()
        .map(|pts| {
            let shifted = pts.into_iter().map(|(c, v)| (c, v - shift)).collect();
            plan_two_layer(&Samples1D::new(shifted)?, m, big_n)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut nb = NetBuilder::new(d);
    let mut xs = nb.inputs();
    // one layer per π_k, carrying x and the earlier π's
    let mut pis: Vec<Lin> = Vec::with_capacity(channels);
    for (k, spec) in specs.iter().enumerate() {
        let mut l = nb.begin();
        let pi = pi_form(&mut l, &xs, spec);
        let carried: Vec<Lin> = pis.iter().map(|p| l.relu(p.clone())).collect();
        let last = k + 1 == channels;
        let next_xs: Vec<Lin> = if last { Vec::new() } else { xs.iter().map(|x| l.relu(x.clone())).collect() };
        nb.push(l);
        pis = carried;
        pis.push(pi);
        xs = next_xs;
    }
    // two layers per φ_k; the other channels ride along
    let mut vals = pis;
    for (k, plan) in plans.iter().enumerate() {
        let mut l = nb.begin();
        let h = plan.first_layer(&mut l, &vals[k]);
        let mut carried: Vec<Lin> = vals.iter().enumerate().map(|(i, v)| if i == k { Lin::zero() } else { l.relu(v.clone()) }).collect();
        nb.push(l);
        let mut l = nb.begin();
        let hs: Vec<Lin> = (0..plan.rows.len()).map(|r| l.relu(plan.row_form(r, &h))).collect();
        carried = carried.into_iter().enumerate().map(|(i, v)| if i == k { v } else { l.relu(v) }).collect();
        nb.push(l);
        carried[k] = plan.output_form(&hs);
        vals = carried;
    }
    let median = build_median_net(d);
    let out = nb.append(&median, &vals).remove(0) + shift;
    let net = nb.finish(&[out.compact()]);
    Ok(BuildReport::new(BuildKind::Baseline, d, n, net, bounds))
}

fn one_dim<F>(f: &F, n: usize, opts: &BuildOptions) -> Result<ReluNet>
where
    F: Fn(&[f64]) -> f64,
{
    let steps = n.checked_mul(n).ok_or_else(|| Error::input("n too large"))?;
    if steps as u128 + 1 > opts.max_lattice {
        return Err(Error::Resource { requested: steps as u128 + 1, cap: opts.max_lattice });
    }
    let pts = (0..=steps)
        .map(|i| {
            let x = i as f64 / steps as f64;
            let v = f(&[x]);
            if v.is_finite() {
                Ok((x, v))
            } else {
                Err(Error::input(format!("non-finite sample at {x}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let m = 2 * n + 1;
    let big_n = (2 * n + 2) / 4;
    Ok(plan_two_layer(&Samples1D::new(pts)?, m, big_n.max(1))?.to_net())
}
