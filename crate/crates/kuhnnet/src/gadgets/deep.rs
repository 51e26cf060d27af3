//! Memorizer with a prescribed width profile `n_1, ..., n_L`.
//!
//! Samples go into `L - 1` batches. Batch `b` is memorized by a two-layer
//! plan whose first layer lives in hidden layer `b` and whose second layer
//! lives in hidden layer `b + 1`, so consecutive batches overlap by one
//! layer. Three separation points `X_B < Y_B < Z_B` sit between batches. A
//! slot of layer `b + 1` holds a second-layer neuron of batch `b` that is also
//! tweaked to reproduce `σ(x - B)` for a first-layer break `B` of batch
//! `b + 1` on `[Z_{b+1}, ∞)`. Each batch output is clamped to its own interval
//! and the residual slopes are fixed by neurons on the separation points.

use crate::compose::{LayerDraft, Lin, NetBuilder};
use crate::error::{Error, Result};
use crate::gadgets::memorize::{plan_two_layer, Samples1D, TwoLayerPlan};
use crate::gadgets::pwl::net_to_pwl;
use crate::net::ReluNet;

/// Number of samples the profile can hold: `Σ_{b<L} (k_b N_b - 2)` with
/// `k_b = n_b - 11` and `N_b = ⌈(n_{b+1} - 9) / 4⌉`.
///
/// A layer hosting batch `b`'s second layer needs `4 N_b - 2` rows plus at
/// most 8 carries, which the rounded-up `N_b` still leaves room for.
/// Widths of 11 or less give negative terms; the caller validates.
pub fn deep_capacity(widths: &[usize]) -> i64 {
    widths
        .windows(2)
        .map(|w| {
            let (k, n) = batch_shape(w[0], w[1]);
            k as i64 * n as i64 - 2
        })
        .sum()
}

fn batch_shape(w: usize, w_next: usize) -> (usize, usize) {
    (w.saturating_sub(11), w_next.saturating_sub(9).div_ceil(4))
}

struct Batch {
    k: usize,
    n: usize,
    start: usize,
    len: usize,
}

struct Layout {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    plans: Vec<Option<TwoLayerPlan>>,
}

struct Shape<'a> {
    w: &'a [f64],
    u: &'a [f64],
    v: &'a [f64],
    lin: f64,
    konst: f64,
}

/// Memorizes `samples` with hidden widths at most `widths`.
///
/// Needs `L ≥ 3` layers, every width above 11 and `K ≤ deep_capacity`.
/// The result interpolates the samples linearly and is constant outside
/// `[x_1, x_K]`.
///
/// Weights grow with the number of samples per batch and compound across
/// batches, and the rounding error tracks the largest weight (about
/// `1e-16 · max|w|`). Profiles up to a few hundred samples stay near 1e-9.
pub fn build_memorizer_deep(samples: &Samples1D, widths: &[usize]) -> Result<ReluNet> {
    let l = widths.len();
    if l < 3 {
        return Err(Error::input(format!("need at least 3 hidden layers, got {l}")));
    }
    if let Some(w) = widths.iter().find(|&&w| w <= 11) {
        return Err(Error::input(format!("every width must exceed 11, got {w}")));
    }
    if samples.is_empty() {
        return Err(Error::input("memorizer needs at least one sample"));
    }
    let k = samples.len();
    let capacity = deep_capacity(widths);
    if k as i64 > capacity {
        return Err(Error::Capacity { requested: k, capacity });
    }

    let mut batches = Vec::with_capacity(l - 1);
    let mut next = 0;
    for b in 0..l - 1 {
        let (kb, nb) = batch_shape(widths[b], widths[b + 1]);
        let room = (kb * nb).saturating_sub(2);
        let len = room.min(k - next);
        batches.push(Batch { k: kb, n: nb, start: next, len });
        next += len;
    }
    debug_assert_eq!(next, k);

    let layout = layout(samples, &batches)?;
    let zero = vec![0.0; l];
    let probe = Shape { w: &zero[..l - 1], u: &zero, v: &zero, lin: 0.0, konst: 0.0 };
    let (_, lips) = assemble(&layout, &probe, true)?;

    let w: Vec<f64> = lips.iter().map(|o| o.map_or(0.0, |lip| lip + 1.0)).collect();
    let (u, v) = edge_slopes(samples, &layout, &w);
    let lin: f64 = w.iter().sum();
    let konst = samples.ys()[0] - w.iter().zip(&layout.z).map(|(wb, zb)| wb * zb).sum::<f64>();
    let shape = Shape { w: &w, u: &u, v: &v, lin, konst };
    let (net, _) = assemble(&layout, &shape, false)?;
    Ok(net)
}

fn layout(samples: &Samples1D, batches: &[Batch]) -> Result<Layout> {
    let xs = samples.xs();
    let k = xs.len();
    let l = batches.len() + 1;
    // triple B sits in the gap after the samples of batches 0..B
    let gap_of: Vec<usize> = (0..l)
        .map(|b| batches[..b].iter().map(|bt| bt.len).sum())
        .collect();
    let span = (xs[k - 1] - xs[0]).max(1.0);
    let mut pts = vec![0.0; 3 * l];
    let mut b = 0;
    while b < l {
        let g = gap_of[b];
        let mut e = b;
        while e < l && gap_of[e] == g {
            e += 1;
        }
        let lo = if g == 0 { xs[0] - span } else { xs[g - 1] };
        let hi = if g == k { xs[k - 1] + span } else { xs[g] };
        let count = 3 * (e - b);
        for i in 0..count {
            pts[3 * b + i] = lo + (hi - lo) * (i + 1) as f64 / (count + 1) as f64;
        }
        b = e;
    }
    let mut merged: Vec<f64> = pts.clone();
    merged.extend_from_slice(xs);
    merged.sort_by(f64::total_cmp);
    if merged.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::input("samples too close together to place separation points"));
    }
    let x: Vec<f64> = (0..l).map(|b| pts[3 * b]).collect();
    let y: Vec<f64> = (0..l).map(|b| pts[3 * b + 1]).collect();
    let z: Vec<f64> = (0..l).map(|b| pts[3 * b + 2]).collect();

    let mut plans = Vec::with_capacity(l - 1);
    for (b, bt) in batches.iter().enumerate() {
        if bt.len == 0 {
            plans.push(None);
            continue;
        }
        let (za, xb) = (z[b], x[b + 1]);
        let (fa, fb) = (samples.interpolate(za), samples.interpolate(xb));
        let chord = |t: f64| fa + (fb - fa) * (t - za) / (xb - za);
        let mut pairs = Vec::with_capacity(bt.len + 2);
        pairs.push((za, 0.0));
        let range = bt.start..bt.start + bt.len;
        for (&xi, &yi) in xs[range.clone()].iter().zip(&samples.ys()[range]) {
            pairs.push((xi, yi - chord(xi)));
        }
        pairs.push((xb, 0.0));
        plans.push(Some(plan_two_layer(&Samples1D::new(pairs)?, bt.k, bt.n)?));
    }
    Ok(Layout { x, y, z, plans })
}

/// Slope changes at `X_B` and `Z_B` that make the clamped sum match the
/// interpolant outside the batch intervals.
fn edge_slopes(samples: &Samples1D, lay: &Layout, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let l = lay.x.len();
    let slope = |a: f64, b: f64| (samples.interpolate(b) - samples.interpolate(a)) / (b - a);
    // excess slope of f - Σ Q_b over [X_B, Z_B] and over (Z_b, X_{b+1})
    let gap: Vec<f64> = (0..l).map(|b| slope(lay.x[b], lay.z[b])).collect();
    let inner: Vec<f64> = (0..l - 1).map(|b| slope(lay.z[b], lay.x[b + 1]) - w[b]).collect();
    let u = (0..l)
        .map(|b| gap[b] - if b == 0 { 0.0 } else { inner[b - 1] })
        .collect();
    let v = (0..l)
        .map(|b| if b + 1 < l { inner[b] } else { 0.0 } - gap[b])
        .collect();
    (u, v)
}

struct Sep {
    x: Lin,
    y: Option<Lin>,
    z: Lin,
}

fn separation(d: &mut LayerDraft, x: &Lin, lay: &Layout, b: usize) -> Sep {
    let l = lay.x.len();
    Sep {
        x: d.relu(x.clone() + (-lay.x[b])),
        y: (b >= 1 && b + 1 < l).then(|| d.relu(x.clone() + (-lay.y[b]))),
        z: d.relu(x.clone() + (-lay.z[b])),
    }
}

fn plus(d: &mut LayerDraft, v: Lin) -> Lin {
    let v = v.compact();
    if v.is_zero() {
        Lin::zero()
    } else {
        d.keep(v)
    }
}

/// Builds the net. With `probe` set, also returns the exact Lipschitz
/// constant of every batch output before clamping.
fn assemble(lay: &Layout, sh: &Shape, probe: bool) -> Result<(ReluNet, Vec<Option<f64>>)> {
    let l = lay.x.len();
    let mut lips = vec![None; l - 1];
    let mut nb = NetBuilder::new(1);
    let input = nb.inputs().remove(0);

    // x is carried as σ(x - floor) + floor; left of `floor` every other
    // neuron is off too, so the net is constant there either way
    let floor = lay.x[0] - 1.0;
    let carry = |d: &mut LayerDraft, x: &Lin| d.relu(x.clone() + (-floor)) + floor;

    // layer 1
    let mut d = nb.begin();
    let mut h = lay.plans[0].as_ref().map(|p| p.first_layer(&mut d, &input));
    let mut sep = separation(&mut d, &input, lay, 1);
    let mut x = carry(&mut d, &input);
    nb.push(d);

    let mut phi_prev: Option<Lin> = None;
    // clamped batch outputs and separation terms, summed into one carry
    let mut acc = Lin::zero();
    let mut q_pending = Lin::zero();

    for layer in 2..=l {
        let p = layer - 2;
        let q = layer - 1;
        let plan_p = lay.plans[p].as_ref();
        let plan_q = if q + 1 < l { lay.plans[q].as_ref() } else { None };
        let g_count = plan_p.map_or(0, |pl| pl.rows.len());
        let b_count = plan_q.map_or(0, |pl| pl.breaks.len());

        let mut d = nb.begin();
        let x_new = carry(&mut d, &x);
        let mut hs = Vec::with_capacity(g_count);
        let mut mimic = Vec::with_capacity(b_count);
        for j in 0..g_count.max(b_count) {
            if j < g_count {
                let pl = plan_p.expect("rows imply a plan");
                let hp = h.as_ref().expect("plan has first layer");
                let mut g = pl.row_form(j, hp);
                if j < b_count {
                    let bj = plan_q.expect("breaks imply a plan").breaks[j];
                    let row = &pl.rows[j];
                    let xq = lay.x[q];
                    let at = |t: f64| {
                        row.coeffs
                            .iter()
                            .zip(&pl.breaks)
                            .fold(row.bias, |acc, (c, b)| acc + c * (t - b).max(0.0))
                    };
                    let (gx, yq) = (at(xq), lay.y[q]);
                    let s0: f64 = row.coeffs.iter().sum();
                    let g_at_y = gx + s0 * (yq - xq);
                    // |gy| at least the row's size, so σ(g)/s stays flat
                    // wherever the row is still live
                    let size = pl.breaks.iter().map(|&b| at(b).abs()).fold(gx.abs().max(g_at_y.abs()), f64::max).max(1.0);
                    let (gy, pk) = if g_at_y.abs() >= size {
                        (g_at_y, 0.0)
                    } else {
                        let sign = if g_at_y != 0.0 { g_at_y.signum() } else if gx < 0.0 { -1.0 } else { 1.0 };
                        (sign * size, (sign * size - gx) / (yq - xq) - s0)
                    };
                    let s = -gy / (bj - yq);
                    let qk = s - (s0 + pk);
                    let sy = sep.y.clone().expect("interior separation has Y");
                    g = g + sep.x.clone() * pk + sy * qk;
                    let hn = d.relu(g);
                    mimic.push(if s > 0.0 {
                        hn.clone() * (1.0 / s)
                    } else {
                        x_new.clone() + (-bj) - hn.clone() * (1.0 / s)
                    });
                    hs.push(hn);
                } else {
                    hs.push(d.relu(g));
                }
            } else {
                let bj = plan_q.expect("breaks imply a plan").breaks[j];
                mimic.push(d.relu(x.clone() + (-bj)));
            }
        }
        let phi = plan_p.map(|pl| pl.output_form(&hs));

        let next_sep = separation(&mut d, &x, lay, if layer < l { layer } else { 0 });
        let q_new = clamp(&mut d, lay, sh, layer, phi_prev.take(), &x, &x_new);
        let acc_new = plus(&mut d, acc + q_pending + sep.x.clone() * sh.u[q] + sep.z.clone() * sh.v[q]);
        nb.push(d);

        if probe {
            if let Some(f) = &phi {
                let pwl = net_to_pwl(&nb.snapshot(&[f.clone().compact()]))?;
                lips[p] = Some(pwl.lipschitz());
            }
        }
        h = plan_q.map(|_| mimic);
        phi_prev = phi;
        sep = next_sep;
        acc = acc_new;
        q_pending = q_new;
        x = x_new;
    }

    // final hidden layer
    let mut d = nb.begin();
    let x_new = carry(&mut d, &x);
    let q_last = clamp(&mut d, lay, sh, l + 1, phi_prev.take(), &x, &x_new);
    let acc_new = plus(&mut d, acc + q_pending + sep.x.clone() * sh.u[0] + sep.z.clone() * sh.v[0]);
    nb.push(d);
    let out = (acc_new + q_last + x_new * sh.lin + sh.konst).compact();
    Ok((nb.finish(&[out]), lips))
}

/// Clamp of batch `layer - 3` to `[Z_c, X_{c+1}]`, shifted by its linear part.
fn clamp(
    d: &mut LayerDraft,
    lay: &Layout,
    sh: &Shape,
    layer: usize,
    phi: Option<Lin>,
    x_prev: &Lin,
    x_new: &Lin,
) -> Lin {
    let (Some(phi), Some(c)) = (phi, layer.checked_sub(3)) else {
        return Lin::zero();
    };
    let wc = sh.w[c];
    let qv = phi + x_prev.clone() * wc;
    let lo = d.relu(qv.clone() + (-wc * lay.z[c]));
    let hi = d.relu(qv + (-wc * lay.x[c + 1]));
    lo - hi + Lin::konst(wc * lay.z[c]) - x_new.clone() * wc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::pwl::net_to_pwl;

    fn wave(k: usize) -> Samples1D {
        Samples1D::new(
            (0..k)
                .map(|i| {
                    let x = i as f64 / k as f64;
                    (x, (7.0 * x).sin() + if i % 3 == 0 { 0.5 } else { 0.0 })
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn capacity_formula() {
        assert_eq!(deep_capacity(&[20, 20, 20]), 2 * (9 * 3 - 2));
        assert_eq!(deep_capacity(&[13, 13, 13]), 0);
        assert_eq!(deep_capacity(&[12, 17, 30]), 6 * 6 - 2);
    }

    #[test]
    fn memorizes_full_capacity() {
        let widths = [20, 20, 20];
        let k = deep_capacity(&widths) as usize;
        let smp = wave(k);
        let net = build_memorizer_deep(&smp, &widths).unwrap();
        for (x, y) in smp.xs().iter().zip(smp.ys()) {
            assert!((net.eval1(&[*x]) - y).abs() < 1e-7, "at {x}");
        }
        assert_eq!(net.depth(), widths.len() + 1);
        for (w, cap) in net.widthvec().iter().zip(widths.iter().chain([&8])) {
            assert!(w <= cap, "{:?}", net.widthvec());
        }
        let p = net_to_pwl(&net).unwrap();
        assert!((p.lipschitz() - smp.max_slope()).abs() < 1e-6);
    }

    #[test]
    fn partial_fill_and_empty_batches() {
        let widths = [16, 20, 25, 14];
        let smp = wave(9);
        let net = build_memorizer_deep(&smp, &widths).unwrap();
        for (x, y) in smp.xs().iter().zip(smp.ys()) {
            assert!((net.eval1(&[*x]) - y).abs() < 1e-7);
        }
        assert!((net.eval1(&[-3.0]) - smp.ys()[0]).abs() < 1e-7);
        assert!((net.eval1(&[4.0]) - smp.ys()[8]).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_profiles() {
        let smp = wave(4);
        assert!(matches!(build_memorizer_deep(&smp, &[20, 20]), Err(Error::Input(_))));
        assert!(matches!(build_memorizer_deep(&smp, &[20, 11, 20]), Err(Error::Input(_))));
        assert!(matches!(
            build_memorizer_deep(&wave(51), &[20, 20, 20]),
            Err(Error::Capacity { requested: 51, capacity: 50 })
        ));
    }
}
