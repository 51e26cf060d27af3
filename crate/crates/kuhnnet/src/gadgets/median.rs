use crate::compose::{Lin, NetBuilder};
use crate::net::ReluNet;

/// Median of `2d + 1` non-negative inputs.
///
/// Stage one tracks the running minimum of the inputs and the running minimum
/// `s` of the total distance `D(n_k) = Σ_j |n_k - n_j|`. Stage two starts at
/// the minimum and takes `d` steps `x ← x + (D(x) - s) / (2d + 1 - 2i)`,
/// each of which lands on the next order statistic or on the median. Inputs
/// stay available throughout because every layer either carries them or can
/// recover them from `σ(x - n_j)` and `σ(n_j - x)`.
///
/// Width is `6d + 3`, depth `5d + 1`. Negative inputs break the single-channel
/// carries and give meaningless output.
pub fn build_median_net(d: usize) -> ReluNet {
    let m = 2 * d + 1;
    let mut nb = NetBuilder::new(m);
    let inputs = nb.inputs();

    // block 1: D(n_1)
    let mut l = nb.begin();
    let mut n: Vec<Lin> = inputs.iter().map(|v| l.relu(v.clone())).collect();
    let mut dist = Lin::zero();
    for j in 1..m {
        dist = dist + l.relu(inputs[0].clone() - inputs[j].clone());
        dist = dist + l.relu(inputs[j].clone() - inputs[0].clone());
    }
    nb.push(l);
    let mut low = n[0].clone();
    let mut s = dist;

    for k in 1..m {
        let mut l = nb.begin();
        let carried: Vec<Lin> = n.iter().map(|v| l.relu(v.clone())).collect();
        let mut dk = Lin::zero();
        for j in (0..m).filter(|&j| j != k) {
            dk = dk + l.relu(n[k].clone() - n[j].clone());
            dk = dk + l.relu(n[j].clone() - n[k].clone());
        }
        let low_c = l.relu(low);
        let s_c = l.relu(s);
        nb.push(l);

        // min(a, b) = σ(a+b)/2 - (σ(a-b) + σ(b-a))/2 for a, b ≥ 0
        let mut l = nb.begin();
        n = carried.iter().map(|v| l.relu(v.clone())).collect();
        let nk = carried[k].clone();
        let lp = l.relu(low_c.clone() + nk.clone());
        let la = l.relu(low_c.clone() - nk.clone());
        let lb = l.relu(nk - low_c);
        let sp = l.relu(s_c.clone() + dk.clone());
        let sa = l.relu(s_c.clone() - dk.clone());
        let sb = l.relu(dk - s_c);
        nb.push(l);
        low = (lp - la - lb) * 0.5;
        s = (sp - sa - sb) * 0.5;
    }

    let mut x = low;
    for i in 1..=d {
        let mut l = nb.begin();
        let mut next_n = Vec::with_capacity(m);
        let mut dist = Lin::zero();
        let mut parts = Vec::with_capacity(m);
        for nj in &n {
            let above = l.relu(x.clone() - nj.clone());
            let below = l.relu(nj.clone() - x.clone());
            dist = dist + above.clone() + below.clone();
            parts.push((above, below));
        }
        let xc = l.relu(x);
        let sc = l.relu(s);
        nb.push(l);
        for (above, below) in parts {
            next_n.push(xc.clone() - above + below);
        }
        let step = 1.0 / (m - 2 * i) as f64;
        x = xc + (dist - sc.clone()) * step;
        s = sc;
        n = next_n;
    }
    nb.finish(&[x.compact()])
}
