use crate::error::{Error, Result};
use crate::net::ReluNet;

/// Continuous piecewise-linear function on the real line.
///
/// Stored as sorted knots with their values plus the two tail slopes. There
/// is always at least one knot.
#[derive(Clone, Debug, PartialEq)]
pub struct Pwl {
    knots: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl Pwl {
    /// `x -> a x + b`.
    pub fn affine(a: f64, b: f64) -> Self {
        Self {
            knots: vec![0.0],
            values: vec![b],
            left_slope: a,
            right_slope: a,
        }
    }

    /// Interpolant through `(knots[i], values[i])` with the given tail slopes.
    pub fn new(knots: Vec<f64>, values: Vec<f64>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::input("knots and values must be non-empty and of equal length"));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::input("knots must be strictly increasing"));
        }
        Ok(Self { knots, values, left_slope, right_slope })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_slopes(&self) -> (f64, f64) {
        (self.left_slope, self.right_slope)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        let last = k.len() - 1;
        if x <= k[0] {
            return self.values[0] + self.left_slope * (x - k[0]);
        }
        if x >= k[last] {
            return self.values[last] + self.right_slope * (x - k[last]);
        }
        let i = k.partition_point(|&t| t <= x);
        let (x0, x1) = (k[i - 1], k[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Slopes of the bounded segments, left to right.
    pub fn segment_slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
            .collect()
    }

    /// Largest absolute slope, tails included.
    pub fn lipschitz(&self) -> f64 {
        self.segment_slopes()
            .into_iter()
            .chain([self.left_slope, self.right_slope])
            .fold(0.0, |m, s| m.max(s.abs()))
    }

    /// `Σ c_i f_i + b`.
    pub fn combine(terms: &[(f64, &Pwl)], b: f64) -> Pwl {
        let mut knots: Vec<f64> = terms
            .iter()
            .filter(|(c, _)| *c != 0.0)
            .flat_map(|(_, p)| p.knots.iter().copied())
            .collect();
        knots.sort_by(f64::total_cmp);
        // the same break reached along two paths can differ by a few ulps
        knots.dedup_by(|b, a| *b - *a <= KNOT_MERGE * (1.0 + a.abs()));
        if knots.is_empty() {
            return Pwl::affine(0.0, b);
        }
        let values = knots
            .iter()
            .map(|&t| terms.iter().fold(b, |acc, (c, p)| if *c == 0.0 { acc } else { acc + c * p.eval(t) }))
            .collect();
        let (mut ls, mut rs) = (0.0, 0.0);
        for (c, p) in terms {
            ls += c * p.left_slope;
            rs += c * p.right_slope;
        }
        Pwl { knots, values, left_slope: ls, right_slope: rs }
    }

    /// `max(0, f)`, inserting knots where `f` crosses zero.
    pub fn relu(&self) -> Pwl {
        let mut knots = Vec::with_capacity(self.knots.len() + 2);
        let mut values = Vec::with_capacity(self.knots.len() + 2);
        let (k, v) = (&self.knots, &self.values);
        if self.left_slope != 0.0 {
            let z = k[0] - v[0] / self.left_slope;
            if z < k[0] {
                knots.push(z);
                values.push(0.0);
            }
        }
        for i in 0..k.len() {
            if i > 0 && (v[i - 1] < 0.0) != (v[i] < 0.0) && v[i - 1] != 0.0 && v[i] != 0.0 {
                let z = k[i - 1] + (k[i] - k[i - 1]) * v[i - 1] / (v[i - 1] - v[i]);
                if z > k[i - 1] && z < k[i] {
                    knots.push(z);
                    values.push(0.0);
                }
            }
            knots.push(k[i]);
            values.push(v[i].max(0.0));
        }
        let last = k.len() - 1;
        if self.right_slope != 0.0 {
            let z = k[last] - v[last] / self.right_slope;
            if z > k[last] {
                knots.push(z);
                values.push(0.0);
            }
        }
        let far_left_positive = self.left_slope < 0.0 || (self.left_slope == 0.0 && v[0] > 0.0);
        let far_right_positive = self.right_slope > 0.0 || (self.right_slope == 0.0 && v[last] > 0.0);
        Pwl {
            knots,
            values,
            left_slope: if far_left_positive { self.left_slope } else { 0.0 },
            right_slope: if far_right_positive { self.right_slope } else { 0.0 },
        }
    }
}

const KNOT_MERGE: f64 = 1e-12;

/// Exact piecewise-linear form of a net with one input and one output.
pub fn net_to_pwl(net: &ReluNet) -> Result<Pwl> {
    if net.input_dim() != 1 || net.output_dim() != 1 {
        return Err(Error::input("net_to_pwl needs a scalar-to-scalar net"));
    }
    let x = Pwl::affine(1.0, 0.0);
    let mut cur = vec![x];
    let last = net.layers().len() - 1;
    for (li, layer) in net.layers().iter().enumerate() {
        let mut next = Vec::with_capacity(layer.rows());
        for r in 0..layer.rows() {
            let terms: Vec<(f64, &Pwl)> = layer
                .row(r)
                .iter()
                .zip(&cur)
                .filter(|(w, _)| **w != 0.0)
                .map(|(&w, p)| (w, p))
                .collect();
            let pre = Pwl::combine(&terms, layer.bias()[r]);
            next.push(if li < last { pre.relu() } else { pre });
        }
        cur = next;
    }
    Ok(cur.pop().expect("one output"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Layer;

    #[test]
    fn relu_splits_segments() {
        let p = Pwl::new(vec![0.0, 2.0], vec![-1.0, 1.0], 0.0, 0.0).unwrap();
        let r = p.relu();
        assert_eq!(r.knots(), &[0.0, 1.0, 2.0]);
        assert_eq!(r.eval(1.5), 0.5);
        assert_eq!(r.eval(-5.0), 0.0);
    }

    #[test]
    fn tails_cross_zero() {
        let r = Pwl::affine(-2.0, 1.0).relu();
        assert_eq!(r.eval(-1.0), 3.0);
        assert_eq!(r.eval(0.5), 0.0);
        assert_eq!(r.eval(9.0), 0.0);
        assert_eq!(r.lipschitz(), 2.0);
    }

    #[test]
    fn abs_net_is_recovered() {
        let l1 = Layer::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        let l2 = Layer::new(vec![vec![1.0, 1.0]], vec![0.0]).unwrap();
        let net = ReluNet::new(1, vec![l1, l2]).unwrap();
        let p = net_to_pwl(&net).unwrap();
        for x in [-3.0, -0.5, 0.0, 0.25, 4.0] {
            assert_eq!(p.eval(x), x.abs());
        }
        assert_eq!(p.lipschitz(), 1.0);
    }
}
