//! Layer-by-layer network assembly.
//!
//! A [`Lin`] is an affine form over the neurons of the most recently pushed
//! layer (or over the inputs before any layer exists). Each call to
//! [`LayerDraft::relu`] adds one neuron `relu(lin)` to the next layer and
//! returns the form that reads it back.

use std::ops::{Add, Mul, Neg, Sub};

use crate::net::{Layer, ReluNet};

#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct Lin {
    pub terms: Vec<(usize, f64)>,
    pub c: f64,
}

impl Lin {
    pub fn var(i: usize) -> Self {
        Self {
            terms: vec![(i, 1.0)],
            c: 0.0,
        }
    }

    pub fn konst(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            c,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn sum(items: impl IntoIterator<Item = Lin>) -> Self {
        items.into_iter().fold(Lin::zero(), |a, b| a + b)
    }

    /// Drops zero coefficients and merges repeated indices.
    pub fn compact(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (i, w) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => out.push((i, w)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        Self {
            terms: out,
            c: self.c,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c == 0.0 && self.terms.iter().all(|t| t.1 == 0.0)
    }

}

impl Add for Lin {
    type Output = Lin;
    fn add(mut self, rhs: Lin) -> Lin {
        self.terms.extend(rhs.terms);
        self.c += rhs.c;
        self
    }
}

impl Sub for Lin {
    type Output = Lin;
    fn sub(self, rhs: Lin) -> Lin {
        self + (-rhs)
    }
}

impl Neg for Lin {
    type Output = Lin;
    fn neg(self) -> Lin {
        self * -1.0
    }
}

impl Mul<f64> for Lin {
    type Output = Lin;
    fn mul(mut self, a: f64) -> Lin {
        for t in &mut self.terms {
            t.1 *= a;
        }
        self.c *= a;
        self
    }
}

impl Add<f64> for Lin {
    type Output = Lin;
    fn add(mut self, c: f64) -> Lin {
        self.c += c;
        self
    }
}

/// Neurons of a layer under construction.
pub(crate) struct LayerDraft {
    rows: Vec<Lin>,
}

impl LayerDraft {
    pub fn relu(&mut self, lin: Lin) -> Lin {
        self.rows.push(lin);
        Lin::var(self.rows.len() - 1)
    }

    /// Keeps a value of either sign via `relu(v) - relu(-v)`.
    pub fn keep(&mut self, v: Lin) -> Lin {
        let p = self.relu(v.clone());
        let n = self.relu(-v);
        p - n
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

pub(crate) struct NetBuilder {
    input_dim: usize,
    width: usize,
    layers: Vec<Layer>,
}

impl NetBuilder {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            width: input_dim,
            layers: Vec::new(),
        }
    }

    pub fn inputs(&self) -> Vec<Lin> {
        assert!(self.layers.is_empty());
        (0..self.input_dim).map(Lin::var).collect()
    }

    pub fn begin(&self) -> LayerDraft {
        LayerDraft { rows: Vec::new() }
    }

    fn to_layer(&self, rows: &[Lin]) -> Layer {
        let cols = self.width;
        let mut w = vec![0.0; rows.len() * cols];
        let mut b = Vec::with_capacity(rows.len());
        for (r, lin) in rows.iter().enumerate() {
            for &(i, v) in &lin.terms {
                assert!(i < cols, "term index {i} outside layer of width {cols}");
                w[r * cols + i] += v;
            }
            b.push(lin.c);
        }
        Layer::from_flat(rows.len(), cols, w, b).expect("finite entries")
    }

    pub fn push(&mut self, draft: LayerDraft) {
        assert!(!draft.rows.is_empty(), "empty hidden layer");
        let layer = self.to_layer(&draft.rows);
        self.width = layer.rows();
        self.layers.push(layer);
    }

    /// Net whose outputs are `outputs`, leaving the builder usable.
    pub fn snapshot(&self, outputs: &[Lin]) -> ReluNet {
        let mut layers = self.layers.clone();
        layers.push(self.to_layer(outputs));
        ReluNet::new(self.input_dim, layers).expect("consistent shapes")
    }

    pub fn finish(self, outputs: &[Lin]) -> ReluNet {
        self.snapshot(outputs)
    }

    /// Feeds `inputs` through the hidden layers of `net` and returns its
    /// output layer as forms over the last pushed layer.
    pub fn append(&mut self, net: &ReluNet, inputs: &[Lin]) -> Vec<Lin> {
        assert_eq!(inputs.len(), net.input_dim());
        let mut cur: Vec<Lin> = inputs.to_vec();
        for layer in net.layers() {
            let forms: Vec<Lin> = (0..layer.rows())
                .map(|r| {
                    let mut acc = Lin::konst(layer.bias()[r]);
                    for (c, &w) in layer.row(r).iter().enumerate() {
                        if w != 0.0 {
                            acc = acc + cur[c].clone() * w;
                        }
                    }
                    acc.compact()
                })
                .collect();
            cur = forms;
            if std::ptr::eq(layer, net.layers().last().unwrap()) {
                break;
            }
            let mut d = self.begin();
            cur = cur.into_iter().map(|f| d.relu(f)).collect();
            self.push(d);
        }
        cur
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keep_passes_signed_values() {
        let mut nb = NetBuilder::new(1);
        let x = nb.inputs().remove(0);
        let mut d = nb.begin();
        let k = d.keep(x);
        nb.push(d);
        let net = nb.finish(&[k]);
        for v in [-2.5, 0.0, 3.25] {
            assert_eq!(net.eval1(&[v]), v);
        }
    }

    #[test]
    fn append_composes() {
        let mut inner = NetBuilder::new(1);
        let x = inner.inputs().remove(0);
        let mut d = inner.begin();
        let a = d.relu(x.clone()) + d.relu(-x);
        inner.push(d);
        let abs = inner.finish(&[a]);

        let mut nb = NetBuilder::new(2);
        let xs = nb.inputs();
        let out = nb.append(&abs, &[xs[0].clone() - xs[1].clone()]);
        let net = nb.finish(&out);
        assert_eq!(net.eval1(&[1.0, 4.0]), 3.0);
        assert_eq!(net.depth(), 1);
    }
}
