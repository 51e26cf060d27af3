//! Dense ReLU multilayer perceptrons.
//!
//! A [`ReluNet`] is a list of affine layers. ReLU is applied after every
//! layer except the last, so a net with `k` layers has depth `k - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NET_FORMAT: &str = "kuhnnet-net/1";

/// One affine map `x -> W x + b`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    /// Builds a layer from nested rows. Every row must have the same length.
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        let rows = weights.len();
        let cols = weights.first().map_or(0, Vec::len);
        if let Some(i) = weights.iter().position(|r| r.len() != cols) {
            return Err(Error::input(format!(
                "row {i} has {} columns, expected {cols}",
                weights[i].len()
            )));
        }
        Self::from_flat(rows, cols, weights.into_iter().flatten().collect(), bias)
    }

    pub fn from_flat(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != rows * cols {
            return Err(Error::input(format!(
                "weight buffer has {} entries, expected {rows}x{cols}",
                weights.len()
            )));
        }
        if bias.len() != rows {
            return Err(Error::input(format!(
                "bias has length {}, expected {rows}",
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite layer entry"));
        }
        Ok(Self {
            rows,
            cols,
            weights,
            bias,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weight(&self, r: usize, c: usize) -> f64 {
        self.weights[r * self.cols + c]
    }

    /// Row-major weight buffer.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.cols..(r + 1) * self.cols]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Mutable access for fault injection in tests and tools.
    pub fn set_weight(&mut self, r: usize, c: usize, v: f64) {
        assert!(v.is_finite());
        self.weights[r * self.cols + c] = v;
    }

    pub fn set_bias(&mut self, r: usize, v: f64) {
        assert!(v.is_finite());
        self.bias[r] = v;
    }

    /// Largest absolute row sum, the operator norm on `l_inf`.
    pub fn linf_operator_norm(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|w| w.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Nonzero pattern of a layer, used by the evaluator.
#[derive(Clone, Debug)]
struct Sparse {
    starts: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Sparse {
    fn of(layer: &Layer) -> Self {
        let mut starts = Vec::with_capacity(layer.rows + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        starts.push(0);
        for r in 0..layer.rows {
            for (c, &w) in layer.row(r).iter().enumerate() {
                if w != 0.0 {
                    cols.push(c as u32);
                    vals.push(w);
                }
            }
            starts.push(cols.len());
        }
        Self { starts, cols, vals }
    }
}

/// A feedforward ReLU network with an affine output layer.
///
/// Immutable once built; evaluation only reads it.
#[derive(Clone, Debug)]
pub struct ReluNet {
    input_dim: usize,
    layers: Vec<Layer>,
    sparse: Vec<Sparse>,
}

impl PartialEq for ReluNet {
    fn eq(&self, other: &Self) -> bool {
        self.input_dim == other.input_dim && self.layers == other.layers
    }
}

impl ReluNet {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::input("input_dim must be positive"));
        }
        if layers.is_empty() {
            return Err(Error::input("a net needs at least one layer"));
        }
        let mut prev = input_dim;
        for (i, l) in layers.iter().enumerate() {
            if l.cols != prev {
                return Err(Error::input(format!(
                    "layer {i} has {} columns, previous width is {prev}",
                    l.cols
                )));
            }
            if l.rows == 0 {
                return Err(Error::input(format!("layer {i} has no rows")));
            }
            prev = l.rows;
        }
        let sparse = layers.iter().map(Sparse::of).collect();
        Ok(Self {
            input_dim,
            layers,
            sparse,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::rows)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Returns a copy with `f` applied to layer `index`.
    pub fn with_layer_edit(&self, index: usize, f: impl FnOnce(&mut Layer)) -> Self {
        let mut layers = self.layers.clone();
        f(&mut layers[index]);
        Self::new(self.input_dim, layers).expect("edit preserved shapes")
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    /// Largest hidden-layer width, 0 for a purely affine net.
    pub fn width(&self) -> usize {
        self.widthvec().into_iter().max().unwrap_or(0)
    }

    /// Hidden-layer widths in order.
    pub fn widthvec(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::rows)
            .collect()
    }

    /// Weights and biases with magnitude strictly above `tolerance`.
    pub fn count_nonzero_params(&self, tolerance: f64) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .filter(|v| v.abs() > tolerance)
            .count()
    }

    /// Largest absolute weight or bias.
    pub fn param_max_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Product of per-layer `l_inf` operator norms, a crude Lipschitz bound.
    pub fn operator_bound(&self) -> f64 {
        self.layers.iter().map(Layer::linf_operator_norm).product()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::input(format!(
                "input has length {}, net expects {}",
                x.len(),
                self.input_dim
            )));
        }
        let mut ev = self.evaluator();
        Ok(ev.eval(x).to_vec())
    }

    /// Evaluates a scalar-output net. Panics on a dimension mismatch.
    pub fn eval1(&self, x: &[f64]) -> f64 {
        self.evaluator().eval1(x)
    }

    /// Reusable evaluation buffers for hot loops.
    pub fn evaluator(&self) -> Evaluator<'_> {
        let cap = self.layers.iter().map(Layer::rows).max().unwrap_or(0);
        Evaluator {
            net: self,
            a: Vec::with_capacity(cap.max(self.input_dim)),
            b: Vec::with_capacity(cap),
        }
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut s = serde_json::to_string(&NetDoc::from(self)).expect("finite entries serialize");
        s.push('\n');
        s.into_bytes()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let doc: NetDoc = serde_json::from_slice(bytes).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        doc.into_net()
    }
}

/// Holds scratch buffers so repeated evaluations do not allocate.
pub struct Evaluator<'a> {
    net: &'a ReluNet,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Evaluator<'_> {
    pub fn eval(&mut self, x: &[f64]) -> &[f64] {
        assert_eq!(x.len(), self.net.input_dim, "input dimension");
        self.a.clear();
        self.a.extend_from_slice(x);
        let last = self.net.layers.len() - 1;
        for (i, (layer, sp)) in self.net.layers.iter().zip(&self.net.sparse).enumerate() {
            self.b.clear();
            for r in 0..layer.rows {
                let mut acc = layer.bias[r];
                for k in sp.starts[r]..sp.starts[r + 1] {
                    acc += sp.vals[k] * self.a[sp.cols[k] as usize];
                }
                self.b.push(if i < last { acc.max(0.0) } else { acc });
            }
            std::mem::swap(&mut self.a, &mut self.b);
        }
        &self.a
    }

    pub fn eval1(&mut self, x: &[f64]) -> f64 {
        self.eval(x)[0]
    }
}

#[derive(Serialize, Deserialize)]
struct NetDoc {
    format: String,
    input_dim: usize,
    layers: Vec<LayerDoc>,
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl From<&ReluNet> for NetDoc {
    fn from(net: &ReluNet) -> Self {
        NetDoc {
            format: NET_FORMAT.to_string(),
            input_dim: net.input_dim,
            layers: net
                .layers
                .iter()
                .map(|l| LayerDoc {
                    weights: (0..l.rows).map(|r| l.row(r).to_vec()).collect(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }
}

impl NetDoc {
    fn into_net(self) -> Result<ReluNet> {
        if self.format != NET_FORMAT {
            return Err(Error::parse(
                "format",
                format!("expected \"{NET_FORMAT}\", found \"{}\"", self.format),
            ));
        }
        if self.input_dim == 0 {
            return Err(Error::parse("input_dim", "must be positive"));
        }
        if self.layers.is_empty() {
            return Err(Error::parse("layers", "empty layer list"));
        }
        let mut prev = self.input_dim;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.into_iter().enumerate() {
            let rows = l.weights.len();
            if rows == 0 {
                return Err(Error::parse(format!("layers[{i}].weights"), "no rows"));
            }
            for (r, row) in l.weights.iter().enumerate() {
                if row.len() != prev {
                    return Err(Error::parse(
                        format!("layers[{i}].weights[{r}]"),
                        format!("row has {} entries, expected {prev}", row.len()),
                    ));
                }
            }
            if l.bias.len() != rows {
                return Err(Error::parse(
                    format!("layers[{i}].bias"),
                    format!("length {}, expected {rows}", l.bias.len()),
                ));
            }
            let layer = Layer::new(l.weights, l.bias)
                .map_err(|e| Error::parse(format!("layers[{i}]"), e.to_string()))?;
            prev = rows;
            layers.push(layer);
        }
        ReluNet::new(self.input_dim, layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_net() -> ReluNet {
        let l1 = Layer::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        let l2 = Layer::new(vec![vec![1.0, 1.0]], vec![0.0]).unwrap();
        ReluNet::new(1, vec![l1, l2]).unwrap()
    }

    #[test]
    fn affine_output_has_no_relu() {
        let l = Layer::new(vec![vec![1.0]], vec![0.0]).unwrap();
        let net = ReluNet::new(1, vec![l]).unwrap();
        assert_eq!(net.eval(&[-3.0]).unwrap(), vec![-3.0]);
        assert_eq!(net.depth(), 0);
        assert_eq!(net.width(), 0);
    }

    #[test]
    fn two_layers_compute_abs() {
        let net = abs_net();
        assert_eq!(net.eval(&[-3.0]).unwrap(), vec![3.0]);
        assert_eq!(net.depth(), 1);
        assert_eq!(net.widthvec(), vec![2]);
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        assert!(matches!(abs_net().eval(&[1.0, 2.0]), Err(Error::Input(_))));
    }

    #[test]
    fn counts_and_norms() {
        let net = abs_net();
        assert_eq!(net.count_nonzero_params(0.0), 4);
        assert_eq!(net.param_max_norm(), 1.0);
        let zero = ReluNet::new(2, vec![Layer::new(vec![vec![0.0, 0.0]], vec![0.0]).unwrap()]).unwrap();
        assert_eq!(zero.count_nonzero_params(0.0), 0);
        assert_eq!(zero.param_max_norm(), 0.0);
        let half = ReluNet::new(1, vec![Layer::new(vec![vec![0.5]], vec![0.0]).unwrap()]).unwrap();
        assert_eq!(half.param_max_norm(), 0.5);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let w = vec![vec![0.1, -0.0], vec![1e-300, 123456.789]];
        let l1 = Layer::new(w, vec![f64::MIN_POSITIVE, -2.5]).unwrap();
        let l2 = Layer::new(vec![vec![std::f64::consts::PI, 1.0 / 3.0]], vec![-1e17]).unwrap();
        let net = ReluNet::new(2, vec![l1, l2]).unwrap();
        let back = ReluNet::deserialize(&net.serialize()).unwrap();
        for (a, b) in net.layers().iter().zip(back.layers()) {
            let bits = |l: &Layer| -> Vec<u64> {
                l.weights().iter().chain(l.bias()).map(|v| v.to_bits()).collect()
            };
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn bias_length_mismatch_names_location() {
        let doc = r#"{"format":"kuhnnet-net/1","input_dim":1,"layers":[{"weights":[[1.0]],"bias":[0.0,1.0]}]}"#;
        match ReluNet::deserialize(doc.as_bytes()) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "layers[0].bias"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_literal_is_rejected() {
        let doc = r#"{"format":"kuhnnet-net/1","input_dim":1,"layers":[{"weights":[[NaN]],"bias":[0.0]}]}"#;
        assert!(matches!(ReluNet::deserialize(doc.as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn column_mismatch_is_rejected() {
        let l1 = Layer::new(vec![vec![1.0, 2.0]], vec![0.0]).unwrap();
        assert!(ReluNet::new(1, vec![l1]).is_err());
    }
}
