//! Piecewise-linear moduli of regularity.
//!
//! A modulus is zero at zero, may jump to `jump` immediately to the right of
//! zero, and is the linear interpolant of its knots on `(0, T]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SampleGrid;

pub const MODULUS_FORMAT: &str = "kuhnnet-modulus/1";

/// Behaviour of [`Modulus::eval`] beyond the domain end `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    #[default]
    Clamped,
    Undefined,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Modulus {
    t_end: f64,
    jump: f64,
    knots: Vec<(f64, f64)>,
    extension: Extension,
    exact_at_knots_only: bool,
}

const SHAPE_TOL: f64 = 1e-12;

impl Modulus {
    /// Validates monotonicity and concavity of the knot list. The last knot
    /// must sit at `t_end`.
    pub fn new(t_end: f64, jump: f64, knots: Vec<(f64, f64)>, extension: Extension) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::domain("domain end must be positive and finite"));
        }
        if !(jump.is_finite() && jump >= 0.0) {
            return Err(Error::domain("jump must be finite and non-negative"));
        }
        if knots.is_empty() {
            return Err(Error::input("a modulus needs at least one knot"));
        }
        if knots.iter().any(|&(t, w)| !t.is_finite() || !w.is_finite()) {
            return Err(Error::input("non-finite knot"));
        }
        if knots.last().unwrap().0 != t_end {
            return Err(Error::input("last knot must be at the domain end"));
        }
        let mut prev = (0.0, jump);
        let mut prev_slope = f64::INFINITY;
        let scale = knots.iter().fold(jump, |m, k| m.max(k.1.abs())).max(1.0);
        for (i, &(t, w)) in knots.iter().enumerate() {
            if t <= prev.0 {
                return Err(Error::input(format!("knot {i} is not strictly increasing in t")));
            }
            if w < prev.1 - SHAPE_TOL * scale {
                return Err(Error::input(format!("knot {i} decreases")));
            }
            let slope = (w - prev.1) / (t - prev.0);
            if slope > prev_slope + SHAPE_TOL * scale / (t - prev.0) {
                return Err(Error::input(format!("knot {i} breaks concavity")));
            }
            prev_slope = slope;
            prev = (t, w);
        }
        Ok(Self {
            t_end,
            jump,
            knots,
            extension,
            exact_at_knots_only: false,
        })
    }

    /// `t -> l t` on `[0, t_end]`.
    pub fn lipschitz(l: f64, t_end: f64) -> Result<Self> {
        if !(l.is_finite() && l >= 0.0) {
            return Err(Error::domain("Lipschitz constant must be finite and non-negative"));
        }
        Self::new(t_end, 0.0, vec![(t_end, l * t_end)], Extension::Clamped)
    }

    /// `t -> nu t^alpha` sampled on `knots` equispaced points. Between knots
    /// the stored interpolant lies below the analytic curve, so the result is
    /// flagged as exact at knots only.
    pub fn holder(nu: f64, alpha: f64, t_end: f64, knots: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain(format!("Holder exponent {alpha} outside (0, 1]")));
        }
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::domain("Holder constant must be finite and non-negative"));
        }
        if alpha == 1.0 {
            return Self::lipschitz(nu, t_end);
        }
        let k = knots.max(1);
        let pts = (1..=k)
            .map(|i| {
                let t = if i == k { t_end } else { t_end * i as f64 / k as f64 };
                (t, nu * t.powf(alpha))
            })
            .collect();
        let mut m = Self::new(t_end, 0.0, pts, Extension::Clamped)?;
        m.exact_at_knots_only = true;
        Ok(m)
    }

    /// `t -> jump + l t` for `t > 0`, the modulus of a Lipschitz function
    /// perturbed by bounded noise.
    pub fn with_jump(jump: f64, l: f64, t_end: f64) -> Result<Self> {
        Self::new(t_end, jump, vec![(t_end, jump + l * t_end)], Extension::Clamped)
    }

    pub fn zero(t_end: f64) -> Result<Self> {
        Self::lipschitz(0.0, t_end)
    }

    pub fn with_extension(mut self, extension: Extension) -> Self {
        self.extension = extension;
        self
    }

    pub fn domain_end(&self) -> f64 {
        self.t_end
    }

    pub fn jump(&self) -> f64 {
        self.jump
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn is_exact_at_knots_only(&self) -> bool {
        self.exact_at_knots_only
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("modulus argument {t} is negative or NaN")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if t > self.t_end {
            return match self.extension {
                Extension::Clamped => Ok(self.knots.last().unwrap().1),
                Extension::Undefined => Err(Error::domain(format!(
                    "modulus argument {t} beyond domain end {}",
                    self.t_end
                ))),
            };
        }
        let i = self.knots.partition_point(|k| k.0 < t);
        let (t1, w1) = self.knots[i];
        if t1 == t {
            return Ok(w1);
        }
        let (t0, w0) = if i == 0 { (0.0, self.jump) } else { self.knots[i - 1] };
        Ok(w0 + (w1 - w0) * (t - t0) / (t1 - t0))
    }

    pub fn to_json(&self) -> String {
        let doc = ModulusDoc {
            format: MODULUS_FORMAT.into(),
            t: self.t_end,
            jump: self.jump,
            knots: self.knots.iter().map(|&(t, w)| [t, w]).collect(),
            extension: self.extension,
        };
        serde_json::to_string(&doc).expect("finite modulus") + "\n"
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModulusDoc = serde_json::from_str(s).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        if doc.format != MODULUS_FORMAT {
            return Err(Error::parse("format", format!("expected \"{MODULUS_FORMAT}\"")));
        }
        let knots = doc.knots.into_iter().map(|[t, w]| (t, w)).collect();
        Self::new(doc.t, doc.jump, knots, doc.extension)
            .map_err(|e| Error::parse("knots", e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct ModulusDoc {
    format: String,
    #[serde(rename = "T")]
    t: f64,
    jump: f64,
    knots: Vec<[f64; 2]>,
    #[serde(default)]
    extension: Extension,
}

/// Largest value gaps of the grid at each lattice `l1` distance.
///
/// Entry `i - 1` holds the max of `|f(x) - f(y)|` over lattice pairs whose
/// `l1` distance is `i` steps, for `i = 1..=n d`.
pub fn lattice_gaps(grid: &SampleGrid) -> Vec<f64> {
    let (d, n) = (grid.d(), grid.n());
    let pts: Vec<Vec<usize>> = grid.indices().collect();
    let vals = grid.values();
    let mut m = vec![0.0f64; n * d];
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let dist: usize = pts[a].iter().zip(&pts[b]).map(|(&p, &q)| p.abs_diff(q)).sum();
            let gap = (vals[a] - vals[b]).abs();
            if gap > m[dist - 1] {
                m[dist - 1] = gap;
            }
        }
    }
    m
}

/// Smallest concave non-decreasing modulus on `[0, d]` that dominates the
/// lattice gaps placed at `t = i / n`.
pub fn min_concave_from_grid(grid: &SampleGrid) -> Modulus {
    let (d, n) = (grid.d(), grid.n());
    let t_end = d as f64;
    let gaps = lattice_gaps(grid);
    let mut pts = Vec::with_capacity(gaps.len() + 1);
    pts.push((0.0, 0.0));
    for (i, &g) in gaps.iter().enumerate() {
        pts.push(((i + 1) as f64 / n as f64, g));
    }
    let hull = upper_hull(&pts);
    let peak = hull
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.1 > hull[best].1 { i } else { best });
    let mut knots: Vec<(f64, f64)> = hull[1..=peak].to_vec();
    let top = hull[peak].1;
    if knots.last().map_or(true, |k| k.0 < t_end) {
        knots.push((t_end, top));
    }
    let mut m = Modulus::new(t_end, 0.0, knots, Extension::Clamped).expect("hull is concave");
    m.exact_at_knots_only = false;
    m
}

/// Upper convex hull of points sorted by x, collinear points removed.
fn upper_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut h: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while h.len() >= 2 {
            let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                h.pop();
            } else {
                break;
            }
        }
        h.push(p);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lipschitz_eval() {
        let m = Modulus::lipschitz(2.0, 1.0).unwrap();
        assert_eq!(m.eval(0.25).unwrap(), 0.5);
        let m3 = Modulus::lipschitz(3.0, 1.0).unwrap();
        assert!((m3.eval(1.0 / 3.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heaviside_style_jump() {
        let m = Modulus::with_jump(1.0, 0.0, 1.0).unwrap();
        assert_eq!(m.eval(0.0).unwrap(), 0.0);
        assert_eq!(m.eval(0.1).unwrap(), 1.0);
    }

    #[test]
    fn clamped_and_undefined_extension() {
        let m = Modulus::lipschitz(1.0, 2.0).unwrap();
        assert_eq!(m.eval(5.0).unwrap(), 2.0);
        let u = m.with_extension(Extension::Undefined);
        assert!(matches!(u.eval(5.0), Err(Error::Domain(_))));
        assert!(matches!(u.eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn holder_is_exact_at_knots() {
        let m = Modulus::holder(1.0, 0.5, 1.0, 4).unwrap();
        assert_eq!(m.eval(0.25).unwrap(), 0.5);
        assert!(m.is_exact_at_knots_only());
        assert!(Modulus::holder(1.0, 1.5, 1.0, 4).is_err());
        let one = Modulus::holder(1.0, 1.0, 1.0, 8).unwrap();
        let lip = Modulus::lipschitz(1.0, 1.0).unwrap();
        for t in [0.0, 0.1, 0.5, 1.0, 3.0] {
            assert_eq!(one.eval(t).unwrap(), lip.eval(t).unwrap());
        }
    }

    #[test]
    fn rejects_convex_knots() {
        let r = Modulus::new(2.0, 0.0, vec![(1.0, 0.5), (2.0, 2.0)], Extension::Clamped);
        assert!(r.is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = Modulus::holder(0.7, 0.3, 2.0, 5).unwrap();
        let back = Modulus::from_json(&m.to_json()).unwrap();
        assert_eq!(back.knots(), m.knots());
        assert_eq!(back.jump(), m.jump());
    }
}
