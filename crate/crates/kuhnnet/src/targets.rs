//! Built-in closed-form targets with known moduli.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::modulus::Modulus;

/// Offset of the `ridge` target `|x₁ - c|`.
pub const RIDGE_CENTER: f64 = 0.37;

/// Noise amplitude `M` of the `heaviside-perturbed` target.
pub const HEAVISIDE_JUMP: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    /// `Σ x_i`.
    Linear,
    /// `Σ |x_i|`.
    L1Norm,
    /// `min_i x_i`.
    MinCoords,
    /// `|x₁ - c|`.
    Ridge(f64),
    /// `x₁ + (M/2)(2 h(x₁ - 1/2) - 1)` with `h` the Heaviside step.
    HeavisidePerturbed,
    Constant(f64),
}

impl Target {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Target::Linear => x.iter().sum(),
            Target::L1Norm => x.iter().map(|v| v.abs()).sum(),
            Target::MinCoords => x.iter().copied().fold(f64::INFINITY, f64::min),
            Target::Ridge(c) => (x[0] - c).abs(),
            Target::HeavisidePerturbed => {
                let step = if x[0] >= 0.5 { 1.0 } else { -1.0 };
                x[0] + 0.5 * HEAVISIDE_JUMP * step
            }
            Target::Constant(c) => c,
        }
    }

    /// `l1` Lipschitz constant of the continuous part.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Target::Constant(_) => 0.0,
            _ => 1.0,
        }
    }

    /// Jump `ω(0+)` of the modulus.
    pub fn jump(&self) -> f64 {
        match self {
            Target::HeavisidePerturbed => HEAVISIDE_JUMP,
            _ => 0.0,
        }
    }

    /// Modulus on `[0, t_end]`; pick `t_end` at least the largest `l1`
    /// distance of interest.
    pub fn modulus(&self, t_end: f64) -> Result<Modulus> {
        Modulus::with_jump(self.jump(), self.lipschitz(), t_end)
    }

    pub fn names() -> &'static [&'static str] {
        &["linear", "l1-norm", "min-coords", "ridge", "heaviside-perturbed", "constant"]
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Linear => write!(f, "linear"),
            Target::L1Norm => write!(f, "l1-norm"),
            Target::MinCoords => write!(f, "min-coords"),
            Target::Ridge(c) if *c == RIDGE_CENTER => write!(f, "ridge"),
            Target::Ridge(c) => write!(f, "ridge:{c}"),
            Target::HeavisidePerturbed => write!(f, "heaviside-perturbed"),
            Target::Constant(c) => write!(f, "constant:{c}"),
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    /// Accepts the names above; `ridge` and `constant` take an optional
    /// `:value` suffix.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let num = |default: f64| -> Result<f64> {
            match arg {
                None => Ok(default),
                Some(v) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::input(format!("bad number {v:?} in target {s:?}"))),
            }
        };
        let plain = |t: Target| if arg.is_some() { Err(Error::input(format!("target {name} takes no argument"))) } else { Ok(t) };
        match name {
            "linear" => plain(Target::Linear),
            "l1-norm" => plain(Target::L1Norm),
            "min-coords" => plain(Target::MinCoords),
            "ridge" => Ok(Target::Ridge(num(RIDGE_CENTER)?)),
            "heaviside-perturbed" => plain(Target::HeavisidePerturbed),
            "constant" => Ok(Target::Constant(num(1.0)?)),
            _ => Err(Error::input(format!(
                "unknown target {s:?}; expected one of {}",
                Target::names().join(", ")
            ))),
        }
    }
}
