use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Transfer functions available to a layer.
///
/// `Softmax` and `UnitSum` normalize over the whole layer; the rest act
/// elementwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Logistic,
    Hyperbolic,
    Exponential,
    Softmax,
    UnitSum,
    SquareRoot,
    Sine,
    /// Clamp to [-1, 1].
    Ramp,
    /// 0 below zero, 1 at or above zero.
    Step,
}

impl Activation {
    pub const ALL: [Activation; 10] = [
        Activation::Identity,
        Activation::Logistic,
        Activation::Hyperbolic,
        Activation::Exponential,
        Activation::Softmax,
        Activation::UnitSum,
        Activation::SquareRoot,
        Activation::Sine,
        Activation::Ramp,
        Activation::Step,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Logistic => "logistic",
            Activation::Hyperbolic => "hyperbolic",
            Activation::Exponential => "exponential",
            Activation::Softmax => "softmax",
            Activation::UnitSum => "unit_sum",
            Activation::SquareRoot => "square_root",
            Activation::Sine => "sine",
            Activation::Ramp => "ramp",
            Activation::Step => "step",
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(self, Activation::Softmax | Activation::UnitSum)
    }

    pub fn apply(self, z: &[f64]) -> Result<Vec<f64>> {
        if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "{} received non-finite input {bad}",
                self.name()
            )));
        }
        match self {
            Activation::Softmax => {
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                Ok(exps.into_iter().map(|e| e / sum).collect())
            }
            Activation::UnitSum => {
                let sum: f64 = z.iter().sum();
                if sum == 0.0 {
                    return Err(Error::Domain("unit_sum over a vector summing to zero".into()));
                }
                Ok(z.iter().map(|v| v / sum).collect())
            }
            Activation::SquareRoot => z
                .iter()
                .map(|&v| {
                    if v < 0.0 {
                        Err(Error::Domain(format!("square_root of negative input {v}")))
                    } else {
                        Ok(v.sqrt())
                    }
                })
                .collect(),
            Activation::Exponential => z
                .iter()
                .map(|&v| {
                    let y = v.exp();
                    if y.is_infinite() {
                        Err(Error::Domain(format!("exponential overflows at {v}")))
                    } else {
                        Ok(y)
                    }
                })
                .collect(),
            elementwise => Ok(z.iter().map(|&v| elementwise.scalar(v)).collect()),
        }
    }

    fn scalar(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Logistic => 1.0 / (1.0 + (-v).exp()),
            Activation::Hyperbolic => v.tanh(),
            Activation::Sine => v.sin(),
            Activation::Ramp => v.clamp(-1.0, 1.0),
            Activation::Step => {
                if v < 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            Activation::Exponential => v.exp(),
            Activation::SquareRoot => v.sqrt(),
            Activation::Softmax | Activation::UnitSum => unreachable!("vector activation"),
        }
    }

    /// Pulls a gradient with respect to the outputs `y = f(z)` back to `z`.
    pub fn backward(self, z: &[f64], y: &[f64], grad_y: &[f64]) -> Result<Vec<f64>> {
        let out = match self {
            Activation::Identity => grad_y.to_vec(),
            Activation::Logistic => elementwise(y, grad_y, |y| y * (1.0 - y)),
            Activation::Hyperbolic => elementwise(y, grad_y, |y| 1.0 - y * y),
            Activation::Exponential => elementwise(y, grad_y, |y| y),
            Activation::Sine => elementwise(z, grad_y, f64::cos),
            Activation::Ramp => elementwise(z, grad_y, |z| if z > -1.0 && z < 1.0 { 1.0 } else { 0.0 }),
            Activation::SquareRoot => {
                if let Some(v) = z.iter().find(|&&v| v <= 0.0) {
                    return Err(Error::Domain(format!("square_root is not differentiable at {v}")));
                }
                elementwise(y, grad_y, |y| 0.5 / y)
            }
            Activation::Softmax => {
                let dot: f64 = grad_y.iter().zip(y).map(|(g, y)| g * y).sum();
                y.iter().zip(grad_y).map(|(y, g)| y * (g - dot)).collect()
            }
            Activation::UnitSum => {
                let sum: f64 = z.iter().sum();
                let weighted: f64 = grad_y.iter().zip(z).map(|(g, z)| g * z).sum();
                grad_y.iter().map(|g| g / sum - weighted / (sum * sum)).collect()
            }
            Activation::Step => {
                return Err(Error::Unsupported(
                    "step activation cannot be trained by gradient descent".into(),
                ))
            }
        };
        Ok(out)
    }
}

fn elementwise(src: &[f64], grad: &[f64], deriv: impl Fn(f64) -> f64) -> Vec<f64> {
    src.iter().zip(grad).map(|(&s, &g)| g * deriv(s)).collect()
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown activation `{s}`")))
    }
}

/// Applies `a` to a pre-activation vector.
pub fn apply_activation(a: Activation, z: &[f64]) -> Result<Vec<f64>> {
    a.apply(z)
}
