//! Analytic one-dimensional potentials.
//!
//! Every model is a polynomial `c2 x² + c4 x⁴` plus an optional dipole drive
//! `x F cos(ω t)`, so all derivatives and the Moyal difference are exact.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialModel {
    /// `V ≡ 0`.
    Free,
    /// `½ m ω² x²`.
    Harmonic { omega: f64 },
    /// `-½ m λ² x²`.
    Inverted { lambda: f64 },
    /// `-½ a x² + ¼ b x⁴`.
    QuarticDoubleWell { a: f64, b: f64 },
    /// Double well plus `x F cos(ω_d t)`.
    DrivenDoubleWell { a: f64, b: f64, amplitude: f64, frequency: f64 },
}

/// `V`, `V'` and `V'''` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValues {
    pub v: f64,
    pub d1: f64,
    pub d3: f64,
}

impl PotentialModel {
    pub fn validate(&self) -> Result<()> {
        fn pos(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(name, format!("{name} must be positive (got {v})")))
            }
        }
        match *self {
            PotentialModel::Free => Ok(()),
            PotentialModel::Harmonic { omega } => pos("omega", omega),
            PotentialModel::Inverted { lambda } => pos("lambda", lambda),
            PotentialModel::QuarticDoubleWell { a, b } => pos("a", a).and(pos("b", b)),
            PotentialModel::DrivenDoubleWell { a, b, amplitude, frequency } => {
                pos("a", a)?;
                pos("b", b)?;
                pos("frequency", frequency)?;
                if !(amplitude >= 0.0 && amplitude.is_finite()) {
                    return Err(Error::config("amplitude", "amplitude must be non-negative"));
                }
                Ok(())
            }
        }
    }

    /// Coefficients `(c2, c4)` of the static polynomial part.
    pub fn coefficients(&self, mass: f64) -> (f64, f64) {
        match *self {
            PotentialModel::Free => (0.0, 0.0),
            PotentialModel::Harmonic { omega } => (0.5 * mass * omega * omega, 0.0),
            PotentialModel::Inverted { lambda } => (-0.5 * mass * lambda * lambda, 0.0),
            PotentialModel::QuarticDoubleWell { a, b } | PotentialModel::DrivenDoubleWell { a, b, .. } => {
                (-0.5 * a, 0.25 * b)
            }
        }
    }

    /// Spatially uniform force term `F cos(ω t)` entering `V'`.
    pub fn drive(&self, t: f64) -> f64 {
        match *self {
            PotentialModel::DrivenDoubleWell { amplitude, frequency, .. } => amplitude * (frequency * t).cos(),
            _ => 0.0,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, PotentialModel::Free | PotentialModel::Harmonic { .. } | PotentialModel::Inverted { .. })
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, PotentialModel::DrivenDoubleWell { amplitude, .. } if *amplitude != 0.0)
    }

    pub fn evaluate(&self, x: f64, t: f64, mass: f64) -> PotentialValues {
        let (c2, c4) = self.coefficients(mass);
        let f = self.drive(t);
        let x2 = x * x;
        PotentialValues {
            v: c2 * x2 + c4 * x2 * x2 + x * f,
            d1: 2.0 * c2 * x + 4.0 * c4 * x2 * x + f,
            d3: 24.0 * c4 * x,
        }
    }

    /// `n`-th spatial derivative of `V`.
    pub fn derivative(&self, order: u32, x: f64, t: f64, mass: f64) -> f64 {
        let (c2, c4) = self.coefficients(mass);
        match order {
            0 => self.evaluate(x, t, mass).v,
            1 => self.evaluate(x, t, mass).d1,
            2 => 2.0 * c2 + 12.0 * c4 * x * x,
            3 => 24.0 * c4 * x,
            4 => 24.0 * c4,
            _ => 0.0,
        }
    }

    /// Largest admissible time step: `0.1/λ` for unstable rates and `0.1·2π/ω`
    /// for oscillation frequencies of the model.
    pub fn stability_limit(&self, mass: f64) -> Option<f64> {
        let osc = |w: f64| 0.2 * PI / w;
        let unstable = |l: f64| 0.1 / l;
        match *self {
            PotentialModel::Free => None,
            PotentialModel::Harmonic { omega } => Some(osc(omega)),
            PotentialModel::Inverted { lambda } => Some(unstable(lambda)),
            PotentialModel::QuarticDoubleWell { a, .. } => {
                Some(osc((2.0 * a / mass).sqrt()).min(unstable((a / mass).sqrt())))
            }
            PotentialModel::DrivenDoubleWell { a, frequency, .. } => {
                Some(osc((2.0 * a / mass).sqrt()).min(unstable((a / mass).sqrt())).min(osc(frequency)))
            }
        }
    }

    /// `χ = median √|V'/V'''|` over `n` evenly spaced points of `[lo, hi]`.
    ///
    /// The drive is excluded. Returns `f64::INFINITY` when `V'''` vanishes.
    pub fn nonlinearity_scale(&self, lo: f64, hi: f64, mass: f64) -> f64 {
        nonlinearity_scale_sampled(self, lo, hi, mass, 2001)
    }
}

pub fn nonlinearity_scale_sampled(model: &PotentialModel, lo: f64, hi: f64, mass: f64, n: usize) -> f64 {
    let (c2, c4) = model.coefficients(mass);
    if c4 == 0.0 {
        return f64::INFINITY;
    }
    let n = n.max(1);
    let mut vals: Vec<f64> = (0..n)
        .filter_map(|i| {
            let x = if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            let d3 = 24.0 * c4 * x;
            (d3 != 0.0).then(|| ((2.0 * c2 * x + 4.0 * c4 * x * x * x) / d3).abs().sqrt())
        })
        .collect();
    if vals.is_empty() {
        return f64::INFINITY;
    }
    vals.sort_by(|a, b| a.total_cmp(b));
    let m = vals.len();
    if m % 2 == 1 {
        vals[m / 2]
    } else {
        0.5 * (vals[m / 2 - 1] + vals[m / 2])
    }
}

/// Phase-space kernel of the potential bracket, evaluated in `(x, s)` space.
///
/// The potential step multiplies `W̃(x, s)` by `exp(i dt K(x, s))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bracket {
    Poisson,
    Moyal,
    MoyalTruncated { n_max: u32 },
}

impl Bracket {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Bracket::MoyalTruncated { n_max } if n_max < 1 => Err(Error::config("n_max", "n_max must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// Static part of the kernel. The drive contributes `s F cos(ω t)` on top.
pub fn static_kernel(model: &PotentialModel, bracket: Bracket, x: f64, s: f64, hbar: f64, mass: f64) -> f64 {
    let (c2, c4) = model.coefficients(mass);
    let x2 = x * x;
    let lin = s * (2.0 * c2 * x + 4.0 * c4 * x2 * x);
    match bracket {
        Bracket::Poisson => lin,
        // [V(x + ħs/2) - V(x - ħs/2)] / ħ expanded exactly for the quartic.
        Bracket::Moyal | Bracket::MoyalTruncated { .. } => lin + c4 * hbar * hbar * x * s * s * s,
    }
}

/// Moyal kernel from the raw difference, for cross-checking [`static_kernel`].
pub fn moyal_difference(model: &PotentialModel, x: f64, s: f64, hbar: f64, mass: f64) -> f64 {
    let h = 0.5 * hbar * s;
    (model.evaluate(x + h, 0.0, mass).v - model.evaluate(x - h, 0.0, mass).v - 2.0 * h * model.drive(0.0)) / hbar
}

/// Taylor series of the Moyal kernel in `s` through order `2 n_max + 1`.
pub fn truncated_kernel(model: &PotentialModel, n_max: u32, x: f64, s: f64, hbar: f64, mass: f64) -> f64 {
    let mut sum = 0.0;
    let mut fact = 1.0;
    for n in 0..=n_max {
        let order = 2 * n + 1;
        if n > 0 {
            fact *= (2 * n) as f64 * (2 * n + 1) as f64;
        }
        let d = if order == 1 {
            model.derivative(1, x, 0.0, mass) - model.drive(0.0)
        } else {
            model.derivative(order, x, 0.0, mass)
        };
        sum += hbar.powi(2 * n as i32) * s.powi(order as i32) * d / (fact * 4f64.powi(n as i32));
    }
    sum
}
