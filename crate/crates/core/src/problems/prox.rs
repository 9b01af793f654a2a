//! Proximal maps and the nonsmooth terms built on them.

use ndarray::Array1;

use crate::error::{Error, Result};

use super::NonsmoothTerm;

/// Soft-thresholding: componentwise minimizer of `μ|y| + (y - x_i)²/(2s)`.
///
/// Each component is shrunk toward zero by `s·μ` and clamped at zero.
pub fn prox_l1(x: &Array1<f64>, scale: f64, weight: f64) -> Array1<f64> {
    let shift = scale * weight;
    x.mapv(|v| {
        if v > shift {
            v - shift
        } else if v < -shift {
            v + shift
        } else {
            0.0
        }
    })
}

/// Projection onto the box `[lower, upper]`. Scale-free.
pub fn prox_box(x: &Array1<f64>, lower: &Array1<f64>, upper: &Array1<f64>) -> Result<Array1<f64>> {
    if lower.len() != x.len() || upper.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: lower.len().min(upper.len()),
        });
    }
    for (i, (&lo, &hi)) in lower.iter().zip(upper.iter()).enumerate() {
        if lo > hi {
            return Err(Error::InvalidBox {
                index: i,
                lower: lo,
                upper: hi,
            });
        }
    }
    Ok(Array1::from_iter(
        x.iter()
            .zip(lower.iter().zip(upper.iter()))
            .map(|(&v, (&lo, &hi))| v.clamp(lo, hi)),
    ))
}

/// Weighted `ℓ₁` term `μ‖x‖₁`.
pub struct L1Term {
    weight: f64,
}

impl L1Term {
    pub fn new(weight: f64) -> Self {
        Self { weight }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}

impl NonsmoothTerm for L1Term {
    fn value(&self, x: &Array1<f64>) -> f64 {
        self.weight * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn value_diff(&self, x: &Array1<f64>, y: &Array1<f64>) -> f64 {
        // Componentwise differences stay accurate when x ≈ y.
        self.weight
            * x.iter()
                .zip(y.iter())
                .map(|(&a, &b)| a.abs() - b.abs())
                .sum::<f64>()
    }

    fn prox(&self, x: &Array1<f64>, scale: f64) -> Array1<f64> {
        prox_l1(x, scale, self.weight)
    }
}

/// Indicator of the box `[lower, upper]`; prox is the projection.
pub struct BoxTerm {
    lower: Array1<f64>,
    upper: Array1<f64>,
}

impl BoxTerm {
    pub fn new(lower: Array1<f64>, upper: Array1<f64>) -> Result<Self> {
        for (i, (&lo, &hi)) in lower.iter().zip(upper.iter()).enumerate() {
            if lo > hi {
                return Err(Error::InvalidBox {
                    index: i,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, x: &Array1<f64>) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }
}

impl NonsmoothTerm for BoxTerm {
    fn value(&self, x: &Array1<f64>) -> f64 {
        if self.contains(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn value_diff(&self, x: &Array1<f64>, y: &Array1<f64>) -> f64 {
        match (self.contains(x), self.contains(y)) {
            (true, true) => 0.0,
            (false, true) => f64::INFINITY,
            (true, false) => f64::NEG_INFINITY,
            (false, false) => f64::NAN,
        }
    }

    fn prox(&self, x: &Array1<f64>, _scale: f64) -> Array1<f64> {
        prox_box(x, &self.lower, &self.upper).expect("bounds validated at construction")
    }

    fn clamp_to_domain(&self, x: Array1<f64>) -> Array1<f64> {
        prox_box(&x, &self.lower, &self.upper).expect("bounds validated at construction")
    }
}

/// The zero function; its prox is the identity.
pub struct ZeroTerm;

impl NonsmoothTerm for ZeroTerm {
    fn value(&self, _x: &Array1<f64>) -> f64 {
        0.0
    }

    fn value_diff(&self, _x: &Array1<f64>, _y: &Array1<f64>) -> f64 {
        0.0
    }

    fn prox(&self, x: &Array1<f64>, _scale: f64) -> Array1<f64> {
        x.clone()
    }
}
