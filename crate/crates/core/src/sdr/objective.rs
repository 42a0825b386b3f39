//! Convex objectives over lifted (trace-one PSD) beamformer matrices.
//!
//! Each objective is a weighted sum or maximum of `w_k / x_k(F)` where
//! `x_k(F)` is either the beamformed gain `h_k^H F h_k` (single-antenna
//! sensors) or `lambda_min(H_k^H F H_k)` (multi-antenna sensors). Both gains
//! are concave in `F`, so the objectives are convex on the region where every
//! gain is positive.

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, HermitianEigen, C64};

/// A convex function of a Hermitian matrix with a (sub)gradient oracle.
pub trait LiftedObjective: Sync {
    /// Side length of the matrix variable.
    fn dim(&self) -> usize;

    /// Objective value and a (sub)gradient, or [`Error::Boundary`] when some
    /// gain is not positive.
    fn evaluate(&self, f_hat: &CMat) -> Result<(f64, CMat)>;

    /// Objective value only.
    fn value(&self, f_hat: &CMat) -> Result<f64> {
        self.evaluate(f_hat).map(|(v, _)| v)
    }

    /// Whether the objective is differentiable on its domain.
    fn is_smooth(&self) -> bool;
}

/// How per-sensor terms `w_k / x_k` are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Sum,
    Max,
}

/// Per-sensor gain functional.
#[derive(Debug, Clone)]
pub enum SensorGain {
    /// `h^H F h`.
    Vector(CVec),
    /// `lambda_min(H^H F H)`.
    Matrix(CMat),
}

impl SensorGain {
    fn dim(&self) -> usize {
        match self {
            SensorGain::Vector(h) => h.len(),
            SensorGain::Matrix(h) => h.nrows(),
        }
    }

    /// Gain value and a supergradient (gradient when smooth).
    fn eval(&self, f_hat: &CMat) -> (f64, CMat) {
        match self {
            SensorGain::Vector(h) => {
                let x = h.dotc(&(f_hat * h)).re;
                (x, h * h.adjoint())
            }
            SensorGain::Matrix(h) => {
                let m = h.adjoint() * f_hat * h;
                let eig = HermitianEigen::new(&m);
                let (lam, w) = eig.min_pair();
                let hw = h * w;
                (lam, &hw * hw.adjoint())
            }
        }
    }

    fn value(&self, f_hat: &CMat) -> f64 {
        match self {
            SensorGain::Vector(h) => h.dotc(&(f_hat * h)).re,
            SensorGain::Matrix(h) => {
                let m = h.adjoint() * f_hat * h;
                *HermitianEigen::new(&m).values.last().expect("nonempty")
            }
        }
    }
}

/// `combine_k weights[k] / gain_k(F)`.
#[derive(Debug, Clone)]
pub struct InverseGainObjective {
    pub gains: Vec<SensorGain>,
    pub weights: Vec<f64>,
    pub aggregate: Aggregate,
}

impl InverseGainObjective {
    pub fn new(gains: Vec<SensorGain>, weights: Vec<f64>, aggregate: Aggregate) -> Result<Self> {
        if gains.is_empty() || gains.len() != weights.len() {
            return Err(Error::Shape(format!(
                "{} gains and {} weights",
                gains.len(),
                weights.len()
            )));
        }
        let d = gains[0].dim();
        if gains.iter().any(|g| g.dim() != d) {
            return Err(Error::Shape("sensor channels have different dimensions".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Shape(format!("weights must be positive and finite, got {w}")));
        }
        Ok(InverseGainObjective {
            gains,
            weights,
            aggregate,
        })
    }

    /// Per-sensor gains `x_k(F)`.
    pub fn sensor_gains(&self, f_hat: &CMat) -> Vec<f64> {
        self.gains.iter().map(|g| g.value(f_hat)).collect()
    }
}

impl LiftedObjective for InverseGainObjective {
    fn dim(&self) -> usize {
        self.gains[0].dim()
    }

    fn evaluate(&self, f_hat: &CMat) -> Result<(f64, CMat)> {
        let d = self.dim();
        if f_hat.shape() != (d, d) {
            return Err(Error::Shape(format!("expected {d}x{d} matrix, got {:?}", f_hat.shape())));
        }
        let mut total = match self.aggregate {
            Aggregate::Sum => 0.0,
            Aggregate::Max => f64::NEG_INFINITY,
        };
        let mut grad = CMat::zeros(d, d);
        for (k, (gain, w)) in self.gains.iter().zip(&self.weights).enumerate() {
            let (x, dx) = gain.eval(f_hat);
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Boundary(format!("sensor {k} has gain {x:.3e}")));
            }
            let term = w / x;
            let scale = C64::from(-w / (x * x));
            match self.aggregate {
                Aggregate::Sum => {
                    total += term;
                    grad += dx * scale;
                }
                Aggregate::Max => {
                    // Strict comparison keeps the lowest index on ties.
                    if term > total {
                        total = term;
                        grad = dx * scale;
                    }
                }
            }
        }
        Ok((total, grad))
    }

    fn value(&self, f_hat: &CMat) -> Result<f64> {
        let mut total = match self.aggregate {
            Aggregate::Sum => 0.0,
            Aggregate::Max => f64::NEG_INFINITY,
        };
        for (k, (gain, w)) in self.gains.iter().zip(&self.weights).enumerate() {
            let x = gain.value(f_hat);
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Boundary(format!("sensor {k} has gain {x:.3e}")));
            }
            match self.aggregate {
                Aggregate::Sum => total += w / x,
                Aggregate::Max => total = total.max(w / x),
            }
        }
        Ok(total)
    }

    fn is_smooth(&self) -> bool {
        self.aggregate == Aggregate::Sum
            && self.gains.iter().all(|g| matches!(g, SensorGain::Vector(_)))
    }
}
