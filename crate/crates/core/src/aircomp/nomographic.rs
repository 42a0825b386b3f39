//! Nomographic target functions `y = f(sum_k g_k(x_k))` and their
//! computation over the air.
//!
//! Decompositions used:
//!
//! | function        | pre-processing `g_k(x)` | post-processing `f(y)` |
//! |-----------------|-------------------------|------------------------|
//! | arithmetic mean | `x`                     | `y / K`                |
//! | weighted sum    | `w_k x`                 | `y`                    |
//! | geometric mean  | `ln x`                  | `exp(y / K)`           |
//! | polynomial      | `w_k x^b_k`             | `y`                    |
//! | euclidean norm  | `x^2`                   | `sqrt(y)`              |

use super::Transmission;
use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NomographicKind {
    ArithmeticMean,
    WeightedSum,
    GeometricMean,
    Polynomial,
    EuclideanNorm,
}

impl NomographicKind {
    pub const ALL: [NomographicKind; 5] = [
        NomographicKind::ArithmeticMean,
        NomographicKind::WeightedSum,
        NomographicKind::GeometricMean,
        NomographicKind::Polynomial,
        NomographicKind::EuclideanNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NomographicKind::ArithmeticMean => "arithmetic-mean",
            NomographicKind::WeightedSum => "weighted-sum",
            NomographicKind::GeometricMean => "geometric-mean",
            NomographicKind::Polynomial => "polynomial",
            NomographicKind::EuclideanNorm => "euclidean-norm",
        }
    }
}

impl std::str::FromStr for NomographicKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown nomographic function {s:?}")))
    }
}

/// A target function together with its per-sensor weights and exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct NomographicSpec {
    pub kind: NomographicKind,
    /// `w_k`, used by the weighted sum and the polynomial.
    pub weights: Vec<f64>,
    /// `b_k`, used by the polynomial.
    pub exponents: Vec<f64>,
}

impl NomographicSpec {
    pub fn new(kind: NomographicKind) -> Self {
        NomographicSpec {
            kind,
            weights: Vec::new(),
            exponents: Vec::new(),
        }
    }

    pub fn weighted_sum(weights: Vec<f64>) -> Self {
        NomographicSpec {
            kind: NomographicKind::WeightedSum,
            weights,
            exponents: Vec::new(),
        }
    }

    pub fn polynomial(weights: Vec<f64>, exponents: Vec<f64>) -> Self {
        NomographicSpec {
            kind: NomographicKind::Polynomial,
            weights,
            exponents,
        }
    }

    fn check_params(&self, k: usize) -> Result<()> {
        let needs_weights = matches!(
            self.kind,
            NomographicKind::WeightedSum | NomographicKind::Polynomial
        );
        if needs_weights && self.weights.len() != k {
            return Err(Error::Domain(format!(
                "{} needs {k} weights, got {}",
                self.kind.name(),
                self.weights.len()
            )));
        }
        if self.kind == NomographicKind::Polynomial && self.exponents.len() != k {
            return Err(Error::Domain(format!(
                "polynomial needs {k} exponents, got {}",
                self.exponents.len()
            )));
        }
        if self.weights.iter().chain(&self.exponents).any(|w| !w.is_finite()) {
            return Err(Error::Domain("weights and exponents must be finite".into()));
        }
        Ok(())
    }

    /// `g_k(x)` for sensor `k`.
    pub fn preprocess(&self, k: usize, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("input {x} is not finite")));
        }
        let out = match self.kind {
            NomographicKind::ArithmeticMean => x,
            NomographicKind::WeightedSum => self.weights[k] * x,
            NomographicKind::GeometricMean => {
                if x <= 0.0 {
                    return Err(Error::Domain(format!(
                        "geometric mean needs positive inputs, got {x}"
                    )));
                }
                x.ln()
            }
            NomographicKind::Polynomial => {
                let b = self.exponents[k];
                if x < 0.0 && b.fract() != 0.0 {
                    return Err(Error::Domain(format!(
                        "non-integer exponent {b} of negative input {x}"
                    )));
                }
                if x == 0.0 && b < 0.0 {
                    return Err(Error::Domain("negative exponent of zero input".into()));
                }
                self.weights[k] * x.powf(b)
            }
            NomographicKind::EuclideanNorm => x * x,
        };
        Ok(out)
    }

    /// `f(y)` for `k` sensors.
    pub fn postprocess(&self, y: f64, k: usize) -> f64 {
        match self.kind {
            NomographicKind::ArithmeticMean => y / k as f64,
            NomographicKind::WeightedSum | NomographicKind::Polynomial => y,
            NomographicKind::GeometricMean => (y / k as f64).exp(),
            NomographicKind::EuclideanNorm => y.max(0.0).sqrt(),
        }
    }

    /// Direct evaluation of the target expression, for reference.
    pub fn evaluate(&self, xs: &[f64]) -> Result<f64> {
        let k = xs.len();
        self.check_params(k)?;
        let out = match self.kind {
            NomographicKind::ArithmeticMean => xs.iter().sum::<f64>() / k as f64,
            NomographicKind::WeightedSum => xs.iter().zip(&self.weights).map(|(x, w)| w * x).sum(),
            NomographicKind::GeometricMean => {
                if let Some(x) = xs.iter().find(|&&x| x <= 0.0) {
                    return Err(Error::Domain(format!(
                        "geometric mean needs positive inputs, got {x}"
                    )));
                }
                xs.iter().product::<f64>().powf(1.0 / k as f64)
            }
            NomographicKind::Polynomial => xs
                .iter()
                .zip(self.weights.iter().zip(&self.exponents))
                .map(|(x, (w, b))| w * x.powf(*b))
                .sum(),
            NomographicKind::EuclideanNorm => xs.iter().map(|x| x * x).sum::<f64>().sqrt(),
        };
        Ok(out)
    }
}

/// Compute `spec` over the air. `values[k][l]` is sensor `k`'s measurement of
/// parameter `l`; the result holds one function value per parameter.
pub fn aircompute(
    values: &[Vec<f64>],
    spec: &NomographicSpec,
    link: &Transmission<'_>,
    noise_seed: u64,
) -> Result<Vec<f64>> {
    let k = link.channels.k();
    let l = link.a.ncols();
    if values.len() != k || values.iter().any(|v| v.len() != l) {
        return Err(Error::Shape(format!("expected {k} sensors with {l} values each")));
    }
    spec.check_params(k)?;
    let symbols = values
        .iter()
        .enumerate()
        .map(|(sensor, row)| {
            row.iter()
                .map(|&x| spec.preprocess(sensor, x).map(|s| C64::new(s, 0.0)))
                .collect::<Result<Vec<_>>>()
                .map(CVec::from_vec)
        })
        .collect::<Result<Vec<_>>>()?;
    let received = link.simulate(&symbols, noise_seed)?;
    Ok(received.iter().map(|y| spec.postprocess(y.re, k)).collect())
}
