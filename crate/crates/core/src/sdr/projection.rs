//! Euclidean projection onto the set of Hermitian matrices with unit trace
//! and spectrum in `[0, 1]`.

use log::warn;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_asymmetry, hermitian_part, CMat, HermitianEigen};

/// Asymmetry up to which an input is silently symmetrized (with a warning).
pub const SYMMETRIZE_TOL: f64 = 1e-8;

/// Project `values` onto `{x : sum x = 1, 0 <= x <= 1}`.
///
/// The upper bound never binds for a unit-sum nonnegative vector, so this
/// is the ordinary sort-and-threshold simplex projection.
pub fn project_simplex(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    assert!(n > 0, "cannot project an empty spectrum");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = 0.0;
    let mut tau = sorted[0] - 1.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    values.iter().map(|&v| (v - tau).max(0.0)).collect()
}

/// Projection of a Hermitian matrix onto `{F : tr F = 1, 0 <= F <= I}` in
/// Frobenius norm, returned together with its eigendecomposition and
/// projected spectrum (sorted nonincreasing).
pub fn project_density_with_spectrum(x: &CMat) -> Result<(CMat, HermitianEigen, Vec<f64>)> {
    if !x.is_square() || x.nrows() == 0 {
        return Err(Error::Shape(format!("expected a nonempty square matrix, got {:?}", x.shape())));
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Shape("matrix has non-finite entries".into()));
    }
    let asym = hermitian_asymmetry(x);
    let scale = x.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if asym > SYMMETRIZE_TOL * scale {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    // Rounding-level asymmetry is not worth reporting.
    if asym > 1e-12 * scale {
        warn!("symmetrizing nearly Hermitian input (asymmetry {asym:.3e})");
    }
    let eig = HermitianEigen::new(&hermitian_part(x));
    let spectrum = project_simplex(&eig.values);
    let out = eig.recompose(&spectrum);
    Ok((out, eig, spectrum))
}

/// Projection of a Hermitian matrix onto unit-trace matrices with spectrum in `[0, 1]`.
pub fn project_density(x: &CMat) -> Result<CMat> {
    project_density_with_spectrum(x).map(|(m, _, _)| m)
}
