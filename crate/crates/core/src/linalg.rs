//! Small dense complex linear-algebra helpers on top of `nalgebra`.
//!
//! Decompositions from `nalgebra` do not promise any ordering of their
//! spectra, so everything here sorts explicitly and applies a fixed phase
//! convention to singular/eigen vectors. That keeps beams and beamformers
//! reproducible across runs.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Zero-mean circularly symmetric complex Gaussian sample with total variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Matrix of i.i.d. CN(0, var) entries, filled row by row.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    var: f64,
) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_gaussian(rng, var);
        }
    }
    m
}

/// Random unit vector, uniformly distributed on the complex sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    loop {
        let v = CVec::from_fn(n, |_, _| complex_gaussian(rng, 1.0));
        let norm = v.norm();
        if norm > 1e-300 {
            return v / C64::from(norm);
        }
    }
}

/// Multiply every entry so that the first component with modulus above
/// `1e-12 * max` becomes real and positive. Returns the applied unit phase.
pub fn canonicalize_phase(v: &mut CVec) -> C64 {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let lead = v
        .iter()
        .find(|z| z.norm() > 1e-12 * max)
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = lead.conj() / C64::from(lead.norm());
    for z in v.iter_mut() {
        *z *= phase;
    }
    phase
}

/// Largest absolute entry of `m - m^H`.
pub fn hermitian_asymmetry(m: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::from(0.5)
}

/// Real inner product `Re tr(a^H b)` on complex matrices.
pub fn real_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Real trace of a (Hermitian) matrix.
pub fn real_trace(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// nonincreasing. Eigenvector columns follow the same order and carry the
/// canonical phase.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Self {
        let n = m.nrows();
        let eig = SymmetricEigen::new(hermitian_part(m));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col: CVec = eig.eigenvectors.column(src).into_owned();
            canonicalize_phase(&mut col);
            vectors.set_column(dst, &col);
        }
        HermitianEigen { values, vectors }
    }

    /// Smallest eigenvalue and a unit eigenvector for it. When the smallest
    /// eigenvalue is (numerically) repeated, the candidate eigenvector that is
    /// lexicographically largest by component real/imaginary parts is chosen.
    pub fn min_pair(&self) -> (f64, CVec) {
        let n = self.values.len();
        let lmin = self.values[n - 1];
        let scale = self.values[0].abs().max(lmin.abs()).max(1e-300);
        let mut best: Option<CVec> = None;
        for j in (0..n).rev() {
            if (self.values[j] - lmin).abs() > 1e-12 * scale {
                break;
            }
            let cand: CVec = self.vectors.column(j).into_owned();
            best = match best {
                None => Some(cand),
                Some(b) => {
                    if lexicographic_gt(&cand, &b) {
                        Some(cand)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        (lmin, best.expect("nonempty spectrum"))
    }

    /// Rebuild `V diag(values) V^H` with the supplied (possibly modified) spectrum.
    pub fn recompose(&self, values: &[f64]) -> CMat {
        let n = self.vectors.nrows();
        let mut out = CMat::zeros(n, n);
        for (j, &lam) in values.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            let v = self.vectors.column(j);
            out += (v * v.adjoint()) * C64::from(lam);
        }
        hermitian_part(&out)
    }
}

fn lexicographic_gt(a: &CVec, b: &CVec) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        for (p, q) in [(x.re, y.re), (x.im, y.im)] {
            if (p - q).abs() > 1e-12 {
                return p > q;
            }
        }
    }
    false
}

/// Singular value decomposition with values sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub values: Vec<f64>,
    /// Left singular vectors as columns.
    pub left: CMat,
    /// Right singular vectors as columns.
    pub right: CMat,
}

impl SortedSvd {
    pub fn new(m: &CMat) -> Self {
        let svd = SVD::new(m.clone(), true, true);
        let u = svd.u.expect("left vectors requested");
        let v = svd.v_t.expect("right vectors requested").adjoint();
        let r = svd.singular_values.len();
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut left = CMat::zeros(m.nrows(), r);
        let mut right = CMat::zeros(m.ncols(), r);
        let mut values = Vec::with_capacity(r);
        for (dst, &src) in order.iter().enumerate() {
            let mut lu: CVec = u.column(src).into_owned();
            let phase = canonicalize_phase(&mut lu);
            let rv: CVec = v.column(src).into_owned() * phase;
            left.set_column(dst, &lu);
            right.set_column(dst, &rv);
            values.push(svd.singular_values[src]);
        }
        SortedSvd {
            values,
            left,
            right,
        }
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    SortedSvd::new(m).values.first().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the column space of `m`, dropping directions whose
/// singular value is below `rel_tol * sigma_max`.
pub fn column_space_basis(m: &CMat, rel_tol: f64) -> CMat {
    let svd = SortedSvd::new(m);
    let smax = svd.values.first().copied().unwrap_or(0.0);
    let rank = svd
        .values
        .iter()
        .take_while(|&&s| s > rel_tol * smax && s > 0.0)
        .count();
    svd.left.columns(0, rank).into_owned()
}

/// Inverse of a Hermitian positive-definite matrix, or `None` when it is
/// singular or indefinite.
pub fn hpd_inverse(m: &CMat) -> Option<CMat> {
    let h = hermitian_part(m);
    let scale = h.diagonal().iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let chol = Cholesky::new(h)?;
    let l = chol.l_dirty();
    let min_pivot = l.diagonal().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if min_pivot * min_pivot <= 1e-14 * scale {
        return None;
    }
    Some(chol.inverse())
}

/// `tr(m^{-1})` for Hermitian positive-definite `m`.
pub fn hpd_inverse_trace(m: &CMat) -> Option<f64> {
    hpd_inverse(m).map(|inv| real_trace(&inv))
}

/// Complex matrix from real entries.
pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMat {
    CMat::from_row_iterator(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)))
}

/// Complex column vector from real entries.
pub fn real_vector(data: &[f64]) -> CVec {
    CVec::from_iterator(data.len(), data.iter().map(|&x| C64::new(x, 0.0)))
}

/// Frobenius distance between two matrices.
pub fn frobenius_distance(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

/// `|a^H b|^2` for column vectors.
pub fn inner_gain(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = complex_gaussian_matrix(&mut rng, 4, 4, 1.0);
        let h = &x * x.adjoint();
        let eig = HermitianEigen::new(&h);
        for w in eig.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let back = eig.recompose(&eig.values);
        assert!(frobenius_distance(&back, &h) < 1e-10);
    }

    #[test]
    fn svd_sorted_and_canonical() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = complex_gaussian_matrix(&mut rng, 5, 3, 1.0);
        let svd = SortedSvd::new(&g);
        assert_eq!(svd.values.len(), 3);
        assert!(svd.values[0] >= svd.values[1] && svd.values[1] >= svd.values[2]);
        let u0: CVec = svd.left.column(0).into_owned();
        let v0: CVec = svd.right.column(0).into_owned();
        let gain = u0.dotc(&(&g * &v0));
        assert!((gain.re - svd.values[0]).abs() < 1e-10);
        assert!(gain.im.abs() < 1e-10);
        let lead = u0.iter().find(|z| z.norm() > 1e-12).unwrap();
        assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
    }

    #[test]
    fn column_space_of_rank_deficient_matrix() {
        let a = real_vector(&[1.0, 2.0, 0.0]);
        let b = real_vector(&[0.0, 1.0, 1.0]);
        let m = CMat::from_columns(&[a.clone(), b, a * C64::from(2.0)]);
        let q = column_space_basis(&m, 1e-10);
        assert_eq!(q.ncols(), 2);
        let gram = q.adjoint() * &q;
        assert!(frobenius_distance(&gram, &CMat::identity(2, 2)) < 1e-12);
    }

    #[test]
    fn hpd_inverse_rejects_singular() {
        let m = real_matrix(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(hpd_inverse(&m).is_none());
        let m = real_matrix(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        assert!((hpd_inverse_trace(&m).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn min_pair_tie_break_is_deterministic() {
        let eig = HermitianEigen::new(&CMat::identity(3, 3));
        let (lam, v) = eig.min_pair();
        assert!((lam - 1.0).abs() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let (_, v2) = HermitianEigen::new(&CMat::identity(3, 3)).min_pair();
        assert_eq!(v, v2);
    }
}
