#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wpaircomp::channels::ChannelSet;
use wpaircomp::linalg::{complex_gaussian_matrix, real_trace, CMat, CVec, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rician-like entries `1 + CN(0, 1)`.
pub fn rician(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    complex_gaussian_matrix(rng, rows, cols, 1.0).map(|z| z + C64::new(1.0, 0.0))
}

pub fn miso_channels(rng: &mut ChaCha8Rng, k: usize, n: usize) -> ChannelSet {
    let g = (0..k).map(|_| rician(rng, n, 1)).collect();
    let h = (0..k).map(|_| rician(rng, n, 1)).collect();
    ChannelSet::new(g, h).unwrap()
}

pub fn mimo_channels(rng: &mut ChaCha8Rng, k: usize, n: usize, n_sn: usize) -> ChannelSet {
    let g = (0..k).map(|_| rician(rng, n, n_sn)).collect();
    let h = (0..k).map(|_| rician(rng, n, n_sn)).collect();
    ChannelSet::new(g, h).unwrap()
}

pub fn gammas(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(0.05..0.95)).collect()
}

/// Random full-rank unit-trace PSD matrix.
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let w = complex_gaussian_matrix(rng, n, n, 1.0);
    let x = &w * w.adjoint();
    &x / C64::from(real_trace(&x))
}

/// Random Hermitian matrix with unit Frobenius norm.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let w = complex_gaussian_matrix(rng, n, n, 1.0);
    let x = (&w + w.adjoint()) * C64::from(0.5);
    let norm = x.norm();
    x / C64::from(norm)
}

/// Orthonormal columns from the QR factor of a Gaussian matrix.
pub fn orthonormal(rng: &mut ChaCha8Rng, n: usize, l: usize) -> CMat {
    complex_gaussian_matrix(rng, n, l, 1.0).qr().q()
}

/// Dominant eigenpair of a Hermitian PSD matrix by power iteration.
pub fn power_iteration(m: &CMat, iters: usize) -> (f64, CVec) {
    let mut v = CVec::from_element(m.nrows(), C64::new(1.0, 0.0));
    for i in 0..m.nrows() {
        v[i] += C64::new(0.01 * i as f64, 0.003 * (i * i) as f64);
    }
    v /= C64::from(v.norm());
    for _ in 0..iters {
        let w = m * &v;
        let n = w.norm();
        v = w / C64::from(n);
    }
    let lam = v.dotc(&(m * &v)).re;
    (lam, v)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
