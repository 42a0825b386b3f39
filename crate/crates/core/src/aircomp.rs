//! Zero-forcing data precoders, the denoising factor, computation-error
//! evaluation and an end-to-end simulation of the analog uplink.

use crate::channels::{stream, stream_rng, ChannelSet};
use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, real_trace, CMat, CVec, C64};
use crate::wpt::{zf_power_cost, WptPlan};

mod nomographic;

pub use nomographic::{aircompute, NomographicKind, NomographicSpec};

/// Normalized aggregation beamformer `F` (`tr(F F^H) = 1`), denoising factor
/// `eta`, and the full beamformer `A = sqrt(eta) F`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationSolution {
    pub f_norm: CMat,
    pub eta: f64,
    pub a: CMat,
}

impl AggregationSolution {
    pub fn new(f_norm: CMat, eta: f64) -> Result<Self> {
        let tr = f_norm.norm_squared();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::Shape(format!(
                "aggregation beamformer must have unit Frobenius norm, got tr(FF^H) = {tr}"
            )));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Infeasible(format!("denoising factor must be positive, got {eta}")));
        }
        let a = &f_norm * C64::from(eta.sqrt());
        Ok(AggregationSolution { f_norm, eta, a })
    }
}

/// Data precoders `B_k` (`n_sn x L`; `1 x 1` for single-antenna sensors).
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    pub b: Vec<CMat>,
}

impl PrecoderSet {
    /// Transmit power `tr(B_k B_k^H)` of each sensor.
    pub fn powers(&self) -> Vec<f64> {
        self.b.iter().map(|b| b.norm_squared()).collect()
    }

    /// Reject any sensor whose precoder power exceeds `budgets[k]` (plus 1e-9 relative slack).
    pub fn check_budgets(&self, budgets: &[f64]) -> Result<()> {
        for (sensor, (used, &budget)) in self.powers().into_iter().zip(budgets).enumerate() {
            if used > budget * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::PowerViolation {
                    sensor,
                    used,
                    budget,
                });
            }
        }
        Ok(())
    }
}

/// Channel-inversion precoders `b_k = 1 / (a^H h_k)`.
pub fn miso_precoders(a: &CVec, h: &[CVec]) -> Result<PrecoderSet> {
    let scale = a.norm() * h.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let b = h
        .iter()
        .enumerate()
        .map(|(sensor, hk)| {
            let gain = a.dotc(hk);
            if gain.norm() <= 1e-14 * scale || gain.norm() == 0.0 {
                return Err(Error::PrecoderSingular { sensor });
            }
            Ok(CMat::from_element(1, 1, C64::new(1.0, 0.0) / gain))
        })
        .collect::<Result<_>>()?;
    Ok(PrecoderSet { b })
}

/// Zero-forcing precoders `B_k = (A^H H_k)^H (A^H H_k H_k^H A)^{-1}`.
///
/// Evaluated through a QR factorization `(A^H H_k)^H = Q R`, so that
/// `B_k = Q R^{-H}` without forming the Gram matrix.
pub fn mimo_precoders(a: &CMat, h: &[CMat]) -> Result<PrecoderSet> {
    let b = h
        .iter()
        .enumerate()
        .map(|(sensor, hk)| {
            let beamed_h = hk.adjoint() * a;
            let (rows, cols) = beamed_h.shape();
            if rows < cols {
                return Err(Error::PrecoderSingular { sensor });
            }
            let qr = beamed_h.qr();
            let r = qr.r();
            let diag: Vec<f64> = r.diagonal().iter().map(|z| z.norm()).collect();
            let largest = diag.iter().cloned().fold(0.0, f64::max);
            if !(largest > 0.0) || diag.iter().any(|&d| d <= 1e-7 * largest) {
                return Err(Error::PrecoderSingular { sensor });
            }
            let r_inv = r
                .solve_upper_triangular(&CMat::identity(cols, cols))
                .ok_or(Error::PrecoderSingular { sensor })?;
            Ok(qr.q() * r_inv.adjoint())
        })
        .collect::<Result<_>>()?;
    Ok(PrecoderSet { b })
}

/// Zero-forcing precoders for either antenna configuration.
pub fn zf_precoders(a: &CMat, channels: &ChannelSet) -> Result<PrecoderSet> {
    if channels.is_miso() && a.ncols() == 1 {
        miso_precoders(&a.column(0).into_owned(), &channels.aircomp_vectors())
    } else {
        mimo_precoders(a, channels.aircomp())
    }
}

/// Smallest denoising factor allowed by the sensors' transmit budgets under
/// zero-forcing: `max_k tr((F^H H_k H_k^H F)^{-1}) / (gamma_k |u_k^H G_k v_k|^2 P_k)`.
pub fn denoising_factor(
    f: &CMat,
    channels: &ChannelSet,
    gamma: &[f64],
    plan: &WptPlan,
) -> Result<f64> {
    let budgets = plan.transmit_budgets(channels, gamma);
    let mut eta: f64 = 0.0;
    for (k, (hk, budget)) in channels.aircomp().iter().zip(&budgets).enumerate() {
        let cost = zf_power_cost(hk, f, k)?;
        if !(*budget > 0.0) {
            return Err(Error::Infeasible(format!(
                "sensor {k} has no transmit budget (power {:.3e})",
                plan.p[k]
            )));
        }
        eta = eta.max(cost / budget);
    }
    Ok(eta)
}

/// Computation error split into misalignment and noise contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseReport {
    pub mse_total: f64,
    pub misalignment: f64,
    pub noise_term: f64,
    /// `mse_total / K`.
    pub normalized: f64,
}

impl MseReport {
    pub fn new(misalignment: f64, noise_term: f64, k: usize) -> Self {
        let mse_total = misalignment + noise_term;
        MseReport {
            mse_total,
            misalignment,
            noise_term,
            normalized: mse_total / k as f64,
        }
    }
}

/// `sum_k ||A^H H_k B_k - I||_F^2 + noise_var tr(A^H A)`.
pub fn compute_mse(a: &CMat, precoders: &PrecoderSet, h: &[CMat], noise_var: f64) -> Result<MseReport> {
    if precoders.b.len() != h.len() {
        return Err(Error::Shape(format!(
            "{} precoders for {} channels",
            precoders.b.len(),
            h.len()
        )));
    }
    let l = a.ncols();
    let eye = CMat::identity(l, l);
    let mut misalignment = 0.0;
    for (hk, bk) in h.iter().zip(&precoders.b) {
        if hk.nrows() != a.nrows() || bk.nrows() != hk.ncols() || bk.ncols() != l {
            return Err(Error::Shape("beamformer, channel and precoder shapes disagree".into()));
        }
        misalignment += (a.adjoint() * hk * bk - &eye).norm_squared();
    }
    let noise_term = noise_var * real_trace(&(a.adjoint() * a));
    Ok(MseReport::new(misalignment, noise_term, h.len()))
}

/// One analog uplink: channels, aggregation beamformer, precoders and noise.
#[derive(Debug, Clone, Copy)]
pub struct Transmission<'a> {
    pub channels: &'a ChannelSet,
    pub a: &'a CMat,
    pub precoders: &'a PrecoderSet,
    pub noise_var: f64,
    /// Per-sensor transmit budgets to enforce, if any.
    pub budgets: Option<&'a [f64]>,
}

impl<'a> Transmission<'a> {
    /// `A^H sum_k H_k B_k s_k + A^H n` with `n ~ CN(0, noise_var I)` drawn from `noise_seed`.
    pub fn simulate(&self, symbols: &[CVec], noise_seed: u64) -> Result<CVec> {
        let k = self.channels.k();
        if symbols.len() != k || self.precoders.b.len() != k {
            return Err(Error::Shape(format!(
                "{} symbol vectors and {} precoders for {} sensors",
                symbols.len(),
                self.precoders.b.len(),
                k
            )));
        }
        if let Some(b) = self.budgets {
            self.precoders.check_budgets(b)?;
        }
        let n_ap = self.channels.n_ap();
        let mut rx = CVec::zeros(n_ap);
        for ((hk, bk), sk) in self.channels.aircomp().iter().zip(&self.precoders.b).zip(symbols) {
            if sk.len() != bk.ncols() {
                return Err(Error::Shape(format!(
                    "symbol length {} does not match {} streams",
                    sk.len(),
                    bk.ncols()
                )));
            }
            rx += hk * (bk * sk);
        }
        if self.noise_var > 0.0 {
            let mut rng = stream_rng(noise_seed, &[stream::NOISE]);
            for z in rx.iter_mut() {
                *z += complex_gaussian(&mut rng, self.noise_var);
            }
        }
        Ok(self.a.adjoint() * rx)
    }

    /// Sample average of `||s_hat - sum_k s_k||^2` over `draws` independent
    /// unit-variance Gaussian symbol and noise realizations.
    pub fn monte_carlo_mse(&self, draws: usize, seed: u64) -> Result<f64> {
        let l = self.a.ncols();
        let k = self.channels.k();
        let mut acc = 0.0;
        for d in 0..draws {
            let mut rng = stream_rng(seed, &[d as u64]);
            let symbols: Vec<CVec> = (0..k)
                .map(|_| CVec::from_fn(l, |_, _| complex_gaussian(&mut rng, 1.0)))
                .collect();
            let target = symbols.iter().fold(CVec::zeros(l), |acc, s| acc + s);
            let est = self.simulate(&symbols, crate::channels::derive_seed(seed, &[d as u64, 1]))?;
            acc += (est - target).norm_squared();
        }
        Ok(acc / draws as f64)
    }
}
