//! Aggregation-beamformer design by semidefinite relaxation.
//!
//! The normalized beamformer `F` is lifted to `F_hat = F F^H`, the rank
//! constraint is dropped, and the resulting convex problem over unit-trace
//! PSD matrices is solved with [`ProjectedGradient`]. Gaussian randomization
//! then rounds `F_hat` back to a beamformer.
//!
//! The objectives only see `F_hat` through `H_k^H F_hat H_k`, so an optimal
//! `F_hat` can be taken inside the span of the AirComp channels. Problems are
//! solved in an orthonormal basis of that span and lifted back, which keeps
//! the per-iteration cost independent of the server antenna count.

mod objective;
mod projection;
mod solver;

use rand::Rng;
use rayon::prelude::*;

pub use objective::{Aggregate, InverseGainObjective, LiftedObjective, SensorGain};
pub use projection::{project_density, project_density_with_spectrum, project_simplex};
pub use solver::{write_trace_csv, LiftedSolver, ProjectedGradient, SolverOutput, TraceEntry};

use crate::channels::{
    derive_seed, resolve_gammas, sample_channels, stream, stream_rng, ChannelSet, SolverSettings,
    SystemConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{
    column_space_basis, complex_gaussian, hpd_inverse_trace, CMat, CVec, HermitianEigen, SortedSvd,
    C64,
};

/// Which relaxed sum-of-inverse-gains problem to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// Single-antenna sensors: `sum_k c_k / tr(h_k h_k^H F_hat)`.
    Miso,
    /// Multi-antenna sensors: `sum_k c_k L / lambda_min(H_k^H F_hat H_k)`.
    Mimo,
}

/// Optimum (or best iterate) of a lifted problem.
#[derive(Debug, Clone)]
pub struct LiftedSolution {
    /// Hermitian `n_ap x n_ap`, unit trace, PSD.
    pub f_hat: CMat,
    pub objective: f64,
    /// Eigenvalues of `f_hat`, nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// `lambda_2 / lambda_1` below the configured tolerance.
    pub rank_one: bool,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

impl LiftedSolution {
    /// `lambda_2 / lambda_1` (zero for a 1x1 problem).
    pub fn eigen_ratio(&self) -> f64 {
        match self.eigenvalues.as_slice() {
            [l1, l2, ..] if *l1 > 0.0 => (l2 / l1).max(0.0),
            _ => 0.0,
        }
    }
}

fn sigma_max_sq(g: &CMat) -> f64 {
    let s = SortedSvd::new(g).values[0];
    s * s
}

/// A lifted problem in full coordinates plus its restriction to the channel span.
#[derive(Debug, Clone)]
pub struct LiftedProblem {
    full: InverseGainObjective,
    reduced: InverseGainObjective,
    /// Orthonormal basis of the channel span; `None` when it is the whole space.
    basis: Option<CMat>,
}

impl LiftedProblem {
    pub fn new(gains: Vec<SensorGain>, weights: Vec<f64>, aggregate: Aggregate) -> Result<Self> {
        let full = InverseGainObjective::new(gains, weights, aggregate)?;
        let n = full.dim();
        let columns: Vec<CVec> = full
            .gains
            .iter()
            .flat_map(|g| match g {
                SensorGain::Vector(h) => vec![h.clone()],
                SensorGain::Matrix(h) => h.column_iter().map(|c| c.into_owned()).collect(),
            })
            .collect();
        let stacked = CMat::from_columns(&columns);
        let q = column_space_basis(&stacked, 1e-12);
        if q.ncols() == 0 {
            return Err(Error::DegenerateChannel("all AirComp channels are zero".into()));
        }
        if q.ncols() >= n {
            return Ok(LiftedProblem {
                reduced: full.clone(),
                full,
                basis: None,
            });
        }
        let gains = full
            .gains
            .iter()
            .map(|g| match g {
                SensorGain::Vector(h) => SensorGain::Vector(q.adjoint() * h),
                SensorGain::Matrix(h) => SensorGain::Matrix(q.adjoint() * h),
            })
            .collect();
        let reduced = InverseGainObjective::new(gains, full.weights.clone(), aggregate)?;
        Ok(LiftedProblem {
            full,
            reduced,
            basis: Some(q),
        })
    }

    /// Sum-of-inverse-gains relaxation for the jointly optimal power allocation.
    pub fn sum_inverse(
        kind: ProblemKind,
        channels: &ChannelSet,
        gamma: &[f64],
        p0: f64,
        l: usize,
    ) -> Result<Self> {
        check_inputs(channels, gamma, p0)?;
        let (gains, weights) = match kind {
            ProblemKind::Miso => miso_terms(channels, gamma, p0),
            ProblemKind::Mimo => mimo_terms(channels, gamma, p0, l as f64),
        };
        Self::new(gains, weights, Aggregate::Sum)
    }

    /// Max-of-inverse-gains relaxation for a fixed equal power split
    /// (`P_k = p0 / K`).
    pub fn max_inverse(channels: &ChannelSet, gamma: &[f64], p0: f64, l: usize) -> Result<Self> {
        check_inputs(channels, gamma, p0)?;
        let k = channels.k() as f64;
        let (gains, weights) = if channels.is_miso() {
            miso_terms(channels, gamma, p0)
        } else {
            mimo_terms(channels, gamma, p0, l as f64)
        };
        Self::new(gains, weights.into_iter().map(|w| w * k).collect(), Aggregate::Max)
    }

    /// Objective in full `n_ap x n_ap` coordinates.
    pub fn objective(&self) -> &InverseGainObjective {
        &self.full
    }

    /// Dimension of the channel span the solver works in.
    pub fn reduced_dim(&self) -> usize {
        self.reduced.dim()
    }

    fn lift(&self, x: &CMat) -> CMat {
        match &self.basis {
            Some(q) => q * x * q.adjoint(),
            None => x.clone(),
        }
    }

    /// Minimize from the uniform start `I / d` and lift the result to full coordinates.
    pub fn solve(&self, solver: &dyn LiftedSolver, rank_one_ratio_tol: f64) -> Result<LiftedSolution> {
        let d = self.reduced.dim();
        let start = CMat::identity(d, d) / C64::from(d as f64);
        let out = solver.minimize(&self.reduced, &start)?;
        let n = self.full.dim();
        let mut eigenvalues = out.spectrum.clone();
        eigenvalues.resize(n, 0.0);
        let mut sol = LiftedSolution {
            f_hat: self.lift(&out.f_hat),
            objective: out.objective,
            eigenvalues,
            rank_one: false,
            iterations: out.iterations,
            converged: out.converged,
            trace: out.trace,
        };
        sol.rank_one = sol.eigen_ratio() < rank_one_ratio_tol;
        Ok(sol)
    }
}

fn check_inputs(channels: &ChannelSet, gamma: &[f64], p0: f64) -> Result<()> {
    if gamma.len() != channels.k() {
        return Err(Error::Shape(format!(
            "{} efficiencies for {} sensors",
            gamma.len(),
            channels.k()
        )));
    }
    if !(p0 > 0.0) {
        return Err(Error::Config(format!("p0 must be positive, got {p0}")));
    }
    Ok(())
}

fn miso_terms(channels: &ChannelSet, gamma: &[f64], p0: f64) -> (Vec<SensorGain>, Vec<f64>) {
    (0..channels.k())
        .map(|k| {
            let w = 1.0 / (gamma[k] * channels.wpt_vector(k).norm_squared() * p0);
            (SensorGain::Vector(channels.aircomp_vector(k)), w)
        })
        .unzip()
}

fn mimo_terms(channels: &ChannelSet, gamma: &[f64], p0: f64, l: f64) -> (Vec<SensorGain>, Vec<f64>) {
    (0..channels.k())
        .map(|k| {
            let w = l / (gamma[k] * sigma_max_sq(&channels.wpt()[k]) * p0);
            (SensorGain::Matrix(channels.aircomp()[k].clone()), w)
        })
        .unzip()
}

/// Relaxed single-antenna objective `sum_k 1 / (gamma_k tr(h_k h_k^H F_hat) ||g_k||^2 p0)`
/// and its gradient.
pub fn relaxed_miso_objective(
    f_hat: &CMat,
    h: &[CVec],
    g: &[CVec],
    gamma: &[f64],
    p0: f64,
) -> Result<(f64, CMat)> {
    let channels = ChannelSet::from_vectors(g.to_vec(), h.to_vec())?;
    check_inputs(&channels, gamma, p0)?;
    let (gains, weights) = miso_terms(&channels, gamma, p0);
    InverseGainObjective::new(gains, weights, Aggregate::Sum)?.evaluate(f_hat)
}

/// Relaxed multi-antenna objective
/// `sum_k L / (gamma_k sigma_max^2(G_k) lambda_min(H_k^H F_hat H_k) p0)` and a subgradient.
pub fn relaxed_mimo_objective(
    f_hat: &CMat,
    h: &[CMat],
    g: &[CMat],
    gamma: &[f64],
    p0: f64,
    l: usize,
) -> Result<(f64, CMat)> {
    let channels = ChannelSet::new(g.to_vec(), h.to_vec())?;
    check_inputs(&channels, gamma, p0)?;
    let (gains, weights) = mimo_terms(&channels, gamma, p0, l as f64);
    InverseGainObjective::new(gains, weights, Aggregate::Sum)?.evaluate(f_hat)
}

/// Solve the relaxed aggregation-beamformer problem with the default solver.
pub fn solve_lifted(
    kind: ProblemKind,
    channels: &ChannelSet,
    gamma: &[f64],
    p0: f64,
    settings: &SolverSettings,
) -> Result<LiftedSolution> {
    solve_lifted_with(&ProjectedGradient::new(settings.clone()), kind, channels, gamma, p0, settings)
}

/// Solve the relaxed aggregation-beamformer problem with a caller-supplied backend.
pub fn solve_lifted_with(
    solver: &dyn LiftedSolver,
    kind: ProblemKind,
    channels: &ChannelSet,
    gamma: &[f64],
    p0: f64,
    settings: &SolverSettings,
) -> Result<LiftedSolution> {
    let l = match kind {
        ProblemKind::Miso => 1,
        ProblemKind::Mimo => channels.n_sn(),
    };
    LiftedProblem::sum_inverse(kind, channels, gamma, p0, l)?.solve(solver, settings.rank_one_ratio_tol)
}

/// Beamformer objective `sum_k 1 / (gamma_k ||g_k||^2 |h_k^H f|^2 p0)`; infinite
/// when some sensor is orthogonal to `f`.
pub fn miso_beamformer_objective(f: &CVec, channels: &ChannelSet, gamma: &[f64], p0: f64) -> f64 {
    (0..channels.k())
        .map(|k| {
            let x = gamma[k]
                * channels.wpt_vector(k).norm_squared()
                * channels.aircomp_vector(k).dotc(f).norm_sqr()
                * p0;
            if x > 0.0 {
                1.0 / x
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// Beamformer objective `sum_k tr((F^H H_k H_k^H F)^{-1}) / (gamma_k sigma_max^2(G_k) p0)`,
/// or `None` when some beamformed channel is singular.
pub fn mimo_beamformer_objective(f: &CMat, channels: &ChannelSet, gamma: &[f64], p0: f64) -> Option<f64> {
    let mut total = 0.0;
    for k in 0..channels.k() {
        let beamed = f.adjoint() * &channels.aircomp()[k];
        let cost = hpd_inverse_trace(&(&beamed * beamed.adjoint()))?;
        total += cost / (gamma[k] * sigma_max_sq(&channels.wpt()[k]) * p0);
    }
    Some(total)
}

/// `V Sigma^{1/2}` restricted to the positive part of the spectrum.
fn gaussian_factor(f_hat: &CMat) -> CMat {
    let eig = HermitianEigen::new(f_hat);
    let top = eig.values[0].max(0.0);
    let cols: Vec<CVec> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 1e-14 * top && v > 0.0)
        .map(|(j, &v)| eig.vectors.column(j) * C64::from(v.sqrt()))
        .collect();
    if cols.is_empty() {
        CMat::zeros(f_hat.nrows(), 1)
    } else {
        CMat::from_columns(&cols)
    }
}

fn principal_vectors(f_hat: &CMat, l: usize) -> CMat {
    HermitianEigen::new(f_hat).vectors.columns(0, l).into_owned()
}

/// Gaussian randomization for a vector beamformer: the dominant eigenvector
/// of `F_hat` plus `m` samples `V Sigma^{1/2} z / ||.||` with `z ~ CN(0, I)`;
/// returns the candidate with the smallest `score` and that score.
pub fn randomize_vector_with<S>(f_hat: &CMat, m: usize, seed: u64, score: S) -> Result<(CVec, f64)>
where
    S: Fn(&CVec) -> f64,
{
    let factor = gaussian_factor(f_hat);
    let mut rng = stream_rng(seed, &[stream::RANDOMIZATION]);
    let mut best: CVec = principal_vectors(f_hat, 1).column(0).into_owned();
    let mut best_score = score(&best);
    for _ in 0..m {
        let z = CVec::from_fn(factor.ncols(), |_, _| complex_gaussian(&mut rng, 1.0));
        let w = &factor * z;
        let norm = w.norm();
        if !(norm > 0.0) {
            continue;
        }
        let cand = w / C64::from(norm);
        let s = score(&cand);
        if s < best_score {
            best = cand;
            best_score = s;
        }
    }
    if !best_score.is_finite() {
        return Err(Error::RandomizationFailure { samples: m });
    }
    Ok((best, best_score))
}

/// Gaussian randomization for an `n x L` beamformer: the `L` principal
/// eigenvectors of `F_hat` plus `m` samples built from the `L` dominant left
/// singular vectors of `V Sigma^{1/2} Z`, each scaled by `1/sqrt(L)`.
/// Candidates with an undefined score (`None`) are discarded.
pub fn randomize_matrix_with<S>(f_hat: &CMat, m: usize, l: usize, seed: u64, score: S) -> Result<(CMat, f64)>
where
    S: Fn(&CMat) -> Option<f64>,
{
    let n = f_hat.nrows();
    if l > n || l == 0 {
        return Err(Error::Shape(format!("cannot extract {l} streams from {n} antennas")));
    }
    let scale = C64::from(1.0 / (l as f64).sqrt());
    let factor = gaussian_factor(f_hat);
    let mut rng = stream_rng(seed, &[stream::RANDOMIZATION]);
    let mut best: Option<(CMat, f64)> = None;
    let consider = |cand: CMat, best: &mut Option<(CMat, f64)>| {
        if let Some(s) = score(&cand) {
            if s.is_finite() && best.as_ref().map_or(true, |(_, b)| s < *b) {
                *best = Some((cand, s));
            }
        }
    };
    consider(principal_vectors(f_hat, l) * scale, &mut best);
    for _ in 0..m {
        let z = CMat::from_fn(factor.ncols(), l, |_, _| complex_gaussian(&mut rng, 1.0));
        let w = &factor * z;
        let basis = if w.ncols() >= l && w.nrows() >= l {
            let svd = SortedSvd::new(&w);
            if svd.left.ncols() < l {
                continue;
            }
            svd.left.columns(0, l).into_owned()
        } else {
            continue;
        };
        consider(basis * scale, &mut best);
    }
    best.ok_or(Error::RandomizationFailure { samples: m })
}

/// Round a single-antenna lifted solution to a unit-norm beamformer.
pub fn randomize_miso(
    lifted: &LiftedSolution,
    m: usize,
    channels: &ChannelSet,
    gamma: &[f64],
    p0: f64,
    seed: u64,
) -> Result<CVec> {
    randomize_vector_with(&lifted.f_hat, m, seed, |f| {
        miso_beamformer_objective(f, channels, gamma, p0)
    })
    .map(|(f, _)| f)
}

/// Round a multi-antenna lifted solution to an `n_ap x L` beamformer with
/// `tr(F F^H) = 1`.
pub fn randomize_mimo(
    lifted: &LiftedSolution,
    m: usize,
    channels: &ChannelSet,
    gamma: &[f64],
    p0: f64,
    l: usize,
    seed: u64,
) -> Result<CMat> {
    randomize_matrix_with(&lifted.f_hat, m, l, seed, |f| {
        mimo_beamformer_objective(f, channels, gamma, p0)
    })
    .map(|(f, _)| f)
}

/// Fraction of random single-antenna instances whose relaxed solution is rank one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankOneStats {
    pub trials: usize,
    pub failed: usize,
    pub fraction: f64,
    /// Mean of `lambda_2 / lambda_1` over successful trials.
    pub mean_ratio: f64,
}

/// Seed of trial `t` under `base`.
pub fn trial_seed(base: u64, t: usize) -> u64 {
    derive_seed(base, &[stream::TRIAL, t as u64])
}

/// Solve the single-antenna relaxation on `trials` independent draws and
/// report how often the solution is rank one.
pub fn rank_one_probability(config: &SystemConfig, trials: usize, seed: u64) -> Result<RankOneStats> {
    config.validate()?;
    if !config.is_miso() {
        return Err(Error::Config("rank-one statistics are defined for single-antenna sensors".into()));
    }
    let outcomes: Vec<Option<(bool, f64)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(seed, t);
            let channels = sample_channels(config, s).ok()?;
            let gamma = resolve_gammas(config, s).ok()?;
            let sol = solve_lifted(ProblemKind::Miso, &channels, &gamma, config.p0, &config.solver).ok()?;
            Some((sol.rank_one, sol.eigen_ratio()))
        })
        .collect();
    let ok: Vec<(bool, f64)> = outcomes.into_iter().flatten().collect();
    let failed = trials - ok.len();
    let n = ok.len().max(1) as f64;
    Ok(RankOneStats {
        trials,
        failed,
        fraction: ok.iter().filter(|(r, _)| *r).count() as f64 / n,
        mean_ratio: ok.iter().map(|(_, q)| q).sum::<f64>() / n,
    })
}

/// Random unit vector helper re-exported for oracle searches.
pub fn random_beam<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    crate::linalg::random_unit_vector(rng, n)
}
