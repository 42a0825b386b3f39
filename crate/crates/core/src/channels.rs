//! System configuration, seeded Rician channel generation and the text
//! configuration format.
//!
//! Every random quantity is a pure function of `(config, seed)`. Each sensor
//! and link draws from its own ChaCha stream keyed by [`derive_seed`], and
//! matrices are filled antenna by antenna. A trial therefore keeps the same
//! per-sensor channels when sensors or server antennas are added, which gives
//! sweeps nested common random numbers.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian_matrix, CMat, CVec, C64};

/// Stream tags mixed into seeds so that independent consumers never share draws.
pub mod stream {
    pub const WPT_CHANNEL: u64 = 0x5750_5400;
    pub const AIRCOMP_CHANNEL: u64 = 0x4143_4d50;
    pub const GAMMA: u64 = 0x4741_4d4d;
    pub const RANDOMIZATION: u64 = 0x5241_4e44;
    pub const NOISE: u64 = 0x4e4f_4953;
    pub const TRIAL: u64 = 0x5452_4941;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a base seed with a sequence of counters/tags into an independent child
/// seed. Order-sensitive in `tags`, stateless, and cheap, so trial `t` of a
/// sweep can be generated on any worker in any order.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Deterministic RNG for a derived stream.
pub fn stream_rng(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}

/// Numerical settings shared by the lifted-problem solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub max_iters: usize,
    /// Initial step, relative to the objective normalized by its value at the start point.
    pub step_size_init: f64,
    /// Stop when the relative objective decrease falls below this.
    pub tol_objective: f64,
    /// Stop when the projected-gradient (gradient mapping) norm falls below this.
    pub tol_projected_grad: f64,
    /// A lifted solution is rank one when `lambda_2 / lambda_1` is below this.
    pub rank_one_ratio_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_iters: 1000,
            step_size_init: 0.1,
            tol_objective: 1e-13,
            tol_projected_grad: 1e-10,
            rank_one_ratio_tol: 1e-6,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("solver.max_iters must be >= 1".into()));
        }
        for (name, v) in [
            ("step_size_init", self.step_size_init),
            ("tol_objective", self.tol_objective),
            ("tol_projected_grad", self.tol_projected_grad),
            ("rank_one_ratio_tol", self.rank_one_ratio_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("solver.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Scalar parameters of one wirelessly powered AirComp system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of sensors.
    pub k: usize,
    /// Server antennas.
    pub n_ap: usize,
    /// Antennas per sensor.
    pub n_sn: usize,
    /// Number of computed functions (streams per sensor).
    pub l: usize,
    /// Total server transmit power (W).
    pub p0: f64,
    /// Channel-noise variance.
    pub noise_var: f64,
    /// Explicit effective power-conversion efficiencies. Sampled from
    /// Uniform(0, 1) per trial when absent.
    pub gamma: Option<Vec<f64>>,
    /// Mean of every channel entry.
    pub rician_mean: C64,
    /// Per-entry variance of the scattered component.
    pub rician_var: f64,
    /// Gaussian-randomization sample count.
    pub m_samples: usize,
    pub solver: SolverSettings,
}

/// Single-antenna sensors versus multi-antenna sensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Miso,
    Mimo,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Miso => "miso",
            Mode::Mimo => "mimo",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "miso" => Ok(Mode::Miso),
            "mimo" => Ok(Mode::Mimo),
            other => Err(Error::Parse(format!("unknown mode {other:?} (expected miso|mimo)"))),
        }
    }
}

impl SystemConfig {
    /// Simulation defaults for single-antenna sensors.
    pub fn miso_default() -> Self {
        SystemConfig {
            k: 5,
            n_ap: 20,
            n_sn: 1,
            l: 1,
            p0: 1.0,
            noise_var: 1.0,
            gamma: None,
            rician_mean: C64::new(1.0, 0.0),
            rician_var: 1.0,
            m_samples: 100,
            solver: SolverSettings::default(),
        }
    }

    /// Simulation defaults for five-antenna sensors computing five functions.
    pub fn mimo_default() -> Self {
        SystemConfig {
            n_ap: 30,
            n_sn: 5,
            l: 5,
            ..Self::miso_default()
        }
    }

    pub fn default_for(mode: Mode) -> Self {
        match mode {
            Mode::Miso => Self::miso_default(),
            Mode::Mimo => Self::mimo_default(),
        }
    }

    pub fn mode(&self) -> Mode {
        if self.n_sn == 1 {
            Mode::Miso
        } else {
            Mode::Mimo
        }
    }

    pub fn is_miso(&self) -> bool {
        self.mode() == Mode::Miso
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.n_ap < 1 || self.n_sn < 1 || self.l < 1 {
            return Err(Error::Config(format!(
                "k, n_ap, n_sn, l must all be >= 1 (got k={}, n_ap={}, n_sn={}, l={})",
                self.k, self.n_ap, self.n_sn, self.l
            )));
        }
        if self.l > self.n_sn {
            return Err(Error::Config(format!("l={} exceeds n_sn={}", self.l, self.n_sn)));
        }
        if self.l > self.n_ap {
            return Err(Error::Config(format!("l={} exceeds n_ap={}", self.l, self.n_ap)));
        }
        if (self.n_sn == 1) != (self.l == 1) {
            return Err(Error::Config(format!(
                "single-antenna sensors require l = 1 and multi-antenna sensors l > 1 (n_sn={}, l={})",
                self.n_sn, self.l
            )));
        }
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(Error::Config(format!("p0 must be positive, got {}", self.p0)));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(Error::Config(format!(
                "noise_var must be positive, got {}",
                self.noise_var
            )));
        }
        if !(self.rician_var >= 0.0 && self.rician_var.is_finite()) {
            return Err(Error::Config(format!(
                "rician_var must be nonnegative, got {}",
                self.rician_var
            )));
        }
        if !(self.rician_mean.re.is_finite() && self.rician_mean.im.is_finite()) {
            return Err(Error::Config("rician_mean must be finite".into()));
        }
        if self.m_samples < 1 {
            return Err(Error::Config("m_samples must be >= 1".into()));
        }
        if let Some(g) = &self.gamma {
            if g.len() != self.k {
                return Err(Error::Config(format!(
                    "gamma has {} entries but k = {}",
                    g.len(),
                    self.k
                )));
            }
            if let Some((i, v)) = g.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v < 1.0)) {
                return Err(Error::Config(format!("gamma[{i}] = {v} is outside (0, 1)")));
            }
        }
        self.solver.validate()
    }

    /// Parse the text configuration format. Absent fields take the defaults
    /// of the selected `mode` (MISO when `mode` is absent).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let cfg = file.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

/// On-disk configuration schema; every field mirrors a [`SystemConfig`] field.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    mode: Option<Mode>,
    k: Option<usize>,
    n_ap: Option<usize>,
    n_sn: Option<usize>,
    l: Option<usize>,
    p0: Option<f64>,
    noise_var: Option<f64>,
    gamma: Option<Vec<f64>>,
    rician_mean: Option<MeanSpec>,
    rician_var: Option<f64>,
    m_samples: Option<usize>,
    solver: Option<SolverFile>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MeanSpec {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverFile {
    max_iters: Option<usize>,
    step_size_init: Option<f64>,
    tol_objective: Option<f64>,
    tol_projected_grad: Option<f64>,
    rank_one_ratio_tol: Option<f64>,
}

impl ConfigFile {
    fn into_config(self) -> Result<SystemConfig> {
        let mode = match (self.mode, self.n_sn) {
            (Some(m), _) => m,
            (None, Some(n)) if n > 1 => Mode::Mimo,
            _ => Mode::Miso,
        };
        let mut cfg = SystemConfig::default_for(mode);
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.n_ap {
            cfg.n_ap = v;
        }
        if let Some(v) = self.n_sn {
            cfg.n_sn = v;
        }
        if let Some(v) = self.l {
            cfg.l = v;
        }
        if let Some(v) = self.p0 {
            cfg.p0 = v;
        }
        if let Some(v) = self.noise_var {
            cfg.noise_var = v;
        }
        cfg.gamma = self.gamma;
        if let Some(m) = self.rician_mean {
            cfg.rician_mean = match m {
                MeanSpec::Real(re) => C64::new(re, 0.0),
                MeanSpec::Complex([re, im]) => C64::new(re, im),
            };
        }
        if let Some(v) = self.rician_var {
            cfg.rician_var = v;
        }
        if let Some(v) = self.m_samples {
            cfg.m_samples = v;
        }
        if let Some(s) = self.solver {
            let d = &mut cfg.solver;
            d.max_iters = s.max_iters.unwrap_or(d.max_iters);
            d.step_size_init = s.step_size_init.unwrap_or(d.step_size_init);
            d.tol_objective = s.tol_objective.unwrap_or(d.tol_objective);
            d.tol_projected_grad = s.tol_projected_grad.unwrap_or(d.tol_projected_grad);
            d.rank_one_ratio_tol = s.rank_one_ratio_tol.unwrap_or(d.rank_one_ratio_tol);
        }
        Ok(cfg)
    }
}

/// Per-sensor WPT channels `G_k` and AirComp channels `H_k`, each
/// `n_ap x n_sn`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    wpt: Vec<CMat>,
    aircomp: Vec<CMat>,
}

impl ChannelSet {
    pub fn new(wpt: Vec<CMat>, aircomp: Vec<CMat>) -> Result<Self> {
        if wpt.is_empty() || wpt.len() != aircomp.len() {
            return Err(Error::Shape(format!(
                "need the same nonzero number of WPT and AirComp channels (got {} and {})",
                wpt.len(),
                aircomp.len()
            )));
        }
        let (rows, cols) = wpt[0].shape();
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("empty channel matrix".into()));
        }
        for m in wpt.iter().chain(aircomp.iter()) {
            if m.shape() != (rows, cols) {
                return Err(Error::Shape(format!(
                    "channel of shape {:?} differs from {:?}",
                    m.shape(),
                    (rows, cols)
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Shape("channel contains non-finite entries".into()));
            }
        }
        Ok(ChannelSet { wpt, aircomp })
    }

    /// MISO channel set from column vectors `g_k`, `h_k`.
    pub fn from_vectors(g: Vec<CVec>, h: Vec<CVec>) -> Result<Self> {
        let to_mat = |v: Vec<CVec>| -> Vec<CMat> {
            v.into_iter()
                .map(|c| CMat::from_column_slice(c.len(), 1, c.as_slice()))
                .collect()
        };
        Self::new(to_mat(g), to_mat(h))
    }

    pub fn k(&self) -> usize {
        self.wpt.len()
    }

    pub fn n_ap(&self) -> usize {
        self.wpt[0].nrows()
    }

    pub fn n_sn(&self) -> usize {
        self.wpt[0].ncols()
    }

    pub fn is_miso(&self) -> bool {
        self.n_sn() == 1
    }

    pub fn wpt(&self) -> &[CMat] {
        &self.wpt
    }

    pub fn aircomp(&self) -> &[CMat] {
        &self.aircomp
    }

    /// `g_k` as a column vector (first column of `G_k`).
    pub fn wpt_vector(&self, k: usize) -> CVec {
        self.wpt[k].column(0).into_owned()
    }

    /// `h_k` as a column vector (first column of `H_k`).
    pub fn aircomp_vector(&self, k: usize) -> CVec {
        self.aircomp[k].column(0).into_owned()
    }

    pub fn wpt_vectors(&self) -> Vec<CVec> {
        (0..self.k()).map(|k| self.wpt_vector(k)).collect()
    }

    pub fn aircomp_vectors(&self) -> Vec<CVec> {
        (0..self.k()).map(|k| self.aircomp_vector(k)).collect()
    }
}

fn rician_matrix(config: &SystemConfig, seed: u64, link: u64, sensor: usize) -> CMat {
    let mut rng = stream_rng(seed, &[link, sensor as u64]);
    let mut m = complex_gaussian_matrix(&mut rng, config.n_ap, config.n_sn, config.rician_var);
    m.iter_mut().for_each(|z| *z += config.rician_mean);
    m
}

/// Draw i.i.d. Rician channels: every entry is `rician_mean` plus CN(0, rician_var).
pub fn sample_channels(config: &SystemConfig, seed: u64) -> Result<ChannelSet> {
    config.validate()?;
    let wpt = (0..config.k)
        .map(|k| rician_matrix(config, seed, stream::WPT_CHANNEL, k))
        .collect();
    let aircomp = (0..config.k)
        .map(|k| rician_matrix(config, seed, stream::AIRCOMP_CHANNEL, k))
        .collect();
    ChannelSet::new(wpt, aircomp)
}

/// `K` i.i.d. Uniform(0, 1) conversion efficiencies, open at both ends.
pub fn sample_gammas(config: &SystemConfig, seed: u64) -> Result<Vec<f64>> {
    if config.k < 1 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    Ok((0..config.k)
        .map(|k| {
            let mut rng = stream_rng(seed, &[stream::GAMMA, k as u64]);
            rng.sample::<f64, _>(Open01)
        })
        .collect())
}

/// Explicit efficiencies from the config when present, sampled ones otherwise.
pub fn resolve_gammas(config: &SystemConfig, seed: u64) -> Result<Vec<f64>> {
    match &config.gamma {
        Some(g) => Ok(g.clone()),
        None => sample_gammas(config, seed),
    }
}
