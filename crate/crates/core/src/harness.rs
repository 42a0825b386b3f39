//! Monte-Carlo experiment runner and CSV persistence.
//!
//! Trial `t` of every experiment uses the seed [`trial_seed`]`(base, t)`
//! regardless of the swept value or scheme, so schemes within a trial see the
//! same channels and efficiencies, and sweeps compare nested draws.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;

use crate::aircomp::{
    aircompute, compute_mse, denoising_factor, zf_precoders, AggregationSolution, MseReport,
    NomographicKind, NomographicSpec, PrecoderSet, Transmission,
};
use crate::baselines::{
    antenna_selection_beamformer, eigenmode_beamformer, epa_aggregation_beamformer, max_snr_design,
    sum_channel, SchemeId,
};
use crate::channels::{resolve_gammas, sample_channels, stream, stream_rng, ChannelSet, Mode, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{random_unit_vector, CMat};
use crate::sdr::{
    miso_beamformer_objective, randomize_mimo, randomize_miso, rank_one_probability, solve_lifted,
    ProblemKind, RankOneStats,
};
use crate::wpt::WptPlan;

pub use crate::sdr::trial_seed;

/// Fraction of failed trials above which a result row is flagged.
pub const FAILURE_WARN_FRACTION: f64 = 0.1;

/// Result of one scheme on one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub mse: MseReport,
    pub eta: f64,
    /// Whether the lifted solution was rank one (proposed scheme, single-antenna sensors).
    pub rank_one: Option<bool>,
}

fn as_column(f: crate::linalg::CVec) -> CMat {
    CMat::from_columns(&[f])
}

/// Aggregation beamformer and power allocation chosen by `scheme`.
fn design(
    config: &SystemConfig,
    channels: &ChannelSet,
    gamma: &[f64],
    scheme: SchemeId,
    seed: u64,
) -> Result<(CMat, WptPlan, Option<bool>)> {
    let l = config.l;
    match scheme {
        SchemeId::Proposed => {
            if channels.is_miso() {
                let lifted = solve_lifted(ProblemKind::Miso, channels, gamma, config.p0, &config.solver)?;
                let f = randomize_miso(&lifted, config.m_samples, channels, gamma, config.p0, seed)?;
                let f = as_column(f);
                let plan = WptPlan::optimal(channels, &f, gamma, config.p0)?;
                Ok((f, plan, Some(lifted.rank_one)))
            } else {
                let lifted = solve_lifted(ProblemKind::Mimo, channels, gamma, config.p0, &config.solver)?;
                let f = randomize_mimo(&lifted, config.m_samples, channels, gamma, config.p0, l, seed)?;
                let plan = WptPlan::optimal(channels, &f, gamma, config.p0)?;
                Ok((f, plan, None))
            }
        }
        SchemeId::AntennaSelection | SchemeId::Eigenmode => {
            let h_sum = sum_channel(channels.aircomp())?;
            let f = if scheme == SchemeId::AntennaSelection {
                antenna_selection_beamformer(&h_sum, l)?
            } else {
                eigenmode_beamformer(&h_sum, l)?
            };
            let plan = WptPlan::optimal(channels, &f, gamma, config.p0)?;
            Ok((f, plan, None))
        }
        SchemeId::EqualPower => {
            let f = epa_aggregation_beamformer(channels, gamma, config.p0, &config.solver, config.m_samples, seed)?;
            Ok((f, WptPlan::equal_power(channels, config.p0)?, None))
        }
        SchemeId::MaxSnr => {
            let d = max_snr_design(channels, gamma, config.p0, config.noise_var)?;
            Ok((as_column(d.f), d.plan, None))
        }
    }
}

/// Everything a scheme chooses for one channel draw.
#[derive(Debug, Clone)]
pub struct DesignedLink {
    pub plan: WptPlan,
    pub aggregation: AggregationSolution,
    pub precoders: PrecoderSet,
    /// Per-sensor transmit budgets implied by the plan.
    pub budgets: Vec<f64>,
    pub rank_one: Option<bool>,
}

impl DesignedLink {
    /// The uplink with the given noise variance.
    pub fn transmission<'a>(&'a self, channels: &'a ChannelSet, noise_var: f64) -> Transmission<'a> {
        Transmission {
            channels,
            a: &self.aggregation.a,
            precoders: &self.precoders,
            noise_var,
            budgets: Some(&self.budgets),
        }
    }
}

/// Design beamformer, powers, energy beams, denoising factor and
/// zero-forcing precoders for `scheme`.
pub fn design_link(
    config: &SystemConfig,
    channels: &ChannelSet,
    gamma: &[f64],
    scheme: SchemeId,
    seed: u64,
) -> Result<DesignedLink> {
    let (f, plan, rank_one) = design(config, channels, gamma, scheme, seed)?;
    let eta = denoising_factor(&f, channels, gamma, &plan)?;
    let aggregation = AggregationSolution::new(f, eta)?;
    let precoders = zf_precoders(&aggregation.a, channels)?;
    let budgets = plan.transmit_budgets(channels, gamma);
    precoders.check_budgets(&budgets)?;
    Ok(DesignedLink {
        plan,
        aggregation,
        precoders,
        budgets,
        rank_one,
    })
}

/// Run `scheme` on a given channel draw and evaluate its computation error.
pub fn run_on_channels(
    config: &SystemConfig,
    channels: &ChannelSet,
    gamma: &[f64],
    scheme: SchemeId,
    seed: u64,
) -> Result<TrialOutcome> {
    let link = design_link(config, channels, gamma, scheme, seed)?;
    let mse = compute_mse(&link.aggregation.a, &link.precoders, channels.aircomp(), config.noise_var)?;
    Ok(TrialOutcome {
        mse,
        eta: link.aggregation.eta,
        rank_one: link.rank_one,
    })
}

/// Draw channels and efficiencies from `seed` and run one scheme.
pub fn run_trial(config: &SystemConfig, scheme: SchemeId, seed: u64) -> Result<TrialOutcome> {
    let channels = sample_channels(config, seed)?;
    let gamma = resolve_gammas(config, seed)?;
    run_on_channels(config, &channels, &gamma, scheme, seed)
}

/// Run several schemes on the same draw.
pub fn run_schemes(config: &SystemConfig, schemes: &[SchemeId], seed: u64) -> Vec<Result<TrialOutcome>> {
    let draw = sample_channels(config, seed).and_then(|c| Ok((c, resolve_gammas(config, seed)?)));
    schemes
        .iter()
        .map(|&s| match &draw {
            Ok((channels, gamma)) => run_on_channels(config, channels, gamma, s, seed),
            Err(e) => Err(e.clone()),
        })
        .collect()
}

/// Swept configuration field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    P0,
    NAp,
    K,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::P0 => "p0",
            SweepParam::NAp => "n_ap",
            SweepParam::K => "k",
        }
    }

    /// `config` with the field set to `value`.
    pub fn apply(self, config: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut c = config.clone();
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("{} must be a positive integer, got {value}", self.name())))
            }
        };
        match self {
            SweepParam::P0 => c.p0 = value,
            SweepParam::NAp => c.n_ap = count()?,
            SweepParam::K => {
                c.k = count()?;
                // Explicit efficiencies cannot follow a changing sensor count.
                if c.gamma.as_ref().is_some_and(|g| g.len() != c.k) {
                    c.gamma = None;
                }
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p0" => Ok(SweepParam::P0),
            "n_ap" => Ok(SweepParam::NAp),
            "k" => Ok(SweepParam::K),
            other => Err(Error::Parse(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

/// Parse a comma-separated list of finite numbers in strictly increasing order.
pub fn parse_value_list(s: &str) -> Result<Vec<f64>> {
    let values = s
        .split(',')
        .map(|p| {
            let p = p.trim();
            let v: f64 = p.parse().map_err(|_| Error::Parse(format!("not a number: {p:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse(format!("value must be finite, got {p:?}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    check_values(&values)?;
    Ok(values)
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("sweep values must be strictly increasing".into()));
    }
    Ok(())
}

/// One experiment: which field to sweep, over which values, for which schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    pub schemes: Vec<SchemeId>,
    pub trials: usize,
    pub base_seed: u64,
    pub mode: Mode,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        check_values(&self.values)?;
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        if self.mode == Mode::Mimo && self.schemes.contains(&SchemeId::MaxSnr) {
            return Err(Error::Config("the max-SNR scheme needs single-antenna sensors".into()));
        }
        Ok(())
    }
}

/// Aggregate over the trials of one (value, scheme) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub param: String,
    pub value: f64,
    pub scheme: SchemeId,
    pub trials: usize,
    pub failed: usize,
    /// Mean of `MSE / K` over successful trials (NaN when all failed).
    pub mean_nmse: f64,
    /// Sample standard deviation of `MSE / K`.
    pub std_nmse: f64,
    pub mean_eta: f64,
    pub rank1_frac: Option<f64>,
}

impl ResultRow {
    /// More than [`FAILURE_WARN_FRACTION`] of the trials failed.
    pub fn flagged(&self) -> bool {
        self.failed as f64 > FAILURE_WARN_FRACTION * self.trials as f64
    }
}

/// Per-trial result for optional detailed output.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub value: f64,
    pub scheme: SchemeId,
    pub trial: usize,
    pub outcome: std::result::Result<TrialOutcome, Error>,
}

/// Rows in (value, scheme) order plus every trial in (value, scheme, trial) order.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<ResultRow>,
    pub records: Vec<TrialRecord>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn sample_std(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => {
            let m = mean(xs);
            (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    }
}

/// Summarize the outcomes of one (value, scheme) pair.
pub fn aggregate(param: &str, value: f64, scheme: SchemeId, outcomes: &[&std::result::Result<TrialOutcome, Error>]) -> ResultRow {
    let ok: Vec<&TrialOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let nmse: Vec<f64> = ok.iter().map(|o| o.mse.normalized).collect();
    let eta: Vec<f64> = ok.iter().map(|o| o.eta).collect();
    let flags: Vec<bool> = ok.iter().filter_map(|o| o.rank_one).collect();
    let rank1_frac = (!flags.is_empty()).then(|| flags.iter().filter(|&&r| r).count() as f64 / flags.len() as f64);
    ResultRow {
        param: param.to_string(),
        value,
        scheme,
        trials: outcomes.len(),
        failed: outcomes.len() - ok.len(),
        mean_nmse: mean(&nmse),
        std_nmse: sample_std(&nmse),
        mean_eta: mean(&eta),
        rank1_frac,
    }
}

/// Run every (value, trial) pair in parallel; all schemes of a trial share its draw.
pub fn run_sweep(spec: &SweepSpec, config: &SystemConfig) -> Result<SweepResult> {
    spec.validate()?;
    if config.mode() != spec.mode {
        return Err(Error::Config(format!(
            "sweep is for {} but the configuration is {}",
            spec.mode.as_str(),
            config.mode().as_str()
        )));
    }
    let configs = spec
        .values
        .iter()
        .map(|&v| spec.parameter.apply(config, v))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|i| (0..spec.trials).map(move |t| (i, t)))
        .collect();
    let results: Vec<Vec<std::result::Result<TrialOutcome, Error>>> = jobs
        .par_iter()
        .map(|&(i, t)| run_schemes(&configs[i], &spec.schemes, trial_seed(spec.base_seed, t)))
        .collect();

    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (i, &value) in spec.values.iter().enumerate() {
        let block = &results[i * spec.trials..(i + 1) * spec.trials];
        for (j, &scheme) in spec.schemes.iter().enumerate() {
            let outcomes: Vec<_> = block.iter().map(|r| &r[j]).collect();
            let row = aggregate(spec.parameter.name(), value, scheme, &outcomes);
            if row.flagged() {
                let reason = outcomes.iter().find_map(|o| o.as_ref().err());
                warn!(
                    "{}={} {}: {}/{} trials failed (first: {})",
                    row.param,
                    value,
                    scheme,
                    row.failed,
                    row.trials,
                    reason.map(|e| e.to_string()).unwrap_or_default()
                );
            }
            rows.push(row);
            for (t, o) in outcomes.into_iter().enumerate() {
                records.push(TrialRecord {
                    value,
                    scheme,
                    trial: t,
                    outcome: o.clone(),
                });
            }
        }
    }
    Ok(SweepResult { rows, records })
}

/// Header of the aggregated result file.
pub const RESULT_HEADER: &str = "param,value,scheme,trials,failed,mean_nmse,std_nmse,mean_eta,rank1_frac";

/// Ten significant digits.
fn num(x: f64) -> String {
    format!("{x:.9e}")
}

/// Write aggregated rows as CSV.
pub fn write_results_csv<W: Write>(mut out: W, rows: &[ResultRow]) -> std::io::Result<()> {
    writeln!(out, "{RESULT_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.param,
            num(r.value),
            r.scheme,
            r.trials,
            r.failed,
            num(r.mean_nmse),
            num(r.std_nmse),
            num(r.mean_eta),
            r.rank1_frac.map(num).unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Parse a file written by [`write_results_csv`].
pub fn read_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == RESULT_HEADER => {}
        other => {
            return Err(Error::Parse(format!("unexpected header {:?}", other.unwrap_or(""))));
        }
    }
    let float = |s: &str, line: usize| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("line {line}: bad number {s:?}")))
    };
    let count = |s: &str, line: usize| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Parse(format!("line {line}: bad count {s:?}")))
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let n = i + 2;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Parse(format!("line {n}: expected 9 fields, got {}", f.len())));
        }
        let row = ResultRow {
            param: f[0].to_string(),
            value: float(f[1], n)?,
            scheme: f[2].parse()?,
            trials: count(f[3], n)?,
            failed: count(f[4], n)?,
            mean_nmse: float(f[5], n)?,
            std_nmse: float(f[6], n)?,
            mean_eta: float(f[7], n)?,
            rank1_frac: if f[8].is_empty() { None } else { Some(float(f[8], n)?) },
        };
        if row.failed > row.trials {
            return Err(Error::Parse(format!("line {n}: more failures than trials")));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Write per-trial outcomes as `value,scheme,trial,status,nmse,eta,rank_one,reason`.
pub fn write_trials_csv<W: Write>(mut out: W, records: &[TrialRecord]) -> std::io::Result<()> {
    writeln!(out, "value,scheme,trial,status,nmse,eta,rank_one,reason")?;
    for r in records {
        let mut line = format!("{},{},{},", num(r.value), r.scheme, r.trial);
        match &r.outcome {
            Ok(o) => {
                let _ = write!(
                    line,
                    "ok,{},{},{},",
                    num(o.mse.normalized),
                    num(o.eta),
                    o.rank_one.map(|b| b.to_string()).unwrap_or_default()
                );
            }
            Err(e) => {
                let _ = write!(line, "failed,,,,\"{}\"", e.to_string().replace('"', "'"));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Rank-one statistics at one server antenna count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table2Row {
    pub n_ap: usize,
    pub stats: RankOneStats,
}

/// Rank-one frequency of the single-antenna relaxation for each antenna count.
pub fn reproduce_table2(config: &SystemConfig, n_ap_values: &[usize], trials: usize, seed: u64) -> Result<Vec<Table2Row>> {
    n_ap_values
        .iter()
        .map(|&n_ap| {
            let c = SystemConfig { n_ap, ..config.clone() };
            Ok(Table2Row {
                n_ap,
                stats: rank_one_probability(&c, trials, seed)?,
            })
        })
        .collect()
}

/// Write rank-one statistics as `n_ap,trials,failed,rank1_frac,mean_lambda_ratio`.
pub fn write_table2_csv<W: Write>(mut out: W, rows: &[Table2Row]) -> std::io::Result<()> {
    writeln!(out, "n_ap,trials,failed,rank1_frac,mean_lambda_ratio")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n_ap,
            r.stats.trials,
            r.stats.failed,
            num(r.stats.fraction),
            num(r.stats.mean_ratio)
        )?;
    }
    Ok(())
}

/// Relaxation-plus-randomization versus exhaustive random search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub sdr_objective: f64,
    pub search_objective: f64,
    /// Closed-form optimum for a single sensor.
    pub analytic: Option<f64>,
    /// `(sdr - reference) / reference`, where the reference is the analytic
    /// optimum when known and the random-search optimum otherwise. Negative
    /// when the design beats the search.
    pub gap: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        let tol = if self.analytic.is_some() { 1e-6 } else { 0.02 };
        self.gap <= tol
    }
}

/// Compare the designed beamformer on a small single-antenna instance with
/// the best of `samples` random unit vectors.
pub fn oracle_check(config: &SystemConfig, seed: u64, samples: usize) -> Result<OracleReport> {
    if !config.is_miso() || config.n_ap > 3 || config.k > 3 {
        return Err(Error::Config("oracle check needs single-antenna sensors, n_ap <= 3 and k <= 3".into()));
    }
    let channels = sample_channels(config, seed)?;
    let gamma = resolve_gammas(config, seed)?;
    oracle_check_on(config, &channels, &gamma, seed, samples)
}

/// [`oracle_check`] on a given instance.
pub fn oracle_check_on(
    config: &SystemConfig,
    channels: &ChannelSet,
    gamma: &[f64],
    seed: u64,
    samples: usize,
) -> Result<OracleReport> {
    let p0 = config.p0;
    let lifted = solve_lifted(ProblemKind::Miso, channels, gamma, p0, &config.solver)?;
    let f = randomize_miso(&lifted, config.m_samples, channels, gamma, p0, seed)?;
    let sdr_objective = miso_beamformer_objective(&f, channels, gamma, p0);
    let mut rng = stream_rng(seed, &[stream::TRIAL, u64::MAX]);
    let n = channels.n_ap();
    let search_objective = (0..samples)
        .map(|_| miso_beamformer_objective(&random_unit_vector(&mut rng, n), channels, gamma, p0))
        .fold(f64::INFINITY, f64::min);
    let analytic = (channels.k() == 1).then(|| {
        1.0 / (gamma[0] * channels.wpt_vector(0).norm_squared() * channels.aircomp_vector(0).norm_squared() * p0)
    });
    let reference = analytic.unwrap_or(search_objective);
    Ok(OracleReport {
        sdr_objective,
        search_objective,
        analytic,
        gap: (sdr_objective - reference) / reference,
    })
}

/// One target function computed over a designed link.
#[derive(Debug, Clone, PartialEq)]
pub struct NomographicDemoRow {
    pub kind: NomographicKind,
    /// Direct evaluation, one value per computed function.
    pub exact: Vec<f64>,
    pub noiseless: Vec<f64>,
    pub noisy: Vec<f64>,
    /// Largest relative error of the noiseless estimate.
    pub noiseless_rel_err: f64,
}

/// Compute every supported target function of random positive sensor
/// readings over the proposed design, with and without receiver noise.
pub fn nomographic_demo(config: &SystemConfig, seed: u64) -> Result<Vec<NomographicDemoRow>> {
    use rand::Rng;
    let channels = sample_channels(config, seed)?;
    let gamma = resolve_gammas(config, seed)?;
    let link = design_link(config, &channels, &gamma, SchemeId::Proposed, seed)?;
    let (k, l) = (config.k, config.l);
    let mut rng = stream_rng(seed, &[stream::TRIAL, u64::MAX - 1]);
    let values: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..l).map(|_| rng.random_range(0.5..2.0)).collect())
        .collect();
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let exponents: Vec<f64> = (0..k).map(|_| rng.random_range(1..4) as f64).collect();
    NomographicKind::ALL
        .into_iter()
        .map(|kind| {
            let spec = match kind {
                NomographicKind::WeightedSum => NomographicSpec::weighted_sum(weights.clone()),
                NomographicKind::Polynomial => NomographicSpec::polynomial(weights.clone(), exponents.clone()),
                other => NomographicSpec::new(other),
            };
            let exact = (0..l)
                .map(|j| spec.evaluate(&values.iter().map(|v| v[j]).collect::<Vec<_>>()))
                .collect::<Result<Vec<_>>>()?;
            let noiseless = aircompute(&values, &spec, &link.transmission(&channels, 0.0), seed)?;
            let noisy = aircompute(&values, &spec, &link.transmission(&channels, config.noise_var), seed)?;
            let noiseless_rel_err = exact
                .iter()
                .zip(&noiseless)
                .map(|(e, y)| (y - e).abs() / e.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            Ok(NomographicDemoRow {
                kind,
                exact,
                noiseless,
                noisy,
                noiseless_rel_err,
            })
        })
        .collect()
}
