//! Comparison schemes: antenna selection, eigenmode beamforming, equal power
//! allocation and the receive-SNR-maximizing design.

use std::fmt;
use std::str::FromStr;

use crate::channels::{ChannelSet, SolverSettings};
use crate::error::{Error, Result};
use crate::linalg::{hpd_inverse_trace, CMat, CVec, SortedSvd, C64};
use crate::sdr::{randomize_matrix_with, randomize_vector_with, LiftedProblem, ProjectedGradient};
use crate::wpt::WptPlan;

/// Design scheme names used on the command line and in result files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    /// Lifted relaxation with optimal power control.
    Proposed,
    /// Antenna selection on the sum channel.
    AntennaSelection,
    /// Dominant eigenmodes of the sum channel.
    Eigenmode,
    /// Equal power split with a max-min designed beamformer.
    EqualPower,
    /// Receive-SNR maximization (single-antenna sensors only).
    MaxSnr,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::Proposed,
        SchemeId::AntennaSelection,
        SchemeId::Eigenmode,
        SchemeId::EqualPower,
        SchemeId::MaxSnr,
    ];

    /// Short name: `proposed`, `as`, `eb`, `epa` or `maxsnr`.
    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Proposed => "proposed",
            SchemeId::AntennaSelection => "as",
            SchemeId::Eigenmode => "eb",
            SchemeId::EqualPower => "epa",
            SchemeId::MaxSnr => "maxsnr",
        }
    }

    fn long_name(self) -> &'static str {
        match self {
            SchemeId::Proposed => "proposed",
            SchemeId::AntennaSelection => "antenna-selection",
            SchemeId::Eigenmode => "eigenmode",
            SchemeId::EqualPower => "equal-power",
            SchemeId::MaxSnr => "max-snr",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        SchemeId::ALL
            .into_iter()
            .find(|id| s.eq_ignore_ascii_case(id.name()) || s.eq_ignore_ascii_case(id.long_name()))
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

/// Parse a comma-separated scheme list, e.g. `proposed,as,eb`.
/// Duplicates are rejected.
pub fn parse_scheme_list(s: &str) -> Result<Vec<SchemeId>> {
    let mut out: Vec<SchemeId> = Vec::new();
    for part in s.split(',') {
        if part.trim().is_empty() {
            return Err(Error::Parse(format!("empty entry in scheme list {s:?}")));
        }
        let id: SchemeId = part.parse()?;
        if out.contains(&id) {
            return Err(Error::Parse(format!("scheme {id} listed twice")));
        }
        out.push(id);
    }
    Ok(out)
}

/// `H_sum = sum_k H_k`.
pub fn sum_channel(h: &[CMat]) -> Result<CMat> {
    let first = h.first().ok_or_else(|| Error::Shape("no channels to sum".into()))?;
    let mut total = CMat::zeros(first.nrows(), first.ncols());
    for hk in h {
        if hk.shape() != first.shape() {
            return Err(Error::Shape(format!("channel shapes {:?} and {:?}", first.shape(), hk.shape())));
        }
        total += hk;
    }
    Ok(total)
}

fn check_streams(n: usize, l: usize) -> Result<()> {
    if l == 0 || l > n {
        return Err(Error::Shape(format!("cannot form {l} streams from {n} antennas")));
    }
    Ok(())
}

/// Select the `l` antennas (rows of `h_sum`) with the largest norms; lowest
/// index wins ties. Each selected entry is `1/sqrt(l)`.
pub fn antenna_selection_beamformer(h_sum: &CMat, l: usize) -> Result<CMat> {
    let n = h_sum.nrows();
    check_streams(n, l)?;
    let mut order: Vec<(usize, f64)> = h_sum.row_iter().map(|r| r.norm_squared()).enumerate().collect();
    // Stable sort keeps index order among equal norms.
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut chosen: Vec<usize> = order[..l].iter().map(|&(i, _)| i).collect();
    chosen.sort_unstable();
    let mut f = CMat::zeros(n, l);
    let w = C64::from(1.0 / (l as f64).sqrt());
    for (col, &row) in chosen.iter().enumerate() {
        f[(row, col)] = w;
    }
    Ok(f)
}

/// The `l` dominant left singular vectors of `h_sum`, scaled by `1/sqrt(l)`.
pub fn eigenmode_beamformer(h_sum: &CMat, l: usize) -> Result<CMat> {
    check_streams(h_sum.nrows(), l)?;
    let svd = SortedSvd::new(h_sum);
    if svd.left.ncols() < l {
        return Err(Error::RankDeficient {
            sensor: 0,
            streams: l,
        });
    }
    Ok(svd.left.columns(0, l) * C64::from(1.0 / (l as f64).sqrt()))
}

/// `P_k = p0 / k` for every sensor.
pub fn equal_power_plan(k: usize, p0: f64) -> Vec<f64> {
    vec![p0 / k as f64; k]
}

fn sigma_max_sq(g: &CMat) -> f64 {
    let s = SortedSvd::new(g).values[0];
    s * s
}

/// Per-sensor terms `1 / (gamma_k |beam gain| p0)` multiplying the ZF cost,
/// i.e. the summands of the optimal-power denoising factor for beamformer `f`.
/// `None` when some sensor cannot be zero-forced.
pub fn inverse_gain_terms(channels: &ChannelSet, gamma: &[f64], p0: f64, f: &CMat) -> Option<Vec<f64>> {
    (0..channels.k())
        .map(|k| {
            let hk = &channels.aircomp()[k];
            let gk = &channels.wpt()[k];
            let beamed = f.adjoint() * hk;
            let cost = hpd_inverse_trace(&(&beamed * beamed.adjoint()))?;
            let x = gamma[k] * sigma_max_sq(gk) * p0;
            let term = cost / x;
            term.is_finite().then_some(term)
        })
        .collect()
}

/// Denoising factor under equal power allocation: `max_k K * term_k`.
pub fn equal_power_objective(channels: &ChannelSet, gamma: &[f64], p0: f64, f: &CMat) -> Option<f64> {
    let k = channels.k() as f64;
    inverse_gain_terms(channels, gamma, p0, f).map(|t| t.into_iter().fold(0.0, f64::max) * k)
}

/// Beamformer designed for equal power allocation: max-min relaxation,
/// solved by projected subgradient, then Gaussian randomization scored by
/// the equal-power denoising factor.
pub fn epa_aggregation_beamformer(
    channels: &ChannelSet,
    gamma: &[f64],
    p0: f64,
    settings: &SolverSettings,
    m_samples: usize,
    seed: u64,
) -> Result<CMat> {
    let l = channels.n_sn();
    let problem = LiftedProblem::max_inverse(channels, gamma, p0, l)?;
    let lifted = problem.solve(&ProjectedGradient::new(settings.clone()), settings.rank_one_ratio_tol)?;
    if channels.is_miso() {
        let (f, _) = randomize_vector_with(&lifted.f_hat, m_samples, seed, |f| {
            equal_power_objective(channels, gamma, p0, &CMat::from_columns(std::slice::from_ref(f)))
                .unwrap_or(f64::INFINITY)
        })?;
        Ok(CMat::from_columns(&[f]))
    } else {
        randomize_matrix_with(&lifted.f_hat, m_samples, l, seed, |f| {
            equal_power_objective(channels, gamma, p0, f)
        })
        .map(|(f, _)| f)
    }
}

/// Receive-SNR-maximizing design.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxSnrDesign {
    /// Unit beamformer aligned with the strongest sensor's AirComp channel.
    pub f: CVec,
    /// All power on the strongest sensor.
    pub plan: WptPlan,
    /// Index of the strongest sensor.
    pub sensor: usize,
    /// Receive SNR `rho`.
    pub rho: f64,
}

/// Exact maximizer of the total receive SNR for single-antenna sensors.
///
/// For a fixed beamformer the SNR is linear in the powers, so all power goes
/// to one sensor; the best sensor is the one maximizing
/// `gamma_k ||g_k||^2 ||h_k||^2`, with `f` matched to its channel.
pub fn max_snr_design(channels: &ChannelSet, gamma: &[f64], p0: f64, noise_var: f64) -> Result<MaxSnrDesign> {
    if !channels.is_miso() {
        return Err(Error::Config("max-SNR design is defined for single-antenna sensors".into()));
    }
    if gamma.len() != channels.k() {
        return Err(Error::Shape(format!("{} efficiencies for {} sensors", gamma.len(), channels.k())));
    }
    let mut sensor = 0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..channels.k() {
        let score = gamma[k] * channels.wpt_vector(k).norm_squared() * channels.aircomp_vector(k).norm_squared();
        if score > best {
            best = score;
            sensor = k;
        }
    }
    let h = channels.aircomp_vector(sensor);
    let norm = h.norm();
    if !(norm > 0.0) {
        return Err(Error::DegenerateChannel(format!("sensor {sensor} has a zero AirComp channel")));
    }
    let mut p = vec![0.0; channels.k()];
    p[sensor] = p0;
    Ok(MaxSnrDesign {
        f: h / C64::from(norm),
        plan: WptPlan::with_powers(channels, p)?,
        sensor,
        rho: best * p0 / noise_var,
    })
}

/// Total receive SNR for a unit beamformer, unit energy beams matched to the
/// WPT channels, and powers `p`.
pub fn receive_snr(channels: &ChannelSet, gamma: &[f64], f: &CVec, p: &[f64], noise_var: f64) -> f64 {
    (0..channels.k())
        .map(|k| {
            gamma[k]
                * channels.wpt_vector(k).norm_squared()
                * channels.aircomp_vector(k).dotc(f).norm_sqr()
                * p[k]
        })
        .sum::<f64>()
        / noise_var
}

/// Denoising factor of beamformer `f` with optimal power control (`sum`
/// form) and with equal powers (`max` form). The first never exceeds the second.
pub fn max_to_sum_gap(channels: &ChannelSet, gamma: &[f64], p0: f64, f: &CMat) -> Result<(f64, f64)> {
    if gamma.len() != channels.k() {
        return Err(Error::Shape(format!("{} efficiencies for {} sensors", gamma.len(), channels.k())));
    }
    let terms = inverse_gain_terms(channels, gamma, p0, f)
        .ok_or_else(|| Error::Infeasible("beamformer is orthogonal to some sensor".into()))?;
    let sum: f64 = terms.iter().sum();
    let max = terms.iter().cloned().fold(0.0, f64::max) * channels.k() as f64;
    debug_assert!(sum <= max * (1.0 + 1e-12));
    Ok((sum, max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real_matrix, real_vector};

    #[test]
    fn scheme_names_round_trip() {
        for id in SchemeId::ALL {
            assert_eq!(id.name().parse::<SchemeId>().unwrap(), id);
            assert_eq!(id.long_name().parse::<SchemeId>().unwrap(), id);
        }
        assert_eq!(
            parse_scheme_list("proposed, as,eb").unwrap(),
            vec![SchemeId::Proposed, SchemeId::AntennaSelection, SchemeId::Eigenmode]
        );
        assert!(matches!(parse_scheme_list("proposed,foo"), Err(Error::UnknownScheme(_))));
        assert!(parse_scheme_list("as,,eb").is_err());
        assert!(parse_scheme_list("as,as").is_err());
    }

    #[test]
    fn sum_channel_examples() {
        let h = real_matrix(2, 1, &[1.0, -2.0]);
        assert_eq!(sum_channel(&[h.clone()]).unwrap(), h);
        assert_eq!(sum_channel(&[h.clone(), -h.clone()]).unwrap(), CMat::zeros(2, 1));
        assert!(sum_channel(&[]).is_err());
    }

    #[test]
    fn antenna_selection_examples() {
        let f = antenna_selection_beamformer(&real_matrix(2, 1, &[5.0, 3.0]), 1).unwrap();
        assert_eq!(f, real_matrix(2, 1, &[1.0, 0.0]));
        let f = antenna_selection_beamformer(&real_matrix(3, 1, &[1.0, 1.0, 1.0]), 2).unwrap();
        let w = 1.0 / 2f64.sqrt();
        assert_eq!(f, real_matrix(3, 2, &[w, 0.0, 0.0, w, 0.0, 0.0]));
        assert!(antenna_selection_beamformer(&real_matrix(2, 1, &[1.0, 1.0]), 3).is_err());
    }

    #[test]
    fn eigenmode_examples() {
        let f = eigenmode_beamformer(&real_matrix(2, 2, &[3.0, 0.0, 0.0, 1.0]), 1).unwrap();
        assert!((f[(0, 0)].norm() - 1.0).abs() < 1e-12 && f[(1, 0)].norm() < 1e-12);
        let a = real_vector(&[1.0, 2.0, 2.0]);
        let b = real_vector(&[0.0, 1.0]);
        let f = eigenmode_beamformer(&(&a * b.adjoint()), 1).unwrap();
        let expected = &a / C64::from(3.0);
        assert!((f.column(0).dotc(&expected).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_power_examples() {
        assert_eq!(equal_power_plan(5, 1.0), vec![0.2; 5]);
        assert_eq!(equal_power_plan(1, 3.0), vec![3.0]);
    }

    #[test]
    fn max_snr_picks_dominant_sensor() {
        let g = vec![real_vector(&[1.0, 0.0]), real_vector(&[2.0, 0.0])];
        let h = vec![real_vector(&[1.0, 0.0]), real_vector(&[0.0, 1.0])];
        let ch = ChannelSet::from_vectors(g, h).unwrap();
        let d = max_snr_design(&ch, &[0.5, 0.5], 1.0, 1.0).unwrap();
        assert_eq!(d.sensor, 1);
        assert_eq!(d.plan.p, vec![0.0, 1.0]);
        assert!((d.f - real_vector(&[0.0, 1.0])).norm() < 1e-15);
        assert!((d.rho - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gap_single_and_identical() {
        let g = vec![real_vector(&[1.0, 1.0])];
        let h = vec![real_vector(&[1.0, 0.0])];
        let ch = ChannelSet::from_vectors(g.clone(), h.clone()).unwrap();
        let f = real_matrix(2, 1, &[0.6, 0.8]);
        let (s, m) = max_to_sum_gap(&ch, &[0.3], 1.0, &f).unwrap();
        assert!((s - m).abs() < 1e-15 * m);
        let ch = ChannelSet::from_vectors(vec![g[0].clone(); 3], vec![h[0].clone(); 3]).unwrap();
        let (s, m) = max_to_sum_gap(&ch, &[0.3; 3], 1.0, &f).unwrap();
        assert!((s - m).abs() < 1e-14 * m);
    }
}
