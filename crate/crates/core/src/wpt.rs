//! Energy beamforming and wireless power control for a fixed aggregation
//! beamformer.
//!
//! Energy beams steer along the dominant singular directions of each WPT
//! channel. Power is then allocated inversely to each sensor's effective
//! close-loop gain so that every sensor ends up with the same product of gain
//! and power, which maximizes the smallest such product under the total budget.

use crate::channels::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{hpd_inverse_trace, CMat, CVec, SortedSvd, C64};

/// Energy transmit/receive beams with the resulting beamforming gain `|u^H G v|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBeams {
    pub u: CVec,
    pub v: CVec,
    pub gain: f64,
}

/// Optimal MISO energy beam `g / ||g||`.
pub fn miso_energy_beam(g: &CVec) -> Result<CVec> {
    let norm = g.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateChannel(
            "WPT channel vector is zero or not finite".into(),
        ));
    }
    Ok(g / C64::from(norm))
}

/// Dominant left/right singular pair of a MIMO WPT channel.
///
/// When the top singular value is repeated the first pair returned by the
/// decomposition is used; the leading nonzero component of `u` is made real
/// and positive and `v` carries the same phase so `u^H G v` stays real.
pub fn mimo_energy_beams(g: &CMat) -> Result<EnergyBeams> {
    if g.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Err(Error::DegenerateChannel("WPT channel matrix is zero".into()));
    }
    let svd = SortedSvd::new(g);
    let u: CVec = svd.left.column(0).into_owned();
    let v: CVec = svd.right.column(0).into_owned();
    let gain = u.dotc(&(g * &v)).norm_sqr();
    Ok(EnergyBeams { u, v, gain })
}

/// Energy harvested over `slots` slots: `alpha * |u^H G v|^2 * power * slots`.
pub fn harvested_energy(u: &CVec, g: &CMat, v: &CVec, power: f64, alpha: f64, slots: f64) -> f64 {
    alpha * u.dotc(&(g * v)).norm_sqr() * power * slots
}

/// Allocate `p0` inversely to `gains` so that `gains[k] * p[k]` is the same
/// for every sensor and the budget is spent exactly.
pub fn equalizing_allocation(gains: &[f64], p0: f64) -> Result<Vec<f64>> {
    if let Some((sensor, _)) = gains
        .iter()
        .enumerate()
        .find(|(_, &g)| !(g > 0.0) || !g.is_finite())
    {
        return Err(Error::InfeasibleEqualization { sensor });
    }
    let inv: Vec<f64> = gains.iter().map(|g| 1.0 / g).collect();
    let total: f64 = inv.iter().sum();
    Ok(inv.iter().map(|w| p0 * w / total).collect())
}

/// Smallest gain-power product, the inner max-min objective.
pub fn inner_min_objective(gains: &[f64], powers: &[f64]) -> f64 {
    gains
        .iter()
        .zip(powers)
        .map(|(g, p)| g * p)
        .fold(f64::INFINITY, f64::min)
}

/// MISO effective close-loop gains `gamma_k ||g_k||^2 |h_k^H f|^2`.
pub fn miso_effective_gains(h: &[CVec], g: &[CVec], f: &CVec, gamma: &[f64]) -> Vec<f64> {
    h.iter()
        .zip(g)
        .zip(gamma)
        .map(|((hk, gk), gam)| gam * gk.norm_squared() * hk.dotc(f).norm_sqr())
        .collect()
}

/// `tr((F^H H_k H_k^H F)^{-1})`, the per-sensor zero-forcing power cost of an
/// aggregation beamformer.
pub fn zf_power_cost(h: &CMat, f: &CMat, sensor: usize) -> Result<f64> {
    let beamed = f.adjoint() * h;
    let gram = &beamed * beamed.adjoint();
    hpd_inverse_trace(&gram).ok_or(Error::RankDeficient {
        sensor,
        streams: f.ncols(),
    })
}

/// MIMO effective gains `gamma_k sigma_max^2(G_k) / tr((F^H H_k H_k^H F)^{-1})`.
pub fn mimo_effective_gains(h: &[CMat], g: &[CMat], f: &CMat, gamma: &[f64]) -> Result<Vec<f64>> {
    h.iter()
        .zip(g)
        .zip(gamma)
        .enumerate()
        .map(|(k, ((hk, gk), gam))| {
            let sigma = SortedSvd::new(gk).values[0];
            Ok(gam * sigma * sigma / zf_power_cost(hk, f, k)?)
        })
        .collect()
}

/// Closed-form optimal MISO power allocation for a unit-norm beamformer `f`.
pub fn miso_power_allocation(
    h: &[CVec],
    g: &[CVec],
    f: &CVec,
    gamma: &[f64],
    p0: f64,
) -> Result<Vec<f64>> {
    check_lengths(h.len(), g.len(), gamma.len())?;
    equalizing_allocation(&miso_effective_gains(h, g, f, gamma), p0)
}

/// Closed-form optimal MIMO power allocation for a normalized beamformer `F`.
pub fn mimo_power_allocation(
    h: &[CMat],
    g: &[CMat],
    f: &CMat,
    gamma: &[f64],
    p0: f64,
) -> Result<Vec<f64>> {
    check_lengths(h.len(), g.len(), gamma.len())?;
    equalizing_allocation(&mimo_effective_gains(h, g, f, gamma)?, p0)
}

fn check_lengths(h: usize, g: usize, gamma: usize) -> Result<()> {
    if h != g || h != gamma || h == 0 {
        return Err(Error::Shape(format!(
            "per-sensor inputs disagree: {h} AirComp, {g} WPT channels, {gamma} efficiencies"
        )));
    }
    Ok(())
}

/// Energy beams and power allocation for every sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct WptPlan {
    /// Unit transmit beams, length `n_ap`.
    pub u: Vec<CVec>,
    /// Unit receive beams, length `n_sn` (the scalar 1 for single-antenna sensors).
    pub v: Vec<CVec>,
    /// Allocated powers (W).
    pub p: Vec<f64>,
}

impl WptPlan {
    /// Optimal energy beams for every WPT channel combined with the given powers.
    pub fn with_powers(channels: &ChannelSet, p: Vec<f64>) -> Result<Self> {
        if p.len() != channels.k() {
            return Err(Error::Shape(format!(
                "{} powers for {} sensors",
                p.len(),
                channels.k()
            )));
        }
        let mut u = Vec::with_capacity(channels.k());
        let mut v = Vec::with_capacity(channels.k());
        for gk in channels.wpt() {
            let beams = mimo_energy_beams(gk)?;
            u.push(beams.u);
            v.push(beams.v);
        }
        Ok(WptPlan { u, v, p })
    }

    /// Jointly optimal energy beams and power allocation for beamformer `f`
    /// (`n_ap x L`, normalized to unit Frobenius norm).
    pub fn optimal(channels: &ChannelSet, f: &CMat, gamma: &[f64], p0: f64) -> Result<Self> {
        let p = if channels.is_miso() {
            let fv: CVec = f.column(0).into_owned();
            miso_power_allocation(
                &channels.aircomp_vectors(),
                &channels.wpt_vectors(),
                &fv,
                gamma,
                p0,
            )?
        } else {
            mimo_power_allocation(channels.aircomp(), channels.wpt(), f, gamma, p0)?
        };
        Self::with_powers(channels, p)
    }

    /// Optimal energy beams with the budget split equally.
    pub fn equal_power(channels: &ChannelSet, p0: f64) -> Result<Self> {
        Self::with_powers(channels, vec![p0 / channels.k() as f64; channels.k()])
    }

    /// `|u_k^H G_k v_k|^2` for sensor `k`.
    pub fn beam_gain(&self, channels: &ChannelSet, k: usize) -> f64 {
        self.u[k].dotc(&(&channels.wpt()[k] * &self.v[k])).norm_sqr()
    }

    /// Harvested energies and effective gains for the given conversion
    /// efficiencies `alpha` and WPT phase length in slots.
    pub fn harvest_report(
        &self,
        channels: &ChannelSet,
        gamma: &[f64],
        alpha: &[f64],
        slots: f64,
    ) -> HarvestReport {
        let q = (0..channels.k())
            .map(|k| {
                harvested_energy(
                    &self.u[k],
                    &channels.wpt()[k],
                    &self.v[k],
                    self.p[k],
                    alpha[k],
                    slots,
                )
            })
            .collect();
        let effective_gain = (0..channels.k())
            .map(|k| gamma[k] * self.beam_gain(channels, k))
            .collect();
        HarvestReport { q, effective_gain }
    }

    /// Per-sensor transmit power budget `gamma_k |u_k^H G_k v_k|^2 P_k`.
    pub fn transmit_budgets(&self, channels: &ChannelSet, gamma: &[f64]) -> Vec<f64> {
        (0..channels.k())
            .map(|k| gamma[k] * self.beam_gain(channels, k) * self.p[k])
            .collect()
    }
}

/// Harvested energy per sensor alongside `gamma_k |u_k^H G_k v_k|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestReport {
    pub q: Vec<f64>,
    pub effective_gain: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_gaussian_matrix, random_unit_vector, real_matrix, real_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn miso_beam_examples() {
        let u = miso_energy_beam(&real_vector(&[1.0, 0.0])).unwrap();
        assert_eq!(u, real_vector(&[1.0, 0.0]));
        let u = miso_energy_beam(&real_vector(&[3.0, 4.0])).unwrap();
        assert!((u - real_vector(&[0.6, 0.8])).norm() < 1e-15);
        assert!(matches!(
            miso_energy_beam(&real_vector(&[0.0, 0.0])),
            Err(Error::DegenerateChannel(_))
        ));
    }

    #[test]
    fn miso_beam_beats_random_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g: CVec = complex_gaussian_matrix(&mut rng, 6, 1, 1.0).column(0).into_owned();
        let u = miso_energy_beam(&g).unwrap();
        let best = u.dotc(&g).norm_sqr();
        assert!((best - g.norm_squared()).abs() < 1e-10 * g.norm_squared());
        for _ in 0..10_000 {
            let c = random_unit_vector(&mut rng, 6);
            assert!(c.dotc(&g).norm_sqr() <= best * (1.0 + 1e-12));
        }
    }

    #[test]
    fn mimo_beams_diagonal_and_rank_one() {
        let b = mimo_energy_beams(&real_matrix(2, 2, &[2.0, 0.0, 0.0, 1.0])).unwrap();
        assert!((b.u - real_vector(&[1.0, 0.0])).norm() < 1e-12);
        assert!((b.v - real_vector(&[1.0, 0.0])).norm() < 1e-12);
        assert!((b.gain - 4.0).abs() < 1e-12);

        let a = CVec::from_vec(vec![C64::new(1.0, 1.0), C64::new(2.0, 0.0), C64::new(0.0, -1.0)]);
        let bb = CVec::from_vec(vec![C64::new(0.5, 0.0), C64::new(0.0, 2.0)]);
        let g = &a * bb.adjoint();
        let beams = mimo_energy_beams(&g).unwrap();
        // Parallel up to a common phase: |<u, a/|a|>| = 1.
        assert!((beams.u.dotc(&a).norm() / a.norm() - 1.0).abs() < 1e-12);
        assert!((beams.v.dotc(&bb).norm() / bb.norm() - 1.0).abs() < 1e-12);
        assert!((beams.gain - a.norm_squared() * bb.norm_squared()).abs() < 1e-10);
        assert!(mimo_energy_beams(&CMat::zeros(3, 2)).is_err());
    }

    #[test]
    fn miso_power_examples() {
        let h = vec![real_vector(&[1.0])];
        let g = vec![real_vector(&[2.0])];
        let f = real_vector(&[1.0]);
        assert_eq!(miso_power_allocation(&h, &g, &f, &[0.3], 2.0).unwrap(), vec![2.0]);

        let h = vec![real_vector(&[1.0]), real_vector(&[1.0])];
        let g = vec![real_vector(&[1.0]), real_vector(&[2.0])];
        let p = miso_power_allocation(&h, &g, &f, &[1.0, 1.0], 1.0).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15 && (p[1] - 0.2).abs() < 1e-15);
        let gains = miso_effective_gains(&h, &g, &f, &[1.0, 1.0]);
        assert!((gains[0] * p[0] - 0.8).abs() < 1e-15);
        assert!((gains[1] * p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn identical_sensors_split_evenly() {
        let h = vec![real_vector(&[1.0, 2.0]); 4];
        let g = vec![real_vector(&[0.5, 1.0]); 4];
        let f = real_vector(&[0.6, 0.8]);
        let p = miso_power_allocation(&h, &g, &f, &[0.4; 4], 3.0).unwrap();
        assert!(p.iter().all(|x| (x - 0.75).abs() < 1e-15));
    }

    #[test]
    fn zero_gain_names_sensor() {
        let h = vec![real_vector(&[1.0, 0.0]), real_vector(&[0.0, 1.0])];
        let g = vec![real_vector(&[1.0, 0.0]); 2];
        let f = real_vector(&[1.0, 0.0]);
        assert_eq!(
            miso_power_allocation(&h, &g, &f, &[0.5, 0.5], 1.0),
            Err(Error::InfeasibleEqualization { sensor: 1 })
        );
    }

    #[test]
    fn mimo_single_and_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = complex_gaussian_matrix(&mut rng, 4, 2, 1.0);
        let g = complex_gaussian_matrix(&mut rng, 4, 2, 1.0);
        let f = complex_gaussian_matrix(&mut rng, 4, 2, 1.0);
        let f = &f / C64::from(f.norm());
        let p = mimo_power_allocation(&[h.clone()], &[g.clone()], &f, &[0.5], 1.5).unwrap();
        assert_eq!(p, vec![1.5]);
        let p = mimo_power_allocation(&vec![h; 3], &vec![g; 3], &f, &[0.5; 3], 1.5).unwrap();
        assert!(p.iter().all(|x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn mimo_singular_beamformed_channel() {
        let h = real_matrix(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let f = real_matrix(3, 2, &[0.0, 0.0, 0.0, 0.0, 0.5, 0.5]);
        let err = mimo_power_allocation(&[h.clone()], &[h], &f, &[0.5], 1.0).unwrap_err();
        assert_eq!(err, Error::RankDeficient { sensor: 0, streams: 2 });
    }

    #[test]
    fn harvested_energy_examples() {
        let a = real_vector(&[2.0, 0.0]);
        let b = real_vector(&[1.0]);
        let g = &a * b.adjoint();
        let beams = mimo_energy_beams(&g).unwrap();
        assert_eq!(harvested_energy(&beams.u, &g, &beams.v, 0.0, 0.5, 2.0), 0.0);
        let q = harvested_energy(&beams.u, &g, &beams.v, 1.0, 0.5, 2.0);
        assert!((q - 4.0).abs() < 1e-12);
    }

    #[test]
    fn plan_budget_and_report() {
        let cfg = crate::channels::SystemConfig::miso_default();
        let ch = crate::channels::sample_channels(&cfg, 5).unwrap();
        let gamma = crate::channels::sample_gammas(&cfg, 5).unwrap();
        let f = ch.aircomp_vector(0).normalize();
        let fm = CMat::from_column_slice(f.len(), 1, f.as_slice());
        let plan = WptPlan::optimal(&ch, &fm, &gamma, 1.0).unwrap();
        assert!((plan.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..ch.k() {
            assert!((plan.u[k].norm() - 1.0).abs() < 1e-12);
            assert!((plan.v[k].norm() - 1.0).abs() < 1e-12);
        }
        let rep = plan.harvest_report(&ch, &gamma, &[0.5; 5], 3.0);
        for k in 0..ch.k() {
            assert!(rep.q[k] >= 0.0);
            let expect = gamma[k] * ch.wpt_vector(k).norm_squared();
            assert!((rep.effective_gain[k] - expect).abs() < 1e-10 * expect);
        }
    }
}
