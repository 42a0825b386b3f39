mod common;

use common::*;
use rand::Rng;
use wpaircomp::aircomp::denoising_factor;
use wpaircomp::baselines::*;
use wpaircomp::channels::SystemConfig;
use wpaircomp::harness::run_on_channels;
use wpaircomp::linalg::{random_unit_vector, CMat, C64};
use wpaircomp::wpt::WptPlan;

fn subsets(n: usize, l: usize) -> Vec<Vec<usize>> {
    if l == 0 {
        return vec![vec![]];
    }
    if n < l {
        return vec![];
    }
    let mut out = subsets(n - 1, l);
    for mut s in subsets(n - 1, l - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

#[test]
fn antenna_selection_matches_exhaustive_search() {
    let mut r = rng(1);
    for _ in 0..200 {
        let n = r.random_range(2..9);
        let l = r.random_range(1..=n);
        let h = rician(&mut r, n, 3);
        let f = antenna_selection_beamformer(&h, l).unwrap();
        let norms: Vec<f64> = h.row_iter().map(|row| row.norm_squared()).collect();
        let best = subsets(n, l)
            .into_iter()
            .max_by(|a, b| {
                let sa: f64 = a.iter().map(|&i| norms[i]).sum();
                let sb: f64 = b.iter().map(|&i| norms[i]).sum();
                sa.total_cmp(&sb)
            })
            .unwrap();
        let chosen: Vec<usize> = (0..n).filter(|&i| f.row(i).iter().any(|z| z.norm() > 0.0)).collect();
        assert_eq!(chosen, best);
        assert!(rel(f.norm_squared(), 1.0) < 1e-12);
        assert!((f.adjoint() * &f - CMat::identity(l, l) / C64::from(l as f64)).norm() < 1e-12);
    }
}

#[test]
fn antenna_selection_breaks_ties_by_index() {
    let h = CMat::from_element(4, 1, C64::new(1.0, 0.0));
    let f = antenna_selection_beamformer(&h, 2).unwrap();
    assert!(f[(0, 0)].norm() > 0.0 && f[(1, 1)].norm() > 0.0);
    assert_eq!(f.rows(2, 2).norm(), 0.0);
    assert!(antenna_selection_beamformer(&h, 5).is_err());
}

#[test]
fn eigenmode_matches_power_iteration() {
    let mut r = rng(2);
    for _ in 0..100 {
        let h = rician(&mut r, 6, 3);
        let f = eigenmode_beamformer(&h, 1).unwrap();
        let (_, v) = power_iteration(&(&h * h.adjoint()), 5000);
        assert!((f.column(0).dotc(&v).norm() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn no_orthonormal_set_captures_more_energy_than_eigenmodes() {
    let mut r = rng(3);
    let h = rician(&mut r, 6, 3);
    let l = 2;
    let f = eigenmode_beamformer(&h, l).unwrap() * C64::from((l as f64).sqrt());
    let best = (h.adjoint() * &f).norm_squared();
    let sv = h.singular_values();
    let mut s: Vec<f64> = sv.iter().map(|x| x * x).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    assert!(rel(best, s[0] + s[1]) < 1e-10);
    for _ in 0..10_000 {
        let u = orthonormal(&mut r, 6, l);
        assert!((h.adjoint() * &u).norm_squared() <= best * (1.0 + 1e-12));
    }
}

#[test]
fn sum_channel_adds_entrywise() {
    let mut r = rng(4);
    let hs: Vec<CMat> = (0..3).map(|_| rician(&mut r, 4, 2)).collect();
    let s = sum_channel(&hs).unwrap();
    for i in 0..4 {
        for j in 0..2 {
            let expect = hs[0][(i, j)] + hs[1][(i, j)] + hs[2][(i, j)];
            assert!((s[(i, j)] - expect).norm() < 1e-14);
        }
    }
    assert!(sum_channel(&[]).is_err());
    assert!(sum_channel(&[CMat::zeros(2, 1), CMat::zeros(3, 1)]).is_err());
}

#[test]
fn equal_power_split() {
    assert_eq!(equal_power_plan(4, 2.0), vec![0.5; 4]);
}

#[test]
fn max_snr_beats_random_designs() {
    let mut r = rng(5);
    let ch = miso_channels(&mut r, 4, 5);
    let gamma = gammas(&mut r, 4);
    let d = max_snr_design(&ch, &gamma, 2.0, 0.1).unwrap();
    assert!(rel(d.rho, receive_snr(&ch, &gamma, &d.f, &d.plan.p, 0.1)) < 1e-12);
    for _ in 0..100_000 {
        let f = random_unit_vector(&mut r, 5);
        // Uniform point on the simplex scaled to the power budget.
        let e: Vec<f64> = (0..4).map(|_| -r.random::<f64>().max(1e-300).ln()).collect();
        let total: f64 = e.iter().sum();
        let p: Vec<f64> = e.iter().map(|x| 2.0 * x / total).collect();
        assert!(receive_snr(&ch, &gamma, &f, &p, 0.1) <= d.rho * (1.0 + 1e-12));
    }
}

#[test]
fn sum_form_never_exceeds_equal_power_form() {
    let mut r = rng(6);
    for i in 0..500 {
        let mimo = i % 2 == 1;
        let (ch, f) = if mimo {
            let ch = mimo_channels(&mut r, 4, 6, 2);
            let f = orthonormal(&mut r, 6, 2) / C64::from(2f64.sqrt());
            (ch, f)
        } else {
            let ch = miso_channels(&mut r, 4, 6);
            (ch, CMat::from_columns(&[random_unit_vector(&mut r, 6)]))
        };
        let gamma = gammas(&mut r, 4);
        let (sum, max) = max_to_sum_gap(&ch, &gamma, 1.5, &f).unwrap();
        assert!(sum <= max * (1.0 + 1e-12));
        // The sum form is the denoising factor under optimal power control,
        // the max form the one under equal powers.
        let opt = denoising_factor(&f, &ch, &gamma, &WptPlan::optimal(&ch, &f, &gamma, 1.5).unwrap()).unwrap();
        let epa = denoising_factor(&f, &ch, &gamma, &WptPlan::equal_power(&ch, 1.5).unwrap()).unwrap();
        assert!(rel(sum, opt) < 1e-9, "{sum} vs {opt}");
        assert!(rel(max, epa) < 1e-9, "{max} vs {epa}");
        assert!(rel(equal_power_objective(&ch, &gamma, 1.5, &f).unwrap(), max) < 1e-12);
    }
}

#[test]
fn equal_power_design_coincides_with_proposed_for_one_sensor() {
    let cfg = SystemConfig {
        k: 1,
        n_ap: 6,
        ..SystemConfig::miso_default()
    };
    let mut r = rng(7);
    for seed in 0..10 {
        let ch = miso_channels(&mut r, 1, 6);
        let gamma = gammas(&mut r, 1);
        let a = run_on_channels(&cfg, &ch, &gamma, SchemeId::Proposed, seed).unwrap();
        let b = run_on_channels(&cfg, &ch, &gamma, SchemeId::EqualPower, seed).unwrap();
        assert!(rel(a.eta, b.eta) < 1e-6, "{} vs {}", a.eta, b.eta);
    }
}

#[test]
fn equal_power_is_optimal_for_identical_sensors() {
    let cfg = SystemConfig {
        k: 3,
        n_ap: 5,
        ..SystemConfig::miso_default()
    };
    let mut r = rng(8);
    let one = miso_channels(&mut r, 1, 5);
    let h = vec![one.aircomp()[0].clone(); 3];
    let g = vec![one.wpt()[0].clone(); 3];
    let ch = wpaircomp::channels::ChannelSet::new(g, h).unwrap();
    let gamma = vec![0.4; 3];
    let a = run_on_channels(&cfg, &ch, &gamma, SchemeId::Proposed, 1).unwrap();
    let b = run_on_channels(&cfg, &ch, &gamma, SchemeId::EqualPower, 1).unwrap();
    assert!(rel(a.eta, b.eta) < 1e-6, "{} vs {}", a.eta, b.eta);
}
