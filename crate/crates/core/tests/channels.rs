use proptest::prelude::*;
use wpaircomp::channels::*;
use wpaircomp::linalg::C64;

#[test]
fn entry_moments_match_the_generator() {
    // 10^5 entries: 10 sensors x 2 links x 5000 antennas.
    let cfg = SystemConfig {
        k: 10,
        n_ap: 5000,
        ..SystemConfig::miso_default()
    };
    let ch = sample_channels(&cfg, 11).unwrap();
    let entries: Vec<C64> = ch.wpt().iter().chain(ch.aircomp()).flat_map(|m| m.iter().copied()).collect();
    let n = entries.len() as f64;
    assert_eq!(entries.len(), 100_000);
    let mean = entries.iter().sum::<C64>() / C64::from(n);
    let var = entries.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
    assert!((mean - C64::new(1.0, 0.0)).norm() < 3.0 / n.sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 0.05, "variance {var}");
    // Real and imaginary parts split the variance evenly.
    let var_re = entries.iter().map(|z| (z.re - mean.re).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var_re - 0.5).abs() < 0.025);
}

#[test]
fn efficiencies_are_uniform() {
    let cfg = SystemConfig {
        k: 100_000,
        ..SystemConfig::miso_default()
    };
    let g = sample_gammas(&cfg, 5).unwrap();
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    assert!((mean - 0.5).abs() < 0.01);
    assert!(g.iter().all(|&x| x > 0.0 && x < 1.0));
}

#[test]
fn sensors_and_antennas_are_nested_across_configs() {
    let small = SystemConfig {
        k: 2,
        n_ap: 10,
        ..SystemConfig::miso_default()
    };
    let big = SystemConfig {
        k: 5,
        n_ap: 20,
        ..SystemConfig::miso_default()
    };
    let (a, b) = (sample_channels(&small, 3).unwrap(), sample_channels(&big, 3).unwrap());
    for k in 0..2 {
        assert_eq!(a.aircomp()[k], b.aircomp()[k].rows(0, 10).into_owned());
        assert_eq!(a.wpt()[k], b.wpt()[k].rows(0, 10).into_owned());
    }
    assert_eq!(sample_gammas(&small, 3).unwrap()[..], sample_gammas(&big, 3).unwrap()[..2]);
}

#[test]
fn config_file_round_trip() {
    let text = r#"
mode = "mimo"
k = 3
n_ap = 12
p0 = 2.5
gamma = [0.2, 0.4, 0.6]
rician_mean = [1.0, -0.5]
m_samples = 10

[solver]
max_iters = 50
"#;
    let cfg = SystemConfig::from_toml_str(text).unwrap();
    assert_eq!(cfg.mode(), Mode::Mimo);
    assert_eq!((cfg.k, cfg.n_ap, cfg.n_sn, cfg.l), (3, 12, 5, 5));
    assert_eq!(cfg.p0, 2.5);
    assert_eq!(cfg.rician_mean, C64::new(1.0, -0.5));
    assert_eq!(cfg.solver.max_iters, 50);
    assert_eq!(resolve_gammas(&cfg, 0).unwrap(), vec![0.2, 0.4, 0.6]);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, text).unwrap();
    assert_eq!(SystemConfig::from_file(&path).unwrap(), cfg);
    assert!(matches!(
        SystemConfig::from_file(&dir.path().join("missing.toml")),
        Err(wpaircomp::Error::Io(_))
    ));
}

proptest! {
    #[test]
    fn config_parser_never_panics(text in "\\PC{0,200}") {
        let _ = SystemConfig::from_toml_str(&text);
    }

    #[test]
    fn valid_scalar_overrides_parse(k in 1usize..20, n_ap in 1usize..64, p0 in 0.01f64..100.0) {
        let text = format!("k = {k}\nn_ap = {n_ap}\np0 = {p0:?}\n");
        let cfg = SystemConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!((cfg.k, cfg.n_ap, cfg.p0), (k, n_ap, p0));
        prop_assert!(cfg.is_miso());
    }

    #[test]
    fn generation_is_deterministic(seed in any::<u64>()) {
        let cfg = SystemConfig { k: 2, n_ap: 3, ..SystemConfig::mimo_default() };
        let cfg = SystemConfig { l: 3, ..cfg };
        prop_assert_eq!(sample_channels(&cfg, seed).unwrap(), sample_channels(&cfg, seed).unwrap());
        prop_assert_eq!(sample_gammas(&cfg, seed).unwrap(), sample_gammas(&cfg, seed).unwrap());
    }
}
