use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use wpaircomp::baselines::{parse_scheme_list, SchemeId};
use wpaircomp::channels::{Mode, SystemConfig};
use wpaircomp::harness::{
    nomographic_demo, oracle_check, parse_value_list, reproduce_table2, run_sweep, write_results_csv,
    write_table2_csv, write_trials_csv, ResultRow, SweepParam, SweepSpec,
};

#[derive(Parser, Debug)]
#[command(name = "wpaircomp", version, about = "Wirelessly powered over-the-air computation experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file; absent fields take the defaults of its mode.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed; trial t uses a seed derived from (seed, t).
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Antenna configuration (selects defaults when no config file is given).
    #[arg(long, global = true)]
    mode: Option<Mode>,

    #[arg(long, global = true)]
    k: Option<usize>,

    #[arg(long = "n-ap", global = true)]
    n_ap: Option<usize>,

    #[arg(long, global = true)]
    p0: Option<f64>,

    #[arg(long = "noise-var", global = true)]
    noise_var: Option<f64>,

    /// Gaussian-randomization sample count.
    #[arg(long = "m-samples", global = true)]
    m_samples: Option<usize>,

    /// Monte-Carlo trials per point.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Comma-separated schemes: proposed,as,eb,epa,maxsnr.
    #[arg(long, global = true)]
    schemes: Option<String>,

    /// Comma-separated sweep values, strictly increasing.
    #[arg(long, global = true)]
    values: Option<String>,

    /// Also write one row per trial.
    #[arg(long = "per-trial", global = true)]
    per_trial: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare schemes at the configured operating point.
    Run,
    /// Sweep the server transmit power.
    SweepPower,
    /// Sweep the number of server antennas.
    SweepAntennas,
    /// Sweep the number of sensors.
    SweepSensors,
    /// Frequency of rank-one relaxed solutions versus server antennas.
    Table2,
    /// Compare the design with exhaustive random search on small instances.
    OracleCheck {
        /// Number of random instances.
        #[arg(long, default_value_t = 50)]
        instances: usize,
        /// Random unit vectors per instance.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Compute every supported target function over a designed link.
    DemoNomographic,
}

impl Common {
    fn config(&self) -> Result<SystemConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let cfg = SystemConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?;
                if let Some(mode) = self.mode {
                    if mode != cfg.mode() {
                        bail!(
                            "--mode {} conflicts with {} ({})",
                            mode.as_str(),
                            path.display(),
                            cfg.mode().as_str()
                        );
                    }
                }
                cfg
            }
            None => SystemConfig::default_for(self.mode.unwrap_or(Mode::Miso)),
        };
        if let Some(k) = self.k {
            cfg.k = k;
            if cfg.gamma.as_ref().is_some_and(|g| g.len() != k) {
                bail!("--k {k} conflicts with the {} efficiencies in the config file", cfg.gamma.as_ref().map_or(0, |g| g.len()));
            }
        }
        if let Some(n) = self.n_ap {
            cfg.n_ap = n;
        }
        if let Some(p) = self.p0 {
            cfg.p0 = p;
        }
        if let Some(v) = self.noise_var {
            cfg.noise_var = v;
        }
        if let Some(m) = self.m_samples {
            cfg.m_samples = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn schemes(&self) -> Result<Vec<SchemeId>> {
        Ok(match &self.schemes {
            Some(s) => parse_scheme_list(s)?,
            None => vec![
                SchemeId::Proposed,
                SchemeId::AntennaSelection,
                SchemeId::Eigenmode,
                SchemeId::EqualPower,
            ],
        })
    }

    fn values(&self, default: &[f64]) -> Result<Vec<f64>> {
        Ok(match &self.values {
            Some(s) => parse_value_list(s)?,
            None => default.to_vec(),
        })
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        info!("writing {}", path.display());
        Ok(BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        ))
    }
}

fn print_rows(rows: &[ResultRow]) {
    println!("{:>8} {:>10} {:>9} {:>7} {:>13} {:>13} {:>9}", "param", "value", "scheme", "failed", "mean_nmse", "std_nmse", "rank1");
    for r in rows {
        println!(
            "{:>8} {:>10} {:>9} {:>7} {:>13.6e} {:>13.6e} {:>9}",
            r.param,
            r.value,
            r.scheme.name(),
            format!("{}/{}", r.failed, r.trials),
            r.mean_nmse,
            r.std_nmse,
            r.rank1_frac.map(|f| format!("{f:.4}")).unwrap_or_else(|| "-".into())
        );
    }
}

fn run(common: &Common) -> Result<()> {
    if common.values.is_some() {
        bail!("run evaluates a single operating point; use a sweep subcommand for --values");
    }
    let p0 = common.config()?.p0;
    sweep_with(common, SweepParam::P0, vec![p0], "run")
}

fn sweep(common: &Common, parameter: SweepParam, default_values: &[f64], name: &str) -> Result<()> {
    sweep_with(common, parameter, common.values(default_values)?, name)
}

fn sweep_with(common: &Common, parameter: SweepParam, values: Vec<f64>, name: &str) -> Result<()> {
    let cfg = common.config()?;
    let spec = SweepSpec {
        parameter,
        values,
        schemes: common.schemes()?,
        trials: common.trials.unwrap_or(200),
        base_seed: common.seed,
        mode: cfg.mode(),
    };
    let result = run_sweep(&spec, &cfg)?;
    print_rows(&result.rows);
    let mut w = common.create(&format!("{name}.csv"))?;
    write_results_csv(&mut w, &result.rows)?;
    w.flush()?;
    if common.per_trial {
        let mut w = common.create(&format!("{name}_trials.csv"))?;
        write_trials_csv(&mut w, &result.records)?;
        w.flush()?;
    }
    Ok(())
}

fn table2(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let n_ap: Vec<usize> = match &common.values {
        Some(s) => parse_value_list(s)?
            .into_iter()
            .map(|v| {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    bail!("antenna counts must be positive integers, got {v}")
                }
            })
            .collect::<Result<_>>()?,
        None => (1..=10).map(|i| 5 * i).collect(),
    };
    let rows = reproduce_table2(&cfg, &n_ap, common.trials.unwrap_or(1000), common.seed)?;
    println!("{:>5} {:>8} {:>10} {:>12}", "n_ap", "failed", "rank1", "mean_ratio");
    for r in &rows {
        println!("{:>5} {:>8} {:>10.4} {:>12.4e}", r.n_ap, r.stats.failed, r.stats.fraction, r.stats.mean_ratio);
    }
    let mut w = common.create("table2.csv")?;
    write_table2_csv(&mut w, &rows)?;
    w.flush()?;
    Ok(())
}

fn oracle(common: &Common, instances: usize, samples: usize) -> Result<bool> {
    let mut cfg = common.config()?;
    if common.n_ap.is_none() && common.config.is_none() {
        cfg.n_ap = 3;
    }
    if common.k.is_none() && common.config.is_none() {
        cfg.k = 3;
    }
    let mut w = common.create("oracle_check.csv")?;
    writeln!(w, "instance,k,n_ap,sdr_objective,search_objective,analytic,gap,passed")?;
    let mut all = true;
    for i in 0..instances {
        let seed = wpaircomp::harness::trial_seed(common.seed, i);
        let r = oracle_check(&cfg, seed, samples)?;
        all &= r.passed();
        writeln!(
            w,
            "{i},{},{},{:.9e},{:.9e},{},{:.9e},{}",
            cfg.k,
            cfg.n_ap,
            r.sdr_objective,
            r.search_objective,
            r.analytic.map(|a| format!("{a:.9e}")).unwrap_or_default(),
            r.gap,
            r.passed()
        )?;
        if !r.passed() {
            eprintln!("instance {i}: gap {:.3e} exceeds tolerance", r.gap);
        }
    }
    w.flush()?;
    println!("oracle check: {} instances, {}", instances, if all { "all passed" } else { "FAILED" });
    Ok(all)
}

fn demo(common: &Common) -> Result<bool> {
    let cfg = common.config()?;
    let rows = nomographic_demo(&cfg, common.seed)?;
    let mut ok = true;
    let out = io::stdout();
    let mut out = out.lock();
    writeln!(out, "{:<16} {:>14} {:>14} {:>14} {:>10}", "function", "exact", "noiseless", "noisy", "rel_err")?;
    for r in &rows {
        ok &= r.noiseless_rel_err <= 1e-9;
        writeln!(
            out,
            "{:<16} {:>14.8} {:>14.8} {:>14.8} {:>10.2e}",
            r.kind.name(),
            r.exact[0],
            r.noiseless[0],
            r.noisy[0],
            r.noiseless_rel_err
        )?;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let c = &cli.common;
    let outcome = match &cli.command {
        Command::Run => run(c).map(|_| true),
        Command::SweepPower => sweep(c, SweepParam::P0, &[0.5, 1.0, 2.0, 4.0], "sweep_power").map(|_| true),
        Command::SweepAntennas => sweep(c, SweepParam::NAp, &[10.0, 20.0, 30.0], "sweep_antennas").map(|_| true),
        Command::SweepSensors => sweep(c, SweepParam::K, &[2.0, 5.0, 8.0], "sweep_sensors").map(|_| true),
        Command::Table2 => table2(c).map(|_| true),
        Command::OracleCheck { instances, samples } => oracle(c, *instances, *samples),
        Command::DemoNomographic => demo(c),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
