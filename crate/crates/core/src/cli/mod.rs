//! Command-line driver: `simulate`, `analyze`, `bounds`, `gnz-check`,
//! `verify-assumptions` and `oracle-test`.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration or input error,
//! 3 numerical failure or a failed check.

mod bounds_cmd;
mod checks;
mod config;
mod experiment;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::SampleSet;
use crate::sampler::{brute_force_oracle, OracleOptions};

pub use bounds_cmd::BoundsCommand;
pub use checks::{
    compare_with_oracle, envelope_check, gnz_check, verify_assumptions, AssumptionReport, EnvelopeCheck, GnzCheck,
    GNZ_ACCEPT, GNZ_REJECT,
};
pub use config::{
    AnalysisConfig, ExperimentConfig, ResolvedAnalysis, ResolvedConfig, ResolvedSampler, SamplerConfig, WindowConfig,
};
pub use experiment::{
    load_samples, run_analysis, sha256_hex, simulate, variance_floor, write_report, write_samples, AnalysisReport,
    BoundCheck, ChainRecord, Manifest, MANIFEST,
};

#[derive(Debug, Parser)]
#[command(name = "gibbsfluct", version, about = "Gibbs point process simulation and fluctuation analysis")]
pub struct Cli {
    /// Worker threads for parallel chains and estimators (results do not
    /// depend on it).
    #[arg(long, global = true, env = "GIBBSFLUCT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the chains of an experiment file and write snapshots plus a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `sampler.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute the standard estimators from a sample directory.
    Analyze {
        /// Directory written by `simulate`.
        #[arg(long)]
        samples: PathBuf,
        /// Experiment file whose `[analysis]` section replaces the recorded
        /// one; its model and window must match the manifest.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to `<samples>/analysis`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate closed-form constants and bounds.
    Bounds(BoundsCommand),
    /// GNZ residuals under the model and under a doubled activity.
    GnzCheck(CheckArgs),
    /// Moment, decay and envelope diagnostics.
    VerifyAssumptions(CheckArgs),
    /// Compare the sampled count law with the brute-force oracle.
    OracleTest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        #[arg(long, default_value_t = 1_000_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        tail_tolerance: f64,
        /// Significance level of the chi-square test.
        #[arg(long, default_value_t = 0.01)]
        level: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Simulate from this experiment file.
    #[arg(long, conflicts_with = "samples", required_unless_present = "samples")]
    config: Option<PathBuf>,
    /// Or read a directory written by `simulate`.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the JSON result.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::TruncationBound { .. } | Error::HardCoreConflict | Error::SingularPotential => 3,
        _ => 2,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return 1;
        }
        // a second initialisation in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 3,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Reads and resolves an experiment file, applying a seed override.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<(String, ResolvedConfig)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.sampler.seed = s;
    }
    Ok((text, cfg.resolve()?))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let p = dir.join(name);
    fs::write(&p, serde_json::to_vec_pretty(value)?)?;
    Ok(p)
}

fn samples_for(args: &CheckArgs) -> Result<(ResolvedConfig, SampleSet)> {
    match (&args.config, &args.samples) {
        (Some(path), _) => {
            let (_, cfg) = load_config(path, args.seed)?;
            let runs = simulate(&cfg)?;
            Ok((cfg, SampleSet::from_runs(runs)?))
        }
        (None, Some(dir)) => {
            let (manifest, _, samples) = load_samples(dir)?;
            Ok((manifest.resolved, samples))
        }
        (None, None) => Err(Error::Config("need --config or --samples".into())),
    }
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Simulate { config, out, seed } => {
            let (text, cfg) = load_config(&config, seed)?;
            let runs = simulate(&cfg)?;
            let (manifest, hash) = write_samples(&out, &text, &cfg, &runs)?;
            println!("model      {}", manifest.model);
            println!("seed       {}", cfg.sampler.seed);
            for rec in &manifest.chains {
                let [b, d, m] = rec.acceptance.rates();
                println!(
                    "{}  {} snapshots  acceptance birth {b:.3} death {d:.3} move {m:.3}",
                    rec.dir, rec.n_snapshots
                );
            }
            println!("manifest   {} (sha256 {hash})", out.join(MANIFEST).display());
            Ok(true)
        }
        Command::Analyze { samples, config, out } => {
            let (manifest, hash, set) = load_samples(&samples)?;
            let mut cfg = manifest.resolved.clone();
            if let Some(path) = config {
                let (_, other) = load_config(&path, Some(cfg.sampler.seed))?;
                if other.model != cfg.model || other.window != cfg.window {
                    return Err(Error::Manifest {
                        path: samples.join(MANIFEST),
                        reason: format!("model or window in {} differs from the recorded run", path.display()),
                    });
                }
                cfg.analysis = other.analysis;
            }
            let report = run_analysis(&cfg, &set)?;
            let out = out.unwrap_or_else(|| samples.join("analysis"));
            write_report(&out, &report, Some(&hash))?;
            print_report(&report);
            println!("written to {} (manifest sha256 {hash})", out.display());
            Ok(report.bound.as_ref().is_none_or(|b| b.verdicts.iter().all(|&v| v)))
        }
        Command::Bounds(b) => b.run(),
        Command::GnzCheck(args) => {
            let (cfg, set) = samples_for(&args)?;
            let model = cfg.model()?;
            let check = gnz_check(&set, &model, cfg.analysis.gnz_radius, &experiment::probe_options(&cfg))?;
            for r in check.residuals.iter().chain(std::iter::once(&check.control)) {
                println!(
                    "{:<12} lhs {:>12.5} rhs {:>12.5} residual {:>10.5} se {:>9.5} |z| {:>7.2}",
                    r.test.name(),
                    r.lhs,
                    r.rhs,
                    r.residual,
                    r.se,
                    r.z_score()
                );
            }
            println!("control uses activity 2z; verdict {}", verdict(check.passes));
            if let Some(dir) = &args.out {
                write_json(dir, "gnz_check.json", &check)?;
            }
            Ok(check.passes)
        }
        Command::VerifyAssumptions(args) => {
            let (cfg, set) = samples_for(&args)?;
            let rep = verify_assumptions(&cfg, &set)?;
            println!("a1  E lambda*^{} = {:.6e} (se {:.2e})", 2.0 * rep.a1.alpha1, rep.a1.estimate, rep.a1.se);
            for r in &rep.a2.rows {
                println!("a2  |y| = {:<8.4} {:.6e} (se {:.2e}, {} conflicts)", r.radius, r.estimate, r.se, r.conflicts);
            }
            println!(
                "envelope  {} probes, {} violations, lambda* in [{:.6}, {:.6}]",
                rep.envelope.n_probes, rep.envelope.violations, rep.envelope.min_intensity, rep.envelope.max_intensity
            );
            if let Some(i) = &rep.integrability {
                println!("integrability  {}", serde_json::to_string(i)?);
            }
            println!("verdict {}", verdict(rep.passes));
            if let Some(dir) = &args.out {
                write_json(dir, "assumptions.json", &rep)?;
            }
            Ok(rep.passes)
        }
        Command::OracleTest { config, seed, n_max, mc_samples, tail_tolerance, level, out } => {
            let (_, cfg) = load_config(&config, seed)?;
            let model = cfg.model()?;
            let opts = OracleOptions { n_max, mc_samples, tail_tolerance, seed: cfg.sampler.seed };
            let oracle = brute_force_oracle(&model, cfg.window()?, &opts)?;
            let set = SampleSet::from_runs(simulate(&cfg)?)?;
            let chi = compare_with_oracle(&set, &oracle);
            println!("{:>3}  {:>12}  {:>12}", "n", "oracle", "observed");
            let total = set.len() as f64;
            let mut observed = vec![0usize; n_max + 1];
            for c in set.snapshots() {
                observed[c.len().min(n_max)] += 1;
            }
            for (n, (p, o)) in oracle.probabilities.iter().zip(&observed).enumerate() {
                println!("{n:>3}  {p:>12.6}  {:>12.6}", *o as f64 / total);
            }
            println!(
                "chi-square {:.4} on {} df, p = {:.4}; tail bound {:.2e}",
                chi.statistic, chi.df, chi.p_value, oracle.tail_bound
            );
            let passes = chi.passes(level);
            println!("verdict {}", verdict(passes));
            if let Some(dir) = &out {
                #[derive(Serialize)]
                struct OracleOut<'a> {
                    oracle: &'a crate::sampler::OracleResult,
                    statistic: f64,
                    df: usize,
                    p_value: f64,
                    level: f64,
                    passes: bool,
                }
                write_json(
                    dir,
                    "oracle_test.json",
                    &OracleOut {
                        oracle: &oracle,
                        statistic: chi.statistic,
                        df: chi.df,
                        p_value: chi.p_value,
                        level,
                        passes,
                    },
                )?;
            }
            Ok(passes)
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_report(r: &AnalysisReport) {
    println!("model {}  seed {}  snapshots {}", r.model, r.seed, r.n_samples);
    println!("intensity {:.6} (se {:.2e})", r.intensity, r.intensity_se);
    if let Some(b) = &r.bound {
        println!("{} = {:.6}", b.name, b.value);
    }
    println!("{:>8} {:>10} {:>12} {:>10}  bound", "fraction", "volume", "Var/|W|", "se");
    for (i, row) in r.variance.rows.iter().enumerate() {
        let v = r.bound.as_ref().map(|b| verdict(b.verdicts[i])).unwrap_or("-");
        println!("{:>8.3} {:>10.4} {:>12.6} {:>10.2e}  {v}", row.fraction, row.volume, row.var_per_volume, row.se);
    }
    for g in &r.gnz {
        println!("gnz {:<12} residual {:>10.5} se {:.2e}", g.test.name(), g.residual, g.se);
    }
    if let Some(d) = &r.domination {
        println!(
            "occupancy  min {:.4}, lower bound {:.4} vs p {:.4e}: {}",
            d.min_occupancy,
            d.lower_bound,
            d.p,
            verdict(d.passes)
        );
    }
}
