//! `sim`: command-line front end for the experiment harness.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uavsim::chain::{ecdh, keygen, CurveParams};
use uavsim::harness::experiments::{RunOptions, EXPERIMENTS};
use uavsim::harness::{emit_report, load_config, load_topology, run_experiment, AgentKind, Experiment, ExperimentConfig, HarnessError};

#[derive(Debug, Parser)]
#[command(name = "sim", version, about = "Seeded UAV offloading, semantic communication and blockchain experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment (or `all`) and write CSV, SVG and metadata.
    Run {
        /// Experiment name, or `all`.
        experiment: String,
        /// TOML config; built-in defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Node-distribution table for the offloading sweep.
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Replicate count, overriding the config.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// SNR sweep `min:max:step` in dB.
        #[arg(long)]
        snr_sweep: Option<String>,
        /// Committee-size sweep `min:max:step`.
        #[arg(long)]
        k_sweep: Option<String>,
        /// Agent for the offloading sweep: quantum or egreedy.
        #[arg(long, default_value = "quantum")]
        agent: String,
    },
    /// Parse and validate a config file, printing its hash.
    ValidateConfig { path: PathBuf },
    /// Parse a curve file and check its group arithmetic.
    CurveCheck { path: PathBuf },
}

fn parse_triplet<T: std::str::FromStr>(flag: &str, s: &str) -> Result<(T, T, T), HarnessError> {
    let bad = || HarnessError::Usage(format!("--{flag} expects min:max:step, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let p = |i: usize| parts[i].trim().parse::<T>().map_err(|_| bad());
    Ok((p(0)?, p(1)?, p(2)?))
}

fn apply_overrides(cfg: &mut ExperimentConfig, seeds: Option<usize>, snr: Option<&str>, k: Option<&str>) -> Result<(), HarnessError> {
    if let Some(n) = seeds {
        cfg.replicates = n;
    }
    if let Some(s) = snr {
        let (lo, hi, step) = parse_triplet::<f64>("snr-sweep", s)?;
        (cfg.semcom.snr_min, cfg.semcom.snr_max, cfg.semcom.snr_step) = (lo, hi, step);
    }
    if let Some(s) = k {
        let (lo, hi, step) = parse_triplet::<usize>("k-sweep", s)?;
        (cfg.chain.k_min, cfg.chain.k_max, cfg.chain.k_step) = (lo, hi, step);
    }
    cfg.validate().map_err(|(section, key, msg)| HarnessError::validation(format!("{section}.{key}: {msg}")))
}

#[allow(clippy::too_many_arguments)]
fn run(experiment: &str, config: Option<&Path>, topology: Option<&Path>, seeds: Option<usize>, out: &Path, snr: Option<&str>, k: Option<&str>, agent: &str) -> Result<(), HarnessError> {
    let experiments: Vec<Experiment> = if experiment == "all" { Experiment::ALL.to_vec() } else { vec![experiment.parse()?] };
    let agent: AgentKind = agent.parse()?;
    let mut cfg = match config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    apply_overrides(&mut cfg, seeds, snr, k)?;
    let topology = topology.map(load_topology).transpose()?;
    let opts = RunOptions { agent, topology };
    let mut summaries = Vec::new();
    for e in experiments {
        eprintln!("running {e}");
        summaries.push(run_experiment(e, &cfg, &opts)?);
    }
    for path in emit_report(&summaries, out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn curve_check(path: &Path) -> Result<(), HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let curve = CurveParams::parse(&text).map_err(|e| HarnessError::validation(e.to_string()))?;
    let order_kills_g = curve.scalar_mul(&curve.n, &curve.g).map_err(HarnessError::runtime)?.is_infinity();
    if !order_kills_g {
        return Err(HarnessError::validation("n * G is not the point at infinity"));
    }
    for i in 0..16u64 {
        let (a, b) = (keygen(&curve, 2 * i), keygen(&curve, 2 * i + 1));
        let s1 = ecdh(&a.private, &b.public, &curve).map_err(HarnessError::runtime)?;
        let s2 = ecdh(&b.private, &a.public, &curve).map_err(HarnessError::runtime)?;
        if s1 != s2 {
            return Err(HarnessError::Runtime(format!("key pair {i}: shared secrets differ")));
        }
    }
    println!("ok: {}-bit field, generator of order n on the curve, 16 ECDH agreements", curve.p.bits_vartime());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { experiment, config, topology, seeds, out, snr_sweep, k_sweep, agent } => {
            run(&experiment, config.as_deref(), topology.as_deref(), seeds, &out, snr_sweep.as_deref(), k_sweep.as_deref(), &agent)
        }
        Command::ValidateConfig { path } => {
            let cfg = load_config(&path)?;
            println!("ok {}", cfg.hash());
            Ok(())
        }
        Command::CurveCheck { path } => curve_check(&path),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            if code == 1 {
                eprintln!("experiments: {}, all", EXPERIMENTS.join(", "));
            }
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
