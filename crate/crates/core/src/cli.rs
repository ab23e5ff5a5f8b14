//! Command-line front end. Exit codes: 0 success, 1 usage/config/IO error,
//! 2 verification failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser, Subcommand};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::goodness::{verify_goodness_with, GoodnessParams};
use crate::harness::{load_trajectory, persist, replay_fixed_gaps, run_experiment, RunConfig};
use crate::instances::{build_lowerbound_family, generate_synthetic, lowerbound_epsilon, lowerbound_report, Instance};
use crate::numerics::RngStream;
use crate::pareto::accumulate_regret;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mogro", version, about = "Multi-objective linear bandit experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment from a TOML config and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        save_trajectories: bool,
    },
    /// Generate a synthetic instance.
    GenInstance {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the lower-bound instance family and its numerical checks.
    #[command(group(ArgGroup::new("scale").required(true).args(["t", "epsilon"])))]
    GenLowerbound {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check γ-goodness of an instance; exit 2 when it fails.
    VerifyGoodness {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Horizon used for the eigenvalue threshold B.
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
    },
    /// Recompute gaps and cumulative regret of a saved fixed-feature
    /// trajectory; exit 2 when they differ from the recorded values.
    Metrics {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        instance: PathBuf,
    },
    /// Print a summary table of a run directory.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn cli_run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run {
            config,
            out,
            workers,
            save_trajectories,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if workers.is_some() {
                cfg.workers = workers;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| Error::InvalidConfig("no output directory: pass --out or set output_dir".into()))?;
            let result = run_experiment(&cfg)?;
            persist(&result, &dir, save_trajectories)?;
            for p in &result.aggregate.policies {
                let last = p.curves.last().expect("T >= 1");
                eprintln!(
                    "{}: EPR({}) = {:.4}, PR = {:.4}, runtime = {:.1} ms",
                    p.name,
                    last.t,
                    last.mean_epr,
                    last.mean_pr,
                    p.total_runtime_ns as f64 / 1e6
                );
            }
            Ok(EXIT_OK)
        }
        Command::GenInstance {
            d,
            k,
            m,
            sigma,
            seed,
            out,
        } => {
            let mut rng = RngStream::new(seed, 0);
            let inst = generate_synthetic(&mut rng, d, k, m, sigma)?;
            inst.save(&out)?;
            Ok(EXIT_OK)
        }
        Command::GenLowerbound { d, t, epsilon, out } => {
            let eps = match (epsilon, t) {
                (Some(e), _) => e,
                (None, Some(t)) if t > 0 => lowerbound_epsilon(d, t),
                _ => return Err(Error::InvalidConfig("--t must be positive".into())),
            };
            let fam = build_lowerbound_family(d, eps)?;
            let report = lowerbound_report(&fam);
            let mut doc = serde_json::to_value(&fam).expect("serializable");
            doc["horizon"] = serde_json::json!(t);
            doc["report"] = serde_json::to_value(&report).expect("serializable");
            write_text(&out, &serde_json::to_string_pretty(&doc).expect("serializable"))?;
            Ok(EXIT_OK)
        }
        Command::VerifyGoodness {
            instance,
            gamma,
            alpha,
            n,
            seed,
            horizon,
        } => {
            let inst = Instance::load(&instance)?;
            let mut params = GoodnessParams::new(gamma, alpha, n);
            params.horizon = horizon;
            let mut rng = RngStream::new(seed, 0);
            let report = verify_goodness_with(&inst, &params, &mut rng)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            Ok(if report.verified { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::Metrics { trajectory, instance } => {
            let inst = Instance::load(&instance)?;
            let rows = load_trajectory(&trajectory)?;
            let arms: Vec<usize> = rows.iter().map(|r| r.arm).collect();
            let gaps = replay_fixed_gaps(&inst, &arms)?;
            let mismatches = rows
                .iter()
                .zip(&gaps)
                .filter(|(r, g)| r.pareto_gap.to_bits() != g.0.to_bits() || r.effective_gap.to_bits() != g.1.to_bits())
                .count();
            let curves = accumulate_regret(gaps.iter().copied());
            println!("t,pr,epr");
            for (i, (pr, epr)) in curves.pr.iter().zip(&curves.epr).enumerate() {
                println!("{},{},{}", rows[i].t, pr, epr);
            }
            if mismatches > 0 {
                eprintln!("{mismatches} of {} rounds differ from the recorded gaps", rows.len());
                return Ok(EXIT_VERIFY_FAILED);
            }
            Ok(EXIT_OK)
        }
        Command::Summarize { input } => {
            let path = input.join("summary.json");
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
            print!("{}", summary_table(&doc)?);
            Ok(EXIT_OK)
        }
    }
}

fn summary_table(doc: &Value) -> Result<String> {
    let policies = doc["policies"]
        .as_object()
        .ok_or_else(|| Error::Format("summary.json has no `policies` object".into()))?;
    let num = |v: &Value| v.as_f64().map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    let mut out = format!(
        "{:<20} {:>12} {:>12} {:>10} {:>10} {:>12}\n",
        "policy", "EPR(T)", "PR(T)", "EPFI", "EPFI~", "runtime_ms"
    );
    for (name, p) in policies {
        let ms = p["total_runtime_ns"]
            .as_f64()
            .map_or_else(|| "-".to_string(), |x| format!("{:.1}", x / 1e6));
        out.push_str(&format!(
            "{:<20} {:>12} {:>12} {:>10} {:>10} {:>12}\n",
            name,
            num(&p["final_mean_epr"]),
            num(&p["final_mean_pr"]),
            num(&p["epfi_exact"]),
            num(&p["epfi_proxy"]),
            ms
        ));
    }
    Ok(out)
}
