//! `tpk` — batch front end for the two-projections toolkit.
//!
//! Subcommands: gen, decompose, angle, verify, resolvent, counterexample.
//! All numeric JSON output carries 17 significant digits; identical
//! invocations produce identical bytes apart from reported wall time.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tpk_core::friedrichs::verify_norm_equation;
use tpk_core::halmos::halmos_decompose;
use tpk_core::random::generate_pair;
use tpk_core::resolvent::intersection_projector_iterative;
use tpk_core::schema::{from_json_str, to_json_string, HalmosFormJson, PairJson};
use tpk_core::subspaces::Projector;
use tpk_core::suites::{run_counterexample, run_suite, SuiteConfig};
use tpk_core::{Error, PairSpec, RankPolicy};

#[derive(Parser)]
#[command(name = "tpk", version, about = "Two-projections toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 6)]
    rank_p: usize,
    #[arg(long, default_value_t = 6)]
    rank_q: usize,
    /// Engineered intersection dimension.
    #[arg(long, default_value_t = 0)]
    shared: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GenArgs {
    fn spec(&self) -> PairSpec {
        PairSpec {
            dim: self.dim,
            rank_p: self.rank_p,
            rank_q: self.rank_q,
            shared_rank: self.shared,
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded projector pair as JSON.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the canonical form of a pair read from a pair JSON file.
    Decompose {
        /// Pair JSON path; when omitted a pair is generated from the flags.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the angle/norm-identity report for a pair.
    Angle {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Run a named verification suite; exits nonzero on failure.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scales every tolerance in the suite proportionally.
        #[arg(long, default_value_t = 1.0)]
        tol: f64,
    },
    /// Iterative intersection projector with a convergence trace.
    Resolvent {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 1 << 20)]
        n_max: u64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// CSV trace path (columns: n, err_to_oracle, diff_ab, diff_bc, norm_b).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Grid study of the extremely discomplementable pair on C([0,1]; M2).
    Counterexample {
        /// Finest grid; coarser dyadic levels are derived from it.
        #[arg(long, default_value_t = 1025)]
        grid: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report JSON path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn load_or_generate(
    input: &Option<PathBuf>,
    gen: &GenArgs,
) -> Result<(Projector, Projector)> {
    match input {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let pair: PairJson = from_json_str(&text)?;
            Ok(pair.to_pair()?)
        }
        None => Ok(generate_pair(&gen.spec())?),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// Coarser dyadic grid levels ending at `finest`, e.g. 1025 -> [65, 257, 1025].
fn refinement_levels(finest: usize) -> Vec<usize> {
    let mut levels = vec![finest];
    while levels.len() < 3 {
        let last = levels[levels.len() - 1];
        if last >= 17 && (last - 1) % 4 == 0 {
            levels.push((last - 1) / 4 + 1);
        } else {
            break;
        }
    }
    levels.reverse();
    levels
}

fn run() -> Result<bool> {
    if let Ok(threads) = std::env::var("TPK_THREADS") {
        let n: usize = threads.parse().context("TPK_THREADS must be an integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }

    let cli = Cli::parse();
    match cli.command {
        Command::Gen { gen, out } => {
            let (p, q) = generate_pair(&gen.spec())?;
            emit(&to_json_string(&PairJson::from_pair(&p, &q))?, &out)?;
            Ok(true)
        }
        Command::Decompose { input, gen, out } => {
            let (p, q) = load_or_generate(&input, &gen)?;
            let form = halmos_decompose(&p, &q, RankPolicy::default())?;
            emit(&to_json_string(&HalmosFormJson::from_form(&form))?, &out)?;
            Ok(true)
        }
        Command::Angle { input, gen } => {
            let (p, q) = load_or_generate(&input, &gen)?;
            let report = verify_norm_equation(&p, &q, RankPolicy::default())?;
            println!("{}", to_json_string(&report)?);
            Ok(true)
        }
        Command::Verify {
            suite,
            dim,
            trials,
            seed,
            tol,
        } => {
            if tol <= 0.0 {
                bail!("--tol must be positive");
            }
            let mut cfg = SuiteConfig::default_for(&suite)?;
            if let Some(d) = dim {
                cfg.dim = d;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.seed = seed;
            cfg.tol_scale = tol;
            let report = run_suite(&suite, &cfg)?;
            println!("{}", to_json_string(&report)?);
            Ok(report.pass)
        }
        Command::Resolvent {
            input,
            gen,
            n_max,
            tol,
            trace,
        } => {
            let (p, q) = load_or_generate(&input, &gen)?;
            let (projector, trace_data, converged) =
                match intersection_projector_iterative(&p, &q, tol, n_max) {
                    Ok((proj, t)) => (proj, t, true),
                    Err(Error::NoConvergence(t)) => {
                        let t = *t;
                        (t.final_projector.clone(), t, false)
                    }
                    Err(e) => return Err(e.into()),
                };
            if let Some(path) = trace {
                let mut csv = String::from("n,err_to_oracle,diff_ab,diff_bc,norm_b\n");
                for r in &trace_data.records {
                    csv.push_str(&format!(
                        "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                        r.n, r.err_to_oracle, r.diff_ab, r.diff_bc, r.norm_b
                    ));
                }
                fs::write(&path, csv)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            #[derive(serde::Serialize)]
            struct Summary {
                converged: bool,
                steps: usize,
                final_n: u64,
                projector_rank: usize,
            }
            let summary = Summary {
                converged,
                steps: trace_data.records.len(),
                final_n: trace_data.records.last().map(|r| r.n).unwrap_or(0),
                projector_rank: projector.rank(),
            };
            println!("{}", to_json_string(&summary)?);
            Ok(converged)
        }
        Command::Counterexample {
            grid,
            trials,
            seed,
            report,
        } => {
            let levels = refinement_levels(grid);
            let rep = run_counterexample(&levels, trials, seed)?;
            emit(&to_json_string(&rep)?, &report)?;
            let distances_ok = rep.min_distance.values().all(|&d| d >= 1.0 - 1e-12);
            let bump_ok = rep.bump_ratios.windows(2).all(|w| w[1] < w[0]);
            Ok(distances_ok && bump_ok)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e:#}");
            ExitCode::from(2)
        }
    }
}
