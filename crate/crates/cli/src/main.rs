//! `gossip-est`: validate, run and analyze distributed estimation
//! experiments described in TOML.

mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gossip_est::analysis::{
    critical_gain_scale, default_ratio_sweep, ContractionSchedule, DecaySchedule,
};
use gossip_est::harness::ExperimentSummary;
use gossip_est::{
    asymptotic_covariance, optimal_gain, quadratic_form_bound, run_experiment, scalar_recursion,
    Error, Experiment, ExperimentConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "gossip-est", version, about = "Mixed time-scale gossip estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every modelling and step-size assumption of a config.
    Validate {
        config: PathBuf,
    },
    /// Run the Monte Carlo experiment and write result files.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Result directory (overrides the config's `outputs`).
        #[arg(long, env = "GOSSIP_EST_OUT")]
        out: Option<PathBuf>,
    },
    /// Report the optimal gain, asymptotic covariance and quadratic-form
    /// bound for a config, as JSON.
    Analyze {
        config: PathBuf,
    },
    /// Iterate the scalar recursions behind the convergence-rate argument.
    LemmaOracle {
        #[arg(long, default_value_t = 1_000_000)]
        iterations: u64,
        /// Forcing scale of the additive term.
        #[arg(long, default_value_t = 0.01)]
        forcing: f64,
        /// Runs with a randomized contraction factor per setting.
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Draw error, disagreement and gap curves from a result directory.
    Plot {
        results: PathBuf,
        /// Directory for the SVG files (default: the result directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    iterations: Option<u64>,
    /// Run even if assumptions are violated.
    #[arg(long)]
    allow_invalid: bool,
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        if let Some(iterations) = self.iterations {
            config.iterations = iterations;
        }
        config.allow_invalid |= self.allow_invalid;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Error::Validation(violations)) => {
            eprintln!("{}", Error::Validation(violations));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> gossip_est::Result<ExitCode> {
    match command {
        Command::Validate { config } => validate(&config),
        Command::Run {
            config,
            overrides,
            out,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            overrides.apply(&mut cfg);
            let out = out
                .or_else(|| cfg.outputs.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let exp = Experiment::from_config(cfg)?;
            let summary = run_experiment(&exp, Some(&out))?;
            print_run(&exp, &summary, &out);
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze { config } => {
            let exp = Experiment::build(ExperimentConfig::from_path(&config)?)?;
            let report = analyze(&exp);
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(ExitCode::SUCCESS)
        }
        Command::LemmaOracle {
            iterations,
            forcing,
            trials,
            seed,
        } => lemma_oracle(iterations, forcing, trials, seed),
        Command::Plot { results, out } => {
            let out = out.unwrap_or_else(|| results.clone());
            for file in plot::plot_results(&results, &out)? {
                println!("{}", file.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn validate(path: &Path) -> gossip_est::Result<ExitCode> {
    let exp = Experiment::build(ExperimentConfig::from_path(path)?)?;
    if exp.violations().is_empty() {
        println!("all assumptions satisfied");
        return Ok(ExitCode::SUCCESS);
    }
    println!("{} violation(s):", exp.violations().len());
    for v in exp.violations() {
        println!("  - {v}");
    }
    Ok(ExitCode::from(1))
}

fn print_run(exp: &Experiment, summary: &ExperimentSummary, out: &Path) {
    let first = &summary.aggregate[0];
    let last = summary.aggregate.last().expect("aggregate has the initial row");
    println!(
        "{} trials x {} iterations -> {}",
        summary.trials,
        summary.iterations,
        out.display()
    );
    println!("config hash {}", exp.config_hash());
    println!("median error {:.4e} -> {:.4e}", first.median_error, last.median_error);
    if let Some(c) = last.median_central_error {
        println!("median centralized error {c:.4e}");
    }
    for (name, fit) in [
        ("error", &summary.error_fit),
        ("disagreement", &summary.disagreement_fit),
        ("gap", &summary.gap_fit),
    ] {
        if let Some(f) = fit {
            println!("{name} slope {:.4} (R² {:.3})", f.exponent, f.r_squared);
        }
    }
    if !summary.diverged.is_empty() {
        println!("{} trial(s) stopped by the divergence guard", summary.diverged.len());
    }
    for note in &summary.notes {
        println!("note: {note}");
    }
}

fn or_error<T: serde::Serialize>(r: gossip_est::Result<T>) -> Value {
    match r {
        Ok(v) => serde_json::to_value(v).expect("analysis result serializes"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn analyze(exp: &Experiment) -> Value {
    let gain = &exp.glu.gain;
    let matrix = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    };
    json!({
        "config_hash": exp.config_hash(),
        "violations": exp.violations().iter().map(ToString::to_string).collect::<Vec<_>>(),
        "optimal_gain": or_error(optimal_gain(&exp.model).map(|k| matrix(&k))),
        "critical_innovation_scale": or_error(critical_gain_scale(&exp.model, gain)),
        "innovation_scale": exp.glu.a,
        "asymptotic_covariance": or_error(asymptotic_covariance(&exp.model, exp.glu.a, gain)),
        "quadratic_form_bound": or_error(quadratic_form_bound(
            exp.topology.mean_laplacian(),
            &exp.model,
            gain,
            &default_ratio_sweep(),
        )),
    })
}

fn lemma_oracle(iterations: u64, forcing: f64, trials: u64, seed: u64) -> gossip_est::Result<ExitCode> {
    println!("delta1,delta2,a1,delta0,scaled_deterministic,scaled_random_max");
    for (k, (d1, d2, a1)) in [(0.5, 1.0, 1.0), (0.6, 1.2, 1.0), (1.0, 1.5, 1.0)].into_iter().enumerate() {
        let d0 = 0.8 * (d2 - d1);
        let r2 = DecaySchedule::new(forcing, d2);
        let scaled = |ys: &[f64]| ((iterations + 1) as f64).powf(d0) * ys[iterations as usize];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let det = scaled(&scalar_recursion(1.0, &ContractionSchedule::deterministic(a1, d1), &r2, iterations, &mut rng)?);
        let mut worst = f64::NAN;
        for t in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1 + t + 1000 * k as u64));
            let ys = scalar_recursion(1.0, &ContractionSchedule::random(a1, d1, 1.0), &r2, iterations, &mut rng)?;
            worst = worst.max(scaled(&ys));
        }
        println!("{d1},{d2},{a1},{d0},{det:e},{worst:e}");
    }
    Ok(ExitCode::SUCCESS)
}
