use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use metricopt::objective::subgrad_spd;
use metricopt::spd::{SpdPoint, SymTangent};
use metricopt_cli::{cmd_bound, cmd_check, cmd_dimension, cmd_entropy, CliError, Overrides, RuleName, RunConfig};
use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "metricopt", version, about = "Optimize Riemannian metrics for dimension and entropy bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the restoration entropy bound.
    Entropy {
        #[command(flatten)]
        common: Common,
    },
    /// Scan s for Lyapunov dimension bounds k + s.
    Dimension {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Comma-separated s values in [0, 1).
        #[arg(long = "s", value_delimiter = ',', num_args = 1..)]
        s: Vec<f64>,
    },
    /// Print the a-priori bounds for the configured budget.
    Bound {
        #[command(flatten)]
        common: Common,
    },
    /// Run the property suites.
    Check {
        #[command(flatten)]
        common: Common,
        /// Multiplier on every suite's sample count.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, hide = true)]
        flip_sign: bool,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    degree: Option<usize>,
    /// Grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    no_refine: bool,
    #[arg(long, value_parser = parse_rule)]
    step_rule: Option<RuleName>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    tbar: Option<f64>,
    #[arg(long)]
    alpha_factor: Option<f64>,
    #[arg(long)]
    f_star: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    ball_radius: Option<f64>,
    /// Order interval [A·I, B·I] for p.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    interval: Option<Vec<f64>>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, conflicts_with = "no_project")]
    project: bool,
    #[arg(long)]
    no_project: bool,
    #[arg(long)]
    record_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_rule(s: &str) -> Result<RuleName, String> {
    s.parse()
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let project = match (self.project, self.no_project) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        };
        cfg.apply(&Overrides {
            iters: self.iters,
            degree: self.degree,
            grid: self.grid,
            no_refine: self.no_refine,
            step_rule: self.step_rule,
            t0: self.t0,
            tbar: self.tbar,
            alpha_factor: self.alpha_factor,
            f_star: self.f_star,
            epsilon: self.epsilon,
            ball_radius: self.ball_radius,
            interval: self.interval.as_ref().map(|v| (v[0], v[1])),
            output: self.output.clone(),
            project,
            record_every: self.record_every,
            seed: self.seed,
        });
        Ok(cfg)
    }
}

fn flipped(p: &SpdPoint, a: &DMatrix<f64>, k: usize) -> metricopt::Result<(SymTangent, f64)> {
    subgrad_spd(p, a, k).map(|(g, gap)| (g.scale(-1.0), gap))
}

fn print_json(v: &impl Serialize) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Entropy { common } => {
            let summary = cmd_entropy(&common.load()?)?;
            print_json(&summary)
        }
        Command::Dimension { common, k, s } => {
            let res = cmd_dimension(&common.load()?, k, &s)?;
            print_json(&res)
        }
        Command::Bound { common } => print_json(&cmd_bound(&common.load()?)?),
        Command::Check { common, scale, flip_sign } => {
            let hook = if flip_sign { Some(flipped as metricopt::check::SubgradFn) } else { None };
            let summary = cmd_check(&common.load()?, scale, hook)?;
            print_json(&summary)?;
            if summary.passed {
                Ok(())
            } else {
                Err(CliError::CheckFailed(summary.failed.iter().map(|s| s.to_string()).collect()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
