//! Command-line plumbing for positive-system analysis and design.
//!
//! The binary exposes five subcommands: `validate` (file checks), `eval`
//! (norm, gradient, and bundle at a dose vector), `leader-select`
//! (consensus leader placement with a certified-gap table),
//! `drug-design` (budgeted or sparsity-promoting dosing), and `project`
//! (feasible-set projections). Reports are deterministic: floats carry 17
//! significant digits, keys keep a fixed order, and repeated runs emit
//! identical bytes regardless of the worker thread count.
//!
//! Exit codes: 0 on success, 1 for domain violations and infeasible
//! problems, 2 for usage and parse errors.

pub mod commands;
pub mod config;
pub mod emit;
pub mod formats;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use poslin::leadersel::Strategy;
use poslin::metrics::Metric;

use commands::{
    build_gamma_grid, cmd_drug_design, cmd_eval, cmd_leader_select, cmd_project, cmd_validate,
    CommandOutput, DrugArgs, DrugMode, LeaderArgs, ProjectKind, ValidationReport,
};
use config::{resolve_threads, ConfigMap};

/// Errors surfaced to the user, each mapping to an exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable files, malformed inline values: exit 2.
    Usage(String),
    /// Malformed JSON input: exit 2.
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    /// Valid request with an invalid or infeasible answer: exit 1.
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "error: {msg}"),
            CliError::Parse {
                path,
                line,
                column,
                message,
            } => write!(
                f,
                "parse error in {path} at line {line} column {column}: {message}"
            ),
            CliError::Domain(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Top-level argument set.
#[derive(Debug, Parser)]
#[command(
    name = "posctl",
    version,
    about = "Positive-system analysis and structured design from the command line"
)]
pub struct RunConfig {
    /// Optional key=value file supplying defaults for long options.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<String>,
    /// Worker threads for sweeps; defaults to POSCTL_THREADS, then 1.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Reserved for randomized diagnostics; current commands are
    /// deterministic and ignore it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a system or network JSON file and list violations.
    Validate {
        /// Path to the JSON file.
        path: String,
    },
    /// Evaluate a closed-loop norm at a dose or weight vector.
    Eval {
        /// System JSON file.
        #[arg(long)]
        sys: String,
        /// Comma-separated vector, e.g. "2.5,2.5".
        #[arg(long)]
        u: String,
        /// Which norm to evaluate.
        #[arg(long, value_enum)]
        metric: MetricArg,
    },
    /// Choose leader nodes on a directed consensus network.
    LeaderSelect {
        /// Network JSON file.
        #[arg(long)]
        net: String,
        /// How many leaders to place.
        #[arg(long = "n-leaders")]
        n_leaders: Option<usize>,
        /// Feedback weight each leader receives.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
        /// Upper-bound strategy (default: best-of).
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
        /// Also sweep every leader count and write the percent-gap CSV
        /// here.
        #[arg(long, value_name = "PATH")]
        table: Option<String>,
    },
    /// Design drug doses under a budget or a sparsity target.
    DrugDesign {
        /// System JSON file.
        #[arg(long)]
        sys: String,
        /// Design mode; inferred from --budget / --target-drugs when
        /// omitted.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Total-dose budget (budget mode).
        #[arg(long)]
        budget: Option<f64>,
        /// Largest number of drugs allowed (sparse mode).
        #[arg(long = "target-drugs")]
        target_drugs: Option<usize>,
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
        /// Reweighting offset for sparse mode (default 1e-4).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Smallest sparsity weight of the sweep (default 0.01).
        #[arg(long = "gamma-min")]
        gamma_min: Option<f64>,
        /// Largest sparsity weight of the sweep (default 10).
        #[arg(long = "gamma-max")]
        gamma_max: Option<f64>,
        /// Number of sweep points (default 50).
        #[arg(long = "gamma-steps")]
        gamma_steps: Option<usize>,
        /// Write the (drugs, percent degradation) CSV here (sparse mode).
        #[arg(long, value_name = "PATH")]
        table: Option<String>,
    },
    /// Project a vector onto a dose or leader-weight feasible set.
    Project {
        /// Comma-separated vector to project.
        #[arg(long)]
        u: String,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Coordinate sum (simplex).
        #[arg(long)]
        total: Option<f64>,
        /// Number of saturated coordinates (capped sets).
        #[arg(long)]
        count: Option<usize>,
        /// Per-coordinate cap (capped sets).
        #[arg(long)]
        cap: Option<f64>,
        /// Semicolon-separated floor groups, e.g. "0,1;2,3".
        #[arg(long)]
        subsets: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    H2,
    Hinf,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::H2 => Metric::H2,
            MetricArg::Hinf => Metric::Hinf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Round,
    Swap,
    Undirected,
    BestOf,
    Exhaustive,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Round => Strategy::Round,
            StrategyArg::Swap => Strategy::RoundSwap,
            StrategyArg::Undirected => Strategy::Undirected,
            StrategyArg::BestOf => Strategy::BestOf,
            StrategyArg::Exhaustive => Strategy::Exhaustive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Budget,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Simplex,
    CappedSimplex,
    SubsetFloors,
}

/// Parses the process arguments, runs the selected command, and returns
/// the exit code.
pub fn run() -> i32 {
    let cfg = match RunConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match execute(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn parse_metric(raw: &str) -> Result<Metric, CliError> {
    match raw {
        "h2" => Ok(Metric::H2),
        "hinf" => Ok(Metric::Hinf),
        _ => Err(CliError::Usage(format!(
            "metric must be h2 or hinf, got {raw:?}"
        ))),
    }
}

fn parse_strategy(raw: &str) -> Result<Strategy, CliError> {
    match raw {
        "round" => Ok(Strategy::Round),
        "swap" => Ok(Strategy::RoundSwap),
        "undirected" => Ok(Strategy::Undirected),
        "best-of" => Ok(Strategy::BestOf),
        "exhaustive" => Ok(Strategy::Exhaustive),
        _ => Err(CliError::Usage(format!(
            "strategy must be round, swap, undirected, best-of, or exhaustive, got {raw:?}"
        ))),
    }
}

/// Runs a parsed configuration; separated from [`run`] for tests.
pub fn execute(cfg: &RunConfig) -> Result<i32, CliError> {
    let config = match &cfg.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::default(),
    };
    let threads = resolve_threads(cfg.threads, &config)?;

    match &cfg.command {
        Command::Validate { path } => match cmd_validate(path)? {
            ValidationReport::Valid(summary) => {
                write_stdout(cfg, &format!("{summary}\n"))?;
                Ok(0)
            }
            ValidationReport::Invalid(lines) => {
                for line in lines {
                    eprintln!("violation: {line}");
                }
                Ok(1)
            }
        },
        Command::Eval { sys, u, metric } => {
            let out = cmd_eval(sys, u, (*metric).into())?;
            finish(cfg, None, out)
        }
        Command::LeaderSelect {
            net,
            n_leaders,
            kappa,
            metric,
            strategy,
            table,
        } => {
            let n_leaders = match n_leaders {
                Some(n) => *n,
                None => config
                    .get::<usize>("n-leaders")?
                    .ok_or_else(|| CliError::Usage(String::from("--n-leaders is required")))?,
            };
            let kappa = match kappa {
                Some(k) => *k,
                None => config
                    .get::<f64>("kappa")?
                    .ok_or_else(|| CliError::Usage(String::from("--kappa is required")))?,
            };
            let metric = match metric {
                Some(m) => (*m).into(),
                None => match config.get::<String>("metric")? {
                    Some(raw) => parse_metric(&raw)?,
                    None => return Err(CliError::Usage(String::from("--metric is required"))),
                },
            };
            let strategy = match strategy {
                Some(s) => (*s).into(),
                None => match config.get::<String>("strategy")? {
                    Some(raw) => parse_strategy(&raw)?,
                    None => Strategy::BestOf,
                },
            };
            let args = LeaderArgs {
                net_path: net.clone(),
                n_leaders,
                kappa,
                metric,
                strategy,
                want_table: table.is_some(),
                threads,
            };
            let out = cmd_leader_select(&args)?;
            finish(cfg, table.as_deref(), out)
        }
        Command::DrugDesign {
            sys,
            mode,
            budget,
            target_drugs,
            metric,
            epsilon,
            gamma_min,
            gamma_max,
            gamma_steps,
            table,
        } => {
            let metric = match metric {
                Some(m) => (*m).into(),
                None => match config.get::<String>("metric")? {
                    Some(raw) => parse_metric(&raw)?,
                    None => return Err(CliError::Usage(String::from("--metric is required"))),
                },
            };
            let budget = match budget {
                Some(b) => Some(*b),
                None => config.get::<f64>("budget")?,
            };
            let target = match target_drugs {
                Some(t) => Some(*t),
                None => config.get::<usize>("target-drugs")?,
            };
            let drug_mode = resolve_drug_mode(
                *mode,
                budget,
                target,
                epsilon.or(config.get::<f64>("epsilon")?),
                gamma_min.or(config.get::<f64>("gamma-min")?),
                gamma_max.or(config.get::<f64>("gamma-max")?),
                gamma_steps.or(config.get::<usize>("gamma-steps")?),
            )?;
            if table.is_some() && matches!(drug_mode, DrugMode::Budget { .. }) {
                return Err(CliError::Usage(String::from(
                    "--table applies to sparse mode only",
                )));
            }
            let args = DrugArgs {
                sys_path: sys.clone(),
                metric,
                mode: drug_mode,
                want_table: table.is_some(),
            };
            let out = cmd_drug_design(&args)?;
            finish(cfg, table.as_deref(), out)
        }
        Command::Project {
            u,
            kind,
            total,
            count,
            cap,
            subsets,
        } => {
            let kind = match kind {
                KindArg::Simplex => ProjectKind::Simplex {
                    total: total
                        .ok_or_else(|| CliError::Usage(String::from("--total is required")))?,
                },
                KindArg::CappedSimplex => ProjectKind::CappedSimplex {
                    count: count
                        .ok_or_else(|| CliError::Usage(String::from("--count is required")))?,
                    cap: cap.ok_or_else(|| CliError::Usage(String::from("--cap is required")))?,
                },
                KindArg::SubsetFloors => ProjectKind::SubsetFloors {
                    count: count
                        .ok_or_else(|| CliError::Usage(String::from("--count is required")))?,
                    cap: cap.ok_or_else(|| CliError::Usage(String::from("--cap is required")))?,
                    subsets: subsets
                        .clone()
                        .ok_or_else(|| CliError::Usage(String::from("--subsets is required")))?,
                },
            };
            let out = cmd_project(u, &kind)?;
            finish(cfg, None, out)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn resolve_drug_mode(
    mode: Option<ModeArg>,
    budget: Option<f64>,
    target: Option<usize>,
    epsilon: Option<f64>,
    gamma_min: Option<f64>,
    gamma_max: Option<f64>,
    gamma_steps: Option<usize>,
) -> Result<DrugMode, CliError> {
    match (budget, target) {
        (Some(_), Some(_)) => Err(CliError::Usage(String::from(
            "--budget and --target-drugs conflict; pick one mode",
        ))),
        (Some(b), None) => {
            if mode == Some(ModeArg::Sparse) {
                return Err(CliError::Usage(String::from(
                    "--mode sparse requires --target-drugs, not --budget",
                )));
            }
            Ok(DrugMode::Budget { budget: b })
        }
        (None, Some(t)) => {
            if mode == Some(ModeArg::Budget) {
                return Err(CliError::Usage(String::from(
                    "--mode budget requires --budget, not --target-drugs",
                )));
            }
            Ok(DrugMode::Sparse {
                target: t,
                epsilon: epsilon.unwrap_or(1e-4),
                gamma_grid: build_gamma_grid(gamma_min, gamma_max, gamma_steps)?,
            })
        }
        (None, None) => Err(CliError::Usage(String::from(
            "pick a mode with --budget or --target-drugs",
        ))),
    }
}

fn write_stdout(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {path}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish(cfg: &RunConfig, table_path: Option<&str>, out: CommandOutput) -> Result<i32, CliError> {
    write_stdout(cfg, &out.stdout)?;
    if let (Some(path), Some(csv)) = (table_path, &out.table) {
        std::fs::write(path, csv)
            .map_err(|e| CliError::Usage(format!("cannot write {path}: {e}")))?;
    }
    if let Some(msg) = out.failure {
        eprintln!("error: {msg}");
        return Ok(1);
    }
    Ok(0)
}
