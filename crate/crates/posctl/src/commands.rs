//! The five subcommands as testable functions.
//!
//! Every function returns the rendered output rather than printing, so
//! the binary shell stays thin and the integration tests can compare
//! bytes. JSON float formatting follows [`crate::emit`]; all reported
//! dose or weight vectors re-evaluate to their reported objective when
//! fed back through `eval`.

use poslin::drugdesign::{
    budget_design, default_gamma_grid, degradation_report, sparsity_homotopy, DrugError,
    HomotopyPath, TherapyProblem,
};
use poslin::leadersel::{select_leaders, LeaderError, LeaderProblem, LeaderResult, Strategy};
use poslin::metrics::{self, Metric};
use poslin::netgraph::DirectedNetwork;
use poslin::possys::PositiveSystem;
use poslin::solvers::ConstraintSet;
use poslin::Vector;

use crate::emit::{fmt_csv_f64, render, Json};
use crate::formats::{load_json, parse_subsets, parse_vector, NetworkFile, SystemFile};
use crate::CliError;

/// What a command wants written where.
#[derive(Debug, Default)]
pub struct CommandOutput {
    /// Rendered report for standard output (or `--output`).
    pub stdout: String,
    /// Rendered CSV for `--table`, when the command produces one.
    pub table: Option<String>,
    /// Set when the run completed but the result is a domain failure
    /// (exit 1), e.g. an unreachable sparsity target.
    pub failure: Option<String>,
}

impl CommandOutput {
    fn json(value: &Json) -> Self {
        CommandOutput {
            stdout: render(value),
            ..CommandOutput::default()
        }
    }
}

/// Result of `validate`: either a one-line summary or violation lines.
#[derive(Debug)]
pub enum ValidationReport {
    Valid(String),
    Invalid(Vec<String>),
}

/// Validates a system or network file, deciding the kind by its fields.
pub fn cmd_validate(path: &str) -> Result<ValidationReport, CliError> {
    let value: serde_json::Value = load_json(path)?;
    let Some(obj) = value.as_object() else {
        return Ok(ValidationReport::Invalid(vec![format!(
            "{path}: top level must be a JSON object"
        )]));
    };
    if obj.contains_key("edges") {
        let file: NetworkFile = match serde_json::from_value(value.clone()) {
            Ok(f) => f,
            Err(e) => return Ok(ValidationReport::Invalid(vec![format!("{path}: {e}")])),
        };
        return Ok(match file.to_network() {
            Ok(net) => ValidationReport::Valid(format!(
                "ok: network with {} nodes and {} edges",
                net.num_nodes(),
                file.edges.len()
            )),
            Err(e) => ValidationReport::Invalid(vec![e.to_string()]),
        });
    }
    if obj.contains_key("a") {
        let file: SystemFile = match serde_json::from_value(value.clone()) {
            Ok(f) => f,
            Err(e) => return Ok(ValidationReport::Invalid(vec![format!("{path}: {e}")])),
        };
        let sys = match file.to_system() {
            Ok(sys) => sys,
            Err(CliError::Domain(msg)) => return Ok(ValidationReport::Invalid(vec![msg])),
            Err(e) => return Err(e),
        };
        let violations = sys.validate();
        return Ok(if violations.is_empty() {
            ValidationReport::Valid(format!(
                "ok: system with {} states and {} drugs",
                sys.state_dim(),
                sys.input_dim()
            ))
        } else {
            ValidationReport::Invalid(violations.iter().map(|v| v.to_string()).collect())
        });
    }
    Ok(ValidationReport::Invalid(vec![format!(
        "{path}: expected a system (field \"a\") or a network (field \"edges\")"
    )]))
}

/// Evaluates a metric at a dose vector: value, stability flag, and the
/// gradient (H2) or active-block bundle (H-infinity).
pub fn cmd_eval(sys_path: &str, u_text: &str, metric: Metric) -> Result<CommandOutput, CliError> {
    let sys = load_system(sys_path)?;
    let u = parse_vector(u_text)?;
    let j = metric
        .value(&sys, &u)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let hurwitz = j.is_finite();

    let mut fields = vec![
        ("metric", Json::Str(metric.name().to_string())),
        ("u", Json::vector(&u)),
        ("j", Json::Num(j)),
        ("hurwitz", Json::Bool(hurwitz)),
    ];
    if hurwitz {
        match metric {
            Metric::H2 => {
                let g = metrics::grad_j2(&sys, &u).map_err(|e| CliError::Domain(e.to_string()))?;
                fields.push(("gradient", Json::vector(&g)));
            }
            Metric::Hinf => {
                let bundle =
                    metrics::jinf_blocks(&sys, &u).map_err(|e| CliError::Domain(e.to_string()))?;
                fields.push(("blocks", Json::Int(bundle.blocks.len() as i64)));
                fields.push((
                    "bundle",
                    Json::Arr(
                        bundle
                            .blocks
                            .iter()
                            .map(|b| {
                                Json::Obj(vec![
                                    ("index", Json::Int(b.index as i64)),
                                    ("value", Json::Num(b.value)),
                                    ("gradient", Json::vector(&b.gradient)),
                                ])
                            })
                            .collect(),
                    ),
                ));
            }
        }
    }
    Ok(CommandOutput::json(&Json::Obj(fields)))
}

/// Arguments for `leader-select` after config resolution.
#[derive(Debug, Clone)]
pub struct LeaderArgs {
    pub net_path: String,
    pub n_leaders: usize,
    pub kappa: f64,
    pub metric: Metric,
    pub strategy: Strategy,
    pub want_table: bool,
    pub threads: usize,
}

/// Selects leaders for the requested count and, when asked, sweeps every
/// count for the gap-versus-N table.
pub fn cmd_leader_select(args: &LeaderArgs) -> Result<CommandOutput, CliError> {
    let net = load_network(&args.net_path)?;
    let problem = LeaderProblem::new(net.clone(), args.n_leaders, args.kappa, args.metric)
        .map_err(leader_err)?;
    let result = select_leaders(&problem, args.strategy).map_err(leader_err)?;

    let mut fields = vec![
        ("n_leaders", Json::Int(args.n_leaders as i64)),
        ("kappa", Json::Num(args.kappa)),
        ("metric", Json::Str(args.metric.name().to_string())),
        ("strategy", Json::Str(args.strategy.name().to_string())),
        ("leaders", Json::indices(&result.leaders)),
        ("u", Json::vector(&result.u)),
        ("j", Json::Num(result.j)),
        ("lower_bound", Json::Num(result.lower_bound)),
        ("gap", Json::Num(result.gap)),
        ("percent_gap", Json::Num(100.0 * result.gap)),
        ("method", Json::Str(result.method.to_string())),
    ];
    if let Some(note) = &result.note {
        fields.push(("note", Json::Str(note.clone())));
    }

    let table = if args.want_table {
        Some(gap_table(&net, args)?)
    } else {
        None
    };
    Ok(CommandOutput {
        stdout: render(&Json::Obj(fields)),
        table,
        failure: None,
    })
}

/// Percent-gap rows for every leader count, computed with a fixed-size
/// worker pool and emitted in count order regardless of thread count.
fn gap_table(net: &DirectedNetwork, args: &LeaderArgs) -> Result<String, CliError> {
    let n = net.num_nodes();
    let counts: Vec<usize> = (1..=n).collect();
    let mut rows: Vec<Option<Result<Option<LeaderResult>, CliError>>> = Vec::new();
    rows.resize_with(n, || None);

    let workers = args.threads.min(n).max(1);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..workers {
            let counts = &counts;
            let handle = scope.spawn(move || {
                let mut local = Vec::new();
                let mut k = w;
                while k < counts.len() {
                    local.push((k, sweep_row(net, args, counts[k])));
                    k += workers;
                }
                local
            });
            handles.push(handle);
        }
        for handle in handles {
            for (k, row) in handle.join().expect("sweep worker panicked") {
                rows[k] = Some(row);
            }
        }
    });

    let mut csv = String::from("n_leaders,j,lower_bound,percent_gap\n");
    for (k, slot) in rows.into_iter().enumerate() {
        match slot.expect("every count was scheduled") {
            Ok(Some(res)) => {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    counts[k],
                    fmt_csv_f64(res.j),
                    fmt_csv_f64(res.lower_bound),
                    fmt_csv_f64(100.0 * res.gap),
                ));
            }
            Ok(None) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(csv)
}

fn sweep_row(
    net: &DirectedNetwork,
    args: &LeaderArgs,
    count: usize,
) -> Result<Option<LeaderResult>, CliError> {
    let problem =
        LeaderProblem::new(net.clone(), count, args.kappa, args.metric).map_err(leader_err)?;
    match select_leaders(&problem, args.strategy) {
        Ok(res) => Ok(Some(res)),
        Err(LeaderError::Infeasible { .. }) => Ok(None),
        Err(e) => Err(leader_err(e)),
    }
}

/// Arguments for `drug-design` after config resolution.
#[derive(Debug, Clone)]
pub struct DrugArgs {
    pub sys_path: String,
    pub metric: Metric,
    pub mode: DrugMode,
    pub want_table: bool,
}

/// Which design mode the flags selected.
#[derive(Debug, Clone)]
pub enum DrugMode {
    Budget { budget: f64 },
    Sparse {
        target: usize,
        epsilon: f64,
        gamma_grid: Vec<f64>,
    },
}

/// Runs the budgeted or sparsity-promoting design and renders the report.
pub fn cmd_drug_design(args: &DrugArgs) -> Result<CommandOutput, CliError> {
    let sys = load_system(&args.sys_path)?;
    let problem = TherapyProblem::new(sys.clone(), args.metric);
    match &args.mode {
        DrugMode::Budget { budget } => {
            let report = budget_design(&problem, *budget).map_err(drug_err)?;
            let j = args
                .metric
                .value(&sys, &report.u)
                .map_err(|e| CliError::Domain(e.to_string()))?;
            let fields = vec![
                ("mode", Json::Str(String::from("budget"))),
                ("metric", Json::Str(args.metric.name().to_string())),
                ("budget", Json::Num(*budget)),
                ("u", Json::vector(&report.u)),
                ("j", Json::Num(j)),
                ("residual", Json::Num(report.stationarity_residual)),
                ("iterations", Json::Int(report.iterations as i64)),
                (
                    "termination",
                    Json::Str(report.termination.name().to_string()),
                ),
            ];
            Ok(CommandOutput::json(&Json::Obj(fields)))
        }
        DrugMode::Sparse {
            target,
            epsilon,
            gamma_grid,
        } => {
            let (path, reached, failure) =
                match sparsity_homotopy(&problem, *target, gamma_grid, *epsilon) {
                    Ok(path) => (path, true, None),
                    Err(DrugError::TargetUnreachable(path)) => {
                        let end = path.steps.last().map(|s| s.cardinality).unwrap_or(0);
                        (
                            path,
                            false,
                            Some(format!(
                                "target of {target} drugs unreachable; the sweep ended at \
                                 cardinality {end}"
                            )),
                        )
                    }
                    Err(e) => return Err(drug_err(e)),
                };
            let stdout = render(&sparse_json(args, *target, *epsilon, &path, reached));
            let table = if args.want_table {
                let mut csv = String::from("n_drugs,percent_degradation\n");
                for (n, pct) in degradation_report(&path) {
                    csv.push_str(&format!("{n},{}\n", fmt_csv_f64(pct)));
                }
                Some(csv)
            } else {
                None
            };
            Ok(CommandOutput {
                stdout,
                table,
                failure,
            })
        }
    }
}

fn sparse_json(
    args: &DrugArgs,
    target: usize,
    epsilon: f64,
    path: &HomotopyPath,
    reached: bool,
) -> Json {
    Json::Obj(vec![
        ("mode", Json::Str(String::from("sparse"))),
        ("metric", Json::Str(args.metric.name().to_string())),
        ("target_drugs", Json::Int(target as i64)),
        ("epsilon", Json::Num(epsilon)),
        ("reached", Json::Bool(reached)),
        (
            "steps",
            Json::Arr(
                path.steps
                    .iter()
                    .map(|s| {
                        Json::Obj(vec![
                            ("gamma", Json::Num(s.gamma)),
                            ("u", Json::vector(&s.u)),
                            ("cardinality", Json::Int(s.cardinality as i64)),
                            ("j", Json::Num(s.j)),
                        ])
                    })
                    .collect(),
            ),
        ),
        (
            "polished",
            Json::Arr(
                path.polished
                    .iter()
                    .map(|d| {
                        Json::Obj(vec![
                            ("cardinality", Json::Int(d.cardinality as i64)),
                            ("support", Json::indices(&d.support)),
                            ("u", Json::vector(&d.u)),
                            ("objective", Json::Num(d.objective)),
                        ])
                    })
                    .collect(),
            ),
        ),
    ])
}

/// Projection target for the `project` command.
#[derive(Debug, Clone)]
pub enum ProjectKind {
    Simplex { total: f64 },
    CappedSimplex { count: usize, cap: f64 },
    SubsetFloors {
        count: usize,
        cap: f64,
        subsets: String,
    },
}

/// Projects a vector onto the requested feasible set.
pub fn cmd_project(u_text: &str, kind: &ProjectKind) -> Result<CommandOutput, CliError> {
    let y = parse_vector(u_text)?;
    let set = match kind {
        ProjectKind::Simplex { total } => ConstraintSet::Simplex { total: *total },
        ProjectKind::CappedSimplex { count, cap } => ConstraintSet::CappedSimplex {
            count: *count,
            cap: *cap,
        },
        ProjectKind::SubsetFloors {
            count,
            cap,
            subsets,
        } => ConstraintSet::CappedSimplexWithFloors {
            count: *count,
            cap: *cap,
            subsets: parse_subsets(subsets)?,
        },
    };
    let projected = set
        .project(&y)
        .map_err(|e| CliError::Domain(e.to_string()))?;
    Ok(CommandOutput::json(&Json::Obj(vec![
        ("u", Json::vector(&projected)),
        ("violation", Json::Num(set.violation(&projected))),
    ])))
}

fn load_system(path: &str) -> Result<PositiveSystem, CliError> {
    let file: SystemFile = load_json(path)?;
    file.to_system()
}

fn load_network(path: &str) -> Result<DirectedNetwork, CliError> {
    let file: NetworkFile = load_json(path)?;
    file.to_network()
}

fn leader_err(e: LeaderError) -> CliError {
    match e {
        LeaderError::BadParameters(msg) => CliError::Usage(msg),
        other => CliError::Domain(other.to_string()),
    }
}

fn drug_err(e: DrugError) -> CliError {
    match e {
        DrugError::BadParameters(msg) => CliError::Usage(msg),
        other => CliError::Domain(other.to_string()),
    }
}

/// Builds the sparse-mode gamma grid from optional bounds, defaulting to
/// the library's fifty-point grid.
pub fn build_gamma_grid(
    min: Option<f64>,
    max: Option<f64>,
    steps: Option<usize>,
) -> Result<Vec<f64>, CliError> {
    if min.is_none() && max.is_none() && steps.is_none() {
        return Ok(default_gamma_grid());
    }
    let lo = min.unwrap_or(0.01);
    let hi = max.unwrap_or(10.0);
    let count = steps.unwrap_or(50);
    if !(lo > 0.0) || !(hi > lo) || count < 2 {
        return Err(CliError::Usage(format!(
            "gamma grid needs 0 < min < max and at least two steps, got min={lo} max={hi} \
             steps={count}"
        )));
    }
    Ok((0..count)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == count - 1 {
                hi
            } else {
                (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}
