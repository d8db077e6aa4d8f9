//! Command-line front end: JSON graph files in, JSON reports out.
//!
//! Exit codes: 0 success, 1 input error, 2 run did not converge (including
//! numerical overflow), 3 analysis input is not a fixed point, 4 state space
//! too large for the oracle.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{self, AnalysisOptions, FreeEnergyReport, StabilityReport};
use crate::bp::{self, ConvergenceFlags, Criterion, Init, MessageState, RunOptions, RunReport, Schedule, Strategy};
use crate::error::BpError;
use crate::factor_graph::{FactorGraph, GraphSpec};
use crate::model::{self, BeliefSet, Model, DEFAULT_STATE_CAP};

pub const TOOL: &str = "bpnorm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable overriding the oracle's state-space cap.
pub const STATE_CAP_ENV: &str = "BP_STATE_CAP";
/// Entries kept at each end of a residual history.
pub const HISTORY_KEEP: usize = 100;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Bp(#[from] BpError),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid JSON in `{path}`: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Bp(e) => e.code(),
            CliError::Io { .. } => "Io",
            CliError::Json { .. } => "InvalidJson",
            CliError::Usage(_) => "Usage",
            CliError::Input(_) => "InvalidInput",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Bp(BpError::NumericalOverflow { .. }) => 2,
            CliError::Bp(BpError::NotAFixedPoint { .. } | BpError::IncompatibleBeliefs(_)) => 3,
            CliError::Bp(BpError::StateSpaceTooLarge { .. }) => 4,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "bpnorm", version, about = "Belief propagation with interchangeable message normalization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run message passing and report convergence, messages and beliefs.
    Run(RunArgs),
    /// Stability and free-energy analysis at a fixed point.
    Analyze(AnalyzeArgs),
    /// Exact marginals and partition function by enumeration.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    None,
    Mess,
    Max,
    First,
    Bel,
    Variational,
    #[value(name = "badmaxratio")]
    BadMaxRatio,
}

impl From<NormArg> for Strategy {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::None => Strategy::None,
            NormArg::Mess => Strategy::Mess,
            NormArg::Max => Strategy::Max,
            NormArg::First => Strategy::First,
            NormArg::Bel => Strategy::Bel,
            NormArg::Variational => Strategy::Variational,
            NormArg::BadMaxRatio => Strategy::BadMaxRatio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Uniform,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrackArg {
    Messages,
    Beliefs,
    Quotient,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "mess")]
    pub norm: NormArg,
    #[arg(long, value_enum, default_value = "parallel")]
    pub schedule: ScheduleArg,
    #[arg(long, value_enum, default_value = "uniform")]
    pub init: InitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value = "messages")]
    pub track: TrackArg,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Report from a previous `run`; its final messages are analysed.
    #[arg(long = "from-run", conflicts_with = "prescribed", required_unless_present = "prescribed")]
    pub from_run: Option<PathBuf>,
    /// Target beliefs file, or `uniform`.
    #[arg(long)]
    pub prescribed: Option<String>,
    /// Fixed-point tolerance on `max |b_{i|a} / b_i - 1|`.
    #[arg(long = "fixed-point-tol", default_value_t = 1e-7)]
    pub fixed_point_tol: f64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub graph: PathBuf,
}

/// Graph file: structure plus potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub q: usize,
    pub variables: Vec<String>,
    pub factors: Vec<FactorEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<BTreeMap<String, Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorEntry {
    pub name: String,
    pub vars: Vec<String>,
    /// Row-major, first listed variable most significant.
    pub table: Vec<f64>,
}

impl GraphFile {
    pub fn to_model(&self) -> Result<Model, BpError> {
        let spec = GraphSpec {
            q: self.q,
            variables: self.variables.clone(),
            factors: self.factors.iter().map(|f| (f.name.clone(), f.vars.clone())).collect(),
        };
        let graph = FactorGraph::build(&spec)?;
        let mut phi = vec![vec![1.0; self.q]; self.variables.len()];
        for (name, table) in self.phi.iter().flatten() {
            let i = graph
                .variable_index(name)
                .ok_or_else(|| BpError::InvalidParameter(format!("phi given for unknown variable `{name}`")))?;
            phi[i] = table.clone();
        }
        let psi = self.factors.iter().map(|f| f.table.clone()).collect();
        Model::new(graph, phi, psi)
    }

    pub fn from_model(model: &Model) -> Self {
        let g = model.graph();
        GraphFile {
            q: g.q(),
            variables: g.variable_names().to_vec(),
            factors: g
                .factors()
                .iter()
                .enumerate()
                .map(|(a, f)| FactorEntry {
                    name: f.name.clone(),
                    vars: f.members.iter().map(|&i| g.variable_names()[i].clone()).collect(),
                    table: model.psi(a).to_vec(),
                })
                .collect(),
            phi: Some(
                g.variable_names()
                    .iter()
                    .enumerate()
                    .map(|(i, n)| (n.clone(), model.phi(i).to_vec()))
                    .collect(),
            ),
        }
    }
}

/// Target beliefs keyed by variable and factor name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefFile {
    pub variables: BTreeMap<String, Vec<f64>>,
    pub factors: BTreeMap<String, Vec<f64>>,
}

impl BeliefFile {
    pub fn from_beliefs(g: &FactorGraph, b: &BeliefSet) -> Self {
        BeliefFile {
            variables: g
                .variable_names()
                .iter()
                .cloned()
                .zip(b.variables.iter().cloned())
                .collect(),
            factors: g
                .factors()
                .iter()
                .map(|f| f.name.clone())
                .zip(b.factors.iter().cloned())
                .collect(),
        }
    }

    pub fn to_beliefs(&self, g: &FactorGraph) -> CliResult<BeliefSet> {
        let lookup = |map: &BTreeMap<String, Vec<f64>>, name: &str, kind: &str| {
            map.get(name)
                .cloned()
                .ok_or_else(|| CliError::Input(format!("missing belief for {kind} `{name}`")))
        };
        if self.variables.len() != g.num_variables() || self.factors.len() != g.num_factors() {
            return Err(CliError::Input("belief file names do not match the graph".into()));
        }
        Ok(BeliefSet {
            variables: g
                .variable_names()
                .iter()
                .map(|n| lookup(&self.variables, n, "variable"))
                .collect::<CliResult<_>>()?,
            factors: g
                .factors()
                .iter()
                .map(|f| lookup(&self.factors, &f.name, "factor"))
                .collect::<CliResult<_>>()?,
            log_z_variables: vec![0.0; g.num_variables()],
            log_z_factors: vec![0.0; g.num_factors()],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageEntry {
    pub factor: String,
    pub variable: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub len: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub last: Option<f64>,
    pub truncated: bool,
    pub head: Vec<f64>,
    pub tail: Vec<f64>,
}

impl History {
    pub fn from_values(v: &[f64]) -> Self {
        let truncated = v.len() > 2 * HISTORY_KEEP;
        let (head, tail) = if truncated {
            (v[..HISTORY_KEEP].to_vec(), v[v.len() - HISTORY_KEEP..].to_vec())
        } else {
            (v.to_vec(), Vec::new())
        };
        History {
            len: v.len(),
            min: v.iter().copied().reduce(f64::min),
            max: v.iter().copied().reduce(f64::max),
            last: v.last().copied(),
            truncated,
            head,
            tail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histories {
    pub messages: History,
    pub beliefs: History,
    pub quotient: History,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefsJson {
    pub variables: BTreeMap<String, Vec<f64>>,
    pub factors: BTreeMap<String, Vec<f64>>,
    pub log_z_variables: BTreeMap<String, f64>,
    pub log_z_factors: BTreeMap<String, f64>,
}

impl BeliefsJson {
    pub fn new(g: &FactorGraph, b: &BeliefSet) -> Self {
        let file = BeliefFile::from_beliefs(g, b);
        BeliefsJson {
            variables: file.variables,
            factors: file.factors,
            log_z_variables: g.variable_names().iter().cloned().zip(b.log_z_variables.iter().copied()).collect(),
            log_z_factors: g
                .factors()
                .iter()
                .map(|f| f.name.clone())
                .zip(b.log_z_factors.iter().copied())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunJson {
    pub strategy: Strategy,
    pub schedule: Schedule,
    pub criterion: Criterion,
    pub init: String,
    pub seed: Option<u64>,
    pub tol: f64,
    pub max_iter: usize,
    pub converged: ConvergenceFlags,
    pub tracked_converged: bool,
    pub iterations: usize,
    pub history: Histories,
    pub final_messages: Vec<MessageEntry>,
    pub final_beliefs: BeliefsJson,
}

impl RunJson {
    pub fn new(g: &FactorGraph, opts: &RunOptions, report: &RunReport) -> Self {
        let (init, seed) = match opts.init {
            Init::Uniform => ("uniform".to_string(), None),
            Init::Random { seed } => ("random".to_string(), Some(seed)),
        };
        RunJson {
            strategy: report.strategy,
            schedule: report.schedule,
            criterion: report.criterion,
            init,
            seed,
            tol: report.tol,
            max_iter: opts.max_iter,
            converged: report.converged,
            tracked_converged: report.tracked_converged(),
            iterations: report.iterations,
            history: Histories {
                messages: History::from_values(&report.history.messages),
                beliefs: History::from_values(&report.history.beliefs),
                quotient: History::from_values(&report.history.quotient),
            },
            final_messages: message_entries(g, &report.final_messages),
            final_beliefs: BeliefsJson::new(g, &report.final_beliefs),
        }
    }
}

pub fn message_entries(g: &FactorGraph, m: &MessageState) -> Vec<MessageEntry> {
    g.edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| MessageEntry {
            factor: g.factor(edge.factor).name.clone(),
            variable: g.variable_names()[edge.variable].clone(),
            values: m.message(e).to_vec(),
        })
        .collect()
}

pub fn messages_from_entries(g: &FactorGraph, entries: &[MessageEntry]) -> CliResult<MessageState> {
    let q = g.q();
    let mut values = vec![f64::NAN; g.num_edges() * q];
    let mut seen = vec![false; g.num_edges()];
    for entry in entries {
        let e = g
            .factor_index(&entry.factor)
            .zip(g.variable_index(&entry.variable))
            .and_then(|(a, i)| g.edge_index(a, i))
            .ok_or_else(|| {
                CliError::Input(format!(
                    "message for unknown edge ({}, {})",
                    entry.factor, entry.variable
                ))
            })?;
        if std::mem::replace(&mut seen[e], true) {
            return Err(CliError::Input(format!(
                "duplicate message for edge ({}, {})",
                entry.factor, entry.variable
            )));
        }
        if entry.values.len() != q {
            return Err(BpError::SizeMismatch {
                expected: q,
                found: entry.values.len(),
            }
            .into());
        }
        values[e * q..(e + 1) * q].copy_from_slice(&entry.values);
    }
    if let Some(e) = seen.iter().position(|s| !s) {
        return Err(CliError::Input(format!("no message given for edge {e}")));
    }
    Ok(MessageState::from_values(g, values)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub error: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iteration: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointJson {
    pub source: String,
    pub compatibility_residual: f64,
    /// Plain-scheme residual of the analysed messages.
    pub plain_residual: f64,
    /// Strategy of the originating run, when analysing a run report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    /// Fixed-point residual under that strategy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleJson {
    pub states: f64,
    #[serde(rename = "Z_joint")]
    pub z_joint: f64,
    #[serde(rename = "log_Z_joint")]
    pub log_z_joint: f64,
    /// `-log Z_joint`, the value the Bethe free energy attains on trees.
    #[serde(rename = "neg_log_Z_joint")]
    pub neg_log_z_joint: f64,
    pub marginals: BeliefFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of each input file, keyed by role.
    pub inputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<Diagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<FixedPointJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_energy: Option<FreeEnergyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleJson>,
}

impl ReportFile {
    fn new(command: &str) -> Self {
        ReportFile {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            inputs: BTreeMap::new(),
            run: None,
            diagnostic: None,
            fixed_point: None,
            stability: None,
            free_energy: None,
            oracle: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct ErrorJson<'a> {
    error: &'a str,
    detail: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, bytes: &[u8]) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads and validates a graph file, returning the model and its digest.
pub fn load_model(path: &Path) -> CliResult<(Model, String)> {
    let bytes = read_file(path)?;
    let file: GraphFile = parse_json(path, &bytes)?;
    Ok((file.to_model()?, sha256_hex(&bytes)))
}

/// Outcome of a command: report to print and exit code.
pub struct Outcome {
    pub report: ReportFile,
    pub exit_code: i32,
}

pub fn cmd_run(args: &RunArgs) -> CliResult<Outcome> {
    let (model, digest) = load_model(&args.graph)?;
    if args.tol.is_nan() || args.tol <= 0.0 {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let opts = RunOptions {
        strategy: args.norm.into(),
        schedule: match args.schedule {
            ScheduleArg::Parallel => Schedule::Parallel,
            ScheduleArg::Sequential => Schedule::Sequential,
        },
        init: match args.init {
            InitArg::Uniform => Init::Uniform,
            InitArg::Random => Init::Random { seed: args.seed },
        },
        tol: args.tol,
        max_iter: args.max_iter,
        criterion: match args.track {
            TrackArg::Messages => Criterion::Messages,
            TrackArg::Beliefs => Criterion::Beliefs,
            TrackArg::Quotient => Criterion::Quotient,
        },
        ..RunOptions::default()
    };
    let mut report = ReportFile::new("run");
    report.inputs.insert("graph".into(), digest);
    let g = model.graph();
    match bp::run(&model, &opts) {
        Ok(r) => {
            let ok = r.tracked_converged();
            if !ok {
                report.diagnostic = Some(Diagnostic {
                    error: "NotConverged".into(),
                    detail: format!(
                        "tracked residual did not drop below {:e} within {} iterations",
                        opts.tol, opts.max_iter
                    ),
                    iteration: Some(r.iterations),
                    edge: None,
                });
            }
            report.run = Some(RunJson::new(g, &opts, &r));
            Ok(Outcome {
                report,
                exit_code: if ok { 0 } else { 2 },
            })
        }
        Err(err @ BpError::NumericalOverflow { .. }) => {
            let BpError::NumericalOverflow {
                iteration,
                edge,
                ref partial,
                ..
            } = err
            else {
                unreachable!()
            };
            report.run = partial.as_ref().map(|p| RunJson::new(g, &opts, p));
            report.diagnostic = Some(Diagnostic {
                error: err.code().into(),
                detail: err.to_string(),
                iteration: Some(iteration),
                edge: Some(edge),
            });
            Ok(Outcome { report, exit_code: 2 })
        }
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> CliResult<Outcome> {
    let (graph_model, digest) = load_model(&args.graph)?;
    let opts = AnalysisOptions {
        fixed_point_tol: args.fixed_point_tol,
    };
    let mut report = ReportFile::new("analyze");
    report.inputs.insert("graph".into(), digest);
    let g = graph_model.graph().clone();
    let (model, messages, source, strategy) = match (&args.from_run, &args.prescribed) {
        (Some(path), _) => {
            let bytes = read_file(path)?;
            let prior: ReportFile = parse_json(path, &bytes)?;
            report.inputs.insert("from_run".into(), sha256_hex(&bytes));
            let run = prior
                .run
                .ok_or_else(|| CliError::Input(format!("`{}` has no run section", path.display())))?;
            let m = messages_from_entries(&g, &run.final_messages)?;
            (graph_model, m, "from_run".to_string(), Some(run.strategy))
        }
        (None, Some(spec)) => {
            let target = if spec == "uniform" {
                BeliefSet::uniform(&g)
            } else {
                let path = Path::new(spec);
                let bytes = read_file(path)?;
                report.inputs.insert("prescribed".into(), sha256_hex(&bytes));
                parse_json::<BeliefFile>(path, &bytes)?.to_beliefs(&g)?
            };
            let model = model::prescribed_belief_model(&g, &target)?;
            (model, MessageState::constant(&g, 1.0), "prescribed".to_string(), None)
        }
        (None, None) => return Err(CliError::Usage("one of --from-run or --prescribed is required".into())),
    };
    let b = bp::beliefs(&model, &messages);
    report.fixed_point = Some(FixedPointJson {
        source,
        compatibility_residual: analysis::compatibility_residual(&model, &b),
        plain_residual: bp::plain_residual(&model, &messages),
        strategy,
        strategy_residual: strategy.map(|s| bp::fixed_point_residual(&model, &messages, s)),
    });
    let (stability, free_energy) = analysis::analyze_messages(&model, &messages, &opts)?;
    report.stability = Some(stability);
    report.free_energy = Some(free_energy);
    Ok(Outcome { report, exit_code: 0 })
}

/// Oracle cap from the environment, or the default.
pub fn state_cap() -> CliResult<u64> {
    match std::env::var(STATE_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{STATE_CAP_ENV} must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_STATE_CAP),
    }
}

pub fn cmd_oracle(args: &OracleArgs) -> CliResult<Outcome> {
    let (model, digest) = load_model(&args.graph)?;
    let cap = state_cap()?;
    let exact = model::exact_marginals(&model, cap)?;
    let g = model.graph();
    let mut report = ReportFile::new("oracle");
    report.inputs.insert("graph".into(), digest);
    report.oracle = Some(OracleJson {
        states: (g.q() as f64).powi(g.num_variables() as i32),
        z_joint: exact.z_joint(),
        log_z_joint: exact.log_z_joint,
        neg_log_z_joint: -exact.log_z_joint,
        marginals: BeliefFile::from_beliefs(g, &exact.beliefs),
    });
    Ok(Outcome { report, exit_code: 0 })
}

fn emit<W: Write, T: Serialize>(out: &mut W, value: &T) {
    let text = serde_json::to_string_pretty(value).expect("report types serialize");
    // a closed stdout leaves nothing useful to do
    let _ = writeln!(out, "{text}");
}

/// Parses `args` (including the program name), executes the command, writes
/// JSON to `out` and returns the exit code.
pub fn run_cli<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            emit(
                out,
                &ErrorJson {
                    error: "Usage",
                    detail: e.to_string().trim().to_string(),
                },
            );
            return 1;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(outcome) => {
            emit(out, &outcome.report);
            outcome.exit_code
        }
        Err(e) => {
            emit(
                out,
                &ErrorJson {
                    error: e.code(),
                    detail: e.to_string(),
                },
            );
            e.exit_code()
        }
    }
}
