//! `dosc-sim` command line.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 infeasible.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::explore::{param_dimension, select_winner, Explorer};
use crate::layer::{ingest_trace, Trace};
use crate::report::{Baseline, Format, Metadata, PartitionReport, PlanReport, ReportDocument, RooflineReport, SweepReport};
use crate::system::{load_system_config, load_workload_config, SystemSpec, WorkloadSpec};
use crate::units::parse_quantity;

#[derive(Debug, Parser)]
#[command(name = "dosc-sim", version, about = "Power simulator for distributed on-sensor compute camera systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Power breakdown of one partition plan.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// `optimal`, `centralized`, `cut-<k>`, or a stage name (cut after it).
        #[arg(long, default_value = "optimal")]
        plan: String,
        /// Divide powers by this plan's total.
        #[arg(long)]
        normalize: Option<String>,
    },
    /// Evaluate every plan and mark the minimum-power one.
    Partition {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        normalize: Option<String>,
    },
    /// Re-evaluate all plans across values of one numeric parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted parameter path, e.g. `processors.os.e_mac`.
        #[arg(long)]
        param: String,
        /// Comma-separated values; unit suffixes are accepted (`0.5 pJ,1 pJ`).
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Per-layer arithmetic intensity and attainable/achieved MAC/cycle.
    Roofline {
        #[command(flatten)]
        common: Common,
        /// Processor to cost layers on (defaults to the aggregator).
        #[arg(long)]
        processor: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub workload: PathBuf,
    /// Per-layer measurements that override the analytical estimates.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Infeasible(_) => 2,
        }
    }
}

/// Rendered output plus an optional failure to report after writing it.
struct Outcome {
    text: String,
    error: Option<CliError>,
}

impl From<String> for Outcome {
    fn from(text: String) -> Self {
        Self { text, error: None }
    }
}

pub fn main_with_args<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Parse `args`, run the command, and return the process exit code.
pub fn run<I, O, E>(args: I, out: &mut O, err: &mut E) -> i32
where
    I: IntoIterator<Item = OsString>,
    O: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    let output = match &cli.command {
        Command::Simulate { common, .. }
        | Command::Partition { common, .. }
        | Command::Sweep { common, .. }
        | Command::Roofline { common, .. } => common.output.clone(),
    };
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "dosc-sim: {e}");
            return e.exit_code();
        }
    };
    let written = match &output {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|e| format!("{}: {e}", path.display())),
        None => out.write_all(outcome.text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "dosc-sim: cannot write output: {e}");
        return 1;
    }
    match outcome.error {
        Some(e) => {
            let _ = writeln!(err, "dosc-sim: {e}");
            e.exit_code()
        }
        None => 0,
    }
}

struct Inputs {
    system: SystemSpec,
    workload: WorkloadSpec,
    trace: Trace,
    metadata: Metadata,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load(common: &Common) -> Result<Inputs, CliError> {
    let sys_text = read(&common.system)?;
    let wl_text = read(&common.workload)?;
    let system = load_system_config(&sys_text)
        .map_err(|e| CliError::Config(format!("{}:\n{e}", common.system.display())))?;
    let workload = load_workload_config(&wl_text)
        .map_err(|e| CliError::Config(format!("{}:\n{e}", common.workload.display())))?;
    let mut hashed = vec![("system", sys_text.as_str()), ("workload", wl_text.as_str())];
    let trace_text = common.trace.as_deref().map(read).transpose()?;
    let trace = match (&trace_text, &common.trace) {
        (Some(text), Some(path)) => {
            hashed.push(("trace", text.as_str()));
            ingest_trace(text, &workload).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        _ => Trace::default(),
    };
    let metadata = Metadata::new(hashed);
    Ok(Inputs { system, workload, trace, metadata })
}

fn baseline(ex: &Explorer<'_>, id: Option<&str>) -> Result<Option<Baseline>, CliError> {
    let Some(id) = id else { return Ok(None) };
    let plan = ex.plan(id).map_err(|e| CliError::Config(e.to_string()))?;
    let eval = ex.evaluate(&plan);
    if !eval.feasible {
        return Err(CliError::Infeasible(format!(
            "baseline {}: {}",
            eval.plan.id,
            eval.infeasibility_reason.unwrap_or_default()
        )));
    }
    Ok(Some(Baseline { id: eval.plan.id, power: eval.breakdown.total_avg_power }))
}

fn render_err(e: crate::report::ReportError) -> CliError {
    CliError::Config(e.to_string())
}

fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Simulate { common, plan, normalize } => {
            let inp = load(common)?;
            let ex = Explorer::new(&inp.system, &inp.workload).with_trace(&inp.trace);
            let eval = if plan == "optimal" {
                ex.optimize().map_err(|e| CliError::Infeasible(e.to_string()))?
            } else {
                ex.evaluate(&ex.plan(plan).map_err(|e| CliError::Config(e.to_string()))?)
            };
            if !eval.feasible {
                return Err(CliError::Infeasible(format!(
                    "{}: {}",
                    eval.plan.id,
                    eval.infeasibility_reason.unwrap_or_default()
                )));
            }
            let base = baseline(&ex, normalize.as_deref())?;
            let doc = ReportDocument { report: PlanReport::from_evaluation(&eval, base.as_ref()), metadata: inp.metadata };
            Ok(doc.render(common.format).map_err(render_err)?.into())
        }
        Command::Partition { common, normalize } => {
            let inp = load(common)?;
            let ex = Explorer::new(&inp.system, &inp.workload).with_trace(&inp.trace);
            let evals = ex.evaluate_all();
            let winner = select_winner(&evals).map(|i| evals[i].plan.id.clone());
            let base = baseline(&ex, normalize.as_deref())?;
            let report = PartitionReport {
                plans: evals.iter().map(|e| PlanReport::from_evaluation(e, base.as_ref())).collect(),
                winner: winner.clone(),
                metadata: inp.metadata,
            };
            let text = report.render(common.format).map_err(render_err)?;
            let error = winner.is_none().then(|| {
                CliError::Infeasible(
                    evals
                        .iter()
                        .map(|e| format!("{}: {}", e.plan.id, e.infeasibility_reason.as_deref().unwrap_or("")))
                        .collect::<Vec<_>>()
                        .join("; "),
                )
            });
            Ok(Outcome { text, error })
        }
        Command::Sweep { common, param, values } => {
            let inp = load(common)?;
            let dim = param_dimension(param, &inp.system, &inp.workload).map_err(|e| CliError::Config(e.to_string()))?;
            let parsed = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| parse_quantity(v, dim).map_err(|e| CliError::Config(format!("--values: {e}"))))
                .collect::<Result<Vec<f64>, _>>()?;
            let table = Explorer::new(&inp.system, &inp.workload)
                .with_trace(&inp.trace)
                .sweep(param, &parsed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let report = SweepReport::new(table, dim, inp.metadata);
            Ok(report.render(common.format).map_err(render_err)?.into())
        }
        Command::Roofline { common, processor } => {
            let inp = load(common)?;
            let proc = match processor {
                Some(name) => inp
                    .system
                    .processor(name)
                    .ok_or_else(|| CliError::Config(format!("unknown processor {name:?}")))?,
                None => inp.system.aggregator(),
            };
            let report = RooflineReport::build(proc, &inp.workload, &inp.trace, inp.metadata)
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(report.render(common.format).map_err(render_err)?.into())
        }
    }
}
