//! Command-line driver: reads scenario files, runs the solvency tests and
//! writes JSON/CSV results.
//!
//! Exit codes: 0 on success, 1 when the verdict is negative or a check
//! fails, 2 on invalid input or a computation error.

pub mod ingest;
pub mod parse;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use grouprisk_core::experiments::{
    figure_experiment, risk_arbitrage_sequence, var_aggregation_bounds, var_two_agent_probe, ExperimentReport,
    FigureKind,
};
use grouprisk_core::group_risk::{region, total_risk_with, RegionApprox, RegionOptions, TotalRisk, TotalRiskOptions};
use grouprisk_core::hierarchy::HierarchyInstance;
use grouprisk_core::selection::{absolute_acceptability, acceptable_with_thresholds, SolverOptions};
use grouprisk_core::{Margin, RandomVector, VectorRisk};
use serde_json::{json, Value};

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "GROUPRISK_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "grouprisk", version, about = "Solvency tests for groups with intragroup transfers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Is there an acceptable selection of the attainable positions?
    Solvency(SolvencyArgs),
    /// Grid approximation of the group risk region (two agents).
    Region(RegionArgs),
    /// Minimal total capital injection.
    TotalRisk(TotalArgs),
    /// Parent and subsidiary with a credit line.
    Hierarchy(HierarchyArgs),
    /// Named experiment.
    Experiment(ExperimentArgs),
    /// Re-export a scenario file as JSON or CSV.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Scenario file (.json or .csv).
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Risk measure; give once for all agents or once per agent.
    #[arg(long, default_value = "es:0.01")]
    pub measure: Vec<String>,
    #[arg(long, default_value = "ntb")]
    pub family: String,
    #[arg(long)]
    pub margin: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolvencyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Per-agent thresholds `a1,a2,...` (default zero).
    #[arg(long)]
    pub thresholds: Option<String>,
    /// Also require every agent to be no riskier than on its own.
    #[arg(long)]
    pub absolute: bool,
    /// Write the witness selection here as CSV.
    #[arg(long)]
    pub witness: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Number of outer directions when the three-direction bound is not used.
    #[arg(long, default_value_t = 64)]
    pub dirs: usize,
    /// Use dense directions even where three suffice.
    #[arg(long)]
    pub dense: bool,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Optional CSV point cloud `x1,x2,certified,inner,outer`.
    #[arg(long)]
    pub points: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TotalArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 64)]
    pub dirs: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HierarchyArgs {
    /// Scenario file; the first capital column is the subsidiary capital.
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Credit line, or `inf`.
    #[arg(long, default_value = "inf")]
    pub credit_line: String,
    #[arg(long, default_value = "es:0.01")]
    pub measure: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// uniform, normal_exponential, bivariate_normal, risk_arbitrage,
    /// var_aggregation or var_probe.
    #[arg(long)]
    pub name: String,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Fixed margin for the region studies, e.g. `fixed:0.5,0.5`.
    #[arg(long)]
    pub margin: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Number of agents (arbitrage and aggregation studies).
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 0.4)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Scale of the arbitrage sequence.
    #[arg(long, default_value_t = 10.0)]
    pub scale: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Also write the sampled scenarios here.
    #[arg(long)]
    pub scenarios_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub scenarios: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_workers() {
        eprintln!("error: {e:#}");
        return 2;
    }
    match run(&cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn configure_workers() -> Result<()> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| anyhow!("{WORKERS_ENV} must be a positive integer, got '{value}'"))?;
    if n == 0 {
        bail!("{WORKERS_ENV} must be a positive integer, got 0");
    }
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one command; `Ok(false)` means a negative verdict or failed check.
pub fn run(command: &Command) -> Result<bool> {
    match command {
        Command::Solvency(a) => solvency(a),
        Command::Region(a) => region_cmd(a),
        Command::TotalRisk(a) => total_cmd(a),
        Command::Hierarchy(a) => hierarchy_cmd(a),
        Command::Experiment(a) => experiment_cmd(a),
        Command::Convert(a) => {
            let c = ingest::ingest_scenarios(&a.scenarios)?;
            ingest::export_scenarios(&c, &a.output)?;
            Ok(true)
        }
    }
}

struct Problem {
    c: RandomVector,
    family: grouprisk_core::TransferFamily,
    spec: VectorRisk,
}

fn load_problem(a: &ProblemArgs) -> Result<Problem> {
    let c = ingest::ingest_scenarios(&a.scenarios)?;
    let family = parse::build_family(&a.family, a.margin.as_deref())?;
    let measures = a.measure.iter().map(|m| parse::parse_measure(m)).collect::<Result<Vec<_>>>()?;
    let spec = match measures.len() {
        1 => VectorRisk::uniform(measures[0], c.dim()),
        _ => VectorRisk::new(measures),
    }
    .map_err(|e| anyhow!("{e}"))?;
    spec.check_dim(c.dim()).map_err(|e| anyhow!("measures: {e}"))?;
    family.check_dim(c.dim()).map_err(|e| anyhow!("family: {e}"))?;
    Ok(Problem { c, family, spec })
}

fn emit(value: &Value, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_matrix_csv(m: &RandomVector, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let header: Vec<String> = (1..=m.dim()).map(|k| format!("x{k}")).collect();
    w.write_record(&header)?;
    for row in m.rows() {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

fn solvency(a: &SolvencyArgs) -> Result<bool> {
    let p = load_problem(&a.problem)?;
    let d = p.c.dim();
    let verdict = if a.absolute {
        if a.thresholds.is_some() {
            bail!("--absolute and --thresholds are mutually exclusive");
        }
        absolute_acceptability(&p.c, &p.family, &p.spec)
    } else {
        let thresholds = match &a.thresholds {
            Some(s) => parse::parse_vector(s, "thresholds")?,
            None => vec![0.0; d],
        };
        if thresholds.len() != d {
            bail!("{} thresholds for {d} agents", thresholds.len());
        }
        acceptable_with_thresholds(&p.c, &p.family, &p.spec, &thresholds, SolverOptions::default())
    }
    .map_err(|e| anyhow!("{e}"))?;
    if let (Some(path), Some(w)) = (&a.witness, &verdict.witness) {
        write_matrix_csv(&w.values, path)?;
    }
    let out = json!({
        "feasible": verdict.feasible,
        "conclusive": verdict.conclusive,
        "method": verdict.method,
        "risks": verdict.risks,
        "witness_admissible": verdict.witness.as_ref().map(|w| w.is_admissible()),
        "family": p.family,
        "measures": p.spec.components(),
    });
    emit(&out, a.output.as_deref())?;
    Ok(verdict.feasible)
}

fn region_options(g: &GridArgs) -> RegionOptions {
    RegionOptions {
        resolution: g.grid,
        use_three_dirs: !g.dense,
        dir_count: g.dirs,
        ..RegionOptions::default()
    }
}

fn total_json(t: &TotalRisk) -> Value {
    json!({
        "value": t.value,
        "status": t.status,
        "method": t.method,
        "lower_bound": t.lower_bound,
        "allocation": t.allocation,
    })
}

fn bits(grid: &[bool], res: usize) -> Vec<String> {
    grid.chunks(res)
        .map(|row| row.iter().map(|&b| if b { '1' } else { '0' }).collect())
        .collect()
}

/// The region export schema.
pub fn region_json(r: &RegionApprox) -> Value {
    let res = r.resolution;
    json!({
        "box": r.bbox,
        "resolution": res,
        "grid": bits(&r.grid, res),
        "inner_grid": bits(&r.inner_grid, res),
        "outer_grid": r.outer_grid.as_ref().map(|g| bits(g, res)),
        "halfplanes": r.outer_halfplanes,
        "curve_directions": r.outer_curve_directions,
        "inner_points": r.inner_points,
        "grid_total": r.grid_total,
        "solver_cells": r.solver_cells,
        "total_risk": total_json(&r.total_risk),
    })
}

fn write_points(r: &RegionApprox, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["x1", "x2", "certified", "inner", "outer"])?;
    let res = r.resolution;
    for j in 0..res {
        for i in 0..res {
            let k = r.index(i, j);
            let x = r.point(i, j);
            let outer = r.outer_grid.as_ref().map_or(String::new(), |g| u8::from(g[k]).to_string());
            w.write_record([
                format!("{:?}", x[0]),
                format!("{:?}", x[1]),
                u8::from(r.grid[k]).to_string(),
                u8::from(r.inner_grid[k]).to_string(),
                outer,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn region_cmd(a: &RegionArgs) -> Result<bool> {
    let p = load_problem(&a.problem)?;
    let r = region(&p.c, &p.family, &p.spec, &region_options(&a.grid)).map_err(|e| anyhow!("{e}"))?;
    if let Some(path) = &a.points {
        write_points(&r, path)?;
    }
    emit(&region_json(&r), a.output.as_deref())?;
    Ok(true)
}

fn total_cmd(a: &TotalArgs) -> Result<bool> {
    let p = load_problem(&a.problem)?;
    let opts = TotalRiskOptions { dir_count: a.dirs, ..TotalRiskOptions::default() };
    let t = total_risk_with(&p.c, &p.family, &p.spec, &opts).map_err(|e| anyhow!("{e}"))?;
    emit(&total_json(&t), a.output.as_deref())?;
    Ok(true)
}

fn hierarchy_cmd(a: &HierarchyArgs) -> Result<bool> {
    let c = ingest::ingest_scenarios(&a.scenarios)?;
    let measure = parse::parse_measure(&a.measure)?;
    let credit = match a.credit_line.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "unlimited" => f64::INFINITY,
        s => s.parse().map_err(|_| anyhow!("credit line: cannot parse '{s}'"))?,
    };
    let inst = HierarchyInstance::new(c.column(0), credit).map_err(|e| anyhow!("{e}"))?;
    let best = inst.optimal_transfer(measure).map_err(|e| anyhow!("{e}"))?;
    let whole = measure.evaluate(&inst.subsidiary);
    let out = json!({
        "credit_line": if credit.is_infinite() { Value::from("inf") } else { Value::from(credit) },
        "granular_total": inst.granular_total(measure),
        "optimal_total": best.value,
        "subsidiary_risk": whole,
        "transfer": best.transfer,
    });
    emit(&out, a.output.as_deref())?;
    Ok(true)
}

fn report_json(r: &ExperimentReport) -> Value {
    let mut v = serde_json::to_value(r).expect("report serializes");
    v["passed"] = Value::from(r.passed());
    v
}

fn experiment_cmd(a: &ExperimentArgs) -> Result<bool> {
    let figure = match a.name.as_str() {
        "uniform" => Some(FigureKind::Uniform),
        "normal_exponential" => Some(FigureKind::NormalExponential),
        "bivariate_normal" => Some(FigureKind::BivariateNormal),
        _ => None,
    };
    if let Some(kind) = figure {
        let margin = match a.margin.as_deref().map(parse::parse_margin).transpose()? {
            None => None,
            Some(Margin::Fixed(v)) if v.len() == 2 => Some([v[0], v[1]]),
            Some(_) => bail!("region studies take a fixed two-agent margin, e.g. fixed:0.5,0.5"),
        };
        let out = figure_experiment(kind, margin, a.seed, a.n, &region_options(&a.grid)).map_err(|e| anyhow!("{e}"))?;
        if let Some(path) = &a.points {
            write_points(&out.region, path)?;
        }
        if let Some(path) = &a.scenarios_out {
            ingest::export_scenarios(&out.capital, path)?;
        }
        let value = json!({
            "report": report_json(&out.report),
            "region": region_json(&out.region),
            "granular": region_json(&out.granular),
            "unconstrained": region_json(&out.unconstrained),
        });
        emit(&value, a.output.as_deref())?;
        return Ok(out.report.passed());
    }
    let report = match a.name.as_str() {
        "risk_arbitrage" => risk_arbitrage_sequence(a.d, a.alpha, a.scale).map(|(_, r)| r),
        "var_aggregation" => var_aggregation_bounds(a.d, a.alpha, a.beta, a.seed, 100),
        "var_probe" => var_two_agent_probe(&[0.55, 0.75, 0.9], &[1.0, 10.0, 100.0]),
        other => bail!("unknown experiment '{other}'"),
    }
    .map_err(|e| anyhow!("{e}"))?;
    emit(&report_json(&report), a.output.as_deref())?;
    Ok(report.passed())
}
