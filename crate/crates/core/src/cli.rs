//! Command-line front end. Machine-readable results go to standard output as
//! JSON (CSV for `plot`); human summaries go to standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bifeas::{classify_w, enumerate_all, Strength, DEFAULT_SUBSET_BUDGET};
use crate::conjugate::{solve_by_enumeration, solve_single_toll, EnumerationLimits};
use crate::error::{NppError, Result};
use crate::follower::{plot_csv, reaction_plot_sample};
use crate::instance::{generate_grid, json_number, parse, serialize, GeneratorConfig, Instance};
use crate::milp::{self, round_clean, Limits, SolveReport, SolveStatus};
use crate::oracle;

pub const EXIT_OK: i32 = 0;
pub const EXIT_LIMIT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_SOFTWARE: i32 = 70;

#[derive(Parser, Debug)]
#[command(name = "npp", version, about = "Network pricing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance to optimality.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Number of commodity pairs that receive cuts (milp only).
        #[arg(long, default_value_t = 0)]
        cuts: usize,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Relative optimality gap at which branch-and-bound stops.
        #[arg(long, default_value_t = 0.0)]
        gap: f64,
    },
    /// Generate a random grid instance.
    Generate {
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        commodities: usize,
        #[arg(long)]
        seed: u64,
        /// JSON file with generator parameters.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// List the bilevel-feasible paths of every commodity.
    Paths { instance: PathBuf },
    /// Classify an integral reduced reaction as strong or weak.
    Classify {
        instance: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        w: Vec<f64>,
    },
    /// Sample follower reactions over a box of tolls as CSV.
    Plot {
        instance: PathBuf,
        /// One `lo:hi` range per tolled arc, comma separated.
        #[arg(long = "box", value_delimiter = ',', required = true)]
        bounds: Vec<String>,
        #[arg(long, default_value_t = 10)]
        resolution: usize,
    },
    /// Run the grid experiment and write one report per run plus a summary.
    Bench {
        #[arg(long = "L-list", value_delimiter = ',', required = true)]
        l_list: Vec<usize>,
        #[arg(long = "N-list", value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        commodities: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        time_limit: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Enum,
    Milp,
    SingleToll,
    Oracle,
}

enum Failure {
    Usage(String),
    Lib(NppError),
}

impl From<NppError> for Failure {
    fn from(e: NppError) -> Self {
        Failure::Lib(e)
    }
}

type CliResult = std::result::Result<i32, Failure>;

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                NppError::Numerical(_) => EXIT_SOFTWARE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Solve { instance, method, cuts, time_limit, gap } => {
            let inst = load(&instance)?;
            let time_limit = seconds(time_limit)?;
            if !(0.0..1.0).contains(&gap) {
                return Err(Failure::Usage("--gap must lie in [0, 1)".into()));
            }
            solve(&inst, method, cuts, time_limit, gap, out, err)
        }
        Command::Generate { grid, commodities, seed, config } => {
            let config = load_config(config.as_deref())?;
            let inst = generate_grid(grid, commodities, seed, &config)?;
            emit(out, serialize(&inst).trim_end())?;
            Ok(EXIT_OK)
        }
        Command::Paths { instance } => {
            let inst = load(&instance)?;
            let sets = enumerate_all(&inst, DEFAULT_SUBSET_BUDGET)?;
            let listing: Vec<Value> = sets
                .iter()
                .enumerate()
                .map(|(k, set)| {
                    let records: Vec<Value> = set
                        .iter()
                        .map(|r| json!({"id": r.id, "base_cost": num(r.base_cost), "w": r.w, "arcs": r.arcs}))
                        .collect();
                    json!({"commodity": k, "paths": records})
                })
                .collect();
            emit_json(out, &listing)?;
            Ok(EXIT_OK)
        }
        Command::Classify { instance, w } => {
            let inst = load(&instance)?;
            if w.len() != inst.num_tolled() {
                return Err(Failure::Usage(format!("--w needs {} entries, got {}", inst.num_tolled(), w.len())));
            }
            let sets = enumerate_all(&inst, DEFAULT_SUBSET_BUDGET)?;
            let c = classify_w(&inst, &w, &sets)?;
            let verdict = match c.strength {
                Strength::Strong => "strong",
                Strength::Weak => "weak",
            };
            let _ = writeln!(err, "{verdict} ({} binary decompositions found)", c.decompositions.len());
            emit_json(out, &c)?;
            Ok(EXIT_OK)
        }
        Command::Plot { instance, bounds, resolution } => {
            let inst = load(&instance)?;
            let ranges = bounds.iter().map(|b| parse_range(b)).collect::<std::result::Result<Vec<_>, _>>()?;
            if ranges.len() != inst.num_tolled() {
                return Err(Failure::Usage(format!("--box needs {} ranges, got {}", inst.num_tolled(), ranges.len())));
            }
            if resolution == 0 {
                return Err(Failure::Usage("--resolution must be positive".into()));
            }
            let samples = reaction_plot_sample(&inst, &ranges, resolution)?;
            write!(out, "{}", plot_csv(inst.num_tolled(), &samples)).map_err(NppError::from)?;
            Ok(EXIT_OK)
        }
        Command::Bench { l_list, n_list, seeds, out: dir, commodities, config, time_limit } => {
            let config = load_config(config.as_deref())?;
            let time_limit = seconds(time_limit)?;
            bench(&l_list, &n_list, &seeds, commodities, &config, time_limit, &dir, out, err)
        }
    }
}

fn solve(
    inst: &Instance,
    method: Method,
    cuts: usize,
    time_limit: Option<Duration>,
    gap: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let start = Instant::now();
    match method {
        Method::Enum => {
            let limits = EnumerationLimits { deadline: time_limit.map(|d| start + d), ..Default::default() };
            let r = solve_by_enumeration(inst, &limits)?;
            let status = if r.complete { SolveStatus::Optimal } else { SolveStatus::TimeLimit };
            emit_json(
                out,
                &json!({
                    "revenue": num(r.revenue),
                    "w": r.w,
                    "t": r.tolls,
                    "cells": r.cells,
                    "millis": millis(start),
                    "status": status,
                }),
            )?;
            Ok(exit_for(status))
        }
        Method::Milp => {
            let report = milp::solve(inst, cuts, &Limits { time_limit, gap })?;
            let _ = writeln!(
                err,
                "revenue {} bound {} nodes {} status {}",
                round_clean(report.revenue),
                round_clean(report.bound),
                report.nodes,
                status_name(report.status)
            );
            emit_json(out, &report)?;
            Ok(exit_for(report.status))
        }
        Method::SingleToll => {
            let r = solve_single_toll(inst)?;
            emit_json(out, &json!({"revenue": num(r.revenue), "t": num(r.t)}))?;
            Ok(EXIT_OK)
        }
        Method::Oracle => {
            let r = oracle::solve(inst, oracle::DEFAULT_PATH_BUDGET, oracle::DEFAULT_COMBINATION_BUDGET)?;
            emit_json(
                out,
                &json!({
                    "revenue": num(r.revenue),
                    "w": r.w,
                    "t": r.t,
                    "paths": r.paths,
                    "combinations": r.combinations,
                    "millis": millis(start),
                    "status": SolveStatus::Optimal,
                }),
            )?;
            Ok(EXIT_OK)
        }
    }
}

#[derive(Serialize)]
struct BenchRun {
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "N")]
    n: usize,
    seed: u64,
    commodities: usize,
    report: SolveReport,
}

#[derive(Serialize)]
struct BenchSummary {
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "N")]
    n: usize,
    runs: usize,
    solved: usize,
    mean_millis: f64,
    mean_gap: f64,
}

#[allow(clippy::too_many_arguments)]
fn bench(
    l_list: &[usize],
    n_list: &[usize],
    seeds: &[u64],
    commodities: usize,
    config: &GeneratorConfig,
    time_limit: Option<Duration>,
    dir: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    std::fs::create_dir_all(dir).map_err(NppError::from)?;
    let mut summary = Vec::new();
    for &l in l_list {
        let instances = seeds.iter().map(|&s| generate_grid(l, commodities, s, config)).collect::<Result<Vec<_>>>()?;
        for &n in n_list {
            let mut runs = Vec::new();
            for (&seed, inst) in seeds.iter().zip(&instances) {
                let report = milp::solve(inst, n, &Limits { time_limit, gap: 0.0 })?;
                let run = BenchRun { l, n, seed, commodities, report };
                let path = dir.join(format!("run_L{l}_N{n}_seed{seed}.json"));
                let text = serde_json::to_string_pretty(&run).expect("serializable") + "\n";
                std::fs::write(&path, text).map_err(NppError::from)?;
                runs.push(run.report);
            }
            let count = runs.len().max(1) as f64;
            summary.push(BenchSummary {
                l,
                n,
                runs: runs.len(),
                solved: runs.iter().filter(|r| r.status == SolveStatus::Optimal).count(),
                mean_millis: runs.iter().map(|r| r.millis).sum::<f64>() / count,
                mean_gap: runs.iter().map(|r| r.gap).sum::<f64>() / count,
            });
        }
    }
    let text = serde_json::to_string_pretty(&summary).expect("serializable") + "\n";
    std::fs::write(dir.join("summary.json"), &text).map_err(NppError::from)?;
    let _ = writeln!(err, "{:>4} {:>4} {:>7} {:>12} {:>10}", "L", "N", "solved", "mean ms", "mean gap");
    for s in &summary {
        let _ = writeln!(
            err,
            "{:>4} {:>4} {:>3}/{:<3} {:>12.1} {:>10.4}",
            s.l, s.n, s.solved, s.runs, s.mean_millis, s.mean_gap
        );
    }
    emit(out, text.trim_end())?;
    Ok(EXIT_OK)
}

fn load(path: &Path) -> std::result::Result<Instance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| NppError::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse(&text)?)
}

fn load_config(path: Option<&Path>) -> std::result::Result<GeneratorConfig, Failure> {
    let Some(path) = path else {
        return Ok(GeneratorConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| NppError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Lib(NppError::Validation(format!("generator config {}: {e}", path.display()))))
}

fn seconds(v: Option<f64>) -> std::result::Result<Option<Duration>, Failure> {
    match v {
        None => Ok(None),
        Some(s) if s.is_finite() && s >= 0.0 => Ok(Some(Duration::from_secs_f64(s))),
        Some(s) => Err(Failure::Usage(format!("invalid time limit {s}"))),
    }
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), Failure> {
    let bad = || Failure::Usage(format!("invalid range `{s}`, expected lo:hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn num(v: f64) -> Value {
    json_number(round_clean(v))
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

fn exit_for(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => EXIT_OK,
        _ => EXIT_LIMIT,
    }
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::GapLimit => "gap-limit",
        SolveStatus::TimeLimit => "time-limit",
    }
}

fn emit(out: &mut dyn Write, text: &str) -> std::result::Result<(), Failure> {
    writeln!(out, "{text}").map_err(|e| Failure::Lib(e.into()))
}

fn emit_json<T: Serialize + ?Sized>(out: &mut dyn Write, v: &T) -> std::result::Result<(), Failure> {
    emit(out, &serde_json::to_string(v).expect("serializable"))
}
