//! `splitsdp`: build, solve, certify and report split SDP bounds on A(n,d).

mod config;
mod pipeline;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::Plan;
use pipeline::{bounds_table, build_shape, solve_shape, verify_shape, write_json, SolveOutcome};

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_CERT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "splitsdp", version, about = "Semidefinite upper bounds on A(n,d) from split Terwilliger algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the SDPA model and a manifest for every shape.
    Build(Args),
    /// Run the solver on every shape.
    Solve(Args),
    /// Turn solver output into exact certificates.
    Verify(Args),
    /// Summarize everything under the output directory.
    Report(Args),
}

#[derive(clap::Args, Debug, Default)]
pub struct Args {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Part sizes, e.g. `2,16`. May be repeated.
    #[arg(long)]
    pub split: Vec<String>,
    /// Also try the unsplit shape and every two-part split.
    #[arg(long)]
    pub sweep: bool,
    /// Solver command; `{in}` and `{out}` stand for the problem and solution files.
    #[arg(long)]
    pub solver_cmd: Option<String>,
    #[arg(long)]
    pub bounds_table: Option<PathBuf>,
    #[arg(long)]
    pub timeout_sec: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON run configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Denominator used to rationalize the dual solution.
    #[arg(long)]
    pub denominator: Option<u64>,
    /// Values of k for the shortening inequality, e.g. `1,2,3,4`.
    #[arg(long)]
    pub shortening_k: Option<String>,
    /// Switch off a constraint family. May be repeated.
    #[arg(long, value_name = "FAMILY")]
    pub disable: Vec<String>,
}

enum Failure {
    Usage(anyhow::Error),
    Solver,
    Certification,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn prepare(args: &Args) -> Result<Plan> {
    let plan = config::plan(config::load(args)?)?;
    for note in &plan.notices {
        eprintln!("note: {note}");
    }
    std::fs::create_dir_all(plan.run_dir())?;
    write_json(&plan.run_dir().join("run.json"), &plan)?;
    Ok(plan)
}

/// Run `f` on every shape in parallel; results come back in shape order.
fn each_shape<T: Send>(plan: &Plan, f: impl Fn(&[usize]) -> T + Sync) -> Vec<T> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = plan.shapes.iter().map(|s| scope.spawn(|| f(s))).collect();
        handles.into_iter().map(|h| h.join().expect("shape worker panicked")).collect()
    })
}

fn label(parts: &[usize]) -> String {
    let p: Vec<String> = parts.iter().map(|v| v.to_string()).collect();
    format!("({})", p.join(","))
}

fn build(args: &Args) -> Result<(), Failure> {
    let plan = prepare(args)?;
    let (table, warnings) = bounds_table(&plan)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut notices = plan.notices.clone();
    notices.extend(warnings);
    let results = each_shape(&plan, |s| build_shape(&plan, s, &table.clone(), &notices));
    for (parts, r) in plan.shapes.iter().zip(results) {
        let (model, sf) = r?;
        let sizes: Vec<String> = sf.blocks.iter().map(|b| b.size.to_string()).collect();
        println!(
            "{} n={} d={}: {} profiles, {} classes, {} variables, {} linear rows, blocks [{}]",
            label(parts),
            plan.n,
            plan.d,
            splitsdp_core::algebra::valid_profiles(&model.shape).len(),
            model.classes.len(),
            model.num_vars(),
            model.linear.len(),
            sizes.join(" ")
        );
        println!("  wrote {}", plan.shape_dir(parts).join("model.dat-s").display());
    }
    Ok(())
}

fn solve(args: &Args) -> Result<(), Failure> {
    let plan = prepare(args)?;
    let (table, warnings) = bounds_table(&plan)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let results = each_shape(&plan, |s| solve_shape(&plan, s, &table.clone()));
    let mut rows = Vec::new();
    let mut failed = false;
    for r in results {
        match r? {
            SolveOutcome::Solved(rec) => rows.push(rec),
            SolveOutcome::Failed(rec) => {
                eprintln!("error: shape {}: {}", label(&rec.shape), rec.error.as_deref().unwrap_or("solver failed"));
                failed = true;
                rows.push(rec);
            }
        }
    }
    let best = rows
        .iter()
        .filter_map(|r| r.dual_objective.map(|v| (v, &r.shape)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, s)| s.clone());
    println!("{:<12} {:>18} {:>18}  status", "shape", "primal", "dual");
    for r in &rows {
        let fmt = |v: Option<f64>| v.map(|v| format!("{v:.9}")).unwrap_or_else(|| "-".into());
        let mark = if best.as_ref() == Some(&r.shape) { "  *" } else { "" };
        println!(
            "{:<12} {:>18} {:>18}  {}{mark}",
            label(&r.shape),
            fmt(r.primal_objective),
            fmt(r.dual_objective),
            r.status
        );
    }
    if failed {
        return Err(Failure::Solver);
    }
    Ok(())
}

fn verify(args: &Args) -> Result<(), Failure> {
    let plan = prepare(args)?;
    let (table, _) = bounds_table(&plan)?;
    let results = each_shape(&plan, |s| verify_shape(&plan, s, &table.clone()));
    let mut all_ok = true;
    for (parts, r) in plan.shapes.iter().zip(results) {
        match r {
            Ok(rec) if rec.certified => println!(
                "{}: A({}, {}) <= {}   raw bound {} ~ {:.9}",
                label(parts),
                plan.requested_n,
                plan.requested_d,
                rec.integer_bound,
                rec.raw_bound,
                rec.raw_bound_approx
            ),
            Ok(rec) => {
                all_ok = false;
                println!(
                    "{}: uncertified: {}",
                    label(parts),
                    rec.reason.as_deref().unwrap_or("no reason recorded")
                );
            }
            Err(e) => {
                all_ok = false;
                eprintln!("error: shape {}: {e:#}", label(parts));
            }
        }
    }
    if !all_ok {
        return Err(Failure::Certification);
    }
    Ok(())
}

fn report(args: &Args) -> Result<(), Failure> {
    let cfg = config::load(args)?;
    let text = report::render(&cfg.output_dir)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(anyhow::Error::from)?;
    std::fs::write(cfg.output_dir.join("report.txt"), &text).map_err(anyhow::Error::from)?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Build(a) => build(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Solver) => ExitCode::from(EXIT_SOLVER),
        Err(Failure::Certification) => ExitCode::from(EXIT_CERT),
    }
}
