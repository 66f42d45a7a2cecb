use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use finsler_core::harness::{
    self, run_scenario, Format, HarnessError, Overrides, Scenario, Task, EXIT_CONFIG, EXIT_RUNTIME,
};

/// Finsler spectral geometry scenario runner.
#[derive(Parser, Debug)]
#[command(name = "finsler", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reversibility, uniformity and measure densities.
    Analyze(RunArgs),
    /// First eigenvalue of the closed manifold.
    Eigen(RunArgs),
    /// Level-set Cheeger sweep (and the exact value in 1D).
    Cheeger(RunArgs),
    /// Diameter, Ricci range and the comparison-bound inputs.
    Bounds(RunArgs),
    /// Every check, with pass/fail records and exit status.
    Verify(RunArgs),
    /// Runs every `*.toml` scenario in a directory.
    Sweep(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Scenario file (or directory for `sweep`).
    path: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Nodes per axis.
    #[arg(long)]
    resolution: Option<usize>,
    /// Output directory.
    #[arg(long, env = "FINSLER_OUT", default_value = "reports")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

fn overrides(args: &RunArgs, tasks: Option<Vec<Task>>) -> Overrides {
    Overrides { seed: args.seed, resolution: args.resolution, tasks }
}

fn single(args: &RunArgs, tasks: &[Task]) -> Result<i32, HarnessError> {
    let scenario = overrides(args, Some(tasks.to_vec())).apply(Scenario::load(&args.path)?)?;
    let outcome = run_scenario(&scenario)?;
    let paths = outcome.write(&args.out, args.format.into())?;
    print_summary(&outcome.report, &paths);
    Ok(outcome.exit_code())
}

fn print_summary(r: &harness::BoundReport, paths: &[PathBuf]) {
    let q = &r.quantities;
    let show = |name: &str, v: Option<f64>| {
        if let Some(v) = v {
            println!("  {name:<12} {v:.10}");
        }
    };
    println!("{} ({}, n = {}, nodes {:?})", r.scenario.name, r.family, r.dim, r.nodes);
    show("lambda_F", q.lambda_f.map(|t| t.value));
    show("Lambda_F", q.uniformity.map(|t| t.value));
    show("volume", q.volume.map(|t| t.value));
    show("lambda1", q.lambda1.map(|t| t.value));
    show("h_exact", q.h_exact.map(|t| t.value));
    show("h_ub", q.h_ub.map(|t| t.value));
    show("diameter", q.diameter.map(|t| t.value));
    show("k", q.k.map(|t| t.value));
    show("buser_ratio", q.buser_ratio);
    for ineq in &r.inequalities {
        let mark = if ineq.satisfied { "ok  " } else { "FAIL" };
        println!("  [{mark}] {:<26} {:>12.4e} <= {:<12.4e} margin {:+.3e}", ineq.name, ineq.lhs, ineq.rhs, ineq.margin);
    }
    for refusal in &r.refusals {
        println!("  [skip] {:<26} {}", refusal.name, refusal.reason);
    }
    for p in paths {
        println!("  wrote {}", p.display());
    }
    println!("  exit {}", r.status.exit_code);
}

fn sweep(args: &RunArgs) -> Result<i32, HarnessError> {
    let summary = harness::sweep(&args.path, &overrides(args, None), &args.out, args.format.into())?;
    for e in &summary.entries {
        let name = e.name.as_deref().unwrap_or(&e.file);
        match &e.error {
            Some(err) => println!("{name:<28} exit {}  {err}", e.exit_code),
            None => println!("{name:<28} exit {}", e.exit_code),
        }
    }
    for g in &summary.groups {
        println!(
            "group {}: widths {:?}, band factor {}, lambda1 monotone {}, h_ub monotone {}",
            g.group,
            g.widths,
            g.band_factor.map_or("n/a".to_string(), |b| format!("{b:.4}")),
            g.lambda1_monotone,
            g.h_ub_monotone
        );
    }
    println!("wrote {}", Path::new(&args.out).join("sweep-summary.json").display());
    Ok(summary.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Analyze(a)
        | Command::Eigen(a)
        | Command::Cheeger(a)
        | Command::Bounds(a)
        | Command::Verify(a)
        | Command::Sweep(a) => a,
    };
    if let Some(jobs) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME as u8);
        }
    }
    let result = match &cli.command {
        Command::Analyze(a) => single(a, &[Task::Invariants, Task::Measures]),
        Command::Eigen(a) => single(a, &[Task::Eigen]),
        Command::Cheeger(a) => single(a, &[Task::Cheeger]),
        Command::Bounds(a) => single(a, &[Task::Bounds]),
        Command::Verify(a) => single(a, &[Task::Coarea, Task::Verify]),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            debug_assert!(code == EXIT_CONFIG || code == EXIT_RUNTIME);
            ExitCode::from(code as u8)
        }
    }
}
