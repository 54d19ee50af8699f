use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use shallowbound::runner::{self, Mode, ResultRow, CSV_COLUMNS};
use shallowbound::scenario::Scenario;
use shallowbound::Error;

/// Bundled scenarios, also used by the acceptance suite.
const BUNDLED: &[(&str, &str)] = &[
    ("ex1_positive_mean", include_str!("../../../scenarios/ex1_positive_mean.json")),
    ("ex1_negative_mean", include_str!("../../../scenarios/ex1_negative_mean.json")),
    ("ex1_zero_mean", include_str!("../../../scenarios/ex1_zero_mean.json")),
    ("ex1_complex_below", include_str!("../../../scenarios/ex1_complex_below.json")),
    ("ex1_complex_above", include_str!("../../../scenarios/ex1_complex_above.json")),
    ("ex2_paradox_exists", include_str!("../../../scenarios/ex2_paradox_exists.json")),
    ("ex2_paradox_absent", include_str!("../../../scenarios/ex2_paradox_absent.json")),
    ("ex3_rho_one", include_str!("../../../scenarios/ex3_rho_one.json")),
    ("ex4_divergence_form", include_str!("../../../scenarios/ex4_divergence_form.json")),
];

#[derive(Parser)]
#[command(name = "shallowbound", version, about = "Shallow bound states of locally perturbed 2D Schrödinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic prediction only
    Predict(RunArgs),
    /// Characteristic-equation solver, eigenfunction residual and root count
    Solve(RunArgs),
    /// Radial shooting oracle (real radial multiplicative perturbations)
    Oracle(RunArgs),
    /// Predict, solve and oracle merged into one row per ε
    Sweep(RunArgs),
    /// Integration-by-parts identities for a zero-mean potential
    CheckIdentities(RunArgs),
    /// Run the bundled scenarios and check their expectations
    Examples(ExampleArgs),
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    grid_n: Option<usize>,
    /// truncation order J
    #[arg(long)]
    terms: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file; repeat to run several
    #[arg(long, required = true)]
    scenario: Vec<PathBuf>,
    /// CSV output path, stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ExampleArgs {
    /// Run these scenario files instead of the bundled ones
    #[arg(long)]
    scenario: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn csv_help() -> String {
    let mut s = String::from("CSV columns (complex values as _re/_im pairs, empty cells for missing values):\n");
    for (names, what) in CSV_COLUMNS {
        s.push_str(&format!("  {names}\n      {what}\n"));
    }
    s.push_str(
        "\nExit codes: 0 success, 1 failed example expectations, 2 invalid scenario or arguments,\n\
         3 oracle unsupported for the scenario, 4 solver non-convergence, 5 numerical guard.\n\
         SHALLOWBOUND_THREADS caps the number of worker threads.",
    );
    s
}

fn apply(o: &Overrides, s: &mut Scenario) -> Result<(), Error> {
    if let Some(n) = o.grid_n {
        s.solver.grid_n = n;
    }
    if let Some(j) = o.terms {
        s.solver.terms = j;
    }
    if let Some(a) = o.alpha {
        s.solver.alpha = a;
    }
    if let Some(m) = o.margin {
        s.solver.margin = m;
    }
    s.validate().map_err(|e| Error::InvalidArgument(format!("scenario '{}' after overrides: {e}", s.name)))
}

fn load(paths: &[PathBuf], o: &Overrides) -> Result<Vec<Scenario>, Error> {
    paths
        .iter()
        .map(|p| {
            let mut s = Scenario::from_path(p)?;
            apply(o, &mut s)?;
            Ok(s)
        })
        .collect()
}

fn bundled(o: &Overrides) -> Result<Vec<Scenario>, Error> {
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let mut s = Scenario::from_json(text, None).map_err(|e| Error::Format(format!("{name}: {e}")))?;
            apply(o, &mut s)?;
            Ok(s)
        })
        .collect()
}

fn emit(rows: &[ResultRow], out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => runner::write_csv(rows, BufWriter::new(File::create(p)?)),
        None => runner::write_csv(rows, io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let (mode, args) = match cli.command {
        Command::Predict(a) => (Mode::Predict, a),
        Command::Solve(a) => (Mode::Solve, a),
        Command::Oracle(a) => (Mode::Oracle, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::CheckIdentities(a) => {
            let mut out = io::stdout().lock();
            for s in load(&a.scenario, &a.overrides)? {
                let rep = runner::run_check_identities(&s)?;
                writeln!(out, "{}: mean {:.3e}", s.name, rep.mean.norm())?;
                for c in &rep.checks {
                    writeln!(out, "  {}: lhs {:.12e} rhs {:.12e} relative error {:.3e}", c.name, c.lhs.re, c.rhs.re, c.relative_error())?;
                }
            }
            return Ok(ExitCode::SUCCESS);
        }
        Command::Examples(a) => {
            let scenarios = if a.scenario.is_empty() { bundled(&a.overrides)? } else { load(&a.scenario, &a.overrides)? };
            let rows = runner::run_scenarios(&scenarios, Mode::Sweep)?;
            if let Some(p) = &a.out {
                emit(&rows, Some(p))?;
            }
            let mut failed = 0;
            let mut out = io::stdout().lock();
            for s in &scenarios {
                let fails = runner::check_expectations(s, &rows);
                if fails.is_empty() {
                    writeln!(out, "PASS {}", s.name)?;
                } else {
                    failed += 1;
                    writeln!(out, "FAIL {}", s.name)?;
                    for f in fails {
                        writeln!(out, "  {f}")?;
                    }
                }
            }
            writeln!(out, "{} of {} scenarios passed", scenarios.len() - failed, scenarios.len())?;
            return Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    };
    let scenarios = load(&args.scenario, &args.overrides)?;
    let rows = runner::run_scenarios(&scenarios, mode)?;
    emit(&rows, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("SHALLOWBOUND_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("SHALLOWBOUND_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn main() -> ExitCode {
    let help = csv_help();
    let matches = Cli::command()
        .after_long_help(help.clone())
        .mut_subcommands(|c| c.after_long_help(help.clone()))
        .get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match init_threads().and_then(|_| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
