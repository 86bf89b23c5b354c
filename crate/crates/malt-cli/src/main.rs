//! Command-line front end: consistency, solving, algebra checks, the
//! built-in demo, and fixture management. Results go to stdout as JSON,
//! diagnostics to stderr. Exit codes: 0 success, 1 solver answered NO,
//! 2 input or validation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use malt_core::error::Error;
use malt_core::json as schema;
use malt_core::{bulatov, fixtures, instance, maltsev};
use malt_core::{Instance, Term};

#[derive(Parser)]
#[command(name = "malt", version, about = "constraint satisfaction over finite idempotent algebras")]
struct Cli {
    /// Enable the paranoid re-validation paths inside the solvers.
    #[arg(long, global = true)]
    debug_audit: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (2,3)-consistency on a raw instance and print the standard
    /// instance.
    Consistency { raw: PathBuf },

    /// Find the canonical solution of a nonempty standard instance over a
    /// 2-semilattice.
    Bulatov {
        instance: PathBuf,
        /// Dot term JSON; defaults to the fixture's term when the instance
        /// names a fixture algebra.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Include the reduction trace in the output.
        #[arg(long)]
        trace: bool,
    },

    /// Decide a standard instance with the quotient-then-block algorithm.
    Solve {
        instance: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Block solver to run on the restricted instance.
        #[arg(long, default_value = "brute")]
        block_solver: String,
        #[arg(long)]
        trace: bool,
    },

    /// Report the solver hypotheses for an algebra and dot term.
    CheckAlgebra {
        algebra: PathBuf,
        #[arg(long)]
        dot: PathBuf,
        /// Write the dot digraph of the algebra in DOT format to this path.
        #[arg(long)]
        digraph_dot: Option<PathBuf>,
    },

    /// Built-in demonstrations.
    Demo {
        #[command(subcommand)]
        what: DemoCommand,
    },

    /// List, show, or generate from the built-in fixtures.
    Fixtures {
        #[command(subcommand)]
        what: FixturesCommand,
    },
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Run the built-in counterexample pipeline: the oracle finds a solution
    /// while the algorithm, lacking the exchange identity, answers NO.
    Counterexample,
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Print the fixture names.
    List,
    /// Print a fixture's algebra and dot term.
    Show { name: String },
    /// Generate a random raw instance over a fixture algebra.
    Gen {
        name: String,
        #[arg(long, default_value_t = 4)]
        vars: usize,
        #[arg(long, default_value_t = 4)]
        constraints: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            let payload = json!({ "error": { "code": e.code(), "message": e.to_string() } });
            eprintln!("{payload:#}");
            ExitCode::from(2)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<(Instance, Option<Term>), Error> {
    let j: schema::InstanceJson = read_json(path)?;
    let fixture_dot = match &j.algebra {
        schema::AlgebraRef::Name(name) => Some(fixtures::fixture(name)?.dot),
        schema::AlgebraRef::Inline(_) => None,
    };
    Ok((schema::instance_from_json(&j)?, fixture_dot))
}

fn load_dot(path: &Option<PathBuf>, fixture_dot: Option<Term>) -> Result<Term, Error> {
    match path {
        Some(p) => {
            let j: schema::TermJson = read_json(p)?;
            Ok(schema::term_from_json(&j))
        }
        None => fixture_dot.ok_or_else(|| {
            Error::MalformedInput(
                "no --dot given and the instance does not name a fixture algebra".into(),
            )
        }),
    }
}

fn print(value: &Value) {
    println!("{value:#}");
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Consistency { raw } => {
            let j: schema::RawInstanceJson = read_json(raw)?;
            let raw = schema::raw_instance_from_json(&j)?;
            let inst = instance::two_three_consistency(&raw)?;
            print(&serde_json::to_value(schema::instance_to_json(&inst)).unwrap());
            Ok(ExitCode::SUCCESS)
        }
        Command::Bulatov { instance, dot, trace } => {
            let (inst, fixture_dot) = load_instance(instance)?;
            let dot = load_dot(dot, fixture_dot)?;
            let (assignment, reduction) =
                bulatov::bulatov_solution_with(&inst, &dot, cli.debug_audit)?;
            let mut out = json!({
                "assignment": schema::assignment_to_json(&assignment, inst.variables()),
            });
            if *trace {
                out.as_object_mut()
                    .unwrap()
                    .insert("trace".into(), serde_json::to_value(&reduction).unwrap());
            }
            print(&out);
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            instance,
            dot,
            block_solver,
            trace,
        } => {
            let (inst, fixture_dot) = load_instance(instance)?;
            let dot = load_dot(dot, fixture_dot)?;
            let solver = match block_solver.as_str() {
                "brute" => maltsev::default_block_solver(),
                other => {
                    return Err(Error::MalformedInput(format!(
                        "unknown block solver `{other}` (available: brute)"
                    )));
                }
            };
            let outcome = maltsev::main_solve_with(&inst, &dot, &solver, cli.debug_audit)?;
            print(&schema::solve_outcome_to_json(&outcome, inst.variables(), *trace));
            Ok(if outcome.solvable {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::CheckAlgebra {
            algebra,
            dot,
            digraph_dot,
        } => {
            let aj: schema::AlgebraJson = read_json(algebra)?;
            let alg = schema::algebra_from_json(&aj)?;
            let dj: schema::TermJson = read_json(dot)?;
            let dot = schema::term_from_json(&dj);
            let report = maltsev::hypothesis_check(&alg, &dot)?;
            if let Some(path) = digraph_dot {
                let dg = malt_core::build_digraph(&alg, &dot)?;
                std::fs::write(path, dg.to_dot())
                    .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
            }
            print(&schema::hypothesis_report_to_json(&report));
            Ok(ExitCode::SUCCESS)
        }
        Command::Demo { what } => match what {
            DemoCommand::Counterexample => {
                let (algebra, dot, inst) = maltsev::build_counterexample()?;
                let oracle = inst.brute_force_solve()?;
                let solver = maltsev::default_block_solver();
                let outcome = maltsev::main_solve_with(&inst, &dot, &solver, cli.debug_audit)?;
                let out = json!({
                    "algebra": schema::algebra_to_json(&algebra),
                    "dot": schema::term_to_json(&dot),
                    "instance": schema::instance_to_json(&inst),
                    "oracle_solution": oracle
                        .map(|s| schema::assignment_to_json(&s, inst.variables())),
                    "algorithm": schema::solve_outcome_to_json(&outcome, inst.variables(), false),
                });
                print(&out);
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Fixtures { what } => match what {
            FixturesCommand::List => {
                let entries: Vec<Value> = fixtures::all_fixtures()
                    .iter()
                    .map(|f| json!({ "name": f.name, "description": f.description }))
                    .collect();
                print(&json!(entries));
                Ok(ExitCode::SUCCESS)
            }
            FixturesCommand::Show { name } => {
                let entry = fixtures::fixture(name)?;
                print(&json!({
                    "name": entry.name,
                    "description": entry.description,
                    "algebra": schema::algebra_to_json(&entry.algebra),
                    "dot": schema::term_to_json(&entry.dot),
                }));
                Ok(ExitCode::SUCCESS)
            }
            FixturesCommand::Gen {
                name,
                vars,
                constraints,
                seed,
            } => {
                if *vars == 0 {
                    return Err(Error::MalformedInput("--vars must be at least 1".into()));
                }
                let entry = fixtures::fixture(name)?;
                let mut rng = fixtures::seeded_rng(*seed);
                let raw = fixtures::random_raw_instance(
                    &Arc::new(entry.algebra),
                    *vars,
                    *constraints,
                    &mut rng,
                );
                print(&serde_json::to_value(schema::raw_instance_to_json(&raw)).unwrap());
                Ok(ExitCode::SUCCESS)
            }
        },
    }
}
