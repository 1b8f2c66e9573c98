//! Command line driver for the provlog engine: evaluates a program, writes
//! its output relations, and optionally opens the explain REPL or the HTTP
//! explorer over the result.

pub mod api;
pub mod facts;
pub mod json;
pub mod literal;
pub mod output;
pub mod render;
pub mod repl;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use provlog::engine::dump_instrumented;
use provlog::oracle::{self, Budget, OracleError};
use provlog::{explain, parse_program, Database, GroundAtom, Options};

#[derive(Parser, Debug)]
#[command(name = "provlog", version, about = "Datalog evaluation with minimal proof-tree annotations")]
pub struct Args {
    /// The Datalog program (`.dl`).
    pub program: PathBuf,
    /// Directory holding `<relation>.facts` for every `.input` relation.
    #[arg(short = 'F', long, value_name = "DIR")]
    pub facts: Option<PathBuf>,
    /// Directory receiving `<relation>.csv` for every `.output` relation.
    #[arg(short = 'D', long, value_name = "DIR", default_value = ".")]
    pub output: PathBuf,
    /// Worker threads for evaluation.
    #[arg(short = 'j', long, value_name = "N", default_value_t = 1)]
    pub jobs: usize,
    /// Plain semi-naive evaluation without rule ids and heights.
    #[arg(long)]
    pub no_provenance: bool,
    /// Print evaluation statistics as one JSON object.
    #[arg(long)]
    pub stats: bool,
    /// Enter the explain REPL after evaluation.
    #[arg(long)]
    pub explain: bool,
    /// Cross-check the result against the reference evaluator (small inputs).
    #[arg(long)]
    pub oracle: bool,
    /// Print the strata, one per line, before evaluating.
    #[arg(long)]
    pub dump_strata: bool,
    /// Print the rules with their annotation arguments made explicit.
    #[arg(long)]
    pub dump_instrumented: bool,
    /// Serve the HTTP explorer on 127.0.0.1:PORT after evaluation.
    #[arg(long, value_name = "PORT")]
    pub serve: Option<u16>,
}

/// Exit status for a completed run.
pub const EXIT_OK: i32 = 0;
/// Bad arguments, unreadable or invalid input.
pub const EXIT_USER: i32 = 1;
/// An internal consistency check failed.
pub const EXIT_INTERNAL: i32 = 2;

enum Failure {
    User(String),
    Internal(String),
}

fn user(e: impl std::fmt::Display) -> Failure {
    Failure::User(e.to_string())
}

pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write, echo: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                EXIT_OK
            } else {
                let _ = write!(err, "{e}");
                EXIT_USER
            };
        }
    };
    match execute(&args, input, out, echo) {
        Ok(()) => EXIT_OK,
        Err(Failure::User(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USER
        }
        Err(Failure::Internal(m)) => {
            let _ = writeln!(err, "internal error: {m}");
            EXIT_INTERNAL
        }
    }
}

fn execute(args: &Args, input: &mut dyn BufRead, out: &mut dyn Write, echo: bool) -> Result<(), Failure> {
    if args.explain && args.serve.is_some() {
        return Err(user("--explain and --serve cannot be combined"));
    }
    if args.jobs == 0 {
        return Err(user("--jobs must be at least 1"));
    }
    let path = &args.program;
    let source = std::fs::read_to_string(path).map_err(|e| user(format!("cannot read {}: {e}", path.display())))?;
    let program = parse_program(&source).map_err(|e| user(format!("{}:{e}", path.display())))?;
    let options = Options {
        provenance: !args.no_provenance,
        jobs: args.jobs,
        ..Options::default()
    };
    let mut db = Database::new(program, options).map_err(user)?;
    if let Some(dir) = &args.facts {
        facts::load_inputs(&mut db, dir).map_err(user)?;
    }
    let io = |e: std::io::Error| user(format!("writing output: {e}"));
    if args.dump_strata {
        let p = db.program();
        for (i, s) in db.strata().strata.iter().enumerate() {
            let names: Vec<&str> = s.relations.iter().map(|r| p.relation(*r).name.as_str()).collect();
            writeln!(out, "{i}: {}", names.join(" ")).map_err(io)?;
        }
    }
    if args.dump_instrumented {
        write!(out, "{}", dump_instrumented(db.program())).map_err(io)?;
    }

    let inputs = args.oracle.then(|| stored_heights(&db));
    db.evaluate().map_err(user)?;
    if !db.stats().update_bound_holds() {
        return Err(Failure::Internal("annotation updates exceed tuples × max height".into()));
    }
    if let Some(inputs) = inputs {
        cross_check(&db, &inputs)?;
    }
    if db.options().provenance {
        explain::prepare(&mut db);
    }
    output::write_outputs(&db, &args.output)
        .map_err(|e| user(format!("cannot write to {}: {e}", args.output.display())))?;
    if args.stats {
        let s = serde_json::to_string(&json::StatsJson::from(db.stats())).expect("stats serialize");
        writeln!(out, "{s}").map_err(io)?;
    }
    if args.explain {
        repl::run(&mut repl::Repl::new(&db), input, &mut *out, echo).map_err(io)?;
    }
    if let Some(port) = args.serve {
        out.flush().map_err(io)?;
        let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Internal(e.to_string()))?;
        rt.block_on(api::serve(Arc::new(db), port))
            .map_err(|e| user(format!("cannot serve on port {port}: {e}")))?;
    }
    Ok(())
}

fn stored_heights(db: &Database) -> oracle::Heights {
    db.program()
        .rel_ids()
        .flat_map(|r| db.tuples(r))
        .map(|(t, a)| (t, a.height))
        .collect()
}

/// Compares every stored tuple (and, with provenance, its height) against
/// the reference evaluation started from the same inputs.
fn cross_check(db: &Database, inputs: &oracle::Heights) -> Result<(), Failure> {
    let expected = match oracle::minimal_heights(db.program(), inputs, Budget::default()) {
        Ok(h) => h,
        Err(OracleError::BudgetExceeded) => return Err(user("input too large for --oracle")),
        Err(e) => return Err(user(e)),
    };
    let got: BTreeMap<GroundAtom, u32> = stored_heights(db);
    let p = db.program();
    let show = |t: &GroundAtom| p.display_ground(t).to_string();
    for (t, h) in &expected {
        match got.get(t) {
            None => return Err(Failure::Internal(format!("oracle derives {} but the engine does not", show(t)))),
            Some(g) if db.options().provenance && g != h => {
                return Err(Failure::Internal(format!("{} has height {g}, oracle says {h}", show(t))))
            }
            _ => {}
        }
    }
    if let Some(t) = got.keys().find(|t| !expected.contains_key(*t)) {
        return Err(Failure::Internal(format!("engine derives {} but the oracle does not", show(t))));
    }
    Ok(())
}
