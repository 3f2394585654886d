//! The `cartan` command line. Kept in the library so tests can drive it
//! without spawning a process.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::engine::{
    build_absorption, cartan_characters, compute_structure_data, run_loop, solve_absorption, CharacterReport,
    EngineError, Mode,
};
use crate::jet::{complete_to_order, crosscheck_characters, encode_gstructure, jet_characters, JetError};
use crate::problem::{load_problem, ProblemError, ProblemFile};
use crate::report::{render_characters, render_crosscheck, render_report, to_json};

#[derive(Debug, Parser)]
#[command(name = "cartan", version, about = "Cartan's equivalence method for G-structures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the equivalence loop to a final outcome.
    Run {
        #[command(flatten)]
        common: Common,
        /// Record per-loop wall-clock times in the report.
        #[arg(long)]
        timings: bool,
    },
    /// Reduced characters of the first loop, from the engine and from the jet encoding.
    Characters {
        #[command(flatten)]
        common: Common,
    },
    /// Compare the engine with Cartan-Kuranishi completion of the encoded system.
    Crosscheck {
        #[command(flatten)]
        common: Common,
    },
    /// Parse and validate a problem file.
    Check {
        problem: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem file.
    pub problem: PathBuf,
    /// Overrides `max_loops` from the file.
    #[arg(long)]
    pub max_loops: Option<usize>,
    /// Overrides `seed` from the file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the report as JSON to this path.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("cannot write {path}: {msg}")]
    Write { path: String, msg: String },
}

/// Exit status for failures that are not outcomes of the method.
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Serialize)]
struct CharactersOutput {
    title: String,
    engine: CharacterReport,
    jet: CharacterReport,
    agree: bool,
}

fn load(c: &Common) -> Result<ProblemFile, CliError> {
    let mut f = load_problem(&c.problem)?;
    if let Some(m) = c.max_loops {
        f.policy.max_loops = m;
    }
    if let Some(s) = c.seed {
        f.policy.seed = s;
    }
    Ok(f)
}

fn write_json(path: &Option<PathBuf>, body: &str) -> Result<(), CliError> {
    if let Some(p) = path {
        std::fs::write(p, body).map_err(|e| CliError::Write {
            path: p.display().to_string(),
            msg: e.to_string(),
        })?;
    }
    Ok(())
}

fn check(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let f = load_problem(path)?;
    let p = &f.problem;
    let _ = writeln!(out, "{}: ok", f.title);
    let _ = writeln!(out, "  dimension {}, group dimension {}", p.n(), p.group.r());
    let _ = writeln!(out, "  membership equations {}", p.group.membership().len());
    let _ = writeln!(out, "  checks passed: dimension, determinant, identity, closure");
    Ok(0)
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { common, timings } => {
            let mut f = load(&common)?;
            f.policy.timings = timings;
            let report = run_loop(f.problem, &f.title, &f.policy)?;
            write_json(&common.json, &to_json(&report))?;
            let _ = out.write_all(render_report(&report).as_bytes());
            Ok(report.outcome.exit_code())
        }
        Command::Characters { common } => {
            let f = load(&common)?;
            let seed = f.policy.seed;
            let data = compute_structure_data(&f.problem)?;
            let sol = solve_absorption(&build_absorption(&data, &Mode::Normalized).map_err(EngineError::from)?);
            let engine = cartan_characters(&data.mc, &sol, seed);
            let enc = encode_gstructure(&f.problem)?;
            let jet = jet_characters(&complete_to_order(&enc.system)?, seed)?;
            let agree = engine.s == jet.s && engine.r2 == jet.r2;
            let _ = writeln!(out, "{}", f.title);
            let _ = writeln!(out, "engine: {}", render_characters(&engine));
            let _ = writeln!(out, "jet:    {}", render_characters(&jet));
            let _ = writeln!(out, "{}", if agree { "agree" } else { "mismatch" });
            let body = CharactersOutput {
                title: f.title,
                engine,
                jet,
                agree,
            };
            write_json(&common.json, &to_json(&body))?;
            Ok(if agree { 0 } else { EXIT_ERROR })
        }
        Command::Crosscheck { common } => {
            let f = load(&common)?;
            let c = crosscheck_characters(&f.problem, &f.title, &f.policy)?;
            write_json(&common.json, &to_json(&c))?;
            let _ = out.write_all(render_crosscheck(&c).as_bytes());
            Ok(if c.agree { 0 } else { EXIT_ERROR })
        }
        Command::Check { problem } => check(&problem, out),
    }
}

/// Parses `args` (program name first) and runs; returns the exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_ERROR
                }
            };
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
