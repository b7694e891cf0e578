use std::io::Write;
use std::process::ExitCode;

use chainphase::commands::{self, Report, RunConfig, EXIT_FAILURE};
use chainphase::input::{self, Source};
use chainphase::json;
use clap::{Args, Parser, Subcommand};

/// Ground-space structure and phases of translation-invariant commuting chains.
///
/// Exit codes: 0 success, 1 input or numerical failure, 2 non-commuting
/// term, 3 commuting but not scale invariant.
#[derive(Parser)]
#[command(name = "chainphase", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Local term file ({"d": .., "matrix": ..}), `-` for stdin.
    #[arg(value_name = "INPUT", conflicts_with_all = ["model", "input"])]
    path: Option<String>,
    /// Builtin model: ising, fig2, zero(d) or canonical(k,d).
    #[arg(long, conflicts_with = "input")]
    model: Option<String>,
    /// Local term file, same as the positional argument.
    #[arg(long)]
    input: Option<String>,
    /// Chain lengths: `4`, `2..8` or a comma list.
    #[arg(long = "N", value_name = "LENGTHS")]
    lengths: Option<String>,
    #[arg(long, default_value_t = chainphase_core::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the interaction graph in DOT format here (`-` for stdout).
    #[arg(long, value_name = "OUT")]
    dot: Option<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "OUT")]
    json: Option<String>,
    /// Maximum number of enumerated cycles or ground states.
    #[arg(long, default_value_t = chainphase_core::groundspace::DEFAULT_CAP)]
    cap: usize,
    /// Maximum Hilbert space dimension for exact diagonalization.
    #[arg(long = "ed-cap", default_value_t = chainphase_core::ed::DEFAULT_ED_CAP)]
    ed_cap: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline and phase report.
    Analyze(Common),
    /// Block decomposition of the site space.
    Decompose(Common),
    /// Interaction graph as JSON, optionally DOT.
    Graph(Common),
    /// Ground-state degeneracy per chain length.
    Degeneracy(Common),
    /// Number of eigenstates at each energy.
    Census(Common),
    /// Explicit ground states as matrix product states.
    Ground(Common),
    /// Reduction of a scale-invariant term to its canonical representative.
    Canonical(Common),
    /// Maps between non-commuting and commuting terms.
    #[command(subcommand)]
    Bridge(Bridge),
    /// Check every prediction against exact diagonalization.
    Verify(Common),
}

#[derive(Subcommand)]
enum Bridge {
    /// Parent term of a random injective MPS.
    MpsParent {
        #[arg(long, default_value_t = 2)]
        chi: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Search for a positive definite X making the term commute.
    SolveX(Common),
    /// Conjugate by X^{1/2} on every site and certify the result.
    Commutify {
        /// X as a matrix or a `solve-x` report; searched for when absent.
        #[arg(long)]
        x: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

/// What to do when neither `--model` nor an input file is given.
#[derive(Copy, Clone, PartialEq, Eq)]
enum Missing {
    Fail,
    Stdin,
    /// The command builds its own term.
    Ignore,
}

fn config(c: &Common, missing: Missing) -> Result<RunConfig, String> {
    let source = match (&c.model, c.input.as_ref().or(c.path.as_ref()), missing) {
        (Some(m), _, _) => Source::Model(m.clone()),
        (None, Some(p), _) => Source::File(p.clone()),
        (None, None, Missing::Stdin) => Source::File("-".into()),
        (None, None, Missing::Ignore) => Source::Model(String::new()),
        (None, None, Missing::Fail) => return Err("give --model NAME or an input file".into()),
    };
    let mut cfg = RunConfig::new(source);
    cfg.tol = c.tol;
    cfg.seed = c.seed;
    cfg.cap = c.cap;
    cfg.ed_cap = c.ed_cap;
    cfg.lengths = c.lengths.as_deref().map(input::parse_lengths).transpose()?;
    cfg.validate()?;
    Ok(cfg)
}

fn write_out(path: &str, text: &str) -> Result<(), String> {
    if path == "-" {
        std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string())
    } else {
        std::fs::write(path, text).map_err(|e| format!("{path}: {e}"))
    }
}

fn emit(report: &Report, c: &Common) -> Result<(), String> {
    let doc = json::to_string(&report.json);
    if let (Some(path), Some(dot)) = (&c.dot, &report.dot) {
        write_out(path, dot)?;
    }
    let dot_on_stdout = c.dot.as_deref() == Some("-");
    match (&c.json, &report.text) {
        (Some(path), text) => {
            write_out(path, &doc)?;
            if let Some(t) = text {
                write_out("-", t)?;
            }
        }
        (None, Some(t)) => write_out("-", t)?,
        (None, None) if !dot_on_stdout => write_out("-", &doc)?,
        (None, None) => {}
    }
    if let Some(e) = report.json.get("error").and_then(|e| e.as_str()) {
        eprintln!("error: {e}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, missing) = match &cli.command {
        Command::Analyze(c)
        | Command::Decompose(c)
        | Command::Graph(c)
        | Command::Degeneracy(c)
        | Command::Census(c)
        | Command::Ground(c)
        | Command::Canonical(c)
        | Command::Verify(c) => (c, Missing::Fail),
        Command::Bridge(Bridge::MpsParent { common, .. }) => (common, Missing::Ignore),
        Command::Bridge(Bridge::SolveX(c)) | Command::Bridge(Bridge::Commutify { common: c, .. }) => (c, Missing::Stdin),
    };
    let cfg = match config(common, missing) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE as u8);
        }
    };
    let report = match &cli.command {
        Command::Analyze(_) => commands::analyze(&cfg),
        Command::Decompose(_) => commands::decompose(&cfg),
        Command::Graph(_) => commands::graph(&cfg),
        Command::Degeneracy(_) => commands::degeneracy_sweep(&cfg),
        Command::Census(_) => commands::census(&cfg),
        Command::Ground(_) => commands::ground(&cfg),
        Command::Canonical(_) => commands::canonical(&cfg),
        Command::Verify(_) => commands::verify(&cfg),
        Command::Bridge(Bridge::MpsParent { chi, .. }) => commands::mps_parent(&cfg, *chi),
        Command::Bridge(Bridge::SolveX(_)) => commands::solve_x(&cfg),
        Command::Bridge(Bridge::Commutify { x, .. }) => commands::commutify(&cfg, x.as_deref()),
    };
    if let Err(e) = emit(&report, common) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_FAILURE as u8);
    }
    ExitCode::from(report.code as u8)
}
