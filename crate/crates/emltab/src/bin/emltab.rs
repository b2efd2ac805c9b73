//! Command-line front end: satisfiability checking with tableau inspection,
//! model checking against model files, DOT export, benchmarking, and the
//! brute-force oracle.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use emltab::bench::{render_csv, render_summary, run_bench, DEFAULT_TIMEOUT_MS};
use emltab::expansion::CutMode;
use emltab::formula::{render, Formula, Symbols};
use emltab::gen::{FormulaGen, GenParams};
use emltab::semantics::{
    brute_force_sat, check, hintikka_from_tableau, parse_model, pseudo_model_from_hintikka,
    render_model,
};
use emltab::tableau::{decide, to_dot, Phase, Solved, Verdict};
use emltab::{parse, parse_set};

#[derive(Parser)]
#[command(
    name = "emltab",
    version,
    about = "Tableau satisfiability solver for coalitional epistemic logic"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Restricted,
    Unrestricted,
    NoCut,
}

impl From<ModeArg> for CutMode {
    fn from(m: ModeArg) -> CutMode {
        match m {
            ModeArg::Restricted => CutMode::Restricted,
            ModeArg::Unrestricted => CutMode::Unrestricted,
            ModeArg::NoCut => CutMode::NoCut,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PhaseArg {
    Pretableau,
    Initial,
    Final,
}

impl From<PhaseArg> for Phase {
    fn from(p: PhaseArg) -> Phase {
        match p {
            PhaseArg::Pretableau => Phase::Pretableau,
            PhaseArg::Initial => Phase::Initial,
            PhaseArg::Final => Phase::Final,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide satisfiability of a formula (exit 0 sat, 1 unsat, 2 error).
    Check {
        /// Formula text; alternative to --file.
        formula: Option<String>,
        /// File with one formula per line, treated as a set.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "restricted")]
        mode: ModeArg,
        /// Emit the verdict and statistics as JSON.
        #[arg(long)]
        json: bool,
        /// Write the tableau of the given phase as Graphviz DOT.
        #[arg(long, value_enum)]
        dot: Option<PhaseArg>,
        /// Output path for --dot (stdout if omitted).
        #[arg(long)]
        dot_out: Option<PathBuf>,
        /// On a sat verdict, print the extracted pseudo-model.
        #[arg(long)]
        model: bool,
        /// Print the state elimination log.
        #[arg(long)]
        trace: bool,
    },
    /// Evaluate a formula in a Kripke model file (exit 0 if it holds).
    Model {
        model_file: PathBuf,
        formula: String,
        /// Check at this state only; default reports every state.
        #[arg(long)]
        state: Option<String>,
    },
    /// Export a tableau phase as Graphviz DOT.
    Dot {
        formula: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "final")]
        phase: PhaseArg,
        #[arg(long, value_enum, default_value = "restricted")]
        mode: ModeArg,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Solve a corpus under several cut modes and report CSV.
    Bench {
        /// Number of random formulas to generate.
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        depth: u32,
        /// File with one formula per line instead of a generated corpus.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, value_enum, num_args = 1.., default_values_t = [ModeArg::Restricted, ModeArg::Unrestricted])]
        modes: Vec<ModeArg>,
        /// CSV output path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-formula timeout in milliseconds; the EMLTAB_TIMEOUT_MS
        /// environment variable overrides this.
        #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
        timeout_ms: u64,
    },
    /// Brute-force small-model search (exit 0 found, 1 none).
    Oracle {
        formula: String,
        #[arg(long, default_value_t = 3)]
        max_states: usize,
    },
}

#[derive(Serialize)]
struct JsonOut<'a> {
    verdict: &'a str,
    witness_label: Option<Vec<String>>,
    stats: emltab::tableau::Stats,
    mode: &'a str,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn read_input(
    formula: Option<String>,
    file: Option<PathBuf>,
    sym: &mut Symbols,
) -> Result<Vec<Arc<Formula>>, String> {
    match (formula, file) {
        (Some(_), Some(_)) => Err("give either a formula or --file, not both".into()),
        (Some(text), None) => Ok(vec![parse(&text, sym).map_err(|e| e.to_string())?]),
        (None, Some(path)) => {
            let text =
                fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let fs = parse_set(&text, sym).map_err(|e| e.to_string())?;
            if fs.is_empty() {
                return Err("input file holds no formulas".into());
            }
            Ok(fs)
        }
        (None, None) => Err("missing formula (or --file)".into()),
    }
}

fn warn_no_cut(mode: CutMode) {
    if mode == CutMode::NoCut {
        eprintln!(
            "warning: no-cut mode is a diagnostic; it is unsound and may report sat on unsatisfiable inputs"
        );
    }
}

fn witness_label(solved: &Solved, sym: &Symbols) -> Option<Vec<String>> {
    match solved.verdict {
        Verdict::Sat { witness } => Some(
            solved.states[witness]
                .iter()
                .map(|s| solved.ctx.render_signed(s, sym))
                .collect(),
        ),
        Verdict::Unsat => None,
    }
}

#[allow(clippy::too_many_arguments)]
fn run_check(
    formula: Option<String>,
    file: Option<PathBuf>,
    mode: CutMode,
    json: bool,
    dot: Option<PhaseArg>,
    dot_out: Option<PathBuf>,
    model: bool,
    trace: bool,
) -> ExitCode {
    let mut sym = Symbols::new();
    let formulas = match read_input(formula, file, &mut sym) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    warn_no_cut(mode);
    let solved = decide(&formulas, mode);

    if let Some(phase) = dot {
        let text = to_dot(&solved, phase.into(), &sym);
        match &dot_out {
            Some(path) => {
                if let Err(e) = fs::write(path, text) {
                    return fail(format!("{}: {e}", path.display()));
                }
            }
            None => print!("{text}"),
        }
    }
    if trace {
        eprint!("{}", solved.trace(&sym));
    }

    let verdict_str = if solved.verdict.is_sat() { "sat" } else { "unsat" };
    if json {
        let out = JsonOut {
            verdict: verdict_str,
            witness_label: witness_label(&solved, &sym),
            stats: solved.stats,
            mode: mode.as_str(),
        };
        println!("{}", serde_json::to_string(&out).expect("serializable"));
    } else {
        println!("{verdict_str}");
    }
    if model {
        match solved.verdict {
            Verdict::Sat { .. } => {
                let h = hintikka_from_tableau(&solved).expect("open tableau");
                match pseudo_model_from_hintikka(&h, &sym) {
                    Ok(m) => print!("{}", render_model(&m)),
                    Err(e) => return fail(e),
                }
            }
            Verdict::Unsat => eprintln!("no model: input is unsatisfiable"),
        }
    }
    if solved.verdict.is_sat() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_model(model_file: PathBuf, formula: String, state: Option<String>) -> ExitCode {
    let text = match fs::read_to_string(&model_file) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}", model_file.display())),
    };
    let m = match parse_model(&text) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let mut sym = Symbols::new();
    let f = match parse(&formula, &mut sym) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let states: Vec<usize> = match &state {
        Some(name) => match m.state_index(name) {
            Some(i) => vec![i],
            None => return fail(format!("unknown state '{name}'")),
        },
        None => (0..m.n_states()).collect(),
    };
    let mut any = false;
    for s in states {
        match check(&m, &sym, &f, s) {
            Ok(t) => {
                println!("{}: {}", m.state_names[s], t);
                any |= t;
            }
            Err(e) => return fail(e),
        }
    }
    if any {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_dot(
    formula: Option<String>,
    file: Option<PathBuf>,
    phase: PhaseArg,
    mode: CutMode,
    out: Option<PathBuf>,
) -> ExitCode {
    let mut sym = Symbols::new();
    let formulas = match read_input(formula, file, &mut sym) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    warn_no_cut(mode);
    let solved = decide(&formulas, mode);
    let text = to_dot(&solved, phase.into(), &sym);
    match out {
        Some(path) => {
            if let Err(e) = fs::write(&path, text) {
                return fail(format!("{}: {e}", path.display()));
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

fn run_bench_cmd(
    count: usize,
    seed: u64,
    depth: u32,
    file: Option<PathBuf>,
    modes: Vec<ModeArg>,
    out: Option<PathBuf>,
    timeout_ms: u64,
) -> ExitCode {
    let timeout_ms = std::env::var("EMLTAB_TIMEOUT_MS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(timeout_ms);
    let (corpus, sym) = match file {
        Some(path) => {
            let text = match fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => return fail(format!("{}: {e}", path.display())),
            };
            let mut sym = Symbols::new();
            match parse_set(&text, &mut sym) {
                Ok(fs) => (fs, sym),
                Err(e) => return fail(e),
            }
        }
        None => {
            let mut g =
                FormulaGen::new(GenParams::new(depth, &["a", "b", "c"], &["p", "q"], seed));
            let corpus: Vec<_> = (0..count).map(|_| g.next_formula()).collect();
            (corpus, g.symbols.clone())
        }
    };
    let modes: Vec<CutMode> = modes.into_iter().map(CutMode::from).collect();
    for &m in &modes {
        warn_no_cut(m);
    }
    let (records, summary) = run_bench(&corpus, &sym, &modes, Duration::from_millis(timeout_ms));
    let csv = render_csv(&records);
    match out {
        Some(path) => {
            if let Err(e) = fs::write(&path, csv) {
                return fail(format!("{}: {e}", path.display()));
            }
        }
        None => print!("{csv}"),
    }
    eprint!("{}", render_summary(&records, &summary));
    ExitCode::SUCCESS
}

fn run_oracle(formula: String, max_states: usize) -> ExitCode {
    let mut sym = Symbols::new();
    let f = match parse(&formula, &mut sym) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    match brute_force_sat(&f, &sym, max_states) {
        Ok(Some((m, s))) => {
            println!(
                "model found, {} true at {}",
                render(&f, &sym),
                m.state_names[s]
            );
            print!("{}", render_model(&m));
            ExitCode::SUCCESS
        }
        Ok(None) => {
            println!("no model with up to {max_states} states");
            ExitCode::from(1)
        }
        Err(e) => fail(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check {
            formula,
            file,
            mode,
            json,
            dot,
            dot_out,
            model,
            trace,
        } => run_check(formula, file, mode.into(), json, dot, dot_out, model, trace),
        Command::Model {
            model_file,
            formula,
            state,
        } => run_model(model_file, formula, state),
        Command::Dot {
            formula,
            file,
            phase,
            mode,
            out,
        } => run_dot(formula, file, phase, mode.into(), out),
        Command::Bench {
            count,
            seed,
            depth,
            file,
            modes,
            out,
            timeout_ms,
        } => run_bench_cmd(count, seed, depth, file, modes, out, timeout_ms),
        Command::Oracle {
            formula,
            max_states,
        } => run_oracle(formula, max_states),
    }
}
