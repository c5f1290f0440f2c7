use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ikb_cli::{execute, oracle, summarize, Format, Output, RunOptions, EXIT_IO, EXIT_OK, EXIT_PARSE};
use ikb_core::{parse_kb_named, KnowledgeBase};

#[derive(Parser)]
#[command(name = "ikb", version, about = "Build and solve influence diagrams from a knowledge base")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Answer a query (or read queries from standard input, one per line).
    Run(RunArgs),
    /// Parse and check a knowledge base, printing declaration counts.
    Validate { kb: PathBuf },
    /// Brute-force reference answer for a query.
    #[command(hide = true)]
    Oracle {
        kb: PathBuf,
        #[arg(short, long)]
        query: String,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        depth: Option<u64>,
    },
}

#[derive(Args)]
struct RunArgs {
    kb: PathBuf,
    /// Query text, e.g. "?dist (weather ?x monday)."
    #[arg(short, long, conflicts_with = "query_file")]
    query: Option<String>,
    #[arg(long)]
    query_file: Option<PathBuf>,
    /// Append the construction trace.
    #[arg(long)]
    trace: bool,
    /// Append the solver's transformations.
    #[arg(long)]
    explain: bool,
    /// Write the constructed diagram in DOT format.
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
    /// Enumerate up to K alternative models.
    #[arg(long, value_name = "K")]
    models: Option<usize>,
    /// Proof depth limit.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    depth: Option<u64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

fn read(path: &Path) -> Result<String, Output> {
    std::fs::read_to_string(path).map_err(|e| Output {
        stdout: String::new(),
        stderr: format!("{}: {e}\n", path.display()),
        code: EXIT_IO,
    })
}

fn load(path: &Path) -> Result<KnowledgeBase, Output> {
    let text = read(path)?;
    parse_kb_named(&text, &path.display().to_string()).map_err(|errs| Output {
        stdout: String::new(),
        stderr: errs.iter().map(|e| format!("{e}\n")).collect(),
        code: EXIT_PARSE,
    })
}

fn emit(out: &Output) {
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
}

fn run(args: RunArgs) -> Output {
    let kb = match load(&args.kb) {
        Ok(kb) => kb,
        Err(out) => return out,
    };
    let opts = RunOptions {
        trace: args.trace,
        explain: args.explain,
        dot: args.dot,
        models: args.models,
        depth: args.depth.map(|d| d as usize),
        format: match args.format {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
        },
    };
    let query = match (args.query, args.query_file) {
        (Some(q), _) => q,
        (None, Some(f)) => match read(&f) {
            Ok(q) => q,
            Err(out) => return out,
        },
        (None, None) => return repl(&kb, &opts),
    };
    execute(&kb, &query, &opts)
}

/// One query per line; the knowledge base is never modified between them.
fn repl(kb: &KnowledgeBase, opts: &RunOptions) -> Output {
    let stdin = io::stdin();
    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Output { stdout: String::new(), stderr: format!("stdin: {e}\n"), code: EXIT_IO },
        };
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        emit(&execute(kb, line, opts));
        let _ = io::stdout().flush();
    }
    Output { stdout: String::new(), stderr: String::new(), code: EXIT_OK }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { kb } => match load(&kb) {
            Ok(kb) => Output { stdout: summarize(&kb), stderr: String::new(), code: EXIT_OK },
            Err(out) => out,
        },
        Command::Oracle { kb, query, depth } => match load(&kb) {
            Ok(kb) => oracle(&kb, &query, depth.map(|d| d as usize)),
            Err(out) => out,
        },
    };
    emit(&out);
    ExitCode::from(out.code as u8)
}
