//! `smirk`: tokenize, train, audit and evaluate chemical-language tokenizers.
//!
//! Exit codes: 0 success, 2 out-of-vocabulary input under `--strict`, 64 usage
//! error, 74 I/O error, 1 anything else.

mod audit;
mod input;
mod ngram;
mod stats;
mod tokenize;
mod train;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub const EXIT_OOV: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_IO: u8 = 74;

/// A flag combination that parses but makes no sense.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(
    name = "smirk",
    version,
    about = "Chemical-language tokenizers and their evaluation"
)]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "SMIRK_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Tokenize(tokenize::Args),
    TrainGpe(train::Args),
    Audit(audit::Args),
    /// Write the generated coverage probe sets, one file per set.
    Probes(audit::ProbesArgs),
    #[command(subcommand)]
    Ngram(ngram::Command),
    Stats(stats::Args),
    Split(stats::SplitArgs),
    Synth(stats::SynthArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match cli.command {
        Command::Tokenize(a) => tokenize::run(a),
        Command::TrainGpe(a) => train::run(a),
        Command::Audit(a) => audit::run(a),
        Command::Probes(a) => audit::probes(a),
        Command::Ngram(c) => ngram::run(c),
        Command::Stats(a) => stats::run(a),
        Command::Split(a) => stats::split(a),
        Command::Synth(a) => stats::synth(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<smirk_core::Error>() {
            match e {
                smirk_core::Error::OutOfVocabulary { .. } | smirk_core::Error::Lex(_) => {
                    return EXIT_OOV
                }
                smirk_core::Error::InvalidConfig(_) => return EXIT_USAGE,
                smirk_core::Error::Io(_)
                | smirk_core::Error::Corpus { .. }
                | smirk_core::Error::MissingTable(_) => return EXIT_IO,
                _ => {}
            }
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            // a closed pipe downstream is not worth reporting
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                return 0;
            }
            return EXIT_IO;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            if code != 0 {
                eprintln!("smirk: {err:#}");
            }
            ExitCode::from(code)
        }
    }
}
