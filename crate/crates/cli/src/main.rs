use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nlsk::cli::{execute, Command, RunConfig};
use nlsk::Error;

/// Radial NLS laboratory: ground state, functionals, single runs,
/// dichotomy campaigns and lemma suites, all driven by a config file.
#[derive(Debug, Parser)]
#[command(name = "nlsk", version)]
struct Args {
    /// ground-state, functionals, classify, evolve, campaign or lemmas;
    /// may instead be given as `command` in the [run] section.
    command: Option<String>,

    /// Config file, or a previous run's manifest.json to reproduce it.
    #[arg(long)]
    config: PathBuf,

    /// Output directory (overrides `out` in [run]).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for campaigns; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("nlsk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(args: &Args) -> Result<i32, Error> {
    let command = args.command.as_deref().map(str::parse::<Command>).transpose()?;
    let mut cfg = RunConfig::from_file(&args.config, command)?;
    cfg.verbose |= args.verbose;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| Error::Config("no output directory (pass --out or set `out` in [run])".into()))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| execute(&cfg, &out))
}
