use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use candid::evaluator::{self, EvalOptions};
use candid::pipeline;
use candid::synth::{self, SceneSpec};
use candid::{Error, ErrorClass, Params};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "candid", version, about = "Adaptive sample-based background subtraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment a frame directory and write one mask per frame.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score a mask directory against ground truth and print CSV.
    Eval {
        #[arg(long)]
        masks: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Number of leading frames to exclude, typically the warm-up count.
        #[arg(long, default_value_t = 0)]
        skip: usize,
    },
    /// Render a synthetic scene into `<out>/input` and `<out>/groundtruth`.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time repeated runs over a frame directory held in memory.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
}

fn load_params(config: Option<&Path>) -> candid::Result<Params> {
    match config {
        Some(path) => Params::load(path),
        None => Ok(Params::default()),
    }
}

fn sequence_name(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn execute(command: Command) -> candid::Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Run { config, input, output } => {
            let params = load_params(config.as_deref())?;
            let report = pipeline::run(&params, &input, &output)?;
            let _ = write!(out, "{}{}", report.to_text(), report.timing_text());
        }
        Command::Eval { masks, gt, skip } => {
            let report = evaluator::evaluate_sequence(&masks, &gt, EvalOptions { skip, last: None })?;
            let rows = vec![(sequence_name(&masks), report.metrics)];
            let _ = evaluator::write_csv(&mut out, &rows);
        }
        Command::Synth { spec, out: dir } => {
            let scene = SceneSpec::load(&spec)?;
            let report = synth::generate(&scene, &dir.join("input"), &dir.join("groundtruth"))?;
            let _ = writeln!(
                out,
                "frames = {}\nnoise_samples = {}\nclamped = {}",
                report.frames, report.noise_samples, report.clamped
            );
        }
        Command::Bench { config, input, reps } => {
            if reps == 0 {
                return Err(Error::InvalidParam {
                    name: "reps",
                    message: "must be at least 1".into(),
                });
            }
            let params = load_params(config.as_deref())?;
            let report = pipeline::bench(&params, &input, reps)?;
            let _ = write!(out, "{}", report.to_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("candid: {e}");
            match e.class() {
                ErrorClass::Usage => ExitCode::from(EXIT_USAGE),
                ErrorClass::Data => ExitCode::from(EXIT_DATA),
            }
        }
    }
}
