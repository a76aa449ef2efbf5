use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ma_isac::baselines::BaselineKind;
use ma_isac::harness::{cmd_montecarlo, cmd_solve, cmd_sweep, AngleGrid, HarnessError, RunFlags};

#[derive(Parser)]
#[command(name = "ma-isac", version, about = "Movable-antenna ISAC beampattern optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve realization 0 with one scheme and write solution.csv.
    Solve(Common),
    /// Run the campaign described in the config file.
    Montecarlo(Common),
    /// Solve realization 0 and write beampattern CSV and SVG.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Angle grid step in degrees.
        #[arg(long, default_value_t = 0.25)]
        grid_step: f64,
        #[arg(long, default_value_t = -90.0, allow_hyphen_values = true)]
        grid_min: f64,
        #[arg(long, default_value_t = 90.0, allow_hyphen_values = true)]
        grid_max: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario (and campaign) TOML file.
    #[arg(long)]
    config: PathBuf,
    /// pdd, fa, random or bound; comma-separated where several are allowed.
    #[arg(long, value_delimiter = ',')]
    scheme: Option<Vec<BaselineKind>>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write per-pass PDD traces.
    #[arg(long)]
    trace: bool,
    /// Worker threads for campaigns.
    #[arg(long)]
    workers: Option<usize>,
}

impl From<Common> for RunFlags {
    fn from(c: Common) -> Self {
        RunFlags {
            config: c.config,
            schemes: c.scheme,
            seed: c.seed,
            out: c.out,
            trace: c.trace,
            workers: c.workers,
        }
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Solve(c) => cmd_solve(&c.into()).map(drop),
        Command::Montecarlo(c) => cmd_montecarlo(&c.into()).map(drop),
        Command::Sweep {
            common,
            grid_step,
            grid_min,
            grid_max,
        } => {
            let grid = AngleGrid {
                min_deg: grid_min,
                max_deg: grid_max,
                step_deg: grid_step,
            };
            cmd_sweep(&common.into(), &grid).map(drop)
        }
    }
}

fn main() -> ExitCode {
    // usage errors share exit status 1 with config errors; 2 means solver failure
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
