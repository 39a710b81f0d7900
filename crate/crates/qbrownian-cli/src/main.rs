//! Batch driver for the two-state heat-bath simulator.
//!
//! Subcommands:
//! * `run <preset>` — execute one of the canned experiments (`fig1`,
//!   `fig2`, `fig3`, `rates`, `custom`) and write CSV/JSON artifacts.
//! * `validate <config>` — parse a config file and echo the effective
//!   parameters, including the derived rate constants.
//!
//! Configuration precedence: built-in defaults, then the `--config`
//! file (flat `key = value` lines), then explicit flags.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical abort,
//! 1 other runtime errors. `SIM_THREADS` caps the worker-thread count;
//! results are identical for any value.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qbrownian::presets::{run_preset, Preset, RunConfig};
use qbrownian::Error;

#[derive(Parser)]
#[command(
    name = "qbrownian",
    version,
    about = "Stochastic two-state dynamics in a classical heat bath: \
             ensemble runs, rate tables, and dissipation records"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset and write its artifacts to the output directory.
    Run {
        /// One of: fig1, fig2, fig3, rates, custom.
        preset: String,
        /// Flat `key = value` config file applied over the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (created if missing).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Master seed for the trajectory noise substreams.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of trajectories in the ensemble.
        #[arg(long)]
        n_trajectories: Option<usize>,
        /// Initial tipping angle in radians, in [0, 2π).
        #[arg(long)]
        phi: Option<f64>,
        /// Simulated horizon in seconds.
        #[arg(long)]
        t_max: Option<f64>,
        /// Integrator time step in seconds.
        #[arg(long)]
        dt: Option<f64>,
        /// Level splitting as an angular frequency (rad/s).
        #[arg(long)]
        omega: Option<f64>,
        /// Dimensionless friction coefficient.
        #[arg(long)]
        alpha: Option<f64>,
        /// Bath temperature in kelvin.
        #[arg(long)]
        temperature: Option<f64>,
        /// Record every N-th step.
        #[arg(long)]
        record_stride: Option<usize>,
        /// Turn the stochastic force off (friction stays on).
        #[arg(long)]
        noiseless: bool,
        /// Shrink to 200 trajectories over 0.1 ms.
        #[arg(long)]
        quick: bool,
    },
    /// Parse a config file and echo the effective parameters.
    Validate {
        /// Flat `key = value` config file.
        config: PathBuf,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        // Anything wrong with the requested configuration.
        Error::InvalidParameter { .. } | Error::Parse { .. } => 2,
        // The integration itself went non-finite.
        Error::NumericalAbort { .. } | Error::TrajectoryFailed { .. } => 3,
        _ => 1,
    }
}

fn install_thread_pool() -> Result<(), Error> {
    let Ok(raw) = std::env::var("SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().map_err(|_| Error::InvalidParameter {
        name: "SIM_THREADS",
        message: format!("expected a positive integer, got `{raw}`"),
    })?;
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "SIM_THREADS",
            message: "worker count must be at least 1".into(),
        });
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidState(format!("cannot install thread pool: {e}")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    preset: String,
    config: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    n_trajectories: Option<usize>,
    phi: Option<f64>,
    t_max: Option<f64>,
    dt: Option<f64>,
    omega: Option<f64>,
    alpha: Option<f64>,
    temperature: Option<f64>,
    record_stride: Option<usize>,
    noiseless: bool,
    quick: bool,
) -> Result<(), Error> {
    let preset: Preset = preset.parse()?;
    let mut cfg = RunConfig::new(preset);
    if let Some(path) = &config {
        cfg.apply_config_file(path)?;
    }
    // Flags override the file; the positional preset is also explicit.
    cfg.preset = preset;
    if let Some(v) = out_dir {
        cfg.out_dir = v;
    }
    if let Some(v) = seed {
        cfg.master_seed = v;
    }
    if let Some(v) = n_trajectories {
        cfg.n_trajectories = v;
    }
    if let Some(v) = phi {
        cfg.phi = Some(v);
    }
    if let Some(v) = t_max {
        cfg.t_max = Some(v);
    }
    if let Some(v) = dt {
        cfg.dt = v;
    }
    if let Some(v) = omega {
        cfg.omega = v;
    }
    if let Some(v) = alpha {
        cfg.alpha = v;
    }
    if let Some(v) = temperature {
        cfg.temperature = v;
    }
    if let Some(v) = record_stride {
        cfg.record_stride = Some(v);
    }
    if noiseless {
        cfg.noiseless = true;
    }
    if quick {
        cfg.quick = true;
    }

    let outcome = run_preset(&cfg)?;
    for line in &outcome.lines {
        println!("{line}");
    }
    println!("wrote {} file(s):", outcome.files.len());
    for file in &outcome.files {
        println!("  {}", file.display());
    }
    Ok(())
}

fn cmd_validate(config: PathBuf) -> Result<(), Error> {
    let mut cfg = RunConfig::new(Preset::Custom);
    cfg.apply_config_file(&config)?;
    cfg.check()?;
    for line in cfg.describe()? {
        println!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = install_thread_pool().and_then(|()| match cli.command {
        Command::Run {
            preset,
            config,
            out_dir,
            seed,
            n_trajectories,
            phi,
            t_max,
            dt,
            omega,
            alpha,
            temperature,
            record_stride,
            noiseless,
            quick,
        } => cmd_run(
            preset,
            config,
            out_dir,
            seed,
            n_trajectories,
            phi,
            t_max,
            dt,
            omega,
            alpha,
            temperature,
            record_stride,
            noiseless,
            quick,
        ),
        Command::Validate { config } => cmd_validate(config),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
