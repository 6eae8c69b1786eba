use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ns_torus::estimates::{calibrate, calibrate_constants};
use ns_torus::experiment::{
    self, scenarios, ExperimentError, ExperimentSpec, SweepGrid, EXIT_PASS,
};
use ns_torus::grid::TorusGrid;

/// Pseudo-spectral Navier-Stokes runs on the periodic box, checked against
/// the planar decay and three-dimensional stability estimates.
#[derive(Debug, Parser)]
#[command(name = "ns-torus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Source {
    /// Experiment configuration (TOML).
    #[arg(
        long,
        conflicts_with = "scenario",
        required_unless_present = "scenario"
    )]
    config: Option<PathBuf>,
    /// Name of a bundled scenario.
    #[arg(long)]
    scenario: Option<String>,
    /// Override the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's `out`, else runs/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Estimate tolerances from a second run at dt/2.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    dt_halving: Option<bool>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and check every estimate.
    Run(Source),
    /// Re-check the trajectories stored in a run directory.
    Verify { dir: PathBuf },
    /// Print the summary of a run directory.
    Report { dir: PathBuf },
    /// Estimate the functional-inequality constants on a grid.
    Calibrate {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = std::f64::consts::TAU)]
        length: f64,
        #[arg(long, default_value_t = 32)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Viscosity used to report c* and γ*.
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
    },
    /// Run a grid of experiments in parallel.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Comma-separated values of γ/γ*.
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1.0")]
        gamma_fractions: Vec<f64>,
        /// Comma-separated window lengths (default: the configured one).
        #[arg(long, value_delimiter = ',')]
        windows: Vec<f64>,
        /// Comma-separated multipliers of the perturbation forcing.
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        forcing_scales: Vec<f64>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// List the bundled scenarios, or print one.
    Scenarios { name: Option<String> },
}

fn load(source: &Source) -> Result<(ExperimentSpec, PathBuf), ExperimentError> {
    let text = match (&source.config, &source.scenario) {
        (Some(path), _) => std::fs::read_to_string(path)?,
        (None, Some(name)) => scenarios::require(name)?.to_string(),
        (None, None) => unreachable!("clap requires a source"),
    };
    let mut spec = ExperimentSpec::from_toml(&text)?;
    if let Some(seed) = source.seed {
        spec.seed = seed;
    }
    if let Some(flag) = source.dt_halving {
        spec.dt_halving = flag;
    }
    let spec = spec.resolve()?;
    let out = source
        .out
        .clone()
        .or_else(|| spec.out.clone())
        .unwrap_or_else(|| Path::new("runs").join(&spec.name));
    Ok((spec, out))
}

fn run(command: Command) -> Result<i32, ExperimentError> {
    match command {
        Command::Run(source) => {
            let (spec, out) = load(&source)?;
            let a = experiment::run_experiment(&spec, &out)?;
            print!("{}", a.summary.text);
            println!(
                "artifacts: {} (config {}, {:.1} s)",
                out.display(),
                &a.config_hash[..12],
                a.wall_clock_seconds
            );
            Ok(a.summary.exit_code)
        }
        Command::Verify { dir } => {
            let s = experiment::verify(&dir)?;
            print!("{}", s.text);
            Ok(s.exit_code)
        }
        Command::Report { dir } => {
            let s = experiment::emit_report(&dir)?;
            print!("{}", s.text);
            Ok(s.exit_code)
        }
        Command::Calibrate {
            n,
            length,
            samples,
            seed,
            nu,
        } => {
            let grid = TorusGrid::new(length, n, 3)?;
            let cal = calibrate_constants(&grid, samples, seed)?;
            let c = cal.constants;
            let c_star = calibrate::default_c_star(nu, &c);
            println!("c1 = {:e}", c.c1);
            println!("c3 = {:e}", c.c3);
            println!("c4 = {:e}", c.c4);
            println!("c5 = {:e}", c.c5);
            println!("c_star = {c_star:e}");
            println!("gamma_star = {:e}", calibrate::gamma_star(nu, &c, c_star));
            println!("window = {:e}", 4.0 * 2f64.ln() / c_star);
            Ok(EXIT_PASS)
        }
        Command::Sweep {
            source,
            gamma_fractions,
            windows,
            forcing_scales,
            parallel,
        } => {
            let (spec, out) = load(&source)?;
            let grid = SweepGrid {
                gamma_fractions,
                windows,
                forcing_scales,
            };
            let members = experiment::sweep(&spec, &grid, &out, parallel)?;
            let mut code = EXIT_PASS;
            for m in &members {
                println!("{:<48} {}", m.label, m.first_line);
                code = code.max(m.exit_code);
            }
            Ok(code)
        }
        Command::Scenarios { name } => {
            match name {
                Some(name) => print!("{}", scenarios::require(&name)?),
                None => scenarios::names().for_each(|n| println!("{n}")),
            }
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
