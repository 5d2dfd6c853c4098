use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qsr_core::cli::{self, load_config, Emitter, ExperimentPreset, Format, Overrides, Report, RunConfig};
use qsr_core::ensemble::{Execution, SweepAxis, SweepParameter};
use qsr_core::{Error, Result, Stepper};

/// Stochastic Bloch-equation simulator for a noise-driven flux qubit.
#[derive(Parser)]
#[command(name = "qsr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump one trajectory (t, X, Y, Z, I).
    Simulate(Common),
    /// Ensemble-averaged spectra for one configuration.
    Ensemble(Common),
    /// One ensemble per value of a swept parameter, plus the SR curve.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// noise_intensity_d (D), noise_tau (tau), drive_f_ac (f_ac) or drive_omega_d (omega_d).
        #[arg(long)]
        axis: SweepParameter,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Peak-search band "lo,hi" for the SR curve; defaults to [Ω/2, 3Ω/2].
        #[arg(long, value_delimiter = ',', num_args = 1)]
        band: Option<Vec<f64>>,
    },
    /// Run a figure preset: fig1a, fig1b, fig2a or fig2b.
    Preset {
        #[arg(value_name = "NAME")]
        preset: String,
        #[command(flatten)]
        common: Common,
    },
    /// Print the fully materialized configuration.
    Config(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config, or any file previously written by qsr.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// ito or heun.
    #[arg(long)]
    stepper: Option<Stepper>,
    /// Drive angular frequency.
    #[arg(long)]
    omega_d: Option<f64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Output file prefix.
    #[arg(long, default_value = "run")]
    name: String,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, stepper: self.stepper, omega_d: self.omega_d, n_realizations: self.realizations }
    }

    fn run_config(&self) -> Result<RunConfig> {
        let mut run = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        self.overrides().apply(&mut run)?;
        Ok(run)
    }

    fn execution(&self) -> Execution {
        Execution { threads: self.threads, ..Execution::default() }
    }

    fn emitter(&self, default_dir: &str, prefix: &str) -> Emitter {
        Emitter::new(self.out.clone().unwrap_or_else(|| PathBuf::from(default_dir)), prefix, self.format)
    }
}

fn execute(command: Command) -> Result<Report> {
    match command {
        Command::Simulate(c) => cli::simulate(&c.run_config()?, &c.emitter(".", &c.name)),
        Command::Ensemble(c) => cli::ensemble(&c.run_config()?, &c.execution(), &c.emitter(".", &c.name)),
        Command::Sweep { common: c, axis, values, band } => {
            let run = c.run_config()?;
            let band = match band.as_deref() {
                None => cli::default_band(&run),
                Some([lo, hi]) => (*lo, *hi),
                Some(_) => return Err(Error::InvalidConfig("--band takes two values: lo,hi".into())),
            };
            let axis = SweepAxis::new(axis, &values);
            cli::sweep_run(&run, &axis, band, &c.execution(), &c.emitter(".", &c.name))
        }
        Command::Preset { preset: name, common: c } => {
            if c.config.is_some() {
                return Err(Error::InvalidConfig("presets do not take --config".into()));
            }
            let mut preset = ExperimentPreset::resolve(name.parse()?);
            c.overrides().apply(&mut preset.run)?;
            let emitter = c.emitter(&name, &name);
            cli::run_preset(&preset, &c.execution(), &emitter)
        }
        Command::Config(c) => {
            print!("{}", c.run_config()?.echo());
            Ok(Report::default())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(report) => {
            for p in &report.paths {
                eprintln!("wrote {}", p.display());
            }
            for (value, err) in &report.failures {
                eprintln!("error: sweep point {value}: {err}");
            }
            match report.first_failure() {
                Some(err) => ExitCode::from(cli::exit_code(err) as u8),
                None => ExitCode::SUCCESS,
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(cli::exit_code(&err) as u8)
        }
    }
}
