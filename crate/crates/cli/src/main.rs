use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hydrostab::io::write_stl;
use hydrostab_cli::commands;
use hydrostab_cli::config::SimulationMode;
use hydrostab_cli::report::Report;
use hydrostab_cli::{apply_tolerance_override, AnalysisConfig};
use nalgebra::Vector3;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "hydrostab", version, about = "Hydrostatic stability, dynamics and normal modes of floating bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON analysis configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the path in the config, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance override, e.g. `--tol rtol=1e-11` (repeatable).
    #[arg(long = "tol", value_name = "KEY=VALUE")]
    tol: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<AnalysisConfig> {
        let mut config = AnalysisConfig::load(&self.config)?;
        for arg in &self.tol {
            apply_tolerance_override(&mut config, arg)?;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium, metacentric heights, pseudo-stability and modes (JSON report).
    Analyze(Common),
    /// Integrate the equations of motion (CSV trajectory).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<SimulationMode>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Normal modes, optionally at the equilibrium stored in an analyze report.
    Modes {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "REPORT")]
        equilibrium: Option<PathBuf>,
    },
    /// Conservativeness, gradient, Hessian and invariance checks at random poses.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        poses: usize,
        #[arg(long, default_value_t = 20)]
        loops: usize,
    },
    /// Export the submerged solid at `zeta,theta,phi` (default: the equilibrium) as STL.
    Clip {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, value_name = "ZETA,THETA,PHI")]
        pose: Option<Vec<f64>>,
    },
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = writer(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze(common) => {
            let config = common.load()?;
            let report = commands::analyze(&config)?;
            write_json(&report, common.out.as_deref().or(config.outputs.report.as_deref()))?;
            Ok(if report.stability.pseudo_stable { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Simulate { common, mode, t_end, dt } => {
            let config = common.load()?;
            let mut sim = config.simulation.unwrap_or_default();
            if let Some(m) = mode {
                sim.mode = m;
            }
            sim.t_end = t_end.unwrap_or(sim.t_end);
            sim.dt = dt.unwrap_or(sim.dt);
            let trajectory = commands::simulate(&config, &sim)?;
            let mut out = writer(common.out.as_deref().or(config.outputs.trajectory.as_deref()))?;
            trajectory.write_csv(&mut out)?;
            out.flush()?;
            if let Some(c) = trajectory.conservation() {
                eprintln!(
                    "{} samples, {} steps; max energy drift {:e} J, max momentum drift [{:e}, {:e}, {:e}]",
                    trajectory.samples.len(),
                    trajectory.stats.accepted,
                    c.max_energy_drift,
                    c.max_momentum_drift[0],
                    c.max_momentum_drift[1],
                    c.max_momentum_drift[2]
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Modes { common, equilibrium } => {
            let config = common.load()?;
            let stored: Option<Report> = match &equilibrium {
                Some(path) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
                    Some(serde_json::from_str(&text).with_context(|| format!("invalid report {}", path.display()))?)
                }
                None => None,
            };
            let report = commands::modes(&config, stored.as_ref())?;
            write_json(&report, common.out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { common, seed, poses, loops } => {
            let config = common.load()?;
            let report = commands::verify(&config, seed, poses, loops)?;
            write_json(&report, common.out.as_deref())?;
            Ok(if report.summary.passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Clip { common, pose } => {
            let config = common.load()?;
            let Some(path) = common.out.as_deref().or(config.outputs.clipped_mesh.as_deref()).map(Path::to_path_buf) else {
                bail!("clip needs --out or outputs.clipped_mesh");
            };
            let pose = match pose.as_deref() {
                None => None,
                Some(&[zeta, theta, phi]) => Some(Vector3::new(zeta, theta, phi)),
                Some(_) => bail!("--pose takes exactly three values: zeta,theta,phi"),
            };
            let (summary, triangles) = commands::clip(&config, pose)?;
            write_stl(&path, &triangles)?;
            write_json(&summary, None)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
