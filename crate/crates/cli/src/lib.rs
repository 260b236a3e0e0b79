//! Configuration, reports and subcommands of the `hydrostab` command-line tool.
//!
//! Exit codes of the binary: `0` success, `1` error, `2` the analysis ran
//! but the verdict is negative (not pseudo-stable, or a verification check
//! exceeded its threshold).

pub mod commands;
pub mod config;
pub mod report;

pub use config::{inertia_from_mesh, AnalysisConfig};

use anyhow::{bail, Context, Result};

/// Applies a `KEY=VALUE` tolerance override.
pub fn apply_tolerance_override(config: &mut AnalysisConfig, arg: &str) -> Result<()> {
    let (key, value) = arg.split_once('=').with_context(|| format!("expected KEY=VALUE, got '{arg}'"))?;
    let value: f64 = value.trim().parse().with_context(|| format!("'{value}' is not a number"))?;
    if !(value > 0.0 && value.is_finite()) {
        bail!("tolerance {key} must be positive (got {value})");
    }
    let t = &mut config.tolerances;
    match key.trim() {
        "equilibrium" => t.equilibrium.tolerance = value,
        "rtol" => t.integrator.rtol = value,
        "atol" => t.integrator.atol = value,
        "loop_work" => t.verification.loop_work = value,
        "gradient" => t.verification.gradient = value,
        "hessian" => t.verification.hessian = value,
        "hessian_symmetry" => t.verification.hessian_symmetry = value,
        other => bail!(
            "unknown tolerance '{other}' (expected equilibrium, rtol, atol, loop_work, gradient, hessian or hessian_symmetry)"
        ),
    }
    Ok(())
}
