//! Analysis configuration files and their resolution into a body-frame model.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hydrostab::dynamics::BodyProperties;
use hydrostab::equilibrium::EquilibriumOptions;
use hydrostab::hydrostatics::FluidEnvironment;
use hydrostab::integrator::IntegratorOptions;
use hydrostab::io::load_mesh;
use hydrostab::mesh::{HullMesh, MeshTolerances};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// STL or OBJ hull; relative paths are taken from the config file's directory.
    pub mesh_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_density: Option<f64>,
    /// Mass center in mesh coordinates; defaults to the volume centroid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_of_gravity: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<InertiaInput>,
    #[serde(default = "default_fluid_density")]
    pub fluid_density: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    /// `(zeta0, theta0, phi0)` for the equilibrium search.
    #[serde(default)]
    pub initial_guess: [f64; 3],
    /// Port-starboard symmetry flag; detected from the vertices when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<bool>,
    /// The mesh file uses `+z` up; it is turned over to the `x3`-down convention.
    #[serde(default)]
    pub z_up: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_fluid_density() -> f64 {
    1025.0
}

fn default_gravity() -> f64 {
    9.81
}

/// Inertia tensor in mesh axes about `about` (mesh coordinates), or about
/// the mass center when `about` is absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertiaInput {
    pub tensor: [[f64; 3]; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub about: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub equilibrium: EquilibriumOptions,
    pub integrator: IntegratorOptions,
    pub mesh: MeshTolerances,
    pub verification: VerificationTolerances,
}

/// Pass thresholds of the verification suite (all relative).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerificationTolerances {
    pub loop_work: f64,
    pub gradient: f64,
    pub hessian: f64,
    pub hessian_symmetry: f64,
}

impl Default for VerificationTolerances {
    fn default() -> Self {
        Self {
            loop_work: 1e-6,
            gradient: 1e-5,
            hessian: 1e-5,
            hessian_symmetry: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMode {
    #[default]
    Full,
    Reduced,
}

/// Initial condition relative to the equilibrium and the run length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub t_end: f64,
    pub dt: f64,
    pub mode: SimulationMode,
    /// Added to the equilibrium `(zeta, theta, phi)`.
    pub displacement: [f64; 3],
    /// Initial `q_dot` in coordinate order `(xi, eta, zeta, psi, theta, phi)`.
    pub velocity: [f64; 6],
    /// Prescribed `(p_xi, p_eta, p_psi)`; overrides the cyclic entries of `velocity`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cyclic_momenta: Option<[f64; 3]>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            dt: 0.01,
            mode: SimulationMode::Full,
            displacement: [0.0; 3],
            velocity: [0.0; 6],
            cyclic_momenta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clipped_mesh: Option<PathBuf>,
}

impl AnalysisConfig {
    /// Reads a JSON config; a relative `mesh_path` is resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: Self = serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        if config.mesh_path.is_relative() {
            if let Some(dir) = path.parent() {
                config.mesh_path = dir.join(&config.mesh_path);
            }
        }
        Ok(config)
    }

    pub fn environment(&self) -> Result<FluidEnvironment> {
        Ok(FluidEnvironment::new(self.fluid_density, self.gravity)?)
    }

    /// Loads the mesh and places the mass center at the body origin.
    pub fn resolve(&self) -> Result<Model> {
        let env = self.environment()?;
        let raw = load_mesh(&self.mesh_path, Some(false), self.tolerances.mesh)
            .with_context(|| format!("cannot load mesh {}", self.mesh_path.display()))?;
        let flip = if self.z_up {
            Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))
        } else {
            Matrix3::identity()
        };
        let mesh = if self.z_up { raw.rotated(&flip)? } else { raw };
        let (volume_mass, inertia_centroid, centroid) = inertia_from_mesh(&mesh, 1.0);

        let (mass, cog) = match (self.mass, self.uniform_density) {
            (Some(_), Some(_)) => bail!("give either mass or uniform_density, not both"),
            (None, None) => bail!("one of mass or uniform_density is required"),
            (Some(m), None) => {
                check_positive("mass", m)?;
                let cog = self.center_of_gravity.map_or(centroid, |c| flip * Vector3::from(c));
                (m, cog)
            }
            (None, Some(rho)) => {
                check_positive("uniform_density", rho)?;
                if self.center_of_gravity.is_some() {
                    bail!("center_of_gravity cannot be set for a uniform-density body (it is the volume centroid)");
                }
                (rho * volume_mass, centroid)
            }
        };

        let (inertia, inertia_shift) = match &self.inertia {
            Some(input) => {
                let tensor = flip * Matrix3::from_fn(|i, j| input.tensor[i][j]) * flip;
                match input.about {
                    Some(p) => {
                        let shift = -parallel_axis(mass, &(cog - flip * Vector3::from(p)));
                        (tensor + shift, Some(shift))
                    }
                    None => (tensor, None),
                }
            }
            None => {
                let shift = parallel_axis(mass, &(centroid - cog));
                let scaled = inertia_centroid * (mass / volume_mass);
                let moved = shift.amax() > 0.0;
                (scaled + shift, moved.then_some(shift))
            }
        };
        let body = BodyProperties::new(mass, inertia).context("inertia is not physical")?;

        let centered = mesh.translated(&-cog)?;
        let symmetric = self.symmetric.unwrap_or_else(|| centered.detect_symmetry());
        let mesh = centered
            .with_symmetry(symmetric)
            .context("symmetric = true, but the hull is not mirror-symmetric about the mass center plane")?;
        Ok(Model {
            mesh,
            body,
            env,
            center_of_gravity: cog,
            inertia_shift,
        })
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        bail!("{name} must be positive (got {value})");
    }
    Ok(())
}

/// `m (|r|^2 E - r r^T)`: inertia about a point minus inertia about the mass
/// center, `r` being the offset between the two.
pub fn parallel_axis(mass: f64, r: &Vector3<f64>) -> Matrix3<f64> {
    mass * (Matrix3::identity() * r.norm_squared() - r * r.transpose())
}

/// Uniform-density mass, inertia about the volume centroid, and the centroid.
pub fn inertia_from_mesh(mesh: &HullMesh, density: f64) -> (f64, Matrix3<f64>, Vector3<f64>) {
    let props = mesh.mass_properties(density);
    (props.mass, props.inertia, props.centroid)
}

/// A configured body: hull with `G` at the origin, mass properties and fluid.
#[derive(Debug, Clone)]
pub struct Model {
    pub mesh: HullMesh,
    pub body: BodyProperties,
    pub env: FluidEnvironment,
    /// `G` in the (possibly turned-over) mesh coordinates.
    pub center_of_gravity: Vector3<f64>,
    /// Parallel-axis term added to the supplied or computed inertia.
    pub inertia_shift: Option<Matrix3<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use hydrostab::shapes;

    #[test]
    fn unit_cube_inertia() {
        let (m, i, c) = inertia_from_mesh(&shapes::cuboid(1.0, 1.0, 1.0), 1.0);
        assert!((m - 1.0).abs() < 1e-14);
        assert!((i - Matrix3::identity() / 6.0).amax() < 1e-14);
        assert!(c.amax() < 1e-15);
    }

    #[test]
    fn inertia_scales_with_fifth_power() {
        let cube = shapes::cuboid(1.0, 2.0, 0.5);
        let (m1, i1, _) = inertia_from_mesh(&cube, 3.0);
        let (m2, i2, _) = inertia_from_mesh(&cube.scaled(2.0).unwrap(), 3.0);
        assert!((m2 - 8.0 * m1).abs() < 1e-12 * m2);
        assert!((i2 - 32.0 * i1).amax() < 1e-12 * i2.amax());
    }

    #[test]
    fn offset_mesh_obeys_parallel_axis() {
        let cube = shapes::cuboid(1.0, 2.0, 0.5);
        let offset = Vector3::new(0.3, -0.2, 1.1);
        let (m, i_c, _) = inertia_from_mesh(&cube, 2.0);
        let (_, i_moved, c_moved) = inertia_from_mesh(&cube.translated(&offset).unwrap(), 2.0);
        assert!((c_moved - offset).amax() < 1e-14);
        assert!((i_moved - i_c).amax() < 1e-13);
        let about_origin = i_c + parallel_axis(m, &offset);
        let props = cube.translated(&offset).unwrap().volume_moments();
        let direct = 2.0 * (Matrix3::identity() * props.second.trace() - props.second);
        assert!((about_origin - direct).amax() < 1e-12);
    }

    #[test]
    fn config_defaults() {
        let config: AnalysisConfig = serde_json::from_str(r#"{"mesh_path": "hull.stl", "mass": 10.0}"#).unwrap();
        assert_eq!(config.fluid_density, 1025.0);
        assert_eq!(config.gravity, 9.81);
        assert_eq!(config.initial_guess, [0.0; 3]);
        assert!(serde_json::from_str::<AnalysisConfig>(r#"{"mesh_path": "a.stl", "mass": 1, "typo": 2}"#).is_err());
    }
}
