//! Job configuration: structured key-value text with every complex number
//! written as an explicit `[re, im]` pair, so the lossy-medium sign
//! conventions are transcribed without ambiguity.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use cavity_eig_core::assembly::Formulation;
use cavity_eig_core::eigen::SolverConfig;
use cavity_eig_core::fem::{Medium, Tensor3};
use cavity_eig_core::mesh::{
    generate_box_mesh, generate_cylinder_mesh, generate_torus_mesh, read_gmsh, Mesh,
};
use cavity_eig_core::Complex64;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub geometry: GeometryConfig,
    /// Region tag -> material pair. Keys are integers written as strings.
    pub media: BTreeMap<String, MediumConfig>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometryConfig {
    Box {
        a: f64,
        b: f64,
        c: f64,
        nx: usize,
        ny: usize,
        nz: usize,
    },
    Cylinder {
        radius: f64,
        height: f64,
        n_az: usize,
        n_rings: usize,
        n_layers: usize,
    },
    Torus {
        rho1: f64,
        rho2: f64,
        n_major: usize,
        n_minor_az: usize,
        n_minor_rings: usize,
    },
    Gmsh {
        path: PathBuf,
    },
}

impl GeometryConfig {
    /// Builds the mesh; `base` anchors relative Gmsh paths.
    pub fn build_mesh(&self, base: &Path) -> Result<Mesh> {
        let mesh = match self {
            GeometryConfig::Box {
                a,
                b,
                c,
                nx,
                ny,
                nz,
            } => generate_box_mesh(*a, *b, *c, *nx, *ny, *nz)?,
            GeometryConfig::Cylinder {
                radius,
                height,
                n_az,
                n_rings,
                n_layers,
            } => generate_cylinder_mesh(*radius, *height, *n_az, *n_rings, *n_layers)?,
            GeometryConfig::Torus {
                rho1,
                rho2,
                n_major,
                n_minor_az,
                n_minor_rings,
            } => generate_torus_mesh(*rho1, *rho2, *n_major, *n_minor_az, *n_minor_rings)?,
            GeometryConfig::Gmsh { path } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                let text = std::fs::read_to_string(&full)
                    .with_context(|| format!("cannot read mesh file {}", full.display()))?;
                read_gmsh(&text)?
            }
        };
        Ok(mesh)
    }

    /// Rebuilds the geometry with different subdivision counts (sweeps).
    pub fn with_counts(&self, counts: [usize; 3]) -> Result<GeometryConfig> {
        Ok(match self {
            GeometryConfig::Box { a, b, c, .. } => GeometryConfig::Box {
                a: *a,
                b: *b,
                c: *c,
                nx: counts[0],
                ny: counts[1],
                nz: counts[2],
            },
            GeometryConfig::Cylinder { radius, height, .. } => GeometryConfig::Cylinder {
                radius: *radius,
                height: *height,
                n_az: counts[0],
                n_rings: counts[1],
                n_layers: counts[2],
            },
            GeometryConfig::Torus { rho1, rho2, .. } => GeometryConfig::Torus {
                rho1: *rho1,
                rho2: *rho2,
                n_major: counts[0],
                n_minor_az: counts[1],
                n_minor_rings: counts[2],
            },
            GeometryConfig::Gmsh { .. } => {
                bail!("sweeps need a parametric geometry, not a mesh file")
            }
        })
    }
}

/// 3x3 complex tensor as three rows of three `[re, im]` pairs.
pub type TensorConfig = [[[f64; 2]; 3]; 3];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub eps_r: TensorConfig,
    pub mu_r: TensorConfig,
}

fn tensor_from_config(t: &TensorConfig) -> Tensor3 {
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = Complex64::new(t[i][j][0], t[i][j][1]);
        }
    }
    out
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_formulation")]
    pub formulation: String,
    /// Complex shift as `[re, im]`, in 1/m^2.
    #[serde(default = "default_shift")]
    pub shift: [f64; 2],
    #[serde(default = "default_nev")]
    pub nev: usize,
    #[serde(default)]
    pub ncv: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_restarts")]
    pub max_restarts: usize,
}

fn default_formulation() -> String {
    "h".into()
}
fn default_shift() -> [f64; 2] {
    [1.0, 0.0]
}
fn default_nev() -> usize {
    6
}
fn default_tol() -> f64 {
    1e-10
}
fn default_restarts() -> usize {
    200
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            formulation: default_formulation(),
            shift: default_shift(),
            nev: default_nev(),
            ncv: 0,
            tol: default_tol(),
            max_restarts: default_restarts(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Per-level subdivision counts for the parametric geometry.
    pub levels: Vec<[usize; 3]>,
    /// Known reference eigenvalue for error columns, `[re, im]`.
    #[serde(default)]
    pub reference: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Results file path (relative to the output directory).
    #[serde(default)]
    pub results: Option<PathBuf>,
    /// Include eigenvector coefficients in the results file (needed for
    /// VTK export).
    #[serde(default)]
    pub fields: bool,
    /// Export the assembled pencil in MatrixMarket coordinate format.
    #[serde(default)]
    pub matrices: bool,
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<(JobConfig, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: JobConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        cfg.validate()?;
        let base = path
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((cfg, base))
    }

    pub fn validate(&self) -> Result<()> {
        if self.media.is_empty() {
            bail!("config needs at least one [media.<region>] block");
        }
        for key in self.media.keys() {
            key.parse::<i32>()
                .with_context(|| format!("media region key '{key}' is not an integer"))?;
        }
        let f = self.formulation()?;
        if f.has_constraint() && self.solver.shift == [0.0, 0.0] {
            bail!("the mixed formulations need a nonzero shift (singular mass block)");
        }
        if self.solver.nev < 1 {
            bail!("solver.nev must be at least 1");
        }
        if !(self.solver.tol > 0.0) {
            bail!("solver.tol must be positive");
        }
        Ok(())
    }

    pub fn formulation(&self) -> Result<Formulation> {
        parse_formulation(&self.solver.formulation)
    }

    pub fn media_map(&self) -> Result<BTreeMap<i32, Medium>> {
        let mut out = BTreeMap::new();
        for (key, m) in &self.media {
            let region: i32 = key.parse()?;
            out.insert(
                region,
                Medium {
                    eps_r: tensor_from_config(&m.eps_r),
                    mu_r: tensor_from_config(&m.mu_r),
                },
            );
        }
        Ok(out)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            shift: Complex64::new(self.solver.shift[0], self.solver.shift[1]),
            nev: self.solver.nev,
            ncv: self.solver.ncv,
            tol: self.solver.tol,
            max_restarts: self.solver.max_restarts,
            ..SolverConfig::default()
        }
    }
}

pub fn parse_formulation(s: &str) -> Result<Formulation> {
    match s {
        "e" | "efield" => Ok(Formulation::EField),
        "h" | "hfield" => Ok(Formulation::HField),
        "naive" => Ok(Formulation::NaiveCurlCurl),
        other => bail!("unknown formulation '{other}' (expected e, h or naive)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CYLINDER_TOML: &str = r#"
[geometry]
kind = "cylinder"
radius = 0.2
height = 0.5
n_az = 6
n_rings = 2
n_layers = 3

[media.0]
eps_r = [[[2.0, 1.0], [0.0, 0.0], [0.0, 0.0]],
         [[0.0, 0.0], [2.0, 1.0], [0.0, 0.0]],
         [[0.0, 0.0], [0.0, 0.0], [2.0, 0.0]]]
mu_r = [[[2.0, -1.0], [0.0, 0.375], [0.0, 0.0]],
        [[0.0, 0.375], [2.0, -1.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.0, 0.0], [2.0, 0.0]]]

[solver]
formulation = "h"
shift = [24.25, -7.56]
nev = 4
"#;

    #[test]
    fn parses_cylinder_job() {
        let cfg: JobConfig = toml::from_str(CYLINDER_TOML).unwrap();
        cfg.validate().unwrap();
        let media = cfg.media_map().unwrap();
        let m = &media[&0];
        assert_eq!(m.eps_r[0][0], Complex64::new(2.0, 1.0));
        assert_eq!(m.mu_r[0][1], Complex64::new(0.0, 0.375));
        let sc = cfg.solver_config();
        assert_eq!(sc.shift, Complex64::new(24.25, -7.56));
        assert_eq!(sc.nev, 4);
        let mesh = cfg.geometry.build_mesh(Path::new(".")).unwrap();
        assert!(mesh.n_tets() > 0);
    }

    #[test]
    fn rejects_zero_shift_for_mixed() {
        let text = CYLINDER_TOML.replace("shift = [24.25, -7.56]", "shift = [0.0, 0.0]");
        let cfg: JobConfig = toml::from_str(&text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = CYLINDER_TOML.replace("[solver]", "[solver]\nbogus = 1");
        assert!(toml::from_str::<JobConfig>(&text).is_err());
    }

    #[test]
    fn sweep_counts_rebuild_geometry() {
        let cfg: JobConfig = toml::from_str(CYLINDER_TOML).unwrap();
        let g = cfg.geometry.with_counts([7, 3, 9]).unwrap();
        match g {
            GeometryConfig::Cylinder {
                n_az,
                n_rings,
                n_layers,
                ..
            } => {
                assert_eq!((n_az, n_rings, n_layers), (7, 3, 9));
            }
            _ => panic!("wrong geometry kind"),
        }
    }
}
