//! TOML run configuration.
//!
//! Every section is optional and every field has a default. Values given on
//! the command line override the file; the output directory resolves as
//! `--out`, then `output_dir` in the file, then `$SOK_OUTPUT_DIR`, then
//! `./sok-output`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sok_core::expansion::SmoothProfile;
use sok_core::hydro::SohRunConfig;
use sok_core::kinetic::{KineticParams, Mode, SokStepperConfig};
use sok_core::{LimitStudyConfig, SwarmParams};

use crate::Usage;

pub const OUTPUT_ENV: &str = "SOK_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "sok-output";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub coeffs: CoeffsConfig,
    pub gci: GciConfig,
    pub soh: SohConfig,
    pub sok: SokConfig,
    pub limit_study: LimitStudyConfig,
    pub particles: ParticlesConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| Usage(format!("{}: {e}", path.display())).into())
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsConfig {
    /// Explicit noise values; when non-empty the range below is ignored.
    pub d: Vec<f64>,
    pub d_min: f64,
    pub d_max: f64,
    pub count: usize,
    pub spacing: Spacing,
    pub n: u32,
    pub k: f64,
    pub eta0: u8,
    pub theta_nodes: usize,
}

impl Default for CoeffsConfig {
    fn default() -> Self {
        Self {
            d: Vec::new(),
            d_min: 1e-2,
            d_max: 10.0,
            count: 13,
            spacing: Spacing::Log,
            n: 2,
            k: 1.0,
            eta0: 1,
            theta_nodes: 512,
        }
    }
}

impl CoeffsConfig {
    pub fn values(&self) -> anyhow::Result<Vec<f64>> {
        if !self.d.is_empty() {
            return Ok(self.d.clone());
        }
        if self.count == 0 {
            return Err(Usage("coeffs: count must be at least 1".into()).into());
        }
        if self.count == 1 {
            return Ok(vec![self.d_min]);
        }
        let m = (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| {
                let s = i as f64 / m;
                match self.spacing {
                    Spacing::Log => self.d_min * (self.d_max / self.d_min).powf(s),
                    Spacing::Linear => self.d_min + (self.d_max - self.d_min) * s,
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GciConfig {
    pub d: f64,
    pub n: u32,
    pub theta_nodes: usize,
}

impl Default for GciConfig {
    fn default() -> Self {
        Self {
            d: 1.0,
            n: 2,
            theta_nodes: 512,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Cells per axis; one entry for a slab, two for the 2-torus.
    pub n_x: Vec<usize>,
    pub length: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_x: vec![128],
            length: vec![2.0 * PI],
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> anyhow::Result<sok_core::TorusGrid> {
        if self.n_x.len() != self.length.len() {
            return Err(Usage("grid: n_x and length need the same number of entries".into()).into());
        }
        Ok(sok_core::TorusGrid::new(&self.n_x, &self.length)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SohConfig {
    pub grid: GridConfig,
    pub d: f64,
    pub k: f64,
    pub eta0: u8,
    pub theta_nodes: usize,
    pub t_final: f64,
    pub run: SohRunConfig,
    pub initial: SmoothProfile,
    /// CSV of x,rho,phi rows; replaces the smooth profile.
    pub initial_csv: Option<PathBuf>,
}

impl Default for SohConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            d: 1.0,
            k: 1.0,
            eta0: 1,
            theta_nodes: 256,
            t_final: 1.0,
            run: SohRunConfig::default(),
            initial: SmoothProfile::default(),
            initial_csv: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SokConfig {
    pub grid: GridConfig,
    pub n_alpha: usize,
    pub params: KineticParams,
    pub mode: Mode,
    pub theta_nodes: usize,
    pub t_final: f64,
    pub stepper: SokStepperConfig,
    pub monitor_every: usize,
    pub snapshot_every: usize,
    /// Also write snapshots in the binary format.
    pub binary: bool,
    pub initial: SmoothProfile,
}

impl Default for SokConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig {
                n_x: vec![64],
                length: vec![2.0 * PI],
            },
            n_alpha: 32,
            params: KineticParams::default(),
            mode: Mode::Nonlinear,
            theta_nodes: 256,
            t_final: 0.1,
            stepper: SokStepperConfig::default(),
            monitor_every: 10,
            snapshot_every: 0,
            binary: false,
            initial: SmoothProfile::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParticlesConfig {
    pub n: usize,
    pub params: SwarmParams,
    pub seed: u64,
    pub t_final: f64,
    pub dt: f64,
    pub snapshot_every: usize,
    pub monitor_every: usize,
    /// Initial headings: von Mises with this noise around `initial_phi`;
    /// uniform when absent.
    pub initial_d: Option<f64>,
    pub initial_phi: f64,
}

impl Default for ParticlesConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            params: SwarmParams::default(),
            seed: 1,
            t_final: 1.0,
            dt: 1e-2,
            snapshot_every: 0,
            monitor_every: 10,
            initial_d: None,
            initial_phi: 0.0,
        }
    }
}
