use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use peakset::domain::DomainDescription;
use peakset::peak::{BumpFunction, ConstantSettings, FamilySettings};
use peakset::{make_domain, DomainModel, DomainSpec, ParamGrid, PatchModel, PatchSpec};
use serde::{Deserialize, Serialize};

/// Domain as a catalog entry or an inline monomial description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainConfig {
    Catalog(DomainSpec),
    Inline { description: DomainDescription },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Rank tolerance for stratification; `None` is relative to the grid maximum.
    pub rank: Option<f64>,
    /// Nondegeneracy threshold on `lambda_min(H)` for the peak command.
    pub nondegeneracy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: None,
            nondegeneracy: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StratifyConfig {
    pub refine_levels: u32,
}

impl Default for StratifyConfig {
    fn default() -> Self {
        Self { refine_levels: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakConfig {
    pub deltas: Vec<f64>,
    /// Bump `f`; `None` is the smooth exponential bump of radius `varrho`.
    pub bump: Option<BumpFunction>,
    /// Patch parameters `s` probed at `gamma(s)`; `None` is the origin.
    pub z_on: Option<Vec<Vec<f64>>>,
    /// Off-patch points in real coordinates; `None` is the interior witness.
    pub z_off: Option<Vec<Vec<f64>>>,
    pub audit_samples: usize,
    pub pair_samples: usize,
    pub z_samples: usize,
    pub family: FamilySettings,
}

impl Default for PeakConfig {
    fn default() -> Self {
        let c = ConstantSettings::default();
        Self {
            deltas: vec![0.2, 0.1, 0.05, 0.02],
            bump: None,
            z_on: None,
            z_off: None,
            audit_samples: 50,
            pair_samples: c.pair_samples,
            z_samples: c.z_samples,
            family: FamilySettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    pub patch: PatchSpec,
    #[serde(default)]
    pub grid: Option<ParamGrid>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_convexity_samples")]
    pub convexity_samples: usize,
    #[serde(default)]
    pub stratify: StratifyConfig,
    #[serde(default)]
    pub peak: PeakConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_seed() -> u64 {
    7
}

fn default_convexity_samples() -> usize {
    2000
}

/// Everything a command needs, built from a validated config.
pub struct Resolved {
    pub config: RunConfig,
    pub domain: DomainModel,
    pub patch: Box<dyn PatchModel>,
    pub grid: ParamGrid,
}

impl RunConfig {
    /// The effective config as embedded in headers; the output location is
    /// left out so relocating a run does not change its artifacts.
    pub fn for_header(&self) -> Self {
        Self {
            out: None,
            ..self.clone()
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fills every optional field with its default so the effective config
    /// can be written into output headers.
    pub fn resolve(mut self) -> anyhow::Result<Resolved> {
        let patch = self.patch.build()?;
        let domain_cfg = self
            .domain
            .clone()
            .unwrap_or_else(|| DomainConfig::Catalog(self.patch.domain_spec()));
        let domain = match &domain_cfg {
            DomainConfig::Catalog(spec) => make_domain(spec)?,
            DomainConfig::Inline { description } => DomainModel::from_description(description)?,
        };
        if domain.ambient_n() != patch.ambient_n() {
            bail!(
                "patch {} lives in C^{} but the domain is in C^{}",
                patch.name(),
                patch.ambient_n(),
                domain.ambient_n()
            );
        }
        let d = patch.dim();
        let grid = match &self.grid {
            Some(g) => {
                g.validate()?;
                if g.dim() != d {
                    bail!("grid has {} axes, patch dimension is {d}", g.dim());
                }
                g.clone()
            }
            None => {
                let half = 0.9 * patch.radius() / (d as f64).sqrt();
                let steps = match d {
                    1 => 201,
                    2 => 21,
                    _ => 9,
                };
                ParamGrid::cube(d, -half, half, steps)
            }
        };
        for x in grid.nodes() {
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n >= patch.radius() {
                bail!("grid node {x:?} lies outside the parameter ball of radius {}", patch.radius());
            }
        }
        if self.peak.deltas.is_empty() || self.peak.deltas.iter().any(|d| !(*d > 0.0)) {
            bail!("peak.deltas must be a non-empty list of positive numbers");
        }
        if let Some(b) = &self.peak.bump {
            b.validate()?;
        }
        for s in self.peak.z_on.iter().flatten() {
            if s.len() != d {
                bail!("z_on entry {s:?} must have {d} coordinates");
            }
        }
        for z in self.peak.z_off.iter().flatten() {
            if z.len() != 2 * domain.ambient_n() {
                bail!("z_off entry {z:?} must have {} real coordinates", 2 * domain.ambient_n());
            }
        }
        self.domain = Some(domain_cfg);
        self.grid = Some(grid.clone());
        Ok(Resolved {
            config: self,
            domain,
            patch,
            grid,
        })
    }
}
