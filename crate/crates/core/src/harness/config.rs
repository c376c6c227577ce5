//! Run configuration shared by the CLI subcommands, loadable from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::WeightConfig;
use crate::error::{Error, Result};
use crate::levelset::SurfaceSpec;
use crate::sliver::SliverMode;

/// Defaults: `m = 2`, `φ = r³`, 21-point LGL rule, known sliver mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub m: u32,
    pub p: u32,
    pub q: usize,
    pub mode: SliverMode,
    /// `ball`, `ball:<r>` or `cassini:<ratio>`.
    pub surface: Option<String>,
    /// Stencil size override.
    pub n: Option<usize>,
    /// Plane stencil size override (unknown mode).
    pub eta: Option<usize>,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let w = WeightConfig::default();
        RunConfig {
            m: w.degree,
            p: w.rbf_p,
            q: w.rule_order,
            mode: w.mode,
            surface: None,
            n: None,
            eta: None,
            seed: 1,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn surface_spec(&self) -> Result<Option<SurfaceSpec>> {
        self.surface.as_deref().map(str::parse).transpose()
    }

    /// Checks that known mode has a surface to intersect.
    pub fn validate(&self) -> Result<()> {
        let surface = self.surface_spec()?;
        if self.mode == SliverMode::Known && surface.is_none() {
            return Err(Error::Config("known sliver mode needs a named surface".into()));
        }
        Ok(())
    }

    pub fn weight_config(&self) -> WeightConfig {
        WeightConfig {
            degree: self.m,
            rbf_p: self.p,
            rule_order: self.q,
            mode: self.mode,
            stencil_size: self.n,
            plane_stencil: self.eta,
            plane_degree: None,
            threads: self.threads,
        }
    }
}
