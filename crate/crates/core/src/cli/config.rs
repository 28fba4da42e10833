use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::kernels::KernelFamily;
use crate::mixing::MixingMeasure;
use crate::sampler::{ModelVariant, SamplerConfig};

/// Name of the resolved-configuration file in the output directory.
pub const ECHO_FILE: &str = "config.echo";

/// Everything a pipeline run needs, resolved from defaults, an optional
/// configuration file and command-line flags (in increasing precedence).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub variant: ModelVariant,
    pub kernel: KernelFamily,
    pub measure: MixingMeasure,
    /// Replace the N-IG measure by the Dirichlet process with the same prior
    /// expected number of clusters.
    pub match_dp: bool,
    /// Sweeps used to estimate the N-IG prior expected number of clusters.
    pub match_sweeps: usize,
    /// Shift covariates to zero mean before fitting.
    pub center: bool,
    /// Tail mass outside credible intervals and bands.
    pub level: f64,
    pub sampler: SamplerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            out: PathBuf::from("survstrat-out"),
            variant: ModelVariant::M2,
            kernel: KernelFamily::TypeIMinimum,
            measure: MixingMeasure::Nig { alpha: 1.0, tau: 1.0 },
            match_dp: false,
            match_sweeps: 20_000,
            center: false,
            level: 0.05,
            sampler: SamplerConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.measure.validate()?;
        self.sampler.validate()?;
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config("level must lie in (0, 1)".into()));
        }
        if self.match_dp && !self.measure.is_nig() {
            return Err(Error::Config("match_dp needs an N-IG measure to match".into()));
        }
        Ok(())
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| Error::Config("no data file given (use --data or `data` in the config)".into()))
    }

    pub fn write_echo(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).map_err(io_err(&self.out))?;
        let path = self.out.join(ECHO_FILE);
        std::fs::write(&path, self.to_toml()?).map_err(io_err(path))
    }
}
