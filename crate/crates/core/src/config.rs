//! Pipeline configuration file (TOML). Unknown keys are rejected.
//!
//! ```toml
//! [input]
//! frame_a = "a.pgm"
//! frame_b = "b.pgm"
//!
//! [output]
//! dir = "out"
//!
//! [preprocess]
//! clahe_enabled = true
//! cap_enabled = true
//!
//! [[pass]]
//! window = 64
//! step = 32
//! method = "fft"
//! deform = "linear"
//!
//! [postprocess]
//! n_global = 3.0
//!
//! [derive]
//! fields = ["vorticity", "magnitude"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::correlate::PassSpec;
use crate::derive::Calibration;
use crate::error::{PivError, Result};
use crate::field::Quantity;
use crate::postprocess::PostprocessConfig;
use crate::preprocess::PreprocessConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub frame_a: PathBuf,
    pub frame_b: PathBuf,
    /// Reduce color inputs to luma instead of rejecting them.
    #[serde(default)]
    pub convert_color: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Pixels per node side in colormap images.
    pub colormap_cell: usize,
    pub colormaps: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("piv_out"),
            colormap_cell: 1,
            colormaps: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeriveConfig {
    pub fields: Vec<Quantity>,
    /// Physical length of one pixel; node spacing is `step * units_per_pixel`.
    pub units_per_pixel: f64,
    /// Time between frames; derived velocities are per unit of this time.
    pub frame_interval: f64,
}

impl DeriveConfig {
    pub fn calibration(&self) -> Calibration {
        Calibration {
            units_per_pixel: self.units_per_pixel,
            frame_interval: self.frame_interval,
        }
    }
}

impl Default for DeriveConfig {
    fn default() -> Self {
        Self {
            fields: vec![Quantity::Vorticity, Quantity::Magnitude],
            units_per_pixel: 1.0,
            frame_interval: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default = "PassSpec::default_schedule", rename = "pass")]
    pub passes: Vec<PassSpec>,
    #[serde(default)]
    pub postprocess: PostprocessConfig,
    #[serde(default)]
    pub derive: DeriveConfig,
}

impl PipelineConfig {
    /// Default processing for a given frame pair.
    pub fn for_frames(frame_a: impl Into<PathBuf>, frame_b: impl Into<PathBuf>) -> Self {
        Self {
            input: InputConfig {
                frame_a: frame_a.into(),
                frame_b: frame_b.into(),
                convert_color: false,
            },
            output: OutputConfig::default(),
            preprocess: PreprocessConfig::default(),
            passes: PassSpec::default_schedule(),
            postprocess: PostprocessConfig::default(),
            derive: DeriveConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| PivError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PivError::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            let rebase = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            rebase(&mut cfg.input.frame_a);
            rebase(&mut cfg.input.frame_b);
            rebase(&mut cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks everything that does not depend on the frame size.
    pub fn validate(&self) -> Result<()> {
        if self.input.frame_a.as_os_str().is_empty() || self.input.frame_b.as_os_str().is_empty() {
            return Err(PivError::Config(
                "input frame paths must be nonempty".into(),
            ));
        }
        if self.output.dir.as_os_str().is_empty() {
            return Err(PivError::Config("output.dir must be nonempty".into()));
        }
        if self.output.colormap_cell == 0 {
            return Err(PivError::Config("output.colormap_cell must be >= 1".into()));
        }
        self.preprocess.validate()?;
        self.postprocess.validate()?;
        if self.passes.is_empty() {
            return Err(PivError::Config("at least one [[pass]] is required".into()));
        }
        if self.passes.windows(2).any(|p| p[1].window > p[0].window) {
            return Err(PivError::Config(
                "pass window sizes must be non-increasing".into(),
            ));
        }
        self.derive
            .calibration()
            .validate()
            .map_err(|e| PivError::Config(format!("derive: {e}")))?;
        Ok(())
    }
}
