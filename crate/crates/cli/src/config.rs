//! Run configuration: one TOML document holding the architecture, the
//! training hyperparameters, and the data paths. Unknown keys are rejected;
//! defaults are filled in on parse so the manifest always echoes the full
//! resolved configuration.

use std::path::{Path, PathBuf};

use imuda_core::adapt::AdaptConfig;
use imuda_core::data::ShiftSpec;
use imuda_core::error::{Error, Result};
use imuda_core::nn::{Activation, ArchSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Output directory for `run-all`.
    pub out_dir: PathBuf,
    pub arch: ArchSpec,
    pub data: DataConfig,
    pub train: AdaptConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("runs/out"),
            arch: default_arch(),
            data: DataConfig::default(),
            train: AdaptConfig::default(),
        }
    }
}

pub fn default_arch() -> ArchSpec {
    ArchSpec {
        input_dim: 2,
        hidden_dims: vec![32],
        embedding_dim: 8,
        num_classes: 2,
        activation: Activation::Relu,
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Labeled source CSV; generated from `synth` when absent.
    pub source: Option<PathBuf>,
    /// Unlabeled target CSV; generated from `synth` when absent.
    pub target: Option<PathBuf>,
    /// Labeled target CSV used for evaluation only.
    pub target_labels: Option<PathBuf>,
    pub synth: Option<SynthConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    /// `twomoons` or `blobs`.
    pub task: String,
    /// Total points per domain (two-moons) or per class (blobs).
    pub n: usize,
    pub noise: f64,
    /// Shift spec: `rot:DEG`, `trans:DX,DY`, or `scale:C`.
    pub shift: String,
    /// Blobs only.
    pub classes: usize,
    pub dim: usize,
    pub separation: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            task: "twomoons".into(),
            n: 1000,
            noise: 0.1,
            shift: "rot:35".into(),
            classes: 2,
            dim: 2,
            separation: 8.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("bad config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        self.train.validate()?;
        if let Some(synth) = &self.data.synth {
            synth.parse_shift()?;
            if synth.task != "twomoons" && synth.task != "blobs" {
                return Err(Error::Config(format!(
                    "unknown synth task '{}'; expected twomoons or blobs",
                    synth.task
                )));
            }
        }
        Ok(())
    }

}

impl SynthConfig {
    pub fn parse_shift(&self) -> Result<ShiftSpec> {
        parse_shift(&self.shift)
    }
}

/// Parse `rot:DEG`, `trans:DX,DY[,...]`, or `scale:C`.
pub fn parse_shift(s: &str) -> Result<ShiftSpec> {
    let (kind, arg) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("shift '{s}' is not of the form kind:args")))?;
    let bad = |what: &str| Error::Config(format!("bad {what} in shift '{s}'"));
    match kind {
        "rot" => Ok(ShiftSpec::Rotation(arg.parse().map_err(|_| bad("angle"))?)),
        "trans" => {
            let offsets: Result<Vec<f64>> = arg
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad("offset")))
                .collect();
            Ok(ShiftSpec::Translation(offsets?))
        }
        "scale" => Ok(ShiftSpec::Scaling(arg.parse().map_err(|_| bad("factor"))?)),
        other => Err(Error::Config(format!("unknown shift kind '{other}'"))),
    }
}
