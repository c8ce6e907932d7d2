//! Run configuration: one JSON document, overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use qgnn_core::graphbuild::{SelectionCuts, SliceSpec};
use qgnn_core::qgnn::ModelConfig;
use qgnn_core::trackdata::ToyConfig;
use qgnn_core::trainer::TrainConfig;

pub const CONFIG_VERSION: u32 = 1;
pub const CONFIG_ECHO: &str = "config.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub data_dir: PathBuf,
    pub graph_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data_dir: "data".into(),
            graph_dir: "graphs".into(),
            out_dir: "out".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Number of toy events to generate.
    pub events: usize,
    pub first_event: u64,
    pub toy: ToyConfig,
    pub cuts: SelectionCuts,
    pub slices: SliceSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            events: 100,
            first_event: 0,
            toy: ToyConfig::default(),
            cuts: SelectionCuts::default(),
            slices: SliceSpec::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            paths: Paths::default(),
        }
    }
}

/// A loaded config plus whether the file fixed the learning rate.
pub struct Loaded {
    pub config: RunConfig,
    pub lr_from_file: bool,
}

pub fn load(path: Option<&Path>) -> anyhow::Result<Loaded> {
    let Some(path) = path else {
        return Ok(Loaded {
            config: RunConfig::default(),
            lr_from_file: false,
        });
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| crate::UsageError(format!("{}: {e}", path.display())))?;
    let lr_from_file = value.pointer("/train/lr").is_some();
    let config: RunConfig =
        serde_json::from_value(value).map_err(|e| crate::UsageError(format!("{}: {e}", path.display())))?;
    if config.version != CONFIG_VERSION {
        bail!(crate::UsageError(format!(
            "{}: config version {} is not supported (expected {CONFIG_VERSION})",
            path.display(),
            config.version
        )));
    }
    Ok(Loaded { config, lr_from_file })
}

pub fn echo(config: &RunConfig, dir: &Path) -> anyhow::Result<()> {
    let path = dir.join(CONFIG_ECHO);
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
