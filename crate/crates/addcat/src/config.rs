//! Run configuration: a JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use addcat_core::features::{CalibrationModel, DEFAULT_EPSILON_SPEED, DEFAULT_WINDOW_SIZE};
use addcat_core::hdbscan::HdbscanParams;
use addcat_core::pipeline::{PipelineParams, StageParams};
use serde::{Deserialize, Serialize};

use crate::ingest::{ColumnMap, ParseOptions};

/// Partial clustering parameters laid over the global ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsPatch {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_cluster_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allow_single_cluster: Option<bool>,
}

impl ParamsPatch {
    /// A patch that changes `min_cluster_size` but not `min_samples` keeps
    /// the two equal, mirroring the global default.
    fn apply(&self, base: HdbscanParams) -> HdbscanParams {
        let min_cluster_size = self.min_cluster_size.unwrap_or(base.min_cluster_size);
        let min_samples = self.min_samples.unwrap_or(match self.min_cluster_size {
            Some(m) if base.min_samples == base.min_cluster_size => m,
            _ => base.min_samples,
        });
        HdbscanParams {
            min_cluster_size,
            min_samples,
            allow_single_cluster: self
                .allow_single_cluster
                .unwrap_or(base.allow_single_cluster),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxisPatches {
    pub x: ParamsPatch,
    pub y: ParamsPatch,
    pub z: ParamsPatch,
}

/// Per-run overrides of the global clustering parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageOverrides {
    pub first: ParamsPatch,
    pub largest_cluster: AxisPatches,
    pub outliers: AxisPatches,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitFlags {
    /// `events.csv` with raw, calibrated and normalized statistics.
    pub events: bool,
    /// `trees.json` with every condensed tree.
    pub trees: bool,
    /// `report.json` and `report.csv` when labels are available.
    pub report: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out: PathBuf,
    pub window_size: usize,
    pub epsilon_speed: f64,
    pub min_cluster_size: usize,
    /// Defaults to `min_cluster_size`.
    pub min_samples: Option<usize>,
    pub allow_single_cluster: bool,
    pub single_cluster_fallback: bool,
    pub stages: StageOverrides,
    pub strict: bool,
    /// Role → header name, for trips whose headers the defaults miss.
    pub columns: ColumnMap,
    pub emit: EmitFlags,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            labels: None,
            out: PathBuf::from("addcat-out"),
            window_size: DEFAULT_WINDOW_SIZE,
            epsilon_speed: DEFAULT_EPSILON_SPEED,
            min_cluster_size: HdbscanParams::default().min_cluster_size,
            min_samples: None,
            allow_single_cluster: false,
            single_cluster_fallback: true,
            stages: StageOverrides::default(),
            strict: false,
            columns: ColumnMap::default(),
            emit: EmitFlags {
                events: false,
                trees: false,
                report: true,
            },
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn global_params(&self) -> HdbscanParams {
        HdbscanParams {
            min_cluster_size: self.min_cluster_size,
            min_samples: self.min_samples.unwrap_or(self.min_cluster_size),
            allow_single_cluster: self.allow_single_cluster,
        }
    }

    /// Fully resolved pipeline parameters, validated.
    pub fn pipeline_params(&self) -> Result<PipelineParams, ConfigError> {
        if self.window_size < 2 {
            return Err(ConfigError::Invalid(format!(
                "window_size must be at least 2, got {}",
                self.window_size
            )));
        }
        if !(self.epsilon_speed > 0.0 && self.epsilon_speed.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "epsilon_speed must be positive, got {}",
                self.epsilon_speed
            )));
        }
        let global = self.global_params();
        let axes = |p: &AxisPatches| [p.x.apply(global), p.y.apply(global), p.z.apply(global)];
        let clustering = StageParams {
            first: self.stages.first.apply(global),
            largest: axes(&self.stages.largest_cluster),
            outliers: axes(&self.stages.outliers),
        };
        for p in std::iter::once(&clustering.first)
            .chain(&clustering.largest)
            .chain(&clustering.outliers)
        {
            p.validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(PipelineParams {
            window_size: self.window_size,
            epsilon_speed: self.epsilon_speed,
            calibrated_features: CalibrationModel::default_feature_set(),
            clustering,
            single_cluster_fallback: self.single_cluster_fallback,
        })
    }

    pub fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            strict: self.strict,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {}: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_samples_follows_min_cluster_size() {
        let config = RunConfig {
            min_cluster_size: 3,
            ..RunConfig::default()
        };
        let params = config.pipeline_params().unwrap();
        assert_eq!(params.clustering.first, HdbscanParams::new(3));
        assert_eq!(params.clustering.outliers[2], HdbscanParams::new(3));
    }

    #[test]
    fn stage_patch_overrides_one_run() {
        let text = r#"{ "min_cluster_size": 6, "stages": { "outliers": { "y": { "min_cluster_size": 9 } } } }"#;
        let config: RunConfig = serde_json::from_str(text).unwrap();
        let params = config.pipeline_params().unwrap();
        assert_eq!(params.clustering.first, HdbscanParams::new(6));
        assert_eq!(params.clustering.outliers[1], HdbscanParams::new(9));
        assert_eq!(params.clustering.outliers[0], HdbscanParams::new(6));
    }

    #[test]
    fn explicit_min_samples_is_kept() {
        let config = RunConfig {
            min_cluster_size: 8,
            min_samples: Some(2),
            ..RunConfig::default()
        };
        let p = config.pipeline_params().unwrap().clustering.largest[0];
        assert_eq!((p.min_cluster_size, p.min_samples), (8, 2));
    }

    #[test]
    fn round_trips_through_json() {
        let config = RunConfig {
            input: Some("trip.csv".into()),
            min_samples: Some(4),
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&config).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), config);
    }

    #[test]
    fn rejects_bad_values() {
        let config = RunConfig {
            min_cluster_size: 1,
            ..RunConfig::default()
        };
        assert!(config.pipeline_params().is_err());
        let config = RunConfig {
            epsilon_speed: 0.0,
            ..RunConfig::default()
        };
        assert!(config.pipeline_params().is_err());
    }
}
