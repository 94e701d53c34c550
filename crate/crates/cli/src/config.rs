//! Training run configuration: defaults, optional JSON config file, and
//! command-line flag overrides, merged in that precedence order (flags win).
//! The merged result is snapshotted into the run directory so a run is
//! reproducible from its snapshot alone.

use betarisk_core::labelgen::PositiveBetaMode;
use betarisk_core::net::{Activation, ModelConfig};
use betarisk_core::trainer::TrainConfig;
use betarisk_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Fully resolved configuration for one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Path of the dataset file the run trained on.
    pub data: String,
    /// Fraction of samples held out for validation.
    pub val_fraction: f64,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "val_fraction must lie in (0, 1), got {}",
                self.val_fraction
            )));
        }
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }
}

/// Optional sections of a JSON config file. A present section replaces the
/// built-in default for that section wholesale; flags then override single
/// fields on top.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FileConfig {
    pub val_fraction: Option<f64>,
    pub model: Option<ModelConfig>,
    pub train: Option<TrainConfig>,
}

/// Per-field flag overrides accepted by `train` and `ablation`.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
    pub val_fraction: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lr_backbone: Option<f64>,
    pub lr_dist_head: Option<f64>,
    pub lr_cls_head: Option<f64>,
    pub weight_decay: Option<f64>,
    pub epsilon: Option<f64>,
    pub positive_mode: Option<PositiveBetaMode>,
    pub activation: Option<Activation>,
    pub encoder_widths: Option<Vec<usize>>,
}

pub fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("config file {}: {e}", path.display())))
}

/// Merge defaults, an optional config file, and flag overrides into the
/// effective run configuration. Validates the result.
pub fn resolve(data: &str, file: Option<&Path>, over: &Overrides) -> Result<RunConfig> {
    let file_cfg = match file {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    let mut cfg = RunConfig {
        data: data.to_string(),
        val_fraction: file_cfg.val_fraction.unwrap_or(0.2),
        model: file_cfg.model.unwrap_or_default(),
        train: file_cfg.train.unwrap_or_default(),
    };
    if let Some(v) = over.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = over.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = over.seed {
        cfg.train.seed = v;
    }
    if let Some(v) = over.val_fraction {
        cfg.val_fraction = v;
    }
    if let Some(v) = over.lambda1 {
        cfg.train.loss_weights.lambda1 = v;
    }
    if let Some(v) = over.lambda2 {
        cfg.train.loss_weights.lambda2 = v;
    }
    if let Some(v) = over.lr_backbone {
        cfg.train.lr_backbone = v;
    }
    if let Some(v) = over.lr_dist_head {
        cfg.train.lr_dist_head = v;
    }
    if let Some(v) = over.lr_cls_head {
        cfg.train.lr_cls_head = v;
    }
    if let Some(v) = over.weight_decay {
        cfg.train.weight_decay = v;
    }
    if let Some(v) = over.epsilon {
        cfg.train.labels.epsilon = v;
    }
    if let Some(v) = over.positive_mode {
        cfg.train.labels.positive_mode = v;
    }
    if let Some(v) = over.activation {
        cfg.model.activation = v;
    }
    if let Some(v) = &over.encoder_widths {
        cfg.model.encoder_widths = v.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_resolve_and_validate() {
        let cfg = resolve("d.json", None, &Overrides::default()).unwrap();
        assert_eq!(cfg.val_fraction, 0.2);
        assert_eq!(cfg.train.epochs, 30);
        assert_eq!(cfg.train.loss_weights.lambda1, 5.0);
        assert_eq!(cfg.model.encoder_widths, vec![32, 16]);
    }

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        let mut f = std::fs::File::create(&path).unwrap();
        // File sets epochs 7 and val_fraction 0.3; the epochs flag must win.
        let train = TrainConfig { epochs: 7, ..TrainConfig::default() };
        let file_cfg = FileConfig {
            val_fraction: Some(0.3),
            model: None,
            train: Some(train),
        };
        write!(f, "{}", serde_json::to_string_pretty(&file_cfg).unwrap()).unwrap();
        let over = Overrides { epochs: Some(3), ..Default::default() };
        let cfg = resolve("d.json", Some(&path), &over).unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.val_fraction, 0.3);
    }

    #[test]
    fn bad_field_is_rejected_with_its_name() {
        let over = Overrides { val_fraction: Some(1.5), ..Default::default() };
        let err = resolve("d.json", None, &over).unwrap_err();
        assert!(err.to_string().contains("val_fraction"), "{err}");
    }

    #[test]
    fn malformed_config_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, "{not json").unwrap();
        let err = resolve("d.json", Some(&path), &Overrides::default()).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }
}
