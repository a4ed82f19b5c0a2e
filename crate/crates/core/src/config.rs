//! Run configuration: the JSON schema consumed by the command-line driver
//! and the named presets shipped with the crate.
//!
//! Unknown fields are rejected so that typos in config files surface as
//! schema errors instead of silently falling back to defaults.

use serde::{Deserialize, Serialize};

use crate::dataset::LabelSource;
use crate::symmetry::SymmetryGroup;
use crate::{Error, Result};

/// Architecture block: read-window width and layout flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    /// Read-window width `N`.
    pub n: usize,
    /// Share gate parameters across placements within a sublayer.
    #[serde(default)]
    pub uniform: bool,
    /// Convolution sublayers per level (odd).
    #[serde(default = "default_conv_depth")]
    pub conv_depth: usize,
}

fn default_conv_depth() -> usize {
    3
}

/// One curriculum stage: noise depth, learning rate, and an epoch budget
/// (an epoch is one pass of `train_size / batch_size` optimization steps).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    /// Noise layers `L` for this stage's data.
    pub l_noise: usize,
    /// Adam learning rate for this stage.
    pub learning_rate: f64,
    /// Hard cap on epochs for this stage.
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
}

fn default_max_epochs() -> usize {
    300
}

/// Adam hyperparameters and the sampling batch size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 50,
        }
    }
}

/// Dataset sizes and noise-model details shared by all stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub train_size: usize,
    pub test_size: usize,
    pub label_source: LabelSource,
    /// Sites per noise gate (2, or 3 for the wider `Z₂ × Z₂ᵀ` family).
    pub noise_support: usize,
    /// Brick-wall parity of the first noise layer.
    pub first_layer_offset: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            train_size: 6000,
            test_size: 1000,
            label_source: LabelSource::SymmetricCat,
            noise_support: 2,
            first_layer_offset: 0,
        }
    }
}

/// A complete training run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Free-form run label (presets use their own name).
    pub task: String,
    /// Symmetry group of the noise model.
    pub symmetry: SymmetryGroup,
    pub arch: ArchConfig,
    /// Curriculum stages, trained in order.
    pub curriculum: Vec<StageConfig>,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub data: DataConfig,
    /// Test accuracy required to advance past a stage (and to count the
    /// run as converged); checked every `check_interval` epochs.
    #[serde(default = "default_threshold")]
    pub accuracy_threshold: f64,
    /// Epochs between test-accuracy checks.
    #[serde(default = "default_check_interval")]
    pub check_interval: usize,
    /// Sharpening constant `C` in the softmax cross-entropy loss.
    #[serde(default = "default_loss_c")]
    pub loss_c: f64,
    /// Root seed for initialization, data and batch sampling.
    #[serde(default)]
    pub seed: u64,
    /// Where the driver writes checkpoints and reports.
    #[serde(default)]
    pub output_dir: Option<std::path::PathBuf>,
}

fn default_threshold() -> f64 {
    1.0
}

fn default_check_interval() -> usize {
    10
}

fn default_loss_c() -> f64 {
    50.0
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.curriculum.is_empty() {
            return Err(Error::Config("curriculum must have at least one stage".into()));
        }
        if self.adam.batch_size == 0 || self.data.train_size == 0 || self.data.test_size == 0 {
            return Err(Error::Config("batch and dataset sizes must be positive".into()));
        }
        if self.check_interval == 0 {
            return Err(Error::Config("check_interval must be positive".into()));
        }
        if !(self.accuracy_threshold > 0.0 && self.accuracy_threshold <= 1.0) {
            return Err(Error::Config(
                "accuracy_threshold must lie in (0, 1]".into(),
            ));
        }
        for s in &self.curriculum {
            if 2 * s.l_noise >= self.arch.n {
                return Err(Error::Config(format!(
                    "stage with l_noise = {} too deep for window {}",
                    s.l_noise, self.arch.n
                )));
            }
            if s.max_epochs == 0 {
                return Err(Error::Config("max_epochs must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Names of all shipped presets.
pub const PRESET_NAMES: [&str; 6] = [
    "tr-4q",
    "tr-8q",
    "tr-8q-uniform",
    "z2z2t-4q",
    "z2z2t-8q",
    "sb-asymmetric",
];

/// Look up a preset by name.
///
/// Epoch caps are sized for a single-machine run of at most a few tens
/// of minutes.  Sample pools are cheap (samples are synthesized on
/// demand from the pool index), so pool sizes follow the published
/// protocol: 30000 training samples for 4-qubit tasks (batch 30) and
/// 60000 for 8-qubit tasks (batch 50), except `tr-4q`, which is pinned
/// to a 6000-sample desk budget.  The published protocol pairs the
/// second curriculum stage with a 1e-4 learning rate and a multi-
/// thousand-epoch budget; inside a single-digit epoch cap that rate
/// moves the parameters too little, so the 8-qubit presets run the
/// second stage at 3e-4 (chosen by forking the stage at several rates
/// from an identical converged first stage and comparing trajectories).
pub fn preset(name: &str) -> Option<RunConfig> {
    let base = |task: &str, symmetry, n, uniform, conv_depth, stages: Vec<StageConfig>| RunConfig {
        task: task.to_string(),
        symmetry,
        arch: ArchConfig {
            n,
            uniform,
            conv_depth,
        },
        curriculum: stages,
        adam: AdamConfig {
            batch_size: if n <= 4 { 30 } else { 50 },
            ..AdamConfig::default()
        },
        data: DataConfig::default(),
        accuracy_threshold: 1.0,
        check_interval: 10,
        loss_c: 50.0,
        seed: 2024,
        output_dir: None,
    };
    let stage = |l_noise, learning_rate, max_epochs| StageConfig {
        l_noise,
        learning_rate,
        max_epochs,
    };
    match name {
        "tr-4q" => Some(base(
            "tr-4q",
            SymmetryGroup::TimeReversal,
            4,
            false,
            3,
            vec![stage(1, 5e-4, 140)],
        )),
        // "tr-8q-desk" is an alias: the shipped tr-8q preset *is* the
        // desk-scale budget (the published full budget is ~1500× larger).
        "tr-8q" | "tr-8q-desk" => {
            let mut cfg = base(
                "tr-8q",
                SymmetryGroup::TimeReversal,
                8,
                false,
                3,
                vec![stage(1, 5e-4, 8), stage(2, 3e-4, 8)],
            );
            cfg.data.train_size = 60000;
            cfg.check_interval = 1;
            Some(cfg)
        }
        "tr-8q-uniform" => {
            let mut cfg = base(
                "tr-8q-uniform",
                SymmetryGroup::TimeReversal,
                8,
                true,
                5,
                vec![stage(1, 5e-4, 8), stage(2, 3e-4, 8)],
            );
            cfg.data.train_size = 60000;
            cfg.check_interval = 1;
            Some(cfg)
        }
        "z2z2t-4q" => {
            let mut cfg = base(
                "z2z2t-4q",
                SymmetryGroup::Z2xZ2T,
                4,
                false,
                3,
                vec![stage(1, 5e-4, 120)],
            );
            cfg.data.train_size = 30000;
            cfg.accuracy_threshold = 0.995;
            cfg.check_interval = 5;
            Some(cfg)
        }
        "z2z2t-8q" => {
            let mut cfg = base(
                "z2z2t-8q",
                SymmetryGroup::Z2xZ2T,
                8,
                false,
                3,
                vec![stage(3, 5e-4, 30)],
            );
            cfg.data.train_size = 30000;
            cfg.adam.batch_size = 30;
            cfg.accuracy_threshold = 0.97;
            cfg.check_interval = 2;
            Some(cfg)
        }
        "sb-asymmetric" => {
            let mut cfg = base(
                "sb-asymmetric",
                SymmetryGroup::TimeReversal,
                8,
                false,
                3,
                vec![stage(1, 5e-4, 8), stage(2, 3e-4, 8)],
            );
            cfg.data.train_size = 60000;
            cfg.check_interval = 1;
            cfg.data.label_source = LabelSource::AsymmetricProduct;
            Some(cfg)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            assert_eq!(cfg.task, name);
            cfg.validate().unwrap();
            // Round-trip through JSON.
            let text = serde_json::to_string_pretty(&cfg).unwrap();
            let back = RunConfig::parse_json(&text).unwrap();
            assert_eq!(cfg, back);
        }
        assert!(preset("no-such-preset").is_none());
        // The desk-scale alias resolves to the shipped 8-qubit preset.
        assert_eq!(preset("tr-8q-desk"), preset("tr-8q"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let cfg = preset("tr-4q").unwrap();
        let mut value = serde_json::to_value(&cfg).unwrap();
        value["untracked_knob"] = serde_json::json!(1);
        let text = serde_json::to_string(&value).unwrap();
        assert!(RunConfig::parse_json(&text).is_err());
    }

    #[test]
    fn depth_budget_is_validated() {
        let mut cfg = preset("tr-4q").unwrap();
        cfg.curriculum[0].l_noise = 2; // 2·2 ≥ 4
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let text = r#"{
            "task": "minimal",
            "symmetry": "time_reversal",
            "arch": { "n": 4 },
            "curriculum": [ { "l_noise": 1, "learning_rate": 5e-4 } ]
        }"#;
        let cfg = RunConfig::parse_json(text).unwrap();
        assert_eq!(cfg.loss_c, 50.0);
        assert_eq!(cfg.adam.batch_size, 50);
        assert_eq!(cfg.curriculum[0].max_epochs, 300);
        assert_eq!(cfg.accuracy_threshold, 1.0);
        assert_eq!(cfg.data.train_size, 6000);
    }
}
