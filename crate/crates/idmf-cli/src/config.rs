//! Resolved run configuration: defaults, then config file, then flags.
//!
//! Every subcommand echoes the fully resolved configuration into its output
//! directory so a run is replayable from that file alone. All randomness
//! flows from the explicit seeds here; nothing is seeded from the clock.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use idmf_core::idm::IdmParams;
use idmf_core::noise::ArmaNoiseParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    // Simulation.
    pub n_scenarios: usize,
    pub duration: f64,
    pub dt: f64,
    pub idm_preset: String,
    pub gap_threshold: f64,
    // Windowing and splitting.
    pub window_len: usize,
    pub stride: usize,
    pub split_ratios: (f64, f64, f64),
    // Noise.
    pub noise_level: String,
    // Network and training.
    pub mu: f64,
    pub hidden: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub grad_clip_norm: f64,
    // Desk preset: small network, truncated splits, few epochs.
    pub desk: bool,
    pub desk_train_windows: usize,
    // Sweep axes.
    pub sweep_mu: Vec<f64>,
    pub sweep_levels: Vec<String>,
    // Calibration.
    pub calib_budget: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_scenarios: 1000,
            duration: 12.0,
            dt: 0.1,
            idm_preset: "sumo".into(),
            gap_threshold: 50.0,
            window_len: 80,
            stride: 80,
            split_ratios: (0.5, 0.2, 0.3),
            noise_level: "small".into(),
            mu: 0.7,
            hidden: 128,
            layers: 2,
            learning_rate: 1e-3,
            weight_decay: 1e-5,
            batch_size: 64,
            epochs: 200,
            grad_clip_norm: 5.0,
            desk: false,
            desk_train_windows: 200,
            sweep_mu: vec![1.0, 0.7, 0.5, 0.3, 0.0],
            sweep_levels: vec!["small".into(), "middle".into()],
            calib_budget: 6000,
        }
    }
}

/// Flag-level overrides; `None` keeps the file/default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_scenarios: Option<usize>,
    pub idm_preset: Option<String>,
    pub noise_level: Option<String>,
    pub mu: Option<f64>,
    pub hidden: Option<usize>,
    pub epochs: Option<usize>,
    pub desk: bool,
    pub sweep_mu: Option<Vec<f64>>,
    pub sweep_levels: Option<Vec<String>>,
    pub calib_budget: Option<usize>,
}

impl RunConfig {
    /// Defaults, overlaid with an optional JSON config file, overlaid with
    /// flags. Unknown config keys fail fast, naming the key.
    pub fn resolve(config_path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match config_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => Self::default(),
        };
        if let Some(v) = overrides.seed {
            cfg.seed = v;
        }
        if let Some(v) = overrides.n_scenarios {
            cfg.n_scenarios = v;
        }
        if let Some(v) = &overrides.idm_preset {
            cfg.idm_preset = v.clone();
        }
        if let Some(v) = &overrides.noise_level {
            cfg.noise_level = v.clone();
        }
        if let Some(v) = overrides.mu {
            cfg.mu = v;
        }
        if let Some(v) = overrides.hidden {
            cfg.hidden = v;
        }
        if let Some(v) = overrides.epochs {
            cfg.epochs = v;
        }
        if overrides.desk {
            cfg.desk = true;
        }
        if let Some(v) = &overrides.sweep_mu {
            cfg.sweep_mu = v.clone();
        }
        if let Some(v) = &overrides.sweep_levels {
            cfg.sweep_levels = v.clone();
        }
        if let Some(v) = overrides.calib_budget {
            cfg.calib_budget = v;
        }
        if cfg.desk {
            cfg.hidden = 32;
            cfg.epochs = cfg.epochs.min(30);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.idm_params().is_none() {
            bail!(
                "unknown idm_preset '{}' (expected sumo, ngsim-wang2021, ngsim-yang2022)",
                self.idm_preset
            );
        }
        if self.noise_params().is_none() {
            bail!(
                "unknown noise_level '{}' (expected none, small, middle, big)",
                self.noise_level
            );
        }
        let (a, b, c) = self.split_ratios;
        if (a + b + c - 1.0).abs() > 1e-9 {
            bail!("split_ratios {:?} do not sum to 1", self.split_ratios);
        }
        Ok(())
    }

    pub fn idm_params(&self) -> Option<IdmParams> {
        IdmParams::preset(&self.idm_preset)
    }

    pub fn noise_params(&self) -> Option<ArmaNoiseParams> {
        if self.noise_level == "none" {
            Some(ArmaNoiseParams::none())
        } else {
            ArmaNoiseParams::preset(&self.noise_level)
        }
    }

    /// Echo the resolved configuration into the output directory.
    pub fn echo(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join("config.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
