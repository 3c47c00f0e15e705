//! On-disk dataset layout shared by the subcommands.
//!
//! `simulate` writes a clean pair dataset:
//!   pairs.csv        trajectory pairs
//!   manifest.json    dt, window length, gap threshold, seed, split ratios,
//!                    per-split window counts
//!   scenarios.json   generator manifest (every scenario's parameters)
//!
//! `noise` turns it into a training-ready dataset of (noisy, clean) window
//! examples:
//!   dataset.json     splits plus noise metadata

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use idmf_core::csv_io::{load_manifest, save_manifest, DatasetManifest, SplitCounts};
use idmf_core::noise::{ArmaNoiseParams, NoiseChannelSpec};
use idmf_core::pipeline::{split_dataset, window_pairs};
use idmf_core::trajectory::{DatasetSplit, TrajectoryPair};
use idmf_eval::make_examples;
use idmf_nn::trainer::SplitExamples;

use crate::config::RunConfig;

pub const PAIRS_FILE: &str = "pairs.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCENARIOS_FILE: &str = "scenarios.json";
pub const DATASET_FILE: &str = "dataset.json";

/// Window the pairs and split them exactly as recorded in the manifest.
pub fn split_from_manifest(
    pairs: &[TrajectoryPair],
    manifest: &DatasetManifest,
) -> Result<DatasetSplit> {
    let windows = window_pairs(
        pairs,
        manifest.window_len,
        manifest.window_len,
        manifest.gap_threshold,
    )?;
    Ok(split_dataset(windows, manifest.split_ratios, manifest.seed)?)
}

pub fn write_pair_dataset(
    dir: &Path,
    pairs: &[TrajectoryPair],
    manifest: &DatasetManifest,
    scenarios: &impl Serialize,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    idmf_core::csv_io::save_csv(pairs, dir.join(PAIRS_FILE))?;
    save_manifest(manifest, dir.join(MANIFEST_FILE))?;
    std::fs::write(
        dir.join(SCENARIOS_FILE),
        serde_json::to_string_pretty(scenarios)?,
    )?;
    Ok(())
}

pub fn read_pair_dataset(dir: &Path) -> Result<(Vec<TrajectoryPair>, DatasetManifest)> {
    let pairs = idmf_core::csv_io::load_csv(dir.join(PAIRS_FILE))
        .with_context(|| format!("loading {}", dir.join(PAIRS_FILE).display()))?;
    let manifest = load_manifest(dir.join(MANIFEST_FILE))
        .with_context(|| format!("loading {}", dir.join(MANIFEST_FILE).display()))?;
    Ok((pairs, manifest))
}

/// A training-ready dataset: noisy inputs paired with clean truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoisyDataset {
    pub level: String,
    pub noise: ArmaNoiseParams,
    pub channels: NoiseChannelSpec,
    pub noise_seed: u64,
    pub window_len: usize,
    pub dt: f64,
    pub splits: SplitExamples,
}

impl NoisyDataset {
    pub fn counts(&self) -> SplitCounts {
        SplitCounts {
            train: self.splits.train.len(),
            validation: self.splits.validation.len(),
            test: self.splits.test.len(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(DATASET_FILE);
        std::fs::write(&path, serde_json::to_string(self)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(DATASET_FILE);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("loading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Truncate splits to desk scale (train capped, val/test scaled with
    /// the 0.5/0.2/0.3 proportions).
    pub fn truncate_for_desk(&mut self, train_cap: usize) {
        let val_cap = train_cap * 2 / 5;
        let test_cap = train_cap * 3 / 5;
        self.splits.train.truncate(train_cap);
        self.splits.validation.truncate(val_cap);
        self.splits.test.truncate(test_cap);
    }
}

/// Apply the configured noise level to a clean pair dataset.
pub fn make_noisy_dataset(
    pairs: &[TrajectoryPair],
    manifest: &DatasetManifest,
    cfg: &RunConfig,
) -> Result<NoisyDataset> {
    let split = split_from_manifest(pairs, manifest)?;
    let noise = cfg
        .noise_params()
        .context("unknown noise level")?;
    let channels = NoiseChannelSpec::default();
    let noise_seed = idmf_core::noise::derive_seed(cfg.seed, 0x6e01);
    let splits = make_examples(&split, &noise, &channels, noise_seed);
    Ok(NoisyDataset {
        level: cfg.noise_level.clone(),
        noise,
        channels,
        noise_seed,
        window_len: manifest.window_len,
        dt: manifest.dt,
        splits,
    })
}
