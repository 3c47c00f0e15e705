//! Evaluation report rows and file emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// One evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    /// Model family tag: "learning-based", "hybrid", "model-based-idm".
    pub model: String,
    /// Data-term weight for trained models; absent for the pure-IDM row.
    pub mu: Option<f64>,
    pub noise_level: String,
    /// Mean per-window RMSE against clean truth, meters. NaN if the cell
    /// failed.
    pub rmse: f64,
    /// Mean final displacement error, meters.
    pub fde: f64,
    /// Windows scored.
    pub windows: usize,
    /// Windows excluded (collapsed rollouts).
    pub excluded: usize,
    pub status: String,
}

impl MetricRow {
    pub fn failed(model: &str, mu: Option<f64>, level: &str, reason: String) -> Self {
        Self {
            model: model.into(),
            mu,
            noise_level: level.into(),
            rmse: f64::NAN,
            fde: f64::NAN,
            windows: 0,
            excluded: 0,
            status: format!("failed: {reason}"),
        }
    }
}

/// Collected rows of one evaluation or sweep, in specification order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn find(&self, model: &str, level: &str) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.noise_level == level)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,mu,noise_level,rmse_m,fde_m,windows,excluded,status\n");
        for r in &self.rows {
            let mu = r.mu.map(|m| format!("{m}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{},{},{}\n",
                r.model, mu, r.noise_level, r.rmse, r.fde, r.windows, r.excluded, r.status
            ));
        }
        out
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), EvalError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut csv = BufWriter::new(File::create(dir.join("report.csv"))?);
        csv.write_all(self.to_csv().as_bytes())?;
        csv.flush()?;
        let mut json = BufWriter::new(File::create(dir.join("report.json"))?);
        serde_json::to_writer_pretty(&mut json, self)?;
        json.flush()?;
        Ok(())
    }
}

/// Which models a sweep trains and evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SweepModel {
    /// Pure learning baseline (trained with mu = 1).
    Learning,
    /// Hybrid with the given data weight.
    Hybrid(f64),
    /// Pure physics baseline (closed-loop rollout, no training).
    IdmBaseline,
}

impl SweepModel {
    pub fn tag(&self) -> &'static str {
        match self {
            SweepModel::Learning => "learning-based",
            SweepModel::Hybrid(_) => "hybrid",
            SweepModel::IdmBaseline => "model-based-idm",
        }
    }

    pub fn mu(&self) -> Option<f64> {
        match self {
            SweepModel::Learning => Some(1.0),
            SweepModel::Hybrid(mu) => Some(*mu),
            SweepModel::IdmBaseline => None,
        }
    }

    /// Map a mu value to a sweep model: 1 is the pure learning baseline,
    /// 0 the pure physics baseline.
    pub fn from_mu(mu: f64) -> Self {
        if mu >= 1.0 {
            SweepModel::Learning
        } else if mu <= 0.0 {
            SweepModel::IdmBaseline
        } else {
            SweepModel::Hybrid(mu)
        }
    }
}

/// Sweep axes: models x noise levels, all sharing one data seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub models: Vec<SweepModel>,
    /// Noise preset names ("none", "small", "middle", "big").
    pub noise_levels: Vec<String>,
    pub data_seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            models: vec![
                SweepModel::Learning,
                SweepModel::Hybrid(0.7),
                SweepModel::Hybrid(0.5),
                SweepModel::Hybrid(0.3),
                SweepModel::IdmBaseline,
            ],
            noise_levels: vec!["small".into(), "middle".into()],
            data_seed: 0,
        }
    }
}
