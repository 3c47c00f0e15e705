//! Model and baseline evaluation, and the loss-weight x noise-level sweep.
//!
//! Training inputs and labels are noisy; every score is computed against
//! clean ground truth. All cells of a sweep share the same clean split and
//! the same per-level noise draws, so rows differ only in the model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use idmf_core::idm::{closed_loop_rollout, IdmParams, IntegrationConfig};
use idmf_core::noise::{apply_noise_dataset, derive_seed, ArmaNoiseParams, NoiseChannelSpec};
use idmf_core::trajectory::{DatasetSplit, SequenceWindow, Trajectory};
use idmf_nn::net::{FollowerNet, NetConfig};
use idmf_nn::tape::Tape;
use idmf_nn::trainer::{train, Example, SplitExamples, TrainConfig};

use crate::error::EvalError;
use crate::metrics::{fde, rmse};
use crate::report::{MetricReport, MetricRow, SweepModel, SweepSpec};

/// Pair a clean split with per-window noise, one independent stream per
/// window per channel. Streams depend only on (noise_seed, split, index),
/// so every model evaluated on this dataset sees identical noise.
pub fn make_examples(
    split: &DatasetSplit,
    noise: &ArmaNoiseParams,
    spec: &NoiseChannelSpec,
    noise_seed: u64,
) -> SplitExamples {
    let build = |windows: &[SequenceWindow], stream: u64| -> Vec<Example> {
        let noisy = apply_noise_dataset(windows, noise, spec, derive_seed(noise_seed, stream));
        noisy
            .into_iter()
            .zip(windows.iter().cloned())
            .map(|(noisy, clean)| Example { noisy, clean })
            .collect()
    };
    SplitExamples {
        train: build(&split.train, 1),
        validation: build(&split.validation, 2),
        test: build(&split.test, 3),
    }
}

/// Score a trained network on noisy test inputs against clean truth.
pub fn evaluate_model(
    net: &FollowerNet,
    test: &[Example],
    tag: &str,
    mu: Option<f64>,
    level: &str,
) -> Result<MetricRow, EvalError> {
    if test.is_empty() {
        return Err(EvalError::Input("empty test set".into()));
    }
    let horizon = test[0].noisy.len();
    if horizon != net.config.horizon {
        return Err(EvalError::HorizonMismatch {
            net: net.config.horizon,
            data: horizon,
        });
    }
    let scores: Vec<(f64, f64)> = test
        .par_iter()
        .map_init(Tape::new, |tape, ex| {
            let pred = net.predict_with(tape, &ex.noisy);
            let truth = &ex.clean.follower_positions;
            (rmse(&pred, truth), fde(&pred, truth))
        })
        .collect();
    let n = scores.len() as f64;
    Ok(MetricRow {
        model: tag.into(),
        mu,
        noise_level: level.into(),
        rmse: scores.iter().map(|s| s.0).sum::<f64>() / n,
        fde: scores.iter().map(|s| s.1).sum::<f64>() / n,
        windows: scores.len(),
        excluded: 0,
        status: "ok".into(),
    })
}

/// Score the pure-physics baseline: a closed-loop rollout per window from
/// the noisy initial follower position and the clean initial velocity,
/// against the noisy leader. Collapsed rollouts are excluded and counted.
pub fn evaluate_idm_baseline(
    test: &[Example],
    idm: &IdmParams,
    level: &str,
) -> Result<MetricRow, EvalError> {
    if test.is_empty() {
        return Err(EvalError::Input("empty test set".into()));
    }
    let mut rmse_sum = 0.0;
    let mut fde_sum = 0.0;
    let mut scored = 0usize;
    let mut excluded = 0usize;
    for ex in test {
        let w = &ex.noisy;
        let cfg = IntegrationConfig::with_dt(w.dt);
        let leader = Trajectory::new(
            "lead",
            w.dt,
            w.leader_positions.clone(),
            Some(w.leader_velocities.clone()),
        )?;
        match closed_loop_rollout(
            &leader,
            w.follower_positions[0],
            w.follower_initial_velocity,
            idm,
            &cfg,
        ) {
            Ok(rollout) => {
                let truth = &ex.clean.follower_positions;
                rmse_sum += rmse(&rollout.positions, truth);
                fde_sum += fde(&rollout.positions, truth);
                scored += 1;
            }
            Err(_) => excluded += 1,
        }
    }
    if scored == 0 {
        return Err(EvalError::Input("every baseline rollout collapsed".into()));
    }
    Ok(MetricRow {
        model: "model-based-idm".into(),
        mu: None,
        noise_level: level.into(),
        rmse: rmse_sum / scored as f64,
        fde: fde_sum / scored as f64,
        windows: scored,
        excluded,
        status: "ok".into(),
    })
}

/// Everything a sweep cell needs besides the model axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepContext {
    pub net: NetConfig,
    pub train: TrainConfig,
    /// Physics parameters used for model-loss targets and the IDM baseline.
    pub idm: IdmParams,
    pub channels: NoiseChannelSpec,
}

/// Train and evaluate every (model, noise level) cell. Rows appear in spec
/// order; a failed cell is recorded and the sweep continues.
pub fn sweep(spec: &SweepSpec, split: &DatasetSplit, ctx: &SweepContext) -> MetricReport {
    let mut report = MetricReport::default();
    for (level_idx, level) in spec.noise_levels.iter().enumerate() {
        let noise = match ArmaNoiseParams::preset(level) {
            Some(p) => p,
            None => {
                for model in &spec.models {
                    report.rows.push(MetricRow::failed(
                        model.tag(),
                        model.mu(),
                        level,
                        format!("unknown noise level '{level}'"),
                    ));
                }
                continue;
            }
        };
        let noise_seed = derive_seed(spec.data_seed, 0x6e01 + level_idx as u64);
        let examples = make_examples(split, &noise, &ctx.channels, noise_seed);
        for (model_idx, model) in spec.models.iter().enumerate() {
            let row = run_cell(
                *model,
                level,
                &examples,
                ctx,
                derive_seed(ctx.train.seed, (level_idx * 131 + model_idx) as u64),
            );
            report.rows.push(row);
        }
    }
    report
}

fn run_cell(
    model: SweepModel,
    level: &str,
    examples: &SplitExamples,
    ctx: &SweepContext,
    cell_seed: u64,
) -> MetricRow {
    let result = (|| -> Result<MetricRow, EvalError> {
        match model {
            SweepModel::IdmBaseline => evaluate_idm_baseline(&examples.test, &ctx.idm, level),
            trained => {
                let mu = trained.mu().expect("trained models carry mu");
                let net = FollowerNet::init(ctx.net, cell_seed)?;
                let cfg = TrainConfig {
                    mu,
                    seed: cell_seed,
                    ..ctx.train
                };
                let (best, _record) = train(&net, examples, &ctx.idm, &cfg)?;
                evaluate_model(&best, &examples.test, trained.tag(), Some(mu), level)
            }
        }
    })();
    result.unwrap_or_else(|e| MetricRow::failed(model.tag(), model.mu(), level, e.to_string()))
}
