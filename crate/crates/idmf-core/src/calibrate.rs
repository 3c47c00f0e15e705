//! IDM parameter calibration by coordinate descent on closed-loop FDE.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::idm::{
    closed_loop_rollout, consistent_initial_velocity, IdmParams, IntegrationConfig,
};
use crate::trajectory::TrajectoryPair;

/// Box bounds for the six IDM parameters, ordered (v0, T, s0, a, b, delta).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lower: [f64; 6],
    pub upper: [f64; 6],
}

impl Default for ParamBounds {
    fn default() -> Self {
        // Generous box containing the published parameter sets.
        Self {
            lower: [5.0, 0.2, 0.2, 0.5, 0.5, 1.0],
            upper: [30.0, 3.0, 6.0, 6.0, 8.0, 8.0],
        }
    }
}

impl ParamBounds {
    pub fn validate(&self) -> Result<()> {
        for i in 0..6 {
            if !(self.lower[i] <= self.upper[i]) {
                return Err(CoreError::InvalidParams(format!(
                    "bounds inverted on coordinate {i}: {} > {}",
                    self.lower[i], self.upper[i]
                )));
            }
        }
        Ok(())
    }

    pub fn center(&self) -> [f64; 6] {
        let mut c = [0.0; 6];
        for i in 0..6 {
            c[i] = 0.5 * (self.lower[i] + self.upper[i]);
        }
        c
    }
}

/// Outcome of [`validate_fde`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FdeOutcome {
    /// Mean absolute final-position error over evaluated pairs, meters.
    pub mean_fde: f64,
    pub pairs_evaluated: usize,
    /// Pairs whose rollout collapsed (excluded from the mean).
    pub collapsed: usize,
}

fn pair_fde(pair: &TrajectoryPair, p: &IdmParams, cfg: &IntegrationConfig) -> Result<f64> {
    let v0 = consistent_initial_velocity(
        pair.follower.positions[0],
        pair.follower.positions[1],
        pair.leader.positions[0],
        pair.leader.velocities.as_ref().expect("leader velocities")[0],
        p,
        cfg,
    )?;
    let rollout = closed_loop_rollout(&pair.leader, pair.follower.positions[0], v0, p, cfg)?;
    let last = pair.len() - 1;
    Ok((rollout.positions[last] - pair.follower.positions[last]).abs())
}

/// Mean final displacement error of closed-loop rollouts against observed
/// follower endpoints. Collapsed rollouts are excluded and counted.
pub fn validate_fde(pairs: &[TrajectoryPair], p: &IdmParams) -> Result<FdeOutcome> {
    p.validate()?;
    if pairs.is_empty() {
        return Err(CoreError::EmptyInput("validate_fde on empty pair set".into()));
    }
    let cfg = IntegrationConfig::with_dt(pairs[0].dt());
    let mut sum = 0.0;
    let mut evaluated = 0usize;
    let mut collapsed = 0usize;
    for pair in pairs {
        match pair_fde(pair, p, &cfg) {
            Ok(f) => {
                sum += f;
                evaluated += 1;
            }
            Err(_) => collapsed += 1,
        }
    }
    if evaluated == 0 {
        return Err(CoreError::Calibration("all rollouts collapsed".into()));
    }
    Ok(FdeOutcome {
        mean_fde: sum / evaluated as f64,
        pairs_evaluated: evaluated,
        collapsed,
    })
}

/// Collapsed rollouts contribute this penalty during calibration so the
/// search is pushed out of infeasible regions.
const COLLAPSE_PENALTY: f64 = 1e6;

fn objective(pairs: &[TrajectoryPair], x: [f64; 6], cfg: &IntegrationConfig) -> f64 {
    let p = IdmParams::from_array(x);
    if p.validate().is_err() {
        return COLLAPSE_PENALTY;
    }
    let mut sum = 0.0;
    for pair in pairs {
        sum += pair_fde(pair, &p, cfg).unwrap_or(COLLAPSE_PENALTY);
    }
    sum / pairs.len() as f64
}

/// Calibrate IDM parameters on observed pairs by coordinate descent on the
/// mean closed-loop FDE.
///
/// One coarse grid pass per coordinate localizes the basin, then a compass
/// search (per-coordinate steps, halved whenever a full sweep fails to
/// improve) polishes the minimum. The budget counts objective evaluations;
/// exhausting it returns the best point so far. Deterministic: fixed start
/// (box center), fixed sweep order, no randomness.
pub fn calibrate_idm(
    pairs: &[TrajectoryPair],
    bounds: &ParamBounds,
    budget: usize,
) -> Result<(IdmParams, f64)> {
    bounds.validate()?;
    if pairs.is_empty() {
        return Err(CoreError::EmptyInput("calibrate_idm on empty pair set".into()));
    }
    let cfg = IntegrationConfig::with_dt(pairs[0].dt());

    let mut x = bounds.center();
    let mut evals = 0usize;
    let mut best = objective(pairs, x, &cfg);
    evals += 1;

    // Coarse localization: one grid pass per coordinate.
    const GRID: usize = 13;
    for coord in 0..6 {
        let (lo, hi) = (bounds.lower[coord], bounds.upper[coord]);
        if hi - lo < 1e-12 {
            continue;
        }
        for g in 0..GRID {
            if evals >= budget {
                break;
            }
            let mut cand = x;
            cand[coord] = lo + (hi - lo) * g as f64 / (GRID - 1) as f64;
            let val = objective(pairs, cand, &cfg);
            evals += 1;
            if val < best - 1e-12 {
                best = val;
                x = cand;
            }
        }
    }

    // Compass search: probe +/- one step per coordinate, halve steps when a
    // full sweep brings no improvement.
    let mut steps = [0.0; 6];
    for i in 0..6 {
        steps[i] = (bounds.upper[i] - bounds.lower[i]) / (GRID - 1) as f64;
    }
    let range_floor: Vec<f64> = (0..6)
        .map(|i| 1e-5 * (bounds.upper[i] - bounds.lower[i]).max(1e-12))
        .collect();
    while evals < budget && steps.iter().zip(&range_floor).any(|(s, f)| s > f) {
        let mut improved = false;
        for coord in 0..6 {
            if steps[coord] <= range_floor[coord] {
                continue;
            }
            for dir in [1.0, -1.0] {
                if evals >= budget {
                    break;
                }
                let t = (x[coord] + dir * steps[coord])
                    .clamp(bounds.lower[coord], bounds.upper[coord]);
                if t == x[coord] {
                    continue;
                }
                let mut cand = x;
                cand[coord] = t;
                let val = objective(pairs, cand, &cfg);
                evals += 1;
                if val < best - 1e-12 {
                    best = val;
                    x = cand;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in steps.iter_mut() {
                *s *= 0.5;
            }
        }
    }

    if best >= COLLAPSE_PENALTY {
        return Err(CoreError::Calibration(
            "no parameter point produced a surviving rollout".into(),
        ));
    }
    Ok((IdmParams::from_array(x), best))
}
