//! Longitudinal trajectory types shared by the whole pipeline.
//!
//! Positions are meters along the lane, velocities meters/second, sampled at
//! a fixed `dt`. A leader trajectory carries positions and velocities; a
//! follower trajectory carries positions only.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// A single vehicle's sampled longitudinal motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub vehicle_id: String,
    /// Seconds per sample.
    pub dt: f64,
    /// Positions in meters, one per sample.
    pub positions: Vec<f64>,
    /// Velocities in m/s; follower trajectories carry `None`.
    pub velocities: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn new(
        vehicle_id: impl Into<String>,
        dt: f64,
        positions: Vec<f64>,
        velocities: Option<Vec<f64>>,
    ) -> Result<Self> {
        let t = Self {
            vehicle_id: vehicle_id.into(),
            dt,
            positions,
            velocities,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(CoreError::InvalidTrajectory(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.positions.len() < 2 {
            return Err(CoreError::InvalidTrajectory(format!(
                "need at least 2 samples, got {}",
                self.positions.len()
            )));
        }
        if !self.positions.iter().all(|p| p.is_finite()) {
            return Err(CoreError::InvalidTrajectory(
                "positions contain non-finite values".into(),
            ));
        }
        if let Some(v) = &self.velocities {
            if v.len() != self.positions.len() {
                return Err(CoreError::MismatchedLength(v.len(), self.positions.len()));
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(CoreError::InvalidTrajectory(
                    "velocities contain non-finite values".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn duration(&self) -> f64 {
        (self.len().saturating_sub(1)) as f64 * self.dt
    }
}

/// A leader/follower pair sampled on a common clock.
///
/// The leader is ahead of the follower at every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPair {
    pub pair_id: String,
    /// Leading vehicle: positions and velocities.
    pub leader: Trajectory,
    /// Following vehicle: positions only.
    pub follower: Trajectory,
}

impl TrajectoryPair {
    pub fn new(pair_id: impl Into<String>, leader: Trajectory, follower: Trajectory) -> Result<Self> {
        let p = Self {
            pair_id: pair_id.into(),
            leader,
            follower,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.leader.validate()?;
        self.follower.validate()?;
        if self.leader.dt != self.follower.dt {
            return Err(CoreError::MismatchedDt(self.leader.dt, self.follower.dt));
        }
        if self.leader.len() != self.follower.len() {
            return Err(CoreError::MismatchedLength(
                self.leader.len(),
                self.follower.len(),
            ));
        }
        if self.leader.velocities.is_none() {
            return Err(CoreError::InvalidTrajectory(format!(
                "leader {} must carry velocities",
                self.leader.vehicle_id
            )));
        }
        for (i, (l, f)) in self
            .leader
            .positions
            .iter()
            .zip(&self.follower.positions)
            .enumerate()
        {
            if l <= f {
                return Err(CoreError::CollisionState {
                    index: i,
                    gap: l - f,
                });
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.leader.dt
    }

    pub fn len(&self) -> usize {
        self.leader.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leader.is_empty()
    }

    /// Gap series: leader position minus follower position.
    pub fn gaps(&self) -> Vec<f64> {
        self.leader
            .positions
            .iter()
            .zip(&self.follower.positions)
            .map(|(l, f)| l - f)
            .collect()
    }
}

/// A fixed-length slice of a pair, the unit consumed by training and
/// evaluation. `follower_initial_velocity` is the forward finite difference
/// of the follower's first two positions, recorded at windowing time so it
/// stays clean when noise is injected later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceWindow {
    pub window_id: String,
    pub dt: f64,
    pub leader_positions: Vec<f64>,
    pub leader_velocities: Vec<f64>,
    pub follower_positions: Vec<f64>,
    pub follower_initial_velocity: f64,
}

impl SequenceWindow {
    pub fn len(&self) -> usize {
        self.leader_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leader_positions.is_empty()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.leader_positions
            .iter()
            .zip(&self.follower_positions)
            .map(|(l, f)| l - f)
            .collect()
    }
}

/// Train/validation/test partition of a window set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<SequenceWindow>,
    pub validation: Vec<SequenceWindow>,
    pub test: Vec<SequenceWindow>,
    pub split_seed: u64,
}

impl DatasetSplit {
    pub fn total(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }
}
