//! Intelligent Driver Model: acceleration law, open-loop acceleration
//! sequences, ballistic double integration, and closed-loop rollouts.
//!
//! The acceleration law is the standard IDM form
//!
//! ```text
//! a(v, dv, s) = a_max * [1 - (v/v0)^delta - (s*(v, dv)/s)^2]
//! s*(v, dv)   = s0 + max(0, v*T + v*dv / (2*sqrt(a_max*b_comf)))
//! ```
//!
//! with `v` the follower speed, `dv = v_follow - v_lead` the approach rate,
//! and `s` the gap to the leader.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::trajectory::{SequenceWindow, Trajectory};

/// Physical IDM parameter set.
///
/// Serialized field names follow the conventional symbols: `v0`, `T`, `s0`,
/// `a`, `b`, `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// Desired speed, m/s.
    #[serde(rename = "v0")]
    pub v0: f64,
    /// Desired time headway, s.
    #[serde(rename = "T")]
    pub t_headway: f64,
    /// Minimum gap, m.
    #[serde(rename = "s0")]
    pub s0: f64,
    /// Maximum acceleration, m/s^2.
    #[serde(rename = "a")]
    pub a_max: f64,
    /// Comfortable deceleration, m/s^2.
    #[serde(rename = "b")]
    pub b_comf: f64,
    /// Acceleration exponent.
    #[serde(rename = "delta")]
    pub delta: f64,
}

impl IdmParams {
    /// Default parameter set used by the scenario simulator.
    pub fn sumo() -> Self {
        Self {
            v0: 16.7,
            t_headway: 1.0,
            s0: 2.5,
            a_max: 3.0,
            b_comf: 4.5,
            delta: 4.0,
        }
    }

    /// Field-calibrated set (Wang et al. 2021).
    pub fn ngsim_wang2021() -> Self {
        Self {
            v0: 15.97,
            t_headway: 1.3,
            s0: 1.57,
            a_max: 2.49,
            b_comf: 2.39,
            delta: 4.0,
        }
    }

    /// Field-calibrated set (Yang et al. 2022).
    pub fn ngsim_yang2022() -> Self {
        Self {
            v0: 12.58,
            t_headway: 0.48,
            s0: 0.31,
            a_max: 1.98,
            b_comf: 4.37,
            delta: 1.34,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "sumo" => Some(Self::sumo()),
            "ngsim-wang2021" => Some(Self::ngsim_wang2021()),
            "ngsim-yang2022" => Some(Self::ngsim_yang2022()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.v0 >= 0.0
            && self.t_headway >= 0.0
            && self.s0 > 0.0
            && self.a_max > 0.0
            && self.b_comf > 0.0
            && self.delta > 0.0;
        if ok {
            Ok(())
        } else {
            Err(CoreError::InvalidParams(format!("invalid IDM parameters {self:?}")))
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.v0, self.t_headway, self.s0, self.a_max, self.b_comf, self.delta]
    }

    pub fn from_array(x: [f64; 6]) -> Self {
        Self {
            v0: x[0],
            t_headway: x[1],
            s0: x[2],
            a_max: x[3],
            b_comf: x[4],
            delta: x[5],
        }
    }
}

/// Discretization settings for trajectory integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    /// Seconds per step.
    pub dt: f64,
    /// Velocities are clamped at this floor; vehicles do not reverse.
    pub velocity_floor: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            velocity_floor: 0.0,
        }
    }
}

impl IntegrationConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            velocity_floor: 0.0,
        }
    }
}

/// Desired dynamic gap s*(v, dv).
pub fn desired_gap(v_follow: f64, dv: f64, p: &IdmParams) -> f64 {
    let dynamic = v_follow * p.t_headway + v_follow * dv / (2.0 * (p.a_max * p.b_comf).sqrt());
    p.s0 + dynamic.max(0.0)
}

/// IDM acceleration for a follower at speed `v_follow` behind a leader at
/// speed `v_lead` with bumper gap `gap`.
pub fn idm_acceleration(v_follow: f64, v_lead: f64, gap: f64, p: &IdmParams) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(CoreError::CollisionState { index: 0, gap });
    }
    let dv = v_follow - v_lead;
    let s_star = desired_gap(v_follow, dv, p);
    let free = if p.v0 > 0.0 {
        (v_follow / p.v0).powf(p.delta)
    } else {
        // Degenerate desired speed: any motion is over the limit.
        if v_follow > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    Ok(p.a_max * (1.0 - free - (s_star / gap).powi(2)))
}

/// Gap at which the acceleration vanishes for equal leader/follower speed.
pub fn equilibrium_gap(v: f64, p: &IdmParams) -> f64 {
    let s_star = desired_gap(v, 0.0, p);
    s_star / (1.0 - (v / p.v0).powf(p.delta)).sqrt()
}

/// Central finite-difference velocities (forward/backward at the ends).
pub fn finite_difference_velocities(positions: &[f64], dt: f64) -> Vec<f64> {
    let n = positions.len();
    let mut v = vec![0.0; n];
    if n < 2 {
        return v;
    }
    v[0] = (positions[1] - positions[0]) / dt;
    v[n - 1] = (positions[n - 1] - positions[n - 2]) / dt;
    for k in 1..n - 1 {
        v[k] = (positions[k + 1] - positions[k - 1]) / (2.0 * dt);
    }
    v
}

/// Open-loop IDM acceleration series along a window's observed states.
///
/// Follower velocities are finite differences of the observed follower
/// positions; the leader state is taken as observed. Errors identify the
/// first sample with a non-positive gap.
pub fn open_loop_accel_sequence(window: &SequenceWindow, p: &IdmParams) -> Result<Vec<f64>> {
    p.validate()?;
    let v_follow = finite_difference_velocities(&window.follower_positions, window.dt);
    let mut accels = Vec::with_capacity(window.len());
    for k in 0..window.len() {
        let gap = window.leader_positions[k] - window.follower_positions[k];
        if !(gap > 0.0) {
            return Err(CoreError::CollisionState { index: k, gap });
        }
        let a = idm_acceleration(v_follow[k], window.leader_velocities[k], gap, p)?;
        accels.push(a);
    }
    Ok(accels)
}

/// Ballistic double integration of an acceleration series.
///
/// Per step: `v' = max(floor, v + a*dt)`, `s' = s + v*dt + a*dt^2/2`.
/// The output has the same length as the input and starts at `s_init`;
/// the final acceleration only shapes nothing beyond the last sample.
pub fn double_integrate(accels: &[f64], s_init: f64, v_init: f64, cfg: &IntegrationConfig) -> Vec<f64> {
    let mut positions = Vec::with_capacity(accels.len());
    if accels.is_empty() {
        return positions;
    }
    let dt = cfg.dt;
    let mut s = s_init;
    let mut v = v_init;
    positions.push(s);
    for &a in &accels[..accels.len() - 1] {
        s += v * dt + 0.5 * a * dt * dt;
        v = (v + a * dt).max(cfg.velocity_floor);
        positions.push(s);
    }
    positions
}

/// Model-based position prediction for a window: open-loop accelerations
/// integrated from the window's observed initial state.
///
/// The stored initial velocity is a forward difference, which for ballistic
/// data equals v0 + a0*dt/2; the half-step is removed using the first
/// open-loop acceleration so integration starts at the underlying v0.
pub fn open_loop_positions(
    window: &SequenceWindow,
    p: &IdmParams,
    cfg: &IntegrationConfig,
) -> Result<Vec<f64>> {
    let accels = open_loop_accel_sequence(window, p)?;
    let v_init = window.follower_initial_velocity - 0.5 * accels[0] * cfg.dt;
    Ok(double_integrate(
        &accels,
        window.follower_positions[0],
        v_init.max(cfg.velocity_floor),
        cfg,
    ))
}

/// Simulate a follower behind an observed leader with the follower's own
/// evolving state (the pure-physics baseline and the scenario generator).
pub fn closed_loop_rollout(
    leader: &Trajectory,
    follower_s0: f64,
    follower_v0: f64,
    p: &IdmParams,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    p.validate()?;
    let lead_v = leader
        .velocities
        .as_ref()
        .ok_or_else(|| CoreError::InvalidTrajectory("leader without velocities".into()))?;
    let dt = cfg.dt;
    let n = leader.len();
    let mut positions = Vec::with_capacity(n);
    let mut velocities = Vec::with_capacity(n);
    let mut s = follower_s0;
    let mut v = follower_v0.max(cfg.velocity_floor);
    for k in 0..n {
        let gap = leader.positions[k] - s;
        if !(gap > 0.0) {
            return Err(CoreError::RolloutCollapse { step: k, gap });
        }
        positions.push(s);
        velocities.push(v);
        let a = idm_acceleration(v, lead_v[k], gap, p)?;
        s += v * dt + 0.5 * a * dt * dt;
        v = (v + a * dt).max(cfg.velocity_floor);
    }
    Trajectory::new("idm-follower", leader.dt, positions, Some(velocities))
}

/// Initial velocity consistent with the ballistic update, recovered from the
/// first two observed positions.
///
/// Solves `s1 = s0 + v*dt + idm(v, ...)*dt^2/2` for `v` by fixed-point
/// iteration; on ballistically generated data this recovers the generator's
/// initial velocity to machine precision.
pub fn consistent_initial_velocity(
    s0_follow: f64,
    s1_follow: f64,
    lead_s0: f64,
    lead_v0: f64,
    p: &IdmParams,
    cfg: &IntegrationConfig,
) -> Result<f64> {
    let dt = cfg.dt;
    let forward = (s1_follow - s0_follow) / dt;
    let gap = lead_s0 - s0_follow;
    if !(gap > 0.0) {
        return Err(CoreError::CollisionState { index: 0, gap });
    }
    let mut v = forward.max(cfg.velocity_floor);
    for _ in 0..32 {
        let a = idm_acceleration(v, lead_v0, gap, p)?;
        let next = (forward - 0.5 * a * dt).max(cfg.velocity_floor);
        if (next - v).abs() < 1e-13 {
            return Ok(next);
        }
        v = next;
    }
    Ok(v)
}
