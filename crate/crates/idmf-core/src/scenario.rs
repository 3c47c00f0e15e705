//! Scenario generation: leader speed profiles and IDM-driven followers.
//!
//! Replaces an external microscopic simulator. Leader profiles cover free
//! flow, oscillatory accelerating/braking, and signal-controlled stop-and-go;
//! followers are synthesized with the closed-loop IDM rollout, so the
//! generating process of every dataset is exactly the physics model.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::idm::{closed_loop_rollout, IdmParams, IntegrationConfig};
use crate::noise::derive_seed;
use crate::pipeline::DEFAULT_GAP_THRESHOLD;
use crate::trajectory::{Trajectory, TrajectoryPair};

pub const MAX_SPEED: f64 = 40.0;

/// Leader speed-profile family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LeadProfileKind {
    /// Constant speed.
    Constant,
    /// Speed oscillating around the base: accelerating and braking phases.
    Sinusoidal { amplitude: f64, period: f64 },
    /// Brake to a stop line during red, hold, re-accelerate on green.
    SignalStopGo {
        red_s: f64,
        green_s: f64,
        /// Stop-line position, meters ahead of the leader start.
        stop_line: f64,
        /// Braking rate used to stop, m/s^2.
        brake_rate: f64,
        /// Acceleration used to pull away, m/s^2.
        accel_rate: f64,
    },
}

/// Full leader profile specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadProfileSpec {
    pub kind: LeadProfileKind,
    pub base_speed: f64,
    pub duration: f64,
    pub dt: f64,
}

impl LeadProfileSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(CoreError::InvalidParams("dt must be positive".into()));
        }
        if self.duration < 8.0 {
            return Err(CoreError::InfeasibleScenario(format!(
                "duration {} shorter than one window",
                self.duration
            )));
        }
        let (lo, hi) = self.speed_range();
        if lo < 0.0 || hi > MAX_SPEED {
            return Err(CoreError::InfeasibleScenario(format!(
                "speed range [{lo}, {hi}] outside [0, {MAX_SPEED}]"
            )));
        }
        if let LeadProfileKind::SignalStopGo {
            red_s,
            green_s,
            stop_line,
            brake_rate,
            accel_rate,
        } = &self.kind
        {
            if *red_s <= 0.0 || *green_s <= 0.0 || *brake_rate <= 0.0 || *accel_rate <= 0.0 {
                return Err(CoreError::InfeasibleScenario(
                    "signal timings and rates must be positive".into(),
                ));
            }
            let braking_distance = self.base_speed * self.base_speed / (2.0 * brake_rate);
            if *stop_line < braking_distance {
                return Err(CoreError::InfeasibleScenario(format!(
                    "stop line at {stop_line} m closer than braking distance {braking_distance:.1} m"
                )));
            }
        }
        Ok(())
    }

    fn speed_range(&self) -> (f64, f64) {
        match &self.kind {
            LeadProfileKind::Constant => (self.base_speed, self.base_speed),
            LeadProfileKind::Sinusoidal { amplitude, .. } => {
                (self.base_speed - amplitude, self.base_speed + amplitude)
            }
            LeadProfileKind::SignalStopGo { .. } => (0.0, self.base_speed),
        }
    }
}

/// One simulated leader/follower episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub spec: LeadProfileSpec,
    pub initial_gap: f64,
    pub follower_initial_speed: f64,
    pub idm: IdmParams,
    pub seed: u64,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.idm.validate()?;
        if !(self.initial_gap > 0.0) {
            return Err(CoreError::InfeasibleScenario(format!(
                "initial gap {} must be positive",
                self.initial_gap
            )));
        }
        if self.follower_initial_speed < 0.0 {
            return Err(CoreError::InfeasibleScenario("negative follower speed".into()));
        }
        Ok(())
    }
}

/// Build the leader trajectory for a profile. The leader starts at position
/// 0; positions are the trapezoidal integral of the velocity series, so each
/// step is kinematically consistent by construction.
pub fn generate_lead_trajectory(spec: &LeadProfileSpec) -> Result<Trajectory> {
    spec.validate()?;
    let n = (spec.duration / spec.dt).round() as usize + 1;
    let velocities = match &spec.kind {
        LeadProfileKind::Constant => vec![spec.base_speed; n],
        LeadProfileKind::Sinusoidal { amplitude, period } => (0..n)
            .map(|k| {
                let t = k as f64 * spec.dt;
                spec.base_speed + amplitude * (2.0 * std::f64::consts::PI * t / period).sin()
            })
            .collect(),
        LeadProfileKind::SignalStopGo {
            red_s,
            green_s,
            stop_line,
            brake_rate,
            accel_rate,
        } => signal_velocities(
            n,
            spec.dt,
            spec.base_speed,
            *red_s,
            *green_s,
            *stop_line,
            *brake_rate,
            *accel_rate,
        ),
    };
    let mut positions = Vec::with_capacity(n);
    let mut s = 0.0;
    positions.push(s);
    for k in 1..n {
        s += 0.5 * (velocities[k - 1] + velocities[k]) * spec.dt;
        positions.push(s);
    }
    Trajectory::new("lead", spec.dt, positions, Some(velocities))
}

/// Velocity controller for the signalized profile. The signal cycles
/// red/green starting red at t = 0; the leader brakes so it comes to rest at
/// the stop line while the light is red and accelerates back to the base
/// speed on green. A latch keeps it braking once the stop has begun so the
/// servo cannot creep across the line at low speed.
#[allow(clippy::too_many_arguments)]
fn signal_velocities(
    n: usize,
    dt: f64,
    base: f64,
    red_s: f64,
    green_s: f64,
    stop_line: f64,
    brake_rate: f64,
    accel_rate: f64,
) -> Vec<f64> {
    let cycle = red_s + green_s;
    let mut v = base;
    let mut s = 0.0;
    let mut vs = Vec::with_capacity(n);
    let mut passed = false;
    let mut braking = false;
    for k in 0..n {
        vs.push(v);
        let t = k as f64 * dt;
        let red = t % cycle < red_s;
        let dist = stop_line - s;
        // Standing at the line does not count as having cleared it.
        passed = passed || dist < -0.01;
        if !red {
            braking = false;
        }
        let v_next = if !passed && red {
            let needed = v * v / (2.0 * dist.max(1e-6));
            if !braking && v > 0.0 && needed >= brake_rate {
                braking = true;
            }
            if braking {
                if v <= brake_rate * dt {
                    0.0
                } else {
                    // Servo toward a standstill exactly at the line.
                    v - needed.clamp(0.5 * brake_rate, 1.5 * brake_rate) * dt
                }
            } else {
                (v + accel_rate * dt).min(base)
            }
        } else {
            (v + accel_rate * dt).min(base)
        };
        s += 0.5 * (v + v_next) * dt;
        v = v_next;
    }
    vs
}

/// Simulate the follower behind a generated leader.
pub fn simulate_follower(lead: &Trajectory, scenario: &SimScenario) -> Result<TrajectoryPair> {
    scenario.validate()?;
    let cfg = IntegrationConfig::with_dt(lead.dt);
    let follower = closed_loop_rollout(
        lead,
        lead.positions[0] - scenario.initial_gap,
        scenario.follower_initial_speed,
        &scenario.idm,
        &cfg,
    )?;
    TrajectoryPair::new(
        "sim",
        lead.clone(),
        Trajectory::new(
            follower.vehicle_id,
            follower.dt,
            follower.positions,
            None,
        )?,
    )
}

/// Mixture weights over profile kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMix {
    pub constant: f64,
    pub sinusoidal: f64,
    pub signal_stop_go: f64,
}

impl Default for ScenarioMix {
    fn default() -> Self {
        Self {
            constant: 0.25,
            sinusoidal: 0.35,
            signal_stop_go: 0.40,
        }
    }
}

/// Per-dataset generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub mix: ScenarioMix,
    pub duration: f64,
    pub dt: f64,
    /// Scenarios violating the car-following envelope are redrawn up to
    /// this many times.
    pub retry_budget: usize,
    pub gap_threshold: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            mix: ScenarioMix::default(),
            duration: 12.0,
            dt: 0.1,
            retry_budget: 20,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
        }
    }
}

/// Record of everything needed to regenerate a dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioManifest {
    pub seed: u64,
    pub idm: IdmParams,
    pub config: GenerationConfig,
    pub scenarios: Vec<SimScenario>,
    pub accepted_first_try: usize,
    pub total_retries: usize,
    pub rejected: usize,
}

fn draw_scenario(rng: &mut ChaCha8Rng, idm: &IdmParams, cfg: &GenerationConfig, seed: u64) -> SimScenario {
    let mix = &cfg.mix;
    let total = mix.constant + mix.sinusoidal + mix.signal_stop_go;
    let pick = rng.gen_range(0.0..total);
    let kind = if pick < mix.constant {
        LeadProfileKind::Constant
    } else if pick < mix.constant + mix.sinusoidal {
        let amplitude = rng.gen_range(1.0..4.0);
        let period = rng.gen_range(8.0..24.0);
        LeadProfileKind::Sinusoidal { amplitude, period }
    } else {
        LeadProfileKind::SignalStopGo {
            red_s: rng.gen_range(4.0..10.0),
            green_s: rng.gen_range(6.0..12.0),
            stop_line: rng.gen_range(40.0..90.0),
            brake_rate: 3.0,
            accel_rate: 2.0,
        }
    };
    let base_speed = match kind {
        LeadProfileKind::Sinusoidal { amplitude, .. } => rng.gen_range(amplitude.max(5.0)..15.0),
        _ => rng.gen_range(6.0..15.0),
    };
    let initial_gap = rng.gen_range(idm.s0 + 2.0..45.0);
    let follower_initial_speed = (base_speed + rng.gen_range(-2.0..2.0)).max(0.0);
    SimScenario {
        spec: LeadProfileSpec {
            kind,
            base_speed,
            duration: cfg.duration,
            dt: cfg.dt,
        },
        initial_gap,
        follower_initial_speed,
        idm: *idm,
        seed,
    }
}

fn run_scenario(scenario: &SimScenario, gap_threshold: f64) -> Result<TrajectoryPair> {
    let lead = generate_lead_trajectory(&scenario.spec)?;
    let pair = simulate_follower(&lead, scenario)?;
    for (k, g) in pair.gaps().iter().enumerate() {
        if !(*g > 0.0 && *g <= gap_threshold) {
            return Err(CoreError::InfeasibleScenario(format!(
                "gap {g:.2} outside (0, {gap_threshold}] at sample {k}"
            )));
        }
    }
    Ok(pair)
}

/// Generate `n_scenarios` leader/follower pairs. Rejected scenarios are
/// redrawn deterministically; every accepted scenario is recorded in the
/// manifest. Fully reproducible from the seed.
pub fn build_dataset(
    n_scenarios: usize,
    idm: &IdmParams,
    cfg: &GenerationConfig,
    seed: u64,
) -> Result<(Vec<TrajectoryPair>, ScenarioManifest)> {
    if n_scenarios == 0 {
        return Err(CoreError::EmptyInput("n_scenarios must be >= 1".into()));
    }
    idm.validate()?;
    let mut pairs = Vec::with_capacity(n_scenarios);
    let mut manifest = ScenarioManifest {
        seed,
        idm: *idm,
        config: cfg.clone(),
        scenarios: Vec::with_capacity(n_scenarios),
        accepted_first_try: 0,
        total_retries: 0,
        rejected: 0,
    };
    for i in 0..n_scenarios {
        let scenario_seed = derive_seed(seed, i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(scenario_seed);
        let mut accepted = false;
        for attempt in 0..=cfg.retry_budget {
            let scenario = draw_scenario(&mut rng, idm, cfg, scenario_seed);
            match run_scenario(&scenario, cfg.gap_threshold) {
                Ok(mut pair) => {
                    pair.pair_id = format!("sc{i:05}");
                    pairs.push(pair);
                    manifest.scenarios.push(scenario);
                    if attempt == 0 {
                        manifest.accepted_first_try += 1;
                    } else {
                        manifest.total_retries += attempt;
                    }
                    accepted = true;
                    break;
                }
                Err(_) => continue,
            }
        }
        if !accepted {
            manifest.rejected += 1;
        }
    }
    if pairs.is_empty() {
        return Err(CoreError::InfeasibleScenario(
            "no scenario survived the retry budget".into(),
        ));
    }
    Ok((pairs, manifest))
}
