//! Per-window normalization.
//!
//! Car following is translation-invariant, so every position channel is
//! shifted by the leader's position at the window start and divided by a
//! fixed global scale; velocities share a fixed scale. The fixed scales keep
//! losses comparable across windows.

use serde::{Deserialize, Serialize};

use crate::trajectory::SequenceWindow;

pub const DEFAULT_POSITION_SCALE: f64 = 100.0;
pub const DEFAULT_VELOCITY_SCALE: f64 = 30.0;

/// Affine transform between meters and normalized network units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    /// Leader position at window start, meters.
    pub position_offset: f64,
    pub position_scale: f64,
    pub velocity_scale: f64,
}

impl Normalizer {
    pub fn for_window(window: &SequenceWindow) -> Self {
        Self {
            position_offset: window.leader_positions[0],
            position_scale: DEFAULT_POSITION_SCALE,
            velocity_scale: DEFAULT_VELOCITY_SCALE,
        }
    }

    pub fn normalize_position(&self, meters: f64) -> f64 {
        (meters - self.position_offset) / self.position_scale
    }

    pub fn denormalize_position(&self, unit: f64) -> f64 {
        unit * self.position_scale + self.position_offset
    }

    pub fn normalize_velocity(&self, mps: f64) -> f64 {
        mps / self.velocity_scale
    }

    pub fn denormalize_velocity(&self, unit: f64) -> f64 {
        unit * self.velocity_scale
    }
}

/// Normalize all channels of a window; the inverse is [`denormalize`].
pub fn normalize_window(window: &SequenceWindow) -> (SequenceWindow, Normalizer) {
    let norm = Normalizer::for_window(window);
    let w = SequenceWindow {
        window_id: window.window_id.clone(),
        dt: window.dt,
        leader_positions: window
            .leader_positions
            .iter()
            .map(|&p| norm.normalize_position(p))
            .collect(),
        leader_velocities: window
            .leader_velocities
            .iter()
            .map(|&v| norm.normalize_velocity(v))
            .collect(),
        follower_positions: window
            .follower_positions
            .iter()
            .map(|&p| norm.normalize_position(p))
            .collect(),
        follower_initial_velocity: norm.normalize_velocity(window.follower_initial_velocity),
    };
    (w, norm)
}

/// Map normalized position values back to meters.
pub fn denormalize(values: &[f64], norm: &Normalizer) -> Vec<f64> {
    values.iter().map(|&v| norm.denormalize_position(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn window(start: f64) -> SequenceWindow {
        let dt = 0.1;
        let n = 80;
        SequenceWindow {
            window_id: "w".into(),
            dt,
            leader_positions: (0..n).map(|k| start + 12.0 * k as f64 * dt).collect(),
            leader_velocities: vec![12.0; n],
            follower_positions: (0..n).map(|k| start - 15.0 + 12.0 * k as f64 * dt).collect(),
            follower_initial_velocity: 12.0,
        }
    }

    #[test]
    fn leader_start_maps_to_zero() {
        let (w, _) = normalize_window(&window(123.4));
        assert_eq!(w.leader_positions[0], 0.0);
    }

    #[test]
    fn velocity_scaling() {
        let norm = Normalizer {
            position_offset: 0.0,
            position_scale: 100.0,
            velocity_scale: 30.0,
        };
        assert!((norm.normalize_velocity(15.0) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(start in -1000.0f64..1000.0) {
            let original = window(start);
            let (normed, norm) = normalize_window(&original);
            let back = denormalize(&normed.leader_positions, &norm);
            for (a, b) in back.iter().zip(&original.leader_positions) {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
            let back = denormalize(&normed.follower_positions, &norm);
            for (a, b) in back.iter().zip(&original.follower_positions) {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
            let v = norm.denormalize_velocity(normed.follower_initial_velocity);
            prop_assert!((v - original.follower_initial_velocity).abs() < 1e-9);
        }
    }
}
