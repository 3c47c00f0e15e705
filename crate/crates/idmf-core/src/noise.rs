//! Correlated GPS position error synthesis.
//!
//! Errors follow a stationary ARMA(2,2) process around a constant mean:
//!
//! ```text
//! e_t = mean + y_t
//! y_t = ar1*y_{t-1} + ar2*y_{t-2} + eps_t + ma1*eps_{t-1} + ma2*eps_{t-2}
//! ```
//!
//! with Gaussian innovations. A 200-sample burn-in is discarded so series
//! start in the stationary regime.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::trajectory::SequenceWindow;

const BURN_IN: usize = 200;

/// ARMA(2,2) GPS error process coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaNoiseParams {
    pub ar1: f64,
    pub ar2: f64,
    pub ma1: f64,
    pub ma2: f64,
    /// Innovation standard deviation, meters.
    pub innovation_sd: f64,
    /// Process mean (displacement error), meters.
    pub mean: f64,
    pub level_name: String,
}

impl ArmaNoiseParams {
    pub fn new(
        ar1: f64,
        ar2: f64,
        ma1: f64,
        ma2: f64,
        innovation_sd: f64,
        mean: f64,
        level_name: impl Into<String>,
    ) -> Result<Self> {
        let p = Self {
            ar1,
            ar2,
            ma1,
            ma2,
            innovation_sd,
            mean,
            level_name: level_name.into(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Field-calibrated GPS error level.
    pub fn small() -> Self {
        Self::new(-0.9548, -0.3673, 0.9188, 0.3163, 1.16074, 1.7923, "small").unwrap()
    }

    /// Amplified displacement error level.
    pub fn middle() -> Self {
        Self::new(-0.9548, -0.3673, 0.9188, 0.3163, 1.16074, 5.3769, "middle").unwrap()
    }

    /// Strongly amplified displacement error level.
    pub fn big() -> Self {
        Self::new(-0.9548, -0.3673, 0.9188, 0.3163, 1.16074, 10.7538, "big").unwrap()
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "small" => Some(Self::small()),
            "middle" => Some(Self::middle()),
            "big" => Some(Self::big()),
            _ => None,
        }
    }

    /// Identity noise: zero innovations, zero mean.
    pub fn none() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, "none").unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.innovation_sd >= 0.0) {
            return Err(CoreError::InvalidParams(format!(
                "innovation_sd must be >= 0, got {}",
                self.innovation_sd
            )));
        }
        if !self.is_stationary() {
            return Err(CoreError::InvalidParams(format!(
                "AR polynomial 1 - {}z - {}z^2 has a root inside the unit circle",
                self.ar1, self.ar2
            )));
        }
        Ok(())
    }

    /// Roots of 1 - ar1*z - ar2*z^2 must lie outside the unit circle.
    fn is_stationary(&self) -> bool {
        let (a1, a2) = (self.ar1, self.ar2);
        if a2.abs() < 1e-12 {
            return a1.abs() < 1e-12 || (1.0 / a1).abs() > 1.0;
        }
        // Roots of a2 z^2 + a1 z - 1 = 0.
        let disc = a1 * a1 + 4.0 * a2;
        if disc < 0.0 {
            // Complex conjugate pair: |z|^2 = |product of roots| = 1/|a2|.
            1.0 / a2.abs() > 1.0
        } else {
            let sq = disc.sqrt();
            let z1 = (-a1 + sq) / (2.0 * a2);
            let z2 = (-a1 - sq) / (2.0 * a2);
            z1.abs() > 1.0 && z2.abs() > 1.0
        }
    }
}

/// Which window channels receive additive position noise. Velocities never
/// do: differencing noisy positions at 10 Hz would produce unusable
/// velocity estimates, so the stored velocity channels stay clean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseChannelSpec {
    pub leader_positions: bool,
    pub follower_positions: bool,
}

impl Default for NoiseChannelSpec {
    fn default() -> Self {
        Self {
            leader_positions: true,
            follower_positions: true,
        }
    }
}

/// SplitMix64-style seed derivation so sub-streams are decorrelated.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generate `length` error samples, burn-in discarded, deterministic in the
/// seed.
pub fn generate_noise(params: &ArmaNoiseParams, length: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(length);
    let (mut y1, mut y2) = (0.0, 0.0); // y_{t-1}, y_{t-2}
    let (mut e1, mut e2) = (0.0, 0.0); // eps_{t-1}, eps_{t-2}
    for t in 0..BURN_IN + length {
        let eps: f64 = rng.sample::<f64, _>(StandardNormal) * params.innovation_sd;
        let y = params.ar1 * y1 + params.ar2 * y2 + eps + params.ma1 * e1 + params.ma2 * e2;
        y2 = y1;
        y1 = y;
        e2 = e1;
        e1 = eps;
        if t >= BURN_IN {
            out.push(params.mean + y);
        }
    }
    out
}

/// Add independent noise series to the selected position channels of a
/// window. The input window is untouched; leader velocities and the stored
/// initial follower velocity stay clean.
pub fn apply_noise(
    window: &SequenceWindow,
    params: &ArmaNoiseParams,
    spec: &NoiseChannelSpec,
    seed: u64,
) -> SequenceWindow {
    let mut out = window.clone();
    let n = window.len();
    if spec.leader_positions {
        let e = generate_noise(params, n, derive_seed(seed, 0));
        for (p, e) in out.leader_positions.iter_mut().zip(&e) {
            *p += e;
        }
    }
    if spec.follower_positions {
        let e = generate_noise(params, n, derive_seed(seed, 1));
        for (p, e) in out.follower_positions.iter_mut().zip(&e) {
            *p += e;
        }
    }
    out
}

/// Noise a whole window set, one independent seed per window.
pub fn apply_noise_dataset(
    windows: &[SequenceWindow],
    params: &ArmaNoiseParams,
    spec: &NoiseChannelSpec,
    base_seed: u64,
) -> Vec<SequenceWindow> {
    windows
        .iter()
        .enumerate()
        .map(|(i, w)| apply_noise(w, params, spec, derive_seed(base_seed, 0x57ab_0000 + i as u64)))
        .collect()
}

/// Empirical mean absolute error of the process.
pub fn measure_mae(params: &ArmaNoiseParams, n_samples: usize, seed: u64) -> f64 {
    let series = generate_noise(params, n_samples, seed);
    series.iter().map(|e| e.abs()).sum::<f64>() / n_samples as f64
}

/// Closed-form stationary variance of the ARMA(2,2) output, from the
/// autocovariance linear system. Used as an independent check on the
/// generator.
pub fn stationary_variance(params: &ArmaNoiseParams) -> f64 {
    let (p1, p2) = (params.ar1, params.ar2);
    let (t1, t2) = (params.ma1, params.ma2);
    let s2 = params.innovation_sd * params.innovation_sd;
    // Cross-covariances g_k = E[y_t eps_{t-k}].
    let g0 = s2;
    let g1 = (p1 + t1) * s2;
    let g2 = p1 * g1 + p2 * g0 + t2 * s2;
    // gamma_0 = p1 g_1' + ... : solve the 3x3 system
    //   gamma0 - p1 gamma1 - p2 gamma2 = g0 + t1 g1 + t2 g2
    //  -p1 gamma0 + (1-p2) gamma1     = t1 g0 + t2 g1
    //  -p2 gamma0 - p1 gamma1 + gamma2 = t2 g0
    let b0 = g0 + t1 * g1 + t2 * g2;
    let b1 = t1 * g0 + t2 * g1;
    let b2 = t2 * g0;
    // Eliminate gamma2 via the third equation: gamma2 = b2 + p2 g0' ...
    // gamma2 = b2 + p2 gamma0 + p1 gamma1.
    // Substitute into the first:
    // gamma0 (1 - p2^2) - gamma1 (p1 + p1 p2) = b0 + p2 b2
    let c00 = 1.0 - p2 * p2;
    let c01 = -(p1 + p1 * p2);
    let r0 = b0 + p2 * b2;
    // Second equation: -p1 gamma0 + (1 - p2) gamma1 = b1
    let c10 = -p1;
    let c11 = 1.0 - p2;
    let det = c00 * c11 - c01 * c10;
    (r0 * c11 - c01 * b1) / det
}
