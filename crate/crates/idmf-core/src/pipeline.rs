//! Pair extraction, windowing, and dataset splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::trajectory::{DatasetSplit, SequenceWindow, Trajectory, TrajectoryPair};

/// Default car-following gap threshold in meters. Gaps above it are treated
/// as free flow and removed from the dataset.
pub const DEFAULT_GAP_THRESHOLD: f64 = 50.0;

/// Default window length in samples (8 s at 0.1 s per sample).
pub const DEFAULT_WINDOW_LEN: usize = 80;

/// Pair up consecutive vehicles and keep the spans where the follower is in
/// a car-following state (0 < gap <= `gap_threshold`).
///
/// Vehicles are ordered by initial position; each adjacent (ahead, behind)
/// couple is scanned and every maximal qualifying run of samples becomes its
/// own pair. Spans where the gap exceeds the threshold are cut out, not
/// clipped to the threshold.
pub fn extract_pairs(
    trajectories: &[Trajectory],
    gap_threshold: f64,
) -> Result<Vec<TrajectoryPair>> {
    if !(gap_threshold > 0.0) {
        return Err(CoreError::InvalidParams(format!(
            "gap_threshold must be positive, got {gap_threshold}"
        )));
    }
    if trajectories.is_empty() {
        return Ok(Vec::new());
    }
    for t in trajectories {
        t.validate()?;
        if t.dt != trajectories[0].dt {
            return Err(CoreError::MismatchedDt(trajectories[0].dt, t.dt));
        }
        if t.len() != trajectories[0].len() {
            return Err(CoreError::MismatchedLength(trajectories[0].len(), t.len()));
        }
    }

    let mut order: Vec<usize> = (0..trajectories.len()).collect();
    order.sort_by(|&a, &b| {
        trajectories[b].positions[0]
            .partial_cmp(&trajectories[a].positions[0])
            .expect("finite positions")
    });

    let mut pairs = Vec::new();
    for couple in order.windows(2) {
        let leader = &trajectories[couple[0]];
        let follower = &trajectories[couple[1]];
        if leader.velocities.is_none() {
            return Err(CoreError::InvalidTrajectory(format!(
                "leader {} must carry velocities",
                leader.vehicle_id
            )));
        }
        for (part, (start, end)) in qualifying_runs(leader, follower, gap_threshold)
            .into_iter()
            .enumerate()
        {
            let pair_id = if part == 0 {
                format!("{}-{}", leader.vehicle_id, follower.vehicle_id)
            } else {
                format!("{}-{}#{}", leader.vehicle_id, follower.vehicle_id, part)
            };
            let lead = Trajectory {
                vehicle_id: leader.vehicle_id.clone(),
                dt: leader.dt,
                positions: leader.positions[start..end].to_vec(),
                velocities: leader
                    .velocities
                    .as_ref()
                    .map(|v| v[start..end].to_vec()),
            };
            let foll = Trajectory {
                vehicle_id: follower.vehicle_id.clone(),
                dt: follower.dt,
                positions: follower.positions[start..end].to_vec(),
                velocities: None,
            };
            pairs.push(TrajectoryPair::new(pair_id, lead, foll)?);
        }
    }
    Ok(pairs)
}

/// Maximal runs of at least two samples with 0 < gap <= threshold.
fn qualifying_runs(
    leader: &Trajectory,
    follower: &Trajectory,
    gap_threshold: f64,
) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for i in 0..leader.len() {
        let gap = leader.positions[i] - follower.positions[i];
        let ok = gap > 0.0 && gap <= gap_threshold;
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= 2 {
                    runs.push((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if leader.len() - s >= 2 {
            runs.push((s, leader.len()));
        }
    }
    runs
}

/// Cut pairs into fixed-length windows of `h` samples starting every
/// `stride` samples. Trailing remainders shorter than `h` are dropped, and a
/// window is admitted only if every sample keeps 0 < gap <= `gap_threshold`.
///
/// The follower's initial velocity is recorded as the forward finite
/// difference of its first two positions.
pub fn window_pairs(
    pairs: &[TrajectoryPair],
    h: usize,
    stride: usize,
    gap_threshold: f64,
) -> Result<Vec<SequenceWindow>> {
    if h < 2 {
        return Err(CoreError::InvalidParams(format!("window length must be >= 2, got {h}")));
    }
    if stride < 1 {
        return Err(CoreError::InvalidParams(format!("stride must be >= 1, got {stride}")));
    }
    let mut windows = Vec::new();
    for pair in pairs {
        let lead_v = pair
            .leader
            .velocities
            .as_ref()
            .ok_or_else(|| CoreError::InvalidTrajectory("leader without velocities".into()))?;
        let gaps = pair.gaps();
        let n = pair.len();
        let mut start = 0;
        let mut k = 0;
        while start + h <= n {
            let admissible = gaps[start..start + h]
                .iter()
                .all(|&g| g > 0.0 && g <= gap_threshold);
            if admissible {
                let fp = &pair.follower.positions[start..start + h];
                windows.push(SequenceWindow {
                    window_id: format!("{}@{}", pair.pair_id, k),
                    dt: pair.dt(),
                    leader_positions: pair.leader.positions[start..start + h].to_vec(),
                    leader_velocities: lead_v[start..start + h].to_vec(),
                    follower_positions: fp.to_vec(),
                    follower_initial_velocity: (fp[1] - fp[0]) / pair.dt(),
                });
            }
            start += stride;
            k += 1;
        }
    }
    Ok(windows)
}

/// Deterministically shuffle and partition windows into train/val/test.
///
/// Sizes follow the floor-then-remainder rule: floor(n*r_train),
/// floor(n*r_val), remainder to test.
pub fn split_dataset(
    windows: Vec<SequenceWindow>,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<DatasetSplit> {
    let (r0, r1, r2) = ratios;
    if (r0 + r1 + r2 - 1.0).abs() > 1e-9 {
        return Err(CoreError::InvalidRatios([r0, r1, r2]));
    }
    if r0 < 0.0 || r1 < 0.0 || r2 < 0.0 {
        return Err(CoreError::InvalidRatios([r0, r1, r2]));
    }
    if windows.is_empty() {
        return Err(CoreError::EmptyInput("split_dataset on empty window set".into()));
    }
    let n = windows.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n_train = (n as f64 * r0).floor() as usize;
    let n_val = (n as f64 * r1).floor() as usize;

    let mut slots: Vec<Option<SequenceWindow>> = windows.into_iter().map(Some).collect();
    let mut take = |idxs: &[usize]| -> Vec<SequenceWindow> {
        idxs.iter()
            .map(|&i| slots[i].take().expect("index used once"))
            .collect()
    };
    let train = take(&order[..n_train]);
    let validation = take(&order[n_train..n_train + n_val]);
    let test = take(&order[n_train + n_val..]);

    Ok(DatasetSplit {
        train,
        validation,
        test,
        split_seed: seed,
    })
}
