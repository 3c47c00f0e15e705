//! CSV persistence for trajectory pairs and the dataset manifest.
//!
//! Format: header `t,pair_id,s_lead,v_lead,s_follow`, one row per sample,
//! rows of one pair contiguous and in time order. Values carry 13
//! significant digits so a round trip stays well inside 1e-9.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::trajectory::{Trajectory, TrajectoryPair};

pub const CSV_HEADER: &str = "t,pair_id,s_lead,v_lead,s_follow";

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn save_csv(pairs: &[TrajectoryPair], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for pair in pairs {
        let vel = pair
            .leader
            .velocities
            .as_ref()
            .ok_or_else(|| CoreError::InvalidTrajectory("leader without velocities".into()))?;
        for k in 0..pair.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt(k as f64 * pair.dt()),
                pair.pair_id,
                fmt(pair.leader.positions[k]),
                fmt(vel[k]),
                fmt(pair.follower.positions[k]),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<TrajectoryPair>> {
    let reader = BufReader::new(File::open(path)?);
    let mut pairs: Vec<TrajectoryPair> = Vec::new();

    struct Accum {
        pair_id: String,
        t: Vec<f64>,
        s_lead: Vec<f64>,
        v_lead: Vec<f64>,
        s_follow: Vec<f64>,
    }
    let mut current: Option<Accum> = None;

    let finish = |acc: Accum, line: usize| -> Result<TrajectoryPair> {
        if acc.t.len() < 2 {
            return Err(CoreError::CsvParse {
                line,
                message: format!("pair {} has fewer than 2 samples", acc.pair_id),
            });
        }
        let dt = acc.t[1] - acc.t[0];
        if !(dt > 0.0) {
            return Err(CoreError::CsvParse {
                line,
                message: format!("pair {} has non-increasing time column", acc.pair_id),
            });
        }
        let leader = Trajectory::new("lead", dt, acc.s_lead, Some(acc.v_lead))?;
        let follower = Trajectory::new("foll", dt, acc.s_follow, None)?;
        TrajectoryPair::new(acc.pair_id, leader, follower)
    };

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line_no == 1 {
            if line.trim() != CSV_HEADER {
                return Err(CoreError::CsvParse {
                    line: 1,
                    message: format!("expected header '{CSV_HEADER}', got '{line}'"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(CoreError::CsvParse {
                line: line_no,
                message: format!("expected 5 columns, got {}", cells.len()),
            });
        }
        let num = |cell: &str, name: &str| -> Result<f64> {
            cell.trim().parse::<f64>().map_err(|_| CoreError::CsvParse {
                line: line_no,
                message: format!("non-numeric {name} value '{cell}'"),
            })
        };
        let t = num(cells[0], "t")?;
        let pair_id = cells[1].to_string();
        let s_lead = num(cells[2], "s_lead")?;
        let v_lead = num(cells[3], "v_lead")?;
        let s_follow = num(cells[4], "s_follow")?;

        let start_new = current
            .as_ref()
            .map(|acc| acc.pair_id != pair_id)
            .unwrap_or(true);
        if start_new {
            if let Some(acc) = current.take() {
                pairs.push(finish(acc, line_no)?);
            }
            current = Some(Accum {
                pair_id,
                t: vec![t],
                s_lead: vec![s_lead],
                v_lead: vec![v_lead],
                s_follow: vec![s_follow],
            });
        } else if let Some(acc) = current.as_mut() {
            acc.t.push(t);
            acc.s_lead.push(s_lead);
            acc.v_lead.push(v_lead);
            acc.s_follow.push(s_follow);
        }
    }
    if let Some(acc) = current.take() {
        let line = 0;
        pairs.push(finish(acc, line)?);
    }
    Ok(pairs)
}

/// Dataset-level metadata stored alongside the pair CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dt: f64,
    pub window_len: usize,
    pub gap_threshold: f64,
    pub seed: u64,
    pub split_ratios: (f64, f64, f64),
    pub window_counts: SplitCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

pub fn save_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, manifest)?;
    w.flush()?;
    Ok(())
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write as _;

    fn sample_pair(id: &str, n: usize, seed: u64) -> TrajectoryPair {
        // Deterministic pseudo-random but smooth-enough series.
        let dt = 0.1;
        let mut foll = vec![0.0; n];
        let mut lead = vec![0.0; n];
        let mut vel = vec![0.0; n];
        for k in 0..n {
            let t = k as f64 * dt;
            let wobble = ((seed as f64 + 1.0) * 0.37 + t * 1.3).sin();
            foll[k] = 3.0 * t + 0.5 * wobble;
            lead[k] = foll[k] + 12.0 + 2.0 * ((t * 0.7).cos());
            vel[k] = 3.0 + 0.2 * wobble;
        }
        TrajectoryPair::new(
            id,
            Trajectory::new("l", dt, lead, Some(vel)).unwrap(),
            Trajectory::new("f", dt, foll, None).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn empty_pair_list_gives_header_only_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.csv");
        save_csv(&[], &path).unwrap();
        let content = std::fs::read_to_string(&path).unwrap();
        assert_eq!(content.trim(), CSV_HEADER);
        assert!(load_csv(&path).unwrap().is_empty());
    }

    #[test]
    fn non_numeric_cell_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "{CSV_HEADER}").unwrap();
        for k in 0..10 {
            if k == 5 {
                writeln!(f, "0.5,p,oops,1.0,2.0").unwrap();
            } else {
                writeln!(f, "{},p,{},1.0,2.0", k as f64 * 0.1, 10.0 + k as f64).unwrap();
            }
        }
        match load_csv(&path) {
            Err(CoreError::CsvParse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn round_trip_is_identity(n_pairs in 1usize..4, len in 2usize..120, seed in 0u64..50) {
            let pairs: Vec<TrajectoryPair> = (0..n_pairs)
                .map(|i| sample_pair(&format!("p{i}"), len, seed + i as u64))
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("pairs.csv");
            save_csv(&pairs, &path).unwrap();
            let loaded = load_csv(&path).unwrap();
            prop_assert_eq!(loaded.len(), pairs.len());
            for (a, b) in loaded.iter().zip(&pairs) {
                prop_assert_eq!(&a.pair_id, &b.pair_id);
                prop_assert!((a.dt() - b.dt()).abs() < 1e-12);
                for (x, y) in a.leader.positions.iter().zip(&b.leader.positions) {
                    prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
                }
                for (x, y) in a.follower.positions.iter().zip(&b.follower.positions) {
                    prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
                }
                let av = a.leader.velocities.as_ref().unwrap();
                let bv = b.leader.velocities.as_ref().unwrap();
                for (x, y) in av.iter().zip(bv) {
                    prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
                }
            }
        }
    }
}
