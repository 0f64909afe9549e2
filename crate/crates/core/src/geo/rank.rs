use serde::{Deserialize, Serialize};

use super::channels::Trajectory;

/// Below this speed a vehicle counts as stopped.
pub const STOP_SPEED: f64 = 0.5;
/// Minimum duration of a stop episode.
pub const STOP_MIN_S: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRank {
    pub trip_id: String,
    pub duration_s: f64,
    pub stop_count: usize,
    pub std_heading: f64,
    pub std_accel: f64,
    pub std_yaw: f64,
    pub composite_score: f64,
}

fn std_dev(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt()
}

fn derivative(t: &[f64], v: &[f64]) -> Vec<f64> {
    t.windows(2)
        .zip(v.windows(2))
        .map(|(tw, vw)| (vw[1] - vw[0]) / (tw[1] - tw[0]))
        .collect()
}

pub fn count_stops(t: &[f64], speed: &[f64]) -> usize {
    let mut count = 0;
    let mut start: Option<f64> = None;
    let mut counted = false;
    for (ti, v) in t.iter().zip(speed) {
        if *v < STOP_SPEED {
            let s = *start.get_or_insert(*ti);
            if !counted && ti - s >= STOP_MIN_S - 1e-9 {
                count += 1;
                counted = true;
            }
        } else {
            start = None;
            counted = false;
        }
    }
    count
}

/// Per-trip criteria before normalization.
fn criteria(tr: &Trajectory) -> TripRank {
    TripRank {
        trip_id: tr.trip_id.clone(),
        duration_s: tr.duration_s(),
        stop_count: count_stops(&tr.t, &tr.speed),
        std_heading: std_dev(&tr.heading_unwrapped),
        std_accel: std_dev(&derivative(&tr.t, &tr.speed)),
        std_yaw: std_dev(&derivative(&tr.t, &tr.heading_unwrapped)),
        composite_score: 0.0,
    }
}

/// Rank trips by the sum of per-criterion z-scores, highest first, ties
/// broken by trip id.
pub fn rank_trips(trips: &[Trajectory]) -> Vec<TripRank> {
    let mut ranks: Vec<TripRank> = trips.iter().map(criteria).collect();
    let columns: [fn(&TripRank) -> f64; 5] = [
        |r| r.duration_s,
        |r| r.stop_count as f64,
        |r| r.std_heading,
        |r| r.std_accel,
        |r| r.std_yaw,
    ];
    // sort by id first so the z-score sums accumulate in a fixed order
    ranks.sort_by(|a, b| a.trip_id.cmp(&b.trip_id));
    let mut scores = vec![0.0; ranks.len()];
    for col in columns {
        let values: Vec<f64> = ranks.iter().map(col).collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = std_dev(&values);
        if sd > 0.0 {
            for (s, v) in scores.iter_mut().zip(&values) {
                *s += (v - mean) / sd;
            }
        }
    }
    for (r, s) in ranks.iter_mut().zip(scores) {
        r.composite_score = s;
    }
    ranks.sort_by(|a, b| {
        b.composite_score
            .total_cmp(&a.composite_score)
            .then_with(|| a.trip_id.cmp(&b.trip_id))
    });
    ranks
}
