use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::enu::{geodetic_to_enu, Geodetic};
use crate::error::{Error, Result};

/// Largest tolerated spacing between consecutive samples. Larger gaps split
/// the trip.
pub const MAX_GAP_S: f64 = 0.5;
/// Below this speed the derived heading is held at its previous value.
pub const HEADING_HOLD_SPEED: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Position {
    Geodetic(Geodetic),
    Enu { x: f64, y: f64 },
}

/// One logged sample, already in SI units. `heading` is the ENU angle in
/// radians, counterclockwise from east.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawTripRecord {
    pub t: f64,
    pub position: Position,
    pub speed: Option<f64>,
    pub heading: Option<f64>,
    pub yaw_rate: Option<f64>,
    pub accel_lon: Option<f64>,
}

impl RawTripRecord {
    pub fn enu(t: f64, x: f64, y: f64) -> Self {
        Self {
            t,
            position: Position::Enu { x, y },
            speed: None,
            heading: None,
            yaw_rate: None,
            accel_lon: None,
        }
    }

    pub fn geodetic(t: f64, lat_deg: f64, lon_deg: f64, alt_m: f64) -> Self {
        Self {
            t,
            position: Position::Geodetic(Geodetic::new(lat_deg, lon_deg, alt_m)),
            speed: None,
            heading: None,
            yaw_rate: None,
            accel_lon: None,
        }
    }
}

/// A uniformly sampled trip in the local ENU frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub trip_id: String,
    pub t: Vec<f64>,
    pub x_enu: Vec<f64>,
    pub y_enu: Vec<f64>,
    pub speed: Vec<f64>,
    pub heading_unwrapped: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        match (self.t.first(), self.t.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Records carrying the already-extracted channels, in ENU form.
    pub fn to_records(&self) -> Vec<RawTripRecord> {
        (0..self.len())
            .map(|i| RawTripRecord {
                t: self.t[i],
                position: Position::Enu {
                    x: self.x_enu[i],
                    y: self.y_enu[i],
                },
                speed: Some(self.speed[i]),
                heading: Some(self.heading_unwrapped[i]),
                yaw_rate: None,
                accel_lon: None,
            })
            .collect()
    }

    pub fn check_invariants(&self, min_len: usize) -> Result<()> {
        let n = self.t.len();
        if [
            self.x_enu.len(),
            self.y_enu.len(),
            self.speed.len(),
            self.heading_unwrapped.len(),
        ]
        .iter()
        .any(|&l| l != n)
        {
            return Err(Error::InvalidInput(format!(
                "trip {} has channels of unequal length",
                self.trip_id
            )));
        }
        if n < min_len {
            return Err(Error::TooShort {
                trip_id: self.trip_id.clone(),
                len: n,
                min: min_len,
            });
        }
        if self.t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!(
                "trip {} times are not strictly increasing",
                self.trip_id
            )));
        }
        if self.heading_unwrapped.windows(2).any(|w| (w[1] - w[0]).abs() > PI) {
            return Err(Error::InvalidInput(format!(
                "trip {} heading is not unwrapped",
                self.trip_id
            )));
        }
        Ok(())
    }
}

/// Remove 2 pi jumps so consecutive samples differ by at most pi.
pub fn unwrap_angles(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (i, &a) in raw.iter().enumerate() {
        if i > 0 {
            let prev_raw = raw[i - 1];
            let mut d = a - prev_raw;
            while d > PI {
                d -= TAU;
                offset -= TAU;
            }
            while d < -PI {
                d += TAU;
                offset += TAU;
            }
        }
        out.push(a + offset);
    }
    out
}

fn median_spacing(t: &[f64]) -> f64 {
    let mut d: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Turn one contiguous run of records into a trajectory.
///
/// Geodetic positions are converted to ENU with the first record as origin.
/// Missing speed/heading channels are derived from positions by central
/// differences; logged channels are used as-is. Heading is unwrapped either
/// way.
pub fn extract_channels(trip_id: &str, records: &[RawTripRecord], min_len: usize) -> Result<Trajectory> {
    let n = records.len();
    if n < min_len.max(2) {
        return Err(Error::TooShort {
            trip_id: trip_id.to_string(),
            len: n,
            min: min_len.max(2),
        });
    }
    for w in records.windows(2) {
        let dt = w[1].t - w[0].t;
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "trip {trip_id}: time not strictly increasing at t = {}",
                w[1].t
            )));
        }
        if dt > MAX_GAP_S {
            return Err(Error::GapTooLarge {
                trip_id: trip_id.to_string(),
                t: w[0].t,
                gap_s: dt,
            });
        }
    }
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let spacing = median_spacing(&t);
    if !(0.09..=0.11).contains(&spacing) {
        return Err(Error::InvalidInput(format!(
            "trip {trip_id}: median sample spacing {spacing:.4} s is not 10 Hz"
        )));
    }

    let origin = match records[0].position {
        Position::Geodetic(g) => Some(g),
        Position::Enu { .. } => None,
    };
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for r in records {
        match (r.position, origin) {
            (Position::Geodetic(g), Some(o)) => {
                if !g.is_valid() {
                    return Err(Error::InvalidInput(format!(
                        "trip {trip_id}: invalid coordinates at t = {}",
                        r.t
                    )));
                }
                let e = geodetic_to_enu(g, o);
                x.push(e.east);
                y.push(e.north);
            }
            (Position::Enu { x: ex, y: ey }, None) => {
                x.push(ex);
                y.push(ey);
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "trip {trip_id}: mixed geodetic and ENU positions"
                )))
            }
        }
    }

    let logged_speed: Option<Vec<f64>> = records.iter().map(|r| r.speed).collect();
    let logged_heading: Option<Vec<f64>> = records.iter().map(|r| r.heading).collect();
    let (derived_speed, derived_heading) = if logged_speed.is_none() || logged_heading.is_none() {
        let (s, h) = derive_speed_heading(&t, &x, &y);
        (Some(s), Some(h))
    } else {
        (None, None)
    };
    let speed = logged_speed.or(derived_speed).expect("speed channel available");
    let heading_raw = logged_heading.or(derived_heading).expect("heading channel available");

    let traj = Trajectory {
        trip_id: trip_id.to_string(),
        t,
        x_enu: x,
        y_enu: y,
        speed,
        heading_unwrapped: unwrap_angles(&heading_raw),
    };
    traj.check_invariants(min_len)?;
    Ok(traj)
}

/// Central-difference speed and heading; one-sided at the ends.
fn derive_speed_heading(t: &[f64], x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = t.len();
    let mut speed = Vec::with_capacity(n);
    let mut heading: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let dx = x[b] - x[a];
        let dy = y[b] - y[a];
        let v = dx.hypot(dy) / (t[b] - t[a]);
        speed.push(v);
        let h = if v < HEADING_HOLD_SPEED {
            heading.last().copied().unwrap_or_else(|| dy.atan2(dx))
        } else {
            dy.atan2(dx)
        };
        heading.push(h);
    }
    // back-fill a heading held from a stationary start
    if let Some(first_moving) = speed.iter().position(|v| *v >= HEADING_HOLD_SPEED) {
        let h = heading[first_moving];
        for v in heading.iter_mut().take(first_moving) {
            *v = h;
        }
    }
    (speed, heading)
}

/// Split a record stream at gaps larger than [`MAX_GAP_S`]. Segments shorter
/// than `min_len` are dropped; the second value counts them.
pub fn split_at_gaps(
    trip_id: &str,
    records: &[RawTripRecord],
    min_len: usize,
) -> (Vec<(String, Vec<RawTripRecord>)>, usize) {
    let mut runs: Vec<Vec<RawTripRecord>> = Vec::new();
    let mut current: Vec<RawTripRecord> = Vec::new();
    for r in records {
        if let Some(last) = current.last() {
            if r.t - last.t > MAX_GAP_S {
                runs.push(std::mem::take(&mut current));
            }
        }
        current.push(*r);
    }
    if !current.is_empty() {
        runs.push(current);
    }
    let total = runs.len();
    let kept: Vec<Vec<RawTripRecord>> = runs.into_iter().filter(|r| r.len() >= min_len).collect();
    let dropped = total - kept.len();
    let named = if total == 1 {
        kept.into_iter().map(|r| (trip_id.to_string(), r)).collect()
    } else {
        kept.into_iter()
            .enumerate()
            .map(|(i, r)| (format!("{trip_id}.{i}"), r))
            .collect()
    };
    (named, dropped)
}
