//! Scripted synthetic trips.
//!
//! A script is a sequence of maneuvers applied to a point vehicle. Speed and
//! heading are closed-form within each maneuver; position is their integral,
//! computed with composite Simpson quadrature between samples. Gaussian noise
//! is added to each channel independently afterwards.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Trajectory;
use crate::SAMPLE_PERIOD_S;

/// Shortest script total accepted by [`ManeuverScript::validate`].
pub const MIN_SCRIPT_S: f64 = 30.0;
const SIMPSON_INTERVALS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnDirection {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Cruise {
        duration_s: f64,
    },
    Accel {
        duration_s: f64,
        accel: f64,
    },
    /// Speed decreases at `decel` and holds at zero once reached.
    Brake {
        duration_s: f64,
        decel: f64,
    },
    /// Constant-speed arc; yaw rate is `speed / radius_m`.
    TurnArc {
        duration_s: f64,
        radius_m: f64,
        direction: TurnDirection,
    },
    /// Lateral offset of `lateral_m` (positive to the left) at constant speed
    /// with a raised-cosine lateral velocity.
    LaneChange {
        duration_s: f64,
        lateral_m: f64,
    },
    Stop {
        duration_s: f64,
    },
}

impl Segment {
    pub fn duration_s(&self) -> f64 {
        match *self {
            Segment::Cruise { duration_s }
            | Segment::Accel { duration_s, .. }
            | Segment::Brake { duration_s, .. }
            | Segment::TurnArc { duration_s, .. }
            | Segment::LaneChange { duration_s, .. }
            | Segment::Stop { duration_s } => duration_s,
        }
    }

    pub fn kind(&self) -> ManeuverKind {
        match self {
            Segment::Cruise { .. } => ManeuverKind::Cruise,
            Segment::Accel { .. } => ManeuverKind::Accel,
            Segment::Brake { .. } => ManeuverKind::Brake,
            Segment::TurnArc { .. } => ManeuverKind::TurnArc,
            Segment::LaneChange { .. } => ManeuverKind::LaneChange,
            Segment::Stop { .. } => ManeuverKind::Stop,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManeuverKind {
    Cruise,
    Accel,
    Brake,
    TurnArc,
    LaneChange,
    Stop,
}

impl ManeuverKind {
    pub const ALL: [ManeuverKind; 6] = [
        ManeuverKind::Cruise,
        ManeuverKind::Accel,
        ManeuverKind::Brake,
        ManeuverKind::TurnArc,
        ManeuverKind::LaneChange,
        ManeuverKind::Stop,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub pos_sigma_m: f64,
    pub speed_sigma_mps: f64,
    pub heading_sigma_rad: f64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec {
        pos_sigma_m: 0.0,
        speed_sigma_mps: 0.0,
        heading_sigma_rad: 0.0,
    };
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            pos_sigma_m: 0.05,
            speed_sigma_mps: 0.05,
            heading_sigma_rad: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverScript {
    pub initial_speed: f64,
    /// ENU angle in radians.
    pub initial_heading: f64,
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
}

impl ManeuverScript {
    pub fn total_duration_s(&self) -> f64 {
        self.segments.iter().map(Segment::duration_s).sum()
    }

    /// Check parameters can be executed. Does not enforce a minimum total
    /// duration; see [`ManeuverScript::validate`].
    pub fn check_executable(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.initial_speed >= 0.0 && self.initial_speed.is_finite() && self.initial_heading.is_finite()) {
            return bad("initial speed must be finite and non-negative".into());
        }
        for s in [
            self.noise.pos_sigma_m,
            self.noise.speed_sigma_mps,
            self.noise.heading_sigma_rad,
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("noise sigmas must be finite and non-negative".into());
            }
        }
        if self.segments.is_empty() {
            return bad("script has no segments".into());
        }
        let mut v = self.initial_speed;
        for (i, seg) in self.segments.iter().enumerate() {
            let d = seg.duration_s();
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("segment {i}: duration must be positive"));
            }
            match *seg {
                Segment::Accel { accel, .. } if !accel.is_finite() || v + accel * d < 0.0 => {
                    return bad(format!("segment {i}: speed would become negative"));
                }
                Segment::Brake { decel, .. } if !(decel > 0.0 && decel.is_finite()) => {
                    return bad(format!("segment {i}: decel must be positive"));
                }
                Segment::TurnArc { radius_m, .. } if !(radius_m > 0.0 && radius_m.is_finite()) => {
                    return bad(format!("segment {i}: radius must be positive"));
                }
                Segment::LaneChange { lateral_m, duration_s }
                    if !lateral_m.is_finite() || 2.0 * lateral_m.abs() / duration_s >= v =>
                {
                    return bad(format!("segment {i}: lane change too abrupt for speed {v}"));
                }
                _ => {}
            }
            v = end_speed(seg, v);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_executable()?;
        if self.total_duration_s() < MIN_SCRIPT_S {
            return Err(Error::InvalidInput(format!(
                "script lasts {:.1} s, need at least {MIN_SCRIPT_S} s",
                self.total_duration_s()
            )));
        }
        Ok(())
    }
}

fn end_speed(seg: &Segment, v0: f64) -> f64 {
    match *seg {
        Segment::Accel { duration_s, accel } => v0 + accel * duration_s,
        Segment::Brake { duration_s, decel } => (v0 - decel * duration_s).max(0.0),
        Segment::Stop { .. } => 0.0,
        _ => v0,
    }
}

/// A segment placed on the timeline with its entry state.
#[derive(Debug, Clone, Copy)]
struct Placed {
    seg: Segment,
    start: f64,
    v0: f64,
    h0: f64,
}

impl Placed {
    /// Speed and heading at local time `tau`.
    fn state(&self, tau: f64) -> (f64, f64) {
        let (v0, h0) = (self.v0, self.h0);
        match self.seg {
            Segment::Cruise { .. } => (v0, h0),
            Segment::Accel { accel, .. } => (v0 + accel * tau, h0),
            Segment::Brake { decel, .. } => ((v0 - decel * tau).max(0.0), h0),
            Segment::TurnArc {
                radius_m, direction, ..
            } => {
                let w = v0 / radius_m;
                let sign = match direction {
                    TurnDirection::Left => 1.0,
                    TurnDirection::Right => -1.0,
                };
                (v0, h0 + sign * w * tau)
            }
            Segment::LaneChange { duration_s, lateral_m } => {
                let v_lat = lateral_m / duration_s * (1.0 - (TAU * tau / duration_s).cos());
                (v0, h0 + (v_lat / v0).asin())
            }
            Segment::Stop { .. } => (0.0, h0),
        }
    }

    fn end(&self) -> (f64, f64) {
        let d = self.seg.duration_s();
        match self.seg {
            // the raised cosine returns the heading exactly
            Segment::LaneChange { .. } => (self.v0, self.h0),
            _ => self.state(d),
        }
    }
}

fn place(script: &ManeuverScript) -> Vec<Placed> {
    let mut out = Vec::with_capacity(script.segments.len());
    let (mut t, mut v, mut h) = (0.0, script.initial_speed, script.initial_heading);
    for seg in &script.segments {
        let p = Placed {
            seg: *seg,
            start: t,
            v0: v,
            h0: h,
        };
        (v, h) = p.end();
        t += seg.duration_s();
        out.push(p);
    }
    out
}

fn segment_at(placed: &[Placed], t: f64) -> usize {
    placed.partition_point(|p| p.start <= t).saturating_sub(1)
}

/// Integral of velocity over `[a, b]`, both inside segment `p`.
fn simpson(p: &Placed, a: f64, b: f64) -> (f64, f64) {
    let n = SIMPSON_INTERVALS;
    let h = (b - a) / n as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let (v, th) = p.state(a + i as f64 * h - p.start);
        sx += w * v * th.cos();
        sy += w * v * th.sin();
    }
    (sx * h / 3.0, sy * h / 3.0)
}

/// Noise-free trip plus the scripted channels.
pub fn generate_trip(script: &ManeuverScript, trip_id: &str) -> Result<Trajectory> {
    script.check_executable()?;
    let placed = place(script);
    let total = script.total_duration_s();
    let n = (total / SAMPLE_PERIOD_S + 1e-9).floor() as usize + 1;
    let t: Vec<f64> = (0..n).map(|k| k as f64 * SAMPLE_PERIOD_S).collect();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut speed = Vec::with_capacity(n);
    let mut heading = Vec::with_capacity(n);
    let (mut px, mut py) = (0.0, 0.0);
    for k in 0..n {
        if k > 0 {
            // integrate (t[k-1], t[k]] piecewise over segment boundaries
            let (mut a, b) = (t[k - 1], t[k]);
            while a < b {
                let s = segment_at(&placed, a);
                let seg_end = placed.get(s + 1).map_or(f64::INFINITY, |p| p.start);
                let hi = b.min(seg_end);
                let (dx, dy) = simpson(&placed[s], a, hi);
                px += dx;
                py += dy;
                a = hi;
            }
        }
        let p = &placed[segment_at(&placed, t[k])];
        let (v, h) = p.state(t[k] - p.start);
        x.push(px);
        y.push(py);
        speed.push(v);
        heading.push(h);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let mut jitter = |values: &mut [f64], sigma: f64| {
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("sigma checked finite and positive");
            for v in values.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    };
    jitter(&mut x, script.noise.pos_sigma_m);
    jitter(&mut y, script.noise.pos_sigma_m);
    jitter(&mut speed, script.noise.speed_sigma_mps);
    jitter(&mut heading, script.noise.heading_sigma_rad);
    for v in &mut speed {
        *v = v.max(0.0);
    }

    Ok(Trajectory {
        trip_id: trip_id.to_string(),
        t,
        x_enu: x,
        y_enu: y,
        speed,
        heading_unwrapped: heading,
    })
}

/// Parameters for randomly composed scripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusMix {
    /// Relative weight of each maneuver kind; zero excludes it. `Accel` and
    /// `Stop` include their recovery; `Brake` recovers with an acceleration
    /// back to cruise speed.
    pub weights: Vec<(ManeuverKind, f64)>,
    pub trip_duration_s: (f64, f64),
    pub cruise_speed: (f64, f64),
    pub max_decel: f64,
    pub turn_radius_m: (f64, f64),
    pub lane_change_m: f64,
    pub lane_change_s: (f64, f64),
    pub noise: NoiseSpec,
}

impl Default for CorpusMix {
    fn default() -> Self {
        Self {
            weights: vec![
                (ManeuverKind::Cruise, 3.0),
                (ManeuverKind::Accel, 1.0),
                (ManeuverKind::Brake, 1.0),
                (ManeuverKind::TurnArc, 2.0),
                (ManeuverKind::LaneChange, 1.5),
                (ManeuverKind::Stop, 0.5),
            ],
            trip_duration_s: (60.0, 80.0),
            cruise_speed: (10.0, 30.0),
            max_decel: 6.0,
            turn_radius_m: (10.0, 100.0),
            lane_change_m: 3.5,
            lane_change_s: (3.0, 5.0),
            noise: NoiseSpec::default(),
        }
    }
}

impl CorpusMix {
    /// Cruise, turn and brake patterns only.
    pub fn three_regime() -> Self {
        Self {
            weights: vec![
                (ManeuverKind::Cruise, 1.0),
                (ManeuverKind::TurnArc, 1.0),
                (ManeuverKind::Brake, 1.0),
            ],
            ..Self::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::default()),
            "three_regime" => Ok(Self::three_regime()),
            _ => Err(Error::InvalidInput(format!("unknown corpus mix '{name}'"))),
        }
    }

    fn kinds(&self) -> Vec<ManeuverKind> {
        let mut k: Vec<ManeuverKind> = self.weights.iter().filter(|(_, w)| *w > 0.0).map(|(k, _)| *k).collect();
        k.sort();
        k.dedup();
        k
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> ManeuverKind {
        let total: f64 = self.weights.iter().map(|(_, w)| w.max(0.0)).sum();
        let mut r = rng.random_range(0.0..total);
        for (k, w) in &self.weights {
            let w = w.max(0.0);
            if r < w {
                return *k;
            }
            r -= w;
        }
        self.weights.last().expect("nonempty weights").0
    }

    pub fn validate(&self) -> Result<()> {
        let ok_range = |(a, b): (f64, f64)| a > 0.0 && b >= a && b.is_finite();
        if self.kinds().is_empty() {
            return Err(Error::InvalidInput(
                "corpus mix has no maneuver with positive weight".into(),
            ));
        }
        if !ok_range(self.trip_duration_s)
            || !ok_range(self.cruise_speed)
            || !ok_range(self.turn_radius_m)
            || !ok_range(self.lane_change_s)
            || !(self.max_decel > 0.0)
            || !(self.lane_change_m > 0.0)
        {
            return Err(Error::InvalidInput(
                "corpus mix ranges must be positive and ordered".into(),
            ));
        }
        if 2.0 * self.lane_change_m / self.lane_change_s.0 >= self.cruise_speed.0 {
            return Err(Error::InvalidInput(
                "lane change too abrupt for the slowest cruise speed".into(),
            ));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (a, b): (f64, f64)) -> f64 {
    if b > a {
        rng.random_range(a..b)
    } else {
        a
    }
}

/// Round a duration to whole samples so maneuvers start on the sample grid.
fn on_grid(d: f64) -> f64 {
    ((d / SAMPLE_PERIOD_S).round().max(1.0)) * SAMPLE_PERIOD_S
}

/// Append one maneuver (with any recovery it needs) given current speed.
fn push_maneuver(kind: ManeuverKind, v: &mut f64, mix: &CorpusMix, rng: &mut ChaCha8Rng, out: &mut Vec<Segment>) {
    let v_lo = mix.cruise_speed.0;
    match kind {
        ManeuverKind::Cruise => out.push(Segment::Cruise {
            duration_s: on_grid(uniform(rng, (3.0, 10.0))),
        }),
        ManeuverKind::Accel => {
            // change cruise speed up or down within the envelope
            let target = uniform(rng, mix.cruise_speed);
            let accel = uniform(rng, (0.8, 2.5)).copysign(target - *v);
            let d = on_grid(((target - *v) / accel).abs().max(1.0));
            let accel = if (target - *v).abs() < 1e-9 {
                0.0
            } else {
                (target - *v) / d
            };
            out.push(Segment::Accel { duration_s: d, accel });
            *v += accel * d;
        }
        ManeuverKind::Brake => {
            let decel = uniform(rng, (2.0, mix.max_decel));
            let drop = uniform(rng, (0.3, 0.6)) * *v;
            let d = on_grid(drop / decel);
            let decel = drop / d;
            out.push(Segment::Brake { duration_s: d, decel });
            let low = *v - decel * d;
            let accel = uniform(rng, (1.0, 2.5));
            let d2 = on_grid((*v - low) / accel);
            out.push(Segment::Accel {
                duration_s: d2,
                accel: (*v - low) / d2,
            });
        }
        ManeuverKind::TurnArc => {
            // slow down first when the lateral acceleration would exceed 4 m/s^2
            let v_turn_max = (4.0 * mix.turn_radius_m.1).sqrt();
            if *v > v_turn_max {
                let target = uniform(rng, (v_lo.min(v_turn_max), v_turn_max));
                let decel = uniform(rng, (1.5, 3.0));
                let d = on_grid((*v - target) / decel);
                out.push(Segment::Brake {
                    duration_s: d,
                    decel: (*v - target) / d,
                });
                *v = target;
            }
            let r_lo = mix.turn_radius_m.0.max(*v * *v / 4.0);
            let radius_m = uniform(rng, (r_lo, mix.turn_radius_m.1.max(r_lo)));
            let angle = uniform(rng, (PI / 6.0, 2.0 * PI / 3.0));
            let direction = if rng.random_bool(0.5) {
                TurnDirection::Left
            } else {
                TurnDirection::Right
            };
            out.push(Segment::TurnArc {
                duration_s: on_grid(angle * radius_m / *v),
                radius_m,
                direction,
            });
        }
        ManeuverKind::LaneChange => {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            out.push(Segment::LaneChange {
                duration_s: on_grid(uniform(rng, mix.lane_change_s)),
                lateral_m: sign * mix.lane_change_m,
            });
        }
        ManeuverKind::Stop => {
            let decel = uniform(rng, (2.0, mix.max_decel.min(4.0)));
            let d = on_grid(*v / decel);
            out.push(Segment::Brake {
                duration_s: d,
                decel: *v / d,
            });
            out.push(Segment::Stop {
                duration_s: on_grid(uniform(rng, (2.0, 5.0))),
            });
            let target = uniform(rng, mix.cruise_speed);
            let accel = uniform(rng, (1.5, 2.5));
            let d2 = on_grid(target / accel);
            out.push(Segment::Accel {
                duration_s: d2,
                accel: target / d2,
            });
            *v = target;
        }
    }
}

/// Random script of roughly the mix's trip duration. `first` forces the
/// kind of the first maneuver after the lead-in cruise.
pub fn random_script(mix: &CorpusMix, seed: u64, first: Option<ManeuverKind>) -> ManeuverScript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = uniform(&mut rng, mix.trip_duration_s);
    let mut v = uniform(&mut rng, mix.cruise_speed);
    let initial_speed = v;
    let initial_heading = uniform(&mut rng, (-PI, PI));
    // lead-in long enough for a training window and a first prediction
    let mut segments = vec![Segment::Cruise {
        duration_s: on_grid(uniform(&mut rng, (3.0, 6.0))),
    }];
    let mut next = first;
    while segments.iter().map(Segment::duration_s).sum::<f64>() < target {
        let kind = next.take().unwrap_or_else(|| mix.pick(&mut rng));
        push_maneuver(kind, &mut v, mix, &mut rng, &mut segments);
        if kind != ManeuverKind::Cruise {
            segments.push(Segment::Cruise {
                duration_s: on_grid(uniform(&mut rng, (2.0, 5.0))),
            });
        }
    }
    ManeuverScript {
        initial_speed,
        initial_heading,
        segments,
        noise: mix.noise,
        seed: rng.random(),
    }
}

/// `n` trips named `trip_000`, `trip_001`, ... When `n` is at least the
/// number of enabled kinds, each kind leads at least one trip.
pub fn generate_corpus(n: usize, mix: &CorpusMix, seed: u64) -> Result<Vec<Trajectory>> {
    if n == 0 {
        return Err(Error::InvalidInput("corpus needs at least one trip".into()));
    }
    mix.validate()?;
    let kinds = mix.kinds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..n).map(|_| rng.random()).collect();
    seeds
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let first = (n >= kinds.len()).then(|| kinds[i % kinds.len()]);
            let script = random_script(mix, *s, first);
            generate_trip(&script, &format!("trip_{i:03}"))
        })
        .collect()
}

/// Scripts behind [`generate_corpus`], for inspection and export.
pub fn corpus_scripts(n: usize, mix: &CorpusMix, seed: u64) -> Vec<ManeuverScript> {
    let kinds = mix.kinds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..n).map(|_| rng.random()).collect();
    seeds
        .iter()
        .enumerate()
        .map(|(i, s)| random_script(mix, *s, (n >= kinds.len()).then(|| kinds[i % kinds.len()])))
        .collect()
}

/// A quarter-circle left turn at `speed` on radius `radius_m`.
pub fn quarter_turn(speed: f64, radius_m: f64) -> Segment {
    Segment::TurnArc {
        duration_s: FRAC_PI_2 * radius_m / speed,
        radius_m,
        direction: TurnDirection::Left,
    }
}
