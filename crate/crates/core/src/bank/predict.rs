use serde::{Deserialize, Serialize};

use super::entry::ChannelSpecs;
use crate::error::{Error, Result};
use crate::geo::Trajectory;
use crate::gp::{ConditionedGp, TrainingWindow};

/// Euclidean distance between predicted and true position.
pub fn compute_pte(x_pred: f64, y_pred: f64, x_true: f64, y_true: f64) -> f64 {
    (x_pred - x_true).hypot(y_pred - y_true)
}

/// Trapezoidal dead reckoning of `(v cos h, v sin h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub x: f64,
    pub y: f64,
    vx: f64,
    vy: f64,
}

impl Integrator {
    pub fn new(x0: f64, y0: f64, v0: f64, heading0: f64) -> Self {
        let (s, c) = heading0.sin_cos();
        Self {
            x: x0,
            y: y0,
            vx: v0 * c,
            vy: v0 * s,
        }
    }

    pub fn step(&mut self, speed: f64, heading: f64, dt: f64) -> (f64, f64) {
        let (s, c) = heading.sin_cos();
        let (vx, vy) = (speed * c, speed * s);
        self.x += 0.5 * dt * (self.vx + vx);
        self.y += 0.5 * dt * (self.vy + vy);
        self.vx = vx;
        self.vy = vy;
        (self.x, self.y)
    }
}

/// Integrate predicted speed/heading into positions. Element `k` of the
/// inputs and outputs belongs to `t_0 + (k + 1) dt`; `(v0, heading0)` are the
/// last observed values at `t_0`.
pub fn integrate_position(
    speed_pred: &[f64],
    heading_pred: &[f64],
    v0: f64,
    heading0: f64,
    x0: f64,
    y0: f64,
    dt: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut integ = Integrator::new(x0, y0, v0, heading0);
    speed_pred
        .iter()
        .zip(heading_pred)
        .map(|(v, h)| integ.step(*v, *h, dt))
        .unzip()
}

/// State at the prediction start time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub t0: f64,
    pub x0: f64,
    pub y0: f64,
    pub v0: f64,
    pub theta0: f64,
}

impl Anchor {
    pub fn from_trajectory(traj: &Trajectory, index: usize) -> Self {
        Self {
            t0: traj.t[index],
            x0: traj.x_enu[index],
            y0: traj.y_enu[index],
            v0: traj.speed[index],
            theta0: traj.heading_unwrapped[index],
        }
    }
}

/// Which pair of channels a model regresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// East and north position.
    Direct,
    /// Speed and heading, integrated to position.
    Indirect,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Direct => "direct",
            Scheme::Indirect => "indirect",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Scheme::Direct),
            "indirect" => Ok(Scheme::Indirect),
            _ => Err(Error::InvalidInput(format!("unknown scheme '{s}'"))),
        }
    }
}

/// The most recent samples of both channels of a scheme, oldest first,
/// ending at the anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningWindow {
    pub times: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl ConditioningWindow {
    /// The `tw` samples ending at `index` (inclusive).
    pub fn from_trajectory(traj: &Trajectory, scheme: Scheme, index: usize, tw: usize) -> Result<Self> {
        if tw == 0 || index + 1 < tw || index >= traj.len() {
            return Err(Error::InsufficientHistory { index, needed: tw });
        }
        let r = index + 1 - tw..index + 1;
        let (a, b) = match scheme {
            Scheme::Direct => (&traj.x_enu, &traj.y_enu),
            Scheme::Indirect => (&traj.speed, &traj.heading_unwrapped),
        };
        Ok(Self {
            times: traj.t[r.clone()].to_vec(),
            first: a[r.clone()].to_vec(),
            second: b[r].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn channels(&self) -> Result<(TrainingWindow, TrainingWindow)> {
        Ok((
            TrainingWindow::new(self.times.clone(), self.first.clone())?,
            TrainingWindow::new(self.times.clone(), self.second.clone())?,
        ))
    }
}

/// A predictive model: a kernel pair from the bank or constant velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    ConstantVelocity,
    Gp(ChannelSpecs),
}

#[derive(Debug, Clone)]
enum Kind {
    ConstantVelocity,
    Direct {
        x: ConditionedGp,
        y: ConditionedGp,
    },
    Indirect {
        speed: ConditionedGp,
        heading: ConditionedGp,
        integ: Integrator,
    },
}

/// Forward prediction of position from a model, a conditioning window and an
/// anchor. Query times must increase.
#[derive(Debug, Clone)]
pub struct Rollout {
    kind: Kind,
    scheme: Scheme,
    anchor: Anchor,
    last_t: f64,
}

impl Rollout {
    pub fn new(model: &Model, scheme: Scheme, window: Option<&ConditioningWindow>, anchor: Anchor) -> Result<Self> {
        if let Model::Gp(specs) = model {
            if specs.scheme() != scheme {
                return Err(Error::InvalidInput(format!(
                    "{} kernels used in a {scheme} run",
                    specs.scheme()
                )));
            }
        }
        let kind = match model {
            Model::ConstantVelocity => Kind::ConstantVelocity,
            Model::Gp(specs) => {
                let w = window.ok_or_else(|| Error::InvalidInput("GP model needs a conditioning window".into()))?;
                let (a, b) = w.channels()?;
                match specs {
                    ChannelSpecs::Direct { x, y } => Kind::Direct {
                        x: ConditionedGp::new(x, &a)?,
                        y: ConditionedGp::new(y, &b)?,
                    },
                    ChannelSpecs::Indirect { speed, heading } => Kind::Indirect {
                        speed: ConditionedGp::new(speed, &a)?,
                        heading: ConditionedGp::new(heading, &b)?,
                        integ: Integrator::new(anchor.x0, anchor.y0, anchor.v0, anchor.theta0),
                    },
                }
            }
        };
        Ok(Self {
            kind,
            scheme,
            anchor,
            last_t: anchor.t0,
        })
    }

    pub fn anchor(&self) -> &Anchor {
        &self.anchor
    }

    /// Predicted position at `t`.
    pub fn advance(&mut self, t: f64) -> (f64, f64) {
        let p = self.step(t);
        (p.x, p.y)
    }

    /// Predicted position and channel values at `t`.
    pub fn step(&mut self, t: f64) -> Prediction {
        let dt = t - self.last_t;
        self.last_t = t;
        match &mut self.kind {
            Kind::ConstantVelocity => {
                let a = &self.anchor;
                let tau = t - a.t0;
                let (s, c) = a.theta0.sin_cos();
                let (x, y) = (a.x0 + a.v0 * c * tau, a.y0 + a.v0 * s * tau);
                let (first, second) = match self.scheme {
                    Scheme::Direct => (x, y),
                    Scheme::Indirect => (a.v0, a.theta0),
                };
                Prediction { x, y, first, second }
            }
            Kind::Direct { x, y } => {
                let (x, y) = (x.mean_at(t), y.mean_at(t));
                Prediction {
                    x,
                    y,
                    first: x,
                    second: y,
                }
            }
            Kind::Indirect { speed, heading, integ } => {
                let (v, h) = (speed.mean_at(t), heading.mean_at(t));
                let (x, y) = integ.step(v, h, dt);
                Prediction {
                    x,
                    y,
                    first: v,
                    second: h,
                }
            }
        }
    }
}

/// One predicted sample: position plus the model's own channel values
/// (position for direct, speed/heading for indirect).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub x: f64,
    pub y: f64,
    pub first: f64,
    pub second: f64,
}
