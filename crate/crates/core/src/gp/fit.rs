use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::posterior::{lml_parts, TrainingWindow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub variance_bounds: Bounds,
    pub lengthscale_bounds: Bounds,
    pub noise_bounds: Bounds,
    /// Stop when every free component of the projected log-space gradient
    /// is below this.
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            restarts: 4,
            max_iters: 200,
            variance_bounds: Bounds::new(1e-6, 1e3),
            lengthscale_bounds: Bounds::new(0.05, 100.0),
            noise_bounds: Bounds::new(1e-6, 1.0),
            grad_tol: 1e-7,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidInput("fit restarts must be at least 1".into()));
        }
        for (name, b) in [
            ("variance", self.variance_bounds),
            ("lengthscale", self.lengthscale_bounds),
            ("noise", self.noise_bounds),
        ] {
            if !(b.lo > 0.0 && b.hi >= b.lo && b.hi.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} bounds must satisfy 0 < lo <= hi, got [{}, {}]",
                    b.lo, b.hi
                )));
            }
        }
        Ok(())
    }

    /// Log-space box `[rbf_variance, rbf_lengthscale, lin_variance, noise]`.
    pub fn log_box(&self) -> ([f64; 4], [f64; 4]) {
        let b = [
            self.variance_bounds,
            self.lengthscale_bounds,
            self.variance_bounds,
            self.noise_bounds,
        ];
        (b.map(|b| b.lo.ln()), b.map(|b| b.hi.ln()))
    }
}

/// Result of one fit: the spec plus diagnostics the tests and callers use.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub spec: KernelSpec,
    pub lml: f64,
    /// Projected gradient of the LML at the optimum (log-parameters).
    pub projected_gradient: [f64; 4],
    /// LML at each restart's starting point (`None` when it failed).
    pub start_lml: Vec<Option<f64>>,
}

/// Maximize the log marginal likelihood of the standardized, time-rebased
/// window. `lin_offset` is pinned to the window's first time, which is 0 in
/// the rebased frame.
pub fn fit_hyperparameters(train: &TrainingWindow, config: &FitConfig) -> Result<KernelSpec> {
    Ok(fit_with_diagnostics(train, config)?.spec)
}

pub fn fit_with_diagnostics(train: &TrainingWindow, config: &FitConfig) -> Result<FitOutcome> {
    config.validate()?;
    let st = train.standardized();
    let (lo, hi) = config.log_box();
    let objective = |p: &[f64; 4]| -> Option<(f64, [f64; 4])> {
        let spec = KernelSpec::from_log_params(p, 0.0);
        match lml_parts(&spec, &st.times, &st.values, true) {
            Ok((lml, Some(g))) => Some((-lml, g.map(|x| -x))),
            _ => None,
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let starts: Vec<[f64; 4]> = (0..config.restarts)
        .map(|r| {
            if r == 0 {
                // unit signal, moderate lengthscale, small noise
                clamp(&[0.0, 0.0, 0.0, (1e-2f64).ln()], &lo, &hi)
            } else {
                std::array::from_fn(|i| rng.random_range(lo[i]..=hi[i]))
            }
        })
        .collect();

    let mut best: Option<(f64, [f64; 4], [f64; 4])> = None;
    let mut start_lml = Vec::with_capacity(starts.len());
    for x0 in &starts {
        start_lml.push(objective(x0).map(|(f, _)| -f));
        if let Some((x, f, g)) = minimize_box(&objective, x0, &lo, &hi, config.max_iters, config.grad_tol) {
            if best.as_ref().is_none_or(|(bf, _, _)| f < *bf) {
                best = Some((f, x, g));
            }
        }
    }
    let (f, x, g) = best.ok_or(Error::FitDegenerate {
        restarts: config.restarts,
    })?;
    let pg = projected_gradient(&x, &g, &lo, &hi);
    Ok(FitOutcome {
        spec: KernelSpec::from_log_params(&x, 0.0),
        lml: -f,
        projected_gradient: pg.map(|v| -v),
        start_lml,
    })
}

fn clamp(x: &[f64; 4], lo: &[f64; 4], hi: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| x[i].clamp(lo[i], hi[i]))
}

/// Zero out components that point out of the box at an active bound.
fn projected_gradient(x: &[f64; 4], g: &[f64; 4], lo: &[f64; 4], hi: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| {
        let at_lo = x[i] <= lo[i] && g[i] > 0.0;
        let at_hi = x[i] >= hi[i] && g[i] < 0.0;
        if at_lo || at_hi {
            0.0
        } else {
            g[i]
        }
    })
}

type Mat4 = [[f64; 4]; 4];

fn identity() -> Mat4 {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projected BFGS descent on a box. Returns the final point, value and raw
/// gradient, or `None` if the objective fails at the starting point.
fn minimize_box<F>(
    f: &F,
    x0: &[f64; 4],
    lo: &[f64; 4],
    hi: &[f64; 4],
    max_iters: usize,
    grad_tol: f64,
) -> Option<([f64; 4], f64, [f64; 4])>
where
    F: Fn(&[f64; 4]) -> Option<(f64, [f64; 4])>,
{
    const MAX_STEP: f64 = 2.0;
    let mut x = clamp(x0, lo, hi);
    let (mut fx, mut gx) = f(&x)?;
    let mut h = identity();
    let mut h_is_identity = true;

    for _ in 0..max_iters {
        let pg = projected_gradient(&x, &gx, lo, hi);
        if pg.iter().all(|v| v.abs() < grad_tol) {
            break;
        }
        let free: [bool; 4] = std::array::from_fn(|i| pg[i] != 0.0 || (x[i] > lo[i] && x[i] < hi[i]));

        let mut d = [0.0; 4];
        for i in 0..4 {
            if free[i] {
                d[i] = -(0..4).filter(|&j| free[j]).map(|j| h[i][j] * pg[j]).sum::<f64>();
            }
        }
        if dot(&d, &pg) >= 0.0 {
            h = identity();
            h_is_identity = true;
            d = pg.map(|v| -v);
        }
        let norm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm > MAX_STEP {
            d = d.map(|v| v * MAX_STEP / norm);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: [f64; 4] = clamp(&std::array::from_fn(|i| x[i] + step * d[i]), lo, hi);
            let s: [f64; 4] = std::array::from_fn(|i| trial[i] - x[i]);
            if s.iter().all(|v| *v == 0.0) {
                break;
            }
            if let Some((ft, gt)) = f(&trial) {
                if ft <= fx + 1e-4 * dot(&gx, &s) {
                    accepted = Some((trial, ft, gt, s));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn, s)) = accepted else {
            if h_is_identity {
                break;
            }
            h = identity();
            h_is_identity = true;
            continue;
        };

        let y: [f64; 4] = std::array::from_fn(|i| gn[i] - gx[i]);
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            // H+ = (I - rho s y') H (I - rho y s') + rho s s'
            let rho = 1.0 / sy;
            let hy: [f64; 4] = std::array::from_fn(|i| dot(&h[i], &y));
            let yhy = dot(&y, &hy);
            let mut hn = h;
            for i in 0..4 {
                for j in 0..4 {
                    hn[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            h = hn;
            h_is_identity = false;
        }

        let converged = (fx - fnew).abs() <= 1e-14 * (1.0 + fx.abs()) && s.iter().all(|v| v.abs() < 1e-10);
        x = xn;
        fx = fnew;
        gx = gn;
        if converged {
            break;
        }
    }
    Some((x, fx, gx))
}
