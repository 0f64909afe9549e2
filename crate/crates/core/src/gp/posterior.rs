use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kernel::{cholesky_with_jitter, gram_matrix, kernel_eval, KernelSpec};
use crate::error::{Error, Result};

/// Floor applied to a window's standard deviation before standardizing.
pub const STD_FLOOR: f64 = 1e-6;

/// The most recent samples of one channel, used to condition or fit a GP.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingWindow {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TrainingWindow {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidInput("training window is empty".into()));
        }
        if times.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "training window has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "training window times must be strictly increasing".into(),
            ));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("training window contains non-finite values".into()));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Window re-based to start at t = 0 with values scaled to zero mean and
    /// unit standard deviation. Hyperparameters live in this frame.
    pub fn standardized(&self) -> Standardized {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let scale = var.sqrt().max(STD_FLOOR);
        let origin = self.times[0];
        Standardized {
            origin,
            mean,
            scale,
            times: self.times.iter().map(|t| t - origin).collect(),
            values: self.values.iter().map(|v| (v - mean) / scale).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub origin: f64,
    pub mean: f64,
    pub scale: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Posterior mean and latent-function variance at a set of query times.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// A GP conditioned on one training window, ready to forecast.
///
/// Prediction at a query time is a fixed-order dot product, so evaluating
/// one time at a time or in a batch gives bit-identical results.
#[derive(Debug, Clone)]
pub struct ConditionedGp {
    spec: KernelSpec,
    origin: f64,
    mean: f64,
    scale: f64,
    times: Vec<f64>,
    alpha: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl ConditionedGp {
    pub fn new(spec: &KernelSpec, train: &TrainingWindow) -> Result<Self> {
        let st = train.standardized();
        let k = gram_matrix(spec, &st.times, true)?;
        let chol = cholesky_with_jitter(&k)?;
        let alpha = chol.solve(&DVector::from_column_slice(&st.values));
        Ok(Self {
            spec: *spec,
            origin: st.origin,
            mean: st.mean,
            scale: st.scale,
            times: st.times,
            alpha: alpha.as_slice().to_vec(),
            chol,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Posterior mean in the window's original units.
    pub fn mean_at(&self, t: f64) -> f64 {
        let q = t - self.origin;
        let mut acc = 0.0;
        for (ti, ai) in self.times.iter().zip(&self.alpha) {
            acc += kernel_eval(&self.spec, q, *ti) * ai;
        }
        self.mean + self.scale * acc
    }

    /// Posterior variance of the latent function, original units squared.
    pub fn variance_at(&self, t: f64) -> f64 {
        let q = t - self.origin;
        let kstar = DVector::from_iterator(
            self.times.len(),
            self.times.iter().map(|ti| kernel_eval(&self.spec, q, *ti)),
        );
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&kstar)
            .expect("cholesky factor has a nonzero diagonal");
        let var = kernel_eval(&self.spec, q, q) - v.dot(&v);
        var.max(0.0) * self.scale * self.scale
    }

    pub fn predict(&self, query_times: &[f64]) -> Posterior {
        Posterior {
            mean: query_times.iter().map(|t| self.mean_at(*t)).collect(),
            variance: query_times.iter().map(|t| self.variance_at(*t)).collect(),
        }
    }
}

/// Exact GP posterior with zero prior mean on the standardized window.
pub fn posterior_predict(spec: &KernelSpec, train: &TrainingWindow, query_times: &[f64]) -> Result<Posterior> {
    if query_times.is_empty() {
        return Err(Error::InvalidInput("no query times".into()));
    }
    Ok(ConditionedGp::new(spec, train)?.predict(query_times))
}

/// Log marginal likelihood of the window's values, taken as given, under a
/// zero-mean GP: `-1/2 (y' K^-1 y + ln|K| + n ln 2 pi)`.
///
/// No standardization or time re-basing happens here; callers that fit
/// hyperparameters pass the standardized window.
pub fn log_marginal_likelihood(spec: &KernelSpec, train: &TrainingWindow) -> Result<f64> {
    Ok(lml_parts(spec, train.times(), train.values(), false)?.0)
}

/// Log marginal likelihood together with its gradient with respect to the
/// log-parameters `[ln rbf_variance, ln rbf_lengthscale, ln lin_variance,
/// ln noise_variance]`.
pub fn log_marginal_likelihood_with_gradient(spec: &KernelSpec, train: &TrainingWindow) -> Result<(f64, [f64; 4])> {
    let (lml, grad) = lml_parts(spec, train.times(), train.values(), true)?;
    Ok((lml, grad.expect("gradient requested")))
}

pub(crate) fn lml_parts(
    spec: &KernelSpec,
    times: &[f64],
    values: &[f64],
    with_gradient: bool,
) -> Result<(f64, Option<[f64; 4]>)> {
    let n = times.len();
    let k = gram_matrix(spec, times, true)?;
    let chol = cholesky_with_jitter(&k)?;
    let y = DVector::from_column_slice(values);
    let alpha = chol.solve(&y);
    let l = chol.l_dirty();
    let log_det_half: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
    let lml = -0.5 * y.dot(&alpha) - log_det_half - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    if !lml.is_finite() {
        return Err(Error::CholeskyFailure {
            max_jitter: super::kernel::JITTER_MAX,
        });
    }
    if !with_gradient {
        return Ok((lml, None));
    }

    // d lml / d theta = 1/2 tr((alpha alpha' - K^-1) dK/dtheta)
    let k_inv: DMatrix<f64> = chol.inverse();
    let inv_ls2 = 1.0 / (spec.rbf_lengthscale * spec.rbf_lengthscale);
    let mut grad = [0.0; 4];
    for i in 0..n {
        for j in 0..n {
            let w = alpha[i] * alpha[j] - k_inv[(i, j)];
            let d = times[i] - times[j];
            let rbf = spec.rbf_variance * (-0.5 * d * d * inv_ls2).exp();
            let lin = spec.lin_variance * ((times[i] - spec.lin_offset) * (times[j] - spec.lin_offset));
            grad[0] += w * rbf;
            grad[1] += w * rbf * d * d * inv_ls2;
            grad[2] += w * lin;
            if i == j {
                grad[3] += w * spec.noise_variance;
            }
        }
    }
    for g in &mut grad {
        *g *= 0.5;
    }
    Ok((lml, Some(grad)))
}
