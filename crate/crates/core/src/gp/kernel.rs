use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the compound RBF + linear kernel
///
/// `k(t1, t2) = rbf_variance * exp(-(t1 - t2)^2 / (2 * rbf_lengthscale^2))
///            + lin_variance * (t1 - lin_offset) * (t2 - lin_offset)`
///
/// plus `noise_variance` on the diagonal of the training covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub rbf_variance: f64,
    pub rbf_lengthscale: f64,
    pub lin_variance: f64,
    pub lin_offset: f64,
    pub noise_variance: f64,
}

impl KernelSpec {
    pub fn new(
        rbf_variance: f64,
        rbf_lengthscale: f64,
        lin_variance: f64,
        lin_offset: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        let spec = Self {
            rbf_variance,
            rbf_lengthscale,
            lin_variance,
            lin_offset,
            noise_variance,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rbf_variance", self.rbf_variance),
            ("rbf_lengthscale", self.rbf_lengthscale),
            ("lin_variance", self.lin_variance),
            ("noise_variance", self.noise_variance),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        if !self.lin_offset.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "lin_offset must be finite, got {}",
                self.lin_offset
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, t1: f64, t2: f64) -> f64 {
        kernel_eval(self, t1, t2)
    }

    /// Log-space parameter vector used by the optimizer:
    /// `[ln rbf_variance, ln rbf_lengthscale, ln lin_variance, ln noise_variance]`.
    pub fn log_params(&self) -> [f64; 4] {
        [
            self.rbf_variance.ln(),
            self.rbf_lengthscale.ln(),
            self.lin_variance.ln(),
            self.noise_variance.ln(),
        ]
    }

    pub fn from_log_params(p: &[f64; 4], lin_offset: f64) -> Self {
        Self {
            rbf_variance: p[0].exp(),
            rbf_lengthscale: p[1].exp(),
            lin_variance: p[2].exp(),
            lin_offset,
            noise_variance: p[3].exp(),
        }
    }
}

/// Compound kernel value. Exactly symmetric in `t1`, `t2`.
#[inline]
pub fn kernel_eval(spec: &KernelSpec, t1: f64, t2: f64) -> f64 {
    let d = t1 - t2;
    let rbf = spec.rbf_variance * (-(d * d) / (2.0 * spec.rbf_lengthscale * spec.rbf_lengthscale)).exp();
    let lin = spec.lin_variance * ((t1 - spec.lin_offset) * (t2 - spec.lin_offset));
    rbf + lin
}

/// Covariance matrix over `times`, with `noise_variance` on the diagonal when
/// `with_noise` is set.
pub fn gram_matrix(spec: &KernelSpec, times: &[f64], with_noise: bool) -> Result<DMatrix<f64>> {
    if times.is_empty() {
        return Err(Error::InvalidInput("gram matrix needs at least one time".into()));
    }
    let n = times.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel_eval(spec, times[i], times[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        if with_noise {
            k[(i, i)] += spec.noise_variance;
        }
    }
    Ok(k)
}

pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-4;

/// Cholesky factorization with escalating diagonal jitter.
///
/// Tries the matrix as given, then adds 1e-10 and grows it tenfold up to
/// 1e-4 before giving up.
pub fn cholesky_with_jitter(k: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(chol) = Cholesky::new(k.clone()) {
        return Ok(chol);
    }
    let n = k.nrows();
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(kj) {
            return Ok(chol);
        }
        jitter *= 10.0;
    }
    Err(Error::CholeskyFailure { max_jitter: JITTER_MAX })
}
