//! Bayesian logistic regression: intercept plus coefficients under weak
//! zero-mean normal priors with fixed variance.

use crate::error::Error;
use crate::model::data::standardize_columns;
use crate::model::TargetModel;
use crate::Result;

/// `ln(1 + e^t)` without overflow.
pub(crate) fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Standardized predictors and +-1 labels.
#[derive(Debug, Clone)]
pub struct LogRegData {
    n: usize,
    k: usize,
    x: Vec<f64>, // row-major n x k
    y: Vec<f64>,
    prior_variance: f64,
}

impl LogRegData {
    pub const DEFAULT_PRIOR_VARIANCE: f64 = 100.0;

    /// Builds from raw rows, standardizing each predictor column.
    pub fn from_rows(rows: &[Vec<f64>], labels: &[f64], prior_variance: f64) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::config(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let n = rows.len();
        let k = rows.first().map(|r| r.len()).unwrap_or(0);
        if k == 0 {
            return Err(Error::config("need at least one predictor column"));
        }
        let mut x = Vec::with_capacity(n * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::config(format!(
                    "row {i} has {} columns, expected {k}",
                    row.len()
                )));
            }
            x.extend_from_slice(row);
        }
        standardize_columns(&mut x, n, k)?;
        Self::from_standardized(n, k, x, labels.to_vec(), prior_variance)
    }

    /// Builds from already-standardized predictors. Only label and shape
    /// validation happens here; `n = 0` is allowed for prior-only targets.
    pub fn from_standardized(
        n: usize,
        k: usize,
        x: Vec<f64>,
        y: Vec<f64>,
        prior_variance: f64,
    ) -> Result<Self> {
        if x.len() != n * k || y.len() != n {
            return Err(Error::config("predictor/label shapes disagree"));
        }
        if !(prior_variance > 0.0) {
            return Err(Error::config("prior variance must be positive"));
        }
        if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::config(format!("labels must be +-1, found {bad}")));
        }
        Ok(LogRegData {
            n,
            k,
            x,
            y,
            prior_variance,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn predictors(&self) -> &[f64] {
        &self.x
    }
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.k..(i + 1) * self.k]
    }
    pub fn labels(&self) -> &[f64] {
        &self.y
    }
    pub fn prior_variance(&self) -> f64 {
        self.prior_variance
    }
}

/// Posterior over `[alpha, beta_1..beta_k]`; dimension `k + 1`.
#[derive(Debug, Clone)]
pub struct LogRegModel {
    data: LogRegData,
    name: String,
}

impl LogRegModel {
    pub fn new(data: LogRegData) -> Result<Self> {
        let name = format!("logreg-n{}-k{}", data.n(), data.k());
        Ok(LogRegModel { data, name })
    }

    pub fn data(&self) -> &LogRegData {
        &self.data
    }
}

impl TargetModel for LogRegModel {
    fn dim(&self) -> usize {
        self.data.k + 1
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = &self.data;
        let (alpha, beta) = (theta[0], &theta[1..]);
        grad.fill(0.0);
        let mut logp = 0.0;
        for i in 0..d.n {
            let xi = d.row(i);
            let z = alpha + xi.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>();
            let t = d.y[i] * z;
            logp -= log1p_exp(-t);
            // d/dz of the log likelihood term: y / (1 + e^t)
            let w = d.y[i] / (1.0 + t.exp());
            grad[0] += w;
            for (g, x) in grad[1..].iter_mut().zip(xi) {
                *g += w * x;
            }
        }
        let inv_var = 1.0 / d.prior_variance;
        logp -= 0.5 * inv_var * (alpha * alpha + beta.iter().map(|b| b * b).sum::<f64>());
        grad[0] -= inv_var * alpha;
        for (g, b) in grad[1..].iter_mut().zip(beta) {
            *g -= inv_var * b;
        }
        logp
    }
}
