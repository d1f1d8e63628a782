//! Hierarchical Bayesian logistic regression: predictor vectors expanded
//! with all two-way interactions, and the prior variance of the
//! coefficients given an exponential prior and sampled alongside them.
//!
//! The sampled variance is carried as `z = ln(sigma^2)`, with the
//! change-of-variable log-Jacobian (`+z`) folded into the log density, so
//! the parameter vector `[alpha, beta_1..beta_kx, z]` is unconstrained.

use crate::error::Error;
use crate::model::data::standardize_columns;
use crate::model::logreg::log1p_exp;
use crate::model::{LogRegData, TargetModel};
use crate::Result;

/// Base data plus the exponential-prior rate for the sampled variance.
#[derive(Debug, Clone)]
pub struct HlrSpec {
    pub base: LogRegData,
    /// Rate of the exponential prior on sigma^2 (default 0.01: mean and
    /// standard deviation 100).
    pub rate: f64,
}

impl HlrSpec {
    pub const DEFAULT_RATE: f64 = 0.01;

    pub fn new(base: LogRegData, rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::config("exponential rate must be positive"));
        }
        Ok(HlrSpec { base, rate })
    }
}

/// Expands `k` standardized columns with the `k(k-1)/2` pairwise products,
/// each product column re-standardized. Column order: the `k` originals,
/// then pairs (a, b) with a < b in lexicographic order.
pub fn expand_interactions(x: &[f64], n: usize, k: usize) -> Result<Vec<f64>> {
    let kx = k + k * (k - 1) / 2;
    let mut out = vec![0.0; n * kx];
    for i in 0..n {
        let row_in = &x[i * k..(i + 1) * k];
        let row_out = &mut out[i * kx..(i + 1) * kx];
        row_out[..k].copy_from_slice(row_in);
        let mut c = k;
        for a in 0..k {
            for b in (a + 1)..k {
                row_out[c] = row_in[a] * row_in[b];
                c += 1;
            }
        }
    }
    // Originals are standardized already; re-standardizing everything keeps
    // the product columns on the same footing.
    standardize_columns(&mut out, n, kx)?;
    Ok(out)
}

/// Posterior over `[alpha, beta_1..beta_kx, ln(sigma^2)]`.
#[derive(Debug, Clone)]
pub struct HlrModel {
    x: Vec<f64>, // row-major n x kx, expanded and standardized
    y: Vec<f64>,
    n: usize,
    kx: usize,
    rate: f64,
    name: String,
}

impl HlrModel {
    pub fn new(spec: HlrSpec) -> Result<Self> {
        let n = spec.base.n();
        let k = spec.base.k();
        let x = expand_interactions(spec.base.predictors(), n, k)?;
        let kx = k + k * (k - 1) / 2;
        let name = format!("hlr-n{n}-k{k}");
        Ok(HlrModel {
            x,
            y: spec.base.labels().to_vec(),
            n,
            kx,
            rate: spec.rate,
            name,
        })
    }

    pub fn expanded_predictors(&self) -> &[f64] {
        &self.x
    }

    pub fn expanded_k(&self) -> usize {
        self.kx
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.kx..(i + 1) * self.kx]
    }
}

impl TargetModel for HlrModel {
    fn dim(&self) -> usize {
        self.kx + 2
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let kx = self.kx;
        let alpha = theta[0];
        let beta = &theta[1..1 + kx];
        let z = theta[1 + kx];
        grad.fill(0.0);

        if z > 700.0 {
            // sigma^2 would overflow; the exponential prior has already
            // driven the density to zero out here.
            return f64::NEG_INFINITY;
        }
        let sigma2 = z.exp();

        let mut logp = 0.0;
        for i in 0..self.n {
            let xi = self.row(i);
            let lin = alpha + xi.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>();
            let t = self.y[i] * lin;
            logp -= log1p_exp(-t);
            let w = self.y[i] / (1.0 + t.exp());
            grad[0] += w;
            for (g, x) in grad[1..1 + kx].iter_mut().zip(xi) {
                *g += w * x;
            }
        }

        // Normalized Gaussian priors on the kx + 1 coefficients: the
        // sigma^2 normalization exponent must match the coefficient count
        // or the joint loses integrability at sigma^2 -> 0 and the
        // "posterior" has no stationary distribution to sample.
        let sq = alpha * alpha + beta.iter().map(|b| b * b).sum::<f64>();
        let half_coeffs = 0.5 * (kx as f64 + 1.0);
        logp += -0.5 * sq / sigma2 - half_coeffs * z - self.rate * sigma2 + z;
        grad[0] -= alpha / sigma2;
        for (g, b) in grad[1..1 + kx].iter_mut().zip(beta) {
            *g -= b / sigma2;
        }
        grad[1 + kx] = 0.5 * sq / sigma2 - half_coeffs - self.rate * sigma2 + 1.0;
        logp
    }
}
