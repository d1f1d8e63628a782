//! Stochastic-volatility posterior over per-day log scales and the
//! Student-t tail parameter, with the random-walk precision integrated out
//! analytically.
//!
//! For T days of prices there are T-1 log-return differences. The
//! parameter vector is `[ln s_1 .. ln s_T, ln nu]` (dimension T+1): the
//! initial scale carries only its exponential prior, and difference i is
//! paired with scale s_i for i = 2..T. Both log transforms contribute
//! their change-of-variable Jacobians to the density.

use crate::error::Error;
use crate::model::special::{digamma, ln_gamma};
use crate::model::TargetModel;
use crate::Result;

/// Log-return differences plus the shared exponential-prior rate.
#[derive(Debug, Clone)]
pub struct SvData {
    diffs: Vec<f64>,
    rate: f64,
}

impl SvData {
    /// Rate 0.01: exponential priors with mean and standard deviation 100.
    pub const DEFAULT_RATE: f64 = 0.01;

    pub fn new(diffs: Vec<f64>, rate: f64) -> Result<Self> {
        if diffs.is_empty() {
            return Err(Error::config("need at least one log-return difference"));
        }
        if let Some(bad) = diffs.iter().position(|d| !d.is_finite()) {
            return Err(Error::Eval {
                coord: bad,
                message: "non-finite log-return difference".into(),
            });
        }
        if !(rate > 0.0) {
            return Err(Error::config("exponential rate must be positive"));
        }
        Ok(SvData { diffs, rate })
    }

    pub fn diffs(&self) -> &[f64] {
        &self.diffs
    }

    /// Number of days T (diffs + 1).
    pub fn t(&self) -> usize {
        self.diffs.len() + 1
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

#[derive(Debug, Clone)]
pub struct SvModel {
    data: SvData,
    name: String,
}

impl SvModel {
    pub fn new(data: SvData) -> Result<Self> {
        let name = format!("sv-t{}", data.t());
        Ok(SvModel { data, name })
    }

    pub fn data(&self) -> &SvData {
        &self.data
    }
}

impl TargetModel for SvModel {
    fn dim(&self) -> usize {
        self.data.t() + 1
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let t_days = self.data.t();
        let rate = self.data.rate;
        let z = &theta[..t_days]; // log scales
        let w = theta[t_days]; // log nu
        grad.fill(0.0);

        // Exponentials of large coordinates would take the gamma-function
        // terms through inf - inf; the density is vanishingly small out
        // there, so report out-of-support instead.
        if w > 700.0 || z.iter().any(|&zi| zi.abs() > 700.0) {
            return f64::NEG_INFINITY;
        }
        let nu = w.exp();

        let mut logp = 0.0;

        // Scaled Student-t likelihood for differences i = 2..T (index i-2
        // here): each difference has density f_nu(d_i / s_i) / s_i, the
        // 1/s_i keeping the density normalized per observation (and the
        // joint integrable as the scales grow).
        let n_obs = t_days - 1;
        let half_nu = 0.5 * nu;
        let const_per_obs = ln_gamma(half_nu + 0.5)
            - ln_gamma(half_nu)
            - 0.5 * (nu * std::f64::consts::PI).ln();
        logp += n_obs as f64 * const_per_obs;
        let dconst_dnu =
            0.5 * digamma(half_nu + 0.5) - 0.5 * digamma(half_nu) - 0.5 / nu;
        let mut dlogp_dnu = n_obs as f64 * dconst_dnu - rate;
        for (idx, &d) in self.data.diffs.iter().enumerate() {
            let i = idx + 1; // scale index pairing with this difference
            let x = d * (-z[i]).exp();
            let x2 = x * x;
            let q = 1.0 + x2 / nu;
            logp -= (half_nu + 0.5) * q.ln() + z[i];
            grad[i] += (nu + 1.0) * x2 / (nu + x2) - 1.0;
            dlogp_dnu += -0.5 * q.ln() + (nu + 1.0) * x2 / (2.0 * nu * (nu + x2));
        }

        // Integrated-out random walk on the log scales:
        // -(T+1)/2 * ln(rate + S/2) with S the sum of squared increments.
        let mut s_sum = 0.0;
        for i in 1..t_days {
            let inc = z[i] - z[i - 1];
            s_sum += inc * inc;
        }
        let denom = rate + 0.5 * s_sum;
        let walk_coeff = 0.5 * (t_days as f64 + 1.0);
        logp -= walk_coeff * denom.ln();
        for i in 0..t_days {
            let mut ds = 0.0;
            if i >= 1 {
                ds += z[i] - z[i - 1];
            }
            if i + 1 < t_days {
                ds -= z[i + 1] - z[i];
            }
            grad[i] -= walk_coeff * ds / denom;
        }

        // Exponential priors on the initial scale and on nu, plus the
        // log-Jacobians of all T+1 log transforms.
        logp += -rate * z[0].exp() + z.iter().sum::<f64>();
        grad[0] += -rate * z[0].exp();
        for g in grad[..t_days].iter_mut() {
            *g += 1.0;
        }
        logp += -rate * nu + w;
        grad[t_days] = nu * dlogp_dnu + 1.0;

        logp
    }
}
