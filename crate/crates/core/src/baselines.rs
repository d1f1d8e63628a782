//! Reference samplers for the efficiency comparison: random-walk
//! Metropolis with an isotropic normal proposal, and coordinate Gibbs for
//! the multivariate-normal target.

use crate::chain::{ChainOutput, IterStats};
use crate::error::Error;
use crate::model::{MvnSpec, TargetModel};
use crate::rng::RngStream;
use crate::Result;

#[derive(Debug, Clone)]
pub struct RwmConfig {
    pub proposal_scale: f64,
    pub iterations: usize,
}

impl RwmConfig {
    pub fn new(proposal_scale: f64, iterations: usize) -> Self {
        RwmConfig {
            proposal_scale,
            iterations,
        }
    }
}

/// Random-walk Metropolis. One density evaluation per iteration, recorded
/// in the `grads` column so cost comparisons against gradient-based
/// samplers line up one-to-one.
pub fn rwm_run<M: TargetModel + ?Sized>(
    model: &M,
    theta0: &[f64],
    config: &RwmConfig,
    rng: &mut RngStream,
) -> Result<ChainOutput> {
    if !(config.proposal_scale > 0.0) {
        return Err(Error::config("proposal scale must be positive"));
    }
    if config.iterations == 0 {
        return Err(Error::config("iterations must be positive"));
    }
    if theta0.len() != model.dim() {
        return Err(Error::config(format!(
            "model `{}` has dimension {}, initial position has length {}",
            model.name(),
            model.dim(),
            theta0.len()
        )));
    }

    let dim = model.dim();
    let mut theta = theta0.to_vec();
    let mut logp = model.logp(&theta);
    let mut out = ChainOutput::new("rwm", dim, config.iterations);
    out.setup_grad_evals = 1;

    let mut proposal = vec![0.0; dim];
    for _ in 0..config.iterations {
        for (p, t) in proposal.iter_mut().zip(&theta) {
            *p = t + config.proposal_scale * rng.standard_normal();
        }
        let logp_new = model.logp(&proposal);
        let log_ratio = logp_new - logp;
        let accept_prob = if log_ratio.is_nan() {
            0.0
        } else {
            log_ratio.exp().min(1.0)
        };
        let accepted = rng.uniform() < accept_prob;
        if accepted {
            std::mem::swap(&mut theta, &mut proposal);
            logp = logp_new;
        }
        out.draws.push(theta.clone());
        out.stats.push(IterStats {
            accept_stat: accept_prob,
            depth: 0,
            states: 1,
            n_slice: 0,
            grads: 1,
            eps: config.proposal_scale,
            eps_bar: config.proposal_scale,
            divergent: false,
            capped: false,
            accepted,
        });
    }
    Ok(out)
}

const PILOT_ITERATIONS: usize = 2000;
const MAX_PILOTS: usize = 30;
const RATE_TOLERANCE: f64 = 0.02;

/// Tunes the proposal scale by bisection on the log scale until the pilot
/// acceptance rate is within 0.02 of the target or the pilot budget (30)
/// runs out. Acceptance is monotone decreasing in the scale for the
/// targets of interest; failure to bracket the target is an error.
pub fn rwm_tune_scale<M: TargetModel + ?Sized>(
    model: &M,
    theta0: &[f64],
    target_rate: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(Error::config("target acceptance rate must lie in (0, 1)"));
    }

    let mut pilots = 0usize;
    let rate_at = |scale: f64, rng: &mut RngStream, pilots: &mut usize| -> Result<f64> {
        *pilots += 1;
        let out = rwm_run(model, theta0, &RwmConfig::new(scale, PILOT_ITERATIONS), rng)?;
        Ok(out.acceptance_rate(0))
    };

    let mut scale = 1.0;
    let mut rate = rate_at(scale, rng, &mut pilots)?;
    if (rate - target_rate).abs() <= RATE_TOLERANCE {
        return Ok(scale);
    }

    // Expand geometrically until the target rate is bracketed.
    let (mut lo, mut hi, mut rate_lo, mut rate_hi);
    if rate > target_rate {
        lo = scale;
        rate_lo = rate;
        loop {
            scale *= 8.0;
            rate = rate_at(scale, rng, &mut pilots)?;
            if (rate - target_rate).abs() <= RATE_TOLERANCE {
                return Ok(scale);
            }
            if rate < target_rate {
                hi = scale;
                rate_hi = rate;
                break;
            }
            lo = scale;
            rate_lo = rate;
            if pilots >= MAX_PILOTS {
                return Err(Error::Tuning(format!(
                    "no proposal scale below acceptance {target_rate} found up to scale {scale} (rate still {rate})"
                )));
            }
        }
    } else {
        hi = scale;
        rate_hi = rate;
        loop {
            scale /= 8.0;
            rate = rate_at(scale, rng, &mut pilots)?;
            if (rate - target_rate).abs() <= RATE_TOLERANCE {
                return Ok(scale);
            }
            if rate > target_rate {
                lo = scale;
                rate_lo = rate;
                break;
            }
            hi = scale;
            rate_hi = rate;
            if pilots >= MAX_PILOTS {
                return Err(Error::Tuning(format!(
                    "no proposal scale above acceptance {target_rate} found down to scale {scale} (rate still {rate})"
                )));
            }
        }
    }
    let _ = (rate_lo, rate_hi);

    // Bisection on the log scale.
    loop {
        let mid = ((lo.ln() + hi.ln()) / 2.0).exp();
        if pilots >= MAX_PILOTS {
            return Ok(mid);
        }
        let rate = rate_at(mid, rng, &mut pilots)?;
        if (rate - target_rate).abs() <= RATE_TOLERANCE {
            return Ok(mid);
        }
        if rate > target_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Systematic-scan Gibbs sampler for the multivariate normal, one draw per
/// coordinate per sweep from the exact conditional
/// `theta_d | rest ~ Normal(-(1/A_dd) sum_{j!=d} A_dj theta_j, 1/A_dd)`.
/// The conditional comes straight off the precision matrix, so each
/// coordinate update is O(dim).
pub fn gibbs_mvn_run(
    spec: &MvnSpec,
    theta0: &[f64],
    sweeps: usize,
    rng: &mut RngStream,
) -> Result<ChainOutput> {
    let dim = spec.dim();
    if theta0.len() != dim {
        return Err(Error::config(format!(
            "precision matrix has dimension {dim}, initial position has length {}",
            theta0.len()
        )));
    }
    if sweeps == 0 {
        return Err(Error::config("sweep count must be positive"));
    }
    let a = spec.precision();
    for d in 0..dim {
        if !(a[d * dim + d] > 0.0) {
            return Err(Error::config(format!(
                "precision diagonal entry {d} is not positive"
            )));
        }
    }

    let mut theta = theta0.to_vec();
    let mut out = ChainOutput::new("gibbs", dim, sweeps);
    for _ in 0..sweeps {
        for d in 0..dim {
            let add = a[d * dim + d];
            let mut cross = 0.0;
            for j in 0..dim {
                if j != d {
                    cross += a[d * dim + j] * theta[j];
                }
            }
            let mean = -cross / add;
            theta[d] = mean + rng.standard_normal() / add.sqrt();
        }
        out.draws.push(theta.clone());
        out.stats.push(IterStats {
            accept_stat: 1.0,
            depth: 0,
            states: 1,
            n_slice: 0,
            grads: 1, // one sweep costs roughly one dense gradient
            eps: f64::NAN,
            eps_bar: f64::NAN,
            divergent: false,
            capped: false,
            accepted: true,
        });
    }
    Ok(out)
}
