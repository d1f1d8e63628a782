//! Hamiltonian Monte Carlo: the fixed-parameter sampler and the
//! dual-averaging variant with the trajectory length fixed in simulation
//! time (`lambda ~ eps * L`) rather than in steps.

use crate::adapt::{find_reasonable_epsilon_from, shrinkage_target, DualAveragingState};
use crate::chain::{detect_divergence_storm, ChainOutput, IterStats};
use crate::error::Error;
use crate::hamiltonian::{leapfrog, sample_momentum, CachedPoint, PhaseState};
use crate::model::TargetModel;
use crate::rng::RngStream;
use crate::Result;

/// Step-size plan for an HMC run.
#[derive(Debug, Clone)]
pub enum HmcSchedule {
    /// Fixed step size and step count.
    Fixed { epsilon: f64, steps: u32 },
    /// Dual averaging toward mean acceptance `delta`, with per-iteration
    /// step count `max(1, round(lambda / eps))`.
    DualAveraging { delta: f64, lambda: f64 },
}

#[derive(Debug, Clone)]
pub struct HmcConfig {
    pub schedule: HmcSchedule,
    pub iterations: usize,
    pub adapt_iterations: usize,
}

impl HmcConfig {
    pub fn fixed(epsilon: f64, steps: u32, iterations: usize) -> Self {
        HmcConfig {
            schedule: HmcSchedule::Fixed { epsilon, steps },
            iterations,
            adapt_iterations: 0,
        }
    }

    pub fn adaptive(delta: f64, lambda: f64, iterations: usize, adapt_iterations: usize) -> Self {
        HmcConfig {
            schedule: HmcSchedule::DualAveraging { delta, lambda },
            iterations,
            adapt_iterations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be positive"));
        }
        if self.adapt_iterations >= self.iterations {
            return Err(Error::config(format!(
                "adaptation iterations ({}) must be below total iterations ({})",
                self.adapt_iterations, self.iterations
            )));
        }
        match self.schedule {
            HmcSchedule::Fixed { epsilon, steps } => {
                if !(epsilon > 0.0) {
                    return Err(Error::config("step size must be positive"));
                }
                if steps == 0 {
                    return Err(Error::config("step count must be at least 1"));
                }
            }
            HmcSchedule::DualAveraging { delta, lambda } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::config("target acceptance must lie in (0, 1)"));
                }
                if !(lambda > 0.0) {
                    return Err(Error::config("simulation length must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Result of one HMC proposal/accept cycle.
#[derive(Debug)]
pub struct HmcIteration {
    pub point: CachedPoint,
    /// `min(1, p(proposal)/p(start))`, recorded whether or not the
    /// proposal was accepted.
    pub accept_prob: f64,
    pub accepted: bool,
    pub grads_used: u64,
    pub divergent: bool,
}

/// Resamples the momentum, integrates `steps` leapfrog steps of size
/// `epsilon`, and applies the Metropolis test.
pub fn hmc_iteration<M: TargetModel + ?Sized>(
    model: &M,
    current: &CachedPoint,
    epsilon: f64,
    steps: u32,
    rng: &mut RngStream,
) -> HmcIteration {
    let r0 = sample_momentum(current.theta.len(), rng);
    let start = PhaseState::from_cached(current, r0);
    let joint0 = start.joint_log_density();

    let mut state = start;
    let mut grads = 0u64;
    for _ in 0..steps {
        state = leapfrog(model, &state, epsilon);
        grads += 1;
        if state.divergent {
            break;
        }
    }

    let log_ratio = state.joint_log_density() - joint0;
    let divergent = state.divergent;
    let accept_prob = if log_ratio.is_nan() || divergent {
        0.0
    } else {
        log_ratio.exp().min(1.0)
    };
    let accepted = rng.uniform() < accept_prob;
    let point = if accepted {
        state.cached_point()
    } else {
        current.clone()
    };
    HmcIteration {
        point,
        accept_prob,
        accepted,
        grads_used: grads,
        divergent,
    }
}

/// Rounding rule for the adaptive step count: half away from zero.
fn steps_for(lambda: f64, eps: f64) -> u32 {
    let l = (lambda / eps).round();
    l.max(1.0).min(u32::MAX as f64) as u32
}

/// Runs a full HMC chain per the configured schedule.
///
/// The adaptive variant initializes the step size with the doubling
/// heuristic, shrinks toward `ln(10 eps0)`, updates the controller with the
/// Metropolis statistic for the first `adapt_iterations` iterations, and
/// freezes the averaged step size afterwards. With adaptation disabled the
/// run is exactly a sequence of [`hmc_iteration`] calls.
pub fn hmc_run<M: TargetModel + ?Sized>(
    model: &M,
    theta0: &[f64],
    config: &HmcConfig,
    rng: &mut RngStream,
) -> Result<ChainOutput> {
    config.validate()?;
    if theta0.len() != model.dim() {
        return Err(Error::config(format!(
            "model `{}` has dimension {}, initial position has length {}",
            model.name(),
            model.dim(),
            theta0.len()
        )));
    }

    let mut current = CachedPoint::new(model, theta0.to_vec());
    let mut out = ChainOutput::new("hmc", model.dim(), config.iterations);
    out.setup_grad_evals = 1;

    let mut da: Option<DualAveragingState> = None;
    let mut lambda_target = 0.0;
    let (mut eps, mut steps) = match config.schedule {
        HmcSchedule::Fixed { epsilon, steps } => (epsilon, steps),
        HmcSchedule::DualAveraging { delta, lambda } => {
            let r = sample_momentum(theta0.len(), rng);
            let (eps0, evals) = find_reasonable_epsilon_from(model, &current, &r)?;
            out.setup_grad_evals += evals;
            da = Some(DualAveragingState::new(shrinkage_target(eps0), eps0, delta));
            lambda_target = lambda;
            (eps0, steps_for(lambda, eps0))
        }
    };

    let mut bad_flags = Vec::with_capacity(config.adapt_iterations);
    for m in 1..=config.iterations {
        let eps_used = eps;
        let iter = hmc_iteration(model, &current, eps_used, steps, rng);
        current = iter.point;

        let mut eps_bar = eps_used;
        if let Some(da) = da.as_mut() {
            if m <= config.adapt_iterations {
                bad_flags.push(!iter.accepted);
                da.update(iter.accept_prob)?;
                eps = da.current_epsilon();
            } else {
                eps = da.averaged_epsilon();
            }
            eps_bar = da.averaged_epsilon();
            steps = steps_for(lambda_target, eps);
        }

        out.draws.push(current.theta.clone());
        out.stats.push(IterStats {
            accept_stat: iter.accept_prob,
            depth: 0,
            states: iter.grads_used + 1,
            n_slice: 0,
            grads: iter.grads_used,
            eps: eps_used,
            eps_bar,
            divergent: iter.divergent,
            capped: false,
            accepted: iter.accepted,
        });
    }

    detect_divergence_storm(&bad_flags, config.adapt_iterations, &mut out.warnings);
    Ok(out)
}
