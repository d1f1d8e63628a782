//! Chain output shared by every sampler: ordered draws plus per-iteration
//! statistics and the adaptation trace.

use serde::Serialize;

/// Per-iteration record.
///
/// Field meaning varies slightly by sampler:
/// - `grads`: gradient evaluations for HMC/NUTS; density evaluations for
///   random-walk Metropolis; sweeps count one unit each for Gibbs.
/// - `depth`: tree depth for NUTS, zero elsewhere.
/// - `states`: states visited by the trajectory (1 + leapfrog steps);
///   for RWM/Gibbs this is 1.
/// - `accepted`: Metropolis outcome for HMC/RWM; for NUTS, whether the
///   iteration moved away from its starting position.
#[derive(Debug, Clone, Serialize)]
pub struct IterStats {
    pub accept_stat: f64,
    pub depth: u32,
    pub states: u64,
    pub n_slice: u64,
    pub grads: u64,
    pub eps: f64,
    pub eps_bar: f64,
    pub divergent: bool,
    pub capped: bool,
    pub accepted: bool,
}

/// Ordered draws and per-iteration statistics from one chain.
///
/// Draws are stored for every iteration, adaptation included; burn-in is
/// discarded downstream so the adaptation trace stays inspectable.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub sampler: String,
    pub dim: usize,
    pub draws: Vec<Vec<f64>>,
    pub stats: Vec<IterStats>,
    /// Gradient evaluations spent before the first iteration (initial cache
    /// fill and step-size initialization). Reported separately so that the
    /// per-iteration statistics sum exactly to the iteration total.
    pub setup_grad_evals: u64,
    pub warnings: Vec<String>,
}

impl ChainOutput {
    pub fn new(sampler: impl Into<String>, dim: usize, capacity: usize) -> Self {
        ChainOutput {
            sampler: sampler.into(),
            dim,
            draws: Vec::with_capacity(capacity),
            stats: Vec::with_capacity(capacity),
            setup_grad_evals: 0,
            warnings: Vec::new(),
        }
    }

    pub fn iterations(&self) -> usize {
        self.draws.len()
    }

    /// Sum of the per-iteration `grads` column.
    pub fn iteration_grad_evals(&self) -> u64 {
        self.stats.iter().map(|s| s.grads).sum()
    }

    pub fn total_grad_evals(&self) -> u64 {
        self.setup_grad_evals + self.iteration_grad_evals()
    }

    /// Draws with the first `burn_in` iterations discarded.
    pub fn kept_draws(&self, burn_in: usize) -> &[Vec<f64>] {
        &self.draws[burn_in.min(self.draws.len())..]
    }

    pub fn kept_stats(&self, burn_in: usize) -> &[IterStats] {
        &self.stats[burn_in.min(self.stats.len())..]
    }

    /// One coordinate of the kept draws as a flat series.
    pub fn column(&self, d: usize, burn_in: usize) -> Vec<f64> {
        self.kept_draws(burn_in).iter().map(|row| row[d]).collect()
    }

    pub fn mean_accept_stat(&self, burn_in: usize) -> f64 {
        let kept = self.kept_stats(burn_in);
        if kept.is_empty() {
            return f64::NAN;
        }
        kept.iter().map(|s| s.accept_stat).sum::<f64>() / kept.len() as f64
    }

    pub fn acceptance_rate(&self, burn_in: usize) -> f64 {
        let kept = self.kept_stats(burn_in);
        if kept.is_empty() {
            return f64::NAN;
        }
        kept.iter().filter(|s| s.accepted).count() as f64 / kept.len() as f64
    }

    pub fn divergences(&self) -> usize {
        self.stats.iter().filter(|s| s.divergent).count()
    }

    pub fn max_depth_hits(&self) -> usize {
        self.stats.iter().filter(|s| s.capped).count()
    }

    /// Per-iteration step-size trace.
    pub fn eps_trace(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.eps).collect()
    }

    /// Per-iteration averaged-step-size trace.
    pub fn eps_bar_trace(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.eps_bar).collect()
    }
}

/// Appends a warning when at least 90% of the last 100 adaptation
/// iterations went bad (Metropolis rejections or divergent trajectories).
pub(crate) fn detect_divergence_storm(
    bad_flags: &[bool],
    adapt_iterations: usize,
    warnings: &mut Vec<String>,
) {
    let window = 100;
    let upto = adapt_iterations.min(bad_flags.len());
    let mut start = 0;
    while start + window <= upto {
        let bad = bad_flags[start..start + window].iter().filter(|&&b| b).count();
        if bad >= 90 {
            warnings.push(format!(
                "divergence storm during adaptation: {bad}/{window} bad iterations in window starting at iteration {}",
                start + 1
            ));
            return;
        }
        start += window;
    }
}
