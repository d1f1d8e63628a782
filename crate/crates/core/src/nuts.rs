//! The No-U-Turn Sampler: trajectory doubling with automatic termination.
//!
//! Two variants are provided. The efficient sampler keeps O(depth) states
//! in memory by sampling its proposal incrementally while the trajectory
//! tree is built, and applies a swap kernel after every doubling. The
//! naive variant materializes the full candidate set per iteration and
//! draws uniformly from it; it exists as an executable statement of the
//! correctness conditions and as a cross-check for the efficient path.

use crate::adapt::{find_reasonable_epsilon_from, shrinkage_target, DualAveragingState};
use crate::chain::{detect_divergence_storm, ChainOutput, IterStats};
use crate::error::Error;
use crate::hamiltonian::{leapfrog, sample_momentum, CachedPoint, PhaseState};
use crate::linalg::dot;
use crate::model::TargetModel;
use crate::rng::RngStream;
use crate::Result;

pub const DEFAULT_MAX_DEPTH: u32 = 10;
pub const DEFAULT_DELTA_MAX: f64 = 1000.0;

/// Step-size plan for a NUTS run.
#[derive(Debug, Clone)]
pub enum NutsSchedule {
    /// Dual averaging toward mean acceptance statistic `delta`.
    DualAveraging { delta: f64 },
    /// Fixed step size, no adaptation.
    Fixed { epsilon: f64 },
}

#[derive(Debug, Clone)]
pub struct NutsConfig {
    pub schedule: NutsSchedule,
    pub iterations: usize,
    pub adapt_iterations: usize,
    /// Doubling cap: trajectories never exceed `2^max_depth` states. The
    /// cap bounds runtime on targets where the U-turn rule cannot fire
    /// (linear drift on a flat density runs forever without it); cap hits
    /// surface as a tuning warning, not an error.
    pub max_depth: u32,
    /// Slack for the divergence rule: doubling stops once a state's joint
    /// log density falls more than this below the slice level.
    pub delta_max: f64,
}

impl NutsConfig {
    pub fn adaptive(delta: f64, iterations: usize, adapt_iterations: usize) -> Self {
        NutsConfig {
            schedule: NutsSchedule::DualAveraging { delta },
            iterations,
            adapt_iterations,
            max_depth: DEFAULT_MAX_DEPTH,
            delta_max: DEFAULT_DELTA_MAX,
        }
    }

    pub fn fixed(epsilon: f64, iterations: usize) -> Self {
        NutsConfig {
            schedule: NutsSchedule::Fixed { epsilon },
            iterations,
            adapt_iterations: 0,
            max_depth: DEFAULT_MAX_DEPTH,
            delta_max: DEFAULT_DELTA_MAX,
        }
    }

    pub fn with_max_depth(mut self, max_depth: u32) -> Self {
        self.max_depth = max_depth;
        self
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
        if self.max_depth == 0 {
            return Err(Error::config("max depth must be at least 1"));
        }
        if !(self.delta_max > 0.0) {
            return Err(Error::config("divergence slack must be positive"));
        }
        match self.schedule {
            NutsSchedule::DualAveraging { delta } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::config("target acceptance must lie in (0, 1)"));
                }
            }
            NutsSchedule::Fixed { epsilon } => {
                if !(epsilon > 0.0) {
                    return Err(Error::config("step size must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// U-turn test over a trajectory span. Returns true while doubling may
/// continue: false exactly when `(theta+ - theta-) . r- < 0` or
/// `(theta+ - theta-) . r+ < 0`.
pub fn no_u_turn(minus: &PhaseState, plus: &PhaseState) -> bool {
    debug_assert_eq!(minus.dim(), plus.dim());
    let diff: Vec<f64> = plus
        .theta
        .iter()
        .zip(&minus.theta)
        .map(|(p, m)| p - m)
        .collect();
    dot(&diff, &minus.r) >= 0.0 && dot(&diff, &plus.r) >= 0.0
}

/// Divergence test against the slice level, evaluated in log domain.
/// Returns true while doubling may continue: false exactly when
/// `L(theta) - r.r/2 - ln u < -delta_max`. Non-finite densities count as
/// divergent.
pub fn within_slice_slack(log_u: f64, state: &PhaseState, delta_max: f64) -> bool {
    let joint = state.joint_log_density();
    if !joint.is_finite() {
        return false;
    }
    joint - log_u >= -delta_max
}

/// What one (sub)tree construction produced.
///
/// `minus`/`plus` are the backwardmost and forwardmost states among the
/// new states; `proposal` is the incrementally sampled representative of
/// the `n_admissible` slice-admissible states; `alpha_sum`/`alpha_count`
/// accumulate the per-state acceptance statistic against the iteration's
/// starting point.
#[derive(Debug)]
pub struct TreeOutcome {
    pub minus: PhaseState,
    pub plus: PhaseState,
    pub proposal: CachedPoint,
    pub n_admissible: u64,
    /// False once any stopping rule fired inside this subtree.
    pub cont: bool,
    pub alpha_sum: f64,
    pub alpha_count: u64,
    /// True when the divergence rule (rather than a U-turn) fired.
    pub divergent: bool,
    /// True when a stopping rule inside the first half cut construction
    /// short, so the second half was never integrated. A subtree whose
    /// own whole-span U-turn check fired still built everything and is
    /// not short-circuited.
    pub short_circuited: bool,
    pub leapfrogs: u64,
}

/// Builds a balanced subtree of `2^depth` new states in the given
/// direction, sampling a proposal from the admissible ones as it goes.
///
/// `init_joint` is the joint log density of the iteration's starting
/// state, the reference point of the acceptance statistic. The caller
/// never requests a depth above its doubling cap.
#[allow(clippy::too_many_arguments)]
pub fn build_tree<M: TargetModel + ?Sized>(
    model: &M,
    from: &PhaseState,
    log_u: f64,
    direction: i8,
    depth: u32,
    epsilon: f64,
    delta_max: f64,
    init_joint: f64,
    rng: &mut RngStream,
) -> TreeOutcome {
    if depth == 0 {
        // Base case: one leapfrog step.
        let next = leapfrog(model, from, direction as f64 * epsilon);
        let joint = next.joint_log_density();
        let n_admissible = (log_u <= joint) as u64;
        let cont = within_slice_slack(log_u, &next, delta_max);
        let alpha = (joint - init_joint).exp().min(1.0);
        let proposal = next.cached_point();
        return TreeOutcome {
            minus: next.clone(),
            plus: next,
            proposal,
            n_admissible,
            cont,
            alpha_sum: alpha,
            alpha_count: 1,
            divergent: !cont,
            short_circuited: false,
            leapfrogs: 1,
        };
    }

    let first = build_tree(
        model,
        from,
        log_u,
        direction,
        depth - 1,
        epsilon,
        delta_max,
        init_joint,
        rng,
    );
    if !first.cont {
        // Short-circuit: the second half is never integrated.
        let mut cut = first;
        cut.short_circuited = true;
        return cut;
    }
    let second_from = if direction < 0 { &first.minus } else { &first.plus };
    let second = build_tree(
        model,
        second_from,
        log_u,
        direction,
        depth - 1,
        epsilon,
        delta_max,
        init_joint,
        rng,
    );

    let mut proposal = first.proposal;
    let swap_p = if second.n_admissible == 0 {
        0.0
    } else {
        second.n_admissible as f64 / (first.n_admissible + second.n_admissible) as f64
    };
    if rng.uniform() < swap_p {
        proposal = second.proposal;
    }

    let (minus, plus) = if direction < 0 {
        (second.minus, first.plus)
    } else {
        (first.minus, second.plus)
    };
    let cont = second.cont && no_u_turn(&minus, &plus);
    TreeOutcome {
        minus,
        plus,
        proposal,
        n_admissible: first.n_admissible + second.n_admissible,
        cont,
        alpha_sum: first.alpha_sum + second.alpha_sum,
        alpha_count: first.alpha_count + second.alpha_count,
        divergent: first.divergent || second.divergent,
        short_circuited: second.short_circuited,
        leapfrogs: first.leapfrogs + second.leapfrogs,
    }
}

/// One efficient-NUTS transition.
#[derive(Debug)]
pub struct NutsIterationResult {
    pub point: CachedPoint,
    /// Number of doublings performed.
    pub depth: u32,
    /// States visited: 1 + leapfrog steps.
    pub states: u64,
    /// Accumulated count of slice-admissible states.
    pub n_slice: u64,
    /// Acceptance statistic of the final doubling, `alpha / n_alpha`.
    pub alpha_stat: f64,
    pub grads_used: u64,
    pub divergent: bool,
    /// The doubling cap stopped the trajectory while it still wanted to
    /// grow.
    pub capped: bool,
    /// The returned position differs from the starting one.
    pub moved: bool,
    /// The final doubling built all of its states: construction was never
    /// cut short inside a subtree (earlier doublings are complete by
    /// construction, or the loop would have stopped there). When true,
    /// the iteration used exactly `2^depth - 1` gradient evaluations.
    pub last_doubling_complete: bool,
}

/// Draws the slice variable, repeatedly doubles the trajectory in a random
/// direction, applies the swap kernel after each complete doubling, and
/// stops on the first U-turn, divergence, or the depth cap.
pub fn nuts_iteration<M: TargetModel + ?Sized>(
    model: &M,
    current: &CachedPoint,
    epsilon: f64,
    max_depth: u32,
    delta_max: f64,
    rng: &mut RngStream,
) -> NutsIterationResult {
    let dim = current.theta.len();
    let r0 = sample_momentum(dim, rng);
    let init = PhaseState::from_cached(current, r0);
    let joint0 = init.joint_log_density();
    // Slice draw in log domain: ln u = joint0 + ln Uniform(0, 1].
    let log_u = joint0 + rng.uniform_open().ln();

    let mut minus = init.clone();
    let mut plus = init;
    let mut point = current.clone();
    let mut n_total: u64 = 1;
    let mut depth: u32 = 0;
    let mut leapfrogs: u64 = 0;
    let mut divergent = false;
    let mut moved = false;
    let mut alpha_stat = f64::NAN;
    let mut cont = true;
    let mut last_doubling_complete = true;

    while cont && depth < max_depth {
        let dir = rng.direction();
        let outcome = {
            let from = if dir < 0 { &minus } else { &plus };
            build_tree(
                model, from, log_u, dir, depth, epsilon, delta_max, joint0, rng,
            )
        };
        leapfrogs += outcome.leapfrogs;
        divergent |= outcome.divergent;
        alpha_stat = outcome.alpha_sum / outcome.alpha_count as f64;
        last_doubling_complete = !outcome.short_circuited;

        if outcome.cont {
            let accept_p = (outcome.n_admissible as f64 / n_total as f64).min(1.0);
            if rng.uniform() < accept_p {
                point = outcome.proposal;
                moved = true;
            }
        }
        n_total += outcome.n_admissible;
        if dir < 0 {
            minus = outcome.minus;
        } else {
            plus = outcome.plus;
        }
        cont = outcome.cont && no_u_turn(&minus, &plus);
        depth += 1;
    }

    NutsIterationResult {
        point,
        depth,
        states: 1 + leapfrogs,
        n_slice: n_total,
        alpha_stat,
        grads_used: leapfrogs,
        divergent,
        capped: cont,
        moved,
        last_doubling_complete,
    }
}

/// Runs a full NUTS chain, adapting the step size by dual averaging over
/// the first `adapt_iterations` iterations when so configured.
pub fn nuts_run<M: TargetModel + ?Sized>(
    model: &M,
    theta0: &[f64],
    config: &NutsConfig,
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
    let mut out = ChainOutput::new("nuts", model.dim(), config.iterations);
    out.setup_grad_evals = 1;

    let mut da: Option<DualAveragingState> = None;
    let mut eps = match config.schedule {
        NutsSchedule::Fixed { epsilon } => epsilon,
        NutsSchedule::DualAveraging { delta } => {
            let r = sample_momentum(theta0.len(), rng);
            let (eps0, evals) = find_reasonable_epsilon_from(model, &current, &r)?;
            out.setup_grad_evals += evals;
            da = Some(DualAveragingState::new(shrinkage_target(eps0), eps0, delta));
            eps0
        }
    };

    let mut bad_flags = Vec::with_capacity(config.adapt_iterations);
    for m in 1..=config.iterations {
        let eps_used = eps;
        let iter = nuts_iteration(
            model,
            &current,
            eps_used,
            config.max_depth,
            config.delta_max,
            rng,
        );
        current = iter.point;

        let mut eps_bar = eps_used;
        if let Some(da) = da.as_mut() {
            if m <= config.adapt_iterations {
                bad_flags.push(iter.divergent);
                da.update(iter.alpha_stat)?;
                eps = da.current_epsilon();
            } else {
                eps = da.averaged_epsilon();
            }
            eps_bar = da.averaged_epsilon();
        }

        out.draws.push(current.theta.clone());
        out.stats.push(IterStats {
            accept_stat: iter.alpha_stat,
            depth: iter.depth,
            states: iter.states,
            n_slice: iter.n_slice,
            grads: iter.grads_used,
            eps: eps_used,
            eps_bar,
            divergent: iter.divergent,
            capped: iter.capped,
            accepted: iter.moved,
        });
    }

    let cap_hits = out.max_depth_hits();
    if cap_hits > 0 {
        out.warnings.push(format!(
            "{cap_hits} of {} iterations hit the tree-depth cap of {}; consider a larger step-size target or a deeper cap",
            config.iterations, config.max_depth
        ));
    }
    detect_divergence_storm(&bad_flags, config.adapt_iterations, &mut out.warnings);
    Ok(out)
}

/// Subtree result for the naive sampler: the candidate states are stored
/// explicitly.
#[derive(Debug)]
pub struct NaiveTree {
    pub minus: PhaseState,
    pub plus: PhaseState,
    /// Every newly visited state whose joint density clears the slice.
    pub candidates: Vec<PhaseState>,
    pub cont: bool,
    pub divergent: bool,
    pub leapfrogs: u64,
}

/// Tree construction for the naive sampler. Both halves are always built
/// (no short-circuit), matching the simpler formulation.
pub fn build_tree_naive<M: TargetModel + ?Sized>(
    model: &M,
    from: &PhaseState,
    log_u: f64,
    direction: i8,
    depth: u32,
    epsilon: f64,
    delta_max: f64,
) -> NaiveTree {
    if depth == 0 {
        let next = leapfrog(model, from, direction as f64 * epsilon);
        let joint = next.joint_log_density();
        let candidates = if log_u <= joint {
            vec![next.clone()]
        } else {
            Vec::new()
        };
        let cont = within_slice_slack(log_u, &next, delta_max);
        return NaiveTree {
            minus: next.clone(),
            plus: next,
            candidates,
            cont,
            divergent: !cont,
            leapfrogs: 1,
        };
    }

    let first = build_tree_naive(model, from, log_u, direction, depth - 1, epsilon, delta_max);
    let second_from = if direction < 0 { &first.minus } else { &first.plus };
    let second = build_tree_naive(
        model,
        second_from,
        log_u,
        direction,
        depth - 1,
        epsilon,
        delta_max,
    );

    let (minus, plus) = if direction < 0 {
        (second.minus, first.plus)
    } else {
        (first.minus, second.plus)
    };
    let cont = first.cont && second.cont && no_u_turn(&minus, &plus);
    let mut candidates = first.candidates;
    candidates.extend(second.candidates);
    NaiveTree {
        minus,
        plus,
        candidates,
        cont,
        divergent: first.divergent || second.divergent,
        leapfrogs: first.leapfrogs + second.leapfrogs,
    }
}

/// Guard for the explicit candidate storage: `2^16` states of a large
/// model is already past what the naive mode is for.
pub const NAIVE_MAX_DEPTH_LIMIT: u32 = 16;

/// One naive-NUTS transition, exposing the final candidate set and slice
/// level for inspection.
#[derive(Debug)]
pub struct NaiveIterationResult {
    pub point: CachedPoint,
    pub candidates: Vec<PhaseState>,
    pub log_u: f64,
    pub depth: u32,
    pub states: u64,
    pub grads_used: u64,
    pub divergent: bool,
    pub capped: bool,
    pub moved: bool,
}

/// The naive sampler: explicit candidate sets per doubling, final draw
/// uniform over the union. A doubling whose subtree hit a stopping rule
/// contributes no candidates.
pub fn naive_nuts_iteration<M: TargetModel + ?Sized>(
    model: &M,
    current: &CachedPoint,
    epsilon: f64,
    max_depth: u32,
    delta_max: f64,
    rng: &mut RngStream,
) -> Result<NaiveIterationResult> {
    if max_depth > NAIVE_MAX_DEPTH_LIMIT {
        return Err(Error::config(format!(
            "naive mode stores all 2^depth states; max depth {max_depth} exceeds the limit of {NAIVE_MAX_DEPTH_LIMIT}"
        )));
    }
    let dim = current.theta.len();
    let r0 = sample_momentum(dim, rng);
    let init = PhaseState::from_cached(current, r0);
    let joint0 = init.joint_log_density();
    let log_u = joint0 + rng.uniform_open().ln();

    let mut minus = init.clone();
    let mut plus = init.clone();
    let mut candidates = vec![init];
    let mut depth: u32 = 0;
    let mut leapfrogs: u64 = 0;
    let mut divergent = false;
    let mut cont = true;

    while cont && depth < max_depth {
        let dir = rng.direction();
        let tree = {
            let from = if dir < 0 { &minus } else { &plus };
            build_tree_naive(model, from, log_u, dir, depth, epsilon, delta_max)
        };
        leapfrogs += tree.leapfrogs;
        divergent |= tree.divergent;
        if tree.cont {
            candidates.extend(tree.candidates);
        }
        if dir < 0 {
            minus = tree.minus;
        } else {
            plus = tree.plus;
        }
        cont = tree.cont && no_u_turn(&minus, &plus);
        depth += 1;
    }

    let choice = rng.index(candidates.len());
    let point = candidates[choice].cached_point();
    let moved = point.theta != current.theta;
    Ok(NaiveIterationResult {
        point,
        candidates,
        log_u,
        depth,
        states: 1 + leapfrogs,
        grads_used: leapfrogs,
        divergent,
        capped: cont,
        moved,
    })
}

#[derive(Debug, Clone)]
pub struct NaiveNutsConfig {
    /// Fixed step size; when absent the doubling heuristic picks one at
    /// startup and it stays fixed (the naive variant has no acceptance
    /// statistic to adapt on).
    pub epsilon: Option<f64>,
    pub iterations: usize,
    pub max_depth: u32,
    pub delta_max: f64,
}

impl NaiveNutsConfig {
    pub fn new(iterations: usize) -> Self {
        NaiveNutsConfig {
            epsilon: None,
            iterations,
            max_depth: DEFAULT_MAX_DEPTH,
            delta_max: DEFAULT_DELTA_MAX,
        }
    }
}

/// Runs a naive-NUTS chain at a fixed step size.
pub fn naive_nuts_run<M: TargetModel + ?Sized>(
    model: &M,
    theta0: &[f64],
    config: &NaiveNutsConfig,
    rng: &mut RngStream,
) -> Result<ChainOutput> {
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
    if let Some(eps) = config.epsilon {
        if !(eps > 0.0) {
            return Err(Error::config("step size must be positive"));
        }
    }

    let mut current = CachedPoint::new(model, theta0.to_vec());
    let mut out = ChainOutput::new("nuts-naive", model.dim(), config.iterations);
    out.setup_grad_evals = 1;
    let eps = match config.epsilon {
        Some(e) => e,
        None => {
            let r = sample_momentum(theta0.len(), rng);
            let (eps0, evals) = find_reasonable_epsilon_from(model, &current, &r)?;
            out.setup_grad_evals += evals;
            eps0
        }
    };

    for _ in 0..config.iterations {
        let iter = naive_nuts_iteration(
            model,
            &current,
            eps,
            config.max_depth,
            config.delta_max,
            rng,
        )?;
        current = iter.point;
        out.draws.push(current.theta.clone());
        out.stats.push(IterStats {
            accept_stat: f64::NAN, // no accept/reject statistic in this mode
            depth: iter.depth,
            states: iter.states,
            n_slice: iter.candidates.len() as u64,
            grads: iter.grads_used,
            eps,
            eps_bar: eps,
            divergent: iter.divergent,
            capped: iter.capped,
            accepted: iter.moved,
        });
    }
    Ok(out)
}
