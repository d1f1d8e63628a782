//! Dual-averaging step-size controller and the doubling/halving heuristic
//! for picking the initial step size.

use crate::error::Error;
use crate::hamiltonian::{leapfrog, sample_momentum, CachedPoint, PhaseState};
use crate::model::TargetModel;
use crate::rng::RngStream;
use crate::Result;

pub const DEFAULT_GAMMA: f64 = 0.05;
pub const DEFAULT_T0: f64 = 10.0;
pub const DEFAULT_KAPPA: f64 = 0.75;

/// State of the dual-averaging recursion driving an acceptance statistic
/// toward its target `delta` by moving `ln(eps)`.
///
/// The update at step m (1-based) is
///
/// ```text
/// Hbar_m     = (1 - 1/(m+t0)) Hbar_{m-1} + (delta - alpha_m)/(m+t0)
/// ln eps_m   = mu - sqrt(m)/gamma * Hbar_m
/// ln epsbar_m = m^{-kappa} ln eps_m + (1 - m^{-kappa}) ln epsbar_{m-1}
/// ```
///
/// with `Hbar_0 = 0` and `epsbar_0 = 1`.
#[derive(Debug, Clone)]
pub struct DualAveragingState {
    pub mu: f64,
    pub log_eps: f64,
    pub log_eps_avg: f64,
    pub h_bar: f64,
    pub t: u64,
    pub gamma: f64,
    pub t0: f64,
    pub kappa: f64,
    pub delta: f64,
}

impl DualAveragingState {
    /// Fresh controller shrinking toward `mu`, starting from step size
    /// `eps0` (used by iterations before the first update).
    pub fn new(mu: f64, eps0: f64, delta: f64) -> Self {
        DualAveragingState {
            mu,
            log_eps: eps0.ln(),
            log_eps_avg: 0.0,
            h_bar: 0.0,
            t: 0,
            gamma: DEFAULT_GAMMA,
            t0: DEFAULT_T0,
            kappa: DEFAULT_KAPPA,
            delta,
        }
    }

    /// One controller step with the iteration's acceptance statistic.
    pub fn update(&mut self, alpha_stat: f64) -> Result<()> {
        if !alpha_stat.is_finite() {
            return Err(Error::config(format!(
                "acceptance statistic must be finite, got {alpha_stat}"
            )));
        }
        let m = (self.t + 1) as f64;
        let w = 1.0 / (m + self.t0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.delta - alpha_stat);
        self.log_eps = self.mu - m.sqrt() / self.gamma * self.h_bar;
        let eta = m.powf(-self.kappa);
        self.log_eps_avg = eta * self.log_eps + (1.0 - eta) * self.log_eps_avg;
        self.t += 1;
        Ok(())
    }

    /// Step size for the next iteration during adaptation.
    pub fn current_epsilon(&self) -> f64 {
        self.log_eps.exp()
    }

    /// Averaged step size; frozen in after adaptation ends.
    pub fn averaged_epsilon(&self) -> f64 {
        self.log_eps_avg.exp()
    }
}

/// Shrinkage point `mu = ln(10 * eps0)`, biasing the controller toward
/// exploring step sizes above the initial guess.
pub fn shrinkage_target(eps0: f64) -> f64 {
    debug_assert!(eps0 > 0.0);
    (10.0 * eps0).ln()
}

const MAX_BRACKET_STEPS: u32 = 100;

/// Picks an initial step size by doubling or halving until the one-step
/// acceptance ratio crosses 1/2: start at eps = 1, set the search
/// direction from the first probe, then scale eps by 2 or 1/2 until the
/// ratio falls on the other side of the threshold.
pub fn find_reasonable_epsilon<M: TargetModel + ?Sized>(
    model: &M,
    theta: &[f64],
    rng: &mut RngStream,
) -> Result<f64> {
    let start = CachedPoint::new(model, theta.to_vec());
    let r = sample_momentum(theta.len(), rng);
    find_reasonable_epsilon_from(model, &start, &r).map(|(eps, _)| eps)
}

/// Deterministic core of the heuristic: the starting point is already
/// evaluated and the probe momentum is supplied. Returns the step size and
/// the number of gradient evaluations spent.
pub fn find_reasonable_epsilon_from<M: TargetModel + ?Sized>(
    model: &M,
    start: &CachedPoint,
    r: &[f64],
) -> Result<(f64, u64)> {
    let mut eps = 1.0f64;
    let state = PhaseState::from_cached(start, r.to_vec());
    let joint0 = state.joint_log_density();
    if !joint0.is_finite() {
        return Err(Error::Init(
            "log density is not finite at the initial position".into(),
        ));
    }

    let mut evals = 0u64;
    let mut log_ratio = {
        let probe = leapfrog(model, &state, eps);
        evals += 1;
        probe.joint_log_density() - joint0
    };
    let log_ratio_or_neg_inf = |x: f64| if x.is_nan() { f64::NEG_INFINITY } else { x };
    let mut lr = log_ratio_or_neg_inf(log_ratio);

    // a = +1 doubles while the ratio stays above 1/2; a = -1 halves while
    // it stays below.
    let a: f64 = if lr > (0.5f64).ln() { 1.0 } else { -1.0 };
    let mut steps = 0;
    while a * lr > -a * std::f64::consts::LN_2 {
        steps += 1;
        if steps > MAX_BRACKET_STEPS {
            return Err(Error::Init(format!(
                "no step size bracketed after {MAX_BRACKET_STEPS} doublings/halvings \
                 (acceptance ratio stuck at {}); set the step size manually",
                lr.exp()
            )));
        }
        eps *= 2.0f64.powf(a);
        log_ratio = {
            let probe = leapfrog(model, &state, eps);
            evals += 1;
            probe.joint_log_density() - joint0
        };
        lr = log_ratio_or_neg_inf(log_ratio);
    }
    Ok((eps, evals))
}
