//! Phase-space primitives: the joint log density over positions and
//! momenta, momentum resampling, and the leapfrog integrator.

use crate::linalg::dot;
use crate::model::TargetModel;
use crate::rng::RngStream;

/// Live/peak counters for [`PhaseState`] values on the current thread.
///
/// Trajectory construction is supposed to retain O(depth) states no matter
/// how long the trajectory grows; tests read the high-water mark here to
/// hold that line.
pub mod state_gauge {
    use std::cell::Cell;

    thread_local! {
        static LIVE: Cell<u64> = const { Cell::new(0) };
        static PEAK: Cell<u64> = const { Cell::new(0) };
    }

    pub(super) fn incr() {
        LIVE.with(|l| {
            let n = l.get() + 1;
            l.set(n);
            PEAK.with(|p| {
                if n > p.get() {
                    p.set(n);
                }
            });
        });
    }

    pub(super) fn decr() {
        LIVE.with(|l| l.set(l.get().saturating_sub(1)));
    }

    /// Number of phase states currently alive on this thread.
    pub fn live() -> u64 {
        LIVE.with(|l| l.get())
    }

    /// High-water mark since the last [`reset_peak`].
    pub fn peak() -> u64 {
        PEAK.with(|p| p.get())
    }

    pub fn reset_peak() {
        PEAK.with(|p| p.set(live()));
    }
}

/// Token that keeps the gauge in sync across construction, clone, and drop.
#[derive(Debug)]
struct GaugeToken;

impl GaugeToken {
    fn new() -> Self {
        state_gauge::incr();
        GaugeToken
    }
}

impl Clone for GaugeToken {
    fn clone(&self) -> Self {
        GaugeToken::new()
    }
}

impl Drop for GaugeToken {
    fn drop(&mut self) {
        state_gauge::decr();
    }
}

/// A position with its cached log density and gradient.
///
/// Samplers carry one of these between iterations so that a fresh iteration
/// never has to re-evaluate the model at the current position.
#[derive(Debug, Clone)]
pub struct CachedPoint {
    pub theta: Vec<f64>,
    pub logp: f64,
    pub grad: Vec<f64>,
}

impl CachedPoint {
    /// Evaluates the model once at `theta`.
    pub fn new<M: TargetModel + ?Sized>(model: &M, theta: Vec<f64>) -> Self {
        let mut grad = vec![0.0; theta.len()];
        let logp = model.logp_grad(&theta, &mut grad);
        CachedPoint { theta, logp, grad }
    }
}

/// Position-momentum pair with cached log density and gradient.
///
/// `divergent` marks states whose position or density overflowed; stopping
/// rules consume the flag instead of an error being raised mid-trajectory.
#[derive(Debug, Clone)]
pub struct PhaseState {
    pub theta: Vec<f64>,
    pub r: Vec<f64>,
    pub logp: f64,
    pub grad: Vec<f64>,
    pub divergent: bool,
    _gauge: GaugeToken,
}

impl PhaseState {
    /// Evaluates the model once.
    pub fn new<M: TargetModel + ?Sized>(model: &M, theta: Vec<f64>, r: Vec<f64>) -> Self {
        assert_eq!(theta.len(), r.len());
        let mut grad = vec![0.0; theta.len()];
        let logp = model.logp_grad(&theta, &mut grad);
        let divergent = !logp.is_finite() && !(logp == f64::NEG_INFINITY);
        PhaseState {
            theta,
            r,
            logp,
            grad,
            divergent,
            _gauge: GaugeToken::new(),
        }
    }

    /// Pairs an already-evaluated position with a fresh momentum. No model
    /// evaluation happens.
    pub fn from_cached(point: &CachedPoint, r: Vec<f64>) -> Self {
        assert_eq!(point.theta.len(), r.len());
        PhaseState {
            theta: point.theta.clone(),
            r,
            logp: point.logp,
            grad: point.grad.clone(),
            divergent: false,
            _gauge: GaugeToken::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// `L(theta) - r.r/2`; negative infinity for divergent states.
    pub fn joint_log_density(&self) -> f64 {
        if self.divergent {
            return f64::NEG_INFINITY;
        }
        self.logp - 0.5 * dot(&self.r, &self.r)
    }

    pub fn cached_point(&self) -> CachedPoint {
        CachedPoint {
            theta: self.theta.clone(),
            logp: self.logp,
            grad: self.grad.clone(),
        }
    }
}

/// `L(theta) - r.r/2` for a phase-space point.
pub fn joint_log_density(state: &PhaseState) -> f64 {
    state.joint_log_density()
}

/// Draws `dim` independent standard-normal momenta.
pub fn sample_momentum(dim: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut r = vec![0.0; dim];
    rng.fill_standard_normal(&mut r);
    r
}

/// One leapfrog step of (signed) size `step` from `state`.
///
/// Reuses the cached gradient for the leading half-kick, so each call costs
/// exactly one new gradient evaluation. A non-finite position or density in
/// the result is reported through the `divergent` flag on the returned
/// state, never as an error.
pub fn leapfrog<M: TargetModel + ?Sized>(model: &M, state: &PhaseState, step: f64) -> PhaseState {
    debug_assert!(step != 0.0);
    debug_assert!(!state.divergent, "leapfrog from a divergent state");
    let dim = state.dim();
    let half = 0.5 * step;

    let mut r_half = state.r.clone();
    for (r, g) in r_half.iter_mut().zip(&state.grad) {
        *r += half * g;
    }
    let mut theta = state.theta.clone();
    for (t, r) in theta.iter_mut().zip(&r_half) {
        *t += step * r;
    }

    if theta.iter().any(|x| !x.is_finite()) {
        return PhaseState {
            theta,
            r: r_half,
            logp: f64::NEG_INFINITY,
            grad: vec![0.0; dim],
            divergent: true,
            _gauge: GaugeToken::new(),
        };
    }

    let mut grad = vec![0.0; dim];
    let logp = model.logp_grad(&theta, &mut grad);
    if !logp.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return PhaseState {
            theta,
            r: r_half,
            logp: f64::NEG_INFINITY,
            grad: vec![0.0; dim],
            divergent: true,
            _gauge: GaugeToken::new(),
        };
    }

    let mut r = r_half;
    for (r, g) in r.iter_mut().zip(&grad) {
        *r += half * g;
    }
    PhaseState {
        theta,
        r,
        logp,
        grad,
        divergent: false,
        _gauge: GaugeToken::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testing::{FlatModel, StdNormal};
    use crate::model::MvnSpec;

    fn mvn2_identity() -> crate::model::MvnModel {
        MvnSpec::new(2, vec![1.0, 0.0, 0.0, 1.0])
            .unwrap()
            .into_model("mvn2-eye")
    }

    #[test]
    fn joint_log_density_examples() {
        // Zero-energy state on a flat model.
        let flat = FlatModel { dim: 2 };
        let s = PhaseState::new(&flat, vec![0.0, 0.0], vec![0.0, 0.0]);
        assert_eq!(s.joint_log_density(), 0.0);

        // 1-D standard normal at theta=1, r=1: -0.5 - 0.5.
        let m = StdNormal;
        let s = PhaseState::new(&m, vec![1.0], vec![1.0]);
        assert!((s.joint_log_density() - (-1.0)).abs() < 1e-15);

        // MVN with identity precision at theta=(1,1), r=(1,-1): -1 - 1.
        let m = mvn2_identity();
        let s = PhaseState::new(&m, vec![1.0, 1.0], vec![1.0, -1.0]);
        assert!((s.joint_log_density() - (-2.0)).abs() < 1e-15);
    }

    #[test]
    fn momentum_shape_and_determinism() {
        let mut rng = crate::rng::RngStream::seed_from(5);
        let r = sample_momentum(3, &mut rng);
        assert_eq!(r.len(), 3);

        let mut a = crate::rng::RngStream::seed_from(11);
        let mut b = crate::rng::RngStream::seed_from(11);
        assert_eq!(sample_momentum(4, &mut a), sample_momentum(4, &mut b));
    }

    #[test]
    fn leapfrog_free_particle() {
        let flat = FlatModel { dim: 2 };
        let s = PhaseState::new(&flat, vec![1.0, 2.0], vec![0.5, -0.5]);
        let next = leapfrog(&flat, &s, 0.1);
        assert!((next.theta[0] - 1.05).abs() < 1e-15);
        assert!((next.theta[1] - 1.95).abs() < 1e-15);
        assert_eq!(next.r, vec![0.5, -0.5]);
        assert!(!next.divergent);
    }

    #[test]
    fn leapfrog_hand_evaluated_normal_step() {
        // theta=1, r=0, eps=0.1 on the 1-D standard normal:
        // r_half = -0.05, theta' = 0.995, r' = -0.05 + 0.05*(-0.995) = -0.09975
        let m = StdNormal;
        let s = PhaseState::new(&m, vec![1.0], vec![0.0]);
        let next = leapfrog(&m, &s, 0.1);
        assert!((next.theta[0] - 0.995).abs() < 1e-15);
        assert!((next.r[0] - (-0.09975)).abs() < 1e-15);
    }

    #[test]
    fn leapfrog_reversibility() {
        let m = mvn2_identity();
        let s = PhaseState::new(&m, vec![0.3, -1.2], vec![0.7, 0.2]);
        let eps = 0.23;
        let fwd = leapfrog(&m, &s, eps);
        let flipped = PhaseState::new(&m, fwd.theta.clone(), fwd.r.iter().map(|x| -x).collect());
        let back = leapfrog(&m, &flipped, eps);
        for d in 0..2 {
            assert!((back.theta[d] - s.theta[d]).abs() < 1e-12);
            assert!((-back.r[d] - s.r[d]).abs() < 1e-12);
        }
    }

    #[test]
    fn leapfrog_flags_overflowing_position() {
        let m = StdNormal;
        let s = PhaseState::new(&m, vec![1.0], vec![f64::MAX / 2.0]);
        let next = leapfrog(&m, &s, 4.0);
        assert!(next.divergent);
        assert_eq!(next.joint_log_density(), f64::NEG_INFINITY);
    }

    #[test]
    fn gauge_tracks_live_states() {
        let flat = FlatModel { dim: 1 };
        state_gauge::reset_peak();
        let base = state_gauge::live();
        {
            let a = PhaseState::new(&flat, vec![0.0], vec![1.0]);
            let _b = a.clone();
            assert_eq!(state_gauge::live(), base + 2);
        }
        assert_eq!(state_gauge::live(), base);
    }

    #[test]
    fn gradient_call_accounting_one_eval_per_step() {
        let m = crate::model::CountingModel::new(mvn2_identity());
        let s = PhaseState::new(&m, vec![0.4, 0.1], vec![0.2, -0.3]);
        m.reset();
        let mut cur = s;
        let steps = 17;
        for _ in 0..steps {
            cur = leapfrog(&m, &cur, 0.05);
        }
        assert_eq!(m.count(), steps);
    }
}
