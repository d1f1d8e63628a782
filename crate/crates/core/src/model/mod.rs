//! Target-distribution abstraction and the built-in benchmark posteriors.
//!
//! A target exposes its log density `L(theta)` and gradient over
//! unconstrained coordinates. Hard positivity constraints in the built-in
//! models are removed by log transforms, with the change-of-variable
//! log-Jacobian folded into `L`, so samplers always work on all of R^dim.

mod data;
mod hlr;
mod logreg;
mod mvn;
mod special;
mod sv;

pub use data::{
    load_german_credit, load_sv_prices, standardize_columns, synthetic_logreg, synthetic_sv,
};
pub use hlr::{HlrModel, HlrSpec};
pub use logreg::{LogRegData, LogRegModel};
pub use mvn::{MvnModel, MvnSpec};
pub use sv::{SvData, SvModel};

use crate::error::Error;
use crate::Result;
use std::sync::atomic::{AtomicU64, Ordering};

/// An unnormalized log density with analytic gradient.
///
/// `logp_grad` must be deterministic and side-effect free; values are
/// immutable after construction and safe to share across chains. The log
/// density is finite for all finite positions in the built-in models;
/// negative infinity is reserved for explicit out-of-support signals.
pub trait TargetModel: Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    /// Writes the gradient into `grad` (length `dim`) and returns the log
    /// density at `theta`.
    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;

    /// Log density only. The default evaluates the gradient and discards
    /// it; models with a cheaper density-only path may override.
    fn logp(&self, theta: &[f64]) -> f64 {
        let mut grad = vec![0.0; self.dim()];
        self.logp_grad(theta, &mut grad)
    }
}

impl<M: TargetModel + ?Sized> TargetModel for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        (**self).logp_grad(theta, grad)
    }
    fn logp(&self, theta: &[f64]) -> f64 {
        (**self).logp(theta)
    }
}

/// Checked evaluation: validates dimensions and finiteness around a raw
/// `logp_grad` call.
pub fn eval_model<M: TargetModel + ?Sized>(model: &M, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    if theta.len() != model.dim() {
        return Err(Error::config(format!(
            "model `{}` has dimension {}, got position of length {}",
            model.name(),
            model.dim(),
            theta.len()
        )));
    }
    if let Some(coord) = theta.iter().position(|x| !x.is_finite()) {
        return Err(Error::Eval {
            coord,
            message: "non-finite position component".into(),
        });
    }
    let mut grad = vec![0.0; model.dim()];
    let logp = model.logp_grad(theta, &mut grad);
    if let Some(coord) = grad.iter().position(|g| !g.is_finite()) {
        if logp.is_finite() {
            return Err(Error::Eval {
                coord,
                message: "non-finite gradient component".into(),
            });
        }
    }
    if logp.is_nan() {
        return Err(Error::Eval {
            coord: 0,
            message: "log density is NaN".into(),
        });
    }
    Ok((logp, grad))
}

/// Coordinates whose relative error exceeds this are flagged by
/// [`check_gradient`].
pub const GRADIENT_CHECK_TOLERANCE: f64 = 1e-5;

/// Result of comparing an analytic gradient against central differences.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Per-coordinate relative error `|g - fd| / max(1, |g|, |fd|)`.
    pub rel_errors: Vec<f64>,
    pub max_rel_error: f64,
    /// Coordinates exceeding [`GRADIENT_CHECK_TOLERANCE`].
    pub flagged: Vec<usize>,
}

impl GradCheckReport {
    pub fn ok(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Compares the model's analytic gradient at `theta` against central finite
/// differences with per-coordinate step `step * (1 + |theta_d|)`.
pub fn check_gradient<M: TargetModel + ?Sized>(
    model: &M,
    theta: &[f64],
    step: f64,
) -> Result<GradCheckReport> {
    let (_, grad) = eval_model(model, theta)?;
    let dim = model.dim();
    let mut rel_errors = vec![0.0; dim];
    let mut probe = theta.to_vec();
    for d in 0..dim {
        let h = step * (1.0 + theta[d].abs());
        probe[d] = theta[d] + h;
        let (hi, _) = eval_model(model, &probe)?;
        probe[d] = theta[d] - h;
        let (lo, _) = eval_model(model, &probe)?;
        probe[d] = theta[d];
        if !hi.is_finite() || !lo.is_finite() {
            return Err(Error::Eval {
                coord: d,
                message: "non-finite density in finite-difference probe".into(),
            });
        }
        let fd = (hi - lo) / (2.0 * h);
        let denom = grad[d].abs().max(fd.abs()).max(1.0);
        rel_errors[d] = (grad[d] - fd).abs() / denom;
    }
    let max_rel_error = rel_errors.iter().cloned().fold(0.0, f64::max);
    let flagged = rel_errors
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > GRADIENT_CHECK_TOLERANCE)
        .map(|(d, _)| d)
        .collect();
    Ok(GradCheckReport {
        rel_errors,
        max_rel_error,
        flagged,
    })
}

/// Wrapper that counts evaluations of the inner model.
pub struct CountingModel<M> {
    inner: M,
    evals: AtomicU64,
}

impl<M: TargetModel> CountingModel<M> {
    pub fn new(inner: M) -> Self {
        CountingModel {
            inner,
            evals: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.evals.store(0, Ordering::Relaxed);
    }

    pub fn into_inner(self) -> M {
        self.inner
    }
}

impl<M: TargetModel> TargetModel for CountingModel<M> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.inner.logp_grad(theta, grad)
    }
    fn logp(&self, theta: &[f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.inner.logp(theta)
    }
}

/// Specification of a built-in target.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    /// Zero-mean multivariate normal with a Wishart-drawn precision matrix
    /// (identity scale, `dim` degrees of freedom).
    Mvn { dim: usize, seed: u64 },
    /// Bayesian logistic regression with flat normal priors.
    LogReg { data: LogRegData },
    /// Hierarchical logistic regression with two-way interactions and a
    /// sampled prior variance.
    Hlr { spec: HlrSpec },
    /// Stochastic volatility with the random-walk precision integrated out.
    Sv { data: SvData },
}

/// One of the built-in targets, ready to sample.
#[derive(Debug, Clone)]
pub enum BuiltinModel {
    Mvn(MvnModel),
    LogReg(LogRegModel),
    Hlr(HlrModel),
    Sv(SvModel),
}

impl BuiltinModel {
    /// The precision-matrix spec when this is the multivariate normal
    /// (Gibbs sampling and analytic moments need it).
    pub fn mvn_spec(&self) -> Option<&MvnSpec> {
        match self {
            BuiltinModel::Mvn(m) => Some(m.spec()),
            _ => None,
        }
    }
}

impl TargetModel for BuiltinModel {
    fn dim(&self) -> usize {
        match self {
            BuiltinModel::Mvn(m) => m.dim(),
            BuiltinModel::LogReg(m) => m.dim(),
            BuiltinModel::Hlr(m) => m.dim(),
            BuiltinModel::Sv(m) => m.dim(),
        }
    }
    fn name(&self) -> &str {
        match self {
            BuiltinModel::Mvn(m) => m.name(),
            BuiltinModel::LogReg(m) => m.name(),
            BuiltinModel::Hlr(m) => m.name(),
            BuiltinModel::Sv(m) => m.name(),
        }
    }
    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        match self {
            BuiltinModel::Mvn(m) => m.logp_grad(theta, grad),
            BuiltinModel::LogReg(m) => m.logp_grad(theta, grad),
            BuiltinModel::Hlr(m) => m.logp_grad(theta, grad),
            BuiltinModel::Sv(m) => m.logp_grad(theta, grad),
        }
    }
}

/// Builds a ready-to-sample model from a spec. Deterministic: the same
/// spec (including seeds) always yields the same model.
pub fn build_target(spec: &ModelSpec) -> Result<BuiltinModel> {
    match spec {
        ModelSpec::Mvn { dim, seed } => {
            let mvn = MvnSpec::wishart_identity(*dim, *seed)?;
            Ok(BuiltinModel::Mvn(
                mvn.into_model(format!("mvn-{dim}-seed{seed}")),
            ))
        }
        ModelSpec::LogReg { data } => Ok(BuiltinModel::LogReg(LogRegModel::new(data.clone())?)),
        ModelSpec::Hlr { spec } => Ok(BuiltinModel::Hlr(HlrModel::new(spec.clone())?)),
        ModelSpec::Sv { data } => Ok(BuiltinModel::Sv(SvModel::new(data.clone())?)),
    }
}

/// Tiny targets used across the crate's tests.
pub mod testing {
    use super::TargetModel;

    /// `L(theta) = 0` everywhere: the free particle.
    pub struct FlatModel {
        pub dim: usize,
    }

    impl TargetModel for FlatModel {
        fn dim(&self) -> usize {
            self.dim
        }
        fn name(&self) -> &str {
            "flat"
        }
        fn logp_grad(&self, _theta: &[f64], grad: &mut [f64]) -> f64 {
            grad.fill(0.0);
            0.0
        }
    }

    /// 1-D standard normal.
    pub struct StdNormal;

    impl TargetModel for StdNormal {
        fn dim(&self) -> usize {
            1
        }
        fn name(&self) -> &str {
            "std-normal"
        }
        fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
            grad[0] = -theta[0];
            -0.5 * theta[0] * theta[0]
        }
    }
}
