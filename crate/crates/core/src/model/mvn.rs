//! Zero-mean multivariate normal target with a known precision matrix,
//! `L(theta) = -theta' A theta / 2`.

use crate::error::Error;
use crate::linalg::{cholesky, dot, lower_times_transpose, mat_vec, spd_inverse_from_cholesky};
use crate::model::TargetModel;
use crate::rng::RngStream;
use crate::Result;
use rand::Rng;
use rand_distr::ChiSquared;

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric positive-definite precision matrix of size `dim x dim`.
#[derive(Debug, Clone)]
pub struct MvnSpec {
    dim: usize,
    precision: Vec<f64>,
    chol: Vec<f64>,
}

impl MvnSpec {
    /// Validates symmetry (within 1e-12) and positive definiteness.
    pub fn new(dim: usize, precision: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("mvn dimension must be positive"));
        }
        if precision.len() != dim * dim {
            return Err(Error::config(format!(
                "precision matrix must have {} entries, got {}",
                dim * dim,
                precision.len()
            )));
        }
        for i in 0..dim {
            for j in 0..i {
                let a = precision[i * dim + j];
                let b = precision[j * dim + i];
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::config(format!(
                        "precision matrix not symmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        let chol = cholesky(&precision, dim)
            .ok_or_else(|| Error::config("precision matrix is not positive definite"))?;
        Ok(MvnSpec {
            dim,
            precision,
            chol,
        })
    }

    /// Draws a precision matrix from a Wishart distribution with identity
    /// scale and `dim` degrees of freedom, deterministically from `seed`.
    pub fn wishart_identity(dim: usize, seed: u64) -> Result<Self> {
        Self::wishart(dim, dim, seed)
    }

    /// Wishart draw with identity scale via the Bartlett decomposition:
    /// lower-triangular factor with chi-distributed diagonal entries and
    /// standard-normal entries below.
    pub fn wishart(dim: usize, dof: usize, seed: u64) -> Result<Self> {
        if dof < dim {
            return Err(Error::config(format!(
                "Wishart degrees of freedom {dof} below dimension {dim}"
            )));
        }
        let mut seed = seed;
        loop {
            let mut rng = RngStream::substream(seed, 0x5749_5348); // "WISH"
            let mut l = vec![0.0; dim * dim];
            for i in 0..dim {
                let chi = ChiSquared::new((dof - i) as f64)
                    .expect("chi-squared dof is positive by the dof >= dim check");
                l[i * dim + i] = rng.sample::<f64, _>(chi).sqrt();
                for j in 0..i {
                    l[i * dim + j] = rng.standard_normal();
                }
            }
            let a = lower_times_transpose(&l, dim);
            match Self::new(dim, a) {
                Ok(spec) => return Ok(spec),
                Err(_) => {
                    // Numerically degenerate draw; retry on the next seed.
                    eprintln!(
                        "wishart draw for seed {seed} was not positive definite; regenerating"
                    );
                    seed = seed.wrapping_add(1);
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn precision(&self) -> &[f64] {
        &self.precision
    }

    /// Covariance `A^{-1}`, the analytic second moment of the target.
    pub fn covariance(&self) -> Vec<f64> {
        spd_inverse_from_cholesky(&self.chol, self.dim)
    }

    pub fn into_model(self, name: impl Into<String>) -> MvnModel {
        MvnModel {
            spec: self,
            name: name.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MvnModel {
    spec: MvnSpec,
    name: String,
}

impl MvnModel {
    pub fn spec(&self) -> &MvnSpec {
        &self.spec
    }
}

impl TargetModel for MvnModel {
    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        mat_vec(&self.spec.precision, self.spec.dim, theta, grad);
        let quad = dot(theta, grad);
        for g in grad.iter_mut() {
            *g = -*g;
        }
        -0.5 * quad
    }
}
