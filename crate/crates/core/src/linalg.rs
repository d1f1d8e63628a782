//! Small dense linear-algebra helpers for the built-in targets.
//!
//! Matrices are row-major `Vec<f64>` of length `dim * dim`. Everything here
//! is sized for the benchmark problems (a few hundred dimensions at most).

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dense matrix-vector product `out = a * x`.
pub fn mat_vec(a: &[f64], dim: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.len(), dim * dim);
    debug_assert_eq!(x.len(), dim);
    debug_assert_eq!(out.len(), dim);
    for i in 0..dim {
        out[i] = dot(&a[i * dim..(i + 1) * dim], x);
    }
}

/// Cholesky factor `L` (lower triangular, row-major) with `A = L Lᵀ`.
/// Returns `None` when `A` is not numerically positive definite.
pub fn cholesky(a: &[f64], dim: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), dim * dim);
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = a[i * dim + j];
            for k in 0..j {
                sum -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l[i * dim + j] = sum.sqrt();
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    Some(l)
}

/// Inverse of a symmetric positive-definite matrix from its Cholesky factor.
pub fn spd_inverse_from_cholesky(l: &[f64], dim: usize) -> Vec<f64> {
    // Invert L by forward substitution, then A^{-1} = L^{-T} L^{-1}.
    let mut inv_l = vec![0.0; dim * dim];
    for i in 0..dim {
        inv_l[i * dim + i] = 1.0 / l[i * dim + i];
        for j in (i + 1)..dim {
            let mut sum = 0.0;
            for k in i..j {
                sum += l[j * dim + k] * inv_l[k * dim + i];
            }
            inv_l[j * dim + i] = -sum / l[j * dim + j];
        }
    }
    let mut inv = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = 0.0;
            for k in i..dim {
                sum += inv_l[k * dim + i] * inv_l[k * dim + j];
            }
            inv[i * dim + j] = sum;
            inv[j * dim + i] = sum;
        }
    }
    inv
}

/// `A = L Lᵀ` for a lower-triangular `L`; the result is exactly symmetric.
pub fn lower_times_transpose(l: &[f64], dim: usize) -> Vec<f64> {
    let mut a = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = 0.0;
            for k in 0..=j.min(i) {
                sum += l[i * dim + k] * l[j * dim + k];
            }
            a[i * dim + j] = sum;
            a[j * dim + i] = sum;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_roundtrip() {
        let a = vec![4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&a, 2).unwrap();
        let back = lower_times_transpose(&l, 2);
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky(&a, 2).is_none());
    }

    #[test]
    fn spd_inverse_matches_hand_inverse() {
        let a = vec![2.0, -1.0, -1.0, 2.0];
        let l = cholesky(&a, 2).unwrap();
        let inv = spd_inverse_from_cholesky(&l, 2);
        // det = 3, inverse = [[2,1],[1,2]]/3
        let expect = [2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0];
        for (x, y) in inv.iter().zip(&expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
