//! Small dense linear-algebra helpers: orthonormalization, a symmetric
//! eigensolver for validation, and a backtracking gradient-descent driver
//! shared by the convex fits in this crate.

use ndarray::{Array1, Array2};

/// Orthonormalize `vectors` by modified Gram-Schmidt with one
/// re-orthogonalization pass. Vectors whose residual norm falls below
/// `drop_tol` are dropped, so rank-deficient inputs yield a clean basis.
pub fn orthonormalize(vectors: &[Array1<f64>], drop_tol: f64) -> Vec<Array1<f64>> {
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut u = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&u);
                u.scaled_add(-c, q);
            }
        }
        let norm = u.dot(&u).sqrt();
        if norm >= drop_tol {
            basis.push(u / norm);
        }
    }
    basis
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method.
///
/// Good enough for the validation-sized matrices this crate handles
/// (d up to a few hundred); returns eigenvalues in ascending order.
pub fn symmetric_eigenvalues(m: &Array2<f64>) -> Array1<f64> {
    let d = m.nrows();
    assert_eq!(d, m.ncols(), "matrix must be square");
    let mut a = m.clone();
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let tol = 1e-14 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(a[[p, q]].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[[p, q]];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }

    let mut eigs: Vec<f64> = (0..d).map(|i| a[[i, i]]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Array1::from(eigs)
}

/// Outcome of a [`descend`] run.
pub struct DescentResult {
    /// Final parameter vector.
    pub params: Array1<f64>,
    /// Objective value per accepted iteration, starting with the initial one.
    pub loss_trace: Vec<f64>,
    /// Gradient norm at the final iterate.
    pub grad_norm: f64,
    /// Iterations actually taken.
    pub iterations: usize,
}

/// Full-batch gradient descent with Armijo backtracking.
///
/// `objective` returns `(loss, gradient)` at a parameter vector. The step is
/// halved until sufficient decrease holds (at most `max_halvings` times) and
/// grown gently after an accepted step, so the loss trace is monotone
/// non-increasing by construction. Stops when the gradient norm drops below
/// `grad_tol` or `max_iter` is reached.
pub fn descend<F>(
    init: Array1<f64>,
    mut objective: F,
    init_lr: f64,
    max_iter: usize,
    grad_tol: f64,
    max_halvings: usize,
) -> DescentResult
where
    F: FnMut(&Array1<f64>) -> (f64, Array1<f64>),
{
    let mut params = init;
    let (mut loss, mut grad) = objective(&params);
    let mut trace = vec![loss];
    let mut lr = init_lr;
    let mut iterations = 0;

    for _ in 0..max_iter {
        let gnorm2 = grad.dot(&grad);
        if gnorm2.sqrt() <= grad_tol {
            break;
        }
        let mut step = lr;
        let mut accepted = false;
        for _ in 0..=max_halvings {
            let candidate = &params - &(step * &grad);
            let (cand_loss, cand_grad) = objective(&candidate);
            if cand_loss.is_finite() && cand_loss <= loss - 1e-4 * step * gnorm2 {
                params = candidate;
                loss = cand_loss;
                grad = cand_grad;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        lr = (step * 2.0).min(init_lr * 16.0);
        trace.push(loss);
        iterations += 1;
    }

    DescentResult {
        grad_norm: grad.dot(&grad).sqrt(),
        params,
        loss_trace: trace,
        iterations,
    }
}

/// Numerically stable `ln(1 + e^z)`.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Logistic sigmoid.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn orthonormalize_drops_dependent_vectors() {
        let v1 = array![1.0, 0.0, 0.0];
        let v2 = array![1.0, 1.0, 0.0];
        let v3 = array![2.0, 1.0, 0.0]; // in span(v1, v2)
        let basis = orthonormalize(&[v1, v2, v3], 1e-10);
        assert_eq!(basis.len(), 2);
        for q in &basis {
            assert!((q.dot(q) - 1.0).abs() < 1e-12);
        }
        assert!(basis[0].dot(&basis[1]).abs() < 1e-12);
    }

    #[test]
    fn jacobi_recovers_diagonal_spectrum() {
        let m = array![[3.0, 0.0], [0.0, -1.0]];
        let eigs = symmetric_eigenvalues(&m);
        assert!((eigs[0] - (-1.0)).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_handles_coupled_matrix() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let m = array![[2.0, 1.0], [1.0, 2.0]];
        let eigs = symmetric_eigenvalues(&m);
        assert!((eigs[0] - 1.0).abs() < 1e-10);
        assert!((eigs[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn descend_minimizes_quadratic() {
        let res = descend(
            array![5.0, -3.0],
            |p| {
                let loss = 0.5 * (p[0] * p[0] + 4.0 * p[1] * p[1]);
                let grad = array![p[0], 4.0 * p[1]];
                (loss, grad)
            },
            1.0,
            500,
            1e-10,
            30,
        );
        assert!(res.params[0].abs() < 1e-8);
        assert!(res.params[1].abs() < 1e-8);
        for w in res.loss_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for z in [-5.0, -0.5, 0.0, 0.5, 5.0] {
            let naive = (1.0f64 + f64::exp(z)).ln();
            assert!((softplus(z) - naive).abs() < 1e-12);
        }
        assert!(softplus(1000.0).is_finite());
        assert!(softplus(-1000.0) >= 0.0);
    }
}
