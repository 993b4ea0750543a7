//! Small dense linear-algebra helpers used across the crate.
//!
//! Everything here targets the modest sizes this toolkit works at (tens to
//! a few hundred nodes), so plain cyclic Jacobi sweeps and unblocked
//! Cholesky are entirely adequate and keep the crate dependency-free on
//! external BLAS/LAPACK providers.

use ndarray::{Array1, Array2};

/// Eigenvalues and eigenvectors of a symmetric matrix via cyclic Jacobi
/// rotations. Returns `(eigenvalues, eigenvectors)` with eigenvalues in
/// ascending order and eigenvectors as columns.
///
/// Panics if the matrix is not square. Symmetry is assumed; only the upper
/// triangle drives the rotations.
pub fn jacobi_eigh(matrix: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "jacobi_eigh expects a square matrix");
    let mut a = matrix.clone();
    let mut v = Array2::<f64>::eye(n);

    // Off-diagonal Frobenius mass; sweeps stop once it is negligible
    // relative to the matrix scale.
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let tol = 1e-14 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[[p, q]] * a[[p, q]];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                // Stable rotation: t = sign(theta) / (|theta| + sqrt(theta^2 + 1)).
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].partial_cmp(&a[[j, j]]).unwrap());
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut eigenvectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors[[k, dst]] = v[[k, src]];
        }
    }
    (eigenvalues, eigenvectors)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(matrix: &Array2<f64>) -> f64 {
    let (vals, _) = jacobi_eigh(matrix);
    vals[0]
}

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix, or `None` if a nonpositive pivot is hit.
pub fn cholesky(matrix: &Array2<f64>) -> Option<Array2<f64>> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "cholesky expects a square matrix");
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` with `L` lower triangular.
pub fn solve_lower(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        for k in 0..i {
            let xk = x[k];
            x[i] -= l[[i, k]] * xk;
        }
        x[i] /= l[[i, i]];
    }
    x
}

/// Solves `L^T x = b` with `L` lower triangular (so `L^T` is upper).
pub fn solve_lower_transpose(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let xk = x[k];
            x[i] -= l[[k, i]] * xk;
        }
        x[i] /= l[[i, i]];
    }
    x
}

/// Solves the SPD system `A x = b` via Cholesky. Returns `None` when the
/// factorization fails (matrix not positive definite).
pub fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let l = cholesky(a)?;
    let y = solve_lower(&l, b);
    Some(solve_lower_transpose(&l, &y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // Symmetric matrix with eigenvalues {1, 3}: [[2,1],[1,2]].
        let m = array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = jacobi_eigh(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // Residual ||M v - lambda v|| per pair.
        for j in 0..2 {
            let v = vecs.column(j);
            let mv = m.dot(&v);
            for i in 0..2 {
                assert!((mv[i] - vals[j] * v[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jacobi_diagonalizes_random_symmetric() {
        // Deterministic pseudo-random symmetric matrix.
        let n = 8;
        let mut m = Array2::<f64>::zeros((n, n));
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..n {
            for j in 0..=i {
                let x = next();
                m[[i, j]] = x;
                m[[j, i]] = x;
            }
        }
        let (vals, vecs) = jacobi_eigh(&m);
        // Reconstruction V diag(vals) V^T == M.
        let mut rec = Array2::<f64>::zeros((n, n));
        for k in 0..n {
            let v = vecs.column(k);
            for i in 0..n {
                for j in 0..n {
                    rec[[i, j]] += vals[k] * v[i] * v[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!((rec[[i, j]] - m[[i, j]]).abs() < 1e-9);
            }
        }
        // Ascending order.
        for k in 1..n {
            assert!(vals[k] >= vals[k - 1]);
        }
    }

    #[test]
    fn cholesky_round_trip() {
        let m = array![[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]];
        let l = cholesky(&m).expect("SPD");
        let rec = l.dot(&l.t());
        for i in 0..3 {
            for j in 0..3 {
                assert!((rec[[i, j]] - m[[i, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = array![[1.0, 2.0], [2.0, 1.0]]; // eigenvalues {-1, 3}
        assert!(cholesky(&m).is_none());
    }

    #[test]
    fn spd_solver_matches_direct_substitution() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let b = array![1.0, 2.0];
        let x = solve_spd(&a, &b).expect("SPD");
        let r = a.dot(&x);
        assert!((r[0] - b[0]).abs() < 1e-12);
        assert!((r[1] - b[1]).abs() < 1e-12);
    }
}
