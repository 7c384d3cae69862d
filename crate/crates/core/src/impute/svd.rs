//! Truncated SVD via cyclic Jacobi eigendecomposition of the Gram matrix.
//!
//! The feature dimension here is small (tens of columns), so the best rank-r
//! approximation is computed from the eigenvectors of the smaller Gram matrix:
//! for m >= n, `A_r = A V_r V_r^T` with `V_r` the top-r eigenvectors of
//! `A^T A`; for m < n the transposed identity is used. This avoids forming
//! singular vectors for near-zero singular values.

use ndarray::{s, Array2, ArrayView2};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns. Deterministic; converges quadratically once nearly diagonal.
pub fn sym_eig(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eig needs a square matrix");
    let mut m = a.clone();
    let mut v = Array2::eye(n);

    let frob: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol2 = (1e-14 * (frob + f64::MIN_POSITIVE)).powi(2);

    for _sweep in 0..64 {
        let mut off2 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off2 += 2.0 * m[[p, q]] * m[[p, q]];
            }
        }
        if off2 <= tol2 {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
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
    order.sort_by(|&i, &j| m[[j, j]].partial_cmp(&m[[i, i]]).unwrap().then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[[i, i]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (out, &i) in order.iter().enumerate() {
        vectors.column_mut(out).assign(&v.column(i));
    }
    (eigenvalues, vectors)
}

/// Squared singular values of `a` in descending order (eigenvalues of the
/// smaller Gram matrix, clamped at zero).
pub fn squared_singular_values(a: &ArrayView2<f64>) -> Vec<f64> {
    let (m, n) = a.dim();
    let gram = if n <= m { a.t().dot(a) } else { a.dot(&a.t()) };
    let (eig, _) = sym_eig(&gram);
    eig.into_iter().map(|x| x.max(0.0)).collect()
}

/// Best rank-`rank` approximation of `a` in the least-squares sense.
pub fn truncated_approx(a: &ArrayView2<f64>, rank: usize) -> Array2<f64> {
    let (m, n) = a.dim();
    let rank = rank.min(m.min(n));
    if n <= m {
        let gram = a.t().dot(a);
        let (_, vecs) = sym_eig(&gram);
        let vr = vecs.slice(s![.., ..rank]);
        a.dot(&vr).dot(&vr.t())
    } else {
        let gram = a.dot(&a.t());
        let (_, vecs) = sym_eig(&gram);
        let ur = vecs.slice(s![.., ..rank]);
        ur.dot(&ur.t().dot(a))
    }
}

/// Smallest rank whose squared singular values capture `energy` of the total
/// squared mass. Returns at least 1.
pub fn rank_for_energy(a: &ArrayView2<f64>, energy: f64) -> usize {
    let sq = squared_singular_values(a);
    let total: f64 = sq.iter().sum();
    if total <= 0.0 {
        return 1;
    }
    let mut acc = 0.0;
    for (i, &s) in sq.iter().enumerate() {
        acc += s;
        if acc >= energy * total {
            return i + 1;
        }
    }
    sq.len().max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sym_eig_matches_hand_2x2() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (eig, vecs) = sym_eig(&a);
        assert!((eig[0] - 3.0).abs() < 1e-12);
        assert!((eig[1] - 1.0).abs() < 1e-12);
        // A v = lambda v for each column
        for j in 0..2 {
            let v = vecs.column(j);
            let av = a.dot(&v);
            for i in 0..2 {
                assert!((av[i] - eig[j] * v[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sym_eig_vectors_are_orthonormal() {
        let a = array![
            [4.0, 1.0, 0.5, 0.0],
            [1.0, 3.0, 0.2, 0.1],
            [0.5, 0.2, 2.0, 0.3],
            [0.0, 0.1, 0.3, 1.0]
        ];
        let (_, v) = sym_eig(&a);
        let vtv = v.t().dot(&v);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vtv[[i, j]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_one_matrix_is_reconstructed_exactly() {
        let u = array![1.0, 2.0, -0.5, 3.0, 0.25];
        let v = array![2.0, -1.0, 4.0];
        let mut a = Array2::zeros((5, 3));
        for i in 0..5 {
            for j in 0..3 {
                a[[i, j]] = u[i] * v[j];
            }
        }
        let approx = truncated_approx(&a.view(), 1);
        for (x, y) in a.iter().zip(approx.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn full_rank_approx_is_identity() {
        let a = array![
            [1.0, 2.0, 3.0],
            [0.5, -1.0, 2.5],
            [4.0, 0.0, 1.0],
            [2.0, 2.0, 2.0]
        ];
        let approx = truncated_approx(&a.view(), 3);
        for (x, y) in a.iter().zip(approx.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn truncation_is_best_approximation_for_known_spectrum() {
        // Diagonal-ish construction with known singular values 5, 2, 1.
        let a = array![[5.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]];
        let approx = truncated_approx(&a.view(), 2);
        // The rank-2 truncation keeps the 5 and 2 directions, drops the 1.
        let err2: f64 = a
            .iter()
            .zip(approx.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        assert!((err2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wide_matrix_uses_row_gram() {
        let a = array![[1.0, 2.0, 3.0, 4.0, 5.0], [2.0, 4.0, 6.0, 8.0, 10.0]];
        // rank 1 exactly
        let approx = truncated_approx(&a.view(), 1);
        for (x, y) in a.iter().zip(approx.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn energy_rank_detects_true_rank() {
        let u = array![1.0, -2.0, 0.5, 1.5];
        let v = array![3.0, 1.0, -1.0];
        let mut a = Array2::zeros((4, 3));
        for i in 0..4 {
            for j in 0..3 {
                a[[i, j]] = u[i] * v[j];
            }
        }
        assert_eq!(rank_for_energy(&a.view(), 0.9), 1);
    }
}
