//! Small dense linear algebra for the point-process kernels: a cyclic
//! Jacobi eigensolver for real symmetric matrices. Plenty for the per-axis
//! kernel sizes used here (a few hundred).

/// Eigendecomposition of a symmetric matrix (row-major, n×n).
/// Returns eigenvalues descending with matching eigenvectors (rows).
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        s
    };
    let scale: f64 = (0..n).map(|i| a[i * n + i].abs()).fold(1e-300, f64::max);
    let tol = (1e-14 * scale) * (1e-14 * scale) * n as f64 * n as f64;

    for _sweep in 0..64 {
        if off(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row * n + col]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let m = [3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 7.0];
        let (vals, _) = symmetric_eigen(&m, 3);
        assert_eq!(vals, vec![7.0, 3.0, -1.0]);
    }

    #[test]
    fn known_two_by_two() {
        // eigenvalues of [[2, 1], [1, 2]] are 3 and 1
        let m = [2.0, 1.0, 1.0, 2.0];
        let (vals, vecs) = symmetric_eigen(&m, 2);
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        // eigenvector for 3 is (1,1)/sqrt(2)
        assert!((vecs[0][0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn reconstructs_matrix_and_orthonormal_vectors() {
        // pseudo-random symmetric matrix
        let n = 24;
        let mut m = vec![0.0f64; n * n];
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..n {
            for j in 0..=i {
                let x = next();
                m[i * n + j] = x;
                m[j * n + i] = x;
            }
        }
        let (vals, vecs) = symmetric_eigen(&m, n);
        // orthonormality
        for a in 0..n {
            for b in a..n {
                let dot: f64 = (0..n).map(|k| vecs[a][k] * vecs[b][k]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10);
            }
        }
        // reconstruction
        for i in 0..n {
            for j in 0..n {
                let mut r = 0.0;
                for k in 0..n {
                    r += vals[k] * vecs[k][i] * vecs[k][j];
                }
                assert!((r - m[i * n + j]).abs() < 1e-9);
            }
        }
    }
}
