//! Small dense helpers on `&[f64]` vectors plus nalgebra-backed subspace fitting.

use nalgebra::{DMatrix, SymmetricEigen};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

/// Determinant of a small symmetric positive semidefinite matrix stored row-major.
pub fn small_det(g: &mut [f64], d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => g[0],
        2 => g[0] * g[3] - g[1] * g[2],
        _ => {
            // Gaussian elimination with partial pivoting
            let mut det = 1.0;
            for c in 0..d {
                let mut p = c;
                for r in c + 1..d {
                    if g[r * d + c].abs() > g[p * d + c].abs() {
                        p = r;
                    }
                }
                if g[p * d + c] == 0.0 {
                    return 0.0;
                }
                if p != c {
                    for k in 0..d {
                        g.swap(p * d + k, c * d + k);
                    }
                    det = -det;
                }
                let piv = g[c * d + c];
                det *= piv;
                for r in c + 1..d {
                    let f = g[r * d + c] / piv;
                    for k in c..d {
                        g[r * d + k] -= f * g[c * d + k];
                    }
                }
            }
            det
        }
    }
}

/// `sqrt(det(J^T J))` for a column-major `m x d` Jacobian.
pub fn area_element(jac: &[f64], m: usize, d: usize) -> f64 {
    let mut g = [0.0; 16];
    for a in 0..d {
        for b in a..d {
            let v = dot(&jac[a * m..(a + 1) * m], &jac[b * m..(b + 1) * m]);
            g[a * d + b] = v;
            g[b * d + a] = v;
        }
    }
    small_det(&mut g[..d * d], d).max(0.0).sqrt()
}

/// Frobenius norm of a column-major Jacobian; an upper bound on the operator norm.
pub fn frobenius(jac: &[f64]) -> f64 {
    norm(jac)
}

/// Orthonormal basis (as columns of an `m x k` matrix) for the span of the
/// columns of a column-major `m x d` matrix. Returns `None` if rank-deficient.
pub fn orthonormal_columns(jac: &[f64], m: usize, d: usize) -> Option<DMatrix<f64>> {
    let mut q = DMatrix::<f64>::zeros(m, d);
    for k in 0..d {
        let mut v: Vec<f64> = jac[k * m..(k + 1) * m].to_vec();
        let scale0 = norm(&v);
        // modified Gram-Schmidt, two passes
        for _ in 0..2 {
            for j in 0..k {
                let c: f64 = (0..m).map(|i| q[(i, j)] * v[i]).sum();
                for i in 0..m {
                    v[i] -= c * q[(i, j)];
                }
            }
        }
        let n = norm(&v);
        if !(n > 1e-12 * scale0.max(1e-300)) {
            return None;
        }
        for i in 0..m {
            q[(i, k)] = v[i] / n;
        }
    }
    Some(q)
}

/// Sine of the largest principal angle between two subspaces given by orthonormal
/// column bases of equal dimension.
pub fn principal_sine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // residual of B after projecting onto span(A)
    let proj = a * (a.transpose() * b);
    let resid = b - proj;
    resid.singular_values().max().min(1.0)
}

/// Largest principal angle in radians.
pub fn principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    principal_sine(a, b).asin()
}

/// Best-fit linear subspace through the origin (total least squares on the rows).
#[derive(Debug, Clone)]
pub struct SubspaceFit {
    /// Orthonormal basis vectors, strongest first.
    pub basis: Vec<Vec<f64>>,
    /// Largest distance of a row to the subspace.
    pub max_residual: f64,
}

/// Principal directions of the second-moment matrix of `rows`, strongest first,
/// together with eigenvalues.
pub fn principal_directions(rows: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = rows.first().map_or(0, Vec::len);
    let mut s = DMatrix::<f64>::zeros(m, m);
    for r in rows {
        for i in 0..m {
            for j in 0..m {
                s[(i, j)] += r[i] * r[j];
            }
        }
    }
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let dirs = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    (dirs, vals)
}

/// Fits a `k`-dimensional linear subspace to `rows`.
pub fn fit_subspace(rows: &[Vec<f64>], k: usize) -> SubspaceFit {
    let (dirs, _) = principal_directions(rows);
    let basis: Vec<Vec<f64>> = dirs.into_iter().take(k).collect();
    let max_residual = rows
        .iter()
        .map(|r| distance_to_span(r, &basis))
        .fold(0.0, f64::max);
    SubspaceFit { basis, max_residual }
}

pub fn distance_to_span(v: &[f64], basis: &[Vec<f64>]) -> f64 {
    let mut r = v.to_vec();
    for b in basis {
        let c = dot(&r, b);
        for (x, y) in r.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
    norm(&r)
}

/// Columns of a matrix as vectors.
pub fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|j| m.column(j).iter().copied().collect()).collect()
}

pub fn from_columns(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let m = cols.first().map_or(0, Vec::len);
    DMatrix::from_fn(m, cols.len(), |i, j| cols[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_by_elimination() {
        let mut g = vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        assert!((small_det(&mut g, 3) - 18.0).abs() < 1e-12);
    }

    #[test]
    fn area_element_of_scaled_plane() {
        // columns (2,0,0) and (0,3,0)
        let jac = [2.0, 0.0, 0.0, 0.0, 3.0, 0.0];
        assert!((area_element(&jac, 3, 2) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn principal_angle_between_lines() {
        let a = from_columns(&[vec![1.0, 0.0]]);
        let t: f64 = 0.3;
        let b = from_columns(&[vec![t.cos(), t.sin()]]);
        assert!((principal_angle(&a, &b) - t).abs() < 1e-12);
    }

    #[test]
    fn subspace_fit_of_planar_points() {
        let rows = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.7, -0.7, 0.0],
        ];
        let fit = fit_subspace(&rows, 2);
        assert!(fit.max_residual < 1e-12);
        let one = fit_subspace(&rows, 1);
        assert!(one.max_residual > 0.5);
    }
}
