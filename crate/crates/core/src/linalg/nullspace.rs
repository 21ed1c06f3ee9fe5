use num_complex::Complex64;

use super::matrix::ComplexMatrix;

/// Basis of the kernel of `m` by Gauss-Jordan elimination with complete pivoting.
///
/// Pivots below `rel_tol * max|m|` are treated as zero. The returned vectors
/// span the kernel but are not orthonormalized.
pub fn null_space(m: &ComplexMatrix, rel_tol: f64) -> Vec<Vec<Complex64>> {
    let n = m.dim();
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let tol = rel_tol * m.norm_max();
    let mut rank = 0;

    while rank < n {
        let (mut pi, mut pj, mut best) = (rank, rank, -1.0);
        for i in rank..n {
            for j in rank..n {
                let v = a[(i, j)].norm();
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= tol {
            break;
        }
        if pi != rank {
            for j in 0..n {
                let tmp = a[(rank, j)];
                a[(rank, j)] = a[(pi, j)];
                a[(pi, j)] = tmp;
            }
        }
        if pj != rank {
            for i in 0..n {
                let tmp = a[(i, rank)];
                a[(i, rank)] = a[(i, pj)];
                a[(i, pj)] = tmp;
            }
            perm.swap(rank, pj);
        }
        let inv = 1.0 / a[(rank, rank)];
        for j in rank..n {
            a[(rank, j)] *= inv;
        }
        for i in 0..n {
            if i == rank {
                continue;
            }
            let f = a[(i, rank)];
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in rank..n {
                let delta = f * a[(rank, j)];
                a[(i, j)] -= delta;
            }
        }
        rank += 1;
    }

    (rank..n)
        .map(|free| {
            let mut x = vec![Complex64::new(0.0, 0.0); n];
            x[perm[free]] = Complex64::new(1.0, 0.0);
            for k in 0..rank {
                x[perm[k]] = -a[(k, free)];
            }
            x
        })
        .collect()
}

/// Gram-Schmidt with re-orthogonalization; drops vectors whose residual
/// norm falls below `tol`.
pub fn orthonormalize(vectors: &[Vec<Complex64>], tol: f64) -> Vec<Vec<Complex64>> {
    use super::ops::vector::{inner, norm};
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let nw = norm(&w);
        if nw > tol {
            out.push(w.iter().map(|z| z / nw).collect());
        }
    }
    out
}

/// Solves `m x = rhs` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `1e-14 * max|m|`.
pub fn solve_linear(m: &ComplexMatrix, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = m.dim();
    assert_eq!(rhs.len(), n, "right-hand side length must match the matrix");
    let mut a = m.clone();
    let mut b = rhs.to_vec();
    let tol = 1e-14 * m.norm_max();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))?;
        if a[(pivot, col)].norm() <= tol {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = tmp;
            }
            b.swap(col, pivot);
        }
        for i in col + 1..n {
            let f = a[(i, col)] / a[(col, col)];
            for j in col..n {
                let delta = f * a[(col, j)];
                a[(i, j)] -= delta;
            }
            let delta = f * b[col];
            b[i] -= delta;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= a[(i, j)] * x[j];
        }
        x[i] = acc / a[(i, i)];
    }
    Some(x)
}
