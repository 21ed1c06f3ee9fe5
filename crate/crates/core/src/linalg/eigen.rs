use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Default relative tolerance for merging nearly equal eigenvalues.
pub const DEFAULT_MERGE_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 80;

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Only the Hermitian part of `m` is used. Returns eigenvalues in ascending
/// order and a unitary whose columns are the matching eigenvectors.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);

    let frob = a.norm_frobenius();
    if frob > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off = off_diagonal_norm(&a);
            if off <= 1e-15 * frob {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for (j, z) in a.row(i).iter().enumerate() {
            if i != j {
                s += z.norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation zeroing `a[p,q]`: a phase on column `q` makes the
/// pivot real, then a real Givens rotation annihilates it.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if app.abs() + aqq.abs() + r == app.abs() + aqq.abs() {
        a[(p, q)] = Complex64::new(0.0, 0.0);
        a[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = apq.conj() / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let jpp = Complex64::new(c, 0.0);
    let jpq = Complex64::new(s, 0.0);
    let jqp = phase * -s;
    let jqq = phase * c;

    let n = a.dim();
    for k in 0..n {
        let x = a[(k, p)];
        let y = a[(k, q)];
        a[(k, p)] = x * jpp + y * jqp;
        a[(k, q)] = x * jpq + y * jqq;
    }
    for k in 0..n {
        let x = a[(p, k)];
        let y = a[(q, k)];
        a[(p, k)] = jpp.conj() * x + jqp.conj() * y;
        a[(q, k)] = jpq.conj() * x + jqq.conj() * y;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
    for k in 0..n {
        let x = v[(k, p)];
        let y = v[(k, q)];
        v[(k, p)] = x * jpp + y * jqp;
        v[(k, q)] = x * jpq + y * jqq;
    }
}

/// Groups ascending eigenvalues into runs whose spread from the run's first
/// member is at most `threshold`. Returns index ranges into `values`.
pub fn group_eigenvalues(values: &[f64], threshold: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[start] > threshold {
            if start < i {
                groups.push(start..i);
            }
            start = i;
        }
    }
    groups
}

/// Spectral decomposition `M = Σ_x x E(x)` with one projector per distinct eigenvalue.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    projectors: Vec<ComplexMatrix>,
    bases: Vec<Vec<Vec<Complex64>>>,
    merge_threshold: f64,
}

impl SpectralDecomposition {
    /// Distinct eigenvalues, strictly increasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    /// Orthonormal basis of each eigenspace.
    pub fn bases(&self) -> &[Vec<Vec<Complex64>>] {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn rank(&self, k: usize) -> usize {
        self.bases[k].len()
    }

    /// Absolute distance under which an outcome is identified with an eigenvalue.
    pub fn merge_threshold(&self) -> f64 {
        self.merge_threshold
    }

    /// Index of the eigenvalue matching `outcome`, if any.
    pub fn index_of(&self, outcome: f64) -> Option<usize> {
        let tol = self.merge_threshold.max(1e-12);
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &x)| (x - outcome).abs() <= tol)
            .min_by(|a, b| (a.1 - outcome).abs().total_cmp(&(b.1 - outcome).abs()))
            .map(|(k, _)| k)
    }

    /// `Σ_x x E(x)`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.projectors[0].dim();
        let mut out = ComplexMatrix::zeros(n);
        for (x, p) in self.eigenvalues.iter().zip(&self.projectors) {
            out = &out + &p.scale_real(*x);
        }
        out
    }
}

/// Decomposes a Hermitian matrix into eigenvalues and spectral projectors.
///
/// `tol` bounds the Hermiticity defect `max |M - M^H|`; eigenvalues closer
/// than `tol * max|M|` are merged into one projector.
pub fn spectral_decompose(m: &ComplexMatrix, tol: f64) -> Result<SpectralDecomposition> {
    spectral_decompose_with(m, tol, tol)
}

/// As [`spectral_decompose`] with separate Hermiticity and merge tolerances.
pub fn spectral_decompose_with(
    m: &ComplexMatrix,
    hermitian_tol: f64,
    merge_tol: f64,
) -> Result<SpectralDecomposition> {
    m.check_finite()?;
    let deviation = m.hermitian_deviation();
    if deviation > hermitian_tol {
        return Err(Error::NotHermitian {
            deviation,
            tol: hermitian_tol,
        });
    }
    let (values, vectors) = hermitian_eigen(m);
    let merge_threshold = merge_tol * m.norm_max();
    let n = m.dim();

    let mut eigenvalues = Vec::new();
    let mut projectors = Vec::new();
    let mut bases = Vec::new();
    for range in group_eigenvalues(&values, merge_threshold) {
        let mean = values[range.clone()].iter().sum::<f64>() / range.len() as f64;
        let mut projector = ComplexMatrix::zeros(n);
        let mut basis = Vec::with_capacity(range.len());
        for k in range {
            let v = vectors.column(k);
            projector.add_outer(Complex64::new(1.0, 0.0), &v, &v);
            basis.push(v);
        }
        eigenvalues.push(mean);
        projectors.push(projector);
        bases.push(basis);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        projectors,
        bases,
        merge_threshold,
    })
}
