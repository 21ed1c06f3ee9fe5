use num_complex::Complex64;

use super::eigen::hermitian_eigen;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `AB - BA`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.same_dim(b)?;
    Ok(&(a * b) - &(b * a))
}

/// `AB + BA`.
pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.same_dim(b)?;
    Ok(&(a * b) + &(b * a))
}

/// Kronecker product, first factor slowest:
/// `(A ⊗ B)[i*dB + k, j*dB + l] = A[i,j] * B[k,l]`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    let n = da * db;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..da {
        for j in 0..da {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k, j * db + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of state vectors, same index convention as [`tensor_product`].
pub fn tensor_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

/// Which tensor factor survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of an operator on `C^dim_first ⊗ C^dim_second`.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: (usize, usize),
    keep: Keep,
) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    if d1 == 0 || d2 == 0 || d1 * d2 != m.dim() {
        return Err(Error::DimMismatch {
            expected: m.dim(),
            found: d1 * d2,
        });
    }
    Ok(match keep {
        Keep::First => ComplexMatrix::from_fn(d1, |i, j| {
            (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()
        }),
        Keep::Second => ComplexMatrix::from_fn(d2, |k, l| {
            (0..d1).map(|i| m[(i * d2 + k, i * d2 + l)]).sum()
        }),
    })
}

/// Matrix exponential.
///
/// Hermitian and anti-Hermitian arguments (the `-iHt` propagators) go
/// through the spectral decomposition, which keeps `exp(-iH)` unitary to
/// working precision. Anything else uses scaling and squaring on a
/// truncated Taylor series.
pub fn matrix_exp(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.dim();
    let scale = m.norm_max();
    if scale == 0.0 {
        return ComplexMatrix::identity(n);
    }
    let tol = 1e-12 * scale.max(1.0);
    if m.hermitian_deviation() <= tol {
        return spectral_function(&m.hermitian_part(), |x| Complex64::new(x.exp(), 0.0));
    }
    // M = -iH with H Hermitian  <=>  iM Hermitian.
    let h = m.scale(Complex64::new(0.0, 1.0));
    if h.hermitian_deviation() <= tol {
        return spectral_function(&h.hermitian_part(), |x| Complex64::new(0.0, -x).exp());
    }
    taylor_exp(m)
}

fn spectral_function(h: &ComplexMatrix, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let n = h.dim();
    let mut out = ComplexMatrix::zeros(n);
    for (k, &x) in values.iter().enumerate() {
        let v = vectors.column(k);
        out.add_outer(f(x), &v, &v);
    }
    out
}

fn taylor_exp(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.dim();
    let norm = m.norm_row_sum();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let a = m.scale_real(0.5f64.powi(squarings as i32));
    let mut term = ComplexMatrix::identity(n);
    let mut sum = ComplexMatrix::identity(n);
    for k in 1..=20 {
        term = (&term * &a).scale_real(1.0 / k as f64);
        sum = &sum + &term;
        if term.norm_max() < 1e-18 * sum.norm_max() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Vector helpers on plain `[Complex64]` slices.
pub mod vector {
    use num_complex::Complex64;

    /// `<a|b>`, conjugate-linear in the first argument.
    pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    pub fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(v: &[Complex64]) -> Vec<Complex64> {
        let n = norm(v);
        v.iter().map(|z| z / n).collect()
    }

    pub fn basis(dim: usize, k: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn real(values: &[f64]) -> Vec<Complex64> {
        values.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }
}
