//! Random ensembles used by sweeps, scenarios and property tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{hermitian_eigen, orthonormalize, vector, Complex64, ComplexMatrix};

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random unit vector.
pub fn unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        if vector::norm(&v) > 1e-6 {
            return vector::normalized(&v);
        }
    }
}

/// Gaussian unitary ensemble sample.
pub fn hermitian(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, |_, _| gaussian(rng));
    g.hermitian_part()
}

/// Haar-like random unitary from Gram-Schmidt on Gaussian columns.
pub fn unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    loop {
        let cols: Vec<Vec<Complex64>> = (0..dim)
            .map(|_| (0..dim).map(|_| gaussian(rng)).collect())
            .collect();
        let q = orthonormalize(&cols, 1e-8);
        if q.len() == dim {
            return ComplexMatrix::from_fn(dim, |i, j| q[j][i]);
        }
    }
}

/// `U diag(values) U^H`.
pub fn with_spectrum(u: &ComplexMatrix, values: &[f64]) -> ComplexMatrix {
    let d = ComplexMatrix::real_diagonal(values);
    &(u * &d) * &u.adjoint()
}

/// Hermitian matrix with `dim` distinct eigenvalues spaced at least 0.1 apart,
/// in a random eigenbasis.
pub fn nondegenerate_hermitian(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let u = unitary(rng, dim);
    with_spectrum(&u, &distinct_values(rng, dim))
}

/// `dim` values in `[-2, 2]` with pairwise gaps of at least 0.1.
pub fn distinct_values(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    let mut values: Vec<f64> = Vec::with_capacity(dim);
    while values.len() < dim {
        let x: f64 = rng.random_range(-2.0..2.0);
        if values.iter().all(|y| (x - y).abs() >= 0.1) {
            values.push(x);
        }
    }
    values
}

/// Mixed state `G G^H / Tr` from a Ginibre matrix.
pub fn density(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, |_, _| gaussian(rng));
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr).hermitian_part()
}

/// GUE sample rescaled affinely so its spectrum spans exactly `[-1, 1]`.
pub fn bounded_observable(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    loop {
        let h = hermitian(rng, dim);
        let (values, _) = hermitian_eigen(&h);
        let (lo, hi) = (values[0], values[dim - 1]);
        let half = 0.5 * (hi - lo);
        if half < 1e-6 {
            continue;
        }
        let centre = 0.5 * (hi + lo);
        let shifted = &h - &ComplexMatrix::identity(dim).scale_real(centre);
        return shifted.scale_real(1.0 / half).hermitian_part();
    }
}

/// Bounded observable sharing the eigenbasis of `partner`, so the two commute.
pub fn commuting_partner(rng: &mut impl Rng, partner: &ComplexMatrix) -> ComplexMatrix {
    let dim = partner.dim();
    let (_, u) = hermitian_eigen(partner);
    let values: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
    with_spectrum(&u, &values).hermitian_part()
}
