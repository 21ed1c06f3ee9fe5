//! Dense complex linear algebra for small Hermitian problems.
//!
//! Tensor products use the first-factor-slowest convention everywhere:
//! basis state `|i>⊗|k>` has index `i * dim_second + k`.

mod eigen;
mod matrix;
mod nullspace;
mod ops;

pub use eigen::{
    group_eigenvalues, hermitian_eigen, spectral_decompose, spectral_decompose_with,
    SpectralDecomposition, DEFAULT_MERGE_TOL,
};
pub use matrix::{pauli, ComplexMatrix};
pub use nullspace::{null_space, orthonormalize, solve_linear};
pub use ops::{
    anticommutator, commutator, matrix_exp, partial_trace, tensor_product, tensor_vec, vector,
    Keep,
};

pub use num_complex::Complex64;

/// `Σ|λ|/2` over the eigenvalues of the Hermitian difference `a - b`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let (values, _) = hermitian_eigen(&(a - b));
    0.5 * values.iter().map(|x| x.abs()).sum::<f64>()
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigen(m).0[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn commutator_examples() {
        let z = pauli::z();
        let x = pauli::x();
        assert_eq!(commutator(&z, &z).unwrap().norm_max(), 0.0);
        let xz = commutator(&x, &z).unwrap();
        let expected = ComplexMatrix::from_real(&[&[0.0, -2.0], &[2.0, 0.0]]).unwrap();
        assert_eq!(xz, expected);
        // -2i sigma_y
        assert!(xz.approx_eq(&pauli::y().scale(c(0.0, -2.0)), 0.0));
        let i2 = ComplexMatrix::identity(2);
        let zi = tensor_product(&z, &i2);
        let ix = tensor_product(&i2, &x);
        assert_eq!(commutator(&zi, &ix).unwrap().norm_max(), 0.0);
    }

    #[test]
    fn commutator_dim_mismatch() {
        let e = commutator(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3));
        assert!(matches!(e, Err(crate::Error::DimMismatch { .. })));
    }

    #[test]
    fn tensor_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor_product(&i2, &i2), ComplexMatrix::identity(4));
        assert_eq!(
            tensor_product(&pauli::z(), &i2),
            ComplexMatrix::real_diagonal(&[1.0, 1.0, -1.0, -1.0])
        );
        let p0 = ComplexMatrix::real_diagonal(&[1.0, 0.0]);
        let m = tensor_product(&p0, &pauli::x());
        let expected = ComplexMatrix::from_real(&[
            &[0.0, 1.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(m, expected);
    }

    #[test]
    fn partial_trace_examples() {
        let rho = ComplexMatrix::from_rows(vec![
            vec![c(0.7, 0.0), c(0.1, 0.2)],
            vec![c(0.1, -0.2), c(0.3, 0.0)],
        ])
        .unwrap();
        let sigma = ComplexMatrix::real_diagonal(&[0.25, 0.75]);
        let joint = tensor_product(&rho, &sigma);
        assert!(partial_trace(&joint, (2, 2), Keep::First).unwrap().approx_eq(&rho, 1e-15));
        assert!(partial_trace(&joint, (2, 2), Keep::Second).unwrap().approx_eq(&sigma, 1e-15));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = vector::real(&[h, 0.0, 0.0, h]);
        let bell = ComplexMatrix::outer(&phi, &phi);
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(partial_trace(&bell, (2, 2), Keep::First).unwrap().approx_eq(&half, 1e-15));

        let mixed = ComplexMatrix::identity(4).scale_real(0.25);
        assert!(partial_trace(&mixed, (2, 2), Keep::Second).unwrap().approx_eq(&half, 0.0));

        assert!(matches!(
            partial_trace(&mixed, (3, 2), Keep::First),
            Err(crate::Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn exp_examples() {
        assert_eq!(matrix_exp(&ComplexMatrix::zeros(3)), ComplexMatrix::identity(3));

        let half_pi = std::f64::consts::FRAC_PI_2;
        let u = matrix_exp(&pauli::x().scale(c(0.0, -half_pi)));
        assert!(u.approx_eq(&pauli::x().scale(c(0.0, -1.0)), 1e-14));

        let t = 0.37;
        let u = matrix_exp(&pauli::z().scale(c(0.0, -t)));
        let expected = ComplexMatrix::diagonal(&[c(0.0, -t).exp(), c(0.0, t).exp()]);
        assert!(u.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn exp_general_matches_closed_form() {
        // Nilpotent: exp([[0,1],[0,0]] * a) = [[1,a],[0,1]]
        let n = ComplexMatrix::from_real(&[&[0.0, 3.0], &[0.0, 0.0]]).unwrap();
        let e = matrix_exp(&n);
        assert!(e.approx_eq(&ComplexMatrix::from_real(&[&[1.0, 3.0], &[0.0, 1.0]]).unwrap(), 1e-13));
        // Non-normal upper-triangular with distinct diagonal.
        let m = ComplexMatrix::from_real(&[&[-1.0, 2.0], &[0.0, -3.0]]).unwrap();
        let e = matrix_exp(&m);
        let (e1, e3) = ((-1.0f64).exp(), (-3.0f64).exp());
        let expected = ComplexMatrix::from_real(&[&[e1, e1 - e3], &[0.0, e3]]).unwrap();
        assert!(e.approx_eq(&expected, 1e-13));
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let a = ComplexMatrix::real_diagonal(&[1.0, 0.0]);
        let b = ComplexMatrix::real_diagonal(&[0.0, 1.0]);
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-15);
    }
}
