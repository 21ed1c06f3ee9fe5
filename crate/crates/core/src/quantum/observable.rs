use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_decompose_with, ComplexMatrix, SpectralDecomposition, DEFAULT_MERGE_TOL};

/// Hermiticity tolerance for observables.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Hermitian operator with its cached spectral decomposition `A = Σ_x x E(x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct HermitianObservable {
    matrix: ComplexMatrix,
    spectrum: SpectralDecomposition,
    label: Option<String>,
}

impl TryFrom<ComplexMatrix> for HermitianObservable {
    type Error = Error;
    fn try_from(m: ComplexMatrix) -> Result<Self> {
        HermitianObservable::new(m)
    }
}

impl From<HermitianObservable> for ComplexMatrix {
    fn from(o: HermitianObservable) -> Self {
        o.matrix
    }
}

impl HermitianObservable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, HERMITIAN_TOL, DEFAULT_MERGE_TOL)
    }

    pub fn with_tolerances(matrix: ComplexMatrix, hermitian_tol: f64, merge_tol: f64) -> Result<Self> {
        let spectrum = spectral_decompose_with(&matrix, hermitian_tol, merge_tol)?;
        Ok(HermitianObservable {
            matrix: matrix.hermitian_part(),
            spectrum,
            label: None,
        })
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Distinct eigenvalues, increasing.
    pub fn outcomes(&self) -> &[f64] {
        self.spectrum.eigenvalues()
    }

    pub fn outcome_index(&self, x: f64) -> Result<usize> {
        self.spectrum.index_of(x).ok_or(Error::OutcomeNotInSpectrum(x))
    }

    /// `E(x)`.
    pub fn projector(&self, x: f64) -> Result<&ComplexMatrix> {
        Ok(&self.spectrum.projectors()[self.outcome_index(x)?])
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.spectrum.len() == self.dim()
    }
}
