use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, vector, Complex64, ComplexMatrix};

/// Tolerance on normalization, Hermiticity and positivity of states.
pub const STATE_TOL: f64 = 1e-10;

/// A pure state vector or a density operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub enum QuantumState {
    Pure(Vec<Complex64>),
    Mixed(ComplexMatrix),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum StateJson {
    Pure {
        re: Vec<f64>,
        #[serde(default)]
        im: Option<Vec<f64>>,
    },
    Mixed {
        density: ComplexMatrix,
    },
}

impl TryFrom<StateJson> for QuantumState {
    type Error = Error;

    fn try_from(j: StateJson) -> Result<Self> {
        match j {
            StateJson::Pure { re, im } => {
                if let Some(im) = &im {
                    if im.len() != re.len() {
                        return Err(Error::Shape("`re` and `im` differ in length".into()));
                    }
                }
                let v = re
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| Complex64::new(x, im.as_ref().map_or(0.0, |im| im[i])))
                    .collect();
                QuantumState::pure(v)
            }
            StateJson::Mixed { density } => QuantumState::mixed(density),
        }
    }
}

impl From<QuantumState> for StateJson {
    fn from(s: QuantumState) -> Self {
        match s {
            QuantumState::Pure(v) => StateJson::Pure {
                re: v.iter().map(|z| z.re).collect(),
                im: Some(v.iter().map(|z| z.im).collect()),
            },
            QuantumState::Mixed(m) => StateJson::Mixed { density: m },
        }
    }
}

impl QuantumState {
    /// Pure state; the vector must have unit norm.
    pub fn pure(v: Vec<Complex64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidState("state vector is empty".into()));
        }
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = vector::norm(&v);
        if (n - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("state vector has norm {n}")));
        }
        Ok(QuantumState::Pure(v))
    }

    /// Pure state from an arbitrary non-zero vector.
    pub fn pure_normalized(v: Vec<Complex64>) -> Result<Self> {
        let n = vector::norm(&v);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidState("cannot normalize the zero vector".into()));
        }
        Self::pure(v.iter().map(|z| z / n).collect())
    }

    /// Density operator: Hermitian, unit trace, positive semidefinite.
    pub fn mixed(rho: ComplexMatrix) -> Result<Self> {
        rho.check_finite()?;
        let dev = rho.hermitian_deviation();
        if dev > STATE_TOL {
            return Err(Error::InvalidState(format!("density is not Hermitian (defect {dev:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("density has trace {tr}")));
        }
        let min = min_eigenvalue(&rho);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("density has eigenvalue {min:e}")));
        }
        Ok(QuantumState::Mixed(rho))
    }

    /// Computational basis state `|k>`.
    pub fn basis(dim: usize, k: usize) -> Self {
        QuantumState::Pure(vector::basis(dim, k))
    }

    /// `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        QuantumState::Mixed(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    /// `(|0> + |1>)/√2`.
    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        QuantumState::Pure(vector::real(&[h, h]))
    }

    /// `(|0> - |1>)/√2`.
    pub fn minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        QuantumState::Pure(vector::real(&[h, -h]))
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(v) => v.len(),
            QuantumState::Mixed(m) => m.dim(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure(_))
    }

    pub fn vector(&self) -> Option<&[Complex64]> {
        match self {
            QuantumState::Pure(v) => Some(v),
            QuantumState::Mixed(_) => None,
        }
    }

    /// Density operator `ρ` (`|ψ><ψ|` for pure states).
    pub fn density(&self) -> ComplexMatrix {
        match self {
            QuantumState::Pure(v) => ComplexMatrix::outer(v, v),
            QuantumState::Mixed(m) => m.clone(),
        }
    }

    /// `Tr(ρ M)`.
    pub fn expectation(&self, m: &ComplexMatrix) -> Result<Complex64> {
        if m.dim() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: m.dim(),
            });
        }
        Ok(match self {
            QuantumState::Pure(v) => m.expectation(v),
            QuantumState::Mixed(rho) => rho.trace_product(m),
        })
    }

    /// `λ ρ1 + (1-λ) ρ2`.
    pub fn mixture(a: &QuantumState, b: &QuantumState, lambda: f64) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        let rho = &a.density().scale_real(lambda) + &b.density().scale_real(1.0 - lambda);
        QuantumState::mixed(rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_pure_norm() {
        assert!(QuantumState::pure(vector::real(&[1.0, 1.0])).is_err());
        assert!(QuantumState::pure_normalized(vector::real(&[1.0, 1.0])).is_ok());
        assert!(QuantumState::pure_normalized(vector::real(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn validates_density() {
        let bad_trace = ComplexMatrix::real_diagonal(&[0.5, 0.4]);
        assert!(QuantumState::mixed(bad_trace).is_err());
        let negative = ComplexMatrix::real_diagonal(&[1.2, -0.2]);
        assert!(QuantumState::mixed(negative).is_err());
        assert!(QuantumState::mixed(ComplexMatrix::real_diagonal(&[0.9, 0.1])).is_ok());
    }

    #[test]
    fn json_forms() {
        let s: QuantumState =
            serde_json::from_str(r#"{"kind":"pure","re":[0.6,0.8]}"#).unwrap();
        assert_eq!(s.dim(), 2);
        let m: QuantumState = serde_json::from_str(
            r#"{"kind":"mixed","density":{"dim":2,"re":[[0.5,0],[0,0.5]]}}"#,
        )
        .unwrap();
        assert_eq!(m, QuantumState::maximally_mixed(2));
        let back: QuantumState = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
