//! Quantum probability calculus: Born rule, Lüders update, conditional
//! probabilities, total probability with interference, and joint
//! distributions for commuting families.

mod observable;
mod state;

use serde::{Deserialize, Serialize};

pub use observable::{HermitianObservable, HERMITIAN_TOL};
pub use state::{QuantumState, STATE_TOL};

use crate::classical::{JointDistribution, Outcome};
use crate::error::{Error, Result};
use crate::linalg::{commutator, vector, Complex64, ComplexMatrix};

/// Born values may leave `[0, 1]` by at most this much before clamping.
pub const CLAMP_WINDOW: f64 = 1e-12;

/// Branches at or below this probability cannot be selected.
pub const BRANCH_FLOOR: f64 = 1e-12;

/// Default commutator tolerance for compatibility checks.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

fn check_dim(state: &QuantumState, obs: &HermitianObservable) -> Result<()> {
    if state.dim() != obs.dim() {
        return Err(Error::DimMismatch {
            expected: state.dim(),
            found: obs.dim(),
        });
    }
    Ok(())
}

/// Clamps a computed probability into `[0, 1]`, rejecting values outside the window.
pub fn clamp_probability(p: f64) -> Result<f64> {
    if !(-CLAMP_WINDOW..=1.0 + CLAMP_WINDOW).contains(&p) {
        return Err(Error::NumericalIntegrity(format!(
            "probability {p:e} lies outside [0, 1] beyond the clamping window"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

fn born_for_projector(state: &QuantumState, projector: &ComplexMatrix) -> Result<f64> {
    let p = match state {
        QuantumState::Pure(psi) => vector::norm(&projector.mul_vec(psi)).powi(2),
        QuantumState::Mixed(rho) => rho.trace_product(projector).re,
    };
    clamp_probability(p)
}

/// `q(A = x) = Tr(ρ E(x))`, or `‖E(x)ψ‖²` for a pure state.
pub fn born_probability(state: &QuantumState, obs: &HermitianObservable, x: f64) -> Result<f64> {
    check_dim(state, obs)?;
    born_for_projector(state, obs.projector(x)?)
}

/// Born probabilities of every outcome, in increasing outcome order.
pub fn born_distribution(state: &QuantumState, obs: &HermitianObservable) -> Result<Vec<(f64, f64)>> {
    check_dim(state, obs)?;
    obs.outcomes()
        .iter()
        .zip(obs.spectrum().projectors())
        .map(|(&x, p)| Ok((x, born_for_projector(state, p)?)))
        .collect()
}

/// Lüders update.
///
/// With an outcome the state is projected and renormalized (pure states
/// stay pure). Without one, the non-selective mixture `Σ_x E(x) ρ E(x)`
/// is returned as a density operator.
pub fn luders_update(
    state: &QuantumState,
    obs: &HermitianObservable,
    outcome: Option<f64>,
) -> Result<QuantumState> {
    check_dim(state, obs)?;
    let Some(x) = outcome else {
        let rho = state.density();
        let mut out = ComplexMatrix::zeros(rho.dim());
        for p in obs.spectrum().projectors() {
            out = &out + &(&(p * &rho) * p);
        }
        return Ok(QuantumState::Mixed(out.hermitian_part()));
    };
    let projector = obs.projector(x)?;
    let q = born_for_projector(state, projector)?;
    if q <= BRANCH_FLOOR {
        return Err(Error::ZeroProbabilityBranch {
            outcome: x,
            probability: q,
        });
    }
    Ok(match state {
        QuantumState::Pure(psi) => {
            let projected = projector.mul_vec(psi);
            QuantumState::Pure(vector::normalized(&projected))
        }
        QuantumState::Mixed(rho) => {
            let post = &(projector * rho) * projector;
            let tr = post.trace().re;
            QuantumState::Mixed(post.scale_real(1.0 / tr).hermitian_part())
        }
    })
}

/// `q(B = y | A = x)`: probability of `y` in the state left by outcome `x` of `first`.
pub fn conditional_probability(
    state: &QuantumState,
    first: &HermitianObservable,
    x: f64,
    second: &HermitianObservable,
    y: f64,
) -> Result<f64> {
    let post = luders_update(state, first, Some(x))?;
    born_probability(&post, second, y)
}

/// One cross term `2 |c_k||c_j| cos θ_kj` of the interference sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossTerm {
    pub k: usize,
    pub j: usize,
    pub magnitude: f64,
    /// `arg(c_k conj(c_j))`, radians.
    pub phase: f64,
}

/// Quantum total probability split into its classical part and interference term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceDecomposition {
    pub target_outcome: f64,
    /// `Σ_j q(A=α_j) q(B=β|A=α_j)`.
    pub classical_part: f64,
    pub interference_term: f64,
    /// `q(B=β; ψ)` from the Born rule.
    pub total: f64,
    pub cross_terms: Vec<CrossTerm>,
}

fn rank_one_basis(obs: &HermitianObservable) -> Result<Vec<&[Complex64]>> {
    obs.spectrum()
        .bases()
        .iter()
        .zip(obs.outcomes())
        .map(|(b, &x)| {
            if b.len() == 1 {
                Ok(b[0].as_slice())
            } else {
                Err(Error::DegenerateSpectrum {
                    outcome: x,
                    rank: b.len(),
                })
            }
        })
        .collect()
}

/// Total probability for `B = target` expanded over the eigenbasis of `A`.
///
/// With amplitudes `c_j = <β|α_j><α_j|ψ>`, `q(B=β) = |Σ_j c_j|²`; the
/// diagonal `Σ|c_j|²` is the classical formula and the cross terms
/// `2 Σ_{k<j} |c_k||c_j| cos θ_kj` are the interference.
pub fn quantum_ftp(
    state: &QuantumState,
    a: &HermitianObservable,
    b: &HermitianObservable,
    target: f64,
) -> Result<InterferenceDecomposition> {
    check_dim(state, a)?;
    check_dim(state, b)?;
    let psi = state
        .vector()
        .ok_or_else(|| Error::InvalidState("total probability decomposition needs a pure state".into()))?;
    let alphas = rank_one_basis(a)?;
    let betas = rank_one_basis(b)?;
    let beta = betas[b.outcome_index(target)?];

    let amplitudes: Vec<Complex64> = alphas
        .iter()
        .map(|alpha| vector::inner(beta, alpha) * vector::inner(alpha, psi))
        .collect();

    let classical_part: f64 = alphas
        .iter()
        .map(|alpha| {
            let q_a = vector::inner(alpha, psi).norm_sqr();
            let q_b_given_a = vector::inner(beta, alpha).norm_sqr();
            q_a * q_b_given_a
        })
        .sum();

    let mut cross_terms = Vec::new();
    let mut interference_term = 0.0;
    for k in 0..amplitudes.len() {
        for j in k + 1..amplitudes.len() {
            let (ck, cj) = (amplitudes[k], amplitudes[j]);
            let magnitude = ck.norm() * cj.norm();
            let phase = (ck * cj.conj()).arg();
            interference_term += 2.0 * magnitude * phase.cos();
            cross_terms.push(CrossTerm {
                k,
                j,
                magnitude,
                phase,
            });
        }
    }

    let total = born_probability(state, b, target)?;
    let defect = (classical_part + interference_term - total).abs();
    if defect > 1e-10 {
        return Err(Error::NumericalIntegrity(format!(
            "classical part + interference differs from the Born value by {defect:e}"
        )));
    }
    Ok(InterferenceDecomposition {
        target_outcome: b.outcomes()[b.outcome_index(target)?],
        classical_part,
        interference_term,
        total,
        cross_terms,
    })
}

/// Interference term of [`quantum_ftp`]: quantum minus classical total probability.
pub fn probability_gain(
    state: &QuantumState,
    a: &HermitianObservable,
    b: &HermitianObservable,
    target: f64,
) -> Result<f64> {
    Ok(quantum_ftp(state, a, b, target)?.interference_term)
}

/// `max |[A, B]|`.
pub fn commutator_norm(a: &HermitianObservable, b: &HermitianObservable) -> Result<f64> {
    Ok(commutator(a.matrix(), b.matrix())?.norm_max())
}

/// Whether `max |[A, B]| <= tol`.
pub fn are_compatible(a: &HermitianObservable, b: &HermitianObservable, tol: f64) -> Result<bool> {
    Ok(commutator_norm(a, b)? <= tol)
}

/// First pair `(i, j)` in the family whose commutator exceeds `tol`.
pub fn first_incompatible_pair(observables: &[HermitianObservable], tol: f64) -> Result<Option<(usize, usize, f64)>> {
    for i in 0..observables.len() {
        for j in i + 1..observables.len() {
            let norm = commutator_norm(&observables[i], &observables[j])?;
            if norm > tol {
                return Ok(Some((i, j, norm)));
            }
        }
    }
    Ok(None)
}

/// Joint distribution `p(x1..xn) = Tr[ρ E1(x1)···En(xn)]` of a commuting family.
///
/// Cells of zero probability are omitted. Each cell is also evaluated with
/// the projector product reversed; a disagreement beyond `1e-10` is
/// reported as a numerical-integrity failure.
pub fn jpd_for_compatible(
    state: &QuantumState,
    observables: &[HermitianObservable],
    tol: f64,
) -> Result<JointDistribution> {
    if observables.is_empty() {
        return Err(Error::InvalidArgument("at least one observable is required".into()));
    }
    for obs in observables {
        check_dim(state, obs)?;
    }
    if let Some((first, second, norm)) = first_incompatible_pair(observables, tol)? {
        return Err(Error::IncompatibleFamily { first, second, norm });
    }
    let rho = state.density();
    let n = observables.len();
    let mut cells = Vec::new();
    let mut index = vec![0usize; n];
    'cells: loop {
        let mut forward = ComplexMatrix::identity(rho.dim());
        for (obs, &k) in observables.iter().zip(&index) {
            forward = &forward * &obs.spectrum().projectors()[k];
        }
        if forward.norm_max() > 1e-14 {
            let mut reverse = ComplexMatrix::identity(rho.dim());
            for (obs, &k) in observables.iter().zip(&index).rev() {
                reverse = &reverse * &obs.spectrum().projectors()[k];
            }
            let p = rho.trace_product(&forward).re;
            let p_rev = rho.trace_product(&reverse).re;
            if (p - p_rev).abs() > 1e-10 {
                return Err(Error::NumericalIntegrity(format!(
                    "projector product depends on order: {p} vs {p_rev}"
                )));
            }
            let p = clamp_probability(p)?;
            if p > 0.0 {
                let key = observables
                    .iter()
                    .zip(&index)
                    .map(|(o, &k)| Outcome::new(o.outcomes()[k]))
                    .collect();
                cells.push((key, p));
            }
        }
        for pos in (0..n).rev() {
            index[pos] += 1;
            if index[pos] < observables[pos].spectrum().len() {
                continue 'cells;
            }
            index[pos] = 0;
        }
        break;
    }
    let total: f64 = cells.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::NumericalIntegrity(format!("joint cells sum to {total}")));
    }
    for cell in &mut cells {
        cell.1 /= total;
    }
    let names = observables
        .iter()
        .enumerate()
        .map(|(i, o)| o.label().map_or_else(|| format!("A{}", i + 1), str::to_owned))
        .collect();
    JointDistribution::new(names, cells)
}
