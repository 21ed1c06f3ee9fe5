//! Indirect measurement models and the instruments they induce.
//!
//! The composite space is system ⊗ probe. A model couples the system to a
//! probe prepared in `R` via a unitary `U`, then reads the meter observable
//! on the probe. Outcome `x` leaves the system in
//! `Tr_probe[(I⊗E(x)) U (ρ⊗R) U^H (I⊗E(x))]`, whose trace is the outcome
//! probability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{partial_trace, tensor_product, trace_distance, vector, Complex64, ComplexMatrix, Keep};
use crate::quantum::{born_probability, clamp_probability, luders_update, HermitianObservable, QuantumState};
use crate::random;
use crate::rng;

/// Unitarity tolerance for couplings.
pub const UNITARY_TOL: f64 = 1e-10;

/// Pass threshold for projective-realization checks.
pub const REALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct IndirectMeasurementModel {
    system_dim: usize,
    probe_state: QuantumState,
    coupling: ComplexMatrix,
    meter: HermitianObservable,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    probe_dim: usize,
    probe_state: QuantumState,
    coupling: ComplexMatrix,
    meter: ComplexMatrix,
}

impl TryFrom<ModelJson> for IndirectMeasurementModel {
    type Error = Error;
    fn try_from(j: ModelJson) -> Result<Self> {
        if j.probe_state.dim() != j.probe_dim {
            return Err(Error::DimMismatch {
                expected: j.probe_dim,
                found: j.probe_state.dim(),
            });
        }
        IndirectMeasurementModel::new(j.probe_state, j.coupling, HermitianObservable::new(j.meter)?)
    }
}

impl From<IndirectMeasurementModel> for ModelJson {
    fn from(m: IndirectMeasurementModel) -> Self {
        ModelJson {
            probe_dim: m.probe_dim(),
            probe_state: m.probe_state,
            coupling: m.coupling,
            meter: m.meter.matrix().clone(),
        }
    }
}

impl IndirectMeasurementModel {
    /// The system dimension is inferred as `dim U / dim R`.
    pub fn new(probe_state: QuantumState, coupling: ComplexMatrix, meter: HermitianObservable) -> Result<Self> {
        let probe_dim = probe_state.dim();
        if meter.dim() != probe_dim {
            return Err(Error::DimMismatch {
                expected: probe_dim,
                found: meter.dim(),
            });
        }
        coupling.check_finite()?;
        if !coupling.dim().is_multiple_of(probe_dim) || coupling.dim() < probe_dim {
            return Err(Error::Shape(format!(
                "coupling dimension {} is not a multiple of the probe dimension {probe_dim}",
                coupling.dim()
            )));
        }
        let dev = coupling.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(IndirectMeasurementModel {
            system_dim: coupling.dim() / probe_dim,
            probe_state,
            coupling,
            meter,
        })
    }

    /// Qubit system, qubit probe in `|0>`, CNOT with the system as control,
    /// meter `diag(0, 1)` on the probe.
    pub fn cnot_probe() -> Self {
        let p0 = ComplexMatrix::real_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::real_diagonal(&[0.0, 1.0]);
        let cnot = &tensor_product(&p0, &ComplexMatrix::identity(2)) + &tensor_product(&p1, &crate::linalg::pauli::x());
        Self::new(QuantumState::basis(2, 0), cnot, HermitianObservable::new(p1).expect("diagonal"))
            .expect("CNOT model is valid")
    }

    /// Same probe and meter as [`Self::cnot_probe`] with `U = I`.
    pub fn no_coupling() -> Self {
        Self::new(
            QuantumState::basis(2, 0),
            ComplexMatrix::identity(4),
            HermitianObservable::new(ComplexMatrix::real_diagonal(&[0.0, 1.0])).expect("diagonal"),
        )
        .expect("identity model is valid")
    }

    /// Probe `I/2`, `U = SWAP`, meter `diag(0, 1)`.
    pub fn swap_probe() -> Self {
        let swap = ComplexMatrix::from_fn(4, |r, c| {
            let (i, k) = (c / 2, c % 2);
            if r == k * 2 + i {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(
            QuantumState::maximally_mixed(2),
            swap,
            HermitianObservable::new(ComplexMatrix::real_diagonal(&[0.0, 1.0])).expect("diagonal"),
        )
        .expect("SWAP model is valid")
    }

    /// Random probe density, Haar-like coupling and non-degenerate meter.
    pub fn random(r: &mut impl rand::Rng, system_dim: usize, probe_dim: usize) -> Self {
        let probe = QuantumState::mixed(random::density(r, probe_dim)).expect("random density is valid");
        let u = random::unitary(r, system_dim * probe_dim);
        let meter = HermitianObservable::new(random::nondegenerate_hermitian(r, probe_dim)).expect("Hermitian");
        Self::new(probe, u, meter).expect("random model is valid")
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }
    pub fn probe_dim(&self) -> usize {
        self.probe_state.dim()
    }
    pub fn probe_state(&self) -> &QuantumState {
        &self.probe_state
    }
    pub fn coupling(&self) -> &ComplexMatrix {
        &self.coupling
    }
    pub fn meter(&self) -> &HermitianObservable {
        &self.meter
    }

    fn check_system(&self, state: &QuantumState) -> Result<()> {
        if state.dim() != self.system_dim {
            return Err(Error::DimMismatch {
                expected: self.system_dim,
                found: state.dim(),
            });
        }
        Ok(())
    }

    fn evolved(&self, state: &QuantumState) -> ComplexMatrix {
        let joint = tensor_product(&state.density(), &self.probe_state.density());
        &(&self.coupling * &joint) * &self.coupling.adjoint()
    }

    fn lifted_projector(&self, x: f64) -> Result<ComplexMatrix> {
        let e = self.meter.projector(x)?;
        Ok(tensor_product(&ComplexMatrix::identity(self.system_dim), e))
    }
}

/// `Tr[(I⊗E(x)) U (ρ⊗R) U^H]`.
pub fn outcome_probability(model: &IndirectMeasurementModel, state: &QuantumState, x: f64) -> Result<f64> {
    model.check_system(state)?;
    let lifted = model.lifted_projector(x)?;
    clamp_probability(model.evolved(state).trace_product(&lifted).re)
}

/// Unnormalized post-measurement system operator for meter outcome `x`.
pub fn instrument_apply(model: &IndirectMeasurementModel, state: &QuantumState, x: f64) -> Result<ComplexMatrix> {
    model.check_system(state)?;
    let lifted = model.lifted_projector(x)?;
    let evolved = model.evolved(state);
    let full = &(&lifted * &evolved) * &lifted;
    let reduced = partial_trace(&full, (model.system_dim, model.probe_dim()), Keep::First)?;
    let p = evolved.trace_product(&lifted).re;
    let defect = (reduced.trace().re - p).abs();
    if defect > 1e-12 {
        return Err(Error::NumericalIntegrity(format!(
            "instrument trace differs from outcome probability by {defect:e}"
        )));
    }
    Ok(reduced.hermitian_part())
}

/// Non-selective channel `Σ_x I(x) ρ`.
pub fn nonselective_apply(model: &IndirectMeasurementModel, state: &QuantumState) -> Result<ComplexMatrix> {
    let mut total = ComplexMatrix::zeros(model.system_dim);
    for &x in model.meter.outcomes() {
        total = &total + &instrument_apply(model, state, x)?;
    }
    Ok(total)
}

/// Worst-case deviations for one meter/system outcome pair over the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDeviation {
    pub meter_outcome: f64,
    pub system_outcome: f64,
    /// `max |q_model(x) - q_Born(x)|`.
    pub max_probability_deviation: f64,
    /// Max trace distance between the normalized instrument output and the Lüders state.
    pub max_trace_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationReport {
    pub grid_size: usize,
    pub tolerance: f64,
    pub rows: Vec<OutcomeDeviation>,
    pub passed: bool,
}

impl RealizationReport {
    /// Whitespace-aligned table, one row per outcome.
    pub fn to_table(&self) -> String {
        use crate::format::sig;
        let mut out = format!(
            "{:>14} {:>14} {:>22} {:>22}\n",
            "meter_outcome", "system_outcome", "max_prob_deviation", "max_trace_distance"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:>14} {:>14} {:>22} {:>22}\n",
                sig(r.meter_outcome),
                sig(r.system_outcome),
                sig(r.max_probability_deviation),
                sig(r.max_trace_distance)
            ));
        }
        out.push_str(&format!(
            "grid_size={} tolerance={} result={}\n",
            self.grid_size,
            sig(self.tolerance),
            if self.passed { "PASS" } else { "FAIL" }
        ));
        out
    }
}

fn check_bijection(obs: &HermitianObservable, model: &IndirectMeasurementModel, bijection: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if bijection.is_empty() {
        return Err(Error::OutcomeMismatch("no meter-to-system outcome map was declared".into()));
    }
    let meter = model.meter();
    if bijection.len() != meter.outcomes().len() || bijection.len() != obs.outcomes().len() {
        return Err(Error::OutcomeMismatch(format!(
            "map has {} pairs for {} meter and {} system outcomes",
            bijection.len(),
            meter.outcomes().len(),
            obs.outcomes().len()
        )));
    }
    let mut seen_m = vec![false; bijection.len()];
    let mut seen_s = vec![false; bijection.len()];
    let mut resolved = Vec::with_capacity(bijection.len());
    for &(m, s) in bijection {
        let im = meter
            .outcome_index(m)
            .map_err(|_| Error::OutcomeMismatch(format!("{m} is not a meter outcome")))?;
        let is = obs
            .outcome_index(s)
            .map_err(|_| Error::OutcomeMismatch(format!("{s} is not a system outcome")))?;
        if std::mem::replace(&mut seen_m[im], true) || std::mem::replace(&mut seen_s[is], true) {
            return Err(Error::OutcomeMismatch(format!("pair ({m}, {s}) repeats an outcome")));
        }
        resolved.push((meter.outcomes()[im], obs.outcomes()[is]));
    }
    Ok(resolved)
}

/// Compares the model's statistics and post-states with the Born rule and
/// Lüders update of `obs` over `grid`.
///
/// `bijection` lists `(meter_outcome, system_outcome)` pairs. Post-states
/// are compared only where the Born probability exceeds `1e-12`.
pub fn verify_projective_realization(
    obs: &HermitianObservable,
    model: &IndirectMeasurementModel,
    bijection: &[(f64, f64)],
    grid: &[QuantumState],
) -> Result<RealizationReport> {
    if obs.dim() != model.system_dim() {
        return Err(Error::DimMismatch {
            expected: model.system_dim(),
            found: obs.dim(),
        });
    }
    let pairs = check_bijection(obs, model, bijection)?;
    let mut rows: Vec<OutcomeDeviation> = pairs
        .iter()
        .map(|&(m, s)| OutcomeDeviation {
            meter_outcome: m,
            system_outcome: s,
            max_probability_deviation: 0.0,
            max_trace_distance: 0.0,
        })
        .collect();
    for state in grid {
        for row in &mut rows {
            let q_model = outcome_probability(model, state, row.meter_outcome)?;
            let q_born = born_probability(state, obs, row.system_outcome)?;
            row.max_probability_deviation = row.max_probability_deviation.max((q_model - q_born).abs());
            if q_born > 1e-12 {
                let luders = luders_update(state, obs, Some(row.system_outcome))?.density();
                let post = instrument_apply(model, state, row.meter_outcome)?;
                let tr = post.trace().re;
                let distance = if tr > 1e-12 {
                    trace_distance(&post.scale_real(1.0 / tr), &luders)
                } else {
                    1.0
                };
                row.max_trace_distance = row.max_trace_distance.max(distance);
            }
        }
    }
    let passed = rows
        .iter()
        .all(|r| r.max_probability_deviation <= REALIZATION_TOL && r.max_trace_distance <= REALIZATION_TOL);
    Ok(RealizationReport {
        grid_size: grid.len(),
        tolerance: REALIZATION_TOL,
        rows,
        passed,
    })
}

/// Test states for realization checks.
///
/// Qubits get `n` pure states spread over the Bloch sphere on a Fibonacci
/// lattice. Other dimensions get seeded random states, alternating pure and mixed.
pub fn default_state_grid(dim: usize, n: usize) -> Vec<QuantumState> {
    if dim == 2 {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        return (0..n)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                let theta = z.clamp(-1.0, 1.0).acos();
                let phi = golden * i as f64;
                let v = vec![
                    Complex64::new((theta / 2.0).cos(), 0.0),
                    Complex64::from_polar((theta / 2.0).sin(), phi),
                ];
                QuantumState::Pure(vector::normalized(&v))
            })
            .collect();
    }
    let mut r = rng::stream(0x5eed, dim as u64);
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                QuantumState::Pure(random::unit_vector(&mut r, dim))
            } else {
                QuantumState::Mixed(random::density(&mut r, dim))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{min_eigenvalue, pauli};

    const SIGMA_Z_MAP: [(f64, f64); 2] = [(0.0, 1.0), (1.0, -1.0)];

    fn sz() -> HermitianObservable {
        HermitianObservable::new(pauli::z()).unwrap()
    }

    /// Brute-force reference for the CNOT model: the composite vector is
    /// `a|00> + b|11>`, so `q(0) = |a|^2`, `q(1) = |b|^2`.
    #[test]
    fn cnot_probabilities_match_amplitudes() {
        let m = IndirectMeasurementModel::cnot_probe();
        let (a, b) = (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let psi = QuantumState::pure(vec![a, b]).unwrap();
        assert!((outcome_probability(&m, &psi, 0.0).unwrap() - 0.36).abs() < 1e-12);
        assert!((outcome_probability(&m, &psi, 1.0).unwrap() - 0.64).abs() < 1e-12);
        let post = instrument_apply(&m, &psi, 0.0).unwrap();
        assert!(post.approx_eq(&ComplexMatrix::real_diagonal(&[0.36, 0.0]), 1e-12));
        let mixed = QuantumState::maximally_mixed(2);
        for x in [0.0, 1.0] {
            assert!((outcome_probability(&m, &mixed, x).unwrap() - 0.5).abs() < 1e-12);
        }
        assert!(matches!(outcome_probability(&m, &psi, 2.0), Err(Error::OutcomeNotInSpectrum(_))));
        assert!(matches!(
            outcome_probability(&m, &QuantumState::basis(3, 0), 0.0),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn uncoupled_model_leaves_system_alone() {
        let m = IndirectMeasurementModel::no_coupling();
        let psi = QuantumState::plus();
        assert_eq!(outcome_probability(&m, &psi, 0.0).unwrap(), 1.0);
        assert!(instrument_apply(&m, &psi, 0.0).unwrap().approx_eq(&psi.density(), 1e-14));
        assert!(instrument_apply(&m, &psi, 1.0).unwrap().norm_max() < 1e-14);
    }

    #[test]
    fn cnot_realizes_luders() {
        let grid = default_state_grid(2, 20);
        let rep = verify_projective_realization(&sz(), &IndirectMeasurementModel::cnot_probe(), &SIGMA_Z_MAP, &grid).unwrap();
        assert!(rep.passed, "{}", rep.to_table());
        assert_eq!(rep.grid_size, 20);
    }

    #[test]
    fn uncoupled_and_swap_models_fail() {
        let grid = default_state_grid(2, 20);
        let rep = verify_projective_realization(&sz(), &IndirectMeasurementModel::no_coupling(), &SIGMA_Z_MAP, &grid).unwrap();
        assert!(!rep.passed);
        assert!(rep.rows.iter().any(|r| r.max_probability_deviation > 0.1));

        let rep = verify_projective_realization(&sz(), &IndirectMeasurementModel::swap_probe(), &SIGMA_Z_MAP, &grid).unwrap();
        assert!(!rep.passed);
        // SWAP hands the system state to the meter, so statistics agree while
        // the system is left in I/2 instead of an eigenstate.
        for r in &rep.rows {
            assert!(r.max_probability_deviation < 1e-12);
            assert!((r.max_trace_distance - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn bijection_is_required() {
        let grid = default_state_grid(2, 4);
        let m = IndirectMeasurementModel::cnot_probe();
        for bad in [&[][..], &[(0.0, 1.0)][..], &[(0.0, 1.0), (0.0, -1.0)][..], &[(0.0, 1.0), (5.0, -1.0)][..]] {
            assert!(matches!(
                verify_projective_realization(&sz(), &m, bad, &grid),
                Err(Error::OutcomeMismatch(_))
            ));
        }
    }

    #[test]
    fn rejects_non_unitary_coupling() {
        let u = ComplexMatrix::real_diagonal(&[1.0, 1.0, 1.0, 0.5]);
        let meter = HermitianObservable::new(pauli::z()).unwrap();
        assert!(matches!(
            IndirectMeasurementModel::new(QuantumState::basis(2, 0), u, meter),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let m = IndirectMeasurementModel::cnot_probe();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"probe_dim\":2"));
        let back: IndirectMeasurementModel = serde_json::from_str(&text).unwrap();
        assert!(back.coupling().approx_eq(m.coupling(), 0.0));
    }

    #[test]
    fn larger_grids_are_reproducible() {
        let a = default_state_grid(3, 6);
        let b = default_state_grid(3, 6);
        assert_eq!(a, b);
        assert!(a[1].vector().is_none());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn instrument_is_a_channel(seed in any::<u64>(), ds in 1usize..=4, dk in 1usize..=4) {
                let mut r = rng::stream(seed, 0);
                let m = IndirectMeasurementModel::random(&mut r, ds, dk);
                let rho = QuantumState::mixed(random::density(&mut r, ds)).unwrap();
                let mut total_p = 0.0;
                for &x in m.meter().outcomes() {
                    let p = outcome_probability(&m, &rho, x).unwrap();
                    let post = instrument_apply(&m, &rho, x).unwrap();
                    prop_assert!((post.trace().re - p).abs() <= 1e-10);
                    prop_assert!(min_eigenvalue(&post) >= -1e-10);
                    total_p += p;
                }
                prop_assert!((total_p - 1.0).abs() <= 1e-10);
                let out = nonselective_apply(&m, &rho).unwrap();
                prop_assert!((out.trace().re - 1.0).abs() <= 1e-10);
                prop_assert!(min_eigenvalue(&out) >= -1e-10);
            }
        }
    }
}
