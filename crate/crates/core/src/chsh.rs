//! CHSH test bench: Bell operator, its optimal states, and random sweeps
//! relating local incompatibility to violation.
//!
//! The CHSH statistic is `<A1 B1> + <A1 B2> + <A2 B1> - <A2 B2>`, i.e. the
//! expectation of `A1⊗(B1+B2) + A2⊗(B1-B2)`. Alice's factor comes first in
//! every tensor product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{commutator, hermitian_eigen, tensor_product, ComplexMatrix};
use crate::par::{self, Execution};
use crate::quantum::{HermitianObservable, QuantumState};
use crate::random;
use crate::rng;

/// Classical CHSH bound.
pub const CLASSICAL_BOUND: f64 = 2.0;

/// Margin above the classical bound required to call a value a violation.
pub const VIOLATION_MARGIN: f64 = 1e-8;

/// Slack allowed on the `[-1, 1]` spectral bound.
pub const SPECTRUM_SLACK: f64 = 1e-10;

/// Alice's pair `(a1, a2)` and Bob's pair `(b1, b2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SettingJson", into = "SettingJson")]
pub struct CHSHSetting {
    a1: HermitianObservable,
    a2: HermitianObservable,
    b1: HermitianObservable,
    b2: HermitianObservable,
}

#[derive(Serialize, Deserialize)]
struct SettingJson {
    a1: ComplexMatrix,
    a2: ComplexMatrix,
    b1: ComplexMatrix,
    b2: ComplexMatrix,
}

impl TryFrom<SettingJson> for CHSHSetting {
    type Error = Error;
    fn try_from(j: SettingJson) -> Result<Self> {
        CHSHSetting::from_matrices(j.a1, j.a2, j.b1, j.b2)
    }
}

impl From<CHSHSetting> for SettingJson {
    fn from(s: CHSHSetting) -> Self {
        SettingJson {
            a1: s.a1.matrix().clone(),
            a2: s.a2.matrix().clone(),
            b1: s.b1.matrix().clone(),
            b2: s.b2.matrix().clone(),
        }
    }
}

fn check_bounded(obs: &HermitianObservable) -> Result<()> {
    for &x in obs.outcomes() {
        if x.abs() > 1.0 + SPECTRUM_SLACK {
            return Err(Error::UnboundedObservable(x));
        }
    }
    Ok(())
}

impl CHSHSetting {
    pub fn new(
        a1: HermitianObservable,
        a2: HermitianObservable,
        b1: HermitianObservable,
        b2: HermitianObservable,
    ) -> Result<Self> {
        for (x, y) in [(&a1, &a2), (&b1, &b2)] {
            if x.dim() != y.dim() {
                return Err(Error::DimMismatch {
                    expected: x.dim(),
                    found: y.dim(),
                });
            }
        }
        for obs in [&a1, &a2, &b1, &b2] {
            check_bounded(obs)?;
        }
        Ok(CHSHSetting { a1, a2, b1, b2 })
    }

    pub fn from_matrices(a1: ComplexMatrix, a2: ComplexMatrix, b1: ComplexMatrix, b2: ComplexMatrix) -> Result<Self> {
        Self::new(
            HermitianObservable::new(a1)?,
            HermitianObservable::new(a2)?,
            HermitianObservable::new(b1)?,
            HermitianObservable::new(b2)?,
        )
    }

    /// `A1 = σz`, `A2 = σx`, `B1 = -(σz+σx)/√2`, `B2 = (σx-σz)/√2`.
    /// Reaches `2√2` on the singlet.
    pub fn tsirelson() -> Self {
        use crate::linalg::pauli;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (z, x) = (pauli::z(), pauli::x());
        let b1 = (&z + &x).scale_real(-h);
        let b2 = (&x - &z).scale_real(h);
        Self::from_matrices(z, x, b1, b2).expect("Pauli settings are valid")
    }

    pub fn a1(&self) -> &HermitianObservable {
        &self.a1
    }
    pub fn a2(&self) -> &HermitianObservable {
        &self.a2
    }
    pub fn b1(&self) -> &HermitianObservable {
        &self.b1
    }
    pub fn b2(&self) -> &HermitianObservable {
        &self.b2
    }

    /// `(dim_alice, dim_bob)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.a1.dim(), self.b1.dim())
    }

    /// `A1⊗(B1+B2) + A2⊗(B1-B2)`.
    pub fn bell_operator(&self) -> ComplexMatrix {
        let (b1, b2) = (self.b1.matrix(), self.b2.matrix());
        let sum = b1 + b2;
        let diff = b1 - b2;
        &tensor_product(self.a1.matrix(), &sum) + &tensor_product(self.a2.matrix(), &diff)
    }

    /// Same setting with `A1 <-> A2` and/or `B1 <-> B2` swapped. Together with
    /// an overall sign these relabelings move the minus sign to any correlator.
    pub fn relabeled(&self, swap_alice: bool, swap_bob: bool) -> Self {
        let (a1, a2) = if swap_alice { (&self.a2, &self.a1) } else { (&self.a1, &self.a2) };
        let (b1, b2) = if swap_bob { (&self.b2, &self.b1) } else { (&self.b1, &self.b2) };
        CHSHSetting {
            a1: a1.clone(),
            a2: a2.clone(),
            b1: b1.clone(),
            b2: b2.clone(),
        }
    }

    /// `(max |[A1,A2]|, max |[B1,B2]|)`.
    pub fn commutator_norms(&self) -> (f64, f64) {
        let a = commutator(self.a1.matrix(), self.a2.matrix()).expect("dims checked").norm_max();
        let b = commutator(self.b1.matrix(), self.b2.matrix()).expect("dims checked").norm_max();
        (a, b)
    }

    /// `1e-8 · max_i |A_i|` over all four observables.
    pub fn default_tolerance(&self) -> f64 {
        let scale = [&self.a1, &self.a2, &self.b1, &self.b2]
            .iter()
            .map(|o| o.matrix().norm_max())
            .fold(0.0, f64::max);
        1e-8 * scale
    }
}

/// Expectation of the Bell operator in `state`.
pub fn chsh_value(state: &QuantumState, setting: &CHSHSetting) -> Result<f64> {
    let (da, db) = setting.dims();
    if state.dim() != da * db {
        return Err(Error::DimMismatch {
            expected: da * db,
            found: state.dim(),
        });
    }
    let v = state.expectation(&setting.bell_operator())?;
    if v.im.abs() > 1e-10 {
        return Err(Error::NumericalIntegrity(format!("CHSH value has imaginary part {:e}", v.im)));
    }
    Ok(v.re)
}

/// Maximal CHSH magnitude over all states.
#[derive(Debug, Clone, Serialize)]
pub struct CHSHResult {
    /// Largest eigenvalue magnitude of the Bell operator.
    pub bell_operator_max: f64,
    /// The eigenvalue itself; equals `chsh_value(optimal_state)`.
    pub bell_eigenvalue: f64,
    pub optimal_state: QuantumState,
    pub violated: bool,
    pub locally_incompatible: bool,
}

/// Largest-magnitude eigenpair of the Bell operator.
pub fn max_chsh(setting: &CHSHSetting) -> CHSHResult {
    let (values, vectors) = hermitian_eigen(&setting.bell_operator());
    let last = values.len() - 1;
    let k = if values[0].abs() > values[last].abs() { 0 } else { last };
    let bell_eigenvalue = values[k];
    let bell_operator_max = bell_eigenvalue.abs();
    let optimal_state = QuantumState::Pure(vectors.column(k));
    CHSHResult {
        bell_operator_max,
        bell_eigenvalue,
        optimal_state,
        violated: bell_operator_max > CLASSICAL_BOUND + VIOLATION_MARGIN,
        locally_incompatible: local_incompatibility(setting, setting.default_tolerance()),
    }
}

/// Both local pairs fail to commute (each commutator norm exceeds `tol`).
pub fn local_incompatibility(setting: &CHSHSetting, tol: f64) -> bool {
    let (a, b) = setting.commutator_norms();
    a > tol && b > tol
}

/// Which local pairs a sweep forces to commute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Four independent random observables.
    Unrestricted,
    /// `A2` shares `A1`'s eigenbasis.
    CompatibleAlice,
    /// `B2` shares `B1`'s eigenbasis.
    CompatibleBob,
    /// One side, chosen at random per trial, is made commuting.
    CompatibleEither,
}

/// Random setting for one trial; each trial owns stream `trial` of `seed`.
pub fn random_setting(dims: (usize, usize), seed: u64, trial: u64, mode: SweepMode) -> CHSHSetting {
    use rand::Rng;
    let mut r = rng::stream(seed, trial);
    let (da, db) = dims;
    let (alice_commutes, bob_commutes) = match mode {
        SweepMode::Unrestricted => (false, false),
        SweepMode::CompatibleAlice => (true, false),
        SweepMode::CompatibleBob => (false, true),
        SweepMode::CompatibleEither => {
            let alice = r.random_bool(0.5);
            (alice, !alice)
        }
    };
    let a1 = random::bounded_observable(&mut r, da);
    let a2 = if alice_commutes {
        random::commuting_partner(&mut r, &a1)
    } else {
        random::bounded_observable(&mut r, da)
    };
    let b1 = random::bounded_observable(&mut r, db);
    let b2 = if bob_commutes {
        random::commuting_partner(&mut r, &b1)
    } else {
        random::bounded_observable(&mut r, db)
    };
    CHSHSetting::from_matrices(a1, a2, b1, b2).expect("random settings are bounded Hermitian")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTrial {
    pub trial: usize,
    pub commutator_norm_a: f64,
    pub commutator_norm_b: f64,
    pub bell_max: f64,
    pub violated: bool,
    pub locally_incompatible: bool,
}

/// Outcome of a random CHSH sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub dims: (usize, usize),
    pub seed: u64,
    pub mode: SweepMode,
    pub trials: Vec<SweepTrial>,
    /// `contingency[incompatible as usize][violated as usize]`.
    pub contingency: [[usize; 2]; 2],
    /// Violations among incompatible settings; `None` when there were none.
    pub sufficiency_rate: Option<f64>,
    /// Set when some incompatible setting showed no violation.
    pub sufficiency_flagged: bool,
    /// Incompatible settings without a violating state.
    pub counterexample_candidates: Vec<usize>,
    /// Trials whose smaller commutator norm lies within a factor 100 of the tolerance.
    pub near_threshold: Vec<usize>,
}

impl SweepReport {
    /// No compatible setting violated the classical bound.
    pub fn necessity_holds(&self) -> bool {
        self.contingency[0][1] == 0
    }

    pub fn compatible_violations(&self) -> usize {
        self.contingency[0][1]
    }

    /// CSV with header `trial,commutator_norm_A,commutator_norm_B,bell_max,violated`.
    pub fn to_csv(&self) -> String {
        use crate::format::sig;
        let mut out = String::from("trial,commutator_norm_A,commutator_norm_B,bell_max,violated\n");
        for t in &self.trials {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t.trial,
                sig(t.commutator_norm_a),
                sig(t.commutator_norm_b),
                sig(t.bell_max),
                t.violated
            ));
        }
        out
    }
}

pub fn incompatibility_sweep(n_trials: usize, dims: (usize, usize), seed: u64, mode: SweepMode) -> Result<SweepReport> {
    incompatibility_sweep_with(n_trials, dims, seed, mode, Execution::default())
}

pub fn incompatibility_sweep_with(
    n_trials: usize,
    dims: (usize, usize),
    seed: u64,
    mode: SweepMode,
    exec: Execution,
) -> Result<SweepReport> {
    if dims.0 < 2 || dims.1 < 2 {
        return Err(Error::InvalidArgument(format!(
            "local dimensions must be at least 2, got {}x{}",
            dims.0, dims.1
        )));
    }
    let evaluated = par::map_indexed(n_trials, exec, |trial| {
        let setting = random_setting(dims, seed, trial as u64, mode);
        let (na, nb) = setting.commutator_norms();
        let tol = setting.default_tolerance();
        let result = max_chsh(&setting);
        let near = {
            let m = na.min(nb);
            m > tol / 100.0 && m <= tol * 100.0
        };
        let row = SweepTrial {
            trial,
            commutator_norm_a: na,
            commutator_norm_b: nb,
            bell_max: result.bell_operator_max,
            violated: result.violated,
            locally_incompatible: result.locally_incompatible,
        };
        (row, near)
    });

    let mut contingency = [[0usize; 2]; 2];
    let mut counterexample_candidates = Vec::new();
    let mut near_threshold = Vec::new();
    let mut trials = Vec::with_capacity(n_trials);
    for (row, near) in evaluated {
        contingency[row.locally_incompatible as usize][row.violated as usize] += 1;
        if row.locally_incompatible && !row.violated {
            counterexample_candidates.push(row.trial);
        }
        if near {
            near_threshold.push(row.trial);
        }
        trials.push(row);
    }
    let incompatible = contingency[1][0] + contingency[1][1];
    let sufficiency_rate = (incompatible > 0).then(|| contingency[1][1] as f64 / incompatible as f64);
    Ok(SweepReport {
        dims,
        seed,
        mode,
        trials,
        contingency,
        sufficiency_rate,
        sufficiency_flagged: !counterexample_candidates.is_empty(),
        counterexample_candidates,
        near_threshold,
    })
}
