//! Markovian open-system dynamics `dρ/dt = -i[H, ρ] + L̂ρ`.
//!
//! Density operators are vectorized row-major, `vec(ρ)[i·d + j] = ρ_ij`, so
//! `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`. Trajectories are integrated with
//! fixed-step RK4 directly on matrices; the vectorized generator is only
//! built for steady-state extraction and exact reference solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, matrix_exp, min_eigenvalue, null_space, orthonormalize, pauli, solve_linear, tensor_product,
    trace_distance, vector, Complex64, ComplexMatrix,
};
use crate::quantum::{HermitianObservable, QuantumState};

/// Hermiticity tolerance on the Hamiltonian.
pub const HAMILTONIAN_TOL: f64 = 1e-10;
/// Allowed drift of `Tr ρ(t)` from 1.
pub const TRACE_TOL: f64 = 1e-8;
/// Most negative eigenvalue tolerated along a trajectory.
pub const POSITIVITY_TOL: f64 = 1e-7;
/// Off-diagonal bound for "diagonal in the measured basis".
pub const DIAGONAL_TOL: f64 = 1e-8;
/// Bound on `‖G(ρ_A)‖` for an extracted steady state.
pub const STATIONARITY_TOL: f64 = 1e-8;
/// Allowed trace distance between the null-space state and the long-time limit.
pub const CROSS_CHECK_TOL: f64 = 1e-6;

/// A jump operator `L` with rate `γ ≥ 0`, contributing `γ (L ρ L^H - ½{L^H L, ρ})`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpOperator {
    pub operator: ComplexMatrix,
    pub rate: f64,
}

#[derive(Debug, Clone)]
enum Dissipator {
    Jumps(Vec<PreparedJump>),
    Superoperator(ComplexMatrix),
}

#[derive(Debug, Clone)]
struct PreparedJump {
    op: ComplexMatrix,
    op_adj: ComplexMatrix,
    /// `L^H L`.
    number: ComplexMatrix,
    rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct LindbladModel {
    hamiltonian: ComplexMatrix,
    dissipator: Dissipator,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    hamiltonian: ComplexMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    jumps: Option<Vec<JumpOperator>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    superoperator: Option<ComplexMatrix>,
}

impl TryFrom<ModelJson> for LindbladModel {
    type Error = Error;
    fn try_from(j: ModelJson) -> Result<Self> {
        match (j.jumps, j.superoperator) {
            (Some(_), Some(_)) => Err(Error::ConfigInvalid {
                field: "superoperator".into(),
                reason: "give either `jumps` or `superoperator`, not both".into(),
            }),
            (_, Some(s)) => LindbladModel::with_superoperator(j.hamiltonian, s),
            (jumps, None) => LindbladModel::with_jumps(j.hamiltonian, &jumps.unwrap_or_default()),
        }
    }
}

impl From<LindbladModel> for ModelJson {
    fn from(m: LindbladModel) -> Self {
        match m.dissipator {
            Dissipator::Jumps(js) => ModelJson {
                hamiltonian: m.hamiltonian,
                jumps: Some(
                    js.into_iter()
                        .map(|j| JumpOperator {
                            operator: j.op,
                            rate: j.rate,
                        })
                        .collect(),
                ),
                superoperator: None,
            },
            Dissipator::Superoperator(s) => ModelJson {
                hamiltonian: m.hamiltonian,
                jumps: None,
                superoperator: Some(s),
            },
        }
    }
}

fn check_hamiltonian(h: &ComplexMatrix) -> Result<()> {
    h.check_finite()?;
    let dev = h.hermitian_deviation();
    if dev > HAMILTONIAN_TOL {
        return Err(Error::NotHermitian {
            deviation: dev,
            tol: HAMILTONIAN_TOL,
        });
    }
    Ok(())
}

impl LindbladModel {
    pub fn with_jumps(hamiltonian: ComplexMatrix, jumps: &[JumpOperator]) -> Result<Self> {
        check_hamiltonian(&hamiltonian)?;
        let d = hamiltonian.dim();
        let mut prepared = Vec::with_capacity(jumps.len());
        for (k, j) in jumps.iter().enumerate() {
            j.operator.check_finite()?;
            if j.operator.dim() != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    found: j.operator.dim(),
                });
            }
            if !(j.rate.is_finite() && j.rate >= 0.0) {
                return Err(Error::ConfigInvalid {
                    field: format!("jumps[{k}].rate"),
                    reason: format!("rate must be finite and non-negative, got {}", j.rate),
                });
            }
            let op_adj = j.operator.adjoint();
            prepared.push(PreparedJump {
                number: &op_adj * &j.operator,
                op: j.operator.clone(),
                op_adj,
                rate: j.rate,
            });
        }
        Ok(LindbladModel {
            hamiltonian: hamiltonian.hermitian_part(),
            dissipator: Dissipator::Jumps(prepared),
        })
    }

    /// Raw `d² × d²` dissipator acting on row-major vectorized operators.
    /// It must annihilate the trace: `Tr(L̂ρ) = 0` for every `ρ`.
    pub fn with_superoperator(hamiltonian: ComplexMatrix, superoperator: ComplexMatrix) -> Result<Self> {
        check_hamiltonian(&hamiltonian)?;
        superoperator.check_finite()?;
        let d = hamiltonian.dim();
        if superoperator.dim() != d * d {
            return Err(Error::DimMismatch {
                expected: d * d,
                found: superoperator.dim(),
            });
        }
        let defect = (0..d * d)
            .map(|c| (0..d).map(|i| superoperator[(i * d + i, c)]).sum::<Complex64>().norm())
            .fold(0.0, f64::max);
        if defect > 1e-10 {
            return Err(Error::NotTraceAnnihilating(defect));
        }
        Ok(LindbladModel {
            hamiltonian: hamiltonian.hermitian_part(),
            dissipator: Dissipator::Superoperator(superoperator),
        })
    }

    /// Qubit dephasing `L̂ρ = γ(σz ρ σz - ρ)`, `H = 0`.
    pub fn dephasing(gamma: f64) -> Result<Self> {
        Self::with_jumps(
            ComplexMatrix::zeros(2),
            &[JumpOperator {
                operator: pauli::z(),
                rate: gamma,
            }],
        )
    }

    /// Qubit decay to `|0>` with jump operator `|0><1|`, `H = 0`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        Self::with_jumps(
            ComplexMatrix::zeros(2),
            &[JumpOperator {
                operator: pauli::lowering(),
                rate: gamma,
            }],
        )
    }

    /// Closed-system evolution.
    pub fn unitary(hamiltonian: ComplexMatrix) -> Result<Self> {
        Self::with_jumps(hamiltonian, &[])
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    /// `G(ρ) = -i[H, ρ] + L̂ρ`.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let minus_i = Complex64::new(0.0, -1.0);
        let h = &self.hamiltonian;
        let mut out = (&(h * rho) - &(rho * h)).scale(minus_i);
        match &self.dissipator {
            Dissipator::Jumps(jumps) => {
                for j in jumps {
                    if j.rate == 0.0 {
                        continue;
                    }
                    let sandwich = &(&j.op * rho) * &j.op_adj;
                    let anti = &(&j.number * rho) + &(rho * &j.number);
                    out = &out + &(&sandwich - &anti.scale_real(0.5)).scale_real(j.rate);
                }
            }
            Dissipator::Superoperator(s) => {
                let v = s.mul_vec(rho.as_slice());
                let d = self.dim();
                out = &out + &ComplexMatrix::from_fn(d, |i, k| v[i * d + k]);
            }
        }
        out
    }

    /// Full generator as a `d² × d²` matrix on row-major vectorized operators.
    pub fn superoperator(&self) -> ComplexMatrix {
        let d = self.dim();
        let id = ComplexMatrix::identity(d);
        let minus_i = Complex64::new(0.0, -1.0);
        let h = &self.hamiltonian;
        let mut g = (&tensor_product(h, &id) - &tensor_product(&id, &h.transpose())).scale(minus_i);
        match &self.dissipator {
            Dissipator::Jumps(jumps) => {
                for j in jumps {
                    if j.rate == 0.0 {
                        continue;
                    }
                    let sandwich = tensor_product(&j.op, &j.op.conj());
                    let left = tensor_product(&j.number, &id);
                    let right = tensor_product(&id, &j.number.transpose());
                    let term = &sandwich - &(&left + &right).scale_real(0.5);
                    g = &g + &term.scale_real(j.rate);
                }
            }
            Dissipator::Superoperator(s) => g = &g + s,
        }
        g
    }

    /// Upper bound on the generator's norm, used to pick stable step sizes.
    pub fn norm_bound(&self) -> f64 {
        let h = 2.0 * self.hamiltonian.norm_frobenius();
        let dissipative = match &self.dissipator {
            Dissipator::Jumps(jumps) => jumps.iter().map(|j| 2.0 * j.rate * j.op.norm_frobenius().powi(2)).sum(),
            Dissipator::Superoperator(s) => s.norm_frobenius(),
        };
        h + dissipative
    }
}

fn rk4_step(model: &LindbladModel, rho: &ComplexMatrix, h: f64) -> ComplexMatrix {
    let k1 = model.apply(rho);
    let k2 = model.apply(&(rho + &k1.scale_real(h / 2.0)));
    let k3 = model.apply(&(rho + &k2.scale_real(h / 2.0)));
    let k4 = model.apply(&(rho + &k3.scale_real(h)));
    let incr = &(&(&k1 + &k2.scale_real(2.0)) + &k3.scale_real(2.0)) + &k4;
    rho + &incr.scale_real(h / 6.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub rho: ComplexMatrix,
}

fn check_point(t: f64, rho: &ComplexMatrix) -> Result<()> {
    rho.check_finite()?;
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::NumericalIntegrity(format!("trace drifted to {tr} at t = {t}")));
    }
    let min = min_eigenvalue(rho);
    if min < -POSITIVITY_TOL {
        return Err(Error::StepTooLarge { t, min_eigenvalue: min });
    }
    Ok(())
}

fn check_initial(model: &LindbladModel, rho0: &QuantumState) -> Result<()> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    Ok(())
}

/// RK4 trajectory from `rho0` to `t_final`, including both endpoints.
///
/// The step is `t_final / n` with `n = round(t_final / dt)`, so the last
/// point lands exactly on `t_final`.
pub fn integrate(model: &LindbladModel, rho0: &QuantumState, t_final: f64, dt: f64) -> Result<Vec<TrajectoryPoint>> {
    check_initial(model, rho0)?;
    if !(t_final > 0.0 && dt > 0.0 && dt <= t_final) || !t_final.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need 0 < dt <= t_final, got dt = {dt}, t_final = {t_final}"
        )));
    }
    let n = (t_final / dt).round().max(1.0) as usize;
    let h = t_final / n as f64;
    let mut rho = rho0.density();
    let mut out = Vec::with_capacity(n + 1);
    out.push(TrajectoryPoint { t: 0.0, rho: rho.clone() });
    for step in 1..=n {
        rho = rk4_step(model, &rho, h);
        let t = step as f64 * h;
        check_point(t, &rho)?;
        out.push(TrajectoryPoint { t, rho: rho.clone() });
    }
    Ok(out)
}

/// `exp(G t) vec(ρ0)`, for reference solutions.
pub fn exact_evolution(model: &LindbladModel, rho0: &QuantumState, t: f64) -> Result<ComplexMatrix> {
    check_initial(model, rho0)?;
    let d = model.dim();
    let prop = matrix_exp(&model.superoperator().scale_real(t));
    let v = prop.mul_vec(rho0.density().as_slice());
    Ok(ComplexMatrix::from_fn(d, |i, k| v[i * d + k]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Uniqueness {
    Unique,
    /// The stationary states form a family of this dimension; the reported
    /// state is the limit reached from the given initial state.
    NonUnique { null_dimension: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyStateReport {
    pub steady_state: QuantumState,
    /// Frobenius norm of `G(ρ_A)`.
    pub residual: f64,
    pub uniqueness: Uniqueness,
    pub diagonal_in_a_basis: bool,
    /// Largest `|E(x) ρ_A E(y)|` entry over outcome pairs `x ≠ y`.
    pub max_off_diagonal: f64,
    /// `(x, λ_x)` with `λ_x = Tr(E(x) ρ_A)`.
    pub eigen_populations: Vec<(f64, f64)>,
    /// Trace distance to the long-time integration limit, when that settled.
    pub cross_check_distance: Option<f64>,
    pub convergence_rate: Option<f64>,
    pub fit_quality: Option<f64>,
}

fn reshape(v: &[Complex64], d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, |i, k| v[i * d + k])
}

fn normalize_state(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let tr = m.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::NumericalIntegrity("stationary operator has zero trace".into()));
    }
    Ok(m.scale(1.0 / tr).hermitian_part())
}

/// Stationary state reached from `rho0`.
///
/// The kernel of the generator is computed exactly. With a one-dimensional
/// kernel its trace-normalized element is returned. Otherwise the state is
/// the spectral projection of `rho0` onto the kernel along the range,
/// `R (Lᴴ R)⁻¹ Lᴴ vec(ρ0)` with `R`, `L` the right and left kernel bases,
/// which is the long-time limit whenever that exists.
pub fn find_steady_state(model: &LindbladModel, rho0: &QuantumState) -> Result<(ComplexMatrix, Uniqueness)> {
    check_initial(model, rho0)?;
    let d = model.dim();
    let g = model.superoperator();
    let right = orthonormalize(&null_space(&g, 1e-10), 1e-8);
    match right.len() {
        0 => Err(Error::NumericalIntegrity("generator has no zero eigenvalue".into())),
        1 => Ok((normalize_state(&reshape(&right[0], d))?, Uniqueness::Unique)),
        k => {
            let left = orthonormalize(&null_space(&g.adjoint(), 1e-10), 1e-8);
            if left.len() != k {
                return Err(Error::NumericalIntegrity(format!(
                    "left and right kernels differ in dimension ({} vs {k})",
                    left.len()
                )));
            }
            let overlap = ComplexMatrix::from_fn(k, |a, b| vector::inner(&left[a], &right[b]));
            let v0 = rho0.density();
            let rhs: Vec<Complex64> = left.iter().map(|l| vector::inner(l, v0.as_slice())).collect();
            let coeffs = solve_linear(&overlap, &rhs)
                .ok_or_else(|| Error::NumericalIntegrity("zero eigenvalue of the generator is not semisimple".into()))?;
            let mut v = vec![Complex64::new(0.0, 0.0); d * d];
            for (c, r) in coeffs.iter().zip(&right) {
                for (vi, ri) in v.iter_mut().zip(r) {
                    *vi += c * ri;
                }
            }
            Ok((normalize_state(&reshape(&v, d))?, Uniqueness::NonUnique { null_dimension: k }))
        }
    }
}

/// Integrates from `rho0` until `‖G(ρ)‖_F ≤ 1e-12` or `max_steps` RK4
/// steps of size `0.1 / norm_bound` have been taken. The small step keeps
/// RK4's artificial damping of oscillatory modes negligible, so purely
/// oscillating dynamics is reported as unsettled. Returns the final state
/// if it settled.
pub fn long_time_limit(model: &LindbladModel, rho0: &QuantumState, max_steps: usize) -> Result<Option<ComplexMatrix>> {
    check_initial(model, rho0)?;
    let bound = model.norm_bound();
    let mut rho = rho0.density();
    if bound == 0.0 {
        return Ok(Some(rho));
    }
    let h = 0.1 / bound;
    for step in 0..max_steps {
        if step % 8 == 0 && model.apply(&rho).norm_frobenius() <= 1e-12 {
            return Ok(Some(rho));
        }
        rho = rk4_step(model, &rho, h);
    }
    Ok((model.apply(&rho).norm_frobenius() <= 1e-12).then_some(rho))
}

/// Options for [`convergence_rate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Points with distance above this fraction of the initial distance are transient.
    pub transient_fraction: f64,
    /// Fraction of the post-transient trajectory, taken from the end, used for the fit.
    pub window_fraction: f64,
    /// Integration step; defaults to `min(0.01, 1/norm_bound)`.
    pub dt: Option<f64>,
    /// Integration stops here even if the distance has not decayed.
    pub max_time: f64,
    /// Integration stops once the distance falls below this multiple of the initial distance.
    pub stop_ratio: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            transient_fraction: 0.5,
            window_fraction: 0.6,
            dt: None,
            max_time: 100.0,
            stop_ratio: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// Slope of `ln ‖ρ(t) - ρ_A‖_F` against `t`.
    pub rate: f64,
    /// Coefficient of determination of the linear fit.
    pub fit_quality: f64,
    pub points_used: usize,
    pub window: (f64, f64),
}

/// Exponential approach rate to the steady state reached from `rho0`.
pub fn convergence_rate(model: &LindbladModel, rho0: &QuantumState) -> Result<RateFit> {
    let (target, _) = find_steady_state(model, rho0)?;
    convergence_rate_with(model, rho0, &target, FitOptions::default())
}

pub fn convergence_rate_with(
    model: &LindbladModel,
    rho0: &QuantumState,
    target: &ComplexMatrix,
    opts: FitOptions,
) -> Result<RateFit> {
    check_initial(model, rho0)?;
    let bound = model.norm_bound();
    let h = opts
        .dt
        .unwrap_or_else(|| if bound > 0.0 { (1.0 / bound).min(0.01) } else { 0.01 });
    let mut rho = rho0.density();
    let d0 = (&rho - target).norm_frobenius();
    if d0 <= 1e-12 {
        return Err(Error::NoDecay);
    }
    let mut samples = vec![(0.0, d0)];
    let steps = (opts.max_time / h).ceil() as usize;
    for step in 1..=steps {
        rho = rk4_step(model, &rho, h);
        let dist = (&rho - target).norm_frobenius();
        samples.push((step as f64 * h, dist));
        if dist < opts.stop_ratio * d0 {
            break;
        }
    }
    let after_transient: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .skip_while(|&(_, dist)| dist > opts.transient_fraction * d0)
        .collect();
    let keep = (after_transient.len() as f64 * opts.window_fraction).round() as usize;
    let window = &after_transient[after_transient.len() - keep..];
    if window.len() < 3 || window.windows(2).any(|w| w[1].1.partial_cmp(&w[0].1) != Some(std::cmp::Ordering::Less)) || window.iter().any(|&(_, d)| d <= 0.0) {
        return Err(Error::NoDecay);
    }
    let n = window.len() as f64;
    let (mean_t, mean_y) = window
        .iter()
        .fold((0.0, 0.0), |(a, b), &(t, dist)| (a + t / n, b + dist.ln() / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(t, dist) in window {
        let (dx, dy) = (t - mean_t, dist.ln() - mean_y);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let rate = sxy / sxx;
    let ss_res: f64 = window
        .iter()
        .map(|&(t, dist)| (dist.ln() - mean_y - rate * (t - mean_t)).powi(2))
        .sum();
    let fit_quality = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(RateFit {
        rate,
        fit_quality,
        points_used: window.len(),
        window: (window[0].0, window[window.len() - 1].0),
    })
}

/// Stationary state reached from `rho0`, read out in the eigenbasis of `obs`.
pub fn steady_state(model: &LindbladModel, obs: &HermitianObservable, rho0: &QuantumState) -> Result<SteadyStateReport> {
    if obs.dim() != model.dim() {
        return Err(Error::DimMismatch {
            expected: model.dim(),
            found: obs.dim(),
        });
    }
    let (rho_a, uniqueness) = find_steady_state(model, rho0)?;
    let residual = model.apply(&rho_a).norm_frobenius();
    if residual > STATIONARITY_TOL {
        return Err(Error::NumericalIntegrity(format!("steady-state residual {residual:e}")));
    }
    let cross_check_distance = match long_time_limit(model, rho0, 200_000)? {
        Some(limit) => {
            let dist = trace_distance(&limit.hermitian_part(), &rho_a);
            if dist > CROSS_CHECK_TOL {
                return Err(Error::NumericalIntegrity(format!(
                    "kernel state and long-time limit differ by trace distance {dist:e}"
                )));
            }
            Some(dist)
        }
        None => None,
    };

    let projectors = obs.spectrum().projectors();
    let mut max_off_diagonal: f64 = 0.0;
    for (x, ex) in projectors.iter().enumerate() {
        for (y, ey) in projectors.iter().enumerate() {
            if x != y {
                max_off_diagonal = max_off_diagonal.max((&(ex * &rho_a) * ey).norm_max());
            }
        }
    }
    let eigen_populations = obs
        .outcomes()
        .iter()
        .zip(projectors)
        .map(|(&x, e)| (x, rho_a.trace_product(e).re))
        .collect();
    let (convergence_rate, fit_quality) = match convergence_rate_with(model, rho0, &rho_a, FitOptions::default()) {
        Ok(fit) => (Some(fit.rate), Some(fit.fit_quality)),
        Err(Error::NoDecay) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(SteadyStateReport {
        steady_state: QuantumState::Mixed(rho_a),
        residual,
        uniqueness,
        diagonal_in_a_basis: max_off_diagonal <= DIAGONAL_TOL,
        max_off_diagonal,
        eigen_populations,
        cross_check_distance,
        convergence_rate,
        fit_quality,
    })
}

/// Populations, off-diagonal magnitudes and distance to `target` for one
/// trajectory point, in the computational basis.
pub fn point_summary(rho: &ComplexMatrix, target: &ComplexMatrix) -> (Vec<f64>, Vec<f64>, f64) {
    let d = rho.dim();
    let populations = (0..d).map(|i| rho[(i, i)].re).collect();
    let mut off = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for k in i + 1..d {
            off.push(rho[(i, k)].norm());
        }
    }
    (populations, off, (rho - target).norm_frobenius())
}

/// Smallest eigenvalue over all points of a trajectory.
pub fn min_trajectory_eigenvalue(trajectory: &[TrajectoryPoint]) -> f64 {
    trajectory
        .iter()
        .map(|p| hermitian_eigen(&p.rho).0[0])
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::rng;

    fn plus_density() -> QuantumState {
        QuantumState::Mixed(QuantumState::plus().density())
    }

    #[test]
    fn unitary_rotation_keeps_populations() {
        let m = LindbladModel::unitary(pauli::z()).unwrap();
        let traj = integrate(&m, &QuantumState::plus(), 3.0, 0.001).unwrap();
        for p in &traj {
            assert!((p.rho[(0, 0)].re - 0.5).abs() < 1e-10);
            assert!((p.rho[(0, 1)].norm() - 0.5).abs() < 1e-10);
            // ρ01(t) = ½ e^{-2it} for H = σz.
            let exact = Complex64::from_polar(0.5, -2.0 * p.t);
            assert!((p.rho[(0, 1)] - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn dephasing_matches_closed_form() {
        let m = LindbladModel::dephasing(1.0).unwrap();
        let traj = integrate(&m, &plus_density(), 5.0, 0.001).unwrap();
        assert_eq!(traj.len(), 5001);
        for p in &traj {
            assert!((p.rho[(0, 1)].re - 0.5 * (-2.0 * p.t).exp()).abs() < 1e-12);
            assert!((p.rho[(0, 0)].re - 0.5).abs() < 1e-14);
        }
        assert!((traj.last().unwrap().t - 5.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_states_are_fixed_by_dephasing() {
        let m = LindbladModel::dephasing(1.0).unwrap();
        let rho0 = QuantumState::mixed(ComplexMatrix::real_diagonal(&[0.9, 0.1])).unwrap();
        for p in integrate(&m, &rho0, 2.0, 0.01).unwrap() {
            assert!(p.rho.approx_eq(&rho0.density(), 1e-15));
        }
    }

    #[test]
    fn superoperator_agrees_with_matrix_form() {
        let mut r = rng::stream(2, 0);
        for d in 2..=4 {
            let h = random::hermitian(&mut r, d);
            let jumps: Vec<JumpOperator> = (0..2)
                .map(|_| JumpOperator {
                    operator: ComplexMatrix::from_fn(d, |_, _| {
                        Complex64::new(rand::Rng::random_range(&mut r, -1.0..1.0), rand::Rng::random_range(&mut r, -1.0..1.0))
                    }),
                    rate: 0.7,
                })
                .collect();
            let m = LindbladModel::with_jumps(h.clone(), &jumps).unwrap();
            let rho = random::density(&mut r, d);
            let via_matrix = m.apply(&rho);
            let via_super = reshape(&m.superoperator().mul_vec(rho.as_slice()), d);
            assert!(via_matrix.approx_eq(&via_super, 1e-12));
            assert!(via_matrix.trace().norm() < 1e-12);

            let raw = LindbladModel::with_superoperator(h.clone(), &m.superoperator() - &LindbladModel::unitary(h).unwrap().superoperator()).unwrap();
            assert!(raw.apply(&rho).approx_eq(&via_matrix, 1e-12));
        }
    }

    #[test]
    fn rejects_bad_models() {
        let not_hermitian = ComplexMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(LindbladModel::unitary(not_hermitian), Err(Error::NotHermitian { .. })));
        let s = ComplexMatrix::identity(4);
        assert!(matches!(
            LindbladModel::with_superoperator(ComplexMatrix::zeros(2), s),
            Err(Error::NotTraceAnnihilating(_))
        ));
        assert!(LindbladModel::dephasing(-1.0).is_err());
        let m = LindbladModel::dephasing(1.0).unwrap();
        assert!(integrate(&m, &QuantumState::plus(), 1.0, 2.0).is_err());
        assert!(integrate(&m, &QuantumState::basis(3, 0), 1.0, 0.1).is_err());
    }

    #[test]
    fn oversized_steps_lose_positivity() {
        let m = LindbladModel::amplitude_damping(50.0).unwrap();
        let err = integrate(&m, &QuantumState::basis(2, 1), 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. } | Error::NumericalIntegrity(_) | Error::NonFinite));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let model = LindbladModel::with_jumps(
            pauli::x(),
            &[JumpOperator {
                operator: pauli::lowering(),
                rate: 0.8,
            }],
        )
        .unwrap();
        let rho0 = QuantumState::basis(2, 1);
        let exact = exact_evolution(&model, &rho0, 1.0).unwrap();
        let errors: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&dt| {
                let traj = integrate(&model, &rho0, 1.0, dt).unwrap();
                (&traj.last().unwrap().rho - &exact).norm_frobenius()
            })
            .collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((8.0..=32.0).contains(&ratio), "ratio {ratio} from {errors:?}");
        }
    }

    #[test]
    fn dephasing_steady_state_from_plus() {
        let m = LindbladModel::dephasing(1.0).unwrap();
        let a = HermitianObservable::new(pauli::z()).unwrap();
        let rep = steady_state(&m, &a, &plus_density()).unwrap();
        assert!(rep.steady_state.density().approx_eq(&ComplexMatrix::real_diagonal(&[0.5, 0.5]), 1e-10));
        assert!(rep.diagonal_in_a_basis);
        assert_eq!(rep.uniqueness, Uniqueness::NonUnique { null_dimension: 2 });
        assert!(rep.cross_check_distance.unwrap() <= 1e-6);
        let rate = rep.convergence_rate.unwrap();
        assert!((rate + 2.0).abs() <= 0.1, "rate {rate}");
        assert!(rep.fit_quality.unwrap() > 0.999);
        for (x, lambda) in &rep.eigen_populations {
            assert!((lambda - 0.5).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn dephasing_keeps_populations_of_diagonal_start() {
        let m = LindbladModel::dephasing(1.0).unwrap();
        let a = HermitianObservable::new(pauli::z()).unwrap();
        let rho0 = QuantumState::mixed(ComplexMatrix::real_diagonal(&[0.9, 0.1])).unwrap();
        let rep = steady_state(&m, &a, &rho0).unwrap();
        assert!(rep.steady_state.density().approx_eq(&rho0.density(), 1e-10));
        assert!(matches!(rep.uniqueness, Uniqueness::NonUnique { .. }));
        // The start is already stationary, so there is nothing to fit.
        assert!(rep.convergence_rate.is_none());
        let lambdas: Vec<f64> = rep.eigen_populations.iter().map(|p| p.1).collect();
        assert!((lambdas[0] - 0.1).abs() < 1e-10 && (lambdas[1] - 0.9).abs() < 1e-10);
    }

    #[test]
    fn amplitude_damping_relaxes_to_ground() {
        let m = LindbladModel::amplitude_damping(1.0).unwrap();
        let a = HermitianObservable::new(pauli::z()).unwrap();
        let rep = steady_state(&m, &a, &QuantumState::basis(2, 1)).unwrap();
        assert_eq!(rep.uniqueness, Uniqueness::Unique);
        assert!(rep.steady_state.density().approx_eq(&ComplexMatrix::real_diagonal(&[1.0, 0.0]), 1e-10));
        let fit = convergence_rate(&m, &QuantumState::basis(2, 1)).unwrap();
        assert!((fit.rate + 1.0).abs() <= 0.05, "rate {}", fit.rate);
    }

    #[test]
    fn closed_dynamics_does_not_decay() {
        let m = LindbladModel::unitary(pauli::z()).unwrap();
        assert_eq!(convergence_rate(&m, &plus_density()).unwrap_err(), Error::NoDecay);
        let a = HermitianObservable::new(pauli::z()).unwrap();
        let rep = steady_state(&m, &a, &plus_density()).unwrap();
        assert!(rep.cross_check_distance.is_none() && rep.convergence_rate.is_none());
        // The kernel projection of |+><+| is the time average I/2.
        assert!(rep.steady_state.density().approx_eq(&ComplexMatrix::real_diagonal(&[0.5, 0.5]), 1e-10));
    }

    #[test]
    fn json_model_forms() {
        let m: LindbladModel = serde_json::from_str(
            r#"{"hamiltonian":{"dim":2,"re":[[0,0],[0,0]]},
                "jumps":[{"operator":{"dim":2,"re":[[1,0],[0,-1]]},"rate":1.0}]}"#,
        )
        .unwrap();
        let reference = LindbladModel::dephasing(1.0).unwrap();
        assert!(m.superoperator().approx_eq(&reference.superoperator(), 0.0));
        let back: LindbladModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert!(back.superoperator().approx_eq(&reference.superoperator(), 0.0));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn random_models_preserve_trace_and_reach_stationarity(seed in any::<u64>(), d in 2usize..=3) {
                let mut r = rng::stream(seed, 0);
                let h = random::hermitian(&mut r, d).scale_real(0.5);
                let jumps: Vec<JumpOperator> = (0..2)
                    .map(|_| JumpOperator { operator: random::hermitian(&mut r, d), rate: 0.3 })
                    .chain(std::iter::once(JumpOperator {
                        operator: ComplexMatrix::from_fn(d, |i, k| if k == i + 1 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }),
                        rate: 0.5,
                    }))
                    .collect();
                let m = LindbladModel::with_jumps(h, &jumps).unwrap();
                let rho0 = QuantumState::mixed(random::density(&mut r, d)).unwrap();
                prop_assert!(m.apply(&rho0.density()).trace().norm() <= 1e-10);
                let traj = integrate(&m, &rho0, 2.0, 0.01).unwrap();
                prop_assert!(min_trajectory_eigenvalue(&traj) >= -1e-7);
                let (rho_a, _) = find_steady_state(&m, &rho0).unwrap();
                prop_assert!(m.apply(&rho_a).norm_frobenius() <= 1e-8);
                prop_assert!(min_eigenvalue(&rho_a) >= -1e-8);
            }
        }
    }
}
