//! Frequencies: seeded Born sampling, law-of-large-numbers checks and a
//! two-detector click model for the zero-delay coincidence ratio g²(0).
//!
//! Draw `i` of a measurement record is uniform `i` of stream 0 under the
//! record's seed; click window `w` owns stream `w`. Records therefore do not
//! depend on how the work is split across threads.

use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::quantum::{born_distribution, born_probability, HermitianObservable, QuantumState};
use crate::rng;

/// Outcomes closer than this to the queried value count as a match.
pub const OUTCOME_MATCH_TOL: f64 = 1e-9;

/// Envelope width in binomial standard deviations.
pub const ENVELOPE_SIGMAS: f64 = 4.0;

const SAMPLE_CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub outcomes: Vec<f64>,
    pub observable: String,
    pub seed: u64,
    pub n: usize,
}

/// Inverse-CDF table over the outcomes with positive probability.
struct Sampler {
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Sampler {
    fn new(distribution: &[(f64, f64)]) -> Result<Self> {
        let positive: Vec<(f64, f64)> = distribution.iter().copied().filter(|&(_, p)| p > 0.0).collect();
        if positive.is_empty() {
            return Err(Error::NumericalIntegrity("Born distribution has no positive outcome".into()));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = positive
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc
            })
            .collect();
        let total = acc;
        for c in &mut cumulative {
            *c /= total;
        }
        *cumulative.last_mut().expect("non-empty") = 1.0;
        Ok(Sampler {
            values: positive.iter().map(|&(x, _)| x).collect(),
            cumulative,
        })
    }

    fn pick(&self, u: f64) -> f64 {
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.values[k.min(self.values.len() - 1)]
    }
}

/// `n` i.i.d. Born-rule outcomes of `obs` in `state`.
pub fn sample_outcomes(state: &QuantumState, obs: &HermitianObservable, n: usize, seed: u64) -> Result<MeasurementRecord> {
    sample_outcomes_with(state, obs, n, seed, Execution::default())
}

pub fn sample_outcomes_with(
    state: &QuantumState,
    obs: &HermitianObservable,
    n: usize,
    seed: u64,
    exec: Execution,
) -> Result<MeasurementRecord> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let sampler = Sampler::new(&born_distribution(state, obs)?)?;
    let outcomes = par::map_chunks(n, SAMPLE_CHUNK, exec, |range| {
        rng::uniforms(seed, 0, range.start as u64, range.len())
            .into_iter()
            .map(|u| sampler.pick(u))
            .collect()
    });
    Ok(MeasurementRecord {
        outcomes,
        observable: obs.label().unwrap_or("A").to_owned(),
        seed,
        n,
    })
}

fn matches(o: f64, x: f64) -> bool {
    (o - x).abs() <= OUTCOME_MATCH_TOL
}

/// Number of draws equal to `x`.
pub fn count(record: &MeasurementRecord, x: f64) -> usize {
    record.outcomes.iter().filter(|&&o| matches(o, x)).count()
}

/// `k_N(x) / N`.
pub fn empirical_frequency(record: &MeasurementRecord, x: f64) -> Result<f64> {
    if record.outcomes.is_empty() {
        return Err(Error::EmptyRecord);
    }
    Ok(count(record, x) as f64 / record.outcomes.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnRow {
    pub n: usize,
    pub frequency: f64,
    pub deviation: f64,
    /// `4 √(p(1-p)/N)`.
    pub envelope: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlnTable {
    pub probability: f64,
    pub outcome: f64,
    pub seed: u64,
    pub rows: Vec<LlnRow>,
}

impl LlnTable {
    pub fn breaches(&self) -> usize {
        self.rows.iter().filter(|r| !r.within).count()
    }

    /// CSV with header `N,frequency,deviation,envelope`.
    pub fn to_csv(&self) -> String {
        use crate::format::sig;
        let mut out = String::from("N,frequency,deviation,envelope\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.n, sig(r.frequency), sig(r.deviation), sig(r.envelope)));
        }
        out
    }
}

/// Frequencies of `outcome` over nested prefixes of one sample stream.
///
/// Each row checks `|ν_N - p| ≤ 4 √(p(1-p)/N)`; a correct sampler breaches
/// this with probability about `6e-5` per row.
pub fn lln_convergence(
    state: &QuantumState,
    obs: &HermitianObservable,
    outcome: f64,
    n_grid: &[usize],
    seed: u64,
) -> Result<LlnTable> {
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("N grid must be positive and strictly increasing".into()));
    }
    let p = born_probability(state, obs, outcome)?;
    let outcome = obs.outcomes()[obs.outcome_index(outcome)?];
    let record = sample_outcomes(state, obs, *n_grid.last().expect("non-empty"), seed)?;
    let mut rows = Vec::with_capacity(n_grid.len());
    let (mut k, mut seen) = (0usize, 0usize);
    for &n in n_grid {
        k += record.outcomes[seen..n].iter().filter(|&&o| matches(o, outcome)).count();
        seen = n;
        let frequency = k as f64 / n as f64;
        let deviation = (frequency - p).abs();
        let envelope = ENVELOPE_SIGMAS * (p * (1.0 - p) / n as f64).sqrt();
        rows.push(LlnRow {
            n,
            frequency,
            deviation,
            envelope,
            within: deviation <= envelope,
        });
    }
    Ok(LlnTable {
        probability: p,
        outcome,
        seed,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// One photon per window, sent to either detector with probability ½.
    SinglePhoton,
    /// Independent Poisson counts with mean `mean_count / 2` at each detector.
    Coherent,
    /// Exponentially distributed intensity with mean `mean_count`, shared by
    /// both detectors' Poisson counts.
    Thermal,
}

impl std::str::FromStr for SourceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_photon" | "single-photon" => Ok(SourceKind::SinglePhoton),
            "coherent" => Ok(SourceKind::Coherent),
            "thermal" => Ok(SourceKind::Thermal),
            other => Err(Error::InvalidArgument(format!("unknown source kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub detector_a_clicks: Vec<u64>,
    pub detector_b_clicks: Vec<u64>,
    pub source: SourceKind,
}

impl ClickRecord {
    pub fn new(detector_a_clicks: Vec<u64>, detector_b_clicks: Vec<u64>, source: SourceKind) -> Result<Self> {
        if detector_a_clicks.len() != detector_b_clicks.len() {
            return Err(Error::DegenerateRecord(format!(
                "detectors have {} and {} windows",
                detector_a_clicks.len(),
                detector_b_clicks.len()
            )));
        }
        Ok(ClickRecord {
            detector_a_clicks,
            detector_b_clicks,
            source,
        })
    }

    pub fn windows(&self) -> usize {
        self.detector_a_clicks.len()
    }

    /// The first `n` windows.
    pub fn prefix(&self, n: usize) -> ClickRecord {
        let n = n.min(self.windows());
        ClickRecord {
            detector_a_clicks: self.detector_a_clicks[..n].to_vec(),
            detector_b_clicks: self.detector_b_clicks[..n].to_vec(),
            source: self.source,
        }
    }
}

fn poisson(r: &mut impl rand::Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(r) as u64
}

pub fn simulate_clicks(source: SourceKind, n_windows: usize, mean_count: f64, seed: u64) -> Result<ClickRecord> {
    simulate_clicks_with(source, n_windows, mean_count, seed, Execution::default())
}

pub fn simulate_clicks_with(
    source: SourceKind,
    n_windows: usize,
    mean_count: f64,
    seed: u64,
    exec: Execution,
) -> Result<ClickRecord> {
    if n_windows == 0 {
        return Err(Error::InvalidArgument("at least one window is required".into()));
    }
    if !(mean_count.is_finite() && mean_count > 0.0) {
        return Err(Error::InvalidArgument(format!("mean count must be positive, got {mean_count}")));
    }
    let thermal = Exp::new(1.0 / mean_count).expect("positive rate");
    let pairs = par::map_indexed(n_windows, exec, |w| {
        let mut r = rng::stream(seed, w as u64);
        match source {
            SourceKind::SinglePhoton => {
                if rng::unit_f64(&mut r) < 0.5 {
                    (1, 0)
                } else {
                    (0, 1)
                }
            }
            SourceKind::Coherent => (poisson(&mut r, mean_count / 2.0), poisson(&mut r, mean_count / 2.0)),
            SourceKind::Thermal => {
                let intensity: f64 = thermal.sample(&mut r);
                (poisson(&mut r, intensity / 2.0), poisson(&mut r, intensity / 2.0))
            }
        }
    });
    let (detector_a_clicks, detector_b_clicks) = pairs.into_iter().unzip();
    ClickRecord::new(detector_a_clicks, detector_b_clicks, source)
}

/// `<n_a n_b> / (<n_a><n_b>)` over windows.
pub fn g2_zero(clicks: &ClickRecord) -> Result<f64> {
    let n = clicks.windows();
    if n == 0 {
        return Err(Error::DegenerateRecord("no windows".into()));
    }
    if clicks.detector_b_clicks.len() != n {
        return Err(Error::DegenerateRecord("detector records differ in length".into()));
    }
    let (mut sa, mut sb, mut sab) = (0u128, 0u128, 0u128);
    for (&a, &b) in clicks.detector_a_clicks.iter().zip(&clicks.detector_b_clicks) {
        sa += a as u128;
        sb += b as u128;
        sab += (a as u128) * (b as u128);
    }
    if sa == 0 || sb == 0 {
        return Err(Error::DegenerateRecord("a detector never clicked".into()));
    }
    let n = n as f64;
    Ok((sab as f64 / n) / ((sa as f64 / n) * (sb as f64 / n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli;
    use crate::random;

    fn sz() -> HermitianObservable {
        HermitianObservable::new(pauli::z()).unwrap()
    }

    #[test]
    fn eigenstate_is_deterministic() {
        let rec = sample_outcomes(&QuantumState::basis(2, 0), &sz(), 1000, 3).unwrap();
        assert!(rec.outcomes.iter().all(|&o| o == 1.0));
        assert_eq!(empirical_frequency(&rec, 1.0).unwrap(), 1.0);
        let one = sample_outcomes(&QuantumState::plus(), &sz(), 1, 3).unwrap();
        assert_eq!(one.outcomes.len(), 1);
        assert!(one.outcomes[0] == 1.0 || one.outcomes[0] == -1.0);
        assert!(sample_outcomes(&QuantumState::plus(), &sz(), 0, 3).is_err());
    }

    #[test]
    fn plus_state_frequency_at_one_million() {
        let rec = sample_outcomes(&QuantumState::plus(), &sz(), 1_000_000, 2024).unwrap();
        let f = empirical_frequency(&rec, 1.0).unwrap();
        assert!((f - 0.5).abs() <= 0.0015, "{f}");
        let total: usize = [-1.0, 1.0].iter().map(|&x| count(&rec, x)).sum();
        assert_eq!(total, rec.n);
    }

    #[test]
    fn frequency_examples() {
        let rec = MeasurementRecord {
            outcomes: vec![1.0, -1.0, 1.0, -1.0],
            observable: "A".into(),
            seed: 0,
            n: 4,
        };
        assert_eq!(empirical_frequency(&rec, 1.0).unwrap(), 0.5);
        let empty = MeasurementRecord {
            outcomes: vec![],
            observable: "A".into(),
            seed: 0,
            n: 0,
        };
        assert_eq!(empirical_frequency(&empty, 1.0).unwrap_err(), Error::EmptyRecord);
    }

    #[test]
    fn sampling_is_schedule_independent() {
        let mut r = rng::stream(5, 0);
        let psi = QuantumState::pure(random::unit_vector(&mut r, 4)).unwrap();
        let obs = HermitianObservable::new(random::nondegenerate_hermitian(&mut r, 4)).unwrap();
        let a = sample_outcomes_with(&psi, &obs, 50_000, 17, Execution::Sequential).unwrap();
        let b = sample_outcomes_with(&psi, &obs, 50_000, 17, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let c = sample_outcomes_with(&psi, &obs, 50_000, 18, Execution::Parallel).unwrap();
        assert_ne!(a.outcomes, c.outcomes);
    }

    #[test]
    fn lln_extreme_branches() {
        let zero = QuantumState::basis(2, 0);
        for (x, p) in [(-1.0, 0.0), (1.0, 1.0)] {
            let t = lln_convergence(&zero, &sz(), x, &[10, 100, 1000], 1).unwrap();
            assert_eq!(t.probability, p);
            assert!(t.rows.iter().all(|r| r.deviation == 0.0 && r.within));
        }
        assert!(lln_convergence(&zero, &sz(), 1.0, &[100, 10], 1).is_err());
    }

    #[test]
    fn lln_half_branch() {
        let t = lln_convergence(&QuantumState::plus(), &sz(), 1.0, &[100, 10_000, 1_000_000], 7).unwrap();
        let envelopes: Vec<f64> = t.rows.iter().map(|r| r.envelope).collect();
        for (e, expected) in envelopes.iter().zip([0.2, 0.02, 0.002]) {
            assert!((e - expected).abs() < 1e-15);
        }
        assert_eq!(t.breaches(), 0);
        assert!(t.to_csv().starts_with("N,frequency,deviation,envelope\n100,"));
    }

    #[test]
    fn single_photon_has_no_coincidences() {
        let c = simulate_clicks(SourceKind::SinglePhoton, 10_000, 1.0, 4).unwrap();
        for (a, b) in c.detector_a_clicks.iter().zip(&c.detector_b_clicks) {
            assert!((*a, *b) == (1, 0) || (*a, *b) == (0, 1));
        }
        assert_eq!(g2_zero(&c).unwrap(), 0.0);
        assert_eq!(simulate_clicks(SourceKind::SinglePhoton, 1, 1.0, 4).unwrap().windows(), 1);
    }

    #[test]
    fn coherent_and_thermal_statistics() {
        let c = simulate_clicks(SourceKind::Coherent, 100_000, 2.0, 8).unwrap();
        let mean_a = c.detector_a_clicks.iter().sum::<u64>() as f64 / 1e5;
        assert!((mean_a - 1.0).abs() <= 3.0 * (1.0f64 / 1e5).sqrt());
        let c = simulate_clicks(SourceKind::Coherent, 100_000, 1.0, 8).unwrap();
        assert!((g2_zero(&c).unwrap() - 1.0).abs() <= 0.05);
        let t = simulate_clicks(SourceKind::Thermal, 100_000, 1.0, 8).unwrap();
        assert!((g2_zero(&t).unwrap() - 2.0).abs() <= 0.1);
    }

    #[test]
    fn click_simulation_is_schedule_independent() {
        let a = simulate_clicks_with(SourceKind::Thermal, 5000, 1.0, 3, Execution::Sequential).unwrap();
        let b = simulate_clicks_with(SourceKind::Thermal, 5000, 1.0, 3, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_click_records() {
        let r = ClickRecord::new(vec![0, 0], vec![1, 2], SourceKind::Coherent).unwrap();
        assert!(matches!(g2_zero(&r), Err(Error::DegenerateRecord(_))));
        assert!(ClickRecord::new(vec![0], vec![1, 2], SourceKind::Coherent).is_err());
        assert!(simulate_clicks(SourceKind::Coherent, 10, 0.0, 1).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn frequencies_partition_the_record(seed in any::<u64>(), d in 2usize..=4, n in 1usize..2000) {
                let mut r = rng::stream(seed, 0);
                let psi = QuantumState::pure(random::unit_vector(&mut r, d)).unwrap();
                let obs = HermitianObservable::new(random::nondegenerate_hermitian(&mut r, d)).unwrap();
                let rec = sample_outcomes(&psi, &obs, n, seed).unwrap();
                let mut total = 0;
                for &x in obs.outcomes() {
                    total += count(&rec, x);
                }
                prop_assert_eq!(total, n);
                prop_assert_eq!(rec, sample_outcomes(&psi, &obs, n, seed).unwrap());
            }
        }
    }
}
