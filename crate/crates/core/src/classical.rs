//! Kolmogorov probability over finite sample spaces.
//!
//! The event algebra is the full power set of the points, so events are
//! plain predicates on point indices.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a space or distribution.
pub const MASS_TOL: f64 = 1e-12;

/// Outcome value quantized to a `1e-9` grid, so cell keys compare exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Outcome(i64);

impl Outcome {
    pub const GRID: f64 = 1e-9;

    pub fn new(value: f64) -> Self {
        Outcome((value / Self::GRID).round() as i64)
    }

    pub fn value(self) -> f64 {
        self.0 as f64 * Self::GRID
    }
}

impl From<f64> for Outcome {
    fn from(x: f64) -> Self {
        Outcome::new(x)
    }
}

impl From<Outcome> for f64 {
    fn from(o: Outcome) -> f64 {
        o.value()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::format::sig(self.value()))
    }
}

/// Finite space `(Λ, 2^Λ, P)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceJson", into = "SpaceJson")]
pub struct FiniteProbabilitySpace {
    points: Vec<String>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SpaceJson {
    points: Vec<String>,
    weights: Vec<f64>,
}

impl TryFrom<SpaceJson> for FiniteProbabilitySpace {
    type Error = Error;
    fn try_from(j: SpaceJson) -> Result<Self> {
        FiniteProbabilitySpace::new(j.points, j.weights)
    }
}

impl From<FiniteProbabilitySpace> for SpaceJson {
    fn from(s: FiniteProbabilitySpace) -> Self {
        SpaceJson {
            points: s.points,
            weights: s.weights,
        }
    }
}

impl FiniteProbabilitySpace {
    pub fn new(points: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSpace("at least one point is required".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidSpace(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidSpace(format!("weight {w} is not a non-negative number")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidSpace(format!("weights sum to {total}, not 1")));
        }
        Ok(FiniteProbabilitySpace { points, weights })
    }

    /// Points labelled `λ1..λn`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let points = (1..=weights.len()).map(|i| format!("λ{i}")).collect();
        Self::new(points, weights)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p == label)
    }

    /// `P(E)` for the event `{λ : event(λ)}`.
    pub fn event_probability(&self, event: impl Fn(usize) -> bool) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .filter(|(i, _)| event(*i))
            .map(|(_, w)| w)
            .sum()
    }

    /// `P(B | A) = P(B ∧ A) / P(A)`.
    pub fn bayes_conditional(
        &self,
        b: impl Fn(usize) -> bool,
        a: impl Fn(usize) -> bool,
    ) -> Result<f64> {
        let pa = self.event_probability(&a);
        if pa == 0.0 {
            return Err(Error::ConditionOnNull);
        }
        Ok(self.event_probability(|i| a(i) && b(i)) / pa)
    }

    /// Joint distribution of `vars`, listing only cells of positive mass.
    pub fn joint_distribution(&self, vars: &[RandomVariable]) -> Result<JointDistribution> {
        if vars.is_empty() {
            return Err(Error::InvalidArgument("at least one random variable is required".into()));
        }
        for v in vars {
            v.check_space(self)?;
        }
        let mut cells: BTreeMap<Vec<Outcome>, f64> = BTreeMap::new();
        for (i, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let key = vars.iter().map(|v| v.values[i]).collect();
            *cells.entry(key).or_insert(0.0) += w;
        }
        Ok(JointDistribution {
            variables: vars.iter().map(|v| v.name.clone()).collect(),
            cells,
        })
    }

    /// Formula of total probability `Σ_j p(A=a_j) p(B=target | A=a_j)`,
    /// skipping outcomes of `a` with zero mass.
    pub fn classical_ftp(
        &self,
        a: &RandomVariable,
        b: &RandomVariable,
        target: f64,
    ) -> Result<f64> {
        a.check_space(self)?;
        b.check_space(self)?;
        let target = Outcome::new(target);
        let mut total = 0.0;
        for &alpha in &a.range {
            let in_a = |i: usize| a.values[i] == alpha;
            let pa = self.event_probability(in_a);
            if pa == 0.0 {
                continue;
            }
            let cond = self.bayes_conditional(|i| b.values[i] == target, in_a)?;
            total += pa * cond;
        }
        Ok(total)
    }
}

/// Random variable with an explicitly declared range.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    name: String,
    values: Vec<Outcome>,
    range: Vec<Outcome>,
}

impl RandomVariable {
    /// `values[i]` is the outcome at point `i`; every value must lie in `range`.
    pub fn new(name: impl Into<String>, values: &[f64], range: &[f64]) -> Result<Self> {
        let name = name.into();
        let mut r: Vec<Outcome> = range.iter().map(|&x| Outcome::new(x)).collect();
        r.sort();
        r.dedup();
        let values: Vec<Outcome> = values.iter().map(|&x| Outcome::new(x)).collect();
        if let Some(v) = values.iter().find(|v| r.binary_search(v).is_err()) {
            return Err(Error::InvalidArgument(format!(
                "variable `{name}` takes value {v} outside its declared range"
            )));
        }
        Ok(RandomVariable {
            name,
            values,
            range: r,
        })
    }

    /// Range taken to be the set of observed values.
    pub fn from_values(name: impl Into<String>, values: &[f64]) -> Result<Self> {
        Self::new(name, values, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn range(&self) -> &[Outcome] {
        &self.range
    }

    pub fn value_at(&self, point: usize) -> Outcome {
        self.values[point]
    }

    /// Indicator predicate of `{λ : X(λ) = x}`.
    pub fn equals(&self, x: f64) -> impl Fn(usize) -> bool + '_ {
        let x = Outcome::new(x);
        move |i| self.values[i] == x
    }

    fn check_space(&self, space: &FiniteProbabilitySpace) -> Result<()> {
        if self.values.len() != space.len() {
            return Err(Error::DimMismatch {
                expected: space.len(),
                found: self.values.len(),
            });
        }
        Ok(())
    }
}

/// Joint probability distribution over outcome tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    variables: Vec<String>,
    cells: BTreeMap<Vec<Outcome>, f64>,
}

impl JointDistribution {
    /// Builds a distribution from cells, validating mass and arity.
    pub fn new(variables: Vec<String>, cells: Vec<(Vec<Outcome>, f64)>) -> Result<Self> {
        let arity = variables.len();
        if arity == 0 {
            return Err(Error::InvalidArgument("a distribution needs at least one variable".into()));
        }
        let mut map = BTreeMap::new();
        for (k, p) in cells {
            if k.len() != arity {
                return Err(Error::DimMismatch {
                    expected: arity,
                    found: k.len(),
                });
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidSpace(format!("cell probability {p} is negative")));
            }
            *map.entry(k).or_insert(0.0) += p;
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidSpace(format!("cells sum to {total}, not 1")));
        }
        Ok(JointDistribution {
            variables,
            cells: map,
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Support tuples in lexicographic order, with their probabilities.
    pub fn cells(&self) -> impl Iterator<Item = (&[Outcome], f64)> {
        self.cells.iter().map(|(k, &p)| (k.as_slice(), p))
    }

    pub fn support_len(&self) -> usize {
        self.cells.len()
    }

    /// Probability of one tuple; zero for tuples outside the support.
    pub fn probability(&self, tuple: &[f64]) -> f64 {
        let key: Vec<Outcome> = tuple.iter().map(|&x| Outcome::new(x)).collect();
        self.cells.get(&key).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.values().sum()
    }

    /// Sums out every variable not in `keep`; the result lists variables in `keep` order.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointDistribution> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument("marginal needs at least one variable".into()));
        }
        let idx: Vec<usize> = keep
            .iter()
            .map(|name| {
                self.variables
                    .iter()
                    .position(|v| v == name)
                    .ok_or_else(|| Error::UnknownVariable(name.to_string()))
            })
            .collect::<Result<_>>()?;
        let mut cells: BTreeMap<Vec<Outcome>, f64> = BTreeMap::new();
        for (k, &p) in &self.cells {
            let key = idx.iter().map(|&i| k[i]).collect();
            *cells.entry(key).or_insert(0.0) += p;
        }
        Ok(JointDistribution {
            variables: idx.iter().map(|&i| self.variables[i].clone()).collect(),
            cells,
        })
    }

    /// Re-expresses the distribution as a sample space whose points are the
    /// support cells, with one coordinate random variable per variable.
    pub fn to_space(&self) -> Result<(FiniteProbabilitySpace, Vec<RandomVariable>)> {
        let points = self
            .cells
            .keys()
            .map(|k| {
                let parts: Vec<String> = k.iter().map(|o| o.to_string()).collect();
                format!("({})", parts.join(","))
            })
            .collect();
        let space = FiniteProbabilitySpace::new(points, self.cells.values().copied().collect())?;
        let vars = self
            .variables
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let values: Vec<f64> = self.cells.keys().map(|k| k[j].value()).collect();
                RandomVariable::from_values(name.clone(), &values)
            })
            .collect::<Result<_>>()?;
        Ok((space, vars))
    }

    /// CSV with a header of variable names plus `probability`, one row per support tuple.
    pub fn to_csv(&self) -> String {
        let mut out = self.variables.join(",");
        out.push_str(",probability\n");
        for (k, p) in &self.cells {
            let mut row: Vec<String> = k.iter().map(|o| o.to_string()).collect();
            row.push(crate::format::sig(*p));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_probability_examples() {
        let s = FiniteProbabilitySpace::uniform(6).unwrap();
        assert!((s.event_probability(|i| (i + 1) % 2 == 0) - 0.5).abs() < 1e-15);
        assert_eq!(s.event_probability(|_| false), 0.0);
        let w = FiniteProbabilitySpace::from_weights(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((w.event_probability(|i| i == 0 || i == 2) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(FiniteProbabilitySpace::from_weights(vec![0.5, 0.6]).is_err());
        assert!(FiniteProbabilitySpace::from_weights(vec![1.5, -0.5]).is_err());
        assert!(FiniteProbabilitySpace::new(vec!["a".into()], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn bayes_examples() {
        let s = FiniteProbabilitySpace::uniform(4).unwrap();
        // B ⊇ A
        assert_eq!(s.bayes_conditional(|i| i < 3, |i| i < 2).unwrap(), 1.0);
        assert_eq!(s.bayes_conditional(|i| i >= 2, |i| i < 2).unwrap(), 0.0);
        // A = {λ1, λ2}, B = {λ2, λ3}
        let p = s.bayes_conditional(|i| i == 1 || i == 2, |i| i < 2).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert_eq!(s.bayes_conditional(|_| true, |_| false), Err(Error::ConditionOnNull));
    }

    #[test]
    fn joint_distribution_examples() {
        let two = FiniteProbabilitySpace::uniform(2).unwrap();
        let id = RandomVariable::from_values("X", &[0.0, 1.0]).unwrap();
        let j = two.joint_distribution(&[id]).unwrap();
        assert_eq!(j.probability(&[0.0]), 0.5);
        assert_eq!(j.probability(&[1.0]), 0.5);

        let a = RandomVariable::new("A", &[1.0, -1.0], &[1.0, -1.0]).unwrap();
        let b = RandomVariable::new("B", &[1.0, -1.0], &[1.0, -1.0]).unwrap();
        let j = two.joint_distribution(&[a, b]).unwrap();
        assert_eq!(j.probability(&[1.0, 1.0]), 0.5);
        assert_eq!(j.probability(&[-1.0, -1.0]), 0.5);
        assert_eq!(j.probability(&[1.0, -1.0]), 0.0);
        assert_eq!(j.probability(&[-1.0, 1.0]), 0.0);
        let m = j.marginal(&["B"]).unwrap();
        assert_eq!(m.probability(&[1.0]), 0.5);
        assert_eq!(m.probability(&[-1.0]), 0.5);
        assert_eq!(j.marginal(&["A", "B"]).unwrap(), j);
        assert_eq!(j.marginal(&["C"]), Err(Error::UnknownVariable("C".into())));

        let four = FiniteProbabilitySpace::uniform(4).unwrap();
        let a = RandomVariable::from_values("A", &[1.0, 1.0, -1.0, -1.0]).unwrap();
        let b = RandomVariable::from_values("B", &[1.0, -1.0, 1.0, -1.0]).unwrap();
        let j = four.joint_distribution(&[a, b]).unwrap();
        for x in [1.0, -1.0] {
            for y in [1.0, -1.0] {
                assert_eq!(j.probability(&[x, y]), 0.25);
            }
        }
        assert_eq!(j.marginal(&["A"]).unwrap().probability(&[1.0]), 0.5);
    }

    #[test]
    fn classical_ftp_examples() {
        // Two coins: p(A=H)=0.6, p(B=H|A=H)=0.9, p(B=H|A=T)=0.2.
        // Points: (H,H) (H,T) (T,H) (T,T) with H=1, T=0.
        let s = FiniteProbabilitySpace::from_weights(vec![0.54, 0.06, 0.08, 0.32]).unwrap();
        let a = RandomVariable::from_values("A", &[1.0, 1.0, 0.0, 0.0]).unwrap();
        let b = RandomVariable::from_values("B", &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((s.classical_ftp(&a, &b, 1.0).unwrap() - 0.62).abs() < 1e-12);
        // B = A
        assert!((s.classical_ftp(&a, &a, 1.0).unwrap() - 0.6).abs() < 1e-12);

        // Independent B with p(B=1)=0.3
        let s = FiniteProbabilitySpace::from_weights(vec![0.15, 0.35, 0.15, 0.35]).unwrap();
        let b = RandomVariable::from_values("B", &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((s.classical_ftp(&a, &b, 1.0).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_branches_are_skipped() {
        let s = FiniteProbabilitySpace::from_weights(vec![1.0, 0.0]).unwrap();
        let a = RandomVariable::from_values("A", &[0.0, 1.0]).unwrap();
        assert_eq!(s.classical_ftp(&a, &a, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn csv_layout() {
        let s = FiniteProbabilitySpace::uniform(2).unwrap();
        let a = RandomVariable::from_values("A", &[1.0, -1.0]).unwrap();
        let csv = s.joint_distribution(&[a]).unwrap().to_csv();
        assert_eq!(csv, "A,probability\n-1,0.5\n1,0.5\n");
    }

    #[test]
    fn space_json_roundtrip() {
        let s: FiniteProbabilitySpace =
            serde_json::from_str(r#"{"points":["a","b"],"weights":[0.25,0.75]}"#).unwrap();
        assert_eq!(s.index_of("b"), Some(1));
        assert!(serde_json::from_str::<FiniteProbabilitySpace>(r#"{"points":["a"],"weights":[0.5]}"#).is_err());
    }
}
