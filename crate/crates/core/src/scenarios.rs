//! Bundled experiment definitions and their runner.
//!
//! A scenario file names a `kind`, gives a kind-specific `config`, and lists
//! `expected` assertions on the quantities that kind computes. Running a
//! scenario is deterministic: every random draw comes from the seeds in its
//! config, and the report lists quantities in sorted order.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};

use crate::chsh::{self, CHSHSetting, SweepMode};
use crate::error::{Error, Result};
use crate::format::sig;
use crate::frequency::{self, SourceKind};
use crate::gksl::{self, LindbladModel};
use crate::instruments::{self, IndirectMeasurementModel};
use crate::linalg::{ComplexMatrix, Complex64};
use crate::logic::{self, Subspace};
use crate::par::{self, Execution};
use crate::quantum::{self, HermitianObservable, QuantumState};
use crate::{random, rng};

const BUNDLED: &[(&str, &str)] = &[
    ("ftp-plus-state", include_str!("../../../scenarios/ftp-plus-state.json")),
    ("ftp-commuting-null", include_str!("../../../scenarios/ftp-commuting-null.json")),
    ("ftp-random-identity", include_str!("../../../scenarios/ftp-random-identity.json")),
    ("chsh-tsirelson", include_str!("../../../scenarios/chsh-tsirelson.json")),
    ("chsh-compatible-cap", include_str!("../../../scenarios/chsh-compatible-cap.json")),
    ("instrument-cnot-luders", include_str!("../../../scenarios/instrument-cnot-luders.json")),
    ("gksl-dephasing", include_str!("../../../scenarios/gksl-dephasing.json")),
    ("lln-envelope", include_str!("../../../scenarios/lln-envelope.json")),
    ("g2-separation", include_str!("../../../scenarios/g2-separation.json")),
    ("logic-distributivity", include_str!("../../../scenarios/logic-distributivity.json")),
    ("jpd-bridge", include_str!("../../../scenarios/jpd-bridge.json")),
];

/// A measured or expected value.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Flag(bool),
    Number(f64),
}

impl Value {
    pub fn as_f64(self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(x),
            Value::Flag(_) => None,
        }
    }

    /// Plain-text rendering, numbers with 12 significant digits.
    pub fn render(self) -> String {
        match self {
            Value::Flag(b) => b.to_string(),
            Value::Number(x) => sig(x),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Value::Flag(b) => s.serialize_bool(b),
            // Twelve significant digits keeps reports stable across platforms.
            Value::Number(x) if x.is_finite() => s.serialize_f64(sig(x).parse().unwrap_or(x)),
            Value::Number(_) => s.serialize_none(),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Number(x)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Flag(b)
    }
}

impl From<usize> for Value {
    fn from(n: usize) -> Self {
        Value::Number(n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured - expected| ≤ tol`.
    #[default]
    Approx,
    /// `measured ≤ expected + tol`.
    AtMost,
    /// `measured ≥ expected - tol`.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub quantity: String,
    pub expected: Value,
    #[serde(default)]
    pub tol: f64,
    #[serde(default)]
    pub cmp: Comparison,
    /// Free-form remark on where the expected value comes from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Expectation {
    fn check(&self, measured: Value) -> bool {
        match (measured, self.expected) {
            (Value::Flag(m), Value::Flag(e)) => m == e,
            (Value::Number(m), Value::Number(e)) => match self.cmp {
                Comparison::Approx => (m - e).abs() <= self.tol,
                Comparison::AtMost => m <= e + self.tol,
                Comparison::AtLeast => m >= e - self.tol,
            },
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    description: String,
    kind: String,
    #[serde(default)]
    config: serde_json::Value,
    #[serde(default)]
    expected: Vec<Expectation>,
}

/// Kind-specific parameters.
#[derive(Debug, Clone)]
pub enum ScenarioConfig {
    Ftp(FtpConfig),
    FtpRandom(FtpRandomConfig),
    Chsh(Box<ChshConfig>),
    ChshSweep(ChshSweepConfig),
    Instrument(Box<InstrumentConfig>),
    Gksl(Box<GkslConfig>),
    Lln(LlnConfig),
    G2(G2Config),
    Logic(LogicConfig),
    Jpd(JpdConfig),
}

pub const KINDS: &[&str] = &[
    "ftp",
    "ftp_random",
    "chsh",
    "chsh_sweep",
    "instrument",
    "gksl",
    "lln",
    "g2",
    "logic",
    "jpd",
];

impl ScenarioConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioConfig::Ftp(_) => "ftp",
            ScenarioConfig::FtpRandom(_) => "ftp_random",
            ScenarioConfig::Chsh(_) => "chsh",
            ScenarioConfig::ChshSweep(_) => "chsh_sweep",
            ScenarioConfig::Instrument(_) => "instrument",
            ScenarioConfig::Gksl(_) => "gksl",
            ScenarioConfig::Lln(_) => "lln",
            ScenarioConfig::G2(_) => "g2",
            ScenarioConfig::Logic(_) => "logic",
            ScenarioConfig::Jpd(_) => "jpd",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FtpConfig {
    pub state: QuantumState,
    pub first: ComplexMatrix,
    pub second: ComplexMatrix,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FtpRandomConfig {
    pub trials: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    pub seed: u64,
    /// Draw the second observable from the first one's eigenbasis.
    #[serde(default)]
    pub commuting: bool,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingPreset {
    Tsirelson,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SettingSpec {
    Preset(SettingPreset),
    Explicit(Box<CHSHSetting>),
}

impl SettingSpec {
    pub fn build(&self) -> CHSHSetting {
        match self {
            SettingSpec::Preset(SettingPreset::Tsirelson) => CHSHSetting::tsirelson(),
            SettingSpec::Explicit(s) => (**s).clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshConfig {
    pub setting: SettingSpec,
    /// Optional state at which the CHSH expectation is also reported.
    #[serde(default)]
    pub state: Option<QuantumState>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshSweepConfig {
    pub trials: usize,
    pub dim_a: usize,
    pub dim_b: usize,
    pub seed: u64,
    pub mode: SweepMode,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentPreset {
    CnotProbe,
    NoCoupling,
    SwapProbe,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum InstrumentSpec {
    Preset(InstrumentPreset),
    Explicit(Box<IndirectMeasurementModel>),
}

impl InstrumentSpec {
    pub fn build(&self) -> IndirectMeasurementModel {
        match self {
            InstrumentSpec::Preset(InstrumentPreset::CnotProbe) => IndirectMeasurementModel::cnot_probe(),
            InstrumentSpec::Preset(InstrumentPreset::NoCoupling) => IndirectMeasurementModel::no_coupling(),
            InstrumentSpec::Preset(InstrumentPreset::SwapProbe) => IndirectMeasurementModel::swap_probe(),
            InstrumentSpec::Explicit(m) => (**m).clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomModels {
    pub count: usize,
    pub max_system_dim: usize,
    pub max_probe_dim: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentConfig {
    pub model: InstrumentSpec,
    pub observable: ComplexMatrix,
    /// `(meter_outcome, system_outcome)` pairs.
    pub outcome_map: Vec<(f64, f64)>,
    pub grid: usize,
    /// Also check that outcome probabilities sum to one on random models.
    #[serde(default)]
    pub random_models: Option<RandomModels>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GkslPreset {
    Dephasing,
    AmplitudeDamping,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GkslPresetSpec {
    pub preset: GkslPreset,
    pub gamma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GkslModelSpec {
    Preset(GkslPresetSpec),
    Explicit(LindbladModel),
}

impl GkslModelSpec {
    pub fn build(&self) -> Result<LindbladModel> {
        match self {
            GkslModelSpec::Preset(p) => match p.preset {
                GkslPreset::Dephasing => LindbladModel::dephasing(p.gamma),
                GkslPreset::AmplitudeDamping => LindbladModel::amplitude_damping(p.gamma),
            },
            GkslModelSpec::Explicit(m) => Ok(m.clone()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderCheck {
    pub t_final: f64,
    pub dt: f64,
    pub halvings: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GkslConfig {
    pub model: GkslModelSpec,
    pub rho0: QuantumState,
    pub observable: ComplexMatrix,
    #[serde(default)]
    pub order_check: Option<OrderCheck>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlnConfig {
    pub pairs: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    pub n_grid: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2Config {
    pub windows: usize,
    pub mean_count: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogicConfig {
    /// Atom counts are reported for tensor families of `1..=max_qubits` qubits.
    pub max_qubits: usize,
    pub commuting_triples: usize,
    pub random_triples: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JpdConfig {
    pub trials: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    /// Observables per family; the first two are non-degenerate.
    pub family_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub config: ScenarioConfig,
    pub expected: Vec<Expectation>,
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::ConfigInvalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn parse_at<T: DeserializeOwned>(prefix: &str, value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { prefix.to_string() } else { format!("{prefix}.{path}") };
        invalid(field, e.inner().to_string())
    })
}

fn need(cond: bool, field: &str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(invalid(format!("config.{field}"), reason))
    }
}

fn check_dims(min: usize, max: usize) -> Result<()> {
    need(min >= 2, "dim_min", "must be at least 2")?;
    need(max >= min, "dim_max", "must be at least dim_min")
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| invalid("<document>", e.to_string()))?;
        let raw: RawScenario = parse_at("scenario", value)?;
        let config = match raw.kind.as_str() {
            "ftp" => ScenarioConfig::Ftp(parse_at("config", raw.config)?),
            "ftp_random" => {
                let c: FtpRandomConfig = parse_at("config", raw.config)?;
                check_dims(c.dim_min, c.dim_max)?;
                ScenarioConfig::FtpRandom(c)
            }
            "chsh" => ScenarioConfig::Chsh(Box::new(parse_at("config", raw.config)?)),
            "chsh_sweep" => {
                let c: ChshSweepConfig = parse_at("config", raw.config)?;
                need(c.dim_a >= 2, "dim_a", "must be at least 2")?;
                need(c.dim_b >= 2, "dim_b", "must be at least 2")?;
                ScenarioConfig::ChshSweep(c)
            }
            "instrument" => {
                let c: InstrumentConfig = parse_at("config", raw.config)?;
                need(c.grid > 0, "grid", "must be positive")?;
                if let Some(r) = &c.random_models {
                    need(r.max_system_dim >= 2, "random_models.max_system_dim", "must be at least 2")?;
                    need(r.max_probe_dim >= 2, "random_models.max_probe_dim", "must be at least 2")?;
                }
                ScenarioConfig::Instrument(Box::new(c))
            }
            "gksl" => {
                let c: GkslConfig = parse_at("config", raw.config)?;
                if let Some(o) = &c.order_check {
                    need(o.dt > 0.0 && o.t_final > 0.0, "order_check", "dt and t_final must be positive")?;
                    need(o.halvings >= 1, "order_check.halvings", "must be at least 1")?;
                }
                ScenarioConfig::Gksl(Box::new(c))
            }
            "lln" => {
                let c: LlnConfig = parse_at("config", raw.config)?;
                check_dims(c.dim_min, c.dim_max)?;
                ScenarioConfig::Lln(c)
            }
            "g2" => {
                let c: G2Config = parse_at("config", raw.config)?;
                need(c.windows > 0, "windows", "must be positive")?;
                need(c.mean_count > 0.0, "mean_count", "must be positive")?;
                ScenarioConfig::G2(c)
            }
            "logic" => {
                let c: LogicConfig = parse_at("config", raw.config)?;
                check_dims(c.dim_min, c.dim_max)?;
                need(c.max_qubits <= 12, "max_qubits", "at most 12 (4096-dimensional space)")?;
                ScenarioConfig::Logic(c)
            }
            "jpd" => {
                let c: JpdConfig = parse_at("config", raw.config)?;
                check_dims(c.dim_min, c.dim_max)?;
                need(c.family_size >= 2, "family_size", "must be at least 2")?;
                ScenarioConfig::Jpd(c)
            }
            other => {
                return Err(invalid(
                    "kind",
                    format!("unknown kind `{other}`; expected one of {}", KINDS.join(", ")),
                ))
            }
        };
        for (i, e) in raw.expected.iter().enumerate() {
            if e.tol < 0.0 || !e.tol.is_finite() {
                return Err(invalid(format!("expected[{i}].tol"), "must be finite and non-negative"));
            }
        }
        Ok(Scenario {
            name: raw.name,
            description: raw.description,
            config,
            expected: raw.expected,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn kind(&self) -> &'static str {
        self.config.kind()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub kind: String,
    pub description: String,
}

/// Names, kinds and one-line descriptions of the bundled scenarios.
pub fn list_scenarios() -> Vec<CatalogEntry> {
    BUNDLED
        .iter()
        .map(|(name, text)| {
            let s = Scenario::from_json(text).expect("bundled scenarios are valid");
            CatalogEntry {
                name: name.to_string(),
                kind: s.kind().to_string(),
                description: s.description,
            }
        })
        .collect()
}

/// A bundled scenario by name.
pub fn bundled(name: &str) -> Option<Scenario> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Scenario::from_json(text).expect("bundled scenarios are valid"))
}

#[derive(Debug, Clone, Serialize)]
pub struct AssertionOutcome {
    pub quantity: String,
    pub measured: Value,
    pub expected: Value,
    pub tol: f64,
    pub cmp: Comparison,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub kind: String,
    pub passed: bool,
    pub assertions: Vec<AssertionOutcome>,
    pub quantities: BTreeMap<String, Value>,
}

impl ScenarioReport {
    /// One line per assertion, then an overall verdict.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.assertions {
            out.push_str(&format!(
                "{} {}: measured={} expected={} tol={} cmp={}\n",
                if a.pass { "PASS" } else { "FAIL" },
                a.quantity,
                a.measured.render(),
                a.expected.render(),
                sig(a.tol),
                match a.cmp {
                    Comparison::Approx => "approx",
                    Comparison::AtMost => "at_most",
                    Comparison::AtLeast => "at_least",
                }
            ));
        }
        out.push_str(&format!(
            "{}: {} ({} assertions)\n",
            self.scenario,
            if self.passed { "PASS" } else { "FAIL" },
            self.assertions.len()
        ));
        out
    }
}

type Quantities = BTreeMap<String, Value>;

/// Runs the scenario and evaluates its assertions.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioReport> {
    run_scenario_with(s, Execution::default())
}

pub fn run_scenario_with(s: &Scenario, exec: Execution) -> Result<ScenarioReport> {
    let quantities = compute(&s.config, exec)?;
    let mut assertions = Vec::with_capacity(s.expected.len());
    for (i, e) in s.expected.iter().enumerate() {
        let Some(&measured) = quantities.get(&e.quantity) else {
            let available: Vec<&str> = quantities.keys().map(String::as_str).collect();
            return Err(invalid(
                format!("expected[{i}].quantity"),
                format!("`{}` is not computed by this scenario; available: {}", e.quantity, available.join(", ")),
            ));
        };
        assertions.push(AssertionOutcome {
            quantity: e.quantity.clone(),
            measured,
            expected: e.expected,
            tol: e.tol,
            cmp: e.cmp,
            pass: e.check(measured),
        });
    }
    Ok(ScenarioReport {
        scenario: s.name.clone(),
        kind: s.kind().to_string(),
        passed: assertions.iter().all(|a| a.pass),
        assertions,
        quantities,
    })
}

/// `name(+1)` style label for a per-outcome quantity.
pub fn labelled(name: &str, outcome: f64) -> String {
    let sign = if outcome >= 0.0 { "+" } else { "" };
    format!("{name}({sign}{})", sig(outcome))
}

fn compute(config: &ScenarioConfig, exec: Execution) -> Result<Quantities> {
    match config {
        ScenarioConfig::Ftp(c) => run_ftp(c),
        ScenarioConfig::FtpRandom(c) => run_ftp_random(c, exec),
        ScenarioConfig::Chsh(c) => run_chsh(c),
        ScenarioConfig::ChshSweep(c) => run_chsh_sweep(c, exec),
        ScenarioConfig::Instrument(c) => run_instrument(c, exec),
        ScenarioConfig::Gksl(c) => run_gksl(c),
        ScenarioConfig::Lln(c) => run_lln(c, exec),
        ScenarioConfig::G2(c) => run_g2(c, exec),
        ScenarioConfig::Logic(c) => run_logic(c, exec),
        ScenarioConfig::Jpd(c) => run_jpd(c, exec),
    }
}

fn observable(field: &str, m: &ComplexMatrix) -> Result<HermitianObservable> {
    HermitianObservable::new(m.clone()).map_err(|e| invalid(format!("config.{field}"), e.to_string()))
}

fn run_ftp(c: &FtpConfig) -> Result<Quantities> {
    let a = observable("first", &c.first)?;
    let b = observable("second", &c.second)?;
    let mut q = Quantities::new();
    for &t in &c.targets {
        let d = quantum::quantum_ftp(&c.state, &a, &b, t)?;
        let t = d.target_outcome;
        q.insert(labelled("classical_part", t), d.classical_part.into());
        q.insert(labelled("interference_term", t), d.interference_term.into());
        q.insert(labelled("total", t), d.total.into());
    }
    q.insert("commutator_norm".into(), quantum::commutator_norm(&a, &b)?.into());
    Ok(q)
}

fn random_dim(r: &mut impl Rng, min: usize, max: usize) -> usize {
    r.random_range(min..=max)
}

/// One random FTP trial: `(|total - Tr ρP|, |classical + interference - total|, |interference|)`.
pub fn ftp_trial(seed: u64, trial: u64, dims: (usize, usize), commuting: bool) -> Result<(f64, f64, f64)> {
    let mut r = rng::stream(seed, trial);
    let d = random_dim(&mut r, dims.0, dims.1);
    let psi = QuantumState::pure(random::unit_vector(&mut r, d))?;
    let a_matrix = random::nondegenerate_hermitian(&mut r, d);
    let b_matrix = if commuting {
        random::commuting_partner(&mut r, &a_matrix)
    } else {
        random::nondegenerate_hermitian(&mut r, d)
    };
    let a = HermitianObservable::new(a_matrix)?;
    let b = HermitianObservable::new(b_matrix)?;
    let k = r.random_range(0..b.outcomes().len());
    let target = b.outcomes()[k];
    let dec = quantum::quantum_ftp(&psi, &a, &b, target)?;
    let direct = psi.density().trace_product(&b.spectrum().projectors()[k]).re;
    Ok((
        (dec.total - direct).abs(),
        (dec.classical_part + dec.interference_term - dec.total).abs(),
        dec.interference_term.abs(),
    ))
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn run_ftp_random(c: &FtpRandomConfig, exec: Execution) -> Result<Quantities> {
    let rows = par::try_map_indexed(c.trials, exec, |t| {
        ftp_trial(c.seed, t as u64, (c.dim_min, c.dim_max), c.commuting)
    })?;
    let mut q = Quantities::new();
    q.insert("trials".into(), c.trials.into());
    q.insert("max_total_defect".into(), max_of(rows.iter().map(|r| r.0)).into());
    q.insert("max_reconstruction_defect".into(), max_of(rows.iter().map(|r| r.1)).into());
    q.insert("max_abs_interference".into(), max_of(rows.iter().map(|r| r.2)).into());
    Ok(q)
}

fn run_chsh(c: &ChshConfig) -> Result<Quantities> {
    let setting = c.setting.build();
    let res = chsh::max_chsh(&setting);
    let (na, nb) = setting.commutator_norms();
    let mut q = Quantities::new();
    q.insert("bell_max".into(), res.bell_operator_max.into());
    q.insert("bell_eigenvalue".into(), res.bell_eigenvalue.into());
    q.insert("violated".into(), res.violated.into());
    q.insert("locally_incompatible".into(), res.locally_incompatible.into());
    q.insert("commutator_norm_a".into(), na.into());
    q.insert("commutator_norm_b".into(), nb.into());
    q.insert(
        "chsh_at_optimum".into(),
        chsh::chsh_value(&res.optimal_state, &setting)?.into(),
    );
    if let Some(state) = &c.state {
        q.insert("chsh_at_state".into(), chsh::chsh_value(state, &setting)?.into());
    }
    Ok(q)
}

fn run_chsh_sweep(c: &ChshSweepConfig, exec: Execution) -> Result<Quantities> {
    let rep = chsh::incompatibility_sweep_with(c.trials, (c.dim_a, c.dim_b), c.seed, c.mode, exec)?;
    let mut q = Quantities::new();
    q.insert("trials".into(), c.trials.into());
    q.insert("compatible_violations".into(), rep.compatible_violations().into());
    q.insert("compatible_trials".into(), (rep.contingency[0][0] + rep.contingency[0][1]).into());
    q.insert("incompatible_trials".into(), (rep.contingency[1][0] + rep.contingency[1][1]).into());
    q.insert("incompatible_violations".into(), rep.contingency[1][1].into());
    q.insert("max_bell".into(), max_of(rep.trials.iter().map(|t| t.bell_max)).into());
    q.insert(
        "max_bell_compatible".into(),
        max_of(rep.trials.iter().filter(|t| !t.locally_incompatible).map(|t| t.bell_max)).into(),
    );
    q.insert("necessity_holds".into(), rep.necessity_holds().into());
    if let Some(rate) = rep.sufficiency_rate {
        q.insert("sufficiency_rate".into(), rate.into());
    }
    Ok(q)
}

/// `|Σ_x q(x) - 1|` for one random model and random state.
pub fn instrument_sum_defect(seed: u64, k: u64, max_system: usize, max_probe: usize) -> Result<f64> {
    let mut r = rng::stream(seed, k);
    let ds = random_dim(&mut r, 2, max_system);
    let dk = random_dim(&mut r, 2, max_probe);
    let model = IndirectMeasurementModel::random(&mut r, ds, dk);
    let state = QuantumState::mixed(random::density(&mut r, ds))?;
    let mut total = 0.0;
    for &x in model.meter().outcomes() {
        total += instruments::outcome_probability(&model, &state, x)?;
    }
    Ok((total - 1.0).abs())
}

fn run_instrument(c: &InstrumentConfig, exec: Execution) -> Result<Quantities> {
    let model = c.model.build();
    let obs = observable("observable", &c.observable)?;
    let grid = instruments::default_state_grid(obs.dim(), c.grid);
    let rep = instruments::verify_projective_realization(&obs, &model, &c.outcome_map, &grid)?;
    let mut q = Quantities::new();
    q.insert("grid_size".into(), rep.grid_size.into());
    q.insert(
        "max_probability_deviation".into(),
        max_of(rep.rows.iter().map(|r| r.max_probability_deviation)).into(),
    );
    q.insert(
        "max_trace_distance".into(),
        max_of(rep.rows.iter().map(|r| r.max_trace_distance)).into(),
    );
    q.insert("realizes_luders".into(), rep.passed.into());
    if let Some(rm) = &c.random_models {
        let defects = par::try_map_indexed(rm.count, exec, |k| {
            instrument_sum_defect(rm.seed, k as u64, rm.max_system_dim, rm.max_probe_dim)
        })?;
        q.insert("random_models".into(), rm.count.into());
        q.insert("max_probability_sum_defect".into(), max_of(defects).into());
    }
    Ok(q)
}

/// Observed RK4 orders `log2(e_k / e_{k+1})` against the exact propagator.
pub fn rk4_orders(model: &LindbladModel, rho0: &QuantumState, t_final: f64, dt: f64, halvings: usize) -> Result<Vec<f64>> {
    let exact = gksl::exact_evolution(model, rho0, t_final)?;
    let mut errors = Vec::with_capacity(halvings + 1);
    for k in 0..=halvings {
        let h = dt / f64::from(1u32 << k);
        let traj = gksl::integrate(model, rho0, t_final, h)?;
        let last = &traj.last().expect("trajectory is non-empty").rho;
        errors.push((last - &exact).norm_max());
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

fn run_gksl(c: &GkslConfig) -> Result<Quantities> {
    let model = c.model.build().map_err(|e| invalid("config.model", e.to_string()))?;
    let obs = observable("observable", &c.observable)?;
    let rep = gksl::steady_state(&model, &obs, &c.rho0)?;
    let steady = &rep.steady_state;
    let mut born_defect: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for &(x, lambda) in &rep.eigen_populations {
        born_defect = born_defect.max((lambda - quantum::born_probability(steady, &obs, x)?).abs());
        drift = drift.max((lambda - quantum::born_probability(&c.rho0, &obs, x)?).abs());
    }
    let mut q = Quantities::new();
    q.insert("steady_residual".into(), rep.residual.into());
    q.insert("unique".into(), matches!(rep.uniqueness, gksl::Uniqueness::Unique).into());
    q.insert("diagonal_in_basis".into(), rep.diagonal_in_a_basis.into());
    q.insert("max_off_diagonal".into(), rep.max_off_diagonal.into());
    q.insert("population_born_defect".into(), born_defect.into());
    q.insert("population_drift".into(), drift.into());
    for &(x, lambda) in &rep.eigen_populations {
        q.insert(labelled("population", x), lambda.into());
    }
    if let Some(d) = rep.cross_check_distance {
        q.insert("cross_check_distance".into(), d.into());
    }
    if let (Some(rate), Some(r2)) = (rep.convergence_rate, rep.fit_quality) {
        q.insert("decay_rate".into(), rate.into());
        q.insert("fit_quality".into(), r2.into());
    }
    if let Some(o) = &c.order_check {
        let orders = rk4_orders(&model, &c.rho0, o.t_final, o.dt, o.halvings)?;
        q.insert("rk4_order_min".into(), orders.iter().copied().fold(f64::INFINITY, f64::min).into());
        q.insert("rk4_order_max".into(), orders.iter().copied().fold(f64::NEG_INFINITY, f64::max).into());
    }
    Ok(q)
}

/// One LLN pair: random state and non-degenerate observable, a random
/// outcome, and the frequency table over `n_grid`.
pub fn lln_pair(seed: u64, pair: u64, dims: (usize, usize), n_grid: &[usize]) -> Result<frequency::LlnTable> {
    let mut r = rng::stream(seed, pair);
    let d = random_dim(&mut r, dims.0, dims.1);
    let state = QuantumState::pure(random::unit_vector(&mut r, d))?;
    let obs = HermitianObservable::new(random::nondegenerate_hermitian(&mut r, d))?;
    let outcome = obs.outcomes()[r.random_range(0..d)];
    let sample_seed: u64 = r.random();
    frequency::lln_convergence(&state, &obs, outcome, n_grid, sample_seed)
}

fn run_lln(c: &LlnConfig, exec: Execution) -> Result<Quantities> {
    let tables = par::try_map_indexed(c.pairs, exec, |k| {
        lln_pair(c.seed, k as u64, (c.dim_min, c.dim_max), &c.n_grid)
    })?;
    let breaches: usize = tables.iter().map(frequency::LlnTable::breaches).sum();
    let worst = max_of(
        tables
            .iter()
            .flat_map(|t| t.rows.iter())
            .filter(|r| r.envelope > 0.0)
            .map(|r| r.deviation / r.envelope),
    );
    let mut q = Quantities::new();
    q.insert("pairs".into(), c.pairs.into());
    q.insert("breaches".into(), breaches.into());
    q.insert("max_deviation_over_envelope".into(), worst.into());
    Ok(q)
}

fn run_g2(c: &G2Config, exec: Execution) -> Result<Quantities> {
    let mut q = Quantities::new();
    for (name, source) in [
        ("g2_single_photon", SourceKind::SinglePhoton),
        ("g2_coherent", SourceKind::Coherent),
        ("g2_thermal", SourceKind::Thermal),
    ] {
        let clicks = frequency::simulate_clicks_with(source, c.windows, c.mean_count, c.seed, exec)?;
        q.insert(name.into(), frequency::g2_zero(&clicks)?.into());
    }
    Ok(q)
}

fn random_subspace(r: &mut impl Rng, d: usize) -> Result<Subspace> {
    let k = r.random_range(0..=d);
    let vs: Vec<Vec<Complex64>> = (0..k).map(|_| random::unit_vector(r, d)).collect();
    Subspace::from_vectors(d, &vs)
}

fn commuting_subspace(r: &mut impl Rng, u: &ComplexMatrix) -> Result<Subspace> {
    let d = u.dim();
    let cols: Vec<Vec<Complex64>> = (0..d).filter(|_| r.random_bool(0.5)).map(|k| u.column(k)).collect();
    Subspace::from_vectors(d, &cols)
}

/// Distributivity on a random triple; commuting triples share a random eigenbasis.
pub fn logic_triple(seed: u64, k: u64, dims: (usize, usize), commuting: bool) -> Result<logic::DistributivityReport> {
    let mut r = rng::stream(seed, k);
    let d = random_dim(&mut r, dims.0, dims.1);
    let (a, b, c) = if commuting {
        let u = random::unitary(&mut r, d);
        (
            commuting_subspace(&mut r, &u)?,
            commuting_subspace(&mut r, &u)?,
            commuting_subspace(&mut r, &u)?,
        )
    } else {
        (
            random_subspace(&mut r, d)?,
            random_subspace(&mut r, d)?,
            random_subspace(&mut r, d)?,
        )
    };
    logic::distributivity_check(&a, &b, &c)
}

/// Atom count of the `σz` family on `n` qubits.
pub fn tensor_family_atoms(n: usize) -> Result<usize> {
    let family = (0..n)
        .map(|k| HermitianObservable::new(logic::local_z(n, k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(logic::boolean_subalgebra(&family, quantum::COMPATIBILITY_TOL)?.atom_count())
}

fn run_logic(c: &LogicConfig, exec: Execution) -> Result<Quantities> {
    let mut q = Quantities::new();
    let (a, b, cc) = logic::canonical_triple();
    let rep = logic::distributivity_check(&a, &b, &cc)?;
    q.insert("canonical_equal".into(), rep.equal.into());
    q.insert("canonical_difference".into(), rep.difference.into());
    q.insert("canonical_lhs_rank".into(), rep.lhs.rank().into());
    q.insert("canonical_rhs_rank".into(), rep.rhs.rank().into());
    q.insert("canonical_lhs_distance_to_a".into(), rep.lhs.distance(&a)?.into());

    let dims = (c.dim_min, c.dim_max);
    let commuting = par::try_map_indexed(c.commuting_triples, exec, |k| logic_triple(c.seed, k as u64, dims, true))?;
    q.insert(
        "commuting_max_difference".into(),
        max_of(commuting.iter().map(|r| r.difference)).into(),
    );
    q.insert(
        "commuting_all_equal".into(),
        commuting.iter().all(|r| r.equal).into(),
    );
    let random_stream = c.seed.wrapping_add(1);
    let generic = par::try_map_indexed(c.random_triples, exec, |k| logic_triple(random_stream, k as u64, dims, false))?;
    q.insert(
        "max_ordering_defect".into(),
        max_of(commuting.iter().chain(&generic).map(|r| r.ordering_defect)).into(),
    );
    q.insert(
        "random_unequal".into(),
        generic.iter().filter(|r| !r.equal).count().into(),
    );

    let mut all_match = true;
    for n in 1..=c.max_qubits {
        let atoms = tensor_family_atoms(n)?;
        all_match &= atoms == 1 << n;
        q.insert(format!("atoms(n={n})"), atoms.into());
    }
    q.insert("atoms_match_power_of_two".into(), all_match.into());
    Ok(q)
}

/// Jpd bridge on one random commuting family: returns
/// `(max marginal defect, max |classical FTP - quantum total|, max |interference|)`.
pub fn jpd_trial(seed: u64, trial: u64, dims: (usize, usize), family_size: usize) -> Result<(f64, f64, f64)> {
    let mut r = rng::stream(seed, trial);
    let d = random_dim(&mut r, dims.0, dims.1);
    let u = random::unitary(&mut r, d);
    let family = (0..family_size)
        .map(|k| {
            let values: Vec<f64> = if k < 2 {
                random::distinct_values(&mut r, d)
            } else {
                (0..d).map(|_| f64::from(r.random_range(0..3u8)) - 1.0).collect()
            };
            HermitianObservable::new(random::with_spectrum(&u, &values))
        })
        .collect::<Result<Vec<_>>>()?;
    let psi = QuantumState::pure(random::unit_vector(&mut r, d))?;
    let jpd = quantum::jpd_for_compatible(&psi, &family, quantum::COMPATIBILITY_TOL)?;

    let mut marginal_defect: f64 = 0.0;
    for (name, obs) in jpd.variables().to_vec().iter().zip(&family) {
        let m = jpd.marginal(&[name.as_str()])?;
        for (x, p) in quantum::born_distribution(&psi, obs)? {
            marginal_defect = marginal_defect.max((m.probability(&[x]) - p).abs());
        }
    }
    let (space, vars) = jpd.to_space()?;
    let mut ftp_defect: f64 = 0.0;
    let mut interference: f64 = 0.0;
    for &target in family[1].outcomes() {
        let dec = quantum::quantum_ftp(&psi, &family[0], &family[1], target)?;
        let classical = space.classical_ftp(&vars[0], &vars[1], target)?;
        ftp_defect = ftp_defect.max((classical - dec.total).abs());
        interference = interference.max(dec.interference_term.abs());
    }
    Ok((marginal_defect, ftp_defect, interference))
}

fn run_jpd(c: &JpdConfig, exec: Execution) -> Result<Quantities> {
    let rows = par::try_map_indexed(c.trials, exec, |t| {
        jpd_trial(c.seed, t as u64, (c.dim_min, c.dim_max), c.family_size)
    })?;
    let mut q = Quantities::new();
    q.insert("trials".into(), c.trials.into());
    q.insert("max_marginal_defect".into(), max_of(rows.iter().map(|r| r.0)).into());
    q.insert("max_ftp_defect".into(), max_of(rows.iter().map(|r| r.1)).into());
    q.insert("max_abs_interference".into(), max_of(rows.iter().map(|r| r.2)).into());
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    const REQUIRED: &[&str] = &[
        "ftp-plus-state",
        "ftp-commuting-null",
        "chsh-tsirelson",
        "chsh-compatible-cap",
        "instrument-cnot-luders",
        "gksl-dephasing",
        "lln-envelope",
        "g2-separation",
        "logic-distributivity",
    ];

    #[test]
    fn catalog_contains_required_names() {
        let names: Vec<String> = list_scenarios().into_iter().map(|e| e.name).collect();
        assert!(names.len() >= 9);
        for r in REQUIRED {
            assert!(names.iter().any(|n| n == r), "missing {r}");
        }
    }

    #[test]
    fn bundled_names_match_file_contents() {
        for (name, text) in BUNDLED {
            assert_eq!(Scenario::from_json(text).unwrap().name, *name);
        }
    }

    #[test]
    fn plus_state_interference() {
        let rep = run_scenario(&bundled("ftp-plus-state").unwrap()).unwrap();
        assert!(rep.passed, "{}", rep.to_text());
        let plus = rep.quantities["interference_term(+1)"].as_f64().unwrap();
        let minus = rep.quantities["interference_term(-1)"].as_f64().unwrap();
        assert!((plus - 0.5).abs() <= 1e-10);
        assert!((minus + 0.5).abs() <= 1e-10);
    }

    #[test]
    fn tsirelson_scenario() {
        let rep = run_scenario(&bundled("chsh-tsirelson").unwrap()).unwrap();
        assert!(rep.passed, "{}", rep.to_text());
        let v = rep.quantities["bell_max"].as_f64().unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() <= 1e-8);
    }

    #[test]
    fn empty_assertion_list_passes() {
        let s = Scenario::from_json(
            r#"{"name":"empty","description":"no checks","kind":"chsh","config":{"setting":"tsirelson"}}"#,
        )
        .unwrap();
        let rep = run_scenario(&s).unwrap();
        assert!(rep.passed);
        assert!(rep.assertions.is_empty());
    }

    #[test]
    fn config_errors_name_the_field() {
        let err = Scenario::from_json(
            r#"{"name":"x","description":"y","kind":"chsh_sweep","config":{"trials":"many","dim_a":2,"dim_b":2,"seed":1,"mode":"unrestricted"}}"#,
        )
        .unwrap_err();
        match err {
            Error::ConfigInvalid { field, .. } => assert_eq!(field, "config.trials"),
            e => panic!("unexpected {e:?}"),
        }
        let err = Scenario::from_json(r#"{"name":"x","description":"y","kind":"bogus"}"#).unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { ref field, .. } if field == "kind"));
        let err = Scenario::from_json(
            r#"{"name":"x","description":"y","kind":"g2","config":{"windows":10,"mean_count":1,"seed":1,"extra":0}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { ref field, .. } if field.starts_with("config")));
        let s = Scenario::from_json(
            r#"{"name":"x","description":"y","kind":"chsh","config":{"setting":"tsirelson"},"expected":[{"quantity":"nope","expected":1}]}"#,
        )
        .unwrap();
        assert!(matches!(run_scenario(&s), Err(Error::ConfigInvalid { ref field, .. }) if field == "expected[0].quantity"));
    }

    #[test]
    fn failing_assertion_is_reported() {
        let s = Scenario::from_json(
            r#"{"name":"x","description":"y","kind":"chsh","config":{"setting":"tsirelson"},
               "expected":[{"quantity":"bell_max","expected":2,"cmp":"at_most","tol":1e-8},
                           {"quantity":"violated","expected":true}]}"#,
        )
        .unwrap();
        let rep = run_scenario(&s).unwrap();
        assert!(!rep.passed);
        assert!(!rep.assertions[0].pass);
        assert!(rep.assertions[1].pass);
    }

    #[test]
    fn reports_are_reproducible_and_schedule_independent() {
        for name in ["chsh-compatible-cap", "g2-separation", "ftp-commuting-null"] {
            let s = bundled(name).unwrap();
            let a = serde_json::to_string(&run_scenario_with(&s, Execution::Sequential).unwrap()).unwrap();
            let b = serde_json::to_string(&run_scenario_with(&s, Execution::Parallel).unwrap()).unwrap();
            let c = serde_json::to_string(&run_scenario_with(&s, Execution::Parallel).unwrap()).unwrap();
            assert_eq!(a, b);
            assert_eq!(b, c);
        }
    }

    #[test]
    fn every_bundled_scenario_passes() {
        for entry in list_scenarios() {
            let rep = run_scenario(&bundled(&entry.name).unwrap()).unwrap();
            assert!(rep.passed, "{}", rep.to_text());
        }
    }

    #[test]
    fn labels() {
        assert_eq!(labelled("total", 1.0), "total(+1)");
        assert_eq!(labelled("total", -1.0), "total(-1)");
        assert_eq!(labelled("total", 0.0), "total(+0)");
    }
}
