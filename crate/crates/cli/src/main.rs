use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use qprob::chsh::{self, SweepMode};
use qprob::format::sig;
use qprob::frequency::{self, SourceKind};
use qprob::gksl::{self, LindbladModel};
use qprob::instruments::{self, IndirectMeasurementModel};
use qprob::logic;
use qprob::quantum::{self, HermitianObservable, QuantumState};
use qprob::scenarios::{self, Scenario};
use qprob::Error;

#[derive(Parser)]
#[command(name = "qprob", version, about = "Classical and quantum probability experiments")]
struct Cli {
    /// Seed for every random draw; required by sampling subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output format for tables and reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Unrestricted,
    CompatibleAlice,
    CompatibleBob,
    CompatibleEither,
}

impl From<Mode> for SweepMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Unrestricted => SweepMode::Unrestricted,
            Mode::CompatibleAlice => SweepMode::CompatibleAlice,
            Mode::CompatibleBob => SweepMode::CompatibleBob,
            Mode::CompatibleEither => SweepMode::CompatibleEither,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    SinglePhoton,
    Coherent,
    Thermal,
}

impl From<Source> for SourceKind {
    fn from(s: Source) -> Self {
        match s {
            Source::SinglePhoton => SourceKind::SinglePhoton,
            Source::Coherent => SourceKind::Coherent,
            Source::Thermal => SourceKind::Thermal,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classical versus quantum total probability for one state and two observables.
    FtpCompare {
        #[arg(long)]
        state: PathBuf,
        /// Observable split over (its eigenbasis indexes the classical sum).
        #[arg(long = "a")]
        first: PathBuf,
        /// Observable whose outcome probability is decomposed.
        #[arg(long = "b")]
        second: PathBuf,
        /// Outcomes of the second observable; all of them when omitted.
        #[arg(long = "target", allow_negative_numbers = true)]
        targets: Vec<f64>,
    },
    /// Random CHSH settings: commutator norms against the Bell-operator maximum.
    ChshSweep {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 2)]
        dim_a: usize,
        #[arg(long, default_value_t = 2)]
        dim_b: usize,
        #[arg(long, value_enum, default_value_t = Mode::Unrestricted)]
        mode: Mode,
    },
    /// Checks that an indirect measurement model realizes a Lüders instrument.
    InstrumentCheck {
        /// Model file, or one of cnot_probe, no_coupling, swap_probe.
        #[arg(long, default_value = "cnot_probe")]
        model: String,
        #[arg(long)]
        observable: PathBuf,
        /// Meter-to-system outcome pairs, e.g. `0:1,1:-1`.
        #[arg(long, allow_hyphen_values = true)]
        map: String,
        #[arg(long, default_value_t = 20)]
        grid: usize,
    },
    /// RK4 trajectory of a GKSL model.
    GkslRun {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        rho0: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        dt: f64,
    },
    /// Steady state of a GKSL model read out in an observable's eigenbasis.
    GkslSteady {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        rho0: PathBuf,
        #[arg(long)]
        observable: PathBuf,
    },
    /// Empirical frequency of one outcome against the binomial envelope.
    LlnSample {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        observable: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        outcome: f64,
        /// Comma-separated, strictly increasing sample sizes.
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
        n_grid: Vec<usize>,
    },
    /// Zero-delay coincidence ratio for simulated click records.
    G2Demo {
        /// Sources to simulate; all when omitted.
        #[arg(long = "source", value_enum)]
        sources: Vec<Source>,
        #[arg(long, default_value_t = 100_000)]
        windows: usize,
        #[arg(long, default_value_t = 1.0)]
        mean_count: f64,
    },
    /// Distributivity counterexample and Boolean atom growth.
    LogicDemo {
        #[arg(long, default_value_t = 10)]
        max_qubits: usize,
    },
    /// Runs a bundled scenario (by name) or a scenario file.
    Run {
        #[arg(long)]
        scenario: String,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lists the bundled scenarios.
    List,
}

/// Failure classes mapped to exit codes.
enum Failure {
    /// A check or assertion did not hold (exit 1).
    Assertion(String),
    /// Bad input, configuration or I/O (exit 2).
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericalIntegrity(_) => Failure::Assertion(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<Output, Failure>;

/// Text for stdout plus whether every check passed.
struct Output {
    text: String,
    ok: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, ok: true }
    }
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn require_seed(seed: Option<u64>, command: &str) -> Result<u64, Failure> {
    seed.ok_or_else(|| Failure::Usage(format!("`{command}` samples random numbers and needs --seed")))
}

fn parse_map(spec: &str) -> Result<Vec<(f64, f64)>, Failure> {
    spec.split(',')
        .map(|pair| {
            let (m, s) = pair
                .split_once(':')
                .ok_or_else(|| Failure::Usage(format!("--map entry `{pair}` is not meter:system")))?;
            let parse = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| Failure::Usage(format!("--map value `{x}` is not a number")))
            };
            Ok((parse(m)?, parse(s)?))
        })
        .collect()
}

fn csv_rows(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn ftp_compare(format: Format, state: &Path, first: &Path, second: &Path, targets: &[f64]) -> Outcome {
    let state: QuantumState = load(state)?;
    let a: HermitianObservable = load(first)?;
    let b: HermitianObservable = load(second)?;
    let targets = if targets.is_empty() { b.outcomes().to_vec() } else { targets.to_vec() };
    let decs = targets
        .iter()
        .map(|&t| quantum::quantum_ftp(&state, &a, &b, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Output::ok(match format {
        Format::Json => to_json(&decs),
        Format::Csv => csv_rows(
            "target,classical_part,interference_term,total",
            decs.iter().map(|d| {
                vec![
                    sig(d.target_outcome),
                    sig(d.classical_part),
                    sig(d.interference_term),
                    sig(d.total),
                ]
            }),
        ),
    }))
}

fn chsh_sweep(format: Format, seed: u64, trials: usize, dims: (usize, usize), mode: SweepMode) -> Outcome {
    let rep = chsh::incompatibility_sweep(trials, dims, seed, mode)?;
    let ok = rep.necessity_holds();
    if !ok {
        eprintln!(
            "compatible settings violated the classical bound in {} trials",
            rep.compatible_violations()
        );
    }
    let text = match format {
        Format::Json => to_json(&rep),
        Format::Csv => rep.to_csv(),
    };
    Ok(Output { text, ok })
}

fn instrument_model(spec: &str) -> Result<IndirectMeasurementModel, Failure> {
    match spec {
        "cnot_probe" => Ok(IndirectMeasurementModel::cnot_probe()),
        "no_coupling" => Ok(IndirectMeasurementModel::no_coupling()),
        "swap_probe" => Ok(IndirectMeasurementModel::swap_probe()),
        path => load(Path::new(path)),
    }
}

fn instrument_check(format: Format, model: &str, observable: &Path, map: &str, grid: usize) -> Outcome {
    let model = instrument_model(model)?;
    let obs: HermitianObservable = load(observable)?;
    let map = parse_map(map)?;
    let states = instruments::default_state_grid(obs.dim(), grid);
    let rep = instruments::verify_projective_realization(&obs, &model, &map, &states)?;
    let text = match format {
        Format::Json => to_json(&rep),
        Format::Csv => csv_rows(
            "meter_outcome,system_outcome,max_probability_deviation,max_trace_distance",
            rep.rows.iter().map(|r| {
                vec![
                    sig(r.meter_outcome),
                    sig(r.system_outcome),
                    sig(r.max_probability_deviation),
                    sig(r.max_trace_distance),
                ]
            }),
        ),
    };
    Ok(Output { text, ok: rep.passed })
}

fn gksl_run(format: Format, model: &Path, rho0: &Path, t: f64, dt: f64) -> Outcome {
    let model: LindbladModel = load(model)?;
    let rho0: QuantumState = load(rho0)?;
    let traj = gksl::integrate(&model, &rho0, t, dt)?;
    if format == Format::Json {
        return Ok(Output::ok(to_json(&traj)));
    }
    let (steady, _) = gksl::find_steady_state(&model, &rho0)?;
    let d = model.dim();
    let mut header = vec!["t".to_string()];
    header.extend((0..d).map(|i| format!("population_{i}")));
    for i in 0..d {
        for k in i + 1..d {
            header.push(format!("coherence_{i}{k}"));
        }
    }
    header.push("distance_to_steady".into());
    let rows = traj.iter().map(|p| {
        let (pops, off, dist) = gksl::point_summary(&p.rho, &steady);
        let mut row = vec![sig(p.t)];
        row.extend(pops.into_iter().map(sig));
        row.extend(off.into_iter().map(sig));
        row.push(sig(dist));
        row
    });
    Ok(Output::ok(csv_rows(&header.join(","), rows)))
}

fn gksl_steady(format: Format, model: &Path, rho0: &Path, observable: &Path) -> Outcome {
    let model: LindbladModel = load(model)?;
    let rho0: QuantumState = load(rho0)?;
    let obs: HermitianObservable = load(observable)?;
    let rep = gksl::steady_state(&model, &obs, &rho0)?;
    let text = match format {
        Format::Json => to_json(&rep),
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = vec![
                vec!["residual".into(), sig(rep.residual)],
                vec![
                    "unique".into(),
                    matches!(rep.uniqueness, gksl::Uniqueness::Unique).to_string(),
                ],
                vec!["diagonal_in_basis".into(), rep.diagonal_in_a_basis.to_string()],
                vec!["max_off_diagonal".into(), sig(rep.max_off_diagonal)],
            ];
            if let gksl::Uniqueness::NonUnique { null_dimension } = rep.uniqueness {
                rows.push(vec!["null_dimension".into(), null_dimension.to_string()]);
            }
            for (x, p) in &rep.eigen_populations {
                rows.push(vec![scenarios::labelled("population", *x), sig(*p)]);
            }
            if let Some(d) = rep.cross_check_distance {
                rows.push(vec!["cross_check_distance".into(), sig(d)]);
            }
            if let (Some(rate), Some(r2)) = (rep.convergence_rate, rep.fit_quality) {
                rows.push(vec!["convergence_rate".into(), sig(rate)]);
                rows.push(vec!["fit_quality".into(), sig(r2)]);
            }
            csv_rows("quantity,value", rows)
        }
    };
    Ok(Output::ok(text))
}

fn lln_sample(format: Format, seed: u64, state: &Path, observable: &Path, outcome: f64, n_grid: &[usize]) -> Outcome {
    let state: QuantumState = load(state)?;
    let obs: HermitianObservable = load(observable)?;
    let table = frequency::lln_convergence(&state, &obs, outcome, n_grid, seed)?;
    Ok(Output::ok(match format {
        Format::Json => to_json(&table),
        Format::Csv => table.to_csv(),
    }))
}

#[derive(Serialize)]
struct G2Row {
    source: SourceKind,
    windows: usize,
    mean_count: f64,
    g2_zero: f64,
}

fn g2_demo(format: Format, seed: u64, sources: &[Source], windows: usize, mean_count: f64) -> Outcome {
    let sources: Vec<SourceKind> = if sources.is_empty() {
        vec![SourceKind::SinglePhoton, SourceKind::Coherent, SourceKind::Thermal]
    } else {
        sources.iter().map(|&s| s.into()).collect()
    };
    let rows = sources
        .into_iter()
        .map(|source| {
            let clicks = frequency::simulate_clicks(source, windows, mean_count, seed)?;
            Ok(G2Row {
                source,
                windows,
                mean_count,
                g2_zero: frequency::g2_zero(&clicks)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(Output::ok(match format {
        Format::Json => to_json(&rows),
        Format::Csv => csv_rows(
            "source,windows,mean_count,g2_zero",
            rows.iter().map(|r| {
                let name = serde_json::to_value(r.source).expect("enum serializes");
                vec![
                    name.as_str().unwrap_or_default().to_string(),
                    r.windows.to_string(),
                    sig(r.mean_count),
                    sig(r.g2_zero),
                ]
            }),
        ),
    }))
}

#[derive(Serialize)]
struct GrowthRow {
    n: usize,
    atom_count: usize,
    wall_time_s: f64,
}

fn logic_demo(format: Format, max_qubits: usize) -> Outcome {
    if max_qubits > 12 {
        return Err(Failure::Usage("--max-qubits is limited to 12".into()));
    }
    let (a, b, c) = logic::canonical_triple();
    let rep = logic::distributivity_check(&a, &b, &c)?;
    let mut canonical = BTreeMap::new();
    canonical.insert("equal", rep.equal.to_string());
    canonical.insert("lhs_rank", rep.lhs.rank().to_string());
    canonical.insert("rhs_rank", rep.rhs.rank().to_string());
    canonical.insert("difference", sig(rep.difference));
    canonical.insert("ordering_defect", sig(rep.ordering_defect));
    let mut growth = Vec::new();
    let mut ok = !rep.equal;
    for n in 1..=max_qubits {
        let start = Instant::now();
        let atoms = scenarios::tensor_family_atoms(n)?;
        let wall = start.elapsed().as_secs_f64();
        ok &= atoms == 1 << n;
        growth.push(GrowthRow {
            n,
            atom_count: atoms,
            wall_time_s: wall,
        });
    }
    let text = match format {
        Format::Json => to_json(&serde_json::json!({
            "canonical_triple": canonical,
            "atom_growth": growth,
        })),
        Format::Csv => {
            let mut out = csv_rows(
                "quantity,value",
                canonical.iter().map(|(k, v)| vec![k.to_string(), v.clone()]),
            );
            out.push('\n');
            out.push_str(&csv_rows(
                "n,atom_count,wall_time_s",
                growth
                    .iter()
                    .map(|g| vec![g.n.to_string(), g.atom_count.to_string(), sig(g.wall_time_s)]),
            ));
            out
        }
    };
    Ok(Output { text, ok })
}

fn run(format: Format, name: &str, out: Option<&Path>) -> Outcome {
    let scenario = match scenarios::bundled(name) {
        Some(s) => s,
        None if Path::new(name).is_file() => Scenario::from_file(Path::new(name))?,
        None => {
            return Err(Failure::Usage(format!(
                "no bundled scenario or file named `{name}`; see `qprob list`"
            )))
        }
    };
    let rep = scenarios::run_scenario(&scenario)?;
    if let Some(path) = out {
        std::fs::write(path, to_json(&rep)).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    let text = match format {
        Format::Json => to_json(&rep),
        Format::Csv => rep.to_text(),
    };
    Ok(Output { text, ok: rep.passed })
}

fn list(format: Format) -> Outcome {
    let entries = scenarios::list_scenarios();
    Ok(Output::ok(match format {
        Format::Json => to_json(&entries),
        Format::Csv => csv_rows(
            "name,kind,description",
            entries.iter().map(|e| {
                vec![
                    e.name.clone(),
                    e.kind.clone(),
                    format!("\"{}\"", e.description.replace('"', "\"\"")),
                ]
            }),
        ),
    }))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("QPROB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("QPROB_THREADS must be a positive integer, got `{value}`")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot size the thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn dispatch(cli: Cli) -> Outcome {
    configure_threads()?;
    let f = cli.format;
    match cli.command {
        Command::FtpCompare {
            state,
            first,
            second,
            targets,
        } => ftp_compare(f, &state, &first, &second, &targets),
        Command::ChshSweep {
            trials,
            dim_a,
            dim_b,
            mode,
        } => chsh_sweep(f, require_seed(cli.seed, "chsh-sweep")?, trials, (dim_a, dim_b), mode.into()),
        Command::InstrumentCheck {
            model,
            observable,
            map,
            grid,
        } => instrument_check(f, &model, &observable, &map, grid),
        Command::GkslRun { model, rho0, t, dt } => gksl_run(f, &model, &rho0, t, dt),
        Command::GkslSteady { model, rho0, observable } => gksl_steady(f, &model, &rho0, &observable),
        Command::LlnSample {
            state,
            observable,
            outcome,
            n_grid,
        } => lln_sample(f, require_seed(cli.seed, "lln-sample")?, &state, &observable, outcome, &n_grid),
        Command::G2Demo {
            sources,
            windows,
            mean_count,
        } => g2_demo(f, require_seed(cli.seed, "g2-demo")?, &sources, windows, mean_count),
        Command::LogicDemo { max_qubits } => logic_demo(f, max_qubits),
        Command::Run { scenario, out } => run(f, &scenario, out.as_deref()),
        Command::List => list(f),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(out) => {
            print!("{}", out.text);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
