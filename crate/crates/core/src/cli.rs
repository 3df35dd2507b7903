//! Command-line front end.
//!
//! Exit codes: 0 pass, 1 a violation was found, 2 operational error,
//! 64 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dynamics::{audit_with_probes, canonical_witness, DynamicalMap, Verdict, DEFAULT_AUDIT_TOL};
use crate::error::{Error, Result};
use crate::gpt::{gpt_convex_linearity_check, DEFAULT_GPT_TOL};
use crate::kernel::{ComplexMatrix, C64};
use crate::lab::{run_friend_protocol, search_best_protocol, LabScenario, LdVerdict, MapFamily, DEFAULT_LD_THRESHOLD};
use crate::measurements::{build_ic_povm, Povm};
use crate::suite::run_paper_suite;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "qlab", version, about = "Convex-linearity audits, IC tomography and Wigner's-friend protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Informationally-complete POVMs.
    #[command(subcommand)]
    Ic(IcCommand),
    /// Dynamical maps.
    #[command(subcommand)]
    Map(MapCommand),
    /// Checks on IC probability vectors.
    #[command(subcommand)]
    Gpt(GptCommand),
    /// Sealed-laboratory scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
    /// Run every built-in check and write a pass/fail summary.
    PaperSuite(SuiteArgs),
}

#[derive(Debug, Subcommand)]
enum IcCommand {
    /// Build a seeded IC POVM and write it as JSON.
    Build {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Subcommand)]
enum MapCommand {
    /// Look for mixtures on which the map is not convex-linear.
    Audit(AuditArgs),
}

#[derive(Debug, Subcommand)]
enum GptCommand {
    /// Convex-linearity of the induced map on IC probability vectors.
    Check(GptArgs),
}

#[derive(Debug, Subcommand)]
enum ScenarioCommand {
    /// Run a friend protocol (and optionally a protocol search).
    Run {
        /// Scenario config JSON.
        #[arg(long)]
        config: PathBuf,
        /// CSV file for one row per evaluated protocol.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    /// Map descriptor JSON.
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_AUDIT_TOL)]
    tol: f64,
    /// Also test the ensemble {1/2 : |0><0|, 1/2 : |+><+|}.
    #[arg(long)]
    include_witness: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct GptArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_GPT_TOL)]
    tol: f64,
    /// Seed of the IC frame; defaults to --seed.
    #[arg(long)]
    ic_seed: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra map descriptors to put through the invariant check.
    #[arg(long = "extra-map")]
    extra_maps: Vec<PathBuf>,
    /// Summary path. Timings go to `<out>.timing.json`.
    #[command(flatten)]
    out: OutArgs,
}

/// SHA-256 of the compact JSON form. Object keys serialize sorted, so equal
/// configs hash equally regardless of input key order.
pub fn config_hash(config: &Value) -> String {
    let text = serde_json::to_string(config).expect("values serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

fn emit(out: &OutArgs, command: &str, config: Value, report: impl Serialize) -> Result<()> {
    let doc = json!({
        "command": command,
        "config_hash": config_hash(&config),
        "config": config,
        "report": serde_json::to_value(report)?,
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    match &out.out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn load_map(path: &Path) -> Result<(Value, DynamicalMap)> {
    let v = read_json(path)?;
    let map = serde_json::from_value(v.clone()).map_err(|e| Error::InvalidMap(e.to_string()))?;
    Ok((v, map))
}

fn verdict_exit(v: Verdict) -> i32 {
    match v {
        Verdict::ConvexLinear => EXIT_PASS,
        Verdict::NonConvexLinear => EXIT_VIOLATION,
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PovmSpec {
    Named(String),
    Explicit(Povm),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FamilySpec {
    Unitary { generators: Vec<ComplexMatrix>, ranges: Vec<(f64, f64)> },
    NonlinearMeanfield { h0: ComplexMatrix, coupling: ComplexMatrix, tau: f64, steps: usize, g_range: (f64, f64) },
    QuasiLinear { base: DynamicalMap, gamma_range: (f64, f64) },
}

impl From<FamilySpec> for MapFamily {
    fn from(f: FamilySpec) -> Self {
        match f {
            FamilySpec::Unitary { generators, ranges } => MapFamily::Unitary { generators, ranges },
            FamilySpec::NonlinearMeanfield { h0, coupling, tau, steps, g_range } => {
                MapFamily::MeanField { h0, coupling, tau, steps, g_range }
            }
            FamilySpec::QuasiLinear { base, gamma_range } => MapFamily::QuasiLinear { base, gamma_range },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchSpec {
    family: FamilySpec,
    budget: usize,
    /// Candidate measurements; defaults to the scenario's `povm`.
    #[serde(default)]
    measurements: Vec<PovmSpec>,
}

/// `scenario run` config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioConfig {
    #[serde(rename = "K")]
    k: usize,
    lambda: Vec<f64>,
    #[serde(default)]
    phases: Option<Vec<C64>>,
    #[serde(default)]
    pointer_dim: Option<usize>,
    #[serde(default)]
    map: Option<DynamicalMap>,
    povm: PovmSpec,
    #[serde(default)]
    threshold: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    search: Option<SearchSpec>,
}

fn resolve_povm(spec: &PovmSpec, d: usize, seed: Option<u64>) -> Result<Povm> {
    match spec {
        PovmSpec::Explicit(p) => Ok(p.clone()),
        PovmSpec::Named(n) if n == "computational" => Ok(Povm::computational_basis(d)),
        PovmSpec::Named(n) if n == "ic" => {
            let seed = seed.ok_or_else(|| Error::InvalidConfig("povm \"ic\" needs a seed".into()))?;
            Ok(build_ic_povm(d, seed)?.povm().clone())
        }
        PovmSpec::Named(n) => Err(Error::InvalidConfig(format!("unknown povm {n:?}"))),
    }
}

fn write_csv(path: &Path, names: &[String], rows: &[(String, Vec<f64>, usize, f64, LdVerdict)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["family".to_string()];
    header.extend(names.iter().cloned());
    header.extend(["measurement", "tv_distance", "verdict"].map(String::from));
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (family, params, m, tv, verdict) in rows {
        let mut rec = vec![family.clone()];
        rec.extend(params.iter().map(|p| if p.is_nan() { String::new() } else { p.to_string() }));
        rec.push(m.to_string());
        rec.push(tv.to_string());
        rec.push(serde_json::to_value(verdict)?.as_str().unwrap_or_default().to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    write_atomic(path, &bytes)
}

fn scenario_run(config: &Path, csv_path: Option<&Path>, out: &OutArgs) -> Result<i32> {
    let raw = read_json(config)?;
    let cfg: ScenarioConfig = serde_json::from_value(raw.clone())?;
    if cfg.lambda.len() != cfg.k {
        return Err(Error::InvalidConfig(format!("K = {} but lambda has {} entries", cfg.k, cfg.lambda.len())));
    }
    let scenario = LabScenario::new(cfg.lambda.clone(), cfg.pointer_dim.unwrap_or(cfg.k), cfg.phases.clone())?;
    let threshold = cfg.threshold.unwrap_or(DEFAULT_LD_THRESHOLD);
    let povm = resolve_povm(&cfg.povm, cfg.k, cfg.seed)?;
    if cfg.map.is_none() && cfg.search.is_none() {
        return Err(Error::InvalidConfig("config needs a map, a search, or both".into()));
    }

    let mut rows = Vec::new();
    let mut names = Vec::new();
    let protocol = cfg.map.as_ref().map(|m| run_friend_protocol(&scenario, m, &povm, threshold)).transpose()?;
    if let (Some(r), Some(m)) = (&protocol, &cfg.map) {
        rows.push((m.kind().as_str().to_string(), vec![], 0, r.tv_distance, r.verdict));
    }
    let search = match &cfg.search {
        Some(s) => {
            let candidates = if s.measurements.is_empty() {
                vec![povm.clone()]
            } else {
                s.measurements.iter().map(|p| resolve_povm(p, cfg.k, cfg.seed)).collect::<Result<_>>()?
            };
            let family: MapFamily = s.family.clone().into();
            let r = search_best_protocol(&scenario, &family, &candidates, s.budget, threshold)?;
            names = r.parameter_names.clone();
            rows.extend(
                r.evaluations.iter().map(|e| (e.family.clone(), e.params.clone(), e.measurement, e.tv_distance, e.verdict)),
            );
            Some(r)
        }
        None => None,
    };
    if let Some(p) = csv_path {
        // rows without parameters are padded so every record has the same width
        let width = names.len();
        let rows: Vec<_> = rows
            .into_iter()
            .map(|(f, mut ps, m, tv, v)| {
                ps.resize(width, f64::NAN);
                (f, ps, m, tv, v)
            })
            .collect();
        write_csv(p, &names, &rows)?;
    }
    let violated = protocol.as_ref().is_some_and(|r| r.verdict == LdVerdict::LdViolated)
        || search.as_ref().is_some_and(|r| r.best.verdict == LdVerdict::LdViolated);
    emit(out, "scenario run", raw, json!({ "protocol": protocol, "search": search }))?;
    Ok(if violated { EXIT_VIOLATION } else { EXIT_PASS })
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Ic(IcCommand::Build { dim, seed, out }) => {
            let ic = build_ic_povm(dim, seed)?;
            let report = json!({
                "id": ic.id(),
                "dim": ic.dim(),
                "seed": seed,
                "gram_rank": ic.gram_rank(),
                "gram_condition": ic.gram_condition(),
                "povm": ic.povm(),
            });
            emit(&out, "ic build", json!({ "dim": dim, "seed": seed }), report)?;
            Ok(EXIT_PASS)
        }
        Command::Map(MapCommand::Audit(a)) => {
            let (raw, map) = load_map(&a.map)?;
            let probes = if a.include_witness { vec![canonical_witness(a.dim)] } else { vec![] };
            let report = audit_with_probes(&map, a.dim, a.trials, a.seed, a.tol, &probes)?;
            let config = json!({
                "map": raw, "dim": a.dim, "trials": a.trials, "seed": a.seed, "tol": a.tol,
                "include_witness": a.include_witness,
            });
            let code = verdict_exit(report.verdict);
            emit(&a.out, "map audit", config, report)?;
            Ok(code)
        }
        Command::Gpt(GptCommand::Check(a)) => {
            let (raw, map) = load_map(&a.map)?;
            let ic_seed = a.ic_seed.unwrap_or(a.seed);
            let ic = build_ic_povm(a.dim, ic_seed)?;
            let report = gpt_convex_linearity_check(&map, &ic, a.trials, a.seed, a.tol)?;
            let config = json!({
                "map": raw, "dim": a.dim, "trials": a.trials, "seed": a.seed, "tol": a.tol, "ic_seed": ic_seed,
            });
            let code = verdict_exit(report.verdict);
            emit(&a.out, "gpt check", config, report)?;
            Ok(code)
        }
        Command::Scenario(ScenarioCommand::Run { config, csv, out }) => scenario_run(&config, csv.as_deref(), &out),
        Command::PaperSuite(a) => {
            let extra = a.extra_maps.iter().map(|p| read_json(p)).collect::<Result<Vec<_>>>()?;
            let (report, timings) = run_paper_suite(a.seed, &extra)?;
            let config = json!({ "seed": a.seed, "extra_maps": extra });
            let code = if report.passed { EXIT_PASS } else { EXIT_VIOLATION };
            let total: f64 = timings.iter().map(|t| t.runtime_ms).sum();
            let sidecar = serde_json::to_string_pretty(&json!({ "checks": timings, "total_ms": total }))? + "\n";
            match &a.out.out {
                Some(p) => {
                    let mut side = p.clone().into_os_string();
                    side.push(".timing.json");
                    write_atomic(Path::new(&side), sidecar.as_bytes())?;
                }
                None => eprint!("{sidecar}"),
            }
            emit(&a.out, "paper-suite", config, report)?;
            Ok(code)
        }
    }
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var("QLAB_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| format!("QLAB_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("QLAB_THREADS must be at least 1".into());
    }
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    if let Command::Ic(IcCommand::Build { dim, .. }) = &cli.command {
        if *dim < 2 {
            eprintln!("error: --dim must be at least 2");
            return EXIT_USAGE;
        }
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            EXIT_ERROR
        }
    }
}
