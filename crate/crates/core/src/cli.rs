//! Command-line front end: `simulate`, `generate`, `features`, `train`,
//! `eval` and `invert`.
//!
//! Every command writes its resolved configuration as flat JSON next to its
//! outputs. Exit codes: 0 success, 2 usage error, 3 data or schema error,
//! 4 numerical failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::{json, Map, Value};

use crate::bernstein::BernsteinRate;
use crate::dataset::{self, SampleRecord};
use crate::error::Error;
use crate::features::{self, FeatureRecord, FeatureSet};
use crate::inversion::{self, InversionConfig, JcParams, RateEstimate};
use crate::jsonfmt;
use crate::models::{ModelId, ModelSpec};
use crate::nn::{self, RegressorConfig, RegressorModel};

/// Overrides every `--seed` flag when set.
pub const SEED_ENV: &str = "LINDBLAD_PROBE_SEED";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "lindblad", version, about = "Simulate open quantum systems and learn their dissipation rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one sample: sample.jsonl, trajectory.csv and run_config.json in --out.
    Simulate(SimulateArgs),
    /// Simulate a dataset into a JSON Lines file.
    Generate(GenerateArgs),
    /// Extract per-channel features from a dataset.
    Features(FeaturesArgs),
    /// Train a regressor on an 80/20 split of a feature file.
    Train(TrainArgs),
    /// Score a checkpoint on its held-out test samples.
    Eval(EvalArgs),
    /// Recover rates of one sample analytically.
    Invert(InvertArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// sq-const, sq-const-two, sq-td, sq-td-two, heisenberg, ising or jc.
    #[arg(long)]
    pub model: ModelId,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model spec overrides as a JSON object or a path to one, e.g. '{"fock_dim": 14}'.
    #[arg(long)]
    pub params: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: ModelId,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub params: Option<String>,
    /// Output JSONL file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// f18 or f10.
    #[arg(long, default_value = "f18")]
    pub set: FeatureSet,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub model_id: ModelId,
    /// Regressor overrides as a JSON object or a path to one.
    #[arg(long)]
    pub config: Option<String>,
    /// Seed of the split and the network; defaults to the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.8)]
    pub train_frac: f64,
    #[arg(long)]
    pub out_ckpt: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub report_dir: PathBuf,
    /// Score every record instead of the checkpoint's test ids.
    #[arg(long)]
    pub all: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Single decay channel from ⟨σ_z⟩.
    T1,
    /// Gain and loss channels from ⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩.
    T2,
    /// Qubit and cavity decay of the Jaynes-Cummings model.
    Jc,
}

impl Method {
    /// JC rates divide by the oscillating ⟨σ_y⟩ and need a wider margin.
    fn default_min_denominator(self) -> f64 {
        match self {
            Method::Jc => 0.1,
            _ => InversionConfig::default().min_denominator,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Method::T1 => "t1",
            Method::T2 => "t2",
            Method::Jc => "jc",
        }
    }
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Record to invert; defaults to the first one in the file.
    #[arg(long)]
    pub sample_id: Option<u64>,
    /// Masking threshold on denominators [default: 1e-3 for t1/t2, 0.1 for jc].
    #[arg(long)]
    pub min_denominator: Option<f64>,
    #[arg(long, default_value_t = InversionConfig::default().max_condition)]
    pub max_condition: f64,
    /// Output CSV: time,estimate,true_value,valid_flag,rate.
    #[arg(long)]
    pub out: PathBuf,
}

/// A failed command.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "usage: {msg}"),
            Failure::Run(e) => e.fmt(f),
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Run(e) => exit_code(e),
        }
    }
}

/// Process exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::UnknownModel(_) | Error::OutOfRange(_) => EXIT_USAGE,
        Error::NonFiniteLoss { .. }
        | Error::SimulationFailure { .. }
        | Error::NotHermitian { .. }
        | Error::InvalidState(_) => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Generate(a) => generate(a),
        Command::Features(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Invert(a) => invert(a),
    }
}

/// `LINDBLAD_PROBE_SEED` if set, else the flag.
fn resolve_seed(flag: Option<u64>) -> std::result::Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

/// Inline JSON object or a path to a file holding one.
fn json_arg(arg: &str) -> std::result::Result<Value, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("{arg}: {e}")))?
    };
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{arg}: {e}")))?;
    if !v.is_object() {
        return Err(Failure::Usage(format!("{arg}: expected a JSON object")));
    }
    Ok(v)
}

fn model_spec(id: ModelId, params: Option<&str>) -> std::result::Result<ModelSpec, Failure> {
    let spec = ModelSpec::new(id);
    let Some(arg) = params else {
        return Ok(spec);
    };
    let over = json_arg(arg)?;
    let mut base = serde_json::to_value(&spec).map_err(Error::from)?;
    let obj = base.as_object_mut().expect("spec serializes to an object");
    for (k, v) in over.as_object().expect("checked object") {
        if k == "id" || !obj.contains_key(k) {
            return Err(Failure::Usage(format!("unknown model parameter `{k}`")));
        }
        obj.insert(k.clone(), v.clone());
    }
    serde_json::from_value(base).map_err(|e| Failure::Usage(format!("--params: {e}")))
}

/// Nested objects become dotted keys, so `{"a": {"b": 1}}` is written as `{"a.b": 1}`.
fn flatten(prefix: &str, entries: Map<String, Value>, out: &mut Map<String, Value>) {
    for (k, v) in entries {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Object(inner) => flatten(&key, inner, out),
            v => {
                out.insert(key, v);
            }
        }
    }
}

fn write_config(path: &Path, entries: Map<String, Value>) -> CmdResult {
    let mut flat = Map::new();
    flatten("", entries, &mut flat);
    let text = jsonfmt::to_pretty(&Value::Object(flat))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// `<out>.config.json` next to a file output.
fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}

fn spec_entries(spec: &ModelSpec) -> Map<String, Value> {
    match serde_json::to_value(spec) {
        Ok(Value::Object(m)) => m.into_iter().filter(|(k, _)| k != "id").collect(),
        _ => Map::new(),
    }
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let seed = resolve_seed(Some(a.seed))?.unwrap_or(a.seed);
    let spec = model_spec(a.model, a.params.as_deref())?;
    let rec = dataset::simulate_sample(&spec, 0, seed)?;

    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    dataset::write_jsonl(&a.out.join("sample.jsonl"), [&rec])?;

    let names = a.model.observable_names();
    let mut csv = String::from("time");
    for n in names {
        write!(csv, ",{n}").expect("write to String");
    }
    csv.push('\n');
    for (k, t) in rec.times.iter().enumerate() {
        write!(csv, "{t}").expect("write to String");
        for n in names {
            write!(csv, ",{}", rec.series(n)?[k]).expect("write to String");
        }
        csv.push('\n');
    }
    let path = a.out.join("trajectory.csv");
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;

    let mut cfg = object(json!({ "command": "simulate", "model": a.model, "seed": seed }));
    cfg.extend(spec_entries(&spec));
    write_config(&a.out.join("run_config.json"), cfg)?;
    info!("simulated {} sample into {}", a.model, a.out.display());
    Ok(())
}

fn generate(a: GenerateArgs) -> CmdResult {
    let seed = resolve_seed(Some(a.seed))?.unwrap_or(a.seed);
    let spec = model_spec(a.model, a.params.as_deref())?;
    let out = dataset::generate_dataset(&spec, a.n, seed, a.workers.max(1))?;
    dataset::write_jsonl(&a.out, &out.records)?;

    let skipped: Vec<Value> = out
        .skipped
        .iter()
        .map(|s| json!({ "sample_id": s.sample_id, "seed": s.seed, "error": s.error.to_string() }))
        .collect();
    let mut cfg = object(json!({
        "command": "generate",
        "model": a.model,
        "n": a.n,
        "seed": seed,
        "workers": a.workers,
        "out": a.out,
        "written": out.records.len(),
        "skipped": skipped,
    }));
    cfg.extend(spec_entries(&spec));
    write_config(&sidecar(&a.out), cfg)
}

fn extract(a: FeaturesArgs) -> CmdResult {
    let samples = dataset::read_jsonl(&a.input)?;
    let records = samples
        .iter()
        .map(|s| FeatureRecord::from_sample(s, a.set))
        .collect::<crate::Result<Vec<_>>>()?;
    features::write_feature_jsonl(&a.out, &records)?;
    let width = records.first().map_or(0, |r| r.features.len());
    info!("{} records, {width} features each", records.len());
    write_config(
        &sidecar(&a.out),
        object(json!({
            "command": "features",
            "in": a.input,
            "set": a.set,
            "out": a.out,
            "records": records.len(),
            "input_dim": width,
        })),
    )
}

fn train(a: TrainArgs) -> CmdResult {
    let records = features::read_feature_jsonl(&a.features)?;
    let width = records
        .first()
        .map(|r| r.features.len())
        .ok_or_else(|| Error::InsufficientData(format!("{} is empty", a.features.display())))?;

    let mut config = RegressorConfig::for_model(a.model_id);
    // a feature file does not record its set; infer it from the width
    for set in [FeatureSet::F18, FeatureSet::F10] {
        if width == config.channels * set.per_channel() {
            config.feature_set = set;
        }
    }
    if let Some(arg) = &a.config {
        config = config
            .with_overrides(&json_arg(arg)?)
            .map_err(|e| Failure::Usage(format!("--config: {e}")))?;
    }
    if let Some(seed) = resolve_seed(a.seed)? {
        config.seed = seed;
    }
    if width != config.input_dim() {
        return Err(Error::Schema(format!(
            "{} has {width} features per record; {} expects {}",
            a.features.display(),
            a.model_id,
            config.input_dim()
        ))
        .into());
    }

    let (train_set, test_set) = dataset::split(&records, a.train_frac, config.seed)?;
    let mut model = nn::train(&config, &train_set, a.model_id.target_names(), Some(a.model_id))?;
    let mut test_ids: Vec<u64> = test_set.iter().map(|r| r.sample_id).collect();
    test_ids.sort_unstable();
    model.test_ids = test_ids;
    model.save(&a.out_ckpt)?;
    info!(
        "{} epochs, best validation loss {:e}; checkpoint {}",
        model.history.epochs.len(),
        model.history.best_val_loss,
        a.out_ckpt.display()
    );

    let mut cfg = object(json!({
        "command": "train",
        "features": a.features,
        "model_id": a.model_id,
        "train_frac": a.train_frac,
        "out_ckpt": a.out_ckpt,
    }));
    cfg.extend(object(serde_json::to_value(&config).map_err(Error::from)?));
    write_config(&sidecar(&a.out_ckpt), cfg)
}

fn eval(a: EvalArgs) -> CmdResult {
    let model = RegressorModel::load(&a.ckpt)?;
    let records = features::read_feature_jsonl(&a.features)?;
    let selected: Vec<FeatureRecord> = if a.all || model.test_ids.is_empty() {
        records
    } else {
        let picked: Vec<_> = records
            .into_iter()
            .filter(|r| model.test_ids.binary_search(&r.sample_id).is_ok())
            .collect();
        if picked.len() != model.test_ids.len() {
            return Err(Error::Schema(format!(
                "{} holds {} of the checkpoint's {} test samples",
                a.features.display(),
                picked.len(),
                model.test_ids.len()
            ))
            .into());
        }
        picked
    };
    let evaluation = nn::evaluate(&model, &selected)?;
    evaluation.write_report(&a.report_dir)?;
    for t in &evaluation.metrics.targets {
        let r2 = t.r2.map_or("undefined".to_string(), |r| format!("{r:.4}"));
        println!("{:<16} R2 {r2:>9}  MSE {:.4e}", t.name, t.mse);
    }
    write_config(
        &a.report_dir.join("run_config.json"),
        object(json!({
            "command": "eval",
            "ckpt": a.ckpt,
            "features": a.features,
            "report_dir": a.report_dir,
            "all": a.all,
            "n_test": selected.len(),
        })),
    )
}

/// True rate named `name` in a record: a constant target `name` or the
/// Bernstein coefficients `name_0..name_2`.
fn true_rate(rec: &SampleRecord, name: &str) -> Option<BernsteinRate> {
    let span = rec.model.time_span();
    if let Some(&g) = rec.targets.get(name) {
        return BernsteinRate::constant(g, span).ok();
    }
    let coeffs: Option<Vec<f64>> = (0..3)
        .map(|j| rec.targets.get(&format!("{name}_{j}")).copied())
        .collect();
    BernsteinRate::new(coeffs?, span).ok()
}

fn invert(a: InvertArgs) -> CmdResult {
    let records = dataset::read_jsonl(&a.input)?;
    let rec = match a.sample_id {
        Some(id) => records
            .iter()
            .find(|r| r.sample_id == id)
            .ok_or_else(|| Error::Schema(format!("no sample {id} in {}", a.input.display())))?,
        None => records
            .first()
            .ok_or_else(|| Error::InsufficientData(format!("{} is empty", a.input.display())))?,
    };
    let cfg = InversionConfig {
        min_denominator: a.min_denominator.unwrap_or(a.method.default_min_denominator()),
        max_condition: a.max_condition,
    };
    let t = &rec.times;
    let rates: Vec<(&str, RateEstimate)> = match a.method {
        Method::T1 => vec![(
            "gamma_minus",
            inversion::invert_theorem1(rec.series("sz")?, t, &cfg)?,
        )],
        Method::T2 => {
            let est = inversion::invert_theorem2(rec.series("sx")?, rec.series("sy")?, rec.series("sz")?, t, &cfg)?;
            if est.underdetermined {
                warn!("no usable coherence; the two rates are not identifiable from this sample");
            }
            vec![("gamma_plus", est.gamma_plus), ("gamma_minus", est.gamma_minus)]
        }
        Method::Jc => {
            let est = inversion::invert_jc(&rec.to_trajectory(), JcParams::from_map(&rec.params)?, &cfg)?;
            vec![("gamma", est.gamma), ("kappa", est.kappa)]
        }
    };
    // a lone decay channel has a known truth only when no gain channel exists
    let has_gain = rec.targets.keys().any(|k| k.starts_with("gamma_plus"));

    let mut csv = String::from("time,estimate,true_value,valid_flag,rate\n");
    let mut summary = Map::new();
    for (name, est) in &rates {
        let truth = if a.method == Method::T1 && has_gain {
            None
        } else {
            true_rate(rec, name)
        };
        for ((time, value), valid) in est.times.iter().zip(&est.values).zip(&est.valid) {
            let truth = truth.as_ref().and_then(|r| r.eval(*time).ok());
            let truth = truth.map_or(String::new(), |v| v.to_string());
            writeln!(csv, "{time},{value},{truth},{},{name}", u8::from(*valid)).expect("write to String");
        }
        let worst = truth.as_ref().and_then(|r| est.max_relative_error(|t| r.eval(t).unwrap_or(f64::NAN)));
        info!(
            "{name}: {} of {} points valid, max relative error {}",
            est.valid_count(),
            est.len(),
            worst.map_or("n/a".into(), |w| format!("{w:.3e}"))
        );
        summary.insert(
            name.to_string(),
            json!({ "valid_points": est.valid_count(), "max_relative_error": worst }),
        );
    }
    std::fs::write(&a.out, csv).map_err(|e| Error::io(&a.out, e))?;

    write_config(
        &sidecar(&a.out),
        object(json!({
            "command": "invert",
            "in": a.input,
            "method": a.method.as_str(),
            "sample_id": rec.sample_id,
            "min_denominator": cfg.min_denominator,
            "max_condition": a.max_condition,
            "out": a.out,
            "summary": summary,
        })),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_subcommands() {
        let cli = Cli::try_parse_from(["lindblad", "simulate", "--model", "jc", "--seed", "2", "--out", "x"]).unwrap();
        assert!(matches!(cli.command, Command::Simulate(SimulateArgs { model: ModelId::Jc, seed: 2, .. })));
        let cli = Cli::try_parse_from(["lindblad", "features", "--in", "a", "--set", "f10", "--out", "b"]).unwrap();
        assert!(matches!(cli.command, Command::Features(FeaturesArgs { set: FeatureSet::F10, .. })));
    }

    #[test]
    fn bad_model_is_a_usage_error() {
        let err = Cli::try_parse_from(["lindblad", "simulate", "--model", "qutrit", "--out", "x"]).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::Schema("v".into())), EXIT_DATA);
        assert_eq!(exit_code(&Error::MissingSeries("sz".into())), EXIT_DATA);
        let diverged = Error::NonFiniteLoss {
            epoch: 0,
            batch: 0,
            lr: 1.0,
            reason: String::new(),
        };
        assert_eq!(exit_code(&diverged), EXIT_NUMERIC);
    }

    #[test]
    fn spec_overrides_reject_unknown_keys() {
        let spec = model_spec(ModelId::Jc, Some(r#"{"fock_dim": 12}"#)).unwrap();
        assert_eq!(spec.fock_dim, 12);
        assert!(matches!(model_spec(ModelId::Jc, Some(r#"{"fock": 12}"#)), Err(Failure::Usage(_))));
    }

    #[test]
    fn configs_are_flat() {
        let mut flat = Map::new();
        flatten("", object(json!({"a": {"b": 1, "c": {"d": [2]}}, "e": 3})), &mut flat);
        assert_eq!(Value::Object(flat), json!({"a.b": 1, "a.c.d": [2], "e": 3}));
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar(Path::new("out/data.jsonl")), PathBuf::from("out/data.jsonl.config.json"));
    }
}
