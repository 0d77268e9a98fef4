//! `csiauth`: generate CSI pair datasets, train Siamese models, evaluate
//! detectors and ingest captured CSI logs.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use csiauth::channel::TgnModel;
use csiauth::dataset::{
    build_experimental_pairs, build_mac_labeled_pairs, dataset_digest, generate_pair,
    generate_test_grid, generate_training_grid, ingest_raw_csv, parse_mac, read_dataset,
    write_dataset, Dataset, IngestOptions, PairGenConfig, RawFormat, TestAxis, TestGrid,
    TrainingGrid,
};
use csiauth::eval::{
    roc_curve, score_dataset, threshold_for_target, write_roc_csv, Detector, Target,
};
use csiauth::models::{
    read_weights, train, weights_digest, write_weights, ArchKind, ArchSpec, TrainConfig,
};
use csiauth::rng::derive_seed;

use config::FileConfig;

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<csiauth::Error> for CliError {
    fn from(e: csiauth::Error) -> Self {
        use csiauth::Error::*;
        let code = match e {
            Domain(_) | Usage(_) => 2,
            Numeric(_) => 4,
            _ => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "csiauth", version, about = "CSI-pair authentication toolkit")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; affects wall time only.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// JSON or key=value settings file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic pair datasets.
    Gen(GenArgs),
    /// Train a Siamese model.
    Train(TrainArgs),
    /// Score datasets and report ROC/AUC.
    Eval(EvalArgs),
    /// Build a dataset from a captured CSI log.
    Ingest(IngestArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GridKind {
    /// Every model × SNR × distance combination.
    Train,
    /// One dataset per value of a single axis.
    Test,
    /// One dataset at a single setting.
    Cell,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    grid: GridKind,
    /// Varied axis for test grids: snr, dt or d.
    #[arg(long)]
    axis: Vec<String>,
    /// TGn model (B-F) for test and cell grids.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    dt_ms: Option<f64>,
    /// Attacker distance in wavelengths.
    #[arg(long)]
    d_bm: Option<f64>,
    /// Pair couples per dataset (test, cell) or per grid cell (train).
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, default_value = "cnn")]
    arch: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Loss trace CSV; defaults to `<out>.loss.csv`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Weights file of a trained model.
    #[arg(long, conflicts_with = "baseline")]
    model: Option<PathBuf>,
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    #[arg(long, conflicts_with = "sweep")]
    data: Option<PathBuf>,
    /// Directory of datasets; writes one summary row per file.
    #[arg(long)]
    sweep: Option<PathBuf>,
    /// ROC CSV (single dataset) or summary CSV (sweep).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also report the threshold reaching this TPR.
    #[arg(long)]
    target_tpr: Option<f64>,
    /// Also report the threshold holding this FPR.
    #[arg(long)]
    target_fpr: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Baseline {
    Correlation,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum IngestMode {
    /// Label by packet spacing within one transmitter's stream.
    Train,
    /// Label by transmitter MAC address.
    Test,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long, default_value = "esp32-csv")]
    format: String,
    #[arg(long = "in")]
    input: PathBuf,
    /// Legitimate transmitter MAC.
    #[arg(long)]
    mac: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "train")]
    mode: IngestMode,
    #[arg(long, default_value_t = 1)]
    delta_k_same: usize,
    #[arg(long, default_value_t = 100)]
    delta_k_diff: usize,
    /// Largest tolerated share of malformed rows.
    #[arg(long, default_value_t = 0.05)]
    max_malformed: f64,
}

#[derive(Serialize)]
struct Manifest {
    command: Vec<String>,
    seed: u64,
    config_digest: String,
    datasets: BTreeMap<String, String>,
    weights: BTreeMap<String, String>,
    reports: BTreeMap<String, String>,
    parameters: Value,
    version: &'static str,
}

struct Run {
    argv: Vec<String>,
    seed: u64,
    file: FileConfig,
}

impl Run {
    fn manifest(&self, parameters: Value) -> Manifest {
        let digest = hex::encode(Sha256::digest(parameters.to_string().as_bytes()));
        Manifest {
            command: self.argv.clone(),
            seed: self.seed,
            config_digest: digest,
            datasets: BTreeMap::new(),
            weights: BTreeMap::new(),
            reports: BTreeMap::new(),
            parameters,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

fn write_manifest(manifest: &Manifest, path: &Path) -> CliResult {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn manifest_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn parse_model(s: &str) -> CliResult<TgnModel> {
    s.parse()
        .map_err(|e: csiauth::Error| CliError::usage(format!("--model: {e}")))
}

fn gen_defaults(run: &Run, args: &GenArgs) -> CliResult<PairGenConfig> {
    let f = &run.file;
    let base = PairGenConfig::default();
    let model = match args.model.as_deref().or(f.model.as_deref()) {
        Some(m) => parse_model(m)?,
        None => base.model,
    };
    Ok(PairGenConfig {
        model,
        snr_db: args.snr_db.or(f.snr_db).unwrap_or(base.snr_db),
        dt_s: args
            .dt_ms
            .map(|ms| ms * 1e-3)
            .or(f.dt_s)
            .unwrap_or(base.dt_s),
        v0: f.v0.unwrap_or(base.v0),
        wavelength: f.wavelength.unwrap_or(base.wavelength),
        d_bm_wavelengths: args
            .d_bm
            .or(f.d_bm_wavelengths)
            .unwrap_or(base.d_bm_wavelengths),
        theta: f.theta.unwrap_or(base.theta),
        seed: run.seed,
    })
}

fn cmd_gen(run: &Run, args: &GenArgs) -> CliResult {
    let cfg = gen_defaults(run, args)?;
    match args.grid {
        GridKind::Train => {
            let out = args
                .out
                .as_ref()
                .ok_or_else(|| CliError::usage("--grid train needs --out"))?;
            let grid = TrainingGrid {
                dt_s: cfg.dt_s,
                v0: cfg.v0,
                wavelength: cfg.wavelength,
                theta: cfg.theta,
                pairs_per_cell: args.pairs.or(run.file.pairs_per_cell).unwrap_or(20),
                seed: run.seed,
                ..TrainingGrid::default()
            };
            let ds = generate_training_grid(&grid)?;
            write_dataset(&ds, out)?;
            let mut m = run.manifest(json!({
                "grid": "train", "dt_s": grid.dt_s, "v0": grid.v0, "wavelength": grid.wavelength,
                "theta": grid.theta, "pairs_per_cell": grid.pairs_per_cell,
                "models": grid.models.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
                "snrs_db": grid.snrs_db, "distances_wavelengths": grid.distances_wavelengths,
            }));
            m.datasets.insert(display(out), dataset_digest(&ds));
            write_manifest(&m, &manifest_path(out))?;
            eprintln!("wrote {} pairs to {}", ds.len(), out.display());
        }
        GridKind::Test => {
            let dir = args
                .out_dir
                .as_ref()
                .ok_or_else(|| CliError::usage("--grid test needs --out-dir"))?;
            let axes = args
                .axis
                .iter()
                .map(|a| a.parse::<TestAxis>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::usage(format!("--axis: {e}")))?;
            if axes.len() != 1 {
                return Err(CliError::usage(format!(
                    "--axis must be given exactly once for --grid test (got {})",
                    axes.len()
                )));
            }
            let grid = TestGrid {
                model: cfg.model,
                snr_db: cfg.snr_db,
                dt_s: cfg.dt_s,
                v0: cfg.v0,
                wavelength: cfg.wavelength,
                d_bm_wavelengths: cfg.d_bm_wavelengths,
                theta: cfg.theta,
                pairs: args.pairs.or(run.file.pairs).unwrap_or(500),
                seed: run.seed,
                values: None,
            };
            let sets = generate_test_grid(&axes, &grid)?;
            fs::create_dir_all(dir)
                .map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
            let values = axes[0].default_values();
            let mut m = run.manifest(json!({
                "grid": "test", "axis": axes[0].key(), "values": values, "model": grid.model.to_string(),
                "snr_db": grid.snr_db, "dt_s": grid.dt_s, "v0": grid.v0, "wavelength": grid.wavelength,
                "d_bm_wavelengths": grid.d_bm_wavelengths, "theta": grid.theta, "pairs": grid.pairs,
            }));
            for (i, (ds, v)) in sets.iter().zip(&values).enumerate() {
                let path = dir.join(format!(
                    "{}_{:02}_{}_{}.ds",
                    grid.model,
                    i,
                    axes[0].key(),
                    v
                ));
                write_dataset(ds, &path)?;
                m.datasets.insert(display(&path), dataset_digest(ds));
            }
            write_manifest(&m, &dir.join("manifest.json"))?;
            eprintln!("wrote {} datasets to {}", sets.len(), dir.display());
        }
        GridKind::Cell => {
            let out = args
                .out
                .as_ref()
                .ok_or_else(|| CliError::usage("--grid cell needs --out"))?;
            cfg.validate()?;
            let n = args.pairs.or(run.file.pairs).unwrap_or(500);
            let mut pairs = Vec::with_capacity(2 * n);
            for j in 0..n {
                let (same, different) = generate_pair(&PairGenConfig {
                    seed: derive_seed(run.seed, &[j as u64]),
                    ..cfg
                })?;
                pairs.push(same);
                pairs.push(different);
            }
            let tag = format!(
                "model={};snr_db={};dt_ms={};d_bm={}",
                cfg.model,
                cfg.snr_db,
                cfg.dt_s * 1e3,
                cfg.d_bm_wavelengths
            );
            let ds = Dataset::new(tag, pairs);
            write_dataset(&ds, out)?;
            let mut m = run.manifest(json!({
                "grid": "cell", "model": cfg.model.to_string(), "snr_db": cfg.snr_db, "dt_s": cfg.dt_s,
                "v0": cfg.v0, "wavelength": cfg.wavelength, "d_bm_wavelengths": cfg.d_bm_wavelengths,
                "theta": cfg.theta, "pairs": n,
            }));
            m.datasets.insert(display(out), dataset_digest(&ds));
            write_manifest(&m, &manifest_path(out))?;
            eprintln!("wrote {} pairs to {}", ds.len(), out.display());
        }
    }
    Ok(())
}

fn cmd_train(run: &Run, args: &TrainArgs) -> CliResult {
    let kind: ArchKind = args
        .arch
        .parse()
        .map_err(|e: csiauth::Error| CliError::usage(format!("--arch: {e}")))?;
    let f = &run.file;
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        learning_rate: args
            .learning_rate
            .or(f.learning_rate)
            .unwrap_or(d.learning_rate),
        batch_size: args.batch_size.or(f.batch_size).unwrap_or(d.batch_size),
        epochs: args.epochs.or(f.epochs).unwrap_or(d.epochs),
        margin_eta: f.margin_eta.unwrap_or(d.margin_eta),
        rmsprop_decay: f.rmsprop_decay.unwrap_or(d.rmsprop_decay),
        rmsprop_epsilon: f.rmsprop_epsilon.unwrap_or(d.rmsprop_epsilon),
        seed: run.seed,
    };
    cfg.validate()?;
    let ds = read_dataset(&args.data)?;
    let arch = ArchSpec::of_kind(kind);
    let out = train::<f32>(&ds, &arch, &cfg)?;
    write_weights(&out.weights, Some(&cfg), &args.out)?;

    let trace_path = args.trace.clone().unwrap_or_else(|| {
        let mut s = args.out.as_os_str().to_owned();
        s.push(".loss.csv");
        PathBuf::from(s)
    });
    let mut text = String::from("epoch,mean_loss\n");
    for e in &out.trace {
        text.push_str(&format!("{},{}\n", e.epoch, e.mean_loss));
    }
    fs::write(&trace_path, text)
        .map_err(|e| CliError::data(format!("{}: {e}", trace_path.display())))?;

    let mut m = run.manifest(json!({
        "arch": kind.to_string(), "learning_rate": cfg.learning_rate, "batch_size": cfg.batch_size,
        "epochs": cfg.epochs, "margin_eta": cfg.margin_eta, "rmsprop_decay": cfg.rmsprop_decay,
        "rmsprop_epsilon": cfg.rmsprop_epsilon,
    }));
    m.datasets.insert(display(&args.data), dataset_digest(&ds));
    m.weights
        .insert(display(&args.out), weights_digest(&out.weights, Some(&cfg)));
    m.reports
        .insert(display(&trace_path), file_digest(&trace_path)?);
    write_manifest(&m, &manifest_path(&args.out))?;
    if let (Some(first), Some(last)) = (out.trace.first(), out.trace.last()) {
        eprintln!(
            "trained {kind} for {} epochs: loss {:.6} -> {:.6}",
            out.trace.len(),
            first.mean_loss,
            last.mean_loss
        );
    }
    Ok(())
}

fn list_datasets(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ds"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::data(format!("no .ds files in {}", dir.display())));
    }
    Ok(files)
}

fn cmd_eval(run: &Run, args: &EvalArgs) -> CliResult {
    let loaded = match (&args.model, args.baseline) {
        (Some(path), None) => Some(read_weights(path)?),
        (None, Some(Baseline::Correlation)) => None,
        _ => return Err(CliError::usage("give exactly one of --model or --baseline")),
    };
    let detector = match &loaded {
        Some(w) => Detector::Siamese(&w.weights),
        None => Detector::Correlation,
    };
    let detector_name = if loaded.is_some() {
        "siamese"
    } else {
        "correlation"
    };
    let mut m = run.manifest(json!({
        "detector": detector_name, "target_tpr": args.target_tpr, "target_fpr": args.target_fpr,
    }));
    if let (Some(path), Some(w)) = (&args.model, &loaded) {
        m.weights.insert(
            display(path),
            weights_digest(&w.weights, w.optimizer.as_ref()),
        );
    }

    match (&args.data, &args.sweep) {
        (Some(data), None) => {
            let ds = read_dataset(data)?;
            let samples = score_dataset(detector, &ds)?;
            let curve = roc_curve(&samples)?;
            let mut buf = Vec::new();
            let summary = write_roc_csv(&curve, &ds.tag, &mut buf).expect("in-memory write");
            m.datasets.insert(display(data), dataset_digest(&ds));
            if let Some(report) = &args.report {
                fs::write(report, &buf)
                    .map_err(|e| CliError::data(format!("{}: {e}", report.display())))?;
                m.reports
                    .insert(display(report), hex::encode(Sha256::digest(&buf)));
            }
            println!(
                "detector={detector_name} auc={} positives={} negatives={} setting={}",
                summary.auc, summary.positives, summary.negatives, summary.setting
            );
            for (flag, target) in [
                ("tpr", args.target_tpr.map(Target::Tpr)),
                ("fpr", args.target_fpr.map(Target::Fpr)),
            ] {
                if let Some(target) = target {
                    let c = threshold_for_target(&samples, target)?;
                    println!(
                        "target_{flag}: threshold={} tpr={} fpr={}",
                        c.threshold, c.tpr, c.fpr
                    );
                }
            }
            if let Some(report) = &args.report {
                write_manifest(&m, &manifest_path(report))?;
            }
        }
        (None, Some(dir)) => {
            let files = list_datasets(dir)?;
            let mut out = String::from("file,setting,detector,auc,positives,negatives\n");
            for path in &files {
                let ds = read_dataset(path)?;
                let samples = score_dataset(detector, &ds)?;
                let curve = roc_curve(&samples)?;
                let name = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                out.push_str(&format!(
                    "{name},{},{detector_name},{},{},{}\n",
                    ds.tag,
                    curve.auc(),
                    curve.positives,
                    curve.negatives
                ));
                m.datasets.insert(display(path), dataset_digest(&ds));
            }
            match &args.report {
                Some(report) => {
                    fs::write(report, &out)
                        .map_err(|e| CliError::data(format!("{}: {e}", report.display())))?;
                    m.reports
                        .insert(display(report), hex::encode(Sha256::digest(out.as_bytes())));
                    write_manifest(&m, &manifest_path(report))?;
                }
                None => print!("{out}"),
            }
        }
        _ => return Err(CliError::usage("give exactly one of --data or --sweep")),
    }
    Ok(())
}

fn cmd_ingest(run: &Run, args: &IngestArgs) -> CliResult {
    let format: RawFormat = args
        .format
        .parse()
        .map_err(|e: csiauth::Error| CliError::usage(format!("--format: {e}")))?;
    let mac = parse_mac(&args.mac).map_err(|e| CliError::usage(format!("--mac: {e}")))?;
    let opts = IngestOptions {
        format,
        max_malformed_fraction: args.max_malformed,
    };
    let report = ingest_raw_csv(&args.input, &opts)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for bad in &report.malformed {
        eprintln!("skipped line {}: {}", bad.line, bad.reason);
    }
    let ds = match args.mode {
        IngestMode::Train => {
            let records: Vec<_> = report
                .records
                .iter()
                .filter(|r| r.mac == mac)
                .cloned()
                .collect();
            let (ds, warnings) =
                build_experimental_pairs(&records, args.delta_k_same, args.delta_k_diff)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            ds
        }
        IngestMode::Test => build_mac_labeled_pairs(&report.records, mac)?,
    };
    write_dataset(&ds, &args.out)?;
    let mut m = run.manifest(json!({
        "format": args.format, "mac": args.mac, "mode": format!("{:?}", args.mode).to_lowercase(),
        "delta_k_same": args.delta_k_same, "delta_k_diff": args.delta_k_diff,
        "max_malformed": args.max_malformed, "records": report.records.len(),
        "malformed_rows": report.malformed.len(),
    }));
    m.datasets
        .insert(display(&args.input), file_digest(&args.input)?);
    m.datasets.insert(display(&args.out), dataset_digest(&ds));
    write_manifest(&m, &manifest_path(&args.out))?;
    let (same, different) = ds.label_counts();
    eprintln!(
        "wrote {same} same and {different} different pairs to {}",
        args.out.display()
    );
    Ok(())
}

fn run(cli: Cli, argv: Vec<String>) -> CliResult {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("--workers: {e}")))?;
    }
    let file = match &cli.config {
        Some(p) => config::load(p)?,
        None => FileConfig::default(),
    };
    let run = Run {
        argv,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        file,
    };
    match &cli.command {
        Command::Gen(a) => cmd_gen(&run, a),
        Command::Train(a) => cmd_train(&run, a),
        Command::Eval(a) => cmd_eval(&run, a),
        Command::Ingest(a) => cmd_ingest(&run, a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli, argv) {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            let mut err = BufWriter::new(std::io::stderr());
            let _ = writeln!(err, "error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
