use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use cod_core::dataset::{load_csv_with, Column, Dataset, DatasetSchema, LoadOptions};
use cod_core::detector::{detect, CodConfig, OutlierReport, ThresholdMode, DEFAULT_N_NEG};
use cod_core::metrics::{results_csv, summarize, sweep, SweepRow, TrialSpec};
use cod_core::relation::{radius_objective_profile, select_candidate_negatives};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "cod",
    version,
    about = "Consistency-guided outlier detection for mixed tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every row and flag outliers.
    Detect(DetectArgs),
    /// Repeated trials with sampled labeled outliers; reports AUC-ROC and AUC-PR.
    Eval(EvalArgs),
    /// Runs `eval` for every cell of a JSON grid.
    Sweep(SweepArgs),
    /// Radii, radius objective profiles, dependency and consistency per attribute.
    DumpDiagnostics(DiagnosticsArgs),
}

#[derive(Args)]
struct Input {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// JSON schema: `{"columns": [{"name", "kind"}], "label_column"}`.
    #[arg(long)]
    schema: PathBuf,
    /// Impute empty cells instead of failing.
    #[arg(long)]
    impute: bool,
    /// Fixed radii, e.g. `age=0.5,weight=0.25`; skips the radius search for those attributes.
    #[arg(long, value_name = "NAME=VALUE[,...]", value_parser = parse_radii)]
    fix_lambda: Option<BTreeMap<String, f64>>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    Labels,
    Quantile,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = DEFAULT_N_NEG, value_parser = positive)]
    n_neg: usize,
    #[arg(long, value_enum, default_value = "labels")]
    threshold_mode: ModeArg,
    /// Expected outlier fraction for `--threshold-mode quantile`.
    #[arg(long)]
    contamination: Option<f64>,
    /// Scores CSV.
    #[arg(long, default_value = "scores.csv")]
    out: PathBuf,
    /// Diagnostics JSON [default: the scores path with a .json extension].
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, value_parser = positive)]
    labeled_count: usize,
    #[arg(long, default_value_t = 10, value_parser = positive)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_N_NEG, value_parser = positive)]
    n_neg: usize,
    /// Long-format results CSV; the summary goes next to it as .json.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: Input,
    /// JSON list of cells: `[{"labeled_count": 5, "n_neg": 50, "repetitions": 10, "seed": 0}, ...]`.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnosticsArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = DEFAULT_N_NEG, value_parser = positive)]
    n_neg: usize,
    /// Output JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_radii(s: &str) -> std::result::Result<BTreeMap<String, f64>, String> {
    let mut radii = BTreeMap::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected NAME=VALUE, got `{part}`"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("`{value}` is not a number"))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(format!("radius {value} for `{name}` outside [0, 1]"));
        }
        radii.insert(name.trim().to_string(), value);
    }
    Ok(radii)
}

fn round6(x: f64) -> Value {
    if x.is_finite() {
        json!((x * 1e6).round() / 1e6)
    } else {
        Value::Null
    }
}

fn round_all(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => round6(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(round_all).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_all(v))).collect()),
        other => other,
    }
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(&round_all(value.clone()))? + "\n";
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

impl Input {
    fn load(&self) -> Result<Dataset> {
        if let Some(t) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .context("cannot configure worker threads")?;
        }
        let schema = DatasetSchema::from_file(&self.schema)?;
        let ds = load_csv_with(
            &self.data,
            &schema,
            LoadOptions {
                impute_missing: self.impute,
            },
        )?;
        log::info!(
            "loaded {} rows, {} attributes",
            ds.n(),
            ds.attributes().len()
        );
        Ok(ds)
    }

    fn base_config(&self) -> CodConfig {
        CodConfig {
            fixed_radii: self.fix_lambda.clone().unwrap_or_default(),
            ..CodConfig::default()
        }
    }

    fn describe(&self, config: &CodConfig) -> Value {
        json!({
            "data": self.data.display().to_string(),
            "schema": self.schema.display().to_string(),
            "impute_missing": self.impute,
            "n_neg": config.n_neg,
            "threshold": config.threshold,
            "fixed_radii": config.fixed_radii,
        })
    }

    fn dataset_name(&self) -> String {
        self.data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into())
    }
}

fn report_json(config: Value, report: &OutlierReport) -> Value {
    json!({
        "config": config,
        "n": report.n(),
        "threshold": report.threshold,
        "flagged": report.flagged_count(),
        "positives": report.positives,
        "candidate_negatives": report.candidate_negatives,
        "attributes": report.attributes,
    })
}

fn usage_error(kind: ErrorKind, msg: &str) -> ! {
    Cli::command().error(kind, msg).exit()
}

fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let threshold = match (args.threshold_mode, args.contamination) {
        (ModeArg::Labels, None) => ThresholdMode::FromLabels,
        (ModeArg::Labels, Some(_)) => usage_error(
            ErrorKind::ArgumentConflict,
            "--contamination only applies to --threshold-mode quantile",
        ),
        (ModeArg::Quantile, Some(fraction)) => ThresholdMode::ContaminationQuantile { fraction },
        (ModeArg::Quantile, None) => usage_error(
            ErrorKind::MissingRequiredArgument,
            "--threshold-mode quantile requires --contamination",
        ),
    };
    let ds = args.input.load()?;
    let config = CodConfig {
        n_neg: args.n_neg,
        threshold,
        ..args.input.base_config()
    };
    let report = detect(&ds, &config)?;
    write_text(&args.out, &report.scores_csv())?;
    let diag = args
        .diagnostics
        .clone()
        .unwrap_or_else(|| args.out.with_extension("json"));
    write_json(&diag, &report_json(args.input.describe(&config), &report))?;
    println!("threshold {:.6}", report.threshold);
    println!("flagged {} of {}", report.flagged_count(), report.n());
    Ok(())
}

fn write_results(out: &Path, config: Value, rows: &[SweepRow]) -> Result<()> {
    write_text(out, &results_csv(rows))?;
    let summary = json!({ "config": config, "summary": summarize(rows) });
    write_json(&out.with_extension("json"), &summary)?;
    for r in summarize(rows) {
        println!(
            "labeled {} n_neg {}: AUC-ROC {:.6} (sd {:.6}), AUC-PR {:.6} (sd {:.6})",
            r.labeled_count, r.n_neg, r.mean_auc_roc, r.std_auc_roc, r.mean_auc_pr, r.std_auc_pr
        );
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let ds = args.input.load()?;
    let base = args.input.base_config();
    let spec = TrialSpec::new(args.labeled_count, args.trials, args.seed, args.n_neg);
    let rows = sweep(&args.input.dataset_name(), &ds, &[spec], &base)?;
    let mut config = args.input.describe(&CodConfig {
        n_neg: args.n_neg,
        ..base
    });
    config["grid"] = json!([spec]);
    write_results(&args.out, config, &rows)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&args.grid)
        .with_context(|| format!("cannot read {}", args.grid.display()))?;
    let grid: Vec<TrialSpec> = serde_json::from_str(&text)
        .with_context(|| format!("malformed grid {}", args.grid.display()))?;
    if let Some(bad) = grid
        .iter()
        .find(|s| s.labeled_count == 0 || s.repetitions == 0 || s.n_neg == 0)
    {
        bail!("grid cell {bad:?}: labeled_count, repetitions and n_neg must be >= 1");
    }
    let ds = args.input.load()?;
    let base = args.input.base_config();
    let rows = sweep(&args.input.dataset_name(), &ds, &grid, &base)?;
    let mut config = args.input.describe(&base);
    config.as_object_mut().map(|o| o.remove("n_neg"));
    config["grid"] = json!(grid);
    write_results(&args.out, config, &rows)
}

fn cmd_diagnostics(args: &DiagnosticsArgs) -> Result<()> {
    let ds = args.input.load()?;
    let config = CodConfig {
        n_neg: args.n_neg,
        ..args.input.base_config()
    };
    let report = detect(&ds, &config)?;
    let ctx = select_candidate_negatives(&ds, config.n_neg, &report.positives)?;
    let mut profiles = serde_json::Map::new();
    for a in ds.attributes() {
        if let Column::Numeric(c) = &a.column {
            let profile = radius_objective_profile(c.normalized(), &ctx)?;
            profiles.insert(
                a.name.clone(),
                profile
                    .iter()
                    .map(|(r, j)| json!({ "radius": r, "objective": j }))
                    .collect(),
            );
        }
    }
    let mut value = report_json(args.input.describe(&config), &report);
    value["radius_profiles"] = Value::Object(profiles);
    match &args.out {
        Some(path) => write_json(path, &value),
        None => {
            println!("{}", serde_json::to_string_pretty(&round_all(value))?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COD_LOG", "warn")).init();
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let outcome = match &cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::DumpDiagnostics(a) => cmd_diagnostics(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
