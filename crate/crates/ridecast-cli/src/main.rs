//! Command-line surface for the ride-duration pipeline.
//!
//! Subcommands mirror the workflow: `extract` builds a feature store from
//! raw exports, `train` cross-validates every model candidate and saves
//! the best one, `predict`/`checkpoint`/`whatif` answer questions about a
//! single GPX route, `report` emits plot-ready CSVs, and `synth` generates
//! a seeded synthetic corpus.
//!
//! Exit codes are a stable contract: 0 success, 2 ingestion/generation
//! failure, 3 training failure, 4 prediction or schema failure. Set
//! `RIDECAST_LOG` (error/warn/info/debug) for verbosity.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Deserialize;

use ridecast::athlete::{build_state_features, evolve_fitness, load_history_from_csv, ZoneConfig};
use ridecast::checkpoint::{
    checkpoints_to_csv, progressive_predictions, whatif, FitnessOverrides, DEFAULT_FRACTIONS,
};
use ridecast::dataset::{assemble, read_store, write_store, Dataset};
use ridecast::explain::{
    attribution_to_json, global_importance, importance_to_csv, shap_at_training_mean,
};
use ridecast::ingest::{
    filter_activities, load_gpx_profile, read_activities_csv, read_wellness_csv, RouteProfile,
};
use ridecast::regression::{train_full, TrainedLinearModel};
use ridecast::schema::{self, FeatureConfig};
use ridecast::synthetic::{generate_corpus, write_corpus, ClimbPlacement, GeneratorSpec};
use ridecast::topology::extract_topology;
use ridecast::validation::{
    consensus_penalty, curve_to_csv, error_breakdown, learning_curve, nested_cv, stratified_folds,
    CVReport, ModelSpec, STRATA,
};

#[derive(Parser)]
#[command(
    name = "ridecast",
    version,
    about = "Predict cycling ride duration from route topology and training-load state"
)]
struct Cli {
    /// JSON file holding default paths and options; explicit flags win
    #[arg(long, global = true, value_name = "FILE")]
    config_file: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a feature store from activity, GPX, and training-load exports
    Extract(ExtractArgs),
    /// Cross-validate all model candidates and save the best model
    Train(TrainArgs),
    /// Predict duration for one GPX route, with per-feature attribution
    Predict(PredictArgs),
    /// Forecast total duration from progressive route prefixes
    Checkpoint(CheckpointArgs),
    /// Predict under a hypothetical fitness state, with a CTL sweep
    Whatif(WhatifArgs),
    /// Emit plot-ready report CSVs for a trained model and store
    Report(ReportArgs),
    /// Generate a synthetic corpus with a known ground truth
    Synth(SynthArgs),
}

/// Defaults loadable from `--config-file`; any explicit flag overrides the
/// corresponding field.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    activities: Option<PathBuf>,
    gpx_dir: Option<PathBuf>,
    loads: Option<PathBuf>,
    zone_seconds: Option<PathBuf>,
    wellness: Option<PathBuf>,
    zones: Option<PathBuf>,
    store: Option<PathBuf>,
    model: Option<PathBuf>,
    config: Option<String>,
    seed: Option<u64>,
    fractions: Option<Vec<f64>>,
    out: Option<PathBuf>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read config file {}: {e}", p.display()))?;
                serde_json::from_str(&text)
                    .map_err(|e| format!("bad config file {}: {e}", p.display()))
            }
        }
    }
}

#[derive(Args)]
struct ExtractArgs {
    /// Activities CSV (id, start_time, moving_time, elapsed_time, distance, type)
    #[arg(long)]
    activities: Option<PathBuf>,
    /// Directory holding one `<id>.gpx` per activity
    #[arg(long)]
    gpx_dir: Option<PathBuf>,
    /// Daily training-load CSV (date, tss)
    #[arg(long)]
    loads: Option<PathBuf>,
    /// Zone-seconds CSV (date, channel, zone, seconds)
    #[arg(long)]
    zone_seconds: Option<PathBuf>,
    /// Wellness CSV for cross-checking the fitness recursion
    #[arg(long)]
    wellness: Option<PathBuf>,
    /// Zone configuration JSON (ftp, max_hr, zone bounds)
    #[arg(long)]
    zones: Option<PathBuf>,
    /// Feature configuration: topo, topo-fit, or topo-fit-zones
    #[arg(long)]
    config: Option<String>,
    /// Output feature-store path (.csv plus a .meta.json sidecar)
    #[arg(long)]
    store: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Feature store written by `extract`
    #[arg(long)]
    store: Option<PathBuf>,
    /// Where to save the best model (JSON)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Cross-validation seed
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the comparison table and best-model report
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model JSON
    #[arg(long)]
    model: Option<PathBuf>,
    /// Route to predict
    gpx: PathBuf,
    /// Daily training-load CSV, for models that need athlete state
    #[arg(long)]
    loads: Option<PathBuf>,
    /// Zone-seconds CSV accompanying --loads
    #[arg(long)]
    zone_seconds: Option<PathBuf>,
    /// Date to evaluate athlete state at (default: today)
    #[arg(long)]
    date: Option<NaiveDate>,
    /// Override chronic training load (CTL)
    #[arg(long)]
    ctl: Option<f64>,
    /// Override acute training load (ATL)
    #[arg(long)]
    atl: Option<f64>,
    /// Override training stress balance (TSB); default ctl − atl
    #[arg(long)]
    tsb: Option<f64>,
    /// Override 7-day CTL ramp rate; default 0
    #[arg(long)]
    ramp: Option<f64>,
    /// Directory for prediction.json (default: current directory)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckpointArgs {
    /// Trained topology-only model JSON
    #[arg(long)]
    model: Option<PathBuf>,
    /// Route to forecast progressively
    gpx: PathBuf,
    /// Comma-separated distance fractions in (0, 1], strictly increasing
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    /// Directory for checkpoints.csv (default: current directory)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WhatifArgs {
    /// Trained topology+fitness model JSON
    #[arg(long)]
    model: Option<PathBuf>,
    /// Route to evaluate
    gpx: PathBuf,
    /// Target chronic training load (CTL)
    #[arg(long)]
    ctl: f64,
    /// Target acute training load (ATL)
    #[arg(long)]
    atl: f64,
    /// Target training stress balance; default ctl − atl
    #[arg(long)]
    tsb: Option<f64>,
    /// Target 7-day ramp rate; default 0
    #[arg(long)]
    ramp: Option<f64>,
    /// Directory for whatif_sweep.csv (default: current directory)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Feature store written by `extract`
    #[arg(long)]
    store: Option<PathBuf>,
    /// Trained model JSON
    #[arg(long)]
    model: Option<PathBuf>,
    /// Seed for the learning-curve resampling
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the report CSVs
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Corpus seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of activities
    #[arg(long, default_value_t = 96)]
    n: usize,
    /// Duration noise σ in minutes
    #[arg(long, default_value_t = 5.0)]
    noise: f64,
    /// Climb placement: front, back, or uniform
    #[arg(long, default_value = "uniform")]
    placement: String,
    /// Directory to write the corpus into
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // die quietly when piped into head/less instead of panicking
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("RIDECAST_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let file = match FileConfig::load(cli.config_file.as_deref()) {
        Ok(f) => f,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };
    let (result, failure_code) = match cli.command {
        Command::Extract(args) => (cmd_extract(args, &file), 2),
        Command::Train(args) => (cmd_train(args, &file), 3),
        Command::Predict(args) => (cmd_predict(args, &file), 4),
        Command::Checkpoint(args) => (cmd_checkpoint(args, &file), 4),
        Command::Whatif(args) => (cmd_whatif(args, &file), 4),
        Command::Report(args) => (cmd_report(args, &file), 4),
        Command::Synth(args) => (cmd_synth(args, &file), 2),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(failure_code)
        }
    }
}

type CmdResult = Result<(), String>;

fn required(flag: &str, value: Option<PathBuf>) -> Result<PathBuf, String> {
    value.ok_or_else(|| format!("--{flag} is required (flag or config file)"))
}

fn parse_config(name: Option<String>) -> Result<FeatureConfig, String> {
    match name {
        None => Ok(FeatureConfig::TopologyOnly),
        Some(n) => FeatureConfig::from_cli_name(&n)
            .ok_or_else(|| format!("unknown feature config {n:?} (expected topo, topo-fit, or topo-fit-zones)")),
    }
}

fn out_dir(value: Option<PathBuf>) -> Result<PathBuf, String> {
    let dir = value.unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    Ok(dir)
}

fn write_file(path: &Path, content: &str) -> Result<(), String> {
    std::fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

// ---------------------------------------------------------------- extract

fn cmd_extract(args: ExtractArgs, file: &FileConfig) -> CmdResult {
    let activities_path = required("activities", args.activities.or(file.activities.clone()))?;
    let gpx_dir = required("gpx-dir", args.gpx_dir.or(file.gpx_dir.clone()))?;
    let store_path = required("store", args.store.or(file.store.clone()))?;
    let config = parse_config(args.config.or(file.config.clone()))?;
    let loads_path = args.loads.or(file.loads.clone());
    let zone_seconds_path = args.zone_seconds.or(file.zone_seconds.clone());
    let wellness_path = args.wellness.or(file.wellness.clone());
    let zones_path = args.zones.or(file.zones.clone());

    let zones = match &zones_path {
        Some(p) => ZoneConfig::from_json_file(p).map_err(|e| e.to_string())?,
        None => {
            info!("no zone config given; intensity filtering disabled");
            ZoneConfig {
                ftp: 0.0,
                ..ZoneConfig::default()
            }
        }
    };

    let records = read_activities_csv(&activities_path).map_err(|e| e.to_string())?;
    let (retained, excluded) = filter_activities(&records, zones.ftp);
    for ex in &excluded {
        warn!("excluded {}: {}", ex.id, ex.reason);
    }
    println!(
        "activities: {} read, {} retained, {} excluded",
        records.len(),
        retained.len(),
        excluded.len()
    );

    if retained.is_empty() {
        let empty = Dataset {
            rows: Vec::new(),
            schema: schema::feature_names(config),
            config,
        };
        write_store(&empty, &store_path).map_err(|e| e.to_string())?;
        warn!("no activities retained; wrote an empty store");
        println!("wrote empty store to {}", store_path.display());
        return Ok(());
    }

    let mut profiles: BTreeMap<String, RouteProfile> = BTreeMap::new();
    let mut gpx_failures = Vec::new();
    for activity in &retained {
        let path = gpx_dir.join(format!("{}.gpx", activity.id));
        match load_gpx_profile(&path) {
            Ok(profile) => {
                profiles.insert(activity.id.clone(), profile);
            }
            Err(e) => gpx_failures.push(format!("{}: {e}", path.display())),
        }
    }
    if !gpx_failures.is_empty() {
        return Err(format!(
            "{} GPX file(s) failed to ingest:\n  {}",
            gpx_failures.len(),
            gpx_failures.join("\n  ")
        ));
    }

    let loads = load_history_from_csv(loads_path.as_deref(), zone_seconds_path.as_deref())
        .map_err(|e| e.to_string())?;
    if let Some(path) = &wellness_path {
        cross_check_wellness(path, &loads)?;
    }

    let dataset = assemble(&retained, &profiles, &loads, config).map_err(|e| e.to_string())?;
    write_store(&dataset, &store_path).map_err(|e| e.to_string())?;
    println!(
        "wrote {} rows × {} features ({}) to {}",
        dataset.rows.len(),
        dataset.schema.len(),
        config.cli_name(),
        store_path.display()
    );
    Ok(())
}

/// Compare platform-reported CTL against our own recursion on matching
/// dates; a large gap usually means the load history is incomplete.
fn cross_check_wellness(path: &Path, loads: &[ridecast::athlete::DailyLoad]) -> CmdResult {
    let wellness = read_wellness_csv(path).map_err(|e| e.to_string())?;
    if loads.is_empty() {
        info!("wellness file read ({} rows); no load history to compare", wellness.len());
        return Ok(());
    }
    let ours = evolve_fitness(loads).map_err(|e| e.to_string())?;
    let by_date: BTreeMap<NaiveDate, f64> = ours.iter().map(|s| (s.date, s.ctl)).collect();
    let mut worst: Option<(NaiveDate, f64)> = None;
    let mut compared = 0usize;
    for record in &wellness {
        if let (Some(theirs), Some(ours)) = (record.ctl, by_date.get(&record.date)) {
            compared += 1;
            let diff = (theirs - ours).abs();
            if worst.is_none_or(|(_, w)| diff > w) {
                worst = Some((record.date, diff));
            }
        }
    }
    match worst {
        Some((date, diff)) if compared > 0 => info!(
            "wellness cross-check: {compared} days compared, worst CTL difference {diff:.2} on {date}"
        ),
        _ => info!("wellness file read ({} rows); no overlapping CTL values", wellness.len()),
    }
    Ok(())
}

// ------------------------------------------------------------------ train

/// One comparison-table row.
struct TableRow {
    label: String,
    config_label: String,
    report: CVReport,
}

fn comparison_csv(rows: &[TableRow]) -> String {
    let mut out =
        String::from("model,config,test_mae,test_mae_sd,test_r2,train_mae,gap,stability,overfit\n");
    for row in rows {
        let r = &row.report;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.label,
            row.config_label,
            r.test_mae_mean,
            r.test_mae_sd,
            r.test_r2_mean.map(|v| v.to_string()).unwrap_or_default(),
            r.train_mae_mean,
            r.gap_mean,
            r.stability,
            r.overfit
        )
        .expect("string writes cannot fail");
    }
    out
}

fn comparison_table(rows: &[TableRow]) -> String {
    let mut out = format!(
        "{:<28} {:<15} {:>9} {:>8} {:>8}\n",
        "model", "features", "test MAE", "±sd", "R²"
    );
    for row in rows {
        let r = &row.report;
        let r2 = r
            .test_r2_mean
            .map(|v| format!("{v:.3}"))
            .unwrap_or_else(|| "—".into());
        writeln!(
            out,
            "{:<28} {:<15} {:>9.2} {:>8.2} {:>8}",
            row.label, row.config_label, r.test_mae_mean, r.test_mae_sd, r2
        )
        .expect("string writes cannot fail");
    }
    out
}

/// The distance+ascent two-column benchmark dataset.
fn distance_elevation_view(dataset: &Dataset) -> Result<Dataset, String> {
    let mut columns = Vec::new();
    for name in ["total_distance", "total_ascent"] {
        let idx = dataset
            .schema
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| format!("store is missing the {name} column"))?;
        columns.push((name.to_string(), idx));
    }
    let rows = dataset
        .rows
        .iter()
        .map(|row| ridecast::dataset::FeatureRow {
            activity_id: row.activity_id.clone(),
            date: row.date,
            values: columns.iter().map(|(_, i)| row.values[*i]).collect(),
            target: row.target,
        })
        .collect();
    Ok(Dataset {
        rows,
        schema: columns.into_iter().map(|(n, _)| n).collect(),
        config: FeatureConfig::TopologyOnly,
    })
}

fn cmd_train(args: TrainArgs, file: &FileConfig) -> CmdResult {
    let store_path = required("store", args.store.or(file.store.clone()))?;
    let model_path = required("model", args.model.or(file.model.clone()))?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out = out_dir(args.out.or(file.out.clone()))?;

    let dataset = read_store(&store_path).map_err(|e| e.to_string())?;
    let configs: Vec<FeatureConfig> = [
        FeatureConfig::TopologyOnly,
        FeatureConfig::TopologyFitness,
        FeatureConfig::TopologyFitnessZones,
    ]
    .into_iter()
    .filter(|c| dataset.restrict(*c).is_ok())
    .collect();
    let views: Vec<Dataset> = configs
        .iter()
        .map(|c| dataset.restrict(*c).expect("restriction just checked"))
        .collect();

    let plan = stratified_folds(&views[0], STRATA, seed).map_err(|e| e.to_string())?;
    info!(
        "cross-validating {} rows over {} folds (seed {seed})",
        dataset.rows.len(),
        plan.k
    );

    let mut rows: Vec<TableRow> = Vec::new();
    for spec in [ModelSpec::MeanBaseline, ModelSpec::MedianBaseline] {
        let report = nested_cv(&views[0], spec, &plan).map_err(|e| e.to_string())?;
        rows.push(TableRow {
            label: spec.name().to_string(),
            config_label: "none".into(),
            report,
        });
    }
    let benchmark = distance_elevation_view(&views[0])?;
    let report = nested_cv(&benchmark, ModelSpec::Ols, &plan).map_err(|e| e.to_string())?;
    rows.push(TableRow {
        label: "ols-dist-elev".into(),
        config_label: "dist+ascent".into(),
        report,
    });
    for (config, view) in configs.iter().zip(&views) {
        for spec in [ModelSpec::Ridge, ModelSpec::Lasso, ModelSpec::ElasticNet] {
            let report = nested_cv(view, spec, &plan).map_err(|e| e.to_string())?;
            rows.push(TableRow {
                label: spec.name().to_string(),
                config_label: config.cli_name().to_string(),
                report,
            });
        }
    }

    print!("{}", comparison_table(&rows));
    write_file(&out.join("cv_comparison.csv"), &comparison_csv(&rows))?;

    // the saved model comes from the regularized candidates — baselines and
    // the two-column benchmark are reference points, not deployable models
    let best = rows
        .iter()
        .skip(3)
        .min_by(|a, b| {
            a.report
                .test_mae_mean
                .partial_cmp(&b.report.test_mae_mean)
                .expect("MAE means are finite")
        })
        .ok_or("no regularized candidate was evaluated")?;
    let penalty = consensus_penalty(&best.report)
        .ok_or("best candidate has no selected penalty to refit with")?;
    let view = views
        .iter()
        .find(|v| v.config.cli_name() == best.config_label)
        .expect("best row came from a known view");
    let model = train_full(view, &penalty).map_err(|e| e.to_string())?;
    model.to_json_file(&model_path).map_err(|e| e.to_string())?;
    write_file(
        &out.join("best_cv_report.json"),
        &best.report.to_json().map_err(|e| e.to_string())?,
    )?;
    println!(
        "best: {} on {} (test MAE {:.2} min) → {}",
        best.label,
        best.config_label,
        best.report.test_mae_mean,
        model_path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- predict

/// Resolve [ctl, atl, tsb, ramp] from override flags and/or a load history.
fn resolve_fitness(
    loads_path: Option<&Path>,
    zone_seconds_path: Option<&Path>,
    date: Option<NaiveDate>,
    ctl: Option<f64>,
    atl: Option<f64>,
    tsb: Option<f64>,
    ramp: Option<f64>,
    need_zones: bool,
) -> Result<Vec<f64>, String> {
    let date = date.unwrap_or_else(|| chrono::Utc::now().date_naive());
    let mut state: Vec<f64> = if loads_path.is_some() {
        let loads =
            load_history_from_csv(loads_path, zone_seconds_path).map_err(|e| e.to_string())?;
        build_state_features(&loads, date)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|(_, v)| v)
            .collect()
    } else {
        if need_zones {
            return Err(
                "this model needs rolling zone-hour features; provide --loads (and --zone-seconds)"
                    .into(),
            );
        }
        let ctl = ctl.ok_or("this model needs athlete state: pass --ctl/--atl or --loads")?;
        let atl = atl.ok_or("this model needs athlete state: pass --ctl/--atl or --loads")?;
        vec![ctl, atl, tsb.unwrap_or(ctl - atl), ramp.unwrap_or(0.0)]
    };
    // explicit flags win over history-derived values
    if let Some(v) = ctl {
        state[0] = v;
    }
    if let Some(v) = atl {
        state[1] = v;
    }
    if let Some(v) = tsb {
        state[2] = v;
    } else if ctl.is_some() || atl.is_some() {
        state[2] = state[0] - state[1];
    }
    if let Some(v) = ramp {
        state[3] = v;
    }
    Ok(state)
}

fn feature_row_for(
    model: &TrainedLinearModel,
    profile: &RouteProfile,
    state: Option<&[f64]>,
) -> Result<Vec<Option<f64>>, String> {
    let topo = extract_topology(profile).map_err(|e| e.to_string())?;
    let mut row: Vec<Option<f64>> = topo.values().into_iter().map(|(_, v)| v).collect();
    if let Some(state) = state {
        let needed = model.feature_names.len() - row.len();
        if state.len() < needed {
            return Err(format!(
                "model needs {needed} athlete-state features but only {} are available",
                state.len()
            ));
        }
        row.extend(state.iter().take(needed).map(|v| Some(*v)));
    }
    if row.len() != model.feature_names.len() {
        return Err(format!(
            "model expects {} features but the route row has {}",
            model.feature_names.len(),
            row.len()
        ));
    }
    Ok(row)
}

fn cmd_predict(args: PredictArgs, file: &FileConfig) -> CmdResult {
    let model_path = required("model", args.model.or(file.model.clone()))?;
    let out = out_dir(args.out.or(file.out.clone()))?;
    let model = TrainedLinearModel::from_json_file(&model_path).map_err(|e| e.to_string())?;
    let profile = load_gpx_profile(&args.gpx).map_err(|e| e.to_string())?;

    let state: Option<Vec<f64>> = if model.config.includes_fitness() {
        Some(resolve_fitness(
            args.loads.or(file.loads.clone()).as_deref(),
            args.zone_seconds.or(file.zone_seconds.clone()).as_deref(),
            args.date,
            args.ctl,
            args.atl,
            args.tsb,
            args.ramp,
            model.config.includes_zones(),
        )?)
    } else {
        None
    };

    let row = feature_row_for(&model, &profile, state.as_deref())?;
    let attribution = shap_at_training_mean(&model, &row).map_err(|e| e.to_string())?;
    println!(
        "predicted duration: {:.1} min ({:.2} h)",
        attribution.prediction,
        attribution.prediction / 60.0
    );

    // the largest contributors, either direction
    let mut order: Vec<usize> = (0..attribution.contributions.len()).collect();
    order.sort_by(|&a, &b| {
        attribution.contributions[b]
            .abs()
            .partial_cmp(&attribution.contributions[a].abs())
            .expect("contributions are finite")
    });
    println!("baseline (typical ride): {:.1} min", attribution.base_value);
    for &i in order.iter().take(12) {
        let phi = attribution.contributions[i];
        if phi != 0.0 {
            println!("  {:>+8.2} min  {}", phi, model.feature_names[i]);
        }
    }

    let json =
        attribution_to_json(&attribution, &model.feature_names).map_err(|e| e.to_string())?;
    let path = out.join("prediction.json");
    write_file(&path, &json)?;
    println!("wrote {}", path.display());
    Ok(())
}

// -------------------------------------------------------------- checkpoint

fn cmd_checkpoint(args: CheckpointArgs, file: &FileConfig) -> CmdResult {
    let model_path = required("model", args.model.or(file.model.clone()))?;
    let out = out_dir(args.out.or(file.out.clone()))?;
    let fractions = args
        .fractions
        .or(file.fractions.clone())
        .unwrap_or_else(|| DEFAULT_FRACTIONS.to_vec());
    let model = TrainedLinearModel::from_json_file(&model_path).map_err(|e| e.to_string())?;
    let profile = load_gpx_profile(&args.gpx).map_err(|e| e.to_string())?;

    let checkpoints =
        progressive_predictions(&profile, &model, &fractions).map_err(|e| e.to_string())?;
    println!(
        "{:>9} {:>9} {:>9} {:>7} {:>10} {:>12}",
        "fraction", "dist km", "ascent m", "climbs", "pred min", "Δmin per %"
    );
    for c in &checkpoints {
        let rate = c
            .change_rate
            .map(|r| format!("{r:.2}"))
            .unwrap_or_else(|| "—".into());
        println!(
            "{:>9.2} {:>9.1} {:>9.0} {:>7} {:>10.1} {:>12}",
            c.fraction, c.prefix_distance_km, c.prefix_ascent_m, c.prefix_climbs, c.predicted_minutes, rate
        );
    }
    let path = out.join("checkpoints.csv");
    write_file(&path, &checkpoints_to_csv(&checkpoints))?;
    println!("wrote {}", path.display());
    Ok(())
}

// ------------------------------------------------------------------ whatif

fn cmd_whatif(args: WhatifArgs, file: &FileConfig) -> CmdResult {
    let model_path = required("model", args.model.or(file.model.clone()))?;
    let out = out_dir(args.out.or(file.out.clone()))?;
    let model = TrainedLinearModel::from_json_file(&model_path).map_err(|e| e.to_string())?;
    let profile = load_gpx_profile(&args.gpx).map_err(|e| e.to_string())?;

    let overrides = FitnessOverrides {
        ctl: args.ctl,
        atl: args.atl,
        tsb: args.tsb.unwrap_or(args.ctl - args.atl),
        ramp_rate: args.ramp.unwrap_or(0.0),
    };
    let predicted = whatif(&profile, &model, &overrides).map_err(|e| e.to_string())?;
    println!(
        "predicted duration at CTL {:.0} / ATL {:.0} / TSB {:+.0}: {:.1} min",
        overrides.ctl, overrides.atl, overrides.tsb, predicted
    );
    println!(
        "note: this reflects how predictions co-vary with fitness in the training data, not the causal effect of changing training"
    );

    // sweep CTL around the target, holding TSB fixed (ATL follows so that
    // tsb = ctl − atl stays internally consistent)
    let mut sweep = String::from("ctl,atl,tsb,ramp_rate,predicted_min\n");
    let mut ctl_grid = overrides.ctl - 30.0;
    while ctl_grid <= overrides.ctl + 30.0 + 1e-9 {
        if ctl_grid >= 0.0 {
            let point = FitnessOverrides {
                ctl: ctl_grid,
                atl: ctl_grid - overrides.tsb,
                tsb: overrides.tsb,
                ramp_rate: overrides.ramp_rate,
            };
            let p = whatif(&profile, &model, &point).map_err(|e| e.to_string())?;
            writeln!(
                sweep,
                "{},{},{},{},{}",
                point.ctl, point.atl, point.tsb, point.ramp_rate, p
            )
            .expect("string writes cannot fail");
        }
        ctl_grid += 5.0;
    }
    let path = out.join("whatif_sweep.csv");
    write_file(&path, &sweep)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ------------------------------------------------------------------ report

fn cmd_report(args: ReportArgs, file: &FileConfig) -> CmdResult {
    let store_path = required("store", args.store.or(file.store.clone()))?;
    let model_path = required("model", args.model.or(file.model.clone()))?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out = out_dir(args.out.or(file.out.clone()))?;

    let model = TrainedLinearModel::from_json_file(&model_path).map_err(|e| e.to_string())?;
    let store = read_store(&store_path).map_err(|e| e.to_string())?;
    let dataset = store.restrict(model.config).map_err(|e| e.to_string())?;

    let mut predictions = Vec::with_capacity(dataset.rows.len());
    let mut pva = String::from("activity_id,date,actual_min,predicted_min\n");
    for row in &dataset.rows {
        let p = model.predict(&row.values).map_err(|e| e.to_string())?;
        writeln!(pva, "{},{},{},{}", row.activity_id, row.date, row.target, p)
            .expect("string writes cannot fail");
        predictions.push(p);
    }
    write_file(&out.join("predicted_vs_actual.csv"), &pva)?;

    let breakdown = error_breakdown(&predictions, &dataset).map_err(|e| e.to_string())?;
    write_file(&out.join("error_breakdown.csv"), &breakdown.to_csv())?;

    let ranked = global_importance(&model, &dataset).map_err(|e| e.to_string())?;
    write_file(&out.join("importance.csv"), &importance_to_csv(&ranked))?;

    let plan = stratified_folds(&dataset, STRATA, seed).map_err(|e| e.to_string())?;
    let capacity = (0..plan.k)
        .map(|m| plan.outer_train(m).len())
        .min()
        .expect("a plan always has folds");
    let mut sizes = Vec::new();
    let mut size = 10usize;
    while size < capacity {
        sizes.push(size);
        size = (size as f64 * 1.6).ceil() as usize;
    }
    sizes.push(capacity);
    let curve =
        learning_curve(&dataset, &model.penalty, &sizes, seed).map_err(|e| e.to_string())?;
    write_file(&out.join("learning_curve.csv"), &curve_to_csv(&curve))?;

    println!(
        "wrote predicted_vs_actual.csv, error_breakdown.csv, importance.csv, learning_curve.csv to {}",
        out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------- synth

fn cmd_synth(args: SynthArgs, file: &FileConfig) -> CmdResult {
    let out = required("out", args.out.or(file.out.clone()))?;
    let placement = match args.placement.as_str() {
        "front" => ClimbPlacement::Front,
        "back" => ClimbPlacement::Back,
        "uniform" => ClimbPlacement::Uniform,
        other => return Err(format!("unknown placement {other:?} (expected front, back, or uniform)")),
    };
    let spec = GeneratorSpec {
        seed: args.seed.or(file.seed).unwrap_or(0),
        n_activities: args.n,
        noise_sd_min: args.noise,
        placement,
        ..GeneratorSpec::default()
    };
    let corpus = generate_corpus(&spec).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    write_corpus(&corpus, &out).map_err(|e| e.to_string())?;
    println!(
        "wrote {} activities ({} load days) to {}",
        corpus.activities.len(),
        corpus.loads.len(),
        out.display()
    );
    Ok(())
}
