//! End-to-end tests driving the compiled binary: the synth → extract →
//! train → predict/checkpoint/whatif/report pipeline on a small synthetic
//! corpus, plus the exit-code contract for the common failure modes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use ridecast::regression::TrainedLinearModel;
use ridecast::schema::FeatureConfig;
use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_ridecast")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should spawn")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "wrong exit code\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Shared workspace: one synthetic corpus, extracted stores, and trained
/// models, built once for the whole suite.
struct Fixture {
    #[allow(dead_code)]
    keep_alive: TempDir,
    root: PathBuf,
}

impl Fixture {
    fn corpus(&self) -> PathBuf {
        self.root.join("corpus")
    }
    fn gpx(&self, id: &str) -> String {
        self.corpus().join("gpx").join(format!("{id}.gpx")).display().to_string()
    }
    fn path(&self, name: &str) -> String {
        self.root.join(name).display().to_string()
    }
}

fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let keep_alive = TempDir::new().expect("temp dir");
        let root = keep_alive.path().to_path_buf();
        let fx = Fixture { keep_alive, root };

        let out = run(
            &fx.root,
            &["synth", "--seed", "11", "--n", "40", "--noise", "3", "--out", "corpus"],
        );
        assert_ok(&out);

        for (config, store) in [("topo-fit", "store_fit.csv"), ("topo", "store_topo.csv")] {
            let out = run(
                &fx.root,
                &[
                    "extract",
                    "--activities", "corpus/activities.csv",
                    "--gpx-dir", "corpus/gpx",
                    "--loads", "corpus/loads.csv",
                    "--zone-seconds", "corpus/zone_seconds.csv",
                    "--wellness", "corpus/wellness.csv",
                    "--config", config,
                    "--store", store,
                ],
            );
            assert_ok(&out);
        }
        for (store, model, outdir) in [
            ("store_fit.csv", "model_fit.json", "train_fit"),
            ("store_topo.csv", "model_topo.json", "train_topo"),
        ] {
            let out = run(
                &fx.root,
                &[
                    "train", "--store", store, "--model", model, "--seed", "5", "--out", outdir,
                ],
            );
            assert_ok(&out);
        }
        fx
    })
}

#[test]
fn pipeline_produces_stores_models_and_reports() {
    let fx = fixture();
    assert!(fx.root.join("store_fit.csv").exists());
    assert!(fx.root.join("store_fit.meta.json").exists());

    let table = std::fs::read_to_string(fx.root.join("train_fit/cv_comparison.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "model,config,test_mae,test_mae_sd,test_r2,train_mae,gap,stability,overfit"
    );
    // two baselines + distance/ascent benchmark + 3 penalties × 2 configs
    assert_eq!(lines.count(), 9);
    for label in ["baseline-mean", "baseline-median", "ols-dist-elev", "ridge", "lasso", "elasticnet"] {
        assert!(table.contains(label), "comparison table is missing {label}");
    }

    let model = TrainedLinearModel::from_json_file(&fx.root.join("model_fit.json")).unwrap();
    assert_eq!(model.config, FeatureConfig::TopologyFitness);
    let model = TrainedLinearModel::from_json_file(&fx.root.join("model_topo.json")).unwrap();
    assert_eq!(model.config, FeatureConfig::TopologyOnly);

    let out = run(
        &fx.root,
        &[
            "report",
            "--store", &fx.path("store_fit.csv"),
            "--model", &fx.path("model_fit.json"),
            "--seed", "5",
            "--out", &fx.path("report_out"),
        ],
    );
    assert_ok(&out);
    for name in [
        "predicted_vs_actual.csv",
        "error_breakdown.csv",
        "importance.csv",
        "learning_curve.csv",
    ] {
        let text = std::fs::read_to_string(fx.root.join("report_out").join(name)).unwrap();
        assert!(text.lines().count() > 1, "{name} should have data rows");
    }
    let pva = std::fs::read_to_string(fx.root.join("report_out/predicted_vs_actual.csv")).unwrap();
    assert_eq!(pva.lines().count(), 41, "one prediction per activity plus header");
}

#[test]
fn predict_reports_duration_and_attribution() {
    let fx = fixture();
    let out = run(
        &fx.root,
        &[
            "predict",
            "--model", &fx.path("model_fit.json"),
            &fx.gpx("syn-001"),
            "--ctl", "60",
            "--atl", "50",
            "--out", &fx.path("pred_flags"),
        ],
    );
    assert_ok(&out);
    let text = stdout(&out);
    assert!(text.contains("predicted duration"), "stdout: {text}");
    assert!(text.contains("total_distance"), "attribution should name features: {text}");

    let json = std::fs::read_to_string(fx.root.join("pred_flags/prediction.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    let base = parsed["base_value"].as_f64().unwrap();
    let prediction = parsed["prediction"].as_f64().unwrap();
    let sum: f64 = parsed["contributions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["phi"].as_f64().unwrap())
        .sum();
    assert!(
        (base + sum - prediction).abs() < 1e-9,
        "contributions should add up to the prediction"
    );

    // the same state supplied through a load history instead of flags
    let out = run(
        &fx.root,
        &[
            "predict",
            "--model", &fx.path("model_fit.json"),
            &fx.gpx("syn-001"),
            "--loads", &fx.path("corpus/loads.csv"),
            "--zone-seconds", &fx.path("corpus/zone_seconds.csv"),
            "--date", "2024-04-01",
            "--out", &fx.path("pred_loads"),
        ],
    );
    assert_ok(&out);
}

#[test]
fn checkpoint_fraction_one_matches_full_route_prediction() {
    let fx = fixture();
    let out = run(
        &fx.root,
        &[
            "checkpoint",
            "--model", &fx.path("model_topo.json"),
            &fx.gpx("syn-002"),
            "--out", &fx.path("ck_full"),
        ],
    );
    assert_ok(&out);
    let csv = std::fs::read_to_string(fx.root.join("ck_full/checkpoints.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "fraction,dist_km,ascent_m,climbs,predicted_min,change_rate"
    );
    assert_eq!(csv.lines().count(), 5, "four checkpoints plus header");
    let last = csv.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[0], "1");
    let at_full: f64 = fields[4].parse().unwrap();

    let out = run(
        &fx.root,
        &[
            "predict",
            "--model", &fx.path("model_topo.json"),
            &fx.gpx("syn-002"),
            "--out", &fx.path("pred_topo"),
        ],
    );
    assert_ok(&out);
    let json = std::fs::read_to_string(fx.root.join("pred_topo/prediction.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(
        parsed["prediction"].as_f64().unwrap(),
        at_full,
        "the whole-route checkpoint is the same prediction"
    );

    // custom fraction list flows through
    let out = run(
        &fx.root,
        &[
            "checkpoint",
            "--model", &fx.path("model_topo.json"),
            &fx.gpx("syn-002"),
            "--fractions", "0.5,1.0",
            "--out", &fx.path("ck_half"),
        ],
    );
    assert_ok(&out);
    let csv = std::fs::read_to_string(fx.root.join("ck_half/checkpoints.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn whatif_sweeps_ctl_around_the_target() {
    let fx = fixture();
    let out = run(
        &fx.root,
        &[
            "whatif",
            "--model", &fx.path("model_fit.json"),
            &fx.gpx("syn-003"),
            "--ctl", "70",
            "--atl", "55",
            "--out", &fx.path("wi"),
        ],
    );
    assert_ok(&out);
    assert!(stdout(&out).contains("predicted duration at CTL 70"));
    let csv = std::fs::read_to_string(fx.root.join("wi/whatif_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "ctl,atl,tsb,ramp_rate,predicted_min");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 13, "CTL 40..100 in steps of 5");
    for row in &rows {
        assert_eq!(row[2], 15.0, "TSB is held fixed across the sweep");
        assert!((row[0] - row[1] - row[2]).abs() < 1e-9, "atl tracks ctl − tsb");
    }
}

#[test]
fn train_output_is_deterministic_and_config_file_supplies_defaults() {
    let fx = fixture();
    let config = serde_json::json!({
        "store": fx.path("store_topo.csv"),
        "model": fx.path("model_cfg.json"),
        "seed": 5,
        "out": fx.path("train_cfg"),
    });
    let config_path = fx.root.join("train.json");
    std::fs::write(&config_path, config.to_string()).unwrap();

    let out = run(&fx.root, &["train", "--config-file", &config_path.display().to_string()]);
    assert_ok(&out);

    let a = std::fs::read(fx.root.join("train_topo/cv_comparison.csv")).unwrap();
    let b = std::fs::read(fx.root.join("train_cfg/cv_comparison.csv")).unwrap();
    assert_eq!(a, b, "same store and seed give byte-identical comparison tables");
    let a = std::fs::read(fx.root.join("model_topo.json")).unwrap();
    let b = std::fs::read(fx.root.join("model_cfg.json")).unwrap();
    assert_eq!(a, b, "same store and seed give byte-identical models");

    // a flag on top of the config file wins
    let out = run(
        &fx.root,
        &[
            "train",
            "--config-file", &config_path.display().to_string(),
            "--model", &fx.path("model_cfg2.json"),
            "--out", &fx.path("train_cfg2"),
        ],
    );
    assert_ok(&out);
    assert!(fx.root.join("model_cfg2.json").exists());
}

#[test]
fn fitness_model_without_athlete_state_exits_4() {
    let fx = fixture();
    let out = run(
        &fx.root,
        &["predict", "--model", &fx.path("model_fit.json"), &fx.gpx("syn-001")],
    );
    assert_exit(&out, 4);
    assert!(stderr(&out).contains("athlete state"));
}

#[test]
fn checkpoint_rejects_a_fitness_model_with_exit_4() {
    let fx = fixture();
    let out = run(
        &fx.root,
        &["checkpoint", "--model", &fx.path("model_fit.json"), &fx.gpx("syn-001")],
    );
    assert_exit(&out, 4);
    assert!(stderr(&out).contains("topology-only"));
}

#[test]
fn training_on_too_few_rows_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["synth", "--seed", "2", "--n", "3", "--out", "tiny"]);
    assert_ok(&out);
    let out = run(
        dir.path(),
        &[
            "extract",
            "--activities", "tiny/activities.csv",
            "--gpx-dir", "tiny/gpx",
            "--config", "topo",
            "--store", "tiny.csv",
        ],
    );
    assert_ok(&out);
    let out = run(
        dir.path(),
        &["train", "--store", "tiny.csv", "--model", "m.json", "--out", "t"],
    );
    assert_exit(&out, 3);
}

#[test]
fn unreadable_gpx_exits_2_with_a_diagnostic() {
    let fx = fixture();
    let dir = TempDir::new().unwrap();
    std::fs::create_dir(dir.path().join("gpx")).unwrap();
    std::fs::write(dir.path().join("gpx/syn-001.gpx"), "<gpx><trk></trk></gpx>").unwrap();
    std::fs::copy(
        fx.corpus().join("activities.csv"),
        dir.path().join("activities.csv"),
    )
    .unwrap();
    let out = run(
        dir.path(),
        &[
            "extract",
            "--activities", "activities.csv",
            "--gpx-dir", "gpx",
            "--config", "topo",
            "--store", "s.csv",
        ],
    );
    assert_exit(&out, 2);
    assert!(stderr(&out).contains("GPX"));
}

#[test]
fn empty_activities_file_writes_an_empty_store_and_exits_0() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("activities.csv"),
        "id,start_time,moving_time,elapsed_time,distance,type\n",
    )
    .unwrap();
    std::fs::create_dir(dir.path().join("gpx")).unwrap();
    let out = run(
        dir.path(),
        &[
            "extract",
            "--activities", "activities.csv",
            "--gpx-dir", "gpx",
            "--config", "topo",
            "--store", "empty.csv",
        ],
    );
    assert_ok(&out);
    let store = std::fs::read_to_string(dir.path().join("empty.csv")).unwrap();
    assert_eq!(store.lines().count(), 1, "header only");
    assert!(dir.path().join("empty.meta.json").exists());
}

#[test]
fn bad_placement_and_bad_config_names_are_rejected() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["synth", "--placement", "sideways", "--out", "x"]);
    assert_exit(&out, 2);
    assert!(stderr(&out).contains("placement"));

    let out = run(
        dir.path(),
        &[
            "extract",
            "--activities", "a.csv",
            "--gpx-dir", "g",
            "--config", "everything",
            "--store", "s.csv",
        ],
    );
    assert_exit(&out, 2);
    assert!(stderr(&out).contains("feature config"));
}
