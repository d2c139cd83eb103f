//! Model selection and honest error estimation: distance-stratified fold
//! plans, nested cross-validation with per-fold preprocessing, learning
//! curves, and error breakdowns by route difficulty.
//!
//! The outer folds estimate generalization error; hyperparameters are
//! chosen per outer fold on inner 3-fold splits of that fold's training
//! rows only, so no test row ever influences selection, imputation, or
//! scaling.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, RidecastError};
use crate::regression::{baselines, fit_spec, mae, r2, PenaltySpec, Preprocessor};
use crate::schema::FeatureConfig;

/// Number of distance strata used for fold balancing.
pub const STRATA: usize = 5;

/// Inner folds used for hyperparameter selection.
pub const INNER_K: usize = 3;

/// Points in each penalty grid.
pub const GRID_POINTS: usize = 50;

/// ElasticNet mixing values crossed with the α grid.
pub const L1_RATIO_GRID: [f64; 3] = [0.1, 0.5, 0.9];

/// A train-MAE-minus-test-MAE mean below this flags severe overfitting.
pub const OVERFIT_GAP_MIN: f64 = -2.0;

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let ratio = hi / lo;
    let mut grid: Vec<f64> = (0..count)
        .map(|i| lo * ratio.powf(i as f64 / (count - 1) as f64))
        .collect();
    grid[count - 1] = hi;
    grid
}

/// What to evaluate under cross-validation: a constant baseline or a linear
/// model family with its hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelSpec {
    MeanBaseline,
    MedianBaseline,
    Ols,
    Ridge,
    Lasso,
    ElasticNet,
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::MeanBaseline => "baseline-mean",
            ModelSpec::MedianBaseline => "baseline-median",
            ModelSpec::Ols => "ols",
            ModelSpec::Ridge => "ridge",
            ModelSpec::Lasso => "lasso",
            ModelSpec::ElasticNet => "elasticnet",
        }
    }

    pub fn from_cli_name(name: &str) -> Option<Self> {
        match name {
            "baseline-mean" => Some(ModelSpec::MeanBaseline),
            "baseline-median" => Some(ModelSpec::MedianBaseline),
            "ols" => Some(ModelSpec::Ols),
            "ridge" => Some(ModelSpec::Ridge),
            "lasso" => Some(ModelSpec::Lasso),
            "elasticnet" => Some(ModelSpec::ElasticNet),
        _ => None,
        }
    }

    /// The hyperparameter candidates searched on the inner folds. Empty for
    /// baselines (nothing to select).
    pub fn candidates(&self) -> Vec<PenaltySpec> {
        match self {
            ModelSpec::MeanBaseline | ModelSpec::MedianBaseline => vec![],
            ModelSpec::Ols => vec![PenaltySpec::ols()],
            ModelSpec::Ridge => log_grid(1e-3, 1e3, GRID_POINTS)
                .into_iter()
                .map(PenaltySpec::ridge)
                .collect(),
            ModelSpec::Lasso => log_grid(1e-4, 1e2, GRID_POINTS)
                .into_iter()
                .map(PenaltySpec::lasso)
                .collect(),
            ModelSpec::ElasticNet => {
                let alphas = log_grid(1e-4, 1e2, GRID_POINTS);
                L1_RATIO_GRID
                    .iter()
                    .flat_map(|&l1| alphas.iter().map(move |&a| PenaltySpec::elasticnet(a, l1)))
                    .collect()
            }
        }
    }
}

impl std::fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Outer folds, their inner splits, and the stratum labels that produced
/// them. All index vectors refer to dataset row positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub outer: Vec<Vec<usize>>,
    /// `inner[m]` partitions the m-th outer-training set into 3 folds.
    pub inner: Vec<Vec<Vec<usize>>>,
    /// Distance stratum per dataset row.
    pub strata: Vec<usize>,
}

impl FoldPlan {
    pub fn outer_train(&self, m: usize) -> Vec<usize> {
        let test = &self.outer[m];
        (0..self.strata.len())
            .filter(|i| !test.contains(i))
            .collect()
    }
}

/// Rank positions of `values` ascending, ties broken by index.
fn ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut rank = vec![0; values.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Deal `members` (already shuffled) of stratum `s` round-robin over `k`
/// folds, starting at fold `s mod k` so leftover rows rotate across strata.
fn deal(folds: &mut [Vec<usize>], members: &[usize], s: usize, k: usize) {
    for (i, &row) in members.iter().enumerate() {
        folds[(s + i) % k].push(row);
    }
}

fn stratified_split(
    rows: &[usize],
    distances: &[f64],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Vec<usize>>, Vec<usize>) {
    let local: Vec<f64> = rows.iter().map(|&i| distances[i]).collect();
    let rank = ranks(&local);
    let n = rows.len();
    let stratum_of = |pos: usize| (STRATA * rank[pos]) / n;

    let mut folds = vec![Vec::new(); k];
    let mut labels = vec![0; n];
    for s in 0..STRATA {
        let mut members: Vec<usize> = (0..n).filter(|&p| stratum_of(p) == s).collect();
        for &p in &members {
            labels[p] = s;
        }
        members.shuffle(rng);
        let member_rows: Vec<usize> = members.iter().map(|&p| rows[p]).collect();
        deal(&mut folds, &member_rows, s, k);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    (folds, labels)
}

fn distance_column(dataset: &Dataset) -> Result<Vec<f64>> {
    let col = dataset
        .schema
        .iter()
        .position(|n| n == "total_distance")
        .ok_or_else(|| RidecastError::SchemaMismatch {
            expected: "a total_distance column".into(),
            actual: "absent".into(),
        })?;
    Ok(dataset
        .rows
        .iter()
        .map(|r| r.values[col].unwrap_or(0.0))
        .collect())
}

/// Build a seeded fold plan: rows ranked by total distance, labeled with
/// their distance quintile, shuffled within each quintile, and dealt
/// round-robin into k folds. Each outer-training set then gets the same
/// treatment at k=3 for hyperparameter selection.
pub fn stratified_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let n = dataset.rows.len();
    if k < 2 || n < 2 * k {
        return Err(RidecastError::InsufficientData(format!(
            "{n} rows cannot support {k} stratified folds (need at least {})",
            2 * k
        )));
    }
    let distances = distance_column(dataset)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let all: Vec<usize> = (0..n).collect();
    let (outer, labels) = stratified_split(&all, &distances, k, &mut rng);
    let mut strata = vec![0; n];
    for (pos, &row) in all.iter().enumerate() {
        strata[row] = labels[pos];
    }

    let mut inner = Vec::with_capacity(k);
    for m in 0..k {
        let train: Vec<usize> = (0..n).filter(|i| !outer[m].contains(i)).collect();
        let (inner_folds, _) = stratified_split(&train, &distances, INNER_K, &mut rng);
        inner.push(inner_folds);
    }

    Ok(FoldPlan {
        k,
        seed,
        outer,
        inner,
        strata,
    })
}

/// Pick the candidate with the smallest mean inner MAE; exact ties go to
/// the larger α (then the larger l1 ratio) — when scores agree, prefer the
/// stronger regularizer.
pub fn select_best(scored: &[(PenaltySpec, f64)]) -> Option<PenaltySpec> {
    let mut best: Option<(PenaltySpec, f64)> = None;
    for &(spec, score) in scored {
        if !score.is_finite() {
            continue;
        }
        best = Some(match best {
            None => (spec, score),
            Some((b_spec, b_score)) => {
                let better = score < b_score
                    || (score == b_score
                        && (spec.alpha > b_spec.alpha
                            || (spec.alpha == b_spec.alpha && spec.l1_ratio > b_spec.l1_ratio)));
                if better {
                    (spec, score)
                } else {
                    (b_spec, b_score)
                }
            }
        });
    }
    best.map(|(s, _)| s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    /// Winning penalty from the inner search; `None` for baselines.
    pub chosen: Option<PenaltySpec>,
    pub test_mae: f64,
    /// `None` when R² was undefined on this fold (constant test targets).
    pub test_r2: Option<f64>,
    pub train_mae: f64,
    /// train MAE − test MAE; strongly negative means overfitting.
    pub gap: f64,
    /// Feature means of this fold's preprocessor — fitted on the fold's
    /// training rows only, recorded so isolation can be audited.
    pub preproc_means: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFailure {
    pub fold: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub model: String,
    pub config: FeatureConfig,
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldOutcome>,
    pub failures: Vec<FoldFailure>,
    pub test_mae_mean: f64,
    pub test_mae_sd: f64,
    pub test_r2_mean: Option<f64>,
    pub test_r2_sd: Option<f64>,
    pub train_mae_mean: f64,
    pub gap_mean: f64,
    /// Coefficient of variation of fold test MAE.
    pub stability: f64,
    pub overfit: bool,
}

fn sample_sd(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

impl CVReport {
    fn summarize(
        model: String,
        config: FeatureConfig,
        plan: &FoldPlan,
        folds: Vec<FoldOutcome>,
        failures: Vec<FoldFailure>,
    ) -> Result<CVReport> {
        if folds.is_empty() {
            return Err(RidecastError::InsufficientData(format!(
                "every fold failed: {:?}",
                failures
            )));
        }
        let maes: Vec<f64> = folds.iter().map(|f| f.test_mae).collect();
        let test_mae_mean = maes.iter().sum::<f64>() / maes.len() as f64;
        let test_mae_sd = sample_sd(&maes, test_mae_mean);
        let r2s: Vec<f64> = folds.iter().filter_map(|f| f.test_r2).collect();
        let (test_r2_mean, test_r2_sd) = if r2s.is_empty() {
            (None, None)
        } else {
            let m = r2s.iter().sum::<f64>() / r2s.len() as f64;
            (Some(m), Some(sample_sd(&r2s, m)))
        };
        let train_mae_mean =
            folds.iter().map(|f| f.train_mae).sum::<f64>() / folds.len() as f64;
        let gap_mean = folds.iter().map(|f| f.gap).sum::<f64>() / folds.len() as f64;
        let stability = if test_mae_mean == 0.0 {
            0.0
        } else {
            test_mae_sd / test_mae_mean
        };
        Ok(CVReport {
            model,
            config,
            k: plan.k,
            seed: plan.seed,
            folds,
            failures,
            test_mae_mean,
            test_mae_sd,
            test_r2_mean,
            test_r2_sd,
            train_mae_mean,
            gap_mean,
            stability,
            overfit: gap_mean < OVERFIT_GAP_MIN,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl std::fmt::Display for CVReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{} on {} ({} folds, seed {})",
            self.model, self.config, self.k, self.seed
        )?;
        writeln!(
            f,
            "  test MAE {:.2} ± {:.2} min   train MAE {:.2}   gap {:+.2}{}",
            self.test_mae_mean,
            self.test_mae_sd,
            self.train_mae_mean,
            self.gap_mean,
            if self.overfit { "  [overfit]" } else { "" }
        )?;
        match (self.test_r2_mean, self.test_r2_sd) {
            (Some(m), Some(s)) => writeln!(f, "  test R² {m:.3} ± {s:.3}   stability {:.3}", self.stability)?,
            _ => writeln!(f, "  test R² undefined   stability {:.3}", self.stability)?,
        }
        for fold in &self.folds {
            let alpha = fold
                .chosen
                .map(|c| format!("α={:.4}, l1={:.1}", c.alpha, c.l1_ratio))
                .unwrap_or_else(|| "constant".into());
            writeln!(
                f,
                "  fold {}: test MAE {:.2}, train MAE {:.2} ({alpha})",
                fold.fold, fold.test_mae, fold.train_mae
            )?;
        }
        for failure in &self.failures {
            writeln!(f, "  fold {} FAILED: {}", failure.fold, failure.error)?;
        }
        Ok(())
    }
}

struct FoldData {
    raw_train: Vec<Vec<Option<f64>>>,
    y_train: Vec<f64>,
    raw_test: Vec<Vec<Option<f64>>>,
    y_test: Vec<f64>,
}

fn gather(dataset: &Dataset, train: &[usize], test: &[usize]) -> FoldData {
    let pick_x = |idx: &[usize]| -> Vec<Vec<Option<f64>>> {
        idx.iter().map(|&i| dataset.rows[i].values.clone()).collect()
    };
    let pick_y = |idx: &[usize]| -> Vec<f64> {
        idx.iter().map(|&i| dataset.rows[i].target).collect()
    };
    FoldData {
        raw_train: pick_x(train),
        y_train: pick_y(train),
        raw_test: pick_x(test),
        y_test: pick_y(test),
    }
}

/// Mean inner-fold MAE per candidate; a candidate that fails any inner fold
/// scores infinity.
fn inner_scores(
    dataset: &Dataset,
    outer_train: &[usize],
    inner: &[Vec<usize>],
    candidates: &[PenaltySpec],
) -> Vec<(PenaltySpec, f64)> {
    let mut totals = vec![0.0f64; candidates.len()];
    for val in inner {
        let inner_train: Vec<usize> = outer_train
            .iter()
            .copied()
            .filter(|i| !val.contains(i))
            .collect();
        let data = gather(dataset, &inner_train, val);
        let step = || -> Result<Vec<f64>> {
            let pre = Preprocessor::fit(&data.raw_train)?;
            let x_tr = pre.transform_matrix(&data.raw_train)?;
            let x_val = pre.transform_matrix(&data.raw_test)?;
            let mut scores = Vec::with_capacity(candidates.len());
            for cand in candidates {
                match fit_spec(&x_tr, &data.y_train, cand) {
                    Ok(fit) => {
                        let preds: Vec<f64> =
                            x_val.iter().map(|z| fit.predict(z)).collect();
                        scores.push(mae(&preds, &data.y_test)?);
                    }
                    Err(_) => scores.push(f64::INFINITY),
                }
            }
            Ok(scores)
        };
        match step() {
            Ok(scores) => {
                for (t, s) in totals.iter_mut().zip(scores) {
                    *t += s;
                }
            }
            Err(_) => {
                for t in &mut totals {
                    *t = f64::INFINITY;
                }
            }
        }
    }
    candidates
        .iter()
        .zip(totals)
        .map(|(c, t)| (*c, t / inner.len() as f64))
        .collect()
}

/// Nested cross-validation under a prepared fold plan. Per outer fold:
/// choose the penalty on the inner splits, refit on the whole outer
/// training set, evaluate on the held-out fold. Fold-level model failures
/// are recorded, not fatal — the report aggregates whatever succeeded.
pub fn nested_cv(dataset: &Dataset, spec: ModelSpec, plan: &FoldPlan) -> Result<CVReport> {
    if plan.strata.len() != dataset.rows.len() {
        return Err(RidecastError::InvalidConfig(format!(
            "plan covers {} rows but the dataset has {}",
            plan.strata.len(),
            dataset.rows.len()
        )));
    }
    let candidates = spec.candidates();
    let mut folds = Vec::new();
    let mut failures = Vec::new();

    for m in 0..plan.k {
        let train = plan.outer_train(m);
        let test = &plan.outer[m];
        let data = gather(dataset, &train, test);

        let run = || -> Result<FoldOutcome> {
            let (train_preds, test_preds, chosen, preproc_means, converged);
            if candidates.is_empty() {
                let base = baselines(&data.y_train)?;
                let value = match spec {
                    ModelSpec::MeanBaseline => base.mean,
                    ModelSpec::MedianBaseline => base.median,
                    _ => unreachable!("only baselines have no candidates"),
                };
                train_preds = vec![value; data.y_train.len()];
                test_preds = vec![value; data.y_test.len()];
                chosen = None;
                preproc_means = Vec::new();
                converged = true;
            } else {
                let pick = if candidates.len() == 1 {
                    candidates[0]
                } else {
                    let scored = inner_scores(dataset, &train, &plan.inner[m], &candidates);
                    select_best(&scored).ok_or_else(|| {
                        RidecastError::InvalidConfig(
                            "every candidate failed on the inner folds".into(),
                        )
                    })?
                };
                let pre = Preprocessor::fit(&data.raw_train)?;
                let x_tr = pre.transform_matrix(&data.raw_train)?;
                let x_te = pre.transform_matrix(&data.raw_test)?;
                let fit = fit_spec(&x_tr, &data.y_train, &pick)?;
                train_preds = x_tr.iter().map(|z| fit.predict(z)).collect();
                test_preds = x_te.iter().map(|z| fit.predict(z)).collect();
                chosen = Some(pick);
                preproc_means = pre.means.clone();
                converged = fit.converged;
            }

            let train_mae = mae(&train_preds, &data.y_train)?;
            let test_mae = mae(&test_preds, &data.y_test)?;
            let test_r2 = r2(&test_preds, &data.y_test).ok();
            Ok(FoldOutcome {
                fold: m,
                chosen,
                test_mae,
                test_r2,
                train_mae,
                gap: train_mae - test_mae,
                preproc_means,
                converged,
            })
        };

        match run() {
            Ok(outcome) => folds.push(outcome),
            Err(e) => failures.push(FoldFailure {
                fold: m,
                error: e.to_string(),
            }),
        }
    }

    CVReport::summarize(spec.name().to_string(), dataset.config, plan, folds, failures)
}

/// The penalty to refit on the full dataset after nested cross-validation:
/// the one chosen most often across the outer folds, ties resolved toward
/// the stronger penalty (larger alpha, then larger l1 ratio) to match the
/// selection rule. `None` when no fold chose a penalty (baselines, or all
/// folds failed).
pub fn consensus_penalty(report: &CVReport) -> Option<PenaltySpec> {
    let mut counted: Vec<(PenaltySpec, usize)> = Vec::new();
    for fold in &report.folds {
        if let Some(pick) = fold.chosen {
            match counted.iter_mut().find(|(p, _)| *p == pick) {
                Some(entry) => entry.1 += 1,
                None => counted.push((pick, 1)),
            }
        }
    }
    counted
        .into_iter()
        .max_by(|(p, c), (q, d)| {
            c.cmp(d)
                .then(p.alpha.partial_cmp(&q.alpha).unwrap())
                .then(p.l1_ratio.partial_cmp(&q.l1_ratio).unwrap())
        })
        .map(|(p, _)| p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub size: usize,
    pub train_mae: f64,
    pub val_mae: f64,
}

/// Learning curve at a fixed penalty: for each requested training-set size,
/// fit on a seeded random subset of each fold's training rows and score
/// against the fold's held-out rows; report fold-averaged train and
/// validation MAE.
pub fn learning_curve(
    dataset: &Dataset,
    penalty: &PenaltySpec,
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[0] < 10 {
        return Err(RidecastError::InvalidConfig(
            "sizes must be strictly increasing and at least 10".into(),
        ));
    }
    let plan = stratified_folds(dataset, STRATA, seed)?;
    let capacity = (0..plan.k)
        .map(|m| plan.outer_train(m).len())
        .min()
        .unwrap();
    if *sizes.last().unwrap() > capacity {
        return Err(RidecastError::InvalidConfig(format!(
            "size {} exceeds the smallest training side ({capacity})",
            sizes.last().unwrap()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut points = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let mut train_total = 0.0;
        let mut val_total = 0.0;
        for m in 0..plan.k {
            let train = plan.outer_train(m);
            let subset: Vec<usize> = train
                .choose_multiple(&mut rng, size)
                .copied()
                .collect();
            let data = gather(dataset, &subset, &plan.outer[m]);
            let pre = Preprocessor::fit(&data.raw_train)?;
            let x_tr = pre.transform_matrix(&data.raw_train)?;
            let x_val = pre.transform_matrix(&data.raw_test)?;
            let fit = fit_spec(&x_tr, &data.y_train, penalty)?;
            let train_preds: Vec<f64> = x_tr.iter().map(|z| fit.predict(z)).collect();
            let val_preds: Vec<f64> = x_val.iter().map(|z| fit.predict(z)).collect();
            train_total += mae(&train_preds, &data.y_train)?;
            val_total += mae(&val_preds, &data.y_test)?;
        }
        points.push(CurvePoint {
            size,
            train_mae: train_total / plan.k as f64,
            val_mae: val_total / plan.k as f64,
        });
    }
    Ok(points)
}

pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("size,train_mae,val_mae\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.size, p.train_mae, p.val_mae));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierStats {
    pub distance_tier: usize,
    pub elevation_tier: usize,
    pub count: usize,
    pub mae: f64,
    /// Mean absolute percentage error, in percent.
    pub mape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub tiers: Vec<TierStats>,
}

impl ErrorBreakdown {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("distance_tier,elevation_tier,count,mae,mape\n");
        for t in &self.tiers {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t.distance_tier, t.elevation_tier, t.count, t.mae, t.mape
            ));
        }
        out
    }
}

/// Tercile label per value: thresholds at the n/3 and 2n/3 order
/// statistics, lower-exclusive so identical values always share a tier.
fn terciles(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = sorted[sorted.len() / 3];
    let hi = sorted[2 * sorted.len() / 3];
    values
        .iter()
        .map(|&v| if v < lo { 0 } else if v < hi { 1 } else { 2 })
        .collect()
}

/// Prediction error stratified by route difficulty: distance terciles
/// crossed with elevation-gain-per-km terciles. Only occupied tiers appear.
pub fn error_breakdown(predictions: &[f64], dataset: &Dataset) -> Result<ErrorBreakdown> {
    if predictions.len() != dataset.rows.len() {
        return Err(RidecastError::InvalidConfig(format!(
            "{} predictions for {} rows",
            predictions.len(),
            dataset.rows.len()
        )));
    }
    let gain_col = dataset
        .schema
        .iter()
        .position(|n| n == "elevation_gain_per_km")
        .ok_or_else(|| RidecastError::SchemaMismatch {
            expected: "an elevation_gain_per_km column".into(),
            actual: "absent".into(),
        })?;
    let distances = distance_column(dataset)?;
    let gains: Vec<f64> = dataset
        .rows
        .iter()
        .map(|r| r.values[gain_col].unwrap_or(0.0))
        .collect();
    let d_tier = terciles(&distances);
    let e_tier = terciles(&gains);

    let mut tiers = Vec::new();
    for d in 0..3 {
        for e in 0..3 {
            let members: Vec<usize> = (0..predictions.len())
                .filter(|&i| d_tier[i] == d && e_tier[i] == e)
                .collect();
            if members.is_empty() {
                continue;
            }
            let abs_errors: Vec<f64> = members
                .iter()
                .map(|&i| (predictions[i] - dataset.rows[i].target).abs())
                .collect();
            let mae = abs_errors.iter().sum::<f64>() / members.len() as f64;
            let mape = members
                .iter()
                .map(|&i| {
                    (predictions[i] - dataset.rows[i].target).abs() / dataset.rows[i].target
                })
                .sum::<f64>()
                / members.len() as f64
                * 100.0;
            tiers.push(TierStats {
                distance_tier: d,
                elevation_tier: e,
                count: members.len(),
                mae,
                mape,
            });
        }
    }
    Ok(ErrorBreakdown { tiers })
}
