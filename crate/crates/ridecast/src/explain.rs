//! Additive per-feature attribution for linear models.
//!
//! For a linear model on standardized features, the exact Shapley
//! decomposition under feature independence is closed-form: each feature
//! contributes its coefficient times its (standardized) displacement from
//! the background point. Attributions are reported in target units
//! (minutes), so they read directly as "this feature added/removed N
//! minutes relative to a typical ride".

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Result, RidecastError};
use crate::regression::TrainedLinearModel;

/// One prediction decomposed into additive per-feature contributions.
///
/// `base_value` is the model output at the background point and
/// `contributions[i]` is feature i's displacement term, aligned with the
/// model's feature names; they sum to `prediction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub base_value: f64,
    pub contributions: Vec<f64>,
    pub prediction: f64,
}

/// One feature's global importance: mean absolute contribution across a
/// dataset, in minutes. `rank` is 1-based, 1 = most important.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    pub mean_abs: f64,
    pub rank: usize,
}

fn check_row(model: &TrainedLinearModel, len: usize, what: &str) -> Result<()> {
    if len != model.feature_names.len() {
        return Err(RidecastError::SchemaMismatch {
            expected: format!("{} features", model.feature_names.len()),
            actual: format!("{len} in {what}"),
        });
    }
    Ok(())
}

/// Decompose one prediction relative to an explicit raw-space background
/// point (a complete feature vector, no missing values).
///
/// With standardized row `z` and standardized background `z⁰`:
/// `base_value = intercept + Σ βᵢ z⁰ᵢ` and `φᵢ = βᵢ (zᵢ − z⁰ᵢ)`, so
/// `base_value + Σ φᵢ` telescopes to the model's prediction for the row.
pub fn shap_linear(
    model: &TrainedLinearModel,
    row: &[Option<f64>],
    background: &[f64],
) -> Result<Attribution> {
    check_row(model, row.len(), "row")?;
    check_row(model, background.len(), "background")?;
    let z = model.preprocessor.transform(row)?;
    let z0: Vec<f64> = background
        .iter()
        .zip(&model.preprocessor.means)
        .zip(&model.preprocessor.stds)
        .map(|((b, m), s)| if *s > 0.0 { (b - m) / s } else { 0.0 })
        .collect();
    let base_value = model.predict_standardized(&z0);
    let contributions: Vec<f64> = model
        .coefficients
        .iter()
        .zip(&z)
        .zip(&z0)
        .map(|((c, zi), z0i)| c * (zi - z0i))
        .collect();
    Ok(Attribution {
        base_value,
        contributions,
        prediction: model.predict_standardized(&z),
    })
}

/// Decompose one prediction against the model's own training background:
/// the post-imputation training means stored in its preprocessor.
///
/// At that background the standardized point is the origin, so
/// `base_value` is exactly the fitted intercept.
pub fn shap_at_training_mean(
    model: &TrainedLinearModel,
    row: &[Option<f64>],
) -> Result<Attribution> {
    shap_linear(model, row, &model.preprocessor.means)
}

/// Rank every feature by its mean absolute contribution across a dataset,
/// using the training-mean background. Sorted descending; features with
/// equal importance keep schema order. Zero-coefficient features score
/// exactly zero.
pub fn global_importance(model: &TrainedLinearModel, dataset: &Dataset) -> Result<Vec<Importance>> {
    if dataset.schema != model.feature_names {
        return Err(RidecastError::SchemaMismatch {
            expected: format!("model schema ({} features)", model.feature_names.len()),
            actual: format!("dataset schema ({} features)", dataset.schema.len()),
        });
    }
    if dataset.rows.is_empty() {
        return Err(RidecastError::InsufficientData(
            "importance needs at least one row".into(),
        ));
    }
    let mut totals = vec![0.0_f64; model.feature_names.len()];
    for row in &dataset.rows {
        let attr = shap_at_training_mean(model, &row.values)?;
        for (t, phi) in totals.iter_mut().zip(&attr.contributions) {
            *t += phi.abs();
        }
    }
    let n = dataset.rows.len() as f64;
    let mut ranked: Vec<Importance> = model
        .feature_names
        .iter()
        .zip(&totals)
        .map(|(name, total)| Importance {
            feature: name.clone(),
            mean_abs: total / n,
            rank: 0,
        })
        .collect();
    // stable sort: ties keep schema order
    ranked.sort_by(|a, b| b.mean_abs.partial_cmp(&a.mean_abs).unwrap());
    for (i, imp) in ranked.iter_mut().enumerate() {
        imp.rank = i + 1;
    }
    Ok(ranked)
}

/// Render an importance ranking as CSV with header
/// `feature,mean_abs_shap,rank`.
pub fn importance_to_csv(ranked: &[Importance]) -> String {
    let mut out = String::from("feature,mean_abs_shap,rank\n");
    for imp in ranked {
        out.push_str(&format!("{},{},{}\n", imp.feature, imp.mean_abs, imp.rank));
    }
    out
}

/// Render one attribution as JSON, pairing contributions with feature
/// names in schema order.
pub fn attribution_to_json(attr: &Attribution, names: &[String]) -> Result<String> {
    #[derive(Serialize)]
    struct Term<'a> {
        feature: &'a str,
        phi: f64,
    }
    #[derive(Serialize)]
    struct Record<'a> {
        base_value: f64,
        prediction: f64,
        contributions: Vec<Term<'a>>,
    }
    if names.len() != attr.contributions.len() {
        return Err(RidecastError::SchemaMismatch {
            expected: format!("{} contributions", names.len()),
            actual: format!("{}", attr.contributions.len()),
        });
    }
    let record = Record {
        base_value: attr.base_value,
        prediction: attr.prediction,
        contributions: names
            .iter()
            .zip(&attr.contributions)
            .map(|(n, &phi)| Term { feature: n, phi })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&record)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureRow;
    use crate::regression::{train_full, PenaltyKind, PenaltySpec, Preprocessor};
    use crate::schema::{self, FeatureConfig, SCHEMA_VERSION};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Hand-built one-feature model: y = slope·x + intercept in raw space
    /// (identity preprocessing).
    fn line_model(slope: f64, intercept: f64) -> TrainedLinearModel {
        TrainedLinearModel {
            schema_version: SCHEMA_VERSION.to_string(),
            config: FeatureConfig::TopologyOnly,
            feature_names: vec!["x".to_string()],
            preprocessor: Preprocessor {
                medians: vec![0.0],
                means: vec![0.0],
                stds: vec![1.0],
            },
            penalty: PenaltySpec::ols(),
            coefficients: vec![slope],
            intercept,
            converged: true,
            iterations: 1,
        }
    }

    fn training_dataset(n: usize, noise: f64, seed: u64) -> Dataset {
        let names = schema::feature_names(FeatureConfig::TopologyOnly);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<FeatureRow> = (0..n)
            .map(|i| {
                let mut values: Vec<Option<f64>> = (0..names.len())
                    .map(|_| Some(rng.random_range(-1.0..1.0)))
                    .collect();
                if i % 9 == 3 {
                    values[7] = None; // exercise imputation inside attribution
                }
                let target = 120.0
                    + 30.0 * values[0].unwrap()
                    + 10.0 * values[1].unwrap()
                    + noise * rng.random_range(-1.0..1.0);
                FeatureRow {
                    activity_id: format!("a{i}"),
                    date: chrono::NaiveDate::from_ymd_opt(2024, 1, 1).unwrap()
                        + chrono::Days::new(i as u64),
                    values,
                    target,
                }
            })
            .collect();
        Dataset {
            rows,
            schema: names,
            config: FeatureConfig::TopologyOnly,
        }
    }

    #[test]
    fn background_row_gets_zero_contributions() {
        let ds = training_dataset(60, 1.0, 1);
        let model = train_full(&ds, &PenaltySpec::ridge(0.1)).unwrap();
        let row: Vec<Option<f64>> = model.preprocessor.means.iter().map(|&m| Some(m)).collect();
        let attr = shap_at_training_mean(&model, &row).unwrap();
        assert!(attr.contributions.iter().all(|&phi| phi == 0.0));
        assert_eq!(attr.base_value, model.intercept);
        assert_eq!(attr.prediction, attr.base_value);
    }

    #[test]
    fn one_feature_line_attributes_its_slope_times_displacement() {
        let model = line_model(2.0, 0.0);
        let attr = shap_linear(&model, &[Some(3.0)], &[0.0]).unwrap();
        assert_eq!(attr.contributions, vec![6.0]);
        assert_eq!(attr.base_value, 0.0);
        assert_eq!(attr.prediction, 6.0);
    }

    #[test]
    fn additivity_holds_on_random_rows() {
        let ds = training_dataset(80, 3.0, 2);
        let model = train_full(&ds, &PenaltySpec::lasso(0.05)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let row: Vec<Option<f64>> = (0..model.feature_names.len())
                .map(|_| {
                    if rng.random_range(0..10) == 0 {
                        None
                    } else {
                        Some(rng.random_range(-5.0..5.0))
                    }
                })
                .collect();
            let attr = shap_at_training_mean(&model, &row).unwrap();
            let reconstructed = attr.base_value + attr.contributions.iter().sum::<f64>();
            assert!(
                (reconstructed - attr.prediction).abs() < 1e-9,
                "additivity residual {}",
                (reconstructed - attr.prediction).abs()
            );
            assert_relative_eq!(
                attr.prediction,
                model.predict(&row).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn additivity_holds_for_arbitrary_backgrounds() {
        let ds = training_dataset(60, 2.0, 3);
        let model = train_full(&ds, &PenaltySpec::elasticnet(0.05, 0.5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let background: Vec<f64> = (0..model.feature_names.len())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        let row: Vec<Option<f64>> = (0..model.feature_names.len())
            .map(|_| Some(rng.random_range(-2.0..2.0)))
            .collect();
        let attr = shap_linear(&model, &row, &background).unwrap();
        let reconstructed = attr.base_value + attr.contributions.iter().sum::<f64>();
        assert!((reconstructed - attr.prediction).abs() < 1e-9);
        // base really is the prediction at the background point
        let bg_row: Vec<Option<f64>> = background.iter().map(|&v| Some(v)).collect();
        assert_relative_eq!(
            attr.base_value,
            model.predict(&bg_row).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_coefficient_features_have_exactly_zero_importance() {
        let ds = training_dataset(80, 0.5, 4);
        // strong lasso zeroes every column the target does not depend on
        let model = train_full(&ds, &PenaltySpec::lasso(5.0)).unwrap();
        let zeroed: Vec<&String> = model
            .feature_names
            .iter()
            .zip(&model.coefficients)
            .filter(|(_, &c)| c == 0.0)
            .map(|(n, _)| n)
            .collect();
        assert!(!zeroed.is_empty(), "lasso at alpha=5 should prune something");
        let ranked = global_importance(&model, &ds).unwrap();
        for imp in &ranked {
            if zeroed.contains(&&imp.feature) {
                assert_eq!(imp.mean_abs, 0.0, "{}", imp.feature);
            }
        }
    }

    #[test]
    fn the_planted_feature_ranks_first() {
        let ds = training_dataset(80, 0.5, 5);
        let model = train_full(&ds, &PenaltySpec::lasso(0.1)).unwrap();
        let ranked = global_importance(&model, &ds).unwrap();
        assert_eq!(ranked[0].feature, "total_distance"); // column 0, weight 30
        assert_eq!(ranked[0].rank, 1);
        assert!(ranked.windows(2).all(|w| w[0].mean_abs >= w[1].mean_abs));
        assert_eq!(ranked.len(), ds.schema.len());
    }

    #[test]
    fn importance_is_invariant_under_raw_feature_rescaling() {
        let ds = training_dataset(70, 1.0, 6);
        let mut rescaled = ds.clone();
        for row in &mut rescaled.rows {
            row.values[1] = row.values[1].map(|v| 2.5 * v - 7.0);
        }
        let spec = PenaltySpec::ridge(0.05);
        let a = global_importance(&train_full(&ds, &spec).unwrap(), &ds).unwrap();
        let b = global_importance(&train_full(&rescaled, &spec).unwrap(), &rescaled).unwrap();
        let order_a: Vec<&String> = a.iter().map(|i| &i.feature).collect();
        let order_b: Vec<&String> = b.iter().map(|i| &i.feature).collect();
        assert_eq!(order_a, order_b);
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x.mean_abs, y.mean_abs, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn equal_importance_ties_keep_schema_order() {
        let ds = training_dataset(40, 1.0, 8);
        let mut model = train_full(&ds, &PenaltySpec::ridge(0.1)).unwrap();
        // force a deterministic tie: identical standardized geometry is not
        // needed — zero coefficients tie at exactly 0.0
        for c in model.coefficients.iter_mut().skip(2) {
            *c = 0.0;
        }
        let ranked = global_importance(&model, &ds).unwrap();
        let zero_tail: Vec<&String> = ranked
            .iter()
            .filter(|i| i.mean_abs == 0.0)
            .map(|i| &i.feature)
            .collect();
        let schema_order: Vec<&String> = ds.schema.iter().skip(2).collect();
        assert_eq!(zero_tail, schema_order);
    }

    #[test]
    fn csv_table_lists_rank_feature_and_magnitude() {
        let ranked = vec![
            Importance {
                feature: "total_distance".into(),
                mean_abs: 22.5,
                rank: 1,
            },
            Importance {
                feature: "total_ascent".into(),
                mean_abs: 10.25,
                rank: 2,
            },
        ];
        let csv = importance_to_csv(&ranked);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "feature,mean_abs_shap,rank");
        assert_eq!(lines[1], "total_distance,22.5,1");
        assert_eq!(lines[2], "total_ascent,10.25,2");
    }

    #[test]
    fn attribution_json_pairs_names_with_contributions() {
        let model = line_model(2.0, 1.0);
        let attr = shap_linear(&model, &[Some(3.0)], &[0.0]).unwrap();
        let json = attribution_to_json(&attr, &model.feature_names).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["base_value"], 1.0);
        assert_eq!(parsed["prediction"], 7.0);
        assert_eq!(parsed["contributions"][0]["feature"], "x");
        assert_eq!(parsed["contributions"][0]["phi"], 6.0);
        assert!(attribution_to_json(&attr, &[]).is_err());
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let ds = training_dataset(40, 1.0, 10);
        let model = train_full(&ds, &PenaltySpec::ridge(0.1)).unwrap();
        assert!(matches!(
            shap_at_training_mean(&model, &[Some(1.0)]),
            Err(RidecastError::SchemaMismatch { .. })
        ));
        assert!(matches!(
            shap_linear(&model, &ds.rows[0].values, &[1.0, 2.0]),
            Err(RidecastError::SchemaMismatch { .. })
        ));
        let narrowed = ds.restrict(FeatureConfig::TopologyOnly).unwrap();
        assert!(global_importance(&model, &narrowed).is_ok());
        let mut empty = ds.clone();
        empty.rows.clear();
        assert!(matches!(
            global_importance(&model, &empty),
            Err(RidecastError::InsufficientData(_))
        ));
        let mismatched = Dataset {
            rows: ds.rows.clone(),
            schema: vec!["other".into()],
            config: FeatureConfig::TopologyOnly,
        };
        assert!(matches!(
            global_importance(&model, &mismatched),
            Err(RidecastError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn ols_and_strong_lasso_agree_on_what_matters() {
        // same data, very different penalties: the two planted columns stay
        // on top under both
        let ds = training_dataset(80, 0.5, 11);
        for spec in [PenaltySpec::ols(), PenaltySpec::lasso(1.0)] {
            let model = train_full(&ds, &spec).unwrap();
            assert_eq!(model.penalty.kind, spec.kind);
            let ranked = global_importance(&model, &ds).unwrap();
            let top2: Vec<&str> = ranked[..2].iter().map(|i| i.feature.as_str()).collect();
            assert!(top2.contains(&"total_distance"), "{spec:?}: {top2:?}");
            assert!(top2.contains(&"total_ascent"), "{spec:?}: {top2:?}");
        }
    }

    #[test]
    fn kind_survives_reuse_in_attribution_paths() {
        // regression guard: attribution must not mutate the model
        let ds = training_dataset(40, 1.0, 12);
        let model = train_full(&ds, &PenaltySpec::lasso(0.1)).unwrap();
        let before = model.clone();
        let _ = global_importance(&model, &ds).unwrap();
        let _ = shap_at_training_mean(&model, &ds.rows[0].values).unwrap();
        assert_eq!(model, before);
        assert_eq!(model.penalty.kind, PenaltyKind::Lasso);
    }
}
