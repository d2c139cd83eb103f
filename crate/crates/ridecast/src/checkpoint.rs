//! Progressive full-route predictions from distance-truncated prefixes,
//! and what-if predictions under hypothetical fitness states.
//!
//! As a rider moves along a route, the portion seen so far is itself a
//! route: truncating the profile at a distance fraction, re-extracting
//! topology from the prefix, and running the topology-only model yields a
//! forecast of the *total* duration that sharpens as more of the route's
//! character becomes visible. A climb straddling the cut is re-evaluated
//! on the prefix — it may fall below the length floor and vanish until
//! more of it comes into view.

use crate::error::{Result, RidecastError};
use crate::ingest::RouteProfile;
use crate::regression::TrainedLinearModel;
use crate::schema::{FeatureConfig, FITNESS_FEATURES};
use crate::topology::extract_topology;

/// Fractions used when the caller does not supply any.
pub const DEFAULT_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// A full-route duration forecast made from a route prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointPrediction {
    /// Fraction of total distance visible, in (0, 1].
    pub fraction: f64,
    /// Prefix length in km.
    pub prefix_distance_km: f64,
    /// Climbing within the prefix, in meters.
    pub prefix_ascent_m: f64,
    /// Detected climbs entirely within the prefix.
    pub prefix_climbs: usize,
    /// Predicted duration of the whole ride, in minutes.
    pub predicted_minutes: f64,
    /// Change vs the previous checkpoint, minutes per percent of distance.
    /// `None` on the first checkpoint.
    pub change_rate: Option<f64>,
}

/// Hypothetical training-load state for what-if predictions. All four
/// values are required; callers with partial scenarios fill the rest from
/// a real athlete state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessOverrides {
    pub ctl: f64,
    pub atl: f64,
    pub tsb: f64,
    pub ramp_rate: f64,
}

impl FitnessOverrides {
    fn value_for(&self, name: &str) -> f64 {
        match name {
            "ctl" => self.ctl,
            "atl" => self.atl,
            "tsb" => self.tsb,
            "ramp_rate" => self.ramp_rate,
            other => unreachable!("unknown fitness feature {other}"),
        }
    }
}

/// The prefix of `profile` covering `fraction` of its total distance.
///
/// The stored series are sliced on the existing grid — no resampling or
/// re-smoothing — so every kept gradient and bearing step is bit-identical
/// to the original, with the final entries re-duplicated to keep the
/// series aligned. The cut lands within one grid step of
/// `fraction × total`; at least one full step is always kept.
pub fn truncate_route(profile: &RouteProfile, fraction: f64) -> Result<RouteProfile> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(RidecastError::InvalidFraction(fraction));
    }
    let n = profile.distance.len();
    // index of the last kept point: floor(fraction·total / step), clamped
    // so at least one step survives and we never run past the end
    let target = fraction * profile.total_distance();
    let last = ((target / profile.step).floor() as usize).clamp(1, n - 1);

    let mut gradient = profile.gradient[..last].to_vec();
    gradient.push(gradient[last - 1]);
    let mut bearing = profile.bearing[..last].to_vec();
    bearing.push(bearing[last - 1]);
    Ok(RouteProfile {
        step: profile.step,
        distance: profile.distance[..=last].to_vec(),
        altitude: profile.altitude[..=last].to_vec(),
        gradient,
        bearing,
    })
}

/// Forecast the total ride duration at each fraction of the route.
///
/// `fractions` must be strictly increasing within (0, 1], and the model
/// must be topology-only — a prefix carries no athlete state. Each entry
/// reports the prefix's visible distance, ascent, and climb count next to
/// the forecast, plus the forecast's change per percent of distance since
/// the previous checkpoint.
pub fn progressive_predictions(
    profile: &RouteProfile,
    model: &TrainedLinearModel,
    fractions: &[f64],
) -> Result<Vec<CheckpointPrediction>> {
    if model.config != FeatureConfig::TopologyOnly {
        return Err(RidecastError::SchemaMismatch {
            expected: "a topology-only model".into(),
            actual: format!("{:?}", model.config),
        });
    }
    if fractions.is_empty() {
        return Err(RidecastError::InvalidFraction(f64::NAN));
    }
    for w in fractions.windows(2) {
        if !(w[1] > w[0]) {
            return Err(RidecastError::InvalidFraction(w[1]));
        }
    }
    let mut out: Vec<CheckpointPrediction> = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let prefix = truncate_route(profile, fraction)?;
        let features = extract_topology(&prefix)?;
        let row: Vec<Option<f64>> = features.values().into_iter().map(|(_, v)| v).collect();
        let predicted_minutes = model.predict(&row)?;
        let change_rate = out.last().map(|prev: &CheckpointPrediction| {
            (predicted_minutes - prev.predicted_minutes) / (100.0 * (fraction - prev.fraction))
        });
        out.push(CheckpointPrediction {
            fraction,
            prefix_distance_km: features.total_distance,
            prefix_ascent_m: features.total_ascent,
            prefix_climbs: features.num_climbs,
            predicted_minutes,
            change_rate,
        });
    }
    Ok(out)
}

/// Predict a route's duration under a hypothetical fitness state.
///
/// Topology comes from the route; ctl/atl/tsb/ramp_rate come from the
/// overrides. The model must use the topology+fitness configuration.
/// The output is a plain model evaluation — it describes how predictions
/// co-vary with fitness in the training data, not the causal effect of
/// changing one's training.
pub fn whatif(
    profile: &RouteProfile,
    model: &TrainedLinearModel,
    overrides: &FitnessOverrides,
) -> Result<f64> {
    if model.config != FeatureConfig::TopologyFitness {
        return Err(RidecastError::SchemaMismatch {
            expected: "a topology+fitness model".into(),
            actual: format!("{:?}", model.config),
        });
    }
    let features = extract_topology(profile)?;
    let mut row: Vec<Option<f64>> = features.values().into_iter().map(|(_, v)| v).collect();
    for name in FITNESS_FEATURES {
        row.push(Some(overrides.value_for(name)));
    }
    model.predict(&row)
}

/// Render checkpoints as CSV with the columns
/// `fraction,dist_km,ascent_m,climbs,predicted_min,change_rate`.
/// The first row's change rate is empty.
pub fn checkpoints_to_csv(checkpoints: &[CheckpointPrediction]) -> String {
    let mut out = String::from("fraction,dist_km,ascent_m,climbs,predicted_min,change_rate\n");
    for c in checkpoints {
        let rate = c.change_rate.map(|r| r.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.fraction, c.prefix_distance_km, c.prefix_ascent_m, c.prefix_climbs, c.predicted_minutes, rate
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{PenaltySpec, Preprocessor};
    use crate::schema::{self, SCHEMA_VERSION, TOPOLOGY_FEATURES};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Profile with the given per-step gradients and bearings, stored
    /// bit-exactly (step = 10 m).
    fn profile_from_steps(steps: &[f64], bearings: &[f64]) -> RouteProfile {
        assert_eq!(steps.len(), bearings.len());
        let step = 10.0;
        let mut altitude = vec![100.0];
        for g in steps {
            let prev = *altitude.last().unwrap();
            altitude.push(prev + g * step / 100.0);
        }
        let mut gradient = steps.to_vec();
        gradient.push(*steps.last().unwrap());
        let mut bearing = bearings.to_vec();
        bearing.push(*bearing.last().unwrap());
        let distance = (0..altitude.len()).map(|j| j as f64 * step).collect();
        RouteProfile {
            step,
            distance,
            altitude,
            gradient,
            bearing,
        }
    }

    fn flat_route(n_steps: usize) -> RouteProfile {
        profile_from_steps(&vec![0.0; n_steps], &vec![90.0; n_steps])
    }

    /// A route with a 600 m @ 5% climb per 2 km block.
    fn hilly_route(blocks: usize) -> RouteProfile {
        let mut steps = Vec::new();
        for _ in 0..blocks {
            steps.extend(std::iter::repeat(0.0).take(70));
            steps.extend(std::iter::repeat(5.0).take(60));
            steps.extend(std::iter::repeat(-2.0).take(70));
        }
        let bearings = vec![45.0; steps.len()];
        profile_from_steps(&steps, &bearings)
    }

    /// Model over the topology schema that predicts
    /// `intercept + slope × total_distance_km` (identity preprocessing).
    fn distance_only_model(slope: f64, intercept: f64) -> TrainedLinearModel {
        let names = schema::feature_names(FeatureConfig::TopologyOnly);
        let width = names.len();
        let mut coefficients = vec![0.0; width];
        coefficients[0] = slope; // total_distance column
        TrainedLinearModel {
            schema_version: SCHEMA_VERSION.to_string(),
            config: FeatureConfig::TopologyOnly,
            feature_names: names,
            preprocessor: Preprocessor {
                medians: vec![0.0; width],
                means: vec![0.0; width],
                stds: vec![1.0; width],
            },
            penalty: PenaltySpec::ols(),
            coefficients,
            intercept,
            converged: true,
            iterations: 1,
        }
    }

    /// Topology+fitness model with known raw-space coefficients.
    fn fitness_model() -> TrainedLinearModel {
        let names = schema::feature_names(FeatureConfig::TopologyFitness);
        let width = names.len();
        let mut coefficients = vec![0.0; width];
        coefficients[0] = 1.5; // total_distance
        let base = TOPOLOGY_FEATURES.len();
        coefficients[base] = -0.8; // ctl
        coefficients[base + 1] = 0.4; // atl
        coefficients[base + 2] = -0.5; // tsb
        coefficients[base + 3] = 2.0; // ramp_rate
        TrainedLinearModel {
            schema_version: SCHEMA_VERSION.to_string(),
            config: FeatureConfig::TopologyFitness,
            feature_names: names,
            preprocessor: Preprocessor {
                medians: vec![0.0; width],
                means: vec![0.0; width],
                stds: vec![1.0; width],
            },
            penalty: PenaltySpec::ols(),
            coefficients,
            intercept: 30.0,
            converged: true,
            iterations: 1,
        }
    }

    #[test]
    fn full_fraction_is_the_identity() {
        let route = hilly_route(3);
        assert_eq!(truncate_route(&route, 1.0).unwrap(), route);
    }

    #[test]
    fn half_of_a_uniform_grid_is_half_the_distance() {
        let route = flat_route(100); // 1000 m
        let half = truncate_route(&route, 0.5).unwrap();
        assert_eq!(half.total_distance(), 500.0);
        assert_eq!(half.distance.len(), 51);
        assert_eq!(half.gradient.len(), 51);
        assert_eq!(half.bearing.len(), 51);
    }

    #[test]
    fn out_of_range_fractions_are_rejected() {
        let route = flat_route(10);
        for bad in [0.0, -0.25, 1.0001, f64::NAN, f64::INFINITY] {
            assert!(
                matches!(
                    truncate_route(&route, bad),
                    Err(RidecastError::InvalidFraction(_))
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn tiny_fractions_keep_at_least_one_step() {
        let route = flat_route(50);
        let sliver = truncate_route(&route, 1e-6).unwrap();
        assert_eq!(sliver.distance.len(), 2);
        assert_eq!(sliver.total_distance(), route.step);
    }

    #[test]
    fn truncation_matches_an_independently_built_prefix() {
        let mut steps = Vec::new();
        let mut bearings = Vec::new();
        for i in 0..200 {
            steps.push(((i % 13) as f64) - 4.0);
            bearings.push(((i * 7) % 360) as f64);
        }
        let route = profile_from_steps(&steps, &bearings);
        // fraction 0.4 of 200 steps → last kept point index 80
        let truncated = truncate_route(&route, 0.4).unwrap();
        let direct = profile_from_steps(&steps[..80], &bearings[..80]);
        assert_eq!(truncated, direct);
        // and therefore identical features, bit for bit
        let a = extract_topology(&truncated).unwrap().values();
        let b = extract_topology(&direct).unwrap().values();
        assert_eq!(a, b);
    }

    #[test]
    fn straddled_climbs_are_reevaluated_on_the_prefix() {
        // single 600 m climb starting at 700 m; cutting at 1000 m leaves
        // only 300 m of it — below the length floor, so it vanishes
        let route = hilly_route(1); // 2 km total
        let full_climbs = extract_topology(&route).unwrap().num_climbs;
        assert_eq!(full_climbs, 1);
        let half = truncate_route(&route, 0.5).unwrap();
        assert_eq!(extract_topology(&half).unwrap().num_climbs, 0);
    }

    proptest! {
        #[test]
        fn composition_lands_within_one_grid_step(
            a in 0.05_f64..1.0,
            b in 0.05_f64..1.0,
            n in 20_usize..400,
        ) {
            let route = flat_route(n);
            let one_shot = truncate_route(&route, a * b).unwrap();
            let two_step = truncate_route(&truncate_route(&route, a).unwrap(), b).unwrap();
            let diff = (one_shot.total_distance() - two_step.total_distance()).abs();
            prop_assert!(diff <= route.step + 1e-9, "one-shot {} vs two-step {}", one_shot.total_distance(), two_step.total_distance());
        }

        #[test]
        fn prefixes_grow_monotonically(fracs in proptest::collection::vec(0.01_f64..=1.0, 2..8)) {
            let mut fracs = fracs;
            fracs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            fracs.dedup();
            let route = hilly_route(5); // 10 km, 5 climbs
            let mut prev: Option<(f64, f64, usize)> = None;
            for &f in &fracs {
                let t = extract_topology(&truncate_route(&route, f).unwrap()).unwrap();
                if let Some((d, asc, climbs)) = prev {
                    prop_assert!(t.total_distance >= d);
                    prop_assert!(t.total_ascent >= asc - 1e-9);
                    prop_assert!(t.num_climbs + 1 >= climbs.max(1),
                        "climb count can only drop via a straddled climb: {} -> {}", climbs, t.num_climbs);
                }
                prev = Some((t.total_distance, t.total_ascent, t.num_climbs));
            }
        }
    }

    #[test]
    fn climb_counts_are_nondecreasing_at_block_boundaries() {
        // cuts aligned to the flat sections between climbs, where nothing
        // straddles: counts must be exactly 1, 2, 3, 4
        let route = hilly_route(4); // 8 km
        let counts: Vec<usize> = [0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&f| {
                extract_topology(&truncate_route(&route, f).unwrap())
                    .unwrap()
                    .num_climbs
            })
            .collect();
        assert_eq!(counts, vec![1, 2, 3, 4]);
    }

    #[test]
    fn linear_distance_model_scales_with_fraction() {
        let route = flat_route(1000); // 10 km
        let model = distance_only_model(6.0, 0.0);
        let preds =
            progressive_predictions(&route, &model, &DEFAULT_FRACTIONS).unwrap();
        assert_eq!(preds.len(), 4);
        for p in &preds {
            // prefix distance is exact on this aligned grid
            assert_relative_eq!(p.prefix_distance_km, 10.0 * p.fraction, epsilon = 1e-9);
            assert_relative_eq!(p.predicted_minutes, 60.0 * p.fraction, epsilon = 1e-9);
            assert_eq!(p.prefix_ascent_m, 0.0);
            assert_eq!(p.prefix_climbs, 0);
        }
        // 15 min per 25% = 0.6 min per percent, at every later checkpoint
        assert_eq!(preds[0].change_rate, None);
        for p in &preds[1..] {
            assert_relative_eq!(p.change_rate.unwrap(), 0.6, epsilon = 1e-9);
        }
    }

    #[test]
    fn single_full_fraction_equals_the_plain_prediction() {
        let route = hilly_route(3);
        let model = distance_only_model(4.0, 12.0);
        let preds = progressive_predictions(&route, &model, &[1.0]).unwrap();
        assert_eq!(preds.len(), 1);
        let row: Vec<Option<f64>> = extract_topology(&route)
            .unwrap()
            .values()
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        assert_eq!(preds[0].predicted_minutes, model.predict(&row).unwrap());
        assert_eq!(preds[0].change_rate, None);
    }

    #[test]
    fn fractions_must_be_strictly_increasing_and_in_range() {
        let route = flat_route(100);
        let model = distance_only_model(1.0, 0.0);
        for bad in [
            vec![],
            vec![0.5, 0.5],
            vec![0.5, 0.25],
            vec![0.0, 0.5],
            vec![0.5, 1.5],
        ] {
            assert!(
                matches!(
                    progressive_predictions(&route, &model, &bad),
                    Err(RidecastError::InvalidFraction(_))
                ),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn progressive_rejects_models_that_need_athlete_state() {
        let route = flat_route(100);
        assert!(matches!(
            progressive_predictions(&route, &fitness_model(), &[1.0]),
            Err(RidecastError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn whatif_is_linear_in_each_override() {
        let route = flat_route(1000); // 10 km, all other topology terms 0-weighted
        let model = fitness_model();
        let base = FitnessOverrides {
            ctl: 60.0,
            atl: 55.0,
            tsb: 5.0,
            ramp_rate: 1.0,
        };
        let got = whatif(&route, &model, &base).unwrap();
        let want = 30.0 + 1.5 * 10.0 + (-0.8) * 60.0 + 0.4 * 55.0 + (-0.5) * 5.0 + 2.0 * 1.0;
        assert_relative_eq!(got, want, epsilon = 1e-9);

        // two scenarios differing only in tsb: difference = β_tsb × Δtsb
        let bumped = FitnessOverrides { tsb: 11.0, ..base };
        let delta = whatif(&route, &model, &bumped).unwrap() - got;
        assert_relative_eq!(delta, -0.5 * 6.0, epsilon = 1e-9);
    }

    #[test]
    fn mean_state_overrides_reduce_to_the_topology_prediction() {
        // with the background state, fitness contributes exactly its
        // training-mean term — here means are 0, so nothing
        let route = hilly_route(2);
        let model = fitness_model();
        let at_means = FitnessOverrides {
            ctl: model.preprocessor.means[TOPOLOGY_FEATURES.len()],
            atl: model.preprocessor.means[TOPOLOGY_FEATURES.len() + 1],
            tsb: model.preprocessor.means[TOPOLOGY_FEATURES.len() + 2],
            ramp_rate: model.preprocessor.means[TOPOLOGY_FEATURES.len() + 3],
        };
        let got = whatif(&route, &model, &at_means).unwrap();
        let km = extract_topology(&route).unwrap().total_distance;
        assert_relative_eq!(got, 30.0 + 1.5 * km, epsilon = 1e-9);
    }

    #[test]
    fn whatif_rejects_topology_only_models() {
        let route = flat_route(100);
        let overrides = FitnessOverrides {
            ctl: 60.0,
            atl: 60.0,
            tsb: 0.0,
            ramp_rate: 0.0,
        };
        assert!(matches!(
            whatif(&route, &distance_only_model(1.0, 0.0), &overrides),
            Err(RidecastError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn checkpoint_csv_mirrors_the_table_columns() {
        let rows = vec![
            CheckpointPrediction {
                fraction: 0.25,
                prefix_distance_km: 25.2,
                prefix_ascent_m: 671.0,
                prefix_climbs: 5,
                predicted_minutes: 95.5,
                change_rate: None,
            },
            CheckpointPrediction {
                fraction: 0.5,
                prefix_distance_km: 50.0,
                prefix_ascent_m: 1500.0,
                prefix_climbs: 9,
                predicted_minutes: 180.25,
                change_rate: Some(3.39),
            },
        ];
        let csv = checkpoints_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "fraction,dist_km,ascent_m,climbs,predicted_min,change_rate"
        );
        assert_eq!(lines[1], "0.25,25.2,671,5,95.5,");
        assert_eq!(lines[2], "0.5,50,1500,9,180.25,3.39");
    }
}
