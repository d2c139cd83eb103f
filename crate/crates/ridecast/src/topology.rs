//! Route-topology features: climb detection and scoring, gradient
//! distribution, turn and descent measures, and the full canonical feature
//! vector.
//!
//! All distance-weighted quantities work on the profile's *steps*: step `j`
//! spans `[j*step, (j+1)*step)` and carries gradient `step_gradients()[j]`.
//! The duplicated tail entry of the gradient series never contributes.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RidecastError};
use crate::ingest::RouteProfile;

/// A step must reach this gradient (percent) to belong to a climb.
pub const CLIMB_MIN_GRADIENT: f64 = 3.0;

/// Minimum climb length in meters.
pub const CLIMB_MIN_LENGTH_M: f64 = 500.0;

/// Climbs scoring at or below this are discarded.
pub const CLIMB_MIN_SCORE: f64 = 1500.0;

/// Sub-threshold gaps shorter than this may be absorbed when merging
/// adjacent climb segments.
pub const CLIMB_MERGE_GAP_M: f64 = 100.0;

/// Bearing change above this (degrees) marks a sharp turn.
pub const SHARP_TURN_DEG: f64 = 45.0;

/// How far after a climb end recovery terrain is counted, in meters.
pub const RECOVERY_WINDOW_M: f64 = 500.0;

/// |gradient| below this counts as flat for recovery purposes.
pub const RECOVERY_MAX_ABS_GRADIENT: f64 = 2.0;

/// Gradient below this (percent) marks descending for the technicality
/// measure.
pub const TECH_DESCENT_GRADIENT: f64 = -5.0;

/// Rolling-window length for the max sustained gradient, in meters.
pub const SUSTAINED_WINDOW_M: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClimbCategory {
    Hc,
    Cat1,
    Cat2,
    Cat3,
    Cat4,
    Uncategorized,
}

impl std::fmt::Display for ClimbCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClimbCategory::Hc => "HC",
            ClimbCategory::Cat1 => "Cat1",
            ClimbCategory::Cat2 => "Cat2",
            ClimbCategory::Cat3 => "Cat3",
            ClimbCategory::Cat4 => "Cat4",
            ClimbCategory::Uncategorized => "Uncategorized",
        })
    }
}

/// A detected climb. `score = length * avg_gradient` (meters times percent);
/// `tdf_score = avg_gradient^2 * length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Climb {
    pub start_m: f64,
    pub end_m: f64,
    pub length: f64,
    pub avg_gradient: f64,
    pub score: f64,
    pub tdf_score: f64,
    pub category: ClimbCategory,
}

/// Score a climb of length `d` meters at average gradient `g` percent and
/// assign its category: HC at 80k, then 64k/32k/16k/8k for Cat1–Cat4;
/// anything below is uncategorized (and only counts as a climb above 1,500).
pub fn score_and_categorize(d: f64, g: f64) -> Result<(f64, ClimbCategory)> {
    if d <= 0.0 || g <= 0.0 {
        return Err(RidecastError::InvalidConfig(format!(
            "climb length and gradient must be positive, got d={d}, g={g}"
        )));
    }
    let score = d * g;
    let category = if score >= 80_000.0 {
        ClimbCategory::Hc
    } else if score >= 64_000.0 {
        ClimbCategory::Cat1
    } else if score >= 32_000.0 {
        ClimbCategory::Cat2
    } else if score >= 16_000.0 {
        ClimbCategory::Cat3
    } else if score >= 8_000.0 {
        ClimbCategory::Cat4
    } else {
        ClimbCategory::Uncategorized
    };
    Ok((score, category))
}

/// Detect climbs: maximal runs of steps at ≥ 3% gradient, merged across
/// sub-threshold gaps shorter than 100 m when the merged span still averages
/// ≥ 3%, then filtered to length ≥ 500 m and score > 1,500. Ordered by
/// start; pairwise disjoint.
///
/// Merging runs to a fixed point, always taking the leftmost mergeable pair,
/// so a gap absorbed on the right can enable a merge on the left.
pub fn detect_climbs(profile: &RouteProfile) -> Vec<Climb> {
    let g = profile.step_gradients();
    let step = profile.step;
    let n = g.len();

    // prefix[i] = sum of gradients of steps 0..i
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &gi in g {
        prefix.push(prefix.last().unwrap() + gi);
    }
    let span_avg = |s: usize, e: usize| (prefix[e] - prefix[s]) / (e - s) as f64;

    // Maximal qualifying runs as half-open step ranges [s, e).
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (j, &gj) in g.iter().enumerate() {
        if gj >= CLIMB_MIN_GRADIENT {
            start.get_or_insert(j);
        } else if let Some(s) = start.take() {
            runs.push((s, j));
        }
    }
    if let Some(s) = start {
        runs.push((s, n));
    }

    // Leftmost-first merge to fixed point.
    let mut i = 0;
    while i + 1 < runs.len() {
        let (s, e) = runs[i];
        let (s2, e2) = runs[i + 1];
        let gap_m = (s2 - e) as f64 * step;
        if gap_m < CLIMB_MERGE_GAP_M && span_avg(s, e2) >= CLIMB_MIN_GRADIENT {
            runs[i] = (s, e2);
            runs.remove(i + 1);
            i = i.saturating_sub(1);
        } else {
            i += 1;
        }
    }

    runs.into_iter()
        .filter_map(|(s, e)| {
            let length = (e - s) as f64 * step;
            if length < CLIMB_MIN_LENGTH_M {
                return None;
            }
            let avg = span_avg(s, e);
            let (score, category) = score_and_categorize(length, avg).ok()?;
            if score <= CLIMB_MIN_SCORE {
                return None;
            }
            Some(Climb {
                start_m: s as f64 * step,
                end_m: e as f64 * step,
                length,
                avg_gradient: avg,
                score,
                tdf_score: avg * avg * length,
                category,
            })
        })
        .collect()
}

/// Population standard deviation of a slice.
fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Punchiness: population standard deviation of |Δg| over consecutive step
/// gradients. Needs at least two steps.
pub fn punchiness(profile: &RouteProfile) -> Result<f64> {
    let g = profile.step_gradients();
    if g.len() < 2 {
        return Err(RidecastError::InsufficientData(format!(
            "punchiness needs at least 2 steps, got {}",
            g.len()
        )));
    }
    let diffs: Vec<f64> = g.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    Ok(population_std(&diffs))
}

/// Fraction of route distance per gradient bucket plus threshold fractions.
/// Buckets: negative, [0,2), [2,4), [4,6), [6,10), [10,∞); fractions sum
/// to 1. Threshold fractions use strict `>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientDistribution {
    pub negative: f64,
    pub pct_0_2: f64,
    pub pct_2_4: f64,
    pub pct_4_6: f64,
    pub pct_6_10: f64,
    pub pct_10_plus: f64,
    pub pct_above_5: f64,
    pub pct_above_8: f64,
    pub pct_above_10: f64,
}

pub fn gradient_distribution(profile: &RouteProfile) -> GradientDistribution {
    let g = profile.step_gradients();
    let n = g.len() as f64;
    let frac = |pred: &dyn Fn(f64) -> bool| g.iter().filter(|&&x| pred(x)).count() as f64 / n;
    GradientDistribution {
        negative: frac(&|x| x < 0.0),
        pct_0_2: frac(&|x| (0.0..2.0).contains(&x)),
        pct_2_4: frac(&|x| (2.0..4.0).contains(&x)),
        pct_4_6: frac(&|x| (4.0..6.0).contains(&x)),
        pct_6_10: frac(&|x| (6.0..10.0).contains(&x)),
        pct_10_plus: frac(&|x| x >= 10.0),
        pct_above_5: frac(&|x| x > 5.0),
        pct_above_8: frac(&|x| x > 8.0),
        pct_above_10: frac(&|x| x > 10.0),
    }
}

/// Flat distance shortly after climbing: meters of steps with |g| < 2%
/// whose start lies within 500 m after the end of any detected climb.
pub fn recovery_distance(profile: &RouteProfile, climbs: &[Climb]) -> f64 {
    let g = profile.step_gradients();
    let step = profile.step;
    let mut meters = 0.0;
    for (j, &gj) in g.iter().enumerate() {
        if gj.abs() >= RECOVERY_MAX_ABS_GRADIENT {
            continue;
        }
        let at = j as f64 * step;
        if climbs
            .iter()
            .any(|c| at >= c.end_m && at < c.end_m + RECOVERY_WINDOW_M)
        {
            meters += step;
        }
    }
    meters
}

/// Minimal angular difference between two bearings, in [0, 180].
fn circular_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 360.0;
    d.min(360.0 - d)
}

/// Per-step bearing change: the net course change across a ±2-step span of
/// the (smoothed) bearing series, indices clamped at the ends. A tight
/// corner spread over the smoothing window still registers its full angle,
/// while per-sample jitter stays small.
pub fn bearing_changes(profile: &RouteProfile) -> Vec<f64> {
    let b = &profile.bearing;
    let last = b.len() - 1;
    (0..profile.step_count())
        .map(|j| {
            let lo = j.saturating_sub(2);
            let hi = (j + 2).min(last);
            circular_diff(b[hi], b[lo])
        })
        .collect()
}

/// Meters of steps that both descend steeper than −5% and turn more than
/// 45°.
pub fn technical_descent(profile: &RouteProfile) -> f64 {
    let g = profile.step_gradients();
    let turns = bearing_changes(profile);
    g.iter()
        .zip(&turns)
        .filter(|(&gj, &tj)| gj < TECH_DESCENT_GRADIENT && tj > SHARP_TURN_DEG)
        .count() as f64
        * profile.step
}

/// Count of sharp turns — each maximal run of steps with bearing change
/// > 45° counts once — and turn density per km.
pub fn sharp_turns(profile: &RouteProfile) -> (usize, f64) {
    let turns = bearing_changes(profile);
    let mut count = 0;
    let mut in_turn = false;
    for &t in &turns {
        if t > SHARP_TURN_DEG {
            if !in_turn {
                count += 1;
                in_turn = true;
            }
        } else {
            in_turn = false;
        }
    }
    let density = count as f64 / (profile.total_distance() / 1000.0);
    (count, density)
}

/// Maximum rolling mean of gradient over windows of `window_m` meters, with
/// the start location of the earliest maximizing window.
pub fn max_sustained_gradient(profile: &RouteProfile, window_m: f64) -> Result<(f64, f64)> {
    let g = profile.step_gradients();
    let w = (window_m / profile.step).round() as usize;
    if w == 0 || g.len() < w {
        return Err(RidecastError::RouteTooShort {
            need: w.max(1),
            got: g.len(),
        });
    }
    let mut sum: f64 = g[..w].iter().sum();
    let mut best = sum;
    let mut best_start = 0usize;
    for j in w..g.len() {
        sum += g[j] - g[j - w];
        // strict > keeps the earliest window on ties
        if sum > best + 1e-12 {
            best = sum;
            best_start = j - w + 1;
        }
    }
    Ok((best / w as f64, best_start as f64 * profile.step))
}

/// The full canonical route-topology feature vector. `None` marks features
/// whose value is undefined for the route (empty climb set, zero-mean
/// gradient, route shorter than the sustained window); imputation happens at
/// modeling time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyFeatures {
    pub total_distance: f64,
    pub total_ascent: f64,
    pub total_descent: f64,
    pub elevation_min: f64,
    pub elevation_max: f64,
    pub elevation_avg: f64,
    pub elevation_gain_per_km: f64,
    pub punchiness_score: f64,
    pub gradient_std: f64,
    pub gradient_cv: Option<f64>,
    pub num_climbs: usize,
    pub num_hc: usize,
    pub num_cat1: usize,
    pub num_cat2: usize,
    pub num_cat3: usize,
    pub num_cat4: usize,
    pub total_climb_score: f64,
    pub max_climb_score: f64,
    pub climb_density: f64,
    pub avg_climb_gradient: Option<f64>,
    pub avg_climb_length: Option<f64>,
    pub max_climb_length: f64,
    pub total_climb_length: f64,
    pub distribution: GradientDistribution,
    pub num_sharp_turns: usize,
    pub turn_density: f64,
    pub recovery_distance: f64,
    pub technical_descent: f64,
    pub max_sustained_gradient: Option<f64>,
    pub longest_climb_distance: f64,
    pub ascent_by_third: [f64; 3],
}

impl TopologyFeatures {
    /// Feature values in canonical schema order.
    pub fn values(&self) -> Vec<(&'static str, Option<f64>)> {
        let d = &self.distribution;
        vec![
            ("total_distance", Some(self.total_distance)),
            ("total_ascent", Some(self.total_ascent)),
            ("total_descent", Some(self.total_descent)),
            ("elevation_min", Some(self.elevation_min)),
            ("elevation_max", Some(self.elevation_max)),
            ("elevation_avg", Some(self.elevation_avg)),
            ("elevation_gain_per_km", Some(self.elevation_gain_per_km)),
            ("punchiness_score", Some(self.punchiness_score)),
            ("gradient_std", Some(self.gradient_std)),
            ("gradient_cv", self.gradient_cv),
            ("num_climbs", Some(self.num_climbs as f64)),
            ("num_hc", Some(self.num_hc as f64)),
            ("num_cat1", Some(self.num_cat1 as f64)),
            ("num_cat2", Some(self.num_cat2 as f64)),
            ("num_cat3", Some(self.num_cat3 as f64)),
            ("num_cat4", Some(self.num_cat4 as f64)),
            ("total_climb_score", Some(self.total_climb_score)),
            ("max_climb_score", Some(self.max_climb_score)),
            ("climb_density", Some(self.climb_density)),
            ("avg_climb_gradient", self.avg_climb_gradient),
            ("avg_climb_length", self.avg_climb_length),
            ("max_climb_length", Some(self.max_climb_length)),
            ("total_climb_length", Some(self.total_climb_length)),
            ("pct_slope_negative", Some(d.negative)),
            ("pct_slope_0_2", Some(d.pct_0_2)),
            ("pct_slope_2_4", Some(d.pct_2_4)),
            ("pct_slope_4_6", Some(d.pct_4_6)),
            ("pct_slope_6_10", Some(d.pct_6_10)),
            ("pct_slope_10_plus", Some(d.pct_10_plus)),
            ("pct_above_5", Some(d.pct_above_5)),
            ("pct_above_8", Some(d.pct_above_8)),
            ("pct_above_10", Some(d.pct_above_10)),
            ("num_sharp_turns", Some(self.num_sharp_turns as f64)),
            ("turn_density", Some(self.turn_density)),
            ("recovery_distance", Some(self.recovery_distance)),
            ("technical_descent", Some(self.technical_descent)),
            ("max_sustained_gradient", self.max_sustained_gradient),
            ("longest_climb_distance", Some(self.longest_climb_distance)),
            ("ascent_by_third_1", Some(self.ascent_by_third[0])),
            ("ascent_by_third_2", Some(self.ascent_by_third[1])),
            ("ascent_by_third_3", Some(self.ascent_by_third[2])),
        ]
    }
}

/// Compute every topology feature for a profile.
pub fn extract_topology(profile: &RouteProfile) -> Result<TopologyFeatures> {
    let g = profile.step_gradients();
    let distance_km = profile.total_distance() / 1000.0;

    let mut ascent = 0.0;
    let mut descent = 0.0;
    for pair in profile.altitude.windows(2) {
        let delta = pair[1] - pair[0];
        if delta > 0.0 {
            ascent += delta;
        } else {
            descent -= delta;
        }
    }

    let elevation_min = profile.altitude.iter().copied().fold(f64::INFINITY, f64::min);
    let elevation_max = profile.altitude.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let elevation_avg = profile.altitude.iter().sum::<f64>() / profile.len() as f64;

    let gradient_mean = g.iter().sum::<f64>() / g.len() as f64;
    let gradient_std = population_std(g);
    let gradient_cv = if gradient_mean.abs() < 1e-9 {
        None
    } else {
        Some(gradient_std / gradient_mean.abs())
    };

    let climbs = detect_climbs(profile);
    let count_cat = |cat: ClimbCategory| climbs.iter().filter(|c| c.category == cat).count();
    let total_climb_score: f64 = climbs.iter().map(|c| c.score).sum();
    let max_climb_score = climbs.iter().map(|c| c.score).fold(0.0, f64::max);
    let total_climb_length: f64 = climbs.iter().map(|c| c.length).sum();
    let max_climb_length = climbs.iter().map(|c| c.length).fold(0.0, f64::max);
    let avg_climb_gradient = if climbs.is_empty() {
        None
    } else {
        let weighted: f64 = climbs.iter().map(|c| c.avg_gradient * c.length).sum();
        Some(weighted / total_climb_length)
    };
    let avg_climb_length = if climbs.is_empty() {
        None
    } else {
        Some(total_climb_length / climbs.len() as f64)
    };

    let (num_sharp_turns, turn_density) = sharp_turns(profile);

    let mut thirds = [0.0; 3];
    for (j, pair) in profile.altitude.windows(2).enumerate() {
        let delta = pair[1] - pair[0];
        if delta > 0.0 {
            thirds[(j * 3 / g.len()).min(2)] += delta;
        }
    }
    let ascent_by_third = if ascent > 0.0 {
        [thirds[0] / ascent, thirds[1] / ascent, thirds[2] / ascent]
    } else {
        [0.0; 3]
    };

    Ok(TopologyFeatures {
        total_distance: distance_km,
        total_ascent: ascent,
        total_descent: descent,
        elevation_min,
        elevation_max,
        elevation_avg,
        elevation_gain_per_km: ascent / distance_km,
        punchiness_score: punchiness(profile)?,
        gradient_std,
        gradient_cv,
        num_climbs: climbs.len(),
        num_hc: count_cat(ClimbCategory::Hc),
        num_cat1: count_cat(ClimbCategory::Cat1),
        num_cat2: count_cat(ClimbCategory::Cat2),
        num_cat3: count_cat(ClimbCategory::Cat3),
        num_cat4: count_cat(ClimbCategory::Cat4),
        total_climb_score,
        max_climb_score,
        climb_density: climbs.len() as f64 / distance_km,
        avg_climb_gradient,
        avg_climb_length,
        max_climb_length,
        total_climb_length,
        distribution: gradient_distribution(profile),
        num_sharp_turns,
        turn_density,
        recovery_distance: recovery_distance(profile, &climbs),
        technical_descent: technical_descent(profile),
        max_sustained_gradient: max_sustained_gradient(profile, SUSTAINED_WINDOW_M)
            .ok()
            .map(|(value, _)| value),
        longest_climb_distance: max_climb_length,
        ascent_by_third,
    })
}
