//! Canonical feature schema: fixed, versioned feature names and ordering.
//!
//! Every serialized artifact (feature store, trained model) embeds
//! [`SCHEMA_VERSION`] and the exact ordered name list, so stores and models
//! written by one build are either bit-compatible with another or rejected
//! loudly — never silently reinterpreted.
//!
//! Counts: 41 route-topology features, 4 fitness features, 48 rolling
//! zone-hour features (7 power zones + 5 heart-rate zones, each over 7/14/30/60
//! day windows). The three configurations are nested: 41 / 45 / 93 columns.

use serde::{Deserialize, Serialize};

/// Bumped whenever the canonical name list or ordering changes.
pub const SCHEMA_VERSION: &str = "ridecast-schema/1";

/// Route-topology feature names in canonical order.
pub const TOPOLOGY_FEATURES: [&str; 41] = [
    // basic metrics
    "total_distance",
    "total_ascent",
    "total_descent",
    "elevation_min",
    "elevation_max",
    "elevation_avg",
    "elevation_gain_per_km",
    // gradient variability
    "punchiness_score",
    "gradient_std",
    "gradient_cv",
    // climb detection
    "num_climbs",
    "num_hc",
    "num_cat1",
    "num_cat2",
    "num_cat3",
    "num_cat4",
    "total_climb_score",
    "max_climb_score",
    "climb_density",
    // climb characteristics
    "avg_climb_gradient",
    "avg_climb_length",
    "max_climb_length",
    "total_climb_length",
    // gradient distribution
    "pct_slope_negative",
    "pct_slope_0_2",
    "pct_slope_2_4",
    "pct_slope_4_6",
    "pct_slope_6_10",
    "pct_slope_10_plus",
    "pct_above_5",
    "pct_above_8",
    "pct_above_10",
    // technical
    "num_sharp_turns",
    "turn_density",
    "recovery_distance",
    "technical_descent",
    "max_sustained_gradient",
    "longest_climb_distance",
    // ascent placement
    "ascent_by_third_1",
    "ascent_by_third_2",
    "ascent_by_third_3",
];

/// Athlete-fitness feature names in canonical order.
pub const FITNESS_FEATURES: [&str; 4] = ["ctl", "atl", "tsb", "ramp_rate"];

/// Rolling windows, in days, for zone-hour features.
pub const ZONE_WINDOWS_DAYS: [u32; 4] = [7, 14, 30, 60];

/// Number of power zones (Z0–Z6).
pub const POWER_ZONE_COUNT: usize = 7;

/// Number of heart-rate zones (Z0–Z4).
pub const HR_ZONE_COUNT: usize = 5;

/// Which feature groups a dataset / model uses. The three sets are nested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureConfig {
    /// Route topology only: works on any GPX with no athlete history.
    TopologyOnly,
    /// Topology plus ctl/atl/tsb/ramp_rate.
    TopologyFitness,
    /// Topology, fitness, and rolling zone hours.
    TopologyFitnessZones,
}

impl FeatureConfig {
    /// Short names used by the CLI: `topo`, `topo-fit`, `topo-fit-zones`.
    pub fn from_cli_name(name: &str) -> Option<Self> {
        match name {
            "topo" => Some(Self::TopologyOnly),
            "topo-fit" => Some(Self::TopologyFitness),
            "topo-fit-zones" => Some(Self::TopologyFitnessZones),
            _ => None,
        }
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            Self::TopologyOnly => "topo",
            Self::TopologyFitness => "topo-fit",
            Self::TopologyFitnessZones => "topo-fit-zones",
        }
    }

    pub fn includes_fitness(self) -> bool {
        !matches!(self, Self::TopologyOnly)
    }

    pub fn includes_zones(self) -> bool {
        matches!(self, Self::TopologyFitnessZones)
    }
}

impl std::fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.cli_name())
    }
}

/// Zone-hour feature names in canonical order: power before heart rate,
/// windows ascending, zones ascending. 48 names.
pub fn zone_feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(48);
    for &w in &ZONE_WINDOWS_DAYS {
        for z in 0..POWER_ZONE_COUNT {
            names.push(format!("rolling_{w}d_power_z{z}_hours"));
        }
    }
    for &w in &ZONE_WINDOWS_DAYS {
        for z in 0..HR_ZONE_COUNT {
            names.push(format!("rolling_{w}d_hr_z{z}_hours"));
        }
    }
    names
}

/// The full ordered feature-name list for a configuration.
pub fn feature_names(config: FeatureConfig) -> Vec<String> {
    let mut names: Vec<String> = TOPOLOGY_FEATURES.iter().map(|s| s.to_string()).collect();
    if config.includes_fitness() {
        names.extend(FITNESS_FEATURES.iter().map(|s| s.to_string()));
    }
    if config.includes_zones() {
        names.extend(zone_feature_names());
    }
    names
}
