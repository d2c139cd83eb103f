//! Training-load state: normalized power, TSS, the CTL/ATL/TSB recursion,
//! and rolling zone-hour features.
//!
//! Everything that feeds a prediction for day `t` is computed strictly from
//! days before `t`: fitness states evolve through `t-1`, and zone-hour
//! windows exclude both endpoints (`t-w < t' < t`). Appending data dated on
//! or after `t` never changes the features for `t`.

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Result, RidecastError};
use crate::schema;

/// CTL time constant (days).
pub const CTL_DAYS: f64 = 42.0;

/// ATL time constant (days).
pub const ATL_DAYS: f64 = 7.0;

/// Window length for the normalized-power rolling average (seconds).
pub const NP_WINDOW_S: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Power,
    Hr,
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Channel::Power => "power",
            Channel::Hr => "hr",
        })
    }
}

impl FromStr for Channel {
    type Err = RidecastError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(Channel::Power),
            "hr" => Ok(Channel::Hr),
            other => Err(RidecastError::InvalidConfig(format!(
                "unknown channel {other:?} (expected \"power\" or \"hr\")"
            ))),
        }
    }
}

/// Intensity-zone boundaries. Power zones are fractions of FTP, heart-rate
/// zones fractions of max HR; both lists are interior boundaries, strictly
/// increasing, splitting the line into 7 and 5 zones respectively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig {
    pub ftp: f64,
    pub max_hr: f64,
    pub power_bounds: Vec<f64>,
    pub hr_bounds: Vec<f64>,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        ZoneConfig {
            ftp: 232.0,
            max_hr: 190.0,
            power_bounds: vec![0.55, 0.75, 0.90, 1.05, 1.20, 1.50],
            hr_bounds: vec![0.60, 0.70, 0.80, 0.90],
        }
    }
}

impl ZoneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ftp <= 0.0 {
            return Err(RidecastError::InvalidConfig(
                "FTP must be positive".into(),
            ));
        }
        if self.max_hr <= 0.0 {
            return Err(RidecastError::InvalidConfig(
                "max HR must be positive".into(),
            ));
        }
        for (name, bounds, zones) in [
            ("power", &self.power_bounds, schema::POWER_ZONE_COUNT),
            ("hr", &self.hr_bounds, schema::HR_ZONE_COUNT),
        ] {
            if bounds.len() != zones - 1 {
                return Err(RidecastError::InvalidConfig(format!(
                    "{name} bounds must have {} entries for {} zones, got {}",
                    zones - 1,
                    zones,
                    bounds.len()
                )));
            }
            if !bounds.windows(2).all(|w| w[0] < w[1]) {
                return Err(RidecastError::InvalidConfig(format!(
                    "{name} bounds must be strictly increasing"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let config: ZoneConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        config.validate()?;
        Ok(config)
    }

    /// Zone index (0-based) for an instantaneous power reading.
    pub fn power_zone(&self, watts: f64) -> usize {
        let frac = watts / self.ftp;
        self.power_bounds.iter().filter(|&&b| frac >= b).count()
    }

    /// Zone index (0-based) for an instantaneous heart-rate reading.
    pub fn hr_zone(&self, bpm: f64) -> usize {
        let frac = bpm / self.max_hr;
        self.hr_bounds.iter().filter(|&&b| frac >= b).count()
    }
}

/// Seconds per zone for one day, split by channel.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ZoneSeconds {
    pub power: [f64; schema::POWER_ZONE_COUNT],
    pub hr: [f64; schema::HR_ZONE_COUNT],
}

impl ZoneSeconds {
    pub fn get(&self, channel: Channel, zone: usize) -> Result<f64> {
        match channel {
            Channel::Power => self.power.get(zone),
            Channel::Hr => self.hr.get(zone),
        }
        .copied()
        .ok_or_else(|| {
            RidecastError::InvalidConfig(format!("unknown {channel} zone index {zone}"))
        })
    }

    pub fn add(&mut self, channel: Channel, zone: usize, seconds: f64) -> Result<()> {
        let slot = match channel {
            Channel::Power => self.power.get_mut(zone),
            Channel::Hr => self.hr.get_mut(zone),
        }
        .ok_or_else(|| {
            RidecastError::InvalidConfig(format!("unknown {channel} zone index {zone}"))
        })?;
        *slot += seconds;
        Ok(())
    }
}

/// One day of aggregated training load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyLoad {
    pub date: NaiveDate,
    pub tss: f64,
    pub zone_seconds: ZoneSeconds,
}

impl DailyLoad {
    pub fn new(date: NaiveDate, tss: f64) -> Self {
        DailyLoad {
            date,
            tss,
            zone_seconds: ZoneSeconds::default(),
        }
    }
}

/// Fitness state on one day. `tsb = ctl - atl` exactly; `ramp_rate` is the
/// CTL change over the trailing 7 days (zero until a week of history exists).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessState {
    pub date: NaiveDate,
    pub ctl: f64,
    pub atl: f64,
    pub tsb: f64,
    pub ramp_rate: f64,
}

/// Fourth root of the mean fourth power of the 30 s rolling average.
pub fn normalized_power(power: &[f64]) -> Result<f64> {
    if power.len() < NP_WINDOW_S {
        return Err(RidecastError::InsufficientData(format!(
            "need at least {NP_WINDOW_S} power samples, got {}",
            power.len()
        )));
    }
    let mut window_sum: f64 = power[..NP_WINDOW_S].iter().sum();
    let mut fourth_sum = (window_sum / NP_WINDOW_S as f64).powi(4);
    let mut count = 1usize;
    for i in NP_WINDOW_S..power.len() {
        window_sum += power[i] - power[i - NP_WINDOW_S];
        fourth_sum += (window_sum / NP_WINDOW_S as f64).powi(4);
        count += 1;
    }
    Ok((fourth_sum / count as f64).powf(0.25))
}

/// Training Stress Score for a per-second power series:
/// `duration * NP * IF / (FTP * 3600) * 100` with `IF = NP / FTP`.
pub fn compute_tss(power: &[f64], ftp: f64) -> Result<f64> {
    if ftp <= 0.0 {
        return Err(RidecastError::InvalidConfig(
            "FTP must be positive".into(),
        ));
    }
    let np = normalized_power(power)?;
    let intensity = np / ftp;
    let duration_s = power.len() as f64;
    Ok(duration_s * np * intensity / (ftp * 3600.0) * 100.0)
}

fn check_sorted_unique(history: &[DailyLoad]) -> Result<()> {
    for pair in history.windows(2) {
        if pair[1].date == pair[0].date {
            return Err(RidecastError::DuplicateDay(pair[0].date));
        }
        if pair[1].date < pair[0].date {
            return Err(RidecastError::InvalidConfig(format!(
                "load history not sorted: {} precedes {}",
                pair[1].date, pair[0].date
            )));
        }
    }
    Ok(())
}

/// Shared CTL/ATL recursion over a contiguous day range, zero-filling days
/// with no recorded load.
fn evolve_range(
    tss_by_day: &BTreeMap<NaiveDate, f64>,
    first: NaiveDate,
    last: NaiveDate,
) -> Vec<FitnessState> {
    let mut states: Vec<FitnessState> = Vec::new();
    let mut ctl = 0.0;
    let mut atl = 0.0;
    let mut day = first;
    loop {
        let tss = tss_by_day.get(&day).copied().unwrap_or(0.0);
        ctl += (tss - ctl) / CTL_DAYS;
        atl += (tss - atl) / ATL_DAYS;
        let ramp_rate = if states.len() >= 7 {
            ctl - states[states.len() - 7].ctl
        } else {
            0.0
        };
        states.push(FitnessState {
            date: day,
            ctl,
            atl,
            tsb: ctl - atl,
            ramp_rate,
        });
        if day == last {
            break;
        }
        day = day.checked_add_days(Days::new(1)).expect("date overflow");
    }
    states
}

/// Evolve the fitness recursion over a sorted history. One state per
/// calendar day from the first to the last recorded day, gaps zero-filled.
pub fn evolve_fitness(history: &[DailyLoad]) -> Result<Vec<FitnessState>> {
    check_sorted_unique(history)?;
    if history.is_empty() {
        return Ok(Vec::new());
    }
    let tss_by_day: BTreeMap<NaiveDate, f64> =
        history.iter().map(|l| (l.date, l.tss)).collect();
    let first = history[0].date;
    let last = history[history.len() - 1].date;
    Ok(evolve_range(&tss_by_day, first, last))
}

/// Hours in `zone` over the strict-past window: days `t'` with
/// `t - w < t' < t`. Both the query day and the day exactly `w` back are
/// excluded.
pub fn rolling_zone_hours(
    history: &[DailyLoad],
    t: NaiveDate,
    window_days: u32,
    channel: Channel,
    zone: usize,
) -> Result<f64> {
    let lower = t
        .checked_sub_days(Days::new(window_days as u64))
        .expect("date underflow");
    let mut seconds = 0.0;
    for load in history {
        if load.date > lower && load.date < t {
            seconds += load.zone_seconds.get(channel, zone)?;
        }
    }
    Ok(seconds / 3600.0)
}

/// The 52 athlete-state features for day `t`, keyed by canonical name:
/// ctl/atl/tsb/ramp_rate evolved through `t-1`, then the 48 zone-hour
/// features. Only strictly-past history contributes.
pub fn build_state_features(history: &[DailyLoad], t: NaiveDate) -> Result<Vec<(String, f64)>> {
    check_sorted_unique(history)?;
    let yesterday = t.checked_sub_days(Days::new(1)).expect("date underflow");
    let past: Vec<&DailyLoad> = history.iter().filter(|l| l.date < t).collect();

    let fitness = if past.is_empty() || yesterday < past[0].date {
        FitnessState {
            date: yesterday,
            ctl: 0.0,
            atl: 0.0,
            tsb: 0.0,
            ramp_rate: 0.0,
        }
    } else {
        let tss_by_day: BTreeMap<NaiveDate, f64> =
            past.iter().map(|l| (l.date, l.tss)).collect();
        evolve_range(&tss_by_day, past[0].date, yesterday)
            .pop()
            .expect("non-empty range")
    };

    let mut features = Vec::with_capacity(52);
    features.push(("ctl".to_string(), fitness.ctl));
    features.push(("atl".to_string(), fitness.atl));
    features.push(("tsb".to_string(), fitness.tsb));
    features.push(("ramp_rate".to_string(), fitness.ramp_rate));

    for &w in &schema::ZONE_WINDOWS_DAYS {
        for z in 0..schema::POWER_ZONE_COUNT {
            let hours = rolling_zone_hours(history, t, w, Channel::Power, z)?;
            features.push((format!("rolling_{w}d_power_z{z}_hours"), hours));
        }
    }
    for &w in &schema::ZONE_WINDOWS_DAYS {
        for z in 0..schema::HR_ZONE_COUNT {
            let hours = rolling_zone_hours(history, t, w, Channel::Hr, z)?;
            features.push((format!("rolling_{w}d_hr_z{z}_hours"), hours));
        }
    }
    Ok(features)
}

/// Aggregate per-day TSS and zone seconds from activity streams.
/// Activities without usable power contribute zero TSS; each present sample
/// counts one second in its zone.
pub fn daily_loads_from_activities(
    activities: &[crate::ingest::ActivityRecord],
    zones: &ZoneConfig,
) -> Result<Vec<DailyLoad>> {
    let mut by_day: BTreeMap<NaiveDate, DailyLoad> = BTreeMap::new();
    for activity in activities {
        let date = activity.date();
        let entry = by_day
            .entry(date)
            .or_insert_with(|| DailyLoad::new(date, 0.0));
        if let Some(streams) = &activity.streams {
            if let Some(power) = &streams.power {
                let dense = crate::ingest::fill_forward(power);
                if dense.len() >= NP_WINDOW_S {
                    entry.tss += compute_tss(&dense, zones.ftp)?;
                }
                for sample in power.iter().flatten() {
                    entry
                        .zone_seconds
                        .add(Channel::Power, zones.power_zone(*sample), 1.0)?;
                }
            }
            if let Some(hr) = &streams.hr {
                for sample in hr.iter().flatten() {
                    entry
                        .zone_seconds
                        .add(Channel::Hr, zones.hr_zone(*sample), 1.0)?;
                }
            }
        }
    }
    Ok(by_day.into_values().collect())
}

/// Read a daily-loads CSV (columns: date, tss) and optionally a zone-seconds
/// CSV (columns: date, channel, zone, seconds), merging them into one sorted
/// history.
pub fn load_history_from_csv(
    loads_path: Option<&Path>,
    zones_path: Option<&Path>,
) -> Result<Vec<DailyLoad>> {
    let mut by_day: BTreeMap<NaiveDate, DailyLoad> = BTreeMap::new();

    if let Some(path) = loads_path {
        #[derive(Deserialize)]
        struct Row {
            date: String,
            tss: f64,
        }
        let mut reader = csv::Reader::from_path(path)?;
        for (i, result) in reader.deserialize::<Row>().enumerate() {
            let row = result?;
            let line = i as u64 + 2;
            let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|e| {
                RidecastError::MalformedRecord {
                    file: path.display().to_string(),
                    line,
                    reason: format!("bad date {:?}: {e}", row.date),
                }
            })?;
            if row.tss < 0.0 {
                return Err(RidecastError::MalformedRecord {
                    file: path.display().to_string(),
                    line,
                    reason: format!("negative tss {}", row.tss),
                });
            }
            let entry = by_day
                .entry(date)
                .or_insert_with(|| DailyLoad::new(date, 0.0));
            entry.tss += row.tss;
        }
    }

    if let Some(path) = zones_path {
        #[derive(Deserialize)]
        struct Row {
            date: String,
            channel: String,
            zone: usize,
            seconds: f64,
        }
        let mut reader = csv::Reader::from_path(path)?;
        for (i, result) in reader.deserialize::<Row>().enumerate() {
            let row = result?;
            let line = i as u64 + 2;
            let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|e| {
                RidecastError::MalformedRecord {
                    file: path.display().to_string(),
                    line,
                    reason: format!("bad date {:?}: {e}", row.date),
                }
            })?;
            let channel: Channel = row.channel.parse()?;
            let entry = by_day
                .entry(date)
                .or_insert_with(|| DailyLoad::new(date, 0.0));
            entry.zone_seconds.add(channel, row.zone, row.seconds)?;
        }
    }

    Ok(by_day.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn day(n: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 1, 1)
            .unwrap()
            .checked_add_days(Days::new(n))
            .unwrap()
    }

    /// Independent NP computation: materialize every 30 s window mean, no
    /// running sums.
    fn np_oracle(power: &[f64]) -> f64 {
        let means: Vec<f64> = power
            .windows(NP_WINDOW_S)
            .map(|w| w.iter().sum::<f64>() / w.len() as f64)
            .collect();
        let fourth = means.iter().map(|m| m.powi(4)).sum::<f64>() / means.len() as f64;
        fourth.powf(0.25)
    }

    #[test]
    fn np_of_constant_power_is_that_power() {
        assert_relative_eq!(normalized_power(&[200.0; 3600]).unwrap(), 200.0, epsilon = 1e-9);
    }

    #[test]
    fn np_rejects_short_series() {
        assert!(matches!(
            normalized_power(&[200.0; 29]),
            Err(RidecastError::InsufficientData(_))
        ));
        assert!(normalized_power(&[200.0; 30]).is_ok());
    }

    #[test]
    fn np_per_second_alternation_smooths_to_the_mean() {
        // 0/400 every second: every 30 s window averages exactly 200, so the
        // rolling-average step erases the alternation entirely.
        let power: Vec<f64> = (0..3600).map(|i| if i % 2 == 0 { 0.0 } else { 400.0 }).collect();
        let np = normalized_power(&power).unwrap();
        assert_relative_eq!(np, np_oracle(&power), epsilon = 1e-9);
        assert_relative_eq!(np, 200.0, epsilon = 1e-9);
    }

    #[test]
    fn np_block_alternation_exceeds_the_mean() {
        // 600 s blocks of 0/400: windows straddle boundaries rarely, so NP
        // approaches 400/2^0.25 ~ 336. Compare against the direct oracle and
        // bracket the value.
        let power: Vec<f64> = (0..3600)
            .map(|i| if (i / 600) % 2 == 0 { 0.0 } else { 400.0 })
            .collect();
        let np = normalized_power(&power).unwrap();
        assert_relative_eq!(np, np_oracle(&power), epsilon = 1e-9);
        assert!(np > 300.0 && np < 400.0, "np = {np}");
    }

    #[test]
    fn tss_one_hour_at_threshold_is_100() {
        assert_relative_eq!(compute_tss(&[232.0; 3600], 232.0).unwrap(), 100.0, epsilon = 1e-9);
    }

    #[test]
    fn tss_is_linear_in_duration() {
        assert_relative_eq!(compute_tss(&[232.0; 1800], 232.0).unwrap(), 50.0, epsilon = 1e-9);
    }

    #[test]
    fn tss_at_three_quarter_intensity() {
        // IF = 174/232 = 0.75 exactly; one hour -> 0.75^2 * 100 = 56.25.
        let tss = compute_tss(&[174.0; 3600], 232.0).unwrap();
        assert_relative_eq!(tss, 56.25, epsilon = 1e-9);
    }

    #[test]
    fn tss_requires_positive_ftp() {
        assert!(matches!(
            compute_tss(&[200.0; 3600], 0.0),
            Err(RidecastError::InvalidConfig(_))
        ));
    }

    #[test]
    fn evolve_all_zero_history_stays_zero() {
        let history: Vec<DailyLoad> = (0..10).map(|i| DailyLoad::new(day(i), 0.0)).collect();
        for state in evolve_fitness(&history).unwrap() {
            assert_eq!(state.ctl, 0.0);
            assert_eq!(state.atl, 0.0);
            assert_eq!(state.tsb, 0.0);
        }
    }

    #[test]
    fn evolve_single_step_from_zero() {
        let states = evolve_fitness(&[DailyLoad::new(day(0), 42.0)]).unwrap();
        assert_eq!(states.len(), 1);
        assert_relative_eq!(states[0].ctl, 1.0, epsilon = 1e-12);
        assert_relative_eq!(states[0].atl, 6.0, epsilon = 1e-12);
        assert_relative_eq!(states[0].tsb, -5.0, epsilon = 1e-12);
    }

    #[test]
    fn evolve_converges_to_constant_load() {
        let history: Vec<DailyLoad> = (0..400).map(|i| DailyLoad::new(day(i), 100.0)).collect();
        let states = evolve_fitness(&history).unwrap();
        let last = states.last().unwrap();
        assert!((last.ctl - 100.0).abs() < 1.0, "ctl = {}", last.ctl);
        assert!((last.atl - 100.0).abs() < 0.1, "atl = {}", last.atl);
    }

    #[test]
    fn evolve_zero_fills_gaps() {
        let history = vec![DailyLoad::new(day(0), 42.0), DailyLoad::new(day(5), 42.0)];
        let states = evolve_fitness(&history).unwrap();
        assert_eq!(states.len(), 6);
        // Days 1-4 decay from day 0's state.
        assert!(states[1].ctl < states[0].ctl);
        assert!(states[4].atl < states[0].atl);
        assert!(states[5].ctl > states[4].ctl);
    }

    #[test]
    fn evolve_rejects_duplicates_and_disorder() {
        let dup = vec![DailyLoad::new(day(3), 10.0), DailyLoad::new(day(3), 20.0)];
        assert!(matches!(
            evolve_fitness(&dup),
            Err(RidecastError::DuplicateDay(_))
        ));
        let unsorted = vec![DailyLoad::new(day(3), 10.0), DailyLoad::new(day(1), 20.0)];
        assert!(evolve_fitness(&unsorted).is_err());
    }

    #[test]
    fn evolve_tsb_identity_and_ctl_bounds() {
        let history: Vec<DailyLoad> = (0..60)
            .map(|i| DailyLoad::new(day(i), ((i * 37) % 150) as f64))
            .collect();
        let max_tss = history.iter().map(|l| l.tss).fold(0.0, f64::max);
        for state in evolve_fitness(&history).unwrap() {
            assert_eq!(state.tsb, state.ctl - state.atl);
            assert!(state.ctl >= 0.0 && state.ctl <= max_tss);
            assert!(state.atl >= 0.0 && state.atl <= max_tss);
        }
    }

    #[test]
    fn ramp_rate_is_weekly_ctl_change() {
        let history: Vec<DailyLoad> = (0..20).map(|i| DailyLoad::new(day(i), 80.0)).collect();
        let states = evolve_fitness(&history).unwrap();
        for (i, state) in states.iter().enumerate() {
            if i < 7 {
                assert_eq!(state.ramp_rate, 0.0);
            } else {
                assert_relative_eq!(
                    state.ramp_rate,
                    state.ctl - states[i - 7].ctl,
                    epsilon = 1e-12
                );
            }
        }
    }

    fn load_with_zone(n: u64, channel: Channel, zone: usize, seconds: f64) -> DailyLoad {
        let mut load = DailyLoad::new(day(n), 50.0);
        load.zone_seconds.add(channel, zone, seconds).unwrap();
        load
    }

    #[test]
    fn zone_hours_empty_history_is_zero() {
        assert_eq!(
            rolling_zone_hours(&[], day(10), 7, Channel::Power, 2).unwrap(),
            0.0
        );
    }

    #[test]
    fn zone_hours_exclude_the_query_day() {
        let history = vec![load_with_zone(10, Channel::Power, 2, 3600.0)];
        let same_day = rolling_zone_hours(&history, day(10), 7, Channel::Power, 2).unwrap();
        assert_eq!(same_day, 0.0);
        let next_day = rolling_zone_hours(&history, day(11), 7, Channel::Power, 2).unwrap();
        assert_relative_eq!(next_day, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zone_hours_exclude_the_window_boundary_day() {
        // Record exactly w days back: t - w < t' fails, so it must not count.
        let history = vec![load_with_zone(3, Channel::Hr, 1, 1800.0)];
        assert_eq!(
            rolling_zone_hours(&history, day(10), 7, Channel::Hr, 1).unwrap(),
            0.0
        );
        assert_relative_eq!(
            rolling_zone_hours(&history, day(9), 7, Channel::Hr, 1).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn zone_hours_unknown_zone_is_an_error() {
        let history = vec![load_with_zone(3, Channel::Power, 1, 100.0)];
        assert!(rolling_zone_hours(&history, day(5), 7, Channel::Power, 7).is_err());
        assert!(rolling_zone_hours(&history, day(5), 7, Channel::Hr, 5).is_err());
    }

    #[test]
    fn state_features_empty_history_is_all_zero() {
        let features = build_state_features(&[], day(100)).unwrap();
        assert_eq!(features.len(), 52);
        for (name, value) in &features {
            assert_eq!(*value, 0.0, "{name} should be 0");
        }
    }

    #[test]
    fn state_feature_names_match_canonical_order() {
        let features = build_state_features(&[], day(100)).unwrap();
        let names: Vec<String> = features.into_iter().map(|(n, _)| n).collect();
        let mut expected: Vec<String> =
            schema::FITNESS_FEATURES.iter().map(|s| s.to_string()).collect();
        expected.extend(schema::zone_feature_names());
        assert_eq!(names, expected);
    }

    #[test]
    fn state_features_single_past_activity_lands_in_all_windows() {
        let history = vec![load_with_zone(7, Channel::Power, 1, 1800.0)];
        let features = build_state_features(&history, day(10)).unwrap();
        for (name, value) in &features {
            if name.contains("power_z1") {
                assert_relative_eq!(*value, 0.5, epsilon = 1e-12);
            } else if name.contains("rolling") {
                assert_eq!(*value, 0.0, "{name}");
            }
        }
        // Fitness side: one day of TSS 50, then two rest days of decay.
        let ctl = features[0].1;
        let day1 = 50.0 / 42.0;
        let expected = day1 * (1.0 - 1.0 / 42.0) * (1.0 - 1.0 / 42.0);
        assert_relative_eq!(ctl, expected, epsilon = 1e-12);
    }

    #[test]
    fn state_features_ignore_same_day_and_future_load() {
        let mut history = vec![
            load_with_zone(1, Channel::Power, 2, 3600.0),
            load_with_zone(4, Channel::Hr, 3, 1200.0),
        ];
        let baseline = build_state_features(&history, day(6)).unwrap();
        history.push(load_with_zone(6, Channel::Power, 5, 7200.0));
        history.push(load_with_zone(9, Channel::Hr, 4, 3600.0));
        let with_future = build_state_features(&history, day(6)).unwrap();
        for (a, b) in baseline.iter().zip(&with_future) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1.to_bits(), b.1.to_bits(), "{} changed", a.0);
        }
    }

    #[test]
    fn zone_hours_monotone_in_window_length() {
        let history = vec![
            load_with_zone(2, Channel::Power, 3, 1000.0),
            load_with_zone(9, Channel::Power, 3, 2000.0),
            load_with_zone(30, Channel::Power, 3, 1500.0),
        ];
        let t = day(40);
        let mut prev = 0.0;
        for w in [7, 14, 30, 60] {
            let h = rolling_zone_hours(&history, t, w, Channel::Power, 3).unwrap();
            assert!(h >= prev, "window {w} gave {h} < {prev}");
            prev = h;
        }
    }

    #[test]
    fn power_zone_boundaries_are_lower_inclusive() {
        let config = ZoneConfig::default();
        assert_eq!(config.power_zone(0.0), 0);
        assert_eq!(config.power_zone(0.55 * 232.0 - 0.01), 0);
        assert_eq!(config.power_zone(0.55 * 232.0), 1);
        assert_eq!(config.power_zone(232.0), 3); // 1.00 is in [0.90, 1.05)
        assert_eq!(config.power_zone(1.50 * 232.0), 6);
        assert_eq!(config.hr_zone(0.90 * 190.0), 4);
        assert_eq!(config.hr_zone(100.0), 0); // 0.53 of max
    }

    #[test]
    fn zone_config_validation_rejects_bad_bounds() {
        let mut config = ZoneConfig::default();
        config.power_bounds = vec![0.55, 0.55, 0.90, 1.05, 1.20, 1.50];
        assert!(config.validate().is_err());
        let mut config = ZoneConfig::default();
        config.hr_bounds = vec![0.60, 0.70, 0.80];
        assert!(config.validate().is_err());
        assert!(ZoneConfig::default().validate().is_ok());
    }

    #[test]
    fn daily_loads_aggregate_streams_by_date() {
        use crate::ingest::{ActivityKind, ActivityRecord, Streams};
        use chrono::TimeZone;
        let config = ZoneConfig::default();
        let make = |id: &str, hour: u32, watts: f64| ActivityRecord {
            id: id.into(),
            start_time: chrono::Utc
                .with_ymd_and_hms(2024, 1, 1, hour, 0, 0)
                .unwrap(),
            moving_time: 3600.0,
            elapsed_time: 3600.0,
            distance: 30_000.0,
            kind: ActivityKind::Ride,
            streams: Some(Streams {
                power: Some(vec![Some(watts); 3600]),
                hr: Some(vec![Some(150.0); 3600]),
                speed: None,
            }),
        };
        let loads =
            daily_loads_from_activities(&[make("m", 8, 232.0), make("e", 17, 116.0)], &config)
                .unwrap();
        assert_eq!(loads.len(), 1);
        // 100 TSS at threshold + 25 TSS at half threshold.
        assert_relative_eq!(loads[0].tss, 125.0, epsilon = 1e-9);
        assert_eq!(loads[0].zone_seconds.power[3], 3600.0); // 1.00 FTP
        assert_eq!(loads[0].zone_seconds.power[0], 3600.0); // 0.50 FTP
        assert_eq!(loads[0].zone_seconds.hr[2], 7200.0); // 150/190 = 0.79
    }

    #[test]
    fn load_history_csv_merges_tss_and_zones() {
        let dir = tempfile::tempdir().unwrap();
        let loads = dir.path().join("loads.csv");
        let zones = dir.path().join("zones.csv");
        std::fs::write(&loads, "date,tss\n2024-01-01,80\n2024-01-03,60\n").unwrap();
        std::fs::write(
            &zones,
            "date,channel,zone,seconds\n2024-01-01,power,2,1800\n2024-01-02,hr,1,600\n",
        )
        .unwrap();
        let history = load_history_from_csv(Some(&loads), Some(&zones)).unwrap();
        assert_eq!(history.len(), 3);
        assert_eq!(history[0].tss, 80.0);
        assert_eq!(history[0].zone_seconds.power[2], 1800.0);
        assert_eq!(history[1].tss, 0.0);
        assert_eq!(history[1].zone_seconds.hr[1], 600.0);
        assert_eq!(history[2].tss, 60.0);
    }
}
