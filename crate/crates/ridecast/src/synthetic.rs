//! Seeded synthetic corpora with a known linear ground truth.
//!
//! Real ride datasets are private, so end-to-end verification runs on
//! generated ones: routes with controllable climb placement, a daily
//! training-load trajectory, and durations drawn from an affine function
//! of features the pipeline itself extracts (plus Gaussian noise). Because
//! the ground truth lives inside the canonical feature schema, a correct
//! pipeline must recover it — noiselessly to numerical precision.
//!
//! Everything is a pure function of the generator settings (including
//! their seed): the same settings produce byte-identical corpora.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, Days, NaiveDate, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::athlete::{build_state_features, evolve_fitness, DailyLoad};
use crate::error::{Result, RidecastError};
use crate::ingest::{ActivityKind, ActivityRecord, RouteProfile, EARTH_RADIUS_M, RESAMPLE_STEP_M};
use crate::topology::extract_topology;

/// Where generated climbs sit along a route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClimbPlacement {
    /// Climbs confined to the first third.
    Front,
    /// Climbs confined to the final third.
    Back,
    /// Climbs anywhere along the route.
    Uniform,
}

/// The affine ground truth for ride duration, in minutes. All terms are
/// features of the canonical schema, so the generated signal is exactly
/// representable by the models under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueCoefficients {
    pub intercept_min: f64,
    /// Minutes per km of `total_distance`.
    pub min_per_km: f64,
    /// Minutes per meter of `total_ascent`.
    pub min_per_ascent_m: f64,
    /// Minutes per detected climb.
    pub min_per_climb: f64,
    /// Minutes per CTL point (negative: fitter is faster).
    pub min_per_ctl: f64,
    /// Minutes per TSB point.
    pub min_per_tsb: f64,
}

impl Default for TrueCoefficients {
    fn default() -> Self {
        TrueCoefficients {
            intercept_min: 30.0,
            min_per_km: 2.4,
            min_per_ascent_m: 0.04,
            min_per_climb: 1.0,
            min_per_ctl: -0.2,
            min_per_tsb: -0.05,
        }
    }
}

/// Full description of a synthetic corpus. Distances are drawn from a
/// clipped normal; daily TSS follows a sinusoid with weekly rest days so
/// fitness state genuinely varies across ride dates.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub n_activities: usize,
    pub distance_mean_km: f64,
    pub distance_sd_km: f64,
    pub distance_min_km: f64,
    pub distance_max_km: f64,
    pub placement: ClimbPlacement,
    pub coefficients: TrueCoefficients,
    /// Duration noise σ, minutes.
    pub noise_sd_min: f64,
    /// Mean of the daily TSS sinusoid.
    pub daily_tss_base: f64,
    /// Amplitude of the daily TSS sinusoid.
    pub daily_tss_amplitude: f64,
    pub tss_period_days: f64,
    /// Training days generated before the first ride, so fitness has
    /// settled to a realistic level by then.
    pub warmup_days: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            seed: 0,
            n_activities: 96,
            distance_mean_km: 24.4,
            distance_sd_km: 13.1,
            distance_min_km: 10.0,
            distance_max_km: 110.0,
            placement: ClimbPlacement::Uniform,
            coefficients: TrueCoefficients::default(),
            noise_sd_min: 5.0,
            daily_tss_base: 70.0,
            daily_tss_amplitude: 30.0,
            tss_period_days: 28.0,
            warmup_days: 120,
        }
    }
}

impl GeneratorSpec {
    fn validate(&self) -> Result<()> {
        if self.n_activities < 2 {
            return Err(RidecastError::InvalidConfig(format!(
                "need at least 2 activities, got {}",
                self.n_activities
            )));
        }
        if !(self.noise_sd_min >= 0.0) {
            return Err(RidecastError::InvalidConfig(format!(
                "noise sd must be ≥ 0, got {}",
                self.noise_sd_min
            )));
        }
        if !(self.distance_sd_km > 0.0) {
            return Err(RidecastError::InvalidConfig(format!(
                "distance sd must be positive, got {}",
                self.distance_sd_km
            )));
        }
        if !(self.distance_min_km > 0.0 && self.distance_max_km > self.distance_min_km) {
            return Err(RidecastError::InvalidConfig(format!(
                "degenerate distance range [{}, {}]",
                self.distance_min_km, self.distance_max_km
            )));
        }
        if !(self.tss_period_days > 0.0) {
            return Err(RidecastError::InvalidConfig(format!(
                "tss period must be positive, got {}",
                self.tss_period_days
            )));
        }
        Ok(())
    }
}

/// A generated corpus plus its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub activities: Vec<ActivityRecord>,
    pub profiles: BTreeMap<String, RouteProfile>,
    pub loads: Vec<DailyLoad>,
    /// Noiseless duration per activity (minutes), aligned with
    /// `activities`. Observed moving times add the Gaussian noise.
    pub true_durations_min: Vec<f64>,
}

const CORPUS_START: (i32, u32, u32) = (2024, 1, 1);
const BASE_GRADIENT_AMPLITUDE: f64 = 1.0;
const CLIMB_GAP_M: f64 = 300.0;

fn corpus_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(CORPUS_START.0, CORPUS_START.1, CORPUS_START.2).unwrap()
}

/// One synthetic route: gentle rolling terrain plus distinct climbs placed
/// according to the configured placement policy. Distances come from the
/// configured clipped normal; climbs are steep and long enough that the
/// detector must find them.
pub fn generate_route(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<RouteProfile> {
    spec.validate()?;
    let dist_sampler = Normal::new(spec.distance_mean_km, spec.distance_sd_km)
        .expect("validated sd is positive and finite");
    let km = dist_sampler
        .sample(rng)
        .clamp(spec.distance_min_km, spec.distance_max_km);
    let step = RESAMPLE_STEP_M;
    let n_steps = (km * 1000.0 / step).round() as usize;
    let total_m = n_steps as f64 * step;

    // rolling base terrain: a slow sinusoid plus jitter, all well under the
    // climb-gradient threshold
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let mut steps: Vec<f64> = (0..n_steps)
        .map(|j| {
            BASE_GRADIENT_AMPLITUDE * (std::f64::consts::TAU * j as f64 / 150.0 + phase).sin()
                + rng.random_range(-0.3..0.3)
        })
        .collect();

    // climbs: pick lengths/gradients, then fit as many as the placement
    // zone can hold, separated by more than the detector's merge gap
    let wanted = 1 + (km / 8.0).floor() as usize;
    let mut lengths: Vec<f64> = (0..wanted)
        .map(|_| rng.random_range(600.0..1800.0))
        .collect();
    let (zone_lo, zone_hi) = match spec.placement {
        ClimbPlacement::Front => (0.02 * total_m, total_m / 3.0),
        ClimbPlacement::Back => (2.0 * total_m / 3.0, 0.98 * total_m),
        ClimbPlacement::Uniform => (0.02 * total_m, 0.98 * total_m),
    };
    let width = zone_hi - zone_lo;
    while !lengths.is_empty()
        && lengths.iter().map(|l| l + CLIMB_GAP_M).sum::<f64>() > width
    {
        lengths.pop();
    }
    let slack = width - lengths.iter().map(|l| l + CLIMB_GAP_M).sum::<f64>();
    let mut offsets: Vec<f64> = (0..lengths.len())
        .map(|_| rng.random_range(0.0..=1.0) * slack)
        .collect();
    offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // climb i starts at zone_lo + Σ_{j<i}(len_j + gap) + offsets[i]; sorted
    // offsets keep the climbs ordered, non-overlapping, and inside the zone
    let mut base = zone_lo;
    for (length, offset) in lengths.iter().zip(&offsets) {
        let start_m = base + offset;
        let gradient = rng.random_range(4.5..8.5);
        let first = (start_m / step) as usize;
        let count = (length / step).round() as usize;
        for j in first..(first + count).min(n_steps) {
            steps[j] = gradient + rng.random_range(-0.4..0.4);
        }
        base += length + CLIMB_GAP_M;
    }

    // bearings: a drifting heading with occasional sharp corners
    let mut heading: f64 = rng.random_range(0.0..360.0);
    let wobble = Normal::new(0.0, 6.0).expect("finite sd");
    let mut bearing = Vec::with_capacity(n_steps + 1);
    for _ in 0..n_steps {
        bearing.push(heading);
        heading += wobble.sample(rng);
        if rng.random_range(0.0..1.0) < 0.01 {
            heading += rng.random_range(60.0..120.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        }
        heading = heading.rem_euclid(360.0);
    }
    bearing.push(*bearing.last().unwrap());

    let base_altitude = 200.0 + rng.random_range(0.0..600.0);
    let mut altitude = Vec::with_capacity(n_steps + 1);
    altitude.push(base_altitude);
    for g in &steps {
        altitude.push(altitude.last().unwrap() + g * step / 100.0);
    }
    RouteProfile::from_grids(step, altitude, bearing)
}

fn daily_tss(spec: &GeneratorSpec, day: u64, rng: &mut ChaCha8Rng) -> f64 {
    if day % 7 == 6 {
        return 0.0; // rest day
    }
    let cycle = (std::f64::consts::TAU * day as f64 / spec.tss_period_days).sin();
    (spec.daily_tss_base + spec.daily_tss_amplitude * cycle + rng.random_range(-10.0..10.0))
        .max(0.0)
}

/// Generate the whole corpus: a daily load history, one route and one
/// recorded activity per ride day, and the ground-truth durations the
/// observed moving times were drawn around.
pub fn generate_corpus(spec: &GeneratorSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let start = corpus_start_date();

    // ride calendar first, so the load history can cover it fully
    let mut ride_days: Vec<u64> = Vec::with_capacity(spec.n_activities);
    let mut day = spec.warmup_days;
    for _ in 0..spec.n_activities {
        ride_days.push(day);
        day += rng.random_range(1..=3);
    }
    let last_day = *ride_days.last().unwrap();

    let mut loads = Vec::with_capacity(last_day as usize + 1);
    for d in 0..=last_day {
        let date = start + Days::new(d);
        let tss = daily_tss(spec, d, &mut rng);
        let mut load = DailyLoad::new(date, tss);
        // rough zone split so rolling zone-hour features are non-trivial
        load.zone_seconds.power[1] = tss * 14.0;
        load.zone_seconds.power[2] = tss * 18.0;
        load.zone_seconds.power[3] = tss * 6.0;
        load.zone_seconds.hr[1] = tss * 20.0;
        load.zone_seconds.hr[2] = tss * 15.0;
        loads.push(load);
    }

    let noise = Normal::new(0.0, spec.noise_sd_min.max(f64::MIN_POSITIVE))
        .expect("validated sd is non-negative");
    let mut activities = Vec::with_capacity(spec.n_activities);
    let mut profiles = BTreeMap::new();
    let mut true_durations = Vec::with_capacity(spec.n_activities);
    for (i, &d) in ride_days.iter().enumerate() {
        let id = format!("syn-{:03}", i + 1);
        let date = start + Days::new(d);
        let profile = generate_route(spec, &mut rng)?;
        let topo = extract_topology(&profile)?;
        let state = build_state_features(&loads, date)?;
        let lookup = |name: &str| {
            state
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .expect("state features always include fitness values")
        };
        let c = &spec.coefficients;
        let mu = c.intercept_min
            + c.min_per_km * topo.total_distance
            + c.min_per_ascent_m * topo.total_ascent
            + c.min_per_climb * topo.num_climbs as f64
            + c.min_per_ctl * lookup("ctl")
            + c.min_per_tsb * lookup("tsb");
        let observed = if spec.noise_sd_min > 0.0 {
            mu + noise.sample(&mut rng)
        } else {
            mu
        };
        let moving_time = (observed * 60.0).max(60.0);
        let start_time: DateTime<Utc> = date
            .and_hms_opt(9, 0, 0)
            .expect("09:00 always exists")
            .and_utc();
        activities.push(ActivityRecord {
            id: id.clone(),
            start_time,
            moving_time,
            elapsed_time: moving_time * 1.06 + 120.0,
            distance: profile.total_distance(),
            kind: ActivityKind::Ride,
            streams: None,
        });
        profiles.insert(id, profile);
        true_durations.push(mu);
    }

    Ok(SyntheticCorpus {
        activities,
        profiles,
        loads,
        true_durations_min: true_durations,
    })
}

/// Dead-reckoned track points for a profile, starting near (45°N, 6°E):
/// each grid step advances one `step` along its bearing on the sphere.
fn dead_reckon_gpx(profile: &RouteProfile) -> String {
    let mut lat = 45.0_f64;
    let mut lon = 6.0_f64;
    let mut gpx = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<gpx version=\"1.1\" creator=\"synthetic route generator\">\n  <trk>\n    <trkseg>\n",
    );
    for j in 0..profile.altitude.len() {
        writeln!(
            gpx,
            "      <trkpt lat=\"{lat}\" lon=\"{lon}\"><ele>{}</ele></trkpt>",
            profile.altitude[j]
        )
        .expect("string writes cannot fail");
        let theta = profile.bearing[j].to_radians();
        let dlat = profile.step * theta.cos() / EARTH_RADIUS_M;
        lat += dlat.to_degrees();
        let dlon = profile.step * theta.sin() / (EARTH_RADIUS_M * lat.to_radians().cos());
        lon += dlon.to_degrees();
    }
    gpx.push_str("    </trkseg>\n  </trk>\n</gpx>\n");
    gpx
}

/// Write a corpus in the exact formats the ingest readers consume:
/// `activities.csv`, one GPX per ride under `gpx/`, `loads.csv`,
/// `zone_seconds.csv`, and `wellness.csv` (our own fitness recursion, for
/// cross-checking).
pub fn write_corpus(corpus: &SyntheticCorpus, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir.join("gpx"))?;

    let mut activities = String::from("id,start_time,moving_time,elapsed_time,distance,type\n");
    for a in &corpus.activities {
        writeln!(
            activities,
            "{},{},{},{},{},Ride",
            a.id,
            a.start_time.to_rfc3339(),
            a.moving_time,
            a.elapsed_time,
            a.distance
        )
        .expect("string writes cannot fail");
    }
    std::fs::write(dir.join("activities.csv"), activities)?;

    for (id, profile) in &corpus.profiles {
        std::fs::write(dir.join("gpx").join(format!("{id}.gpx")), dead_reckon_gpx(profile))?;
    }

    let mut loads = String::from("date,tss\n");
    let mut zones = String::from("date,channel,zone,seconds\n");
    for l in &corpus.loads {
        writeln!(loads, "{},{}", l.date, l.tss).expect("string writes cannot fail");
        for (z, s) in l.zone_seconds.power.iter().enumerate() {
            if *s > 0.0 {
                writeln!(zones, "{},power,{z},{s}", l.date).expect("string writes cannot fail");
            }
        }
        for (z, s) in l.zone_seconds.hr.iter().enumerate() {
            if *s > 0.0 {
                writeln!(zones, "{},hr,{z},{s}", l.date).expect("string writes cannot fail");
            }
        }
    }
    std::fs::write(dir.join("loads.csv"), loads)?;
    std::fs::write(dir.join("zone_seconds.csv"), zones)?;

    let mut wellness = String::from("date,ctl,atl,tsb,weight\n");
    for state in evolve_fitness(&corpus.loads)? {
        writeln!(
            wellness,
            "{},{},{},{},",
            state.date, state.ctl, state.atl, state.tsb
        )
        .expect("string writes cannot fail");
    }
    std::fs::write(dir.join("wellness.csv"), wellness)?;
    Ok(())
}
