//! GPX and CSV ingestion: raw track points, uniformly resampled route
//! profiles, and activity/wellness records.
//!
//! A [`RouteProfile`] is the shared currency of the whole pipeline: a uniform
//! 10 m distance grid with altitude, per-step gradient, and bearing series.
//! Smoothing happens here, once, at resample time — profiles constructed
//! directly via [`RouteProfile::from_grids`] carry their series verbatim, so
//! synthetic fixtures keep exact control over gradients.

use chrono::{DateTime, NaiveDate, Utc};
use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

use crate::error::{Result, RidecastError};

/// Resample grid step in meters. Fine enough to resolve 500 m climb and
/// rolling-window minima with 50 samples.
pub const RESAMPLE_STEP_M: f64 = 10.0;

/// Speed below this counts as stopped when computing moving time.
pub const MOVING_SPEED_THRESHOLD_MS: f64 = 0.5;

/// Spherical earth radius; ellipsoid correction is immaterial at ride scale.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Tracks with more than 10% missing altitude are rejected.
pub const MIN_ALTITUDE_COVERAGE: f64 = 0.9;

/// Minimum ride duration retained by the activity filter, in seconds.
pub const MIN_MOVING_TIME_S: f64 = 1800.0;

/// Minimum per-stream completeness retained by the activity filter.
pub const MIN_STREAM_COMPLETENESS: f64 = 0.9;

/// Rides with power whose intensity factor falls below this are filtered out.
pub const MIN_INTENSITY_FACTOR: f64 = 0.5;

/// One raw GPS sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPoint {
    pub lat: f64,
    pub lon: f64,
    pub altitude: Option<f64>,
    pub time: Option<DateTime<Utc>>,
}

impl TrackPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        TrackPoint {
            lat,
            lon,
            altitude: None,
            time: None,
        }
    }

    pub fn with_altitude(lat: f64, lon: f64, altitude: f64) -> Self {
        TrackPoint {
            lat,
            lon,
            altitude: Some(altitude),
            time: None,
        }
    }
}

/// A route resampled onto a uniform distance grid.
///
/// All four series have equal length `n ≥ 2`. `distance[i] = i * step`;
/// `gradient[i] = 100 * (altitude[i+1] - altitude[i]) / step` for `i < n-1`,
/// with the final entry duplicating its predecessor so the series stay
/// aligned. Bearings are degrees in `[0, 360)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteProfile {
    pub step: f64,
    pub distance: Vec<f64>,
    pub altitude: Vec<f64>,
    pub gradient: Vec<f64>,
    pub bearing: Vec<f64>,
}

impl RouteProfile {
    /// Build a profile from altitude and bearing series already on the grid.
    /// No smoothing is applied; the gradient is the forward difference of the
    /// given altitude, which keeps the type's internal consistency exact.
    pub fn from_grids(step: f64, altitude: Vec<f64>, bearing: Vec<f64>) -> Result<Self> {
        if step <= 0.0 {
            return Err(RidecastError::InvalidConfig(format!(
                "resample step must be positive, got {step}"
            )));
        }
        if altitude.len() != bearing.len() {
            return Err(RidecastError::InvalidConfig(format!(
                "altitude and bearing lengths differ: {} vs {}",
                altitude.len(),
                bearing.len()
            )));
        }
        if altitude.len() < 2 {
            return Err(RidecastError::RouteTooShort {
                need: 2,
                got: altitude.len(),
            });
        }
        let n = altitude.len();
        let distance: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        let mut gradient = Vec::with_capacity(n);
        for i in 0..n - 1 {
            gradient.push(100.0 * (altitude[i + 1] - altitude[i]) / step);
        }
        gradient.push(gradient[n - 2]);
        let bearing = bearing.into_iter().map(normalize_bearing).collect();
        Ok(RouteProfile {
            step,
            distance,
            altitude,
            gradient,
            bearing,
        })
    }

    /// Grid point count.
    pub fn len(&self) -> usize {
        self.distance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distance.is_empty()
    }

    /// Number of real steps (`len() - 1`).
    pub fn step_count(&self) -> usize {
        self.len() - 1
    }

    /// Gradients of the real steps, excluding the duplicated tail entry.
    pub fn step_gradients(&self) -> &[f64] {
        &self.gradient[..self.step_count()]
    }

    pub fn total_distance(&self) -> f64 {
        *self.distance.last().expect("profile has >= 2 points")
    }
}

fn normalize_bearing(b: f64) -> f64 {
    let r = b.rem_euclid(360.0);
    // rem_euclid can return exactly 360.0 when b is a tiny negative number
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine(a: &TrackPoint, b: &TrackPoint) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Initial great-circle bearing from `a` to `b`, degrees in `[0, 360)`.
pub fn initial_bearing(a: &TrackPoint, b: &TrackPoint) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let y = dlon.sin() * lat2.cos();
    let x = lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos();
    normalize_bearing(y.atan2(x).to_degrees())
}

/// Parse GPX bytes into track points in document order. Only `<trkpt>`
/// elements are read; routes and waypoints are ignored. Altitude is absent
/// where the file omits `<ele>`.
pub fn parse_gpx(bytes: &[u8]) -> Result<Vec<TrackPoint>> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);

    let mut points: Vec<TrackPoint> = Vec::new();
    let mut current: Option<TrackPoint> = None;
    // name of the child element we're inside, if it's one we care about
    let mut capture: Option<&'static str> = None;
    let mut buf = Vec::new();

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| RidecastError::Gpx(format!("XML error at byte {}: {e}", reader.buffer_position())))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let name = e.local_name();
                let self_closing = matches!(event, Event::Empty(_));
                match name.as_ref() {
                    b"trkpt" => {
                        let mut lat = None;
                        let mut lon = None;
                        for attr in e.attributes() {
                            let attr = attr.map_err(|e| RidecastError::Gpx(e.to_string()))?;
                            let key = attr.key.local_name();
                            let val = attr
                                .decode_and_unescape_value(reader.decoder())
                                .map_err(|e| RidecastError::Gpx(e.to_string()))?;
                            match key.as_ref() {
                                b"lat" => lat = val.parse::<f64>().ok(),
                                b"lon" => lon = val.parse::<f64>().ok(),
                                _ => {}
                            }
                        }
                        let (lat, lon) = match (lat, lon) {
                            (Some(lat), Some(lon)) => (lat, lon),
                            _ => {
                                return Err(RidecastError::Gpx(
                                    "trkpt missing lat/lon attribute".into(),
                                ))
                            }
                        };
                        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
                            return Err(RidecastError::InvalidCoordinate {
                                index: points.len(),
                                lat,
                                lon,
                            });
                        }
                        let point = TrackPoint::new(lat, lon);
                        if self_closing {
                            points.push(point);
                        } else {
                            current = Some(point);
                        }
                    }
                    b"ele" if current.is_some() && !self_closing => capture = Some("ele"),
                    b"time" if current.is_some() && !self_closing => capture = Some("time"),
                    _ => {}
                }
            }
            Event::Text(ref t) => {
                if let (Some(what), Some(point)) = (capture, current.as_mut()) {
                    let text = t
                        .unescape()
                        .map_err(|e| RidecastError::Gpx(e.to_string()))?;
                    match what {
                        "ele" => {
                            let v: f64 = text.trim().parse().map_err(|_| {
                                RidecastError::Gpx(format!("bad <ele> value: {text:?}"))
                            })?;
                            point.altitude = Some(v);
                        }
                        "time" => {
                            let t = DateTime::parse_from_rfc3339(text.trim()).map_err(|_| {
                                RidecastError::Gpx(format!("bad <time> value: {text:?}"))
                            })?;
                            point.time = Some(t.with_timezone(&Utc));
                        }
                        _ => unreachable!(),
                    }
                }
            }
            Event::End(ref e) => match e.local_name().as_ref() {
                b"trkpt" => {
                    if let Some(point) = current.take() {
                        points.push(point);
                    }
                }
                b"ele" | b"time" => capture = None,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if points.is_empty() {
        return Err(RidecastError::EmptyInput("no track points in GPX".into()));
    }
    let mut last_time: Option<DateTime<Utc>> = None;
    for (i, p) in points.iter().enumerate() {
        if let Some(t) = p.time {
            if let Some(prev) = last_time {
                if t < prev {
                    return Err(RidecastError::Gpx(format!(
                        "timestamps go backwards at point {i}"
                    )));
                }
            }
            last_time = Some(t);
        }
    }
    Ok(points)
}

/// Read a GPX file and resample it onto the default grid.
pub fn load_gpx_profile(path: &Path) -> Result<RouteProfile> {
    let bytes = std::fs::read(path)?;
    let points = parse_gpx(&bytes)?;
    resample_profile(&points, RESAMPLE_STEP_M)
}

/// Resample raw track points onto a uniform distance grid.
///
/// Altitude is linearly interpolated onto the grid (missing values filled from
/// the nearest known neighbors first) and then smoothed with a centered
/// rolling mean; bearings are computed between consecutive grid positions and
/// smoothed with a circular (vector-mean) rolling window. The smoothing
/// window shrinks symmetrically at the edges, so linear altitude ramps pass
/// through unchanged.
pub fn resample_profile(points: &[TrackPoint], step: f64) -> Result<RouteProfile> {
    if step <= 0.0 {
        return Err(RidecastError::InvalidConfig(format!(
            "resample step must be positive, got {step}"
        )));
    }
    if points.len() < 2 {
        return Err(RidecastError::InsufficientData(format!(
            "need at least 2 track points, got {}",
            points.len()
        )));
    }
    let with_alt = points.iter().filter(|p| p.altitude.is_some()).count();
    if (with_alt as f64) < MIN_ALTITUDE_COVERAGE * points.len() as f64 {
        return Err(RidecastError::InsufficientData(format!(
            "altitude coverage {:.0}% is below the {:.0}% minimum",
            100.0 * with_alt as f64 / points.len() as f64,
            100.0 * MIN_ALTITUDE_COVERAGE
        )));
    }

    // Cumulative distance, dropping consecutive duplicate positions so the
    // raw distance axis is strictly increasing.
    let mut kept: Vec<&TrackPoint> = vec![&points[0]];
    let mut raw_dist: Vec<f64> = vec![0.0];
    for p in &points[1..] {
        let d = haversine(kept.last().unwrap(), p);
        if d > 1e-9 {
            raw_dist.push(raw_dist.last().unwrap() + d);
            kept.push(p);
        }
    }
    let total = *raw_dist.last().unwrap();
    if total < step {
        return Err(RidecastError::ZeroLengthTrack { total, step });
    }

    // Fill missing altitudes by linear interpolation along distance; leading
    // and trailing gaps take the nearest known value.
    let known: Vec<(f64, f64)> = kept
        .iter()
        .zip(&raw_dist)
        .filter_map(|(p, &d)| p.altitude.map(|a| (d, a)))
        .collect();
    if known.is_empty() {
        return Err(RidecastError::InsufficientData(
            "track has no altitude data".into(),
        ));
    }
    let alt_at = |d: f64| -> f64 { interp_pairs(&known, d) };

    let n_grid = (total / step).floor() as usize + 1;
    let mut grid_alt = Vec::with_capacity(n_grid);
    let mut grid_lat = Vec::with_capacity(n_grid);
    let mut grid_lon = Vec::with_capacity(n_grid);
    let mut seg = 0usize; // index into raw_dist such that raw_dist[seg] <= d
    for i in 0..n_grid {
        let d = i as f64 * step;
        while seg + 1 < raw_dist.len() && raw_dist[seg + 1] < d {
            seg += 1;
        }
        let (d0, d1) = (raw_dist[seg], raw_dist[(seg + 1).min(raw_dist.len() - 1)]);
        let t = if d1 > d0 { ((d - d0) / (d1 - d0)).clamp(0.0, 1.0) } else { 0.0 };
        let p0 = kept[seg];
        let p1 = kept[(seg + 1).min(kept.len() - 1)];
        grid_lat.push(p0.lat + t * (p1.lat - p0.lat));
        grid_lon.push(p0.lon + t * (p1.lon - p0.lon));
        grid_alt.push(alt_at(d));
    }

    let smooth_alt = rolling_mean_sym(&grid_alt, 2);

    let mut raw_bearing = Vec::with_capacity(n_grid);
    for i in 0..n_grid - 1 {
        let a = TrackPoint::new(grid_lat[i], grid_lon[i]);
        let b = TrackPoint::new(grid_lat[i + 1], grid_lon[i + 1]);
        raw_bearing.push(initial_bearing(&a, &b));
    }
    raw_bearing.push(*raw_bearing.last().unwrap());
    let smooth_bearing = circular_rolling_mean_sym(&raw_bearing, 2);

    RouteProfile::from_grids(step, smooth_alt, smooth_bearing)
}

fn interp_pairs(pairs: &[(f64, f64)], d: f64) -> f64 {
    match pairs.binary_search_by(|(x, _)| x.partial_cmp(&d).unwrap()) {
        Ok(i) => pairs[i].1,
        Err(0) => pairs[0].1,
        Err(i) if i == pairs.len() => pairs[pairs.len() - 1].1,
        Err(i) => {
            let (d0, a0) = pairs[i - 1];
            let (d1, a1) = pairs[i];
            a0 + (a1 - a0) * (d - d0) / (d1 - d0)
        }
    }
}

/// Centered rolling mean whose window shrinks symmetrically at the edges
/// (so linear series are preserved exactly).
pub(crate) fn rolling_mean_sym(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let window = &values[i - h..=i + h];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}

/// Circular rolling mean over bearings in degrees, via unit-vector averaging.
/// Falls back to the raw value when the window's vectors cancel out.
pub(crate) fn circular_rolling_mean_sym(bearings: &[f64], half: usize) -> Vec<f64> {
    let n = bearings.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let window = &bearings[i - h..=i + h];
            let (mut sx, mut sy) = (0.0, 0.0);
            for b in window {
                let r = b.to_radians();
                sx += r.cos();
                sy += r.sin();
            }
            if sx.hypot(sy) < 1e-12 {
                bearings[i]
            } else {
                normalize_bearing(sy.atan2(sx).to_degrees())
            }
        })
        .collect()
}

/// Seconds with speed above `threshold`, over a per-second speed series.
pub fn compute_moving_time(speed: &[f64], threshold: f64) -> Result<f64> {
    if speed.is_empty() {
        return Err(RidecastError::EmptyInput("speed series is empty".into()));
    }
    Ok(speed.iter().filter(|&&s| s > threshold).count() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActivityKind {
    Ride,
    Other,
}

/// Per-second sample streams attached to an activity. Entries are `None`
/// where the recording dropped out.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Streams {
    pub power: Option<Vec<Option<f64>>>,
    pub hr: Option<Vec<Option<f64>>>,
    pub speed: Option<Vec<Option<f64>>>,
}

/// One recorded (or planned) activity.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityRecord {
    pub id: String,
    pub start_time: DateTime<Utc>,
    /// Seconds in motion — the prediction target, divided by 60, downstream.
    pub moving_time: f64,
    pub elapsed_time: f64,
    /// Meters.
    pub distance: f64,
    pub kind: ActivityKind,
    pub streams: Option<Streams>,
}

impl ActivityRecord {
    pub fn date(&self) -> NaiveDate {
        self.start_time.date_naive()
    }
}

/// Daily wellness export row; ctl/atl/tsb are platform-computed values used
/// only for cross-checking our own recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct WellnessRecord {
    pub date: NaiveDate,
    pub ctl: Option<f64>,
    pub atl: Option<f64>,
    pub tsb: Option<f64>,
    pub weight: Option<f64>,
}

/// Why an activity was excluded by [`filter_activities`].
#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

/// Apply the data-cleaning filters: outdoor rides only, at least 30 minutes
/// of moving time, at least 90% stream completeness, and intensity factor
/// ≥ 0.5 when power is present. Returns retained records plus an exclusion
/// log.
pub fn filter_activities(
    records: &[ActivityRecord],
    ftp: f64,
) -> (Vec<ActivityRecord>, Vec<Exclusion>) {
    let mut retained = Vec::new();
    let mut excluded = Vec::new();
    for rec in records {
        if let Some(reason) = exclusion_reason(rec, ftp) {
            excluded.push(Exclusion {
                id: rec.id.clone(),
                reason,
            });
        } else {
            retained.push(rec.clone());
        }
    }
    (retained, excluded)
}

fn exclusion_reason(rec: &ActivityRecord, ftp: f64) -> Option<String> {
    if rec.kind != ActivityKind::Ride {
        return Some("not an outdoor ride".into());
    }
    if rec.distance <= 0.0 {
        return Some("zero GPS movement (indoor trainer)".into());
    }
    if rec.moving_time < MIN_MOVING_TIME_S {
        return Some(format!(
            "moving time {:.0} s below the {:.0} s minimum",
            rec.moving_time, MIN_MOVING_TIME_S
        ));
    }
    if let Some(streams) = &rec.streams {
        for (name, stream) in [
            ("power", &streams.power),
            ("hr", &streams.hr),
            ("speed", &streams.speed),
        ] {
            if let Some(series) = stream {
                let present = series.iter().filter(|v| v.is_some()).count() as f64;
                let expected = rec.elapsed_time.max(series.len() as f64);
                if expected > 0.0 && present / expected < MIN_STREAM_COMPLETENESS {
                    return Some(format!(
                        "{name} stream {:.0}% complete, below {:.0}%",
                        100.0 * present / expected,
                        100.0 * MIN_STREAM_COMPLETENESS
                    ));
                }
            }
        }
        if ftp > 0.0 {
            if let Some(power) = &streams.power {
                let dense = fill_forward(power);
                if dense.len() >= 30 {
                    if let Ok(np) = crate::athlete::normalized_power(&dense) {
                        let intensity = np / ftp;
                        if intensity < MIN_INTENSITY_FACTOR {
                            return Some(format!(
                                "intensity factor {intensity:.2} below {MIN_INTENSITY_FACTOR}"
                            ));
                        }
                    }
                }
            }
        }
    }
    None
}

/// Replace missing samples with the previous present value (the first present
/// value for a leading gap). Used before rolling-window computations that
/// need a dense per-second series.
pub fn fill_forward(series: &[Option<f64>]) -> Vec<f64> {
    let first = series.iter().flatten().next().copied().unwrap_or(0.0);
    let mut last = first;
    series
        .iter()
        .map(|v| {
            if let Some(x) = v {
                last = *x;
            }
            last
        })
        .collect()
}

fn csv_field_error(path: &Path, line: u64, reason: String) -> RidecastError {
    RidecastError::MalformedRecord {
        file: path.display().to_string(),
        line,
        reason,
    }
}

/// Read an activities CSV (columns: id, start_time, moving_time,
/// elapsed_time, distance, type). Streams are attached separately.
pub fn read_activities_csv(path: &Path) -> Result<Vec<ActivityRecord>> {
    #[derive(Deserialize)]
    struct Row {
        id: String,
        start_time: String,
        moving_time: f64,
        elapsed_time: f64,
        distance: f64,
        #[serde(rename = "type")]
        kind: String,
    }

    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for result in reader.deserialize::<Row>() {
        let row = result?;
        let line = out.len() as u64 + 2; // header is line 1
        let start_time = DateTime::parse_from_rfc3339(&row.start_time)
            .map_err(|e| csv_field_error(path, line, format!("bad start_time {:?}: {e}", row.start_time)))?
            .with_timezone(&Utc);
        if row.moving_time > row.elapsed_time {
            return Err(csv_field_error(
                path,
                line,
                format!(
                    "moving_time {} exceeds elapsed_time {}",
                    row.moving_time, row.elapsed_time
                ),
            ));
        }
        if row.distance < 0.0 {
            return Err(csv_field_error(
                path,
                line,
                format!("negative distance {}", row.distance),
            ));
        }
        let kind = if row.kind == "Ride" {
            ActivityKind::Ride
        } else {
            ActivityKind::Other
        };
        out.push(ActivityRecord {
            id: row.id,
            start_time,
            moving_time: row.moving_time,
            elapsed_time: row.elapsed_time,
            distance: row.distance,
            kind,
            streams: None,
        });
    }
    Ok(out)
}

/// Read a per-second stream CSV (columns: t, power, hr, speed, lat, lon,
/// alt). Empty cells become missing samples. Only power/hr/speed are kept;
/// position columns exist for completeness of the export format.
pub fn read_streams_csv(path: &Path) -> Result<Streams> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (pc, hc, sc) = (col("power"), col("hr"), col("speed"));

    let mut power = Vec::new();
    let mut hr = Vec::new();
    let mut speed = Vec::new();
    for result in reader.records() {
        let record = result?;
        let parse = |idx: Option<usize>| -> Option<f64> {
            idx.and_then(|i| record.get(i))
                .filter(|s| !s.is_empty())
                .and_then(|s| s.parse().ok())
        };
        power.push(parse(pc));
        hr.push(parse(hc));
        speed.push(parse(sc));
    }
    let some_if = |v: Vec<Option<f64>>, present: bool| if present { Some(v) } else { None };
    let any = |v: &[Option<f64>]| v.iter().any(|x| x.is_some());
    Ok(Streams {
        power: some_if(power.clone(), pc.is_some() && any(&power)),
        hr: some_if(hr.clone(), hc.is_some() && any(&hr)),
        speed: some_if(speed.clone(), sc.is_some() && any(&speed)),
    })
}

/// Read a wellness CSV (columns: date, ctl, atl, tsb, weight; all but date
/// optional). At most one record per day.
pub fn read_wellness_csv(path: &Path) -> Result<Vec<WellnessRecord>> {
    #[derive(Deserialize)]
    struct Row {
        date: String,
        ctl: Option<f64>,
        atl: Option<f64>,
        tsb: Option<f64>,
        weight: Option<f64>,
    }

    let mut reader = csv::Reader::from_path(path)?;
    let mut out: Vec<WellnessRecord> = Vec::new();
    let mut seen: HashMap<NaiveDate, u64> = HashMap::new();
    for result in reader.deserialize::<Row>() {
        let row = result?;
        let line = out.len() as u64 + 2;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d")
            .map_err(|e| csv_field_error(path, line, format!("bad date {:?}: {e}", row.date)))?;
        if let Some(prev) = seen.insert(date, line) {
            return Err(csv_field_error(
                path,
                line,
                format!("duplicate date {date} (first seen at line {prev})"),
            ));
        }
        out.push(WellnessRecord {
            date,
            ctl: row.ctl,
            atl: row.atl,
            tsb: row.tsb,
            weight: row.weight,
        });
    }
    Ok(out)
}
