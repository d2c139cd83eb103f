//! Feature-row assembly and the on-disk feature store.
//!
//! A dataset row carries the canonical feature vector for one activity plus
//! the target (moving time in minutes). Fitness and zone features are
//! evaluated at the activity's start date through strictly-past loads only;
//! [`leakage_audit`] re-derives them with a synthetic same-day activity
//! injected and flags any row whose stored values move.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::athlete::{self, DailyLoad, ZoneSeconds};
use crate::error::{Result, RidecastError};
use crate::ingest::{ActivityRecord, RouteProfile};
use crate::schema::{self, FeatureConfig};

/// One activity's features and target. `values` aligns with the dataset
/// schema; `None` marks a missing value (imputed at modeling time, never
/// here).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub activity_id: String,
    pub date: NaiveDate,
    pub values: Vec<Option<f64>>,
    /// Moving time in minutes.
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<FeatureRow>,
    pub schema: Vec<String>,
    pub config: FeatureConfig,
}

impl Dataset {
    /// Drop feature columns down to a narrower configuration. The three
    /// configurations nest as prefixes of one another, so this is a prefix
    /// truncation; widening is a `SchemaMismatch`.
    pub fn restrict(&self, config: FeatureConfig) -> Result<Dataset> {
        let names = schema::feature_names(config);
        if names.len() > self.schema.len() || self.schema[..names.len()] != names[..] {
            return Err(RidecastError::SchemaMismatch {
                expected: format!("prefix of {} columns", self.schema.len()),
                actual: format!("{} columns for {}", names.len(), config),
            });
        }
        let rows = self
            .rows
            .iter()
            .map(|r| FeatureRow {
                activity_id: r.activity_id.clone(),
                date: r.date,
                values: r.values[..names.len()].to_vec(),
                target: r.target,
            })
            .collect();
        Ok(Dataset {
            rows,
            schema: names,
            config,
        })
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.target).collect()
    }
}

/// Build one feature row per activity. Topology comes from the activity's
/// profile; when the configuration includes athlete state, fitness and zone
/// features are evaluated at the activity's start date over strictly
/// earlier loads.
pub fn assemble(
    activities: &[ActivityRecord],
    profiles: &BTreeMap<String, RouteProfile>,
    load_history: &[DailyLoad],
    config: FeatureConfig,
) -> Result<Dataset> {
    if activities.len() < 2 {
        return Err(RidecastError::InsufficientData(format!(
            "a dataset needs at least 2 activities, got {}",
            activities.len()
        )));
    }
    if config.includes_fitness() && load_history.is_empty() {
        return Err(RidecastError::MissingLoadHistory(
            "athlete-state features requested but the load history is empty".into(),
        ));
    }

    let names = schema::feature_names(config);
    let mut rows = Vec::with_capacity(activities.len());
    for activity in activities {
        let profile = profiles
            .get(&activity.id)
            .ok_or_else(|| RidecastError::MissingProfile(activity.id.clone()))?;
        if activity.moving_time <= 0.0 {
            return Err(RidecastError::InvalidConfig(format!(
                "activity {} has non-positive moving time",
                activity.id
            )));
        }

        let topology = crate::topology::extract_topology(profile)?;
        let mut values: Vec<Option<f64>> =
            topology.values().into_iter().map(|(_, v)| v).collect();

        if config.includes_fitness() {
            let state = athlete::build_state_features(load_history, activity.date())?;
            let keep = names.len() - values.len();
            for (name, value) in state.into_iter().take(keep) {
                debug_assert_eq!(name, names[values.len()]);
                values.push(Some(value));
            }
        }
        debug_assert_eq!(values.len(), names.len());

        rows.push(FeatureRow {
            activity_id: activity.id.clone(),
            date: activity.date(),
            values,
            target: activity.moving_time / 60.0,
        });
    }

    Ok(Dataset {
        rows,
        schema: names,
        config,
    })
}

/// A stored state-feature value that moved when a same-day activity was
/// injected — evidence the row saw data from its own day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageViolation {
    pub activity_id: String,
    pub feature: String,
    pub stored: f64,
    pub recomputed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub rows_checked: usize,
    pub violations: Vec<LeakageViolation>,
}

impl LeakageReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audit every row for temporal leakage: inject a large synthetic training
/// day onto the row's own date, recompute the state features, and flag any
/// stored value that differs. Correctly built rows depend only on strictly
/// earlier days, so the injection must be invisible.
pub fn leakage_audit(dataset: &Dataset, load_history: &[DailyLoad]) -> LeakageReport {
    let topology_width = schema::TOPOLOGY_FEATURES.len();
    let mut report = LeakageReport {
        rows_checked: 0,
        violations: Vec::new(),
    };
    if !dataset.config.includes_fitness() {
        report.rows_checked = dataset.rows.len();
        return report;
    }

    for row in &dataset.rows {
        report.rows_checked += 1;
        let mut injected: Vec<DailyLoad> = load_history.to_vec();
        let synthetic = DailyLoad {
            date: row.date,
            tss: 999.0,
            zone_seconds: ZoneSeconds {
                power: [3600.0; schema::POWER_ZONE_COUNT],
                hr: [3600.0; schema::HR_ZONE_COUNT],
            },
        };
        match injected.binary_search_by_key(&row.date, |l| l.date) {
            Ok(i) => {
                injected[i].tss += synthetic.tss;
                for z in 0..schema::POWER_ZONE_COUNT {
                    injected[i].zone_seconds.power[z] += synthetic.zone_seconds.power[z];
                }
                for z in 0..schema::HR_ZONE_COUNT {
                    injected[i].zone_seconds.hr[z] += synthetic.zone_seconds.hr[z];
                }
            }
            Err(i) => injected.insert(i, synthetic),
        }

        let recomputed = match athlete::build_state_features(&injected, row.date) {
            Ok(s) => s,
            Err(_) => continue,
        };
        for (offset, (name, value)) in recomputed.iter().enumerate() {
            let column = topology_width + offset;
            if column >= row.values.len() {
                break;
            }
            let stored = match row.values[column] {
                Some(v) => v,
                None => continue,
            };
            if stored != *value {
                report.violations.push(LeakageViolation {
                    activity_id: row.activity_id.clone(),
                    feature: name.clone(),
                    stored,
                    recomputed: *value,
                });
            }
        }
    }
    report
}

#[derive(Serialize, Deserialize)]
struct StoreMeta {
    schema_version: String,
    config: String,
    feature_names: Vec<String>,
    row_count: usize,
}

fn meta_path(path: &Path) -> std::path::PathBuf {
    path.with_extension("meta.json")
}

/// Persist a dataset as CSV plus a JSON sidecar carrying the schema
/// version, configuration, and column names. Missing values become empty
/// cells. Both files land via write-then-rename so a crash never leaves a
/// half-written store.
pub fn write_store(dataset: &Dataset, path: &Path) -> Result<()> {
    let meta = StoreMeta {
        schema_version: schema::SCHEMA_VERSION.to_string(),
        config: dataset.config.cli_name().to_string(),
        feature_names: dataset.schema.clone(),
        row_count: dataset.rows.len(),
    };

    let tmp = path.with_extension("csv.tmp");
    {
        let mut writer = csv::Writer::from_path(&tmp)?;
        let mut header = vec!["activity_id".to_string(), "date".into(), "target".into()];
        header.extend(dataset.schema.iter().cloned());
        writer.write_record(&header)?;
        for row in &dataset.rows {
            let mut record = vec![
                row.activity_id.clone(),
                row.date.to_string(),
                row.target.to_string(),
            ];
            for value in &row.values {
                record.push(value.map(|v| v.to_string()).unwrap_or_default());
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
    }
    fs::rename(&tmp, path)?;

    let meta_tmp = meta_path(path).with_extension("meta.json.tmp");
    fs::write(&meta_tmp, serde_json::to_vec_pretty(&meta)?)?;
    fs::rename(&meta_tmp, meta_path(path))?;
    Ok(())
}

/// Load a store written by [`write_store`], verifying the schema version
/// and the exact column set before touching any row.
pub fn read_store(path: &Path) -> Result<Dataset> {
    let meta: StoreMeta = serde_json::from_slice(&fs::read(meta_path(path))?)?;
    if meta.schema_version != schema::SCHEMA_VERSION {
        return Err(RidecastError::SchemaMismatch {
            expected: schema::SCHEMA_VERSION.to_string(),
            actual: meta.schema_version,
        });
    }
    let config = FeatureConfig::from_cli_name(&meta.config).ok_or_else(|| {
        RidecastError::SchemaMismatch {
            expected: "one of topo, topo-fit, topo-fit-zones".into(),
            actual: meta.config.clone(),
        }
    })?;
    let names = schema::feature_names(config);
    if meta.feature_names != names {
        return Err(RidecastError::SchemaMismatch {
            expected: format!("{} canonical columns for {}", names.len(), config),
            actual: format!("{} columns in sidecar", meta.feature_names.len()),
        });
    }

    let file_label = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut expected = vec!["activity_id".to_string(), "date".into(), "target".into()];
    expected.extend(names.iter().cloned());
    if header != expected {
        return Err(RidecastError::SchemaMismatch {
            expected: format!("{} header columns", expected.len()),
            actual: format!("header {:?}...", header.iter().take(4).collect::<Vec<_>>()),
        });
    }

    let malformed = |line: usize, reason: String| RidecastError::MalformedRecord {
        file: file_label.clone(),
        line: line as u64,
        reason,
    };

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let record = record?;
        if record.len() != expected.len() {
            return Err(malformed(
                line,
                format!("expected {} fields, got {}", expected.len(), record.len()),
            ));
        }
        let date: NaiveDate = record[1]
            .parse()
            .map_err(|e| malformed(line, format!("bad date: {e}")))?;
        let target: f64 = record[2]
            .parse()
            .map_err(|e| malformed(line, format!("bad target: {e}")))?;
        let mut values = Vec::with_capacity(names.len());
        for cell in record.iter().skip(3) {
            if cell.is_empty() {
                values.push(None);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|e| malformed(line, format!("bad feature value: {e}")))?;
                values.push(Some(v));
            }
        }
        rows.push(FeatureRow {
            activity_id: record[0].to_string(),
            date,
            values,
            target,
        });
    }

    if rows.len() < 2 {
        return Err(RidecastError::InsufficientData(format!(
            "store at {} holds {} rows; need at least 2",
            path.display(),
            rows.len()
        )));
    }
    Ok(Dataset {
        rows,
        schema: names,
        config,
    })
}
