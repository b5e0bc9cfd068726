use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// One entry of a conductor run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "camelCase")]
pub enum RunEvent {
    #[serde(rename_all = "camelCase")]
    Reminder {
        t: f64,
        voice_message_id: Option<u32>,
        image_message_id: Option<u32>,
    },
    #[serde(rename_all = "camelCase")]
    Alarm {
        t: f64,
        kind: String,
        voice_message_id: Option<u32>,
        image_message_id: Option<u32>,
    },
    Dropped {
        t: f64,
        topic: String,
    },
    Score {
        t: f64,
        score100: u8,
    },
    Mode {
        t: f64,
        mode: String,
    },
    /// `active` devices were powered for `dt` seconds.
    Tick {
        t: f64,
        dt: f64,
        active: u32,
    },
    Movement {
        t: f64,
        hours: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunLog {
    pub scenario: String,
    /// Mode the run was launched in (auto, semi or adaptive).
    pub mode: String,
    pub events: Vec<RunEvent>,
}

impl RunLog {
    pub fn new(scenario: impl Into<String>, mode: impl Into<String>) -> Self {
        RunLog { scenario: scenario.into(), mode: mode.into(), events: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsRow {
    pub scenario: String,
    pub mode: String,
    /// Last published score, if the run published any.
    pub game_score: Option<u8>,
    pub reminders: u64,
    pub alarms: u64,
    pub dropped: u64,
    pub active_device_seconds: f64,
    /// Devices active at the end of the run.
    pub active_devices: u32,
    /// Distinct voice ids in first-seen order, `;`-separated.
    pub voice_ids: String,
    pub image_ids: String,
    pub movement_hours: f64,
}

fn push_id(seen: &mut Vec<u32>, id: Option<u32>) {
    if let Some(id) = id {
        if !seen.contains(&id) {
            seen.push(id);
        }
    }
}

fn join(ids: &[u32]) -> String {
    ids.iter().map(u32::to_string).collect::<Vec<_>>().join(";")
}

/// Folds each log into one row. Logs sharing a scenario name are merged in
/// order, so a scenario split across several logs still yields a single row.
pub fn aggregate_run_metrics(logs: &[RunLog]) -> Result<Vec<MetricsRow>, AnalyticsError> {
    if logs.is_empty() {
        return Err(AnalyticsError::EmptyLog);
    }
    let mut order: Vec<(String, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    for log in logs {
        if seen.insert((log.scenario.clone(), log.mode.clone())) {
            order.push((log.scenario.clone(), log.mode.clone()));
        }
    }
    Ok(order
        .into_iter()
        .map(|(scenario, mode)| {
            let mut row = MetricsRow {
                scenario: scenario.clone(),
                mode: mode.clone(),
                game_score: None,
                reminders: 0,
                alarms: 0,
                dropped: 0,
                active_device_seconds: 0.0,
                active_devices: 0,
                voice_ids: String::new(),
                image_ids: String::new(),
                movement_hours: 0.0,
            };
            let (mut voices, mut images) = (Vec::new(), Vec::new());
            for log in logs.iter().filter(|l| l.scenario == scenario && l.mode == mode) {
                for e in &log.events {
                    match e {
                        RunEvent::Reminder { voice_message_id, image_message_id, .. } => {
                            row.reminders += 1;
                            push_id(&mut voices, *voice_message_id);
                            push_id(&mut images, *image_message_id);
                        }
                        RunEvent::Alarm { voice_message_id, image_message_id, .. } => {
                            row.alarms += 1;
                            push_id(&mut voices, *voice_message_id);
                            push_id(&mut images, *image_message_id);
                        }
                        RunEvent::Dropped { .. } => row.dropped += 1,
                        RunEvent::Score { score100, .. } => row.game_score = Some(*score100),
                        RunEvent::Mode { .. } => {}
                        RunEvent::Tick { dt, active, .. } => {
                            row.active_device_seconds += dt * f64::from(*active);
                            row.active_devices = *active;
                        }
                        RunEvent::Movement { hours, .. } => row.movement_hours = *hours,
                    }
                }
            }
            row.voice_ids = join(&voices);
            row.image_ids = join(&images);
            row
        })
        .collect())
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<(), AnalyticsError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "scenario",
            "mode",
            "gameScore",
            "reminders",
            "alarms",
            "dropped",
            "activeDeviceSeconds",
            "activeDevices",
            "voiceIds",
            "imageIds",
            "movementHours",
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<MetricsRow>, AnalyticsError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Extracts two numeric columns from a headed CSV.
pub fn read_columns<R: Read>(input: R, a: &str, b: &str) -> Result<(Vec<f64>, Vec<f64>), AnalyticsError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let idx = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| AnalyticsError::UnknownColumn(name.into()))
    };
    let (ia, ib) = (idx(a)?, idx(b)?);
    let (mut xa, mut xb) = (Vec::new(), Vec::new());
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        for (i, name, out) in [(ia, a, &mut xa), (ib, b, &mut xb)] {
            let cell = rec.get(i).unwrap_or("").trim();
            let v = cell.parse::<f64>().map_err(|_| AnalyticsError::NotANumber {
                row: row + 1,
                column: name.into(),
                value: cell.into(),
            })?;
            out.push(v);
        }
    }
    Ok((xa, xb))
}

/// One numeric column; blank cells are skipped so groups of different
/// sizes can share a file.
pub fn read_column<R: Read>(input: R, name: &str) -> Result<Vec<f64>, AnalyticsError> {
    let mut r = csv::Reader::from_reader(input);
    let i =
        r.headers()?.iter().position(|h| h.trim() == name).ok_or_else(|| AnalyticsError::UnknownColumn(name.into()))?;
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(i).unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        out.push(cell.parse::<f64>().map_err(|_| AnalyticsError::NotANumber {
            row: row + 1,
            column: name.into(),
            value: cell.into(),
        })?);
    }
    Ok(out)
}
