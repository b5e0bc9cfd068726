//! Line-delimited JSON record of everything a conductor saw and said, enough
//! to re-run its decisions offline and check them against the original run.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::engine::{Conductor, ConductorConfig, RunMetrics};
use super::mode::ModePolicy;
use super::ConductorError;
use crate::fuzzy::{RuleBase, RuleDocument, RuleStore};
use crate::meshbus::Frame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunHeader {
    pub scenario: String,
    pub policy: ModePolicy,
    pub config: ConductorConfig,
    pub rules: RuleDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum LogLine {
    Header(RunHeader),
    /// A publish by `client`; `dropped` frames reached nobody.
    Out {
        t: f64,
        client: String,
        dropped: bool,
        frame: Frame,
    },
    /// A frame delivered to the conductor.
    In {
        t: f64,
        frame: Frame,
    },
    /// The conductor ran its decision cycle.
    Tick {
        t: f64,
    },
}

pub fn write_frame_log<W: Write>(lines: &[LogLine], mut out: W) -> Result<(), ConductorError> {
    for l in lines {
        serde_json::to_writer(&mut out, l).map_err(|e| ConductorError::FrameLog(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_frame_log<R: BufRead>(input: R) -> Result<Vec<LogLine>, ConductorError> {
    let mut lines = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed =
            serde_json::from_str(&line).map_err(|e| ConductorError::FrameLog(format!("line {}: {e}", i + 1)))?;
        lines.push(parsed);
    }
    Ok(lines)
}

/// First point where the replayed conductor disagrees with the log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    /// Position among the conductor's publishes.
    pub index: usize,
    pub t: f64,
    pub expected: Option<Frame>,
    pub actual: Option<Frame>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayReport {
    pub scenario: String,
    pub frames_compared: usize,
    pub divergences: Vec<Divergence>,
    pub metrics: RunMetrics,
}

impl ReplayReport {
    pub fn is_faithful(&self) -> bool {
        self.divergences.is_empty()
    }
}

fn same(a: &Frame, b: &Frame) -> bool {
    a.topic == b.topic && a.payload == b.payload && a.retain == b.retain
}

/// Feeds the logged inputs to a fresh conductor and compares what it
/// publishes with what the original published.
pub fn replay(lines: &[LogLine]) -> Result<ReplayReport, ConductorError> {
    let Some(LogLine::Header(h)) = lines.first() else {
        return Err(ConductorError::FrameLog("log does not start with a header".into()));
    };
    let base = RuleBase::from_document(h.rules.clone())?;
    let mut c = Conductor::new(h.config.clone(), Arc::new(RuleStore::new(base)));

    let mut actual: Vec<(f64, Frame)> = c.initial_frames().into_iter().map(|f| (0.0, f)).collect();
    let mut expected: Vec<(f64, Frame)> = Vec::new();
    for line in &lines[1..] {
        match line {
            LogLine::Header(_) => return Err(ConductorError::FrameLog("second header".into())),
            LogLine::Out { t, client, dropped, frame } => {
                if *dropped {
                    c.note_dropped(*t, vec![frame.topic().to_string()]);
                }
                if client == "conductor" {
                    expected.push((*t, frame.clone()));
                }
            }
            LogLine::In { t, frame } => actual.extend(c.receive(*t, frame).into_iter().map(|f| (*t, f))),
            LogLine::Tick { t } => actual.extend(c.tick(*t)?.into_iter().map(|f| (*t, f))),
        }
    }

    let mut divergences = Vec::new();
    for i in 0..expected.len().max(actual.len()) {
        let (e, a) = (expected.get(i), actual.get(i));
        let ok = matches!((e, a), (Some((_, x)), Some((_, y))) if same(x, y));
        if !ok {
            let t = e.or(a).map_or(0.0, |(t, _)| *t);
            divergences.push(Divergence {
                index: i,
                t,
                expected: e.map(|x| x.1.clone()),
                actual: a.map(|x| x.1.clone()),
            });
        }
    }
    Ok(ReplayReport {
        scenario: h.scenario.clone(),
        frames_compared: expected.len().min(actual.len()),
        divergences,
        metrics: c.metrics().clone(),
    })
}

/// Replays every run of a log that may hold several (one header each).
pub fn replay_all(lines: &[LogLine]) -> Result<Vec<ReplayReport>, ConductorError> {
    let starts: Vec<usize> =
        lines.iter().enumerate().filter(|(_, l)| matches!(l, LogLine::Header(_))).map(|(i, _)| i).collect();
    if starts.first() != Some(&0) {
        return Err(ConductorError::FrameLog("log does not start with a header".into()));
    }
    let mut bounds = starts.clone();
    bounds.push(lines.len());
    bounds.windows(2).map(|w| replay(&lines[w[0]..w[1]])).collect()
}
