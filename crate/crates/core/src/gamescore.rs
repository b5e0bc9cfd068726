//! Serious-game session scoring.
//!
//! A session has five tasks worth one point each. The 0-5 point total is
//! normalised onto the 0-100 scale read by the fuzzy `game_score` input with
//! a linear time penalty: full credit up to two minutes, falling to half
//! credit at the ten-minute cap.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TASK_COUNT: usize = 5;
pub const SERIES_COUNT: u8 = 3;
/// Sessions longer than this are timed out.
pub const SESSION_CAP_SECONDS: f64 = 600.0;
pub const PENALTY_FREE_SECONDS: f64 = 120.0;
/// Seconds past the penalty-free window over which credit would fall to zero.
pub const PENALTY_SPAN_SECONDS: f64 = 960.0;
pub const MIN_TIME_FACTOR: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("completed session has {0} of 5 tasks")]
    IncompleteSession(usize),
    #[error("abandoned sessions are not scored")]
    Abandoned,
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("series id {0} outside 1..=3")]
    InvalidSeries(u8),
    #[error("invalid session: {0}")]
    InvalidSession(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskResult {
    pub task_index: u8,
    pub correct: u32,
    #[serde(default)]
    pub wrong: u32,
    pub duration_seconds: f64,
}

impl TaskResult {
    pub fn new(task_index: u8, correct: u32, wrong: u32, duration_seconds: f64) -> Self {
        TaskResult { task_index, correct, wrong, duration_seconds }
    }

    /// Tasks 3 and 4 record wrong answers as well as correct ones.
    pub fn records_wrong(&self) -> bool {
        matches!(self.task_index, 3 | 4)
    }

    pub fn points(&self) -> u8 {
        u8::from(self.correct > 0)
    }

    fn validate(&self) -> Result<(), GameError> {
        if !(1..=TASK_COUNT as u8).contains(&self.task_index) {
            return Err(GameError::InvalidTask(format!("task index {}", self.task_index)));
        }
        if !(self.duration_seconds.is_finite() && self.duration_seconds >= 0.0) {
            return Err(GameError::InvalidTask(format!("task {} duration {}", self.task_index, self.duration_seconds)));
        }
        if self.records_wrong() {
            if self.correct + self.wrong == 0 {
                return Err(GameError::InvalidTask(format!("task {} has no answer", self.task_index)));
            }
        } else if self.wrong != 0 {
            return Err(GameError::InvalidTask(format!("task {} scores correct answers only", self.task_index)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SessionStatus {
    Completed,
    TimedOut,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GameSession {
    pub series_id: u8,
    pub tasks: Vec<TaskResult>,
    /// Wall time of the whole session, including overview and instructions;
    /// not the sum of task durations.
    pub total_seconds: f64,
    pub status: SessionStatus,
}

impl GameSession {
    /// Builds a finished session; status is `TimedOut` past the ten-minute cap.
    pub fn finished(series_id: u8, tasks: Vec<TaskResult>, total_seconds: f64) -> Result<Self, GameError> {
        let status =
            if total_seconds > SESSION_CAP_SECONDS { SessionStatus::TimedOut } else { SessionStatus::Completed };
        let s = GameSession { series_id, tasks, total_seconds, status };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if !(1..=SERIES_COUNT).contains(&self.series_id) {
            return Err(GameError::InvalidSeries(self.series_id));
        }
        if self.tasks.len() > TASK_COUNT {
            return Err(GameError::InvalidSession(format!("{} tasks", self.tasks.len())));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            t.validate()?;
            if self.tasks[..i].iter().any(|o| o.task_index == t.task_index) {
                return Err(GameError::InvalidTask(format!("task {} repeated", t.task_index)));
            }
        }
        let task_time: f64 = self.tasks.iter().map(|t| t.duration_seconds).sum();
        if !(self.total_seconds.is_finite() && self.total_seconds + 1e-9 >= task_time) {
            return Err(GameError::InvalidSession(format!(
                "total {} s shorter than task time {} s",
                self.total_seconds, task_time
            )));
        }
        if self.total_seconds > SESSION_CAP_SECONDS && self.status == SessionStatus::Completed {
            return Err(GameError::InvalidSession("over the time cap but not timed out".into()));
        }
        Ok(())
    }
}

/// Result published on `user/game/score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoreReport {
    pub points: u8,
    pub score100: u8,
    pub total_seconds: f64,
    pub series_id: u8,
}

/// Fraction of credit kept after `total_seconds`.
pub fn time_factor(total_seconds: f64) -> f64 {
    (1.0 - (total_seconds - PENALTY_FREE_SECONDS) / PENALTY_SPAN_SECONDS).clamp(MIN_TIME_FACTOR, 1.0)
}

/// `round(100 * points/5 * time_factor)`, evaluated in a form that is exact
/// for whole-second totals.
pub fn normalized_score(points: u8, total_seconds: f64) -> u8 {
    let p = f64::from(points);
    let raw = if total_seconds <= PENALTY_FREE_SECONDS {
        20.0 * p
    } else if total_seconds >= PENALTY_FREE_SECONDS + PENALTY_SPAN_SECONDS * (1.0 - MIN_TIME_FACTOR) {
        20.0 * p * MIN_TIME_FACTOR
    } else {
        // 100 * p/5 * (1080 - T)/960 == p * (1080 - T) / 48
        p * (PENALTY_FREE_SECONDS + PENALTY_SPAN_SECONDS - total_seconds) / 48.0
    };
    raw.round().clamp(0.0, 100.0) as u8
}

pub fn score_session(session: &GameSession) -> Result<ScoreReport, GameError> {
    if session.status == SessionStatus::Abandoned {
        return Err(GameError::Abandoned);
    }
    session.validate()?;
    if session.status == SessionStatus::Completed && session.tasks.len() < TASK_COUNT {
        return Err(GameError::IncompleteSession(session.tasks.len()));
    }
    let points: u8 = session.tasks.iter().map(TaskResult::points).sum();
    let mut score100 = normalized_score(points, session.total_seconds);
    if session.status == SessionStatus::TimedOut {
        score100 = score100.min(10 * points);
    }
    Ok(ScoreReport { points, score100, total_seconds: session.total_seconds, series_id: session.series_id })
}

/// A report whose points and duration reproduce `score100` exactly.
///
/// Points are the fewest that can reach the score; the duration is solved from
/// the penalty line. Scores 1-9 lie below the half-credit floor of a one-point
/// session and are unreachable.
pub fn report_for_score(score100: u8, series_id: u8) -> Result<ScoreReport, GameError> {
    if !(1..=SERIES_COUNT).contains(&series_id) {
        return Err(GameError::InvalidSeries(series_id));
    }
    if score100 > 100 || (1..10).contains(&score100) {
        return Err(GameError::InvalidSession(format!("score {score100} is not reachable")));
    }
    let points = score100.div_ceil(20);
    let total_seconds = if points == 0 {
        PENALTY_FREE_SECONDS
    } else {
        PENALTY_FREE_SECONDS + PENALTY_SPAN_SECONDS - 48.0 * f64::from(score100) / f64::from(points)
    };
    debug_assert_eq!(normalized_score(points, total_seconds), score100);
    Ok(ScoreReport { points, score100, total_seconds, series_id })
}

/// Uniform choice among the three series, never repeating the previous one.
pub fn select_series<R: Rng + ?Sized>(history: &[u8], rng: &mut R) -> u8 {
    match history.last() {
        Some(&prev) if (1..=SERIES_COUNT).contains(&prev) => {
            let pick = rng.random_range(1..SERIES_COUNT);
            if pick >= prev {
                pick + 1
            } else {
                pick
            }
        }
        _ => rng.random_range(1..=SERIES_COUNT),
    }
}

/// Stochastic player used to drive end-to-end scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct PlayerModel {
    /// Log-space mean of a task's base response time (seconds).
    pub log_mean: f64,
    pub log_sigma: f64,
    /// Extra seconds per task for an ability-0 player.
    pub slowdown_seconds: f64,
    /// Object overview shown before the tasks start.
    pub overview_seconds: f64,
    pub instruction_seconds: f64,
}

impl Default for PlayerModel {
    fn default() -> Self {
        PlayerModel {
            log_mean: 10f64.ln(),
            log_sigma: 0.4,
            slowdown_seconds: 40.0,
            overview_seconds: 10.0,
            instruction_seconds: 15.0,
        }
    }
}

impl PlayerModel {
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        ability: f64,
        series_id: u8,
        rng: &mut R,
    ) -> Result<GameSession, GameError> {
        if !(0.0..=1.0).contains(&ability) {
            return Err(GameError::InvalidSession(format!("ability {ability}")));
        }
        let base =
            LogNormal::new(self.log_mean, self.log_sigma).map_err(|e| GameError::InvalidSession(e.to_string()))?;
        let mut total = self.overview_seconds;
        let tasks: Vec<TaskResult> = (1..=TASK_COUNT as u8)
            .map(|index| {
                let right = rng.random_bool(ability);
                let duration = base.sample(rng) + (1.0 - ability) * self.slowdown_seconds;
                total += duration + self.instruction_seconds;
                let wrong = if matches!(index, 3 | 4) { u32::from(!right) } else { 0 };
                TaskResult::new(index, u32::from(right), wrong, duration)
            })
            .collect();
        GameSession::finished(series_id, tasks, total)
    }
}

pub fn simulate_player<R: Rng + ?Sized>(ability: f64, rng: &mut R) -> Result<GameSession, GameError> {
    let series = rng.random_range(1..=SERIES_COUNT);
    PlayerModel::default().simulate(ability, series, rng)
}
