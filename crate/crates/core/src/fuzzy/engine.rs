use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rule::{Rule, RuleBase, RuleId};
use super::variable::{DataType, Role};
use super::{FuzzyError, MembershipFunction, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Name of the boolean output that gates reminder-class messages.
const REMINDER_GATE: &str = "reminder";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CrispValue {
    Bool(bool),
    Real(f64),
}

impl CrispValue {
    pub fn as_f64(self) -> f64 {
        match self {
            CrispValue::Bool(true) => 1.0,
            CrispValue::Bool(false) => 0.0,
            CrispValue::Real(x) => x,
        }
    }
}

impl From<bool> for CrispValue {
    fn from(b: bool) -> Self {
        CrispValue::Bool(b)
    }
}

impl From<f64> for CrispValue {
    fn from(x: f64) -> Self {
        CrispValue::Real(x)
    }
}

/// Crisp readings for one evaluation, keyed by input variable name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CrispInputSnapshot {
    pub timestamp: f64,
    pub values: BTreeMap<String, CrispValue>,
}

impl CrispInputSnapshot {
    pub fn at(timestamp: f64) -> Self {
        CrispInputSnapshot { timestamp, values: BTreeMap::new() }
    }

    pub fn with(mut self, var: &str, value: impl Into<CrispValue>) -> Self {
        self.set(var, value);
        self
    }

    pub fn set(&mut self, var: &str, value: impl Into<CrispValue>) {
        self.values.insert(var.to_string(), value.into());
    }
}

/// Term degrees for every supplied variable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Fuzzified {
    degrees: BTreeMap<String, BTreeMap<String, f64>>,
    /// Variables whose crisp value was clamped into the universe.
    pub clamped: Vec<String>,
}

impl Fuzzified {
    pub fn degree(&self, var: &str, term: &str) -> Option<f64> {
        self.degrees.get(var)?.get(term).copied()
    }

    pub fn terms(&self, var: &str) -> Option<&BTreeMap<String, f64>> {
        self.degrees.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.degrees.iter().flat_map(|(v, ts)| ts.iter().map(move |(t, d)| (v.as_str(), t.as_str(), *d)))
    }
}

pub fn fuzzify(base: &RuleBase, snapshot: &CrispInputSnapshot) -> Result<Fuzzified> {
    let mut out = Fuzzified::default();
    for (name, value) in &snapshot.values {
        let var = base
            .variable(name)
            .filter(|v| v.role == Role::Input)
            .ok_or_else(|| FuzzyError::UnknownVariable(name.clone()))?;
        let raw = match (var.data_type, value) {
            (DataType::Boolean, CrispValue::Real(x)) => f64::from(u8::from(*x >= 0.5)),
            (_, v) => v.as_f64(),
        };
        let (x, clamped) = var.clamp(raw);
        if clamped {
            log::warn!("input `{name}` = {raw} outside universe, clamped to {x}");
            out.clamped.push(name.clone());
        }
        let terms = var.degrees(x).map(|(t, d)| (t.to_string(), d)).collect();
        out.degrees.insert(name.clone(), terms);
    }
    Ok(out)
}

/// Min t-norm firing strength of every enabled rule, ascending by id.
/// Antecedents over variables absent from the snapshot contribute 0.
pub fn firing_strengths(base: &RuleBase, degrees: &Fuzzified) -> Vec<(RuleId, f64)> {
    base.rules()
        .filter(|r| r.enabled)
        .map(|r| {
            let s = r.antecedents.iter().map(|c| degrees.degree(&c.var, &c.is).unwrap_or(0.0)).fold(1.0_f64, f64::min);
            (r.id, s)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub var: String,
    pub value: String,
    pub rule: RuleId,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecisionOutput {
    pub voice_message_id: Option<u32>,
    pub image_message_id: Option<u32>,
    pub relay_status: Option<bool>,
    pub reminder_enabled: Option<bool>,
    pub game_start: Option<bool>,
    /// Rules at or above the activation threshold, ascending by id.
    pub fired_rules: Vec<(RuleId, f64)>,
    /// Winning consequent per output variable, in variable-name order.
    pub selections: Vec<Selection>,
}

impl DecisionOutput {
    pub fn is_empty(&self) -> bool {
        self.selections.is_empty()
    }

    pub fn selection(&self, var: &str) -> Option<&Selection> {
        self.selections.iter().find(|s| s.var == var)
    }
}

pub fn infer_decision(base: &RuleBase, degrees: &Fuzzified, threshold: f64) -> Result<DecisionOutput> {
    select_outputs(base, &firing_strengths(base, degrees), threshold)
}

/// Output selection from precomputed firing strengths.
///
/// Rules below `threshold` are ignored. A firing rule is shadowed by a firing
/// rule whose antecedent set strictly contains its own. Each output variable
/// takes the consequent of its strongest remaining rule, ties going to the
/// lowest id. When the reminder gate resolves to "No", reminder and alert
/// rules lose their other outputs.
pub fn select_outputs(base: &RuleBase, strengths: &[(RuleId, f64)], threshold: f64) -> Result<DecisionOutput> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(FuzzyError::InvalidThreshold(threshold));
    }
    let mut active: Vec<(&Rule, f64)> = strengths
        .iter()
        .filter(|(_, s)| *s >= threshold)
        .filter_map(|&(id, s)| base.rule(id).filter(|r| r.enabled).map(|r| (r, s)))
        .collect();
    active.sort_by_key(|(r, _)| r.id);
    let fired_rules: Vec<(RuleId, f64)> = active.iter().map(|(r, s)| (r.id, *s)).collect();

    let effective: Vec<(&Rule, f64)> =
        active.iter().filter(|(r, _)| !active.iter().any(|(o, _)| o.more_specific_than(r))).copied().collect();

    let best_for = |var: &str, gated: bool| -> Option<Selection> {
        let mut best: Option<Selection> = None;
        for (rule, s) in &effective {
            if gated && rule.class.suppressible() {
                continue;
            }
            for c in rule.consequents.iter().filter(|c| c.var == var) {
                if best.as_ref().is_none_or(|b| *s > b.strength) {
                    best = Some(Selection { var: var.to_string(), value: c.is.clone(), rule: rule.id, strength: *s });
                }
            }
        }
        best
    };

    let gate = best_for(REMINDER_GATE, false);
    let gated = gate.as_ref().is_some_and(|g| !term_truth(base, g));

    let mut out = DecisionOutput { fired_rules, ..Default::default() };
    let mut outputs: Vec<&str> =
        base.variables().iter().filter(|v| v.role == Role::Output).map(|v| v.name.as_str()).collect();
    outputs.sort_unstable();
    for var in outputs {
        let sel = if var == REMINDER_GATE { gate.clone() } else { best_for(var, gated) };
        if let Some(sel) = sel {
            out.selections.push(sel);
        }
    }
    for sel in &out.selections {
        match sel.var.as_str() {
            "voice_message" => out.voice_message_id = sel.value.parse().ok(),
            "image_message" => out.image_message_id = sel.value.parse().ok(),
            "relay_status" => out.relay_status = Some(term_truth(base, sel)),
            REMINDER_GATE => out.reminder_enabled = Some(term_truth(base, sel)),
            "game" => out.game_start = Some(term_truth(base, sel)),
            _ => {}
        }
    }
    Ok(out)
}

fn term_truth(base: &RuleBase, sel: &Selection) -> bool {
    let mf = base.variable(&sel.var).and_then(|v| v.term(&sel.value)).map(|t| &t.mf);
    match mf {
        Some(MembershipFunction::CrispBool { value }) => *value,
        _ => matches!(sel.value.as_str(), "Yes" | "Start" | "On"),
    }
}
