use serde::{Deserialize, Serialize};

use crate::fuzzy::RuleBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Mode {
    Automated,
    SemiAutomated,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Automated => "automated",
            Mode::SemiAutomated => "semiAutomated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "automated" => Some(Mode::Automated),
            "semiAutomated" => Some(Mode::SemiAutomated),
            _ => None,
        }
    }
}

/// How a run chooses its mode: fixed, or driven by the game score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModePolicy {
    Auto,
    Semi,
    #[default]
    Adaptive,
}

impl ModePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            ModePolicy::Auto => "auto",
            ModePolicy::Semi => "semi",
            ModePolicy::Adaptive => "adaptive",
        }
    }

    pub fn initial_mode(self) -> Mode {
        match self {
            ModePolicy::Semi => Mode::SemiAutomated,
            _ => Mode::Automated,
        }
    }
}

impl std::str::FromStr for ModePolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" | "automated" => Ok(ModePolicy::Auto),
            "semi" | "semiAutomated" => Ok(ModePolicy::Semi),
            "adaptive" => Ok(ModePolicy::Adaptive),
            _ => Err(format!("unknown mode {s:?} (auto, semi, adaptive)")),
        }
    }
}

/// Memoryless target mode: a caregiver override wins; otherwise a "high"
/// score (membership >= 0.5 in the rule base's `game_score is high` term)
/// selects semi-automated operation. Without a `high` term the current mode
/// is kept.
pub fn evaluate_mode_switch(score100: u8, current: Mode, override_mode: Option<Mode>, base: &RuleBase) -> Mode {
    if let Some(m) = override_mode {
        return m;
    }
    let Some(high) = base.variable("game_score").and_then(|v| v.term("high")) else {
        return current;
    };
    if high.mf.evaluate(f64::from(score100)) >= 0.5 {
        Mode::SemiAutomated
    } else {
        Mode::Automated
    }
}

/// Hysteresis: the target must differ from the current mode on
/// `required` consecutive observations before a switch happens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSwitch {
    pub required: u32,
    streak: u32,
}

impl ModeSwitch {
    pub fn new(required: u32) -> Self {
        ModeSwitch { required: required.max(1), streak: 0 }
    }

    /// Returns the new mode when a switch is due.
    pub fn observe(&mut self, target: Mode, current: Mode) -> Option<Mode> {
        if target == current {
            self.streak = 0;
            return None;
        }
        self.streak += 1;
        if self.streak >= self.required {
            self.streak = 0;
            Some(target)
        } else {
            None
        }
    }

    pub fn reset(&mut self) {
        self.streak = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_thresholds() {
        let base = RuleBase::bundled_default();
        assert_eq!(evaluate_mode_switch(97, Mode::Automated, None, &base), Mode::SemiAutomated);
        assert_eq!(evaluate_mode_switch(55, Mode::SemiAutomated, None, &base), Mode::Automated);
        assert_eq!(evaluate_mode_switch(97, Mode::SemiAutomated, Some(Mode::Automated), &base), Mode::Automated);
    }

    #[test]
    fn hysteresis_needs_consecutive_observations() {
        let mut s = ModeSwitch::new(3);
        let (a, b) = (Mode::Automated, Mode::SemiAutomated);
        assert_eq!(s.observe(b, a), None);
        assert_eq!(s.observe(b, a), None);
        assert_eq!(s.observe(a, a), None); // broken streak
        assert_eq!(s.observe(b, a), None);
        assert_eq!(s.observe(b, a), None);
        assert_eq!(s.observe(b, a), Some(b));
    }

    #[test]
    fn policy_names() {
        assert_eq!("semi".parse::<ModePolicy>().unwrap(), ModePolicy::Semi);
        assert!("manual".parse::<ModePolicy>().is_err());
        assert_eq!(Mode::parse(Mode::SemiAutomated.as_str()), Some(Mode::SemiAutomated));
    }
}
