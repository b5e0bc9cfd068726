use serde::{Deserialize, Serialize};

use super::membership::MembershipFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DataType {
    Linguistic,
    Boolean,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Role {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub mf: MembershipFunction,
}

/// A named linguistic variable with its universe of discourse and ordered terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyVariable {
    pub name: String,
    #[serde(default)]
    pub unit: String,
    pub universe: [f64; 2],
    #[serde(rename = "type")]
    pub data_type: DataType,
    pub role: Role,
    #[serde(default)]
    pub terms: Vec<Term>,
}

/// Number of probe points used when checking term coverage of a continuous universe.
const COVERAGE_PROBES: usize = 2001;

impl FuzzyVariable {
    pub fn term(&self, label: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.label == label)
    }

    pub fn lower(&self) -> f64 {
        self.universe[0]
    }

    pub fn upper(&self) -> f64 {
        self.universe[1]
    }

    /// Clamps `x` into the universe; the flag reports whether clamping happened.
    pub fn clamp(&self, x: f64) -> (f64, bool) {
        if x < self.lower() {
            (self.lower(), true)
        } else if x > self.upper() {
            (self.upper(), true)
        } else if x.is_nan() {
            (self.lower(), true)
        } else {
            (x, false)
        }
    }

    /// Degree of every term at `x` (no clamping), in term order.
    pub fn degrees(&self, x: f64) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.terms.iter().map(move |t| (t.label.as_str(), t.mf.evaluate(x)))
    }

    /// Structural checks: sane universe, unique labels, valid shapes and term coverage.
    pub fn validate(&self) -> Result<(), String> {
        let [lo, hi] = self.universe;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(format!("universe [{lo}, {hi}] is not a proper interval"));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if self.terms[..i].iter().any(|o| o.label == t.label) {
                return Err(format!("duplicate term label `{}`", t.label));
            }
            t.mf.validate().map_err(|e| format!("term `{}`: {e}", t.label))?;
        }
        if self.role == Role::Input {
            if self.terms.is_empty() {
                return Err("input variable has no terms".into());
            }
            if let Some(x) = self.uncovered_point() {
                return Err(format!("no term covers x = {x}"));
            }
        }
        Ok(())
    }

    /// First probe point of the universe where every term is zero, if any.
    pub fn uncovered_point(&self) -> Option<f64> {
        let [lo, hi] = self.universe;
        let covered = |x: f64| self.terms.iter().any(|t| t.mf.evaluate(x) > 0.0);
        match self.data_type {
            DataType::Boolean => [0.0, 1.0].into_iter().find(|&x| !covered(x)),
            DataType::Integer => {
                let (start, end) = (lo.ceil() as i64, hi.floor() as i64);
                (start..=end).map(|k| k as f64).find(|&x| !covered(x))
            }
            DataType::Linguistic => (0..COVERAGE_PROBES)
                .map(|i| lo + (hi - lo) * i as f64 / (COVERAGE_PROBES - 1) as f64)
                .find(|&x| !covered(x)),
        }
    }
}
