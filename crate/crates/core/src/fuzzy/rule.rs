use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use super::variable::{DataType, FuzzyVariable, Role};
use super::{FuzzyError, Result};

pub type RuleId = u32;

/// How a rule's message outputs are treated by the reminder gate and by the
/// semi-automated mode. Safety outputs are never suppressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RuleClass {
    #[default]
    Reminder,
    Alert,
    Safety,
    Control,
}

impl RuleClass {
    pub fn suppressible(self) -> bool {
        matches!(self, RuleClass::Reminder | RuleClass::Alert)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Origin {
    Builtin,
    #[default]
    Caregiver,
}

/// `variable is term`. Numeric terms (message IDs) may be written as JSON numbers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Clause {
    pub var: String,
    #[serde(deserialize_with = "term_label")]
    pub is: String,
}

impl Clause {
    pub fn new(var: impl Into<String>, is: impl Into<String>) -> Self {
        Clause { var: var.into(), is: is.into() }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} is \"{}\"", self.var, self.is)
    }
}

fn term_label<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Label {
        Text(String),
        Int(u64),
    }
    Ok(match Label::deserialize(d)? {
        Label::Text(s) => s,
        Label::Int(n) => n.to_string(),
    })
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: RuleId,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default)]
    pub class: RuleClass,
    /// Alert kind used for the `alert/{kind}` topic of alert and safety rules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alert: Option<String>,
    #[serde(rename = "if")]
    pub antecedents: Vec<Clause>,
    #[serde(rename = "then")]
    pub consequents: Vec<Clause>,
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub origin: Origin,
}

impl Rule {
    /// True when this rule's antecedent set strictly contains `other`'s.
    pub fn more_specific_than(&self, other: &Rule) -> bool {
        let mine: BTreeSet<&Clause> = self.antecedents.iter().collect();
        let theirs: BTreeSet<&Clause> = other.antecedents.iter().collect();
        mine.len() > theirs.len() && theirs.is_subset(&mine)
    }

    pub fn alert_kind(&self) -> &str {
        self.alert.as_deref().unwrap_or("general")
    }
}

/// Serialized form of a rule base: `{"variables": [...], "rules": [...]}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RuleDocument {
    #[serde(default)]
    pub variables: Vec<FuzzyVariable>,
    #[serde(default)]
    pub rules: Vec<Rule>,
}

impl RuleDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            FuzzyError::Parse { line: inner.line(), column: inner.column(), path, message: inner.to_string() }
        })
    }
}

/// Caregiver edit applied atomically to a rule base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "camelCase")]
pub enum RuleEdit {
    Add { rule: Rule },
    Remove { id: RuleId },
    Enable { id: RuleId },
    Disable { id: RuleId },
}

/// Validated variables plus rules keyed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase {
    variables: Vec<FuzzyVariable>,
    rules: BTreeMap<RuleId, Rule>,
}

const DEFAULT_RULES: &str = include_str!("../../assets/rules/default.json");

impl RuleBase {
    pub fn new(variables: Vec<FuzzyVariable>, rules: Vec<Rule>) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|o| o.name == v.name) {
                return Err(FuzzyError::InvalidVariable { name: v.name.clone(), message: "declared twice".into() });
            }
            v.validate().map_err(|message| FuzzyError::InvalidVariable { name: v.name.clone(), message })?;
        }
        let mut base = RuleBase { variables, rules: BTreeMap::new() };
        for rule in rules {
            if base.rules.contains_key(&rule.id) {
                return Err(FuzzyError::DuplicateRule(rule.id));
            }
            base.check_rule(&rule)?;
            base.rules.insert(rule.id, rule);
        }
        Ok(base)
    }

    pub fn from_document(doc: RuleDocument) -> Result<Self> {
        Self::new(doc.variables, doc.rules)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(RuleDocument::from_json(text)?)
    }

    /// The shipped rule base: the Table-style default decision model plus
    /// the deployment rules for danger zones and the daily movement check.
    pub fn bundled_default() -> Self {
        Self::from_json(DEFAULT_RULES).expect("bundled rule file is valid")
    }

    pub fn bundled_default_json() -> &'static str {
        DEFAULT_RULES
    }

    pub fn to_document(&self) -> RuleDocument {
        RuleDocument { variables: self.variables.clone(), rules: self.rules.values().cloned().collect() }
    }

    pub fn variables(&self) -> &[FuzzyVariable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&FuzzyVariable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules.values()
    }

    pub fn rule(&self, id: RuleId) -> Option<&Rule> {
        self.rules.get(&id)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Replaces variable definitions by name (membership-parameter config).
    pub fn with_variable_overrides(&self, overrides: Vec<FuzzyVariable>) -> Result<Self> {
        let mut variables = self.variables.clone();
        for o in overrides {
            match variables.iter_mut().find(|v| v.name == o.name) {
                Some(slot) => *slot = o,
                None => variables.push(o),
            }
        }
        Self::new(variables, self.rules.values().cloned().collect())
    }

    /// Returns the edited base; `self` is left untouched.
    pub fn apply_edit(&self, edit: &RuleEdit) -> Result<Self> {
        let mut next = self.clone();
        match edit {
            RuleEdit::Add { rule } => {
                if next.rules.contains_key(&rule.id) {
                    return Err(FuzzyError::DuplicateRule(rule.id));
                }
                next.check_rule(rule)?;
                next.rules.insert(rule.id, rule.clone());
            }
            RuleEdit::Remove { id } => {
                next.rules.remove(id).ok_or(FuzzyError::UnknownRule(*id))?;
            }
            RuleEdit::Enable { id } | RuleEdit::Disable { id } => {
                let rule = next.rules.get_mut(id).ok_or(FuzzyError::UnknownRule(*id))?;
                rule.enabled = matches!(edit, RuleEdit::Enable { .. });
            }
        }
        Ok(next)
    }

    fn check_rule(&self, rule: &Rule) -> Result<()> {
        let locus = |part: &str, i: usize| format!("rule {} `{}[{}]`", rule.id, part, i);
        if rule.antecedents.is_empty() {
            return Err(FuzzyError::Reference {
                locus: format!("rule {}", rule.id),
                message: "empty antecedent list".into(),
            });
        }
        if rule.consequents.is_empty() {
            return Err(FuzzyError::Reference {
                locus: format!("rule {}", rule.id),
                message: "empty consequent list".into(),
            });
        }
        for (i, c) in rule.antecedents.iter().enumerate() {
            let var = self.variable(&c.var).ok_or_else(|| FuzzyError::Reference {
                locus: locus("if", i),
                message: format!("unknown variable `{}`", c.var),
            })?;
            if var.role != Role::Input {
                return Err(FuzzyError::Reference {
                    locus: locus("if", i),
                    message: format!("`{}` is an output variable", c.var),
                });
            }
            if var.term(&c.is).is_none() {
                return Err(FuzzyError::Reference {
                    locus: locus("if", i),
                    message: format!("variable `{}` has no term `{}`", c.var, c.is),
                });
            }
        }
        for (i, c) in rule.consequents.iter().enumerate() {
            let var = self.variable(&c.var).ok_or_else(|| FuzzyError::Reference {
                locus: locus("then", i),
                message: format!("unknown variable `{}`", c.var),
            })?;
            if var.role != Role::Output {
                return Err(FuzzyError::Reference {
                    locus: locus("then", i),
                    message: format!("`{}` is an input variable", c.var),
                });
            }
            let known = var.term(&c.is).is_some()
                || (var.data_type == DataType::Integer
                    && c.is.parse::<u32>().map(|n| (var.lower()..=var.upper()).contains(&(n as f64))).unwrap_or(false));
            if !known {
                return Err(FuzzyError::Reference {
                    locus: locus("then", i),
                    message: format!("`{}` is not a term or message id of `{}`", c.is, c.var),
                });
            }
        }
        Ok(())
    }
}
