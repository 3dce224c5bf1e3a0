//! Verdicts and witnesses shared by every check.
//!
//! A [`CheckReport`] is the sampled stand-in for a "for all x, y" claim: it
//! carries a verdict, the first offending witness when the claim fails, and an
//! ordered list of details. Field order is insertion order so rendered
//! reports are byte-stable.

use std::fmt;

use serde::ser::{Serialize, SerializeMap, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The premise of a conditional hypothesis did not hold along the witness.
    Vacuous,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    List(Vec<f64>),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Num(v) => Some(v),
            Value::Int(v) => Some(v as f64),
            _ => None,
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Int(v as i64)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<Vec<f64>> for Value {
    fn from(v: Vec<f64>) -> Self {
        Value::List(v)
    }
}

/// Ordered key/value list, serialized as a table in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fields(pub Vec<(String, Value)>);

impl Fields {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.push(key, value);
        self
    }

    /// Inserts or replaces `key`, keeping the original position on replace.
    pub fn push(&mut self, key: &str, value: impl Into<Value>) {
        let value = value.into();
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.0.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn num(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(Value::as_f64)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Serialize for Fields {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Fields>,
    #[serde(skip_serializing_if = "Fields::is_empty")]
    pub details: Fields,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, verdict: Verdict) -> Self {
        CheckReport {
            check: check.into(),
            verdict,
            witness: None,
            details: Fields::new(),
        }
    }

    pub fn pass(check: impl Into<String>) -> Self {
        Self::new(check, Verdict::Pass)
    }

    pub fn fail(check: impl Into<String>, witness: Fields) -> Self {
        CheckReport {
            witness: Some(witness),
            ..Self::new(check, Verdict::Fail)
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.push(key, value);
        self
    }

    pub fn is_pass(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Numeric value from the witness, falling back to the details.
    pub fn value(&self, key: &str) -> Option<f64> {
        self.witness
            .as_ref()
            .and_then(|w| w.num(key))
            .or_else(|| self.details.num(key))
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.check, self.verdict)?;
        if let Some(w) = &self.witness {
            write!(f, " [witness")?;
            for (k, v) in &w.0 {
                write!(f, " {k}={}", render_value(v))?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::Num(x) => format!("{x}"),
        Value::Int(x) => format!("{x}"),
        Value::Bool(b) => format!("{b}"),
        Value::Text(s) => s.clone(),
        Value::List(xs) => format!("{xs:?}"),
    }
}
