//! Tri-state verdicts with certificates.

use serde::Serialize;
use serde_json::{json, Value};

use crate::scalar::Scalar;
use crate::spaces::scalar_json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictState {
    Supports,
    Refutes,
    Indeterminate,
}

impl VerdictState {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictState::Supports => "Supports",
            VerdictState::Refutes => "Refutes",
            VerdictState::Indeterminate => "Indeterminate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Supports" => Some(VerdictState::Supports),
            "Refutes" => Some(VerdictState::Refutes),
            "Indeterminate" => Some(VerdictState::Indeterminate),
            _ => None,
        }
    }
}

/// One recorded quantity: a witness, a partial sum, a verified bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    pub value: Value,
}

impl Certificate {
    pub fn scalar(label: impl Into<String>, n: Option<u64>, x: &Scalar) -> Self {
        Certificate {
            label: label.into(),
            n,
            value: scalar_json(x),
        }
    }

    pub fn value(label: impl Into<String>, n: Option<u64>, value: Value) -> Self {
        Certificate {
            label: label.into(),
            n,
            value,
        }
    }

    /// Numeric value, whether stored as a JSON number or an exact decimal string.
    pub fn as_f64(&self) -> Option<f64> {
        match &self.value {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => Scalar::parse(s).ok().map(|x| x.to_f64()),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticVerdict {
    pub criterion: String,
    pub state: VerdictState,
    pub horizon: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_n: Option<u64>,
    pub certificates: Vec<Certificate>,
    pub notes: Vec<String>,
}

impl DiagnosticVerdict {
    pub fn new(criterion: &str, horizon: u64) -> Self {
        DiagnosticVerdict {
            criterion: criterion.to_string(),
            state: VerdictState::Indeterminate,
            horizon,
            witness_n: None,
            certificates: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_state(mut self, state: VerdictState) -> Self {
        self.state = state;
        self
    }

    pub fn cert(&mut self, c: Certificate) {
        self.certificates.push(c);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn find(&self, label: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.label == label)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or_else(|_| json!({}))
    }
}
