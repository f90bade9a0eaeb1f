use std::fmt::Display;

use serde::Serialize;
use serde_json::{Map, Value};

use quiverforge::formats::SCHEMA_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Unknown,
    Fail,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Unknown => 2,
        }
    }

    fn word(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Unknown => "unknown",
        }
    }
}

/// Schema and usage errors; exit code 64.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

pub struct Report {
    pub status: Status,
    text: Vec<String>,
    data: Map<String, Value>,
}

impl Report {
    pub fn new(status: Status) -> Self {
        Report { status, text: Vec::new(), data: Map::new() }
    }

    pub fn line(&mut self, s: impl Into<String>) -> &mut Self {
        self.text.push(s.into());
        self
    }

    pub fn put(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.data.insert(key.to_string(), serde_json::to_value(v).expect("report data serializes"));
        self
    }

    pub fn with(mut self, key: &str, v: impl Serialize) -> Self {
        self.put(key, v);
        self
    }

    pub fn text(mut self, s: impl Into<String>) -> Self {
        self.line(s);
        self
    }

    pub fn render(&self, command: &str, meta: &[(&str, Value)], json: bool) -> String {
        if json {
            let mut m = Map::new();
            m.insert("schema_version".into(), SCHEMA_VERSION.into());
            m.insert("command".into(), command.into());
            m.insert("status".into(), self.status.word().into());
            for (k, v) in meta {
                m.insert(k.to_string(), v.clone());
            }
            for (k, v) in &self.data {
                m.insert(k.clone(), v.clone());
            }
            serde_json::to_string_pretty(&Value::Object(m)).expect("report serializes")
        } else {
            let mut out = self.text.join("\n");
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("status: {}", self.status.word()));
            out
        }
    }
}
