//! Rule-application logs, emitted as text or as JSON lines.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub rule: String,
    pub before: String,
    pub after: String,
    pub justification: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn push(&mut self, rule: &str, before: impl Into<String>, after: impl Into<String>, justification: impl Into<String>) {
        self.steps.push(TraceStep {
            step: self.steps.len() + 1,
            rule: rule.to_string(),
            before: before.into(),
            after: after.into(),
            justification: justification.into(),
        });
    }

    /// Appends another trace, renumbering its steps.
    pub fn extend(&mut self, other: Trace) {
        for s in other.steps {
            self.push(&s.rule, s.before, s.after, s.justification);
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("trace step serializes"));
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&format!("{:>3}. [{}] {}\n       => {}\n", s.step, s.rule, s.before, s.after));
            if !s.justification.is_empty() {
                out.push_str(&format!("       ({})\n", s.justification));
            }
        }
        out
    }
}
