//! Command reports: one verdict per check plus the witness files written.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// No violation found, but a bound cut the search short.
    Partial,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Partial => "partial",
        }
    }

    pub fn from_holds(holds: bool, partial: bool) -> Verdict {
        match (holds, partial) {
            (false, _) => Verdict::Fail,
            (true, true) => Verdict::Partial,
            (true, false) => Verdict::Pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckLine {
    pub name: String,
    pub verdict: Verdict,
    /// Extra `key: value` details, in output order.
    pub fields: Vec<(String, String)>,
}

impl CheckLine {
    pub fn new(name: &str, verdict: Verdict) -> CheckLine {
        CheckLine {
            name: name.to_string(),
            verdict,
            fields: Vec::new(),
        }
    }

    pub fn field(mut self, key: &str, value: impl ToString) -> CheckLine {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub command: String,
    /// Settings echoed back, such as bounds and seed.
    pub settings: Vec<(String, String)>,
    pub checks: Vec<CheckLine>,
    pub witnesses: Vec<PathBuf>,
    pub elapsed: Duration,
}

impl Report {
    pub fn verdict(&self) -> Verdict {
        let vs = self.checks.iter().map(|c| c.verdict);
        if vs.clone().any(|v| v == Verdict::Fail) {
            Verdict::Fail
        } else if vs.clone().any(|v| v == Verdict::Partial) {
            Verdict::Partial
        } else {
            Verdict::Pass
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict() {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Partial => 4,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckLine> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: &str| writeln!(s, "{k}: {v}").expect("writing to a String");
        line("command", &self.command);
        for (k, v) in &self.settings {
            line(k, v);
        }
        for c in &self.checks {
            line(&c.name, c.verdict.as_str());
            for (k, v) in &c.fields {
                line(&format!("{}.{k}", c.name), v);
            }
        }
        for w in &self.witnesses {
            line("witness", &w.display().to_string());
        }
        line("verdict", self.verdict().as_str());
        line("time-ms", &self.elapsed.as_millis().to_string());
        s
    }

    /// One JSON object per check, then a summary object.
    pub fn render_json_lines(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let mut fields = Map::new();
            for (k, v) in &c.fields {
                fields.insert(k.clone(), Value::String(v.clone()));
            }
            let obj = json!({"check": c.name, "verdict": c.verdict.as_str(), "fields": fields});
            writeln!(s, "{obj}").expect("writing to a String");
        }
        let settings: Map<String, Value> = self
            .settings
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let summary = json!({
            "command": self.command,
            "settings": settings,
            "verdict": self.verdict().as_str(),
            "witnesses": self.witnesses.iter().map(|w| w.display().to_string()).collect::<Vec<_>>(),
            "time_ms": self.elapsed.as_millis() as u64,
        });
        writeln!(s, "{summary}").expect("writing to a String");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(vs: &[Verdict]) -> Report {
        Report {
            command: "test".into(),
            checks: vs.iter().map(|&v| CheckLine::new("c", v)).collect(),
            ..Report::default()
        }
    }

    #[test]
    fn fail_dominates_partial() {
        assert_eq!(report(&[Verdict::Pass, Verdict::Partial, Verdict::Fail]).exit_code(), 1);
        assert_eq!(report(&[Verdict::Pass, Verdict::Partial]).exit_code(), 4);
        assert_eq!(report(&[]).exit_code(), 0);
    }

    #[test]
    fn json_lines_parse() {
        let mut r = report(&[Verdict::Fail]);
        r.checks[0] = r.checks[0].clone().field("race", "1 write x 1");
        let text = r.render_json_lines();
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0]["fields"]["race"], "1 write x 1");
        assert_eq!(lines[1]["verdict"], "fail");
    }
}
