//! Run reports: the command echo, parameters, one entry per check, and a
//! reproducing command line on every FAIL.

use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;
use stickelberger::checks::{Check, Status};

#[derive(Debug, Serialize)]
pub struct Entry {
    #[serde(flatten)]
    pub check: Check,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reproduce: Option<String>,
}

#[derive(Debug, Default, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub checks: Vec<Entry>,
    pub summary: Summary,
    /// Only with `--timing`, so that default reports are byte-stable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u128>,
}

/// Checks produced by one reproducible unit of work.
pub struct Batch {
    pub command: String,
    pub checks: Vec<Check>,
}

impl Batch {
    pub fn new(command: String, checks: Vec<Check>) -> Self {
        Batch { command, checks }
    }
}

impl RunReport {
    pub fn new(command: String, parameters: serde_json::Value, seed: u64, batches: Vec<Batch>) -> Self {
        let mut summary = Summary::default();
        let mut checks = Vec::new();
        for batch in batches {
            for check in batch.checks {
                match check.status {
                    Status::Pass => summary.pass += 1,
                    Status::Fail => summary.fail += 1,
                    Status::NotApplicable => summary.not_applicable += 1,
                }
                let reproduce = check.failed().then(|| batch.command.clone());
                checks.push(Entry { check, reproduce });
            }
        }
        RunReport { command, parameters, seed, checks, summary, elapsed_ms: None }
    }

    pub fn with_timing(mut self, elapsed: Option<Duration>) -> Self {
        self.elapsed_ms = elapsed.map(|d| d.as_millis());
        self
    }

    pub fn failed(&self) -> bool {
        self.summary.fail > 0
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for entry in &self.checks {
            let c = &entry.check;
            let _ = writeln!(out, "{} {}: {}", c.status, c.name, c.detail);
            if let Some(w) = &c.witness {
                let _ = writeln!(out, "  witness: {w}");
            }
            if let Some(r) = &entry.reproduce {
                let _ = writeln!(out, "  reproduce: {r}");
            }
        }
        let s = &self.summary;
        let _ = write!(out, "{} PASS, {} FAIL, {} N/A", s.pass, s.fail, s.not_applicable);
        if let Some(ms) = self.elapsed_ms {
            let _ = write!(out, " in {ms} ms");
        }
        out.push('\n');
        out
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}
