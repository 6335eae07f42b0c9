//! The report document, written as JSON and as plain text.

use std::fmt::Write as _;
use std::path::Path;

use aqft_core::functor::CheckRecord;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Suite};
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub config: RunConfig,
    pub net: String,
    pub tolerance: f64,
    pub records: Vec<RecordEntry>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordEntry {
    pub suite: Suite,
    pub name: String,
    /// The statement being checked.
    pub property: String,
    pub status: Status,
    /// `None` when the residual is not finite.
    pub residual: Option<f64>,
    pub checked: usize,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

impl RecordEntry {
    pub fn from_check(suite: Suite, r: CheckRecord) -> Self {
        Self {
            suite,
            name: r.name,
            property: r.property,
            status: if r.passed { Status::Pass } else { Status::Fail },
            residual: r.residual.is_finite().then_some(r.residual),
            checked: r.checked,
            witness: r.witness,
        }
    }

    /// A suite that could not run at all.
    pub fn aborted(suite: Suite, err: &impl std::fmt::Display) -> Self {
        Self {
            suite,
            name: format!("{}.run", suite.name()),
            property: "the suite runs to completion".into(),
            status: Status::Fail,
            residual: None,
            checked: 0,
            witness: Some(err.to_string()),
        }
    }
}

impl Summary {
    pub fn of(records: &[RecordEntry]) -> Self {
        let passed = records.iter().filter(|r| r.status == Status::Pass).count();
        Self { total: records.len(), passed, failed: records.len() - passed }
    }
}

impl ReportDocument {
    pub fn new(config: RunConfig, net: String, records: Vec<RecordEntry>) -> Self {
        let tolerance = config.tolerance();
        let summary = Summary::of(&records);
        Self {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo { name: "aqft".into(), version: env!("CARGO_PKG_VERSION").into() },
            config,
            net,
            tolerance,
            records,
            summary,
        }
    }

    /// Schema version and summary counts agree with the records.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Invalid(format!("unsupported schema version {}", self.schema_version)));
        }
        if self.summary != Summary::of(&self.records) {
            return Err(CliError::Invalid("summary counts do not match the records".into()));
        }
        Ok(())
    }

    /// 0 when every record passes, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        u8::from(self.records.iter().any(|r| r.status == Status::Fail))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(CliError::Parse)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} report for {}", self.tool.name, self.tool.version, self.net);
        let _ = writeln!(out, "tolerance {:.1e}", self.tolerance);
        for r in &self.records {
            let status = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
            };
            let residual = r.residual.map_or("n/a".to_string(), |x| format!("{x:.3e}"));
            let _ = writeln!(out, "{status}  {:<40} residual {residual:<10} checked {:<6} {}", r.name, r.checked, r.property);
            if r.status == Status::Fail {
                if let Some(w) = &r.witness {
                    let _ = writeln!(out, "      witness: {w}");
                }
            }
        }
        let s = self.summary;
        let _ = writeln!(out, "{} checks, {} passed, {} failed", s.total, s.passed, s.failed);
        out
    }

    /// Writes the JSON report to `path` and the text report beside it.
    pub fn write(&self, path: &Path) -> Result<()> {
        let io = |p: &Path, e| CliError::Io(p.display().to_string(), e);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
        std::fs::write(path, self.to_json()).map_err(|e| io(path, e))?;
        let txt = path.with_extension("txt");
        std::fs::write(&txt, self.to_text()).map_err(|e| io(&txt, e))?;
        Ok(())
    }
}
