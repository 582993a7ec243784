//! Verification reports and their JSON / text renderings.

use serde::{Deserialize, Serialize};

use crate::construction::ReductionParams;
use crate::error::{Error, Result};
use crate::rip::{GapDecision, MinimizerReport, RipReport};

/// One verified claim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The statement this check exercises; must be non-empty.
    pub claim: String,
    pub claimed: String,
    pub measured: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        claim: impl Into<String>,
        claimed: impl Into<String>,
        measured: impl Into<String>,
        passed: bool,
    ) -> Self {
        Check {
            name: name.into(),
            claim: claim.into(),
            claimed: claimed.into(),
            measured: measured.into(),
            passed,
            tolerance: None,
            note: None,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn text_line(&self) -> String {
        format!(
            "[{}] {}: claimed {}, measured {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.claimed,
            self.measured
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub m: usize,
    pub six_bounded: bool,
    /// `m/n` as an exact fraction.
    pub ratio: String,
    /// Size of the CNF the instance was reduced from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub n: usize,
    pub m: usize,
    pub is_3sat5: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_val: Option<String>,
    /// Restricted spectrum of `X̃/c₁` at sparsity `2n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rip: Option<RipReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimizer: Option<MinimizerReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapDecision>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub instance: InstanceSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ReductionParams>,
    pub checks: Vec<Check>,
    pub artifacts: Artifacts,
}

impl VerificationReport {
    /// Adds a check, refusing ones that do not say what they verify.
    pub fn push(&mut self, check: Check) -> Result<()> {
        if check.claim.trim().is_empty() {
            return Err(Error::input(format!(
                "check '{}' has no claim label",
                check.name
            )));
        }
        self.checks.push(check);
        Ok(())
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

/// Renders a report. Field order is fixed, so equal reports render to
/// identical bytes.
pub fn emit(report: &VerificationReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Json => serde_json::to_string_pretty(report)? + "\n",
        ReportFormat::Text => report.checks.iter().map(|c| c.text_line() + "\n").collect(),
    })
}

pub fn parse_json(text: &str) -> Result<VerificationReport> {
    Ok(serde_json::from_str(text)?)
}
