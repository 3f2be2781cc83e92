//! Check reports and the machine-readable run report.
//!
//! JSON output is schema-versioned and serialized with 17 significant digits
//! so that reports round-trip losslessly and are bitwise reproducible for a
//! fixed configuration (elapsed fields excluded).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{LckError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inapplicable,
    Withheld,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstSample {
    /// Complex coordinates as [re, im] pairs.
    pub point: Vec<[f64; 2]>,
    pub value: f64,
}

/// Outcome of one named verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    pub residual: f64,
    pub tolerance: f64,
    pub worst_sample: Option<WorstSample>,
    pub detail: Option<String>,
    pub elapsed_seconds: f64,
}

impl CheckReport {
    /// Build a report from a measured residual; `pass` must already reflect
    /// the check's own (possibly strict) criterion. A passing report never
    /// carries residual > tolerance.
    pub fn from_residual(
        name: &str,
        pass: bool,
        residual: f64,
        tolerance: f64,
        worst_sample: Option<WorstSample>,
    ) -> Self {
        debug_assert!(!pass || residual <= tolerance);
        Self {
            name: name.to_string(),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            residual,
            tolerance,
            worst_sample,
            detail: None,
            elapsed_seconds: 0.0,
        }
    }

    pub fn inapplicable(name: &str, detail: &str) -> Self {
        Self {
            name: name.to_string(),
            status: CheckStatus::Inapplicable,
            residual: 0.0,
            tolerance: 0.0,
            worst_sample: None,
            detail: Some(detail.to_string()),
            elapsed_seconds: 0.0,
        }
    }

    pub fn withheld(name: &str, detail: &str) -> Self {
        Self {
            name: name.to_string(),
            status: CheckStatus::Withheld,
            residual: 0.0,
            tolerance: 0.0,
            worst_sample: None,
            detail: Some(detail.to_string()),
            elapsed_seconds: 0.0,
        }
    }

    pub fn failed_with_error(name: &str, err: &LckError) -> Self {
        Self {
            name: name.to_string(),
            status: CheckStatus::Fail,
            residual: f64::MAX,
            tolerance: 0.0,
            worst_sample: None,
            detail: Some(err.to_string()),
            elapsed_seconds: 0.0,
        }
    }

    pub fn with_detail(mut self, detail: String) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

// ---------------------------------------------------------------------------
// Run report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionSummary {
    pub n: usize,
    pub eigenvalues: Vec<[f64; 2]>,
    pub spectral_radius: f64,
    pub diagonalizable: bool,
    pub eigenbasis_condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellSummary {
    pub kind: String,
    pub admissibility_mode: Option<String>,
    pub margin: Option<f64>,
    pub samples_checked: usize,
    /// Ellipsoid matrix as row-major [re, im] pairs, when applicable.
    pub quadratic_matrix: Option<Vec<[f64; 2]>>,
    pub lyapunov_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaResolution {
    pub requested: String,
    pub used: Option<f64>,
    pub lambda_star: Option<f64>,
    pub threshold_found: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaismanSummary {
    pub verdict: String,
    pub reasons: Vec<String>,
    pub commutation_residual: Option<f64>,
    pub unitarity_residual: Option<f64>,
    pub shell_preservation_residual: Option<f64>,
    pub c: Option<f64>,
    pub c_prime: Option<f64>,
    pub rescale_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub precondition_error: Option<String>,
    pub contraction: Option<ContractionSummary>,
    pub shell: Option<ShellSummary>,
    pub lambda: LambdaResolution,
    pub vaisman: Option<VaismanSummary>,
    pub checks: Vec<CheckReport>,
    pub overall: String,
    pub elapsed_seconds: f64,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.precondition_error.is_none()
            && self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    /// Copy with elapsed fields zeroed, for determinism comparisons.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        out.elapsed_seconds = 0.0;
        for check in &mut out.checks {
            check.elapsed_seconds = 0.0;
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Serialization: JSON with 17 significant digits
// ---------------------------------------------------------------------------

struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            // reports avoid non-finite values; keep the JSON valid regardless
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serialize any report value as JSON with 17 significant digits.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| LckError::InvalidInput(format!("JSON serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn run_report_from_json(bytes: &[u8]) -> Result<RunReport> {
    serde_json::from_slice(bytes)
        .map_err(|e| LckError::InvalidInput(format!("JSON parse failed: {e}")))
}

/// CSV view of a report: one row per check.
pub fn to_csv_bytes(report: &RunReport) -> Vec<u8> {
    let mut out = String::from("name,status,residual,tolerance,detail\n");
    for check in &report.checks {
        let status = match check.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Inapplicable => "inapplicable",
            CheckStatus::Withheld => "withheld",
        };
        let detail = check
            .detail
            .as_deref()
            .unwrap_or("")
            .replace(',', ";")
            .replace('\n', " ");
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{}\n",
            check.name, status, check.residual, check.tolerance, detail
        ));
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatter_uses_17_significant_digits() {
        #[derive(Serialize)]
        struct V {
            x: f64,
        }
        let bytes = to_json_bytes(&V {
            x: 0.7213475204444817,
        })
        .unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains("7.2134752044448169e-1"), "{text}");
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["x"].as_f64().unwrap(), 0.7213475204444817);
    }

    #[test]
    fn check_report_status_residual_invariant() {
        let r = CheckReport::from_residual("x", true, 1e-9, 1e-8, None);
        assert!(r.passed());
        assert!(r.residual <= r.tolerance);
    }
}
