use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{CheckRecord, VerificationReport};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    /// Guesses the format from a file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => ReportFormat::Csv,
            Some("md") | Some("markdown") => ReportFormat::Markdown,
            _ => ReportFormat::Json,
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" | "markdown-table" => Ok(ReportFormat::Markdown),
            _ => Err(Error::InvalidParam(format!("unknown report format {s:?}"))),
        }
    }
}

pub const CSV_HEADER: [&str; 8] = ["suite", "env_id", "check_id", "lhs", "rhs", "abs_diff", "tol", "pass"];

fn fields(r: &CheckRecord) -> [String; 8] {
    [
        r.suite.clone(),
        r.env_id.clone(),
        r.check_id.clone(),
        r.lhs.clone(),
        r.rhs.clone(),
        format!("{:e}", r.abs_diff),
        format!("{:e}", r.tol),
        r.pass.to_string(),
    ]
}

/// Serializes a report; output depends only on the report's contents.
pub fn render_report(report: &VerificationReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in &report.records {
                w.write_record(fields(r)).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(
                out,
                "**{} passed, {} failed, {} skipped**\n",
                report.passed, report.failed, report.skipped
            );
            let _ = writeln!(out, "| {} |", CSV_HEADER.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(CSV_HEADER.len()));
            for r in &report.records {
                let cells: Vec<String> = fields(r).iter().map(|c| c.replace('|', "\\|")).collect();
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
            if !report.notes.is_empty() {
                out.push('\n');
                for n in &report.notes {
                    let _ = writeln!(out, "- {n}");
                }
            }
            Ok(out)
        }
    }
}

/// Writes a rendered report to `path`.
pub fn emit_report(report: &VerificationReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(report, format)?;
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_json_report(text: &str) -> Result<VerificationReport> {
    Ok(serde_json::from_str(text)?)
}

/// Records of a CSV report, in file order.
pub fn parse_csv_records(text: &str) -> Result<Vec<CheckRecord>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|_| Error::Parse(format!("bad number {:?}", &row[i])))
        };
        let pass = match &row[7] {
            "pass" => super::Status::Pass,
            "fail" => super::Status::Fail,
            "skip" => super::Status::Skip,
            other => return Err(Error::Parse(format!("bad status {other:?}"))),
        };
        out.push(CheckRecord {
            suite: row[0].to_string(),
            env_id: row[1].to_string(),
            check_id: row[2].to_string(),
            lhs: row[3].to_string(),
            rhs: row[4].to_string(),
            abs_diff: num(5)?,
            tol: num(6)?,
            pass,
        });
    }
    Ok(out)
}
