use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::compare::{ComparisonReport, RunSummary};
use super::evaluate::EvalReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format {other:?} (json|csv)")),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

const SUMMARY_COLUMNS: [&str; 9] = [
    "label",
    "resolution",
    "precision",
    "recall",
    "f1",
    "map_50",
    "map_range",
    "inference_s",
    "ap_mode",
];

fn summary_row(s: &RunSummary, resolution: &str) -> Vec<String> {
    vec![
        s.label.clone(),
        resolution.to_string(),
        s.precision.to_string(),
        s.recall.to_string(),
        s.f1.to_string(),
        s.map_50.to_string(),
        s.map_range.to_string(),
        s.inference_s.map(|v| v.to_string()).unwrap_or_default(),
        s.ap_mode.to_string(),
    ]
}

fn csv_table(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// JSON is the full report with keys in declaration order; CSV is a single
/// summary row under a header.
pub fn emit_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => pretty(report),
        ReportFormat::Csv => {
            let s = RunSummary::from_report(report);
            csv_table(&[summary_row(&s, "")])
        }
    }
}

pub fn parse_report(text: &str) -> Result<EvalReport, serde_json::Error> {
    serde_json::from_str(text)
}

/// CSV has one LR and one SR row under the same header as [`emit_report`].
pub fn emit_comparison(c: &ComparisonReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => pretty(c),
        ReportFormat::Csv => {
            let mut lr = c.lr.clone();
            let mut sr = c.sr.clone();
            lr.label = c.label.clone();
            sr.label = c.label.clone();
            csv_table(&[summary_row(&lr, "LR"), summary_row(&sr, "SR")])
        }
    }
}
