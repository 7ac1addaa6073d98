//! Long-format report rows shared by every subcommand.
//!
//! CSV header is fixed to `run_id,layer,metric,epoch,value`; JSON is an array
//! of objects with the same keys. Rows are always emitted ordered by
//! `(run_id, epoch, layer)`, rows without an epoch first.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FormatError;

pub const CSV_HEADER: [&str; 5] = ["run_id", "layer", "metric", "epoch", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Saturation,
    ProbeAccuracy,
    Rf,
    Loss,
    Accuracy,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Saturation => "saturation",
            Metric::ProbeAccuracy => "probe_accuracy",
            Metric::Rf => "rf",
            Metric::Loss => "loss",
            Metric::Accuracy => "accuracy",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "saturation" => Metric::Saturation,
            "probe_accuracy" => Metric::ProbeAccuracy,
            "rf" => Metric::Rf,
            "loss" => Metric::Loss,
            "accuracy" => Metric::Accuracy,
            other => return Err(FormatError::InvalidRow(format!("unknown metric {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = FormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(FormatError::InvalidRow(format!("unknown report format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run_id: String,
    pub layer: String,
    pub metric: Metric,
    pub epoch: Option<u32>,
    pub value: f64,
}

impl ReportRow {
    pub fn new(run_id: impl Into<String>, layer: impl Into<String>, metric: Metric, epoch: Option<u32>, value: f64) -> Self {
        Self {
            run_id: run_id.into(),
            layer: layer.into(),
            metric,
            epoch,
            value,
        }
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        if !self.value.is_finite() {
            return Err(FormatError::InvalidRow(format!(
                "{}/{}/{}: value is not finite",
                self.run_id, self.layer, self.metric
            )));
        }
        let bounded = matches!(self.metric, Metric::Saturation | Metric::ProbeAccuracy | Metric::Accuracy);
        if bounded && !(0.0..=1.0).contains(&self.value) {
            return Err(FormatError::InvalidRow(format!(
                "{}/{}/{}: value {} outside [0, 1]",
                self.run_id, self.layer, self.metric, self.value
            )));
        }
        Ok(())
    }
}

/// Stable sort by `(run_id, epoch, layer)`.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        a.run_id
            .cmp(&b.run_id)
            .then(a.epoch.cmp(&b.epoch))
            .then(a.layer.cmp(&b.layer))
    });
}

pub fn emit_report(rows: &[ReportRow], format: ReportFormat) -> Result<Vec<u8>, FormatError> {
    for row in rows {
        row.validate()?;
    }
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
            w.write_record(CSV_HEADER).map_err(csv_err)?;
            for r in &rows {
                let epoch = r.epoch.map(|e| e.to_string()).unwrap_or_default();
                let value = r.value.to_string();
                w.write_record([r.run_id.as_str(), r.layer.as_str(), r.metric.as_str(), &epoch, &value])
                    .map_err(csv_err)?;
            }
            w.into_inner().map_err(|e| FormatError::InvalidRow(e.to_string()))
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(&rows)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn parse_report(bytes: &[u8], format: ReportFormat) -> Result<Vec<ReportRow>, FormatError> {
    let rows: Vec<ReportRow> = match format {
        ReportFormat::Json => serde_json::from_slice(bytes)?,
        ReportFormat::Csv => {
            let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
            let header = r.headers().map_err(csv_err)?.clone();
            if header.iter().ne(CSV_HEADER.iter().copied()) {
                return Err(FormatError::InvalidRow(format!("unexpected CSV header {header:?}")));
            }
            let mut rows = Vec::new();
            for rec in r.records() {
                let rec = rec.map_err(csv_err)?;
                let epoch = match &rec[3] {
                    "" => None,
                    e => Some(e.parse().map_err(|_| FormatError::InvalidRow(format!("bad epoch {e:?}")))?),
                };
                let value = rec[4]
                    .parse()
                    .map_err(|_| FormatError::InvalidRow(format!("bad value {:?}", &rec[4])))?;
                rows.push(ReportRow {
                    run_id: rec[0].to_string(),
                    layer: rec[1].to_string(),
                    metric: rec[2].parse()?,
                    epoch,
                    value,
                });
            }
            rows
        }
    };
    for row in &rows {
        row.validate()?;
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> FormatError {
    FormatError::InvalidRow(e.to_string())
}
