//! CSV and JSON reports with a fixed field order.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::detection::DetectionEstimate;
use super::efficiency::{EfficiencyEntry, ProtocolId};
use crate::error::{usage, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(usage(format!("unknown report format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub attack: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub trials: usize,
    pub per_decoy_rate: f64,
    pub abort_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl From<&DetectionEstimate> for DetectionRow {
    fn from(e: &DetectionEstimate) -> Self {
        Self {
            attack: e.attack.clone(),
            n: e.n,
            l: e.l,
            trials: e.trials,
            per_decoy_rate: e.per_decoy_rate,
            abort_rate: e.session_abort_rate,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub protocol: ProtocolId,
    pub n: usize,
    pub eta_num: u128,
    pub eta_den: u128,
}

impl From<&EfficiencyEntry> for EfficiencyRow {
    fn from(e: &EfficiencyEntry) -> Self {
        Self { protocol: e.protocol, n: e.n, eta_num: *e.eta.numer(), eta_den: *e.eta.denom() }
    }
}

pub const DETECTION_HEADER: [&str; 8] = ["attack", "n", "L", "trials", "per_decoy_rate", "abort_rate", "ci_low", "ci_high"];
pub const EFFICIENCY_HEADER: [&str; 4] = ["protocol", "n", "eta_num", "eta_den"];

fn write_rows<T: Serialize, W: Write>(rows: &[T], header: &[&str], format: ReportFormat, mut out: W) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            writer.write_record(header)?;
            for row in rows {
                writer.serialize(row)?;
            }
            writer.flush()?;
        }
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
    }
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(format: ReportFormat, input: R) -> Result<Vec<T>> {
    match format {
        ReportFormat::Csv => csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(Error::from)).collect(),
        ReportFormat::Json => Ok(serde_json::from_reader(input)?),
    }
}

pub fn write_detection_report<W: Write>(estimates: &[DetectionEstimate], format: ReportFormat, out: W) -> Result<()> {
    let rows: Vec<DetectionRow> = estimates.iter().map(DetectionRow::from).collect();
    write_rows(&rows, &DETECTION_HEADER, format, out)
}

pub fn read_detection_report<R: Read>(format: ReportFormat, input: R) -> Result<Vec<DetectionRow>> {
    read_rows(format, input)
}

pub fn write_efficiency_report<W: Write>(entries: &[EfficiencyEntry], format: ReportFormat, out: W) -> Result<()> {
    let rows: Vec<EfficiencyRow> = entries.iter().map(EfficiencyRow::from).collect();
    write_rows(&rows, &EFFICIENCY_HEADER, format, out)
}

pub fn read_efficiency_report<R: Read>(format: ReportFormat, input: R) -> Result<Vec<EfficiencyRow>> {
    read_rows(format, input)
}
