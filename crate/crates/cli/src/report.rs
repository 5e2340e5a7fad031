//! Benchmark reports and the east-vs-baseline ratio table.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// One protocol invocation. `party` is `server`, `client`, or `both` for an
/// in-process run, where byte counts cover both directions and `rounds` is
/// the larger of the two parties' counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub protocol: String,
    pub variant: String,
    pub party: String,
    pub shape: Vec<usize>,
    pub ell: u32,
    pub frac: u32,
    pub seed: u64,
    pub online_bytes: u64,
    pub offline_bytes: u64,
    pub rounds: u64,
    pub wall_time_s: f64,
    pub max_abs_error: f64,
    pub max_row_sum_error: Option<f64>,
}

impl BenchReport {
    pub fn total_bytes(&self) -> u64 {
        self.online_bytes + self.offline_bytes
    }

    pub fn shape_label(&self) -> String {
        self.shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
    }

    /// Same report with the wall-time field cleared, for reproducibility checks.
    pub fn without_timing(&self) -> BenchReport {
        BenchReport { wall_time_s: 0.0, ..self.clone() }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    protocol: String,
    variant: String,
    party: String,
    shape: String,
    ell: u32,
    frac: u32,
    seed: u64,
    online_bytes: u64,
    offline_bytes: u64,
    rounds: u64,
    wall_time_s: f64,
    max_abs_error: f64,
    max_row_sum_error: Option<f64>,
}

impl From<&BenchReport> for CsvRow {
    fn from(r: &BenchReport) -> CsvRow {
        CsvRow {
            protocol: r.protocol.clone(),
            variant: r.variant.clone(),
            party: r.party.clone(),
            shape: r.shape_label(),
            ell: r.ell,
            frac: r.frac,
            seed: r.seed,
            online_bytes: r.online_bytes,
            offline_bytes: r.offline_bytes,
            rounds: r.rounds,
            wall_time_s: r.wall_time_s,
            max_abs_error: r.max_abs_error,
            max_row_sum_error: r.max_row_sum_error,
        }
    }
}

impl TryFrom<CsvRow> for BenchReport {
    type Error = anyhow::Error;

    fn try_from(r: CsvRow) -> Result<BenchReport> {
        let shape = r
            .shape
            .split('x')
            .map(|d| d.parse::<usize>().with_context(|| format!("bad shape {:?}", r.shape)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BenchReport {
            protocol: r.protocol,
            variant: r.variant,
            party: r.party,
            shape,
            ell: r.ell,
            frac: r.frac,
            seed: r.seed,
            online_bytes: r.online_bytes,
            offline_bytes: r.offline_bytes,
            rounds: r.rounds,
            wall_time_s: r.wall_time_s,
            max_abs_error: r.max_abs_error,
            max_row_sum_error: r.max_row_sum_error,
        })
    }
}

pub fn to_json(reports: &[BenchReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

pub fn from_json(text: &str) -> Result<Vec<BenchReport>> {
    Ok(serde_json::from_str(text)?)
}

/// CSV with a header and one row per invocation.
pub fn to_csv(reports: &[BenchReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(CsvRow::from(r))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn from_csv(text: &str) -> Result<Vec<BenchReport>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    rd.deserialize::<CsvRow>().map(|r| BenchReport::try_from(r?)).collect()
}

pub fn render(reports: &[BenchReport], format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(to_json(reports)),
        Format::Csv => to_csv(reports),
    }
}

pub fn write_reports(path: &Path, reports: &[BenchReport], format: Format) -> Result<()> {
    std::fs::write(path, render(reports, format)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_reports(path: &Path) -> Result<Vec<BenchReport>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match Format::from_path(path) {
        Format::Json => from_json(&text),
        Format::Csv => from_csv(&text),
    }
}

/// East divided by baseline, per matching (protocol, shape) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub protocol: String,
    pub shape: String,
    pub offline_ratio: f64,
    pub online_ratio: f64,
    pub total_ratio: f64,
    pub rounds_ratio: f64,
    pub time_ratio: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 { 1.0 } else { f64::INFINITY }
    } else {
        a / b
    }
}

pub fn ratio_table(east: &[BenchReport], baseline: &[BenchReport]) -> Result<Vec<RatioRow>> {
    let mut rows = Vec::new();
    for e in east {
        let Some(b) = baseline.iter().find(|b| b.protocol == e.protocol && b.shape == e.shape) else {
            bail!("no baseline report for {} {}", e.protocol, e.shape_label());
        };
        rows.push(RatioRow {
            protocol: e.protocol.clone(),
            shape: e.shape_label(),
            offline_ratio: ratio(e.offline_bytes as f64, b.offline_bytes as f64),
            online_ratio: ratio(e.online_bytes as f64, b.online_bytes as f64),
            total_ratio: ratio(e.total_bytes() as f64, b.total_bytes() as f64),
            rounds_ratio: ratio(e.rounds as f64, b.rounds as f64),
            time_ratio: ratio(e.wall_time_s, b.wall_time_s),
        });
    }
    if rows.is_empty() {
        bail!("no east reports to compare");
    }
    Ok(rows)
}

pub fn ratio_text(rows: &[RatioRow]) -> String {
    let mut out = format!(
        "{:<12} {:<10} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
        "protocol", "shape", "offline", "online", "total", "rounds", "time"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:<10} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}\n",
            r.protocol, r.shape, r.offline_ratio, r.online_ratio, r.total_ratio, r.rounds_ratio, r.time_ratio
        ));
    }
    out
}
