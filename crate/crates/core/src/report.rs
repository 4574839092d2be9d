//! Long-format reports: one estimate per row.
//!
//! CSV columns: `check,model,N,beta,gamma,h,n,functional,estimate,std_error,contract,pass`.
//! Two comment lines precede the header: `# config_hash: <sha256>` and
//! `# generated: <RFC 3339 timestamp>`. The timestamp is the only part that
//! changes between runs of the same config.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 12] =
    ["check", "model", "N", "beta", "gamma", "h", "n", "functional", "estimate", "std_error", "contract", "pass"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    /// No declared contract.
    #[serde(rename = "NA")]
    NotApplicable,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "NA",
        })
    }
}

/// One CSV row. `N` is empty on rows that summarize a whole `N` sequence; `n`
/// (replica count) is empty where it does not apply. `functional` holds the
/// overlap functional, or a quantity label for checks without one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub check: String,
    pub model: String,
    #[serde(rename = "N")]
    pub size: Option<usize>,
    pub beta: f64,
    pub gamma: f64,
    pub h: f64,
    pub n: Option<usize>,
    pub functional: String,
    pub estimate: f64,
    pub std_error: f64,
    pub contract: String,
    pub pass: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub config_hash: String,
    /// Hash of the config with `N` lists removed.
    pub comparable_hash: String,
    pub name: Option<String>,
    pub seed: u64,
    pub version: String,
    pub generated: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
    /// Full result record behind each row, same order.
    pub details: Vec<serde_json::Value>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    /// Rows with a contract that did not hold.
    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.pass == Verdict::Fail)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# config_hash: {}", self.metadata.config_hash)?;
        writeln!(out, "# generated: {}", self.metadata.generated)?;
        write_rows(&mut out, &self.rows)
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// Writes `report.csv` and `report.json` into `dir`, creating it if needed.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(dir.join("report.csv"))?))?;
        let mut json = std::io::BufWriter::new(std::fs::File::create(dir.join("report.json"))?);
        self.write_json(&mut json)?;
        writeln!(json)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?)
    }
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Header comments and rows of a report CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedCsv {
    pub comments: BTreeMap<String, String>,
    pub rows: Vec<ReportRow>,
}

pub fn read_report_csv<R: BufRead>(input: R) -> Result<ParsedCsv> {
    let mut comments = BTreeMap::new();
    let mut body = String::new();
    for line in input.lines() {
        let line = line?;
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.split_once(':') {
                comments.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let rows = reader.deserialize().collect::<std::result::Result<Vec<ReportRow>, _>>()?;
    Ok(ParsedCsv { comments, rows })
}

/// Drops the `# generated:` line, the only part of a report CSV that varies between identical runs.
pub fn strip_timestamp(csv: &str) -> String {
    csv.lines().filter(|l| !l.starts_with("# generated:")).map(|l| format!("{l}\n")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub size: usize,
    pub quantity: String,
    pub estimate: f64,
    pub std_error: f64,
}

/// Long-format `(N, quantity, estimate, std_error)` table, grouped by quantity and sorted by `N`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

fn fmt_param(x: f64) -> String {
    format!("{x}")
}

/// Everything that identifies a row except `N`.
pub fn quantity_label(r: &ReportRow) -> String {
    let mut label = format!(
        "{}:{}:beta={}:gamma={}:h={}",
        r.check,
        r.model,
        fmt_param(r.beta),
        fmt_param(r.gamma),
        fmt_param(r.h)
    );
    if let Some(n) = r.n {
        label.push_str(&format!(":n={n}"));
    }
    if !r.functional.is_empty() {
        label.push_str(&format!(":{}", r.functional));
    }
    label
}

impl ConvergenceTable {
    /// Merges reports of one config run at different sizes. Rows without `N` are skipped.
    pub fn from_reports(reports: &[ExperimentReport]) -> Result<Self> {
        let first = reports.first().ok_or_else(|| Error::InvalidArgument("no reports to merge".into()))?;
        let key = &first.metadata.comparable_hash;
        if let Some(other) = reports.iter().find(|r| &r.metadata.comparable_hash != key) {
            return Err(Error::InvalidArgument(format!(
                "mixed configs: {} vs {}",
                key, other.metadata.comparable_hash
            )));
        }
        let mut cells: BTreeMap<(String, usize), ConvergenceRow> = BTreeMap::new();
        for report in reports {
            for r in &report.rows {
                let Some(size) = r.size else { continue };
                let quantity = quantity_label(r);
                let row = ConvergenceRow { size, quantity: quantity.clone(), estimate: r.estimate, std_error: r.std_error };
                if let Some(prev) = cells.insert((quantity.clone(), size), row) {
                    if prev.estimate != r.estimate || prev.std_error != r.std_error {
                        return Err(Error::InvalidArgument(format!("conflicting values for {quantity} at N = {size}")));
                    }
                }
            }
        }
        Ok(Self { rows: cells.into_values().collect() })
    }

    pub fn quantities(&self) -> Vec<&str> {
        let mut q: Vec<&str> = self.rows.iter().map(|r| r.quantity.as_str()).collect();
        q.dedup();
        q
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(["N", "quantity", "estimate", "std_error"])?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let rows = reader.deserialize().collect::<std::result::Result<Vec<ConvergenceRow>, _>>()?;
        Ok(Self { rows })
    }
}
