//! CSV / JSON persistence with fixed column order.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::campaign::{
    CurvePoint, LambdaSummary, PeriodResult, SeedRecord, SweepPoint, VariantSummary,
};
use crate::error::{Error, Result};
use crate::oracle::{CloudPoint, FrontierPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Validation(format!("unknown format '{other}'"))),
        }
    }
}

/// A flat CSV row with a documented header.
pub trait CsvRow: Serialize {
    const COLUMNS: &'static [&'static str];
}

/// A result type that can be flattened into one CSV row.
pub trait Record: Serialize {
    type Row: CsvRow;
    fn to_row(&self) -> Self::Row;
}

fn join<T: ToString>(values: &[T], sep: &str) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

macro_rules! flat_record {
    ($ty:ty, [$($col:literal),* $(,)?]) => {
        impl CsvRow for $ty {
            const COLUMNS: &'static [&'static str] = &[$($col),*];
        }
        impl Record for $ty {
            type Row = $ty;
            fn to_row(&self) -> $ty {
                self.clone()
            }
        }
    };
}

flat_record!(SweepPoint, ["beta", "gamma", "expectation"]);
flat_record!(
    CurvePoint,
    ["algorithm", "p", "domain", "cost", "cumulative"]
);
flat_record!(
    VariantSummary,
    [
        "algorithm",
        "p",
        "mean_expectation",
        "best_expectation",
        "baseline_mean",
        "feasible_probability",
    ]
);
flat_record!(
    LambdaSummary,
    [
        "lambda",
        "algorithm",
        "p",
        "total_trades",
        "total_adjusted_return",
        "mean_risk",
        "infeasible_periods",
        "flagged_periods",
    ]
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub algorithm: String,
    pub p: usize,
    pub start: usize,
    pub expectation: f64,
    pub evaluations: usize,
    pub feasible_probability: f64,
    pub angles: String,
}

impl CsvRow for SeedRow {
    const COLUMNS: &'static [&'static str] = &[
        "algorithm",
        "p",
        "start",
        "expectation",
        "evaluations",
        "feasible_probability",
        "angles",
    ];
}

impl Record for SeedRecord {
    type Row = SeedRow;
    fn to_row(&self) -> SeedRow {
        SeedRow {
            algorithm: self.algorithm.as_str().to_string(),
            p: self.p,
            start: self.start,
            expectation: self.expectation,
            evaluations: self.evaluations,
            feasible_probability: self.feasible_probability,
            angles: join(&self.angles, ";"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub lambda: f64,
    pub z: String,
    pub expected_return: f64,
    pub risk: f64,
}

impl CsvRow for FrontierRow {
    const COLUMNS: &'static [&'static str] = &["lambda", "z", "expected_return", "risk"];
}

impl Record for FrontierPoint {
    type Row = FrontierRow;
    fn to_row(&self) -> FrontierRow {
        FrontierRow {
            lambda: self.lambda,
            z: self.z.to_string(),
            expected_return: self.expected_return,
            risk: self.risk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudRow {
    pub z: String,
    pub expected_return: f64,
    pub risk: f64,
}

impl CsvRow for CloudRow {
    const COLUMNS: &'static [&'static str] = &["z", "expected_return", "risk"];
}

impl Record for CloudPoint {
    type Row = CloudRow;
    fn to_row(&self) -> CloudRow {
        CloudRow {
            z: self.z.to_string(),
            expected_return: self.expected_return,
            risk: self.risk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRow {
    pub lambda: f64,
    pub algorithm: String,
    pub p: usize,
    pub period: usize,
    pub label: String,
    pub penalty: f64,
    pub previous: String,
    pub z: String,
    pub selected_bits: usize,
    pub feasible: bool,
    pub trade_count: u32,
    pub trading_cost: f64,
    pub expected_return: f64,
    pub adjusted_return: f64,
    pub risk: f64,
    pub exceeds_trade_bound: bool,
    pub band_occupancy: String,
    pub seed_expectations: String,
    pub selected_probability: f64,
    pub feasible_probability: f64,
}

impl CsvRow for PeriodRow {
    const COLUMNS: &'static [&'static str] = &[
        "lambda",
        "algorithm",
        "p",
        "period",
        "label",
        "penalty",
        "previous",
        "z",
        "selected_bits",
        "feasible",
        "trade_count",
        "trading_cost",
        "expected_return",
        "adjusted_return",
        "risk",
        "exceeds_trade_bound",
        "band_occupancy",
        "seed_expectations",
        "selected_probability",
        "feasible_probability",
    ];
}

impl Record for PeriodResult {
    type Row = PeriodRow;
    fn to_row(&self) -> PeriodRow {
        PeriodRow {
            lambda: self.lambda,
            algorithm: self.algorithm.as_str().to_string(),
            p: self.p,
            period: self.period,
            label: self.label.clone(),
            penalty: self.penalty,
            previous: self.previous.to_string(),
            z: self.z.to_string(),
            selected_bits: self.selected_bits,
            feasible: self.feasible,
            trade_count: self.trade_count,
            trading_cost: self.trading_cost,
            expected_return: self.expected_return,
            adjusted_return: self.adjusted_return,
            risk: self.risk,
            exceeds_trade_bound: self.exceeds_trade_bound,
            band_occupancy: join(&self.band_occupancy, ";"),
            seed_expectations: join(&self.seed_expectations, ";"),
            selected_probability: self.selected_probability,
            feasible_probability: self.feasible_probability,
        }
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    Ok(())
}

pub fn write_csv<R: CsvRow>(path: &Path, rows: &[R]) -> Result<()> {
    create_parent(path)?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    w.write_record(R::COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `results` to `path` with the extension for `format` applied.
pub fn emit_results<T: Record>(results: &[T], path: &Path, format: Format) -> Result<PathBuf> {
    let path = path.with_extension(format.extension());
    match format {
        Format::Csv => {
            let rows: Vec<T::Row> = results.iter().map(Record::to_row).collect();
            write_csv(&path, &rows)?;
        }
        Format::Json => write_json(&path, results)?,
    }
    Ok(path)
}

/// Run provenance written next to the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: "qrebal".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::campaign::Algorithm;
    use crate::portfolio::PositionVector;

    fn period() -> PeriodResult {
        PeriodResult {
            lambda: 0.5,
            algorithm: Algorithm::Hard,
            p: 2,
            period: 1,
            label: "2017-02".into(),
            penalty: 0.0,
            previous: PositionVector::flat(2),
            z: PositionVector::new(vec![1, 0]).unwrap(),
            selected_bits: 2,
            feasible: true,
            trade_count: 1,
            trading_cost: 0.015,
            expected_return: 0.2,
            adjusted_return: 0.185,
            risk: 0.3,
            exceeds_trade_bound: false,
            band_occupancy: vec![0.5, 0.5],
            seed_expectations: vec![0.1, 0.2],
            selected_probability: 0.4,
            feasible_probability: 1.0,
        }
    }

    #[test]
    fn empty_csv_has_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path =
            emit_results::<PeriodResult>(&[], &dir.path().join("periods"), Format::Csv).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, format!("{}\n", PeriodRow::COLUMNS.join(",")));
    }

    #[test]
    fn csv_columns_match_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = emit_results(&[period()], &dir.path().join("periods"), Format::Csv).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap().split(',').count();
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), header);
        assert!(row.contains("1 0"));
        assert!(row.contains("0.5;0.5"));
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![period(), period()];
        let path = emit_results(&rows, &dir.path().join("periods"), Format::Json).unwrap();
        let back: Vec<PeriodResult> =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn identical_runs_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a = emit_results(&[period()], &dir.path().join("a"), Format::Csv).unwrap();
        let b = emit_results(&[period()], &dir.path().join("b"), Format::Csv).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn io_errors_carry_path() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        std::fs::write(&file, "x").unwrap();
        let err = write_json(&file.join("inner.json"), &1).unwrap_err();
        assert!(err.to_string().contains("occupied"));
    }
}
