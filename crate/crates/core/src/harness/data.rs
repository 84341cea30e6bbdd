//! Daily returns ingestion and summary statistics.

use std::io::Read;
use std::ops::Range;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Minimum trading days for a calendar month to count as a period.
pub const MIN_MONTH_DAYS: usize = 15;

/// Daily returns, one row per trading day and one column per asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnsDataset {
    pub symbols: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// `returns[day][asset]`, decimal fractions.
    pub returns: Vec<Vec<f64>>,
}

fn ingestion(row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Ingestion {
        row,
        column,
        message: message.into(),
    }
}

impl ReturnsDataset {
    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.symbols.len()
    }

    /// Reads `date,SYM1,SYM2,...` CSV. Rows and columns in errors are 1-based,
    /// with the header on row 1.
    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut records = csv.records();
        let header = match records.next() {
            None => return Err(ingestion(1, 1, "empty file")),
            Some(r) => r.map_err(|e| ingestion(1, 1, e.to_string()))?,
        };
        if header.len() < 2 {
            return Err(ingestion(
                1,
                header.len().max(1),
                "header needs a date column and at least one symbol",
            ));
        }
        if !header[0].eq_ignore_ascii_case("date") {
            return Err(ingestion(
                1,
                1,
                format!("first column must be 'date', found '{}'", &header[0]),
            ));
        }
        let symbols: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        for (k, s) in symbols.iter().enumerate() {
            if s.is_empty() {
                return Err(ingestion(1, k + 2, "empty symbol"));
            }
            if symbols[..k].contains(s) {
                return Err(ingestion(1, k + 2, format!("duplicate symbol '{s}'")));
            }
        }

        let mut dates: Vec<NaiveDate> = Vec::new();
        let mut returns = Vec::new();
        for (offset, record) in records.enumerate() {
            let row = offset + 2;
            let record = record.map_err(|e| ingestion(row, 1, e.to_string()))?;
            if record.len() != header.len() {
                return Err(ingestion(
                    row,
                    record.len().min(header.len()) + 1,
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            let date = NaiveDate::parse_from_str(&record[0], DATE_FORMAT)
                .map_err(|e| ingestion(row, 1, format!("bad date '{}': {e}", &record[0])))?;
            if let Some(prev) = dates.iter().position(|d| *d == date) {
                return Err(ingestion(
                    row,
                    1,
                    format!("duplicate date {date}, first seen on row {}", prev + 2),
                ));
            }
            if dates.last().is_some_and(|last| *last > date) {
                return Err(ingestion(
                    row,
                    1,
                    format!("date {date} is out of chronological order"),
                ));
            }
            let values = record
                .iter()
                .enumerate()
                .skip(1)
                .map(|(col, field)| {
                    field
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| {
                            ingestion(row, col + 1, format!("unparsable return '{field}'"))
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            dates.push(date);
            returns.push(values);
        }
        if dates.is_empty() {
            return Err(ingestion(2, 1, "no data rows"));
        }
        Ok(Self {
            symbols,
            dates,
            returns,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    /// Restricts the dataset to `symbols`, in the given order.
    pub fn select(&self, symbols: &[impl AsRef<str>]) -> Result<Self> {
        let columns = symbols
            .iter()
            .map(|s| {
                let s = s.as_ref();
                self.symbols
                    .iter()
                    .position(|have| have == s)
                    .ok_or_else(|| validation(format!("symbol '{s}' not in dataset")))
            })
            .collect::<Result<Vec<usize>>>()?;
        Ok(Self {
            symbols: columns.iter().map(|&c| self.symbols[c].clone()).collect(),
            dates: self.dates.clone(),
            returns: self
                .returns
                .iter()
                .map(|row| columns.iter().map(|&c| row[c]).collect())
                .collect(),
        })
    }

    /// Writes the dataset back out in the ingestion format.
    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(self.symbols.iter().cloned());
        w.write_record(&header)?;
        for (date, row) in self.dates.iter().zip(&self.returns) {
            let mut record = vec![date.format(DATE_FORMAT).to_string()];
            record.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Calendar-month windows with at least `min_days` trading days, in
    /// chronological order. Shorter months are skipped.
    pub fn monthly_windows(&self, min_days: usize) -> Vec<MonthWindow> {
        let mut windows = Vec::new();
        let mut start = 0;
        while start < self.dates.len() {
            let key = (self.dates[start].year(), self.dates[start].month());
            let end = start
                + self.dates[start..]
                    .iter()
                    .take_while(|d| (d.year(), d.month()) == key)
                    .count();
            if end - start >= min_days {
                windows.push(MonthWindow {
                    year: key.0,
                    month: key.1,
                    days: start..end,
                });
            }
            start = end;
        }
        windows
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonthWindow {
    pub year: i32,
    pub month: u32,
    pub days: Range<usize>,
}

impl MonthWindow {
    pub fn label(&self) -> String {
        format!("{:04}-{:02}", self.year, self.month)
    }
}

/// Per-asset mean and sample covariance (`1 / (n - 1)`) over `window`.
pub fn derive_statistics(
    dataset: &ReturnsDataset,
    window: Range<usize>,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if window.end > dataset.n_days() || window.start >= window.end {
        return Err(validation(format!(
            "window {window:?} outside dataset of {} days",
            dataset.n_days()
        )));
    }
    let rows = &dataset.returns[window];
    let n = rows.len();
    if n < 2 {
        return Err(validation(format!(
            "window has {n} day(s), need at least 2"
        )));
    }
    let assets = dataset.n_assets();
    let mu: Vec<f64> = (0..assets)
        .map(|a| rows.iter().map(|r| r[a]).sum::<f64>() / n as f64)
        .collect();
    let mut sigma = vec![vec![0.0; assets]; assets];
    for i in 0..assets {
        for j in i..assets {
            let cov = rows
                .iter()
                .map(|r| (r[i] - mu[i]) * (r[j] - mu[j]))
                .sum::<f64>()
                / (n - 1) as f64;
            sigma[i][j] = cov;
            sigma[j][i] = cov;
        }
    }
    Ok((mu, sigma))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn parse(text: &str) -> Result<ReturnsDataset> {
        ReturnsDataset::from_reader(text.as_bytes())
    }

    #[test]
    fn parses_simple_file() {
        let ds = parse("date,AAA,BBB\n2017-01-03,0.01,-0.02\n2017-01-04,0.0,0.5\n").unwrap();
        assert_eq!(ds.symbols, vec!["AAA", "BBB"]);
        assert_eq!(ds.n_days(), 2);
        assert_eq!(ds.returns[1], vec![0.0, 0.5]);
    }

    #[test]
    fn ingestion_errors_name_location() {
        assert!(matches!(parse(""), Err(Error::Ingestion { row: 1, .. })));
        assert!(matches!(parse("date,A\n"), Err(Error::Ingestion { .. })));
        match parse("date,A,B\n2017-01-03,0.1,0.2\n2017-01-04,0.1\n") {
            Err(Error::Ingestion { row: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse("date,A,B\n2017-01-03,0.1,abc\n") {
            Err(Error::Ingestion {
                row: 2, column: 3, ..
            }) => {}
            other => panic!("{other:?}"),
        }
        match parse("date,A\n2017-01-03,0.1\n2017-01-03,0.2\n") {
            Err(Error::Ingestion {
                row: 3,
                column: 1,
                message,
            }) => assert!(message.contains("duplicate")),
            other => panic!("{other:?}"),
        }
        assert!(parse("day,A\n2017-01-03,0.1\n").is_err());
        assert!(parse("date,A,A\n2017-01-03,0.1,0.1\n").is_err());
    }

    #[test]
    fn subset_selection() {
        let ds = parse("date,A,B,C\n2017-01-03,1,2,3\n").unwrap();
        let sub = ds.select(&["C", "A"]).unwrap();
        assert_eq!(sub.symbols, vec!["C", "A"]);
        assert_eq!(sub.returns, vec![vec![3.0, 1.0]]);
        assert!(ds.select(&["Z"]).is_err());
    }

    #[test]
    fn statistics_of_constant_and_anticorrelated_series() {
        let ds = parse("date,A,B,C\n2017-01-03,0.01,0.2,-0.4\n2017-01-04,0.01,-0.1,0.2\n2017-01-05,0.01,0.05,-0.1\n").unwrap();
        let (mu, sigma) = derive_statistics(&ds, 0..3).unwrap();
        assert_abs_diff_eq!(mu[0], 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(sigma[0][0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            sigma[1][2],
            -sigma[1][1].sqrt() * sigma[2][2].sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(sigma[1][2], sigma[2][1]);
        assert!(derive_statistics(&ds, 0..1).is_err());
        assert!(derive_statistics(&ds, 1..5).is_err());
    }

    #[test]
    fn month_partition() {
        let mut text = String::from("date,A\n");
        for d in 1..=20 {
            text.push_str(&format!("2017-01-{d:02},0.0\n"));
        }
        for d in 1..=10 {
            text.push_str(&format!("2017-02-{d:02},0.0\n"));
        }
        for d in 1..=16 {
            text.push_str(&format!("2017-03-{d:02},0.0\n"));
        }
        let ds = parse(&text).unwrap();
        let months = ds.monthly_windows(MIN_MONTH_DAYS);
        assert_eq!(months.len(), 2);
        assert_eq!(months[0].days, 0..20);
        assert_eq!(months[1].label(), "2017-03");
        assert_eq!(months[1].days, 30..46);
    }

    #[test]
    fn csv_round_trip() {
        let ds = parse("date,A,B\n2017-01-03,0.0123,-0.5\n2017-01-04,1e-5,0\n").unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        assert_eq!(ReturnsDataset::from_reader(&buf[..]).unwrap(), ds);
    }
}
