//! Loss-series ingestion and export, period splits, the synthetic GARCH
//! fixture, and tabular reports in delimiter-separated and JSON form.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! `f64` reads back bit-for-bit.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::distributions::{simulate_garch, GarchProcess, Provenance, SortedSample};
use crate::error::{Error, Result};

pub const REPORT_SCHEMA: &str = "deviatile-report/1";
const DATE_FORMAT: &str = "%Y-%m-%d";

fn parse_date(s: &str, line: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT).map_err(|e| Error::Parse {
        line,
        message: format!("bad date `{s}`: {e}"),
    })
}

/// Daily losses in chronological order. Dates are ISO `YYYY-MM-DD` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub dates: Vec<String>,
    pub values: Vec<f64>,
    pub source: String,
}

impl ReturnSeries {
    pub fn new(dates: Vec<String>, values: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} dates for {} values",
                dates.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value {} at position {i}",
                values[i]
            )));
        }
        let mut prev: Option<NaiveDate> = None;
        for (i, d) in dates.iter().enumerate() {
            let cur = parse_date(d, i + 1)?;
            if let Some(p) = prev {
                if cur <= p {
                    return Err(Error::NonMonotoneDates {
                        line: i + 1,
                        prev: p.to_string(),
                        next: d.clone(),
                    });
                }
            }
            prev = Some(cur);
        }
        Ok(ReturnSeries {
            dates,
            values,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sorted(&self) -> Result<SortedSample> {
        SortedSample::new(
            self.values.clone(),
            Provenance::File {
                source: self.source.clone(),
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueColumn {
    Price(String),
    Return(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date_column: String,
    pub value: ValueColumn,
    #[serde(default = "default_delimiter")]
    pub delimiter: u8,
}

fn default_delimiter() -> u8 {
    b','
}

impl CsvSchema {
    pub fn prices(date_column: &str, price_column: &str) -> Self {
        CsvSchema {
            date_column: date_column.into(),
            value: ValueColumn::Price(price_column.into()),
            delimiter: b',',
        }
    }

    pub fn returns(date_column: &str, return_column: &str) -> Self {
        CsvSchema {
            date_column: date_column.into(),
            value: ValueColumn::Return(return_column.into()),
            delimiter: b',',
        }
    }
}

/// How raw column values become losses.
///
/// `NegLogReturn` needs a price column and yields `-ln(P_t / P_{t-1})`.
/// `Identity` takes a return column as is. `Scale(c)` multiplies whichever
/// of the two applies by `c`, e.g. `c = 100` for percent units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    NegLogReturn,
    Identity,
    Scale(f64),
}

fn csv_reader<R: Read>(input: R, delimiter: u8) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

pub fn ingest_reader<R: Read>(
    input: R,
    schema: &CsvSchema,
    transform: Transform,
    source: &str,
) -> Result<ReturnSeries> {
    let mut rdr = csv_reader(input, schema.delimiter);
    let headers = rdr.headers()?.clone();
    let date_idx = column_index(&headers, &schema.date_column)?;
    let (value_name, is_price) = match &schema.value {
        ValueColumn::Price(c) => (c.as_str(), true),
        ValueColumn::Return(c) => (c.as_str(), false),
    };
    let value_idx = column_index(&headers, value_name)?;
    let scale = match (transform, is_price) {
        (Transform::NegLogReturn, true) | (Transform::Identity, false) => 1.0,
        (Transform::Scale(c), _) if c.is_finite() && c != 0.0 => c,
        (Transform::Scale(c), _) => {
            return Err(Error::InvalidParameter(format!("scale factor must be finite and nonzero, got {c}")))
        }
        (Transform::NegLogReturn, false) => {
            return Err(Error::InvalidParameter(
                "neg_log_return needs a price column, not a return column".into(),
            ))
        }
        (Transform::Identity, true) => {
            return Err(Error::InvalidParameter(
                "prices are not losses; use neg_log_return or scale with a price column".into(),
            ))
        }
    };

    let mut dates: Vec<(usize, String)> = Vec::new();
    let mut raw = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let date = record.get(date_idx).ok_or_else(|| Error::Parse {
            line,
            message: "row is missing the date field".into(),
        })?;
        let field = record.get(value_idx).ok_or_else(|| Error::Parse {
            line,
            message: format!("row is missing `{value_name}`"),
        })?;
        let v: f64 = field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("`{field}` is not a number"),
        })?;
        if !v.is_finite() || (is_price && v <= 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("value {v} is not a usable {}", if is_price { "price" } else { "return" }),
            });
        }
        let parsed = parse_date(date, line)?;
        if let Some((_, prev)) = dates.last() {
            if parsed <= parse_date(prev, line)? {
                return Err(Error::NonMonotoneDates {
                    line,
                    prev: prev.clone(),
                    next: date.to_string(),
                });
            }
        }
        dates.push((line, parsed.format(DATE_FORMAT).to_string()));
        raw.push(v);
    }

    let (dates, values): (Vec<String>, Vec<f64>) = if is_price {
        dates
            .into_iter()
            .skip(1)
            .zip(raw.windows(2))
            .map(|((_, d), w)| (d, -scale * (w[1] / w[0]).ln()))
            .unzip()
    } else {
        dates
            .into_iter()
            .zip(raw)
            .map(|((_, d), v)| (d, scale * v))
            .unzip()
    };
    if values.len() < 2 {
        return Err(Error::SampleTooSmall {
            needed: 2,
            got: values.len(),
        });
    }
    ReturnSeries::new(dates, values, source)
}

pub fn ingest_csv(path: &Path, schema: &CsvSchema, transform: Transform) -> Result<ReturnSeries> {
    let file = File::open(path)?;
    ingest_reader(file, schema, transform, &path.display().to_string())
}

/// Writes `date,loss` rows under a `# source:` comment; reads back with
/// `CsvSchema::returns("date", "loss")` and `Transform::Identity`.
pub fn write_series<W: Write>(s: &ReturnSeries, mut out: W) -> Result<()> {
    writeln!(out, "# source: {}", s.source.replace('\n', " "))?;
    writeln!(out, "date,loss")?;
    for (d, v) in s.dates.iter().zip(&s.values) {
        writeln!(out, "{d},{v:?}")?;
    }
    Ok(())
}

pub fn export_series(s: &ReturnSeries, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_series(s, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Splits at each boundary date: a period ends just before its boundary.
pub fn split_periods(s: &ReturnSeries, boundaries: &[String]) -> Result<Vec<ReturnSeries>> {
    let dates: Vec<NaiveDate> = s
        .dates
        .iter()
        .enumerate()
        .map(|(i, d)| parse_date(d, i + 1))
        .collect::<Result<_>>()?;
    let mut cuts = Vec::with_capacity(boundaries.len());
    for b in boundaries {
        let bd = parse_date(b, 0)?;
        cuts.push((b, dates.partition_point(|d| *d < bd)));
    }
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for (b, cut) in cuts.into_iter().chain(std::iter::once((&String::new(), dates.len()))) {
        if cut <= start {
            return Err(Error::EmptyPeriod {
                boundary: if b.is_empty() { "end of series".into() } else { b.clone() },
            });
        }
        out.push(ReturnSeries {
            dates: s.dates[start..cut].to_vec(),
            values: s.values[start..cut].to_vec(),
            source: format!("{} [{}..{}]", s.source, s.dates[start], s.dates[cut - 1]),
        });
        start = cut;
    }
    Ok(out)
}

pub const FIXTURE_LEN: usize = 5030;
pub const FIXTURE_SEED: u64 = 20_200_101;
pub const FIXTURE_START: &str = "2000-01-03";

/// `n` consecutive weekdays starting at `start` (itself moved forward to a weekday).
pub fn business_days(start: &str, n: usize) -> Result<Vec<String>> {
    let mut d = parse_date(start, 0)?;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d.format(DATE_FORMAT).to_string());
        }
        d = d
            .checked_add_days(Days::new(1))
            .ok_or_else(|| Error::InvalidParameter("date overflow".into()))?;
    }
    Ok(out)
}

/// 5030 daily losses simulated from the fitted S&P 500 GARCH(1,1) model
/// (percent units), dated on weekdays from 2000-01-03.
pub fn synthetic_fixture() -> Result<ReturnSeries> {
    synthetic_series(&GarchProcess::sp500_fit(), FIXTURE_LEN, FIXTURE_SEED, FIXTURE_START)
}

/// A simulated GARCH loss path dated on weekdays from `start`.
pub fn synthetic_series(p: &GarchProcess, n: usize, seed: u64, start: &str) -> Result<ReturnSeries> {
    let sample = simulate_garch(p, n, seed)?;
    ReturnSeries::new(
        business_days(start, n)?,
        sample.path,
        format!("synthetic GARCH(1,1) fixture, seed {seed}"),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    /// Non-finite numbers are kept as text so both formats can carry them.
    pub fn num(x: f64) -> Cell {
        if x.is_finite() {
            Cell::Num(x)
        } else {
            Cell::Text(x.to_string())
        }
    }

    pub fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Empty, Cell::num)
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn parse(s: &str) -> Cell {
        if s.is_empty() {
            return Cell::Empty;
        }
        if let Ok(i) = s.parse::<i64>() {
            return Cell::Int(i);
        }
        let numeric = s.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b));
        match s.parse::<f64>() {
            Ok(x) if numeric => Cell::Num(x),
            _ => Cell::Text(s.to_string()),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Num(x) => ser.serialize_f64(*x),
            Cell::Int(i) => ser.serialize_i64(*i),
            Cell::Text(s) => ser.serialize_str(s),
            Cell::Empty => ser.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        Ok(match serde_json::Value::deserialize(de)? {
            serde_json::Value::Null => Cell::Empty,
            serde_json::Value::String(s) => Cell::Text(s),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) if !n.is_f64() => Cell::Int(i),
                _ => Cell::Num(n.as_f64().unwrap_or(f64::NAN)),
            },
            other => Cell::Text(other.to_string()),
        })
    }
}

/// A titled table with `key: value` metadata and free-form warnings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Dsv,
    Structured,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dsv" | "csv" => Ok(ReportFormat::Dsv),
            "structured" | "json" => Ok(ReportFormat::Structured),
            other => Err(Error::InvalidParameter(format!("unknown report format `{other}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct StructuredReport {
    schema: String,
    #[serde(flatten)]
    report: Report,
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

impl Report {
    pub fn new(title: impl Into<String>, columns: &[&str]) -> Self {
        Report {
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidParameter(format!(
                "row has {} cells, report has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }

    /// Comment header (`# schema`, `# title:`, `# key: value`, `# warning:`),
    /// then a header row and data rows.
    pub fn to_dsv(&self, delimiter: u8) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "# {REPORT_SCHEMA}");
        let _ = writeln!(out, "# title: {}", one_line(&self.title));
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {}: {}", one_line(k), one_line(v));
        }
        for w in &self.warnings {
            let _ = writeln!(out, "# warning: {}", one_line(w));
        }
        let mut wtr = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(Vec::new());
        if !self.columns.is_empty() {
            wtr.write_record(&self.columns)?;
        }
        for row in &self.rows {
            wtr.write_record(row.iter().map(Cell::render))?;
        }
        let body = wtr
            .into_inner()
            .map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
        Ok(out)
    }

    pub fn from_dsv(text: &str, delimiter: u8) -> Result<Self> {
        let mut report = Report::default();
        let mut body = String::new();
        let mut saw_schema = false;
        for line in BufReader::new(text.as_bytes()).lines() {
            let line = line?;
            match line.strip_prefix("# ") {
                Some(rest) if rest == REPORT_SCHEMA => saw_schema = true,
                Some(rest) => {
                    let (k, v) = rest.split_once(": ").unwrap_or((rest.trim_end_matches(':'), ""));
                    match k {
                        "title" => report.title = v.to_string(),
                        "warning" => report.warnings.push(v.to_string()),
                        _ => report.metadata.push((k.to_string(), v.to_string())),
                    }
                }
                None => {
                    body.push_str(&line);
                    body.push('\n');
                }
            }
        }
        if !saw_schema {
            return Err(Error::Parse {
                line: 1,
                message: format!("missing `# {REPORT_SCHEMA}` header"),
            });
        }
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(false)
            .from_reader(body.as_bytes());
        let mut records = rdr.records();
        if let Some(h) = records.next() {
            report.columns = h?.iter().map(str::to_string).collect();
        }
        for rec in records {
            report.rows.push(rec?.iter().map(Cell::parse).collect());
        }
        Ok(report)
    }

    pub fn to_json(&self) -> Result<String> {
        let wrapped = StructuredReport {
            schema: REPORT_SCHEMA.to_string(),
            report: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&wrapped)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wrapped: StructuredReport = serde_json::from_str(text)?;
        if wrapped.schema != REPORT_SCHEMA {
            return Err(Error::Parse {
                line: 1,
                message: format!("unsupported schema `{}`", wrapped.schema),
            });
        }
        Ok(wrapped.report)
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Dsv => self.to_dsv(b','),
            ReportFormat::Structured => self.to_json(),
        }
    }
}

pub fn export_report(report: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, report.render(format)?)?;
    Ok(())
}

pub fn read_report(path: &Path, format: ReportFormat) -> Result<Report> {
    let text = std::fs::read_to_string(path)?;
    match format {
        ReportFormat::Dsv => Report::from_dsv(&text, b','),
        ReportFormat::Structured => Report::from_json(&text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prices(rows: &[(&str, f64)]) -> String {
        let mut s = String::from("Date,Close\n");
        for (d, p) in rows {
            s.push_str(&format!("{d},{p}\n"));
        }
        s
    }

    #[test]
    fn neg_log_returns() {
        let csv = prices(&[("2020-01-02", 100.0), ("2020-01-03", 99.0)]);
        let s = ingest_reader(csv.as_bytes(), &CsvSchema::prices("Date", "Close"), Transform::NegLogReturn, "t");
        // one loss is too short for a series
        assert!(matches!(s, Err(Error::SampleTooSmall { .. })));
        let csv = prices(&[("2020-01-02", 100.0), ("2020-01-03", 99.0), ("2020-01-06", 99.0)]);
        let s = ingest_reader(csv.as_bytes(), &CsvSchema::prices("Date", "Close"), Transform::NegLogReturn, "t")
            .unwrap();
        assert!((s.values[0] - 0.010_050_335_853_501_44).abs() < 1e-15);
        assert_eq!(s.values[1], 0.0);
        assert_eq!(s.dates, vec!["2020-01-03", "2020-01-06"]);
        let pct = ingest_reader(csv.as_bytes(), &CsvSchema::prices("Date", "Close"), Transform::Scale(100.0), "t")
            .unwrap();
        assert!((pct.values[0] - 100.0 * s.values[0]).abs() < 1e-12);
    }

    #[test]
    fn ingest_errors_carry_lines() {
        let bad = "Date,Close\n2020-01-02,100\n2020-01-03,abc\n";
        match ingest_reader(bad.as_bytes(), &CsvSchema::prices("Date", "Close"), Transform::NegLogReturn, "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let back = prices(&[("2020-01-03", 1.0), ("2020-01-02", 2.0), ("2020-01-06", 3.0)]);
        assert!(matches!(
            ingest_reader(back.as_bytes(), &CsvSchema::prices("Date", "Close"), Transform::NegLogReturn, "t"),
            Err(Error::NonMonotoneDates { line: 3, .. })
        ));
        let csv = prices(&[("2020-01-02", 1.0), ("2020-01-03", 2.0), ("2020-01-06", 3.0)]);
        assert!(matches!(
            ingest_reader(csv.as_bytes(), &CsvSchema::prices("Date", "Price"), Transform::NegLogReturn, "t"),
            Err(Error::MissingColumn(_))
        ));
        assert!(ingest_reader(csv.as_bytes(), &CsvSchema::returns("Date", "Close"), Transform::NegLogReturn, "t").is_err());
    }

    #[test]
    fn split_and_rejoin() {
        let dates = business_days("2009-12-28", 10).unwrap();
        let s = ReturnSeries::new(dates, (0..10).map(f64::from).collect(), "x").unwrap();
        let parts = split_periods(&s, &["2010-01-01".to_string()]).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].len() + parts[1].len(), 10);
        assert_eq!(parts[0].dates.last().unwrap(), "2009-12-31");
        let joined: Vec<f64> = parts.iter().flat_map(|p| p.values.clone()).collect();
        assert_eq!(joined, s.values);
        assert!(matches!(
            split_periods(&s, &["2001-01-01".to_string()]),
            Err(Error::EmptyPeriod { .. })
        ));
        assert!(matches!(
            split_periods(&s, &["2030-01-01".to_string()]),
            Err(Error::EmptyPeriod { .. })
        ));
    }

    #[test]
    fn business_days_skip_weekends() {
        let d = business_days("2000-01-01", 3).unwrap();
        assert_eq!(d, vec!["2000-01-03", "2000-01-04", "2000-01-05"]);
    }

    #[test]
    fn report_round_trips() {
        let mut r = Report::new("demo", &["label", "x", "n", "note"]);
        r.meta("seed", 7);
        r.warnings.push("row 2 failed".into());
        r.push_row(vec![Cell::text("(10000,5,100)"), Cell::num(0.1 + 0.2), Cell::Int(3), Cell::Empty])
            .unwrap();
        r.push_row(vec![Cell::text("a \"b\""), Cell::num(1e-300), Cell::Int(-1), Cell::num(f64::INFINITY)])
            .unwrap();
        let dsv = Report::from_dsv(&r.to_dsv(b',').unwrap(), b',').unwrap();
        let json = Report::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(dsv, r);
        assert_eq!(json, r);
        assert!(r.push_row(vec![Cell::Empty]).is_err());
        let empty = Report::new("empty", &["a", "b"]);
        assert_eq!(empty.to_dsv(b',').unwrap().lines().last(), Some("a,b"));
    }
}
