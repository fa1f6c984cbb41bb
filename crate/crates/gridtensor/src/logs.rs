//! Message logs as CSV or JSON lines.
//!
//! CSV columns are `timestamp_ms,rtu_id,points_requested,channel[,label]`,
//! with an optional header row naming them (in any order). JSON lines use
//! the same keys; `rtu_id` and `channel` may be strings or numbers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use gridtensor_core::{Label, MessageRecord};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const COLUMNS: [&str; 5] = [
    "timestamp_ms",
    "rtu_id",
    "points_requested",
    "channel",
    "label",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    JsonLines,
}

impl LogFormat {
    /// `.csv` is CSV; `.jsonl`, `.ndjson` and `.json` are JSON lines.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        match ext.as_str() {
            "csv" => Ok(LogFormat::Csv),
            "jsonl" | "ndjson" | "json" => Ok(LogFormat::JsonLines),
            _ => Err(Error::Usage(format!(
                "{}: cannot tell the log format from the extension (use .csv or .jsonl)",
                path.display()
            ))),
        }
    }
}

/// Parses a whole log. The first malformed line aborts parsing with its
/// line number.
pub fn parse_log<R: Read>(
    reader: R,
    format: LogFormat,
    origin: &str,
) -> Result<Vec<MessageRecord>> {
    match format {
        LogFormat::Csv => parse_csv(reader, origin),
        LogFormat::JsonLines => parse_jsonl(BufReader::new(reader), origin),
    }
}

pub fn read_log_file(path: &Path) -> Result<Vec<MessageRecord>> {
    let format = LogFormat::from_path(path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_log(BufReader::new(file), format, &path.display().to_string())
}

fn parse_error(origin: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        origin: origin.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_csv<R: Read>(reader: R, origin: &str) -> Result<Vec<MessageRecord>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    // positions of the five columns; label is optional
    let mut layout: [Option<usize>; 5] = [Some(0), Some(1), Some(2), Some(3), Some(4)];
    let mut out = Vec::new();
    for (n, row) in csv.records().enumerate() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(origin, line, e.to_string())
        })?;
        let line = row.position().map_or(n as u64 + 1, |p| p.line());
        if n == 0 && row.iter().any(|f| f == "timestamp_ms") {
            layout = COLUMNS.map(|c| row.iter().position(|h| h == c));
            if let Some(i) = layout[..4].iter().position(Option::is_none) {
                return Err(parse_error(
                    origin,
                    line,
                    format!("header lacks column `{}`", COLUMNS[i]),
                ));
            }
            continue;
        }
        let field = |k: usize| layout[k].and_then(|i| row.get(i)).filter(|s| !s.is_empty());
        let require = |k: usize| {
            field(k)
                .ok_or_else(|| parse_error(origin, line, format!("missing field `{}`", COLUMNS[k])))
        };
        let timestamp_ms = require(0)?
            .parse::<u64>()
            .map_err(|e| parse_error(origin, line, format!("timestamp_ms: {e}")))?;
        let points = require(2)?;
        let points_requested = points
            .parse::<u32>()
            .map_err(|e| parse_error(origin, line, format!("points_requested `{points}`: {e}")))?;
        let label = field(4).map(|s| parse_label(s, origin, line)).transpose()?;
        out.push(make_record(
            timestamp_ms,
            require(1)?,
            points_requested,
            require(3)?,
            label,
            origin,
            line,
        )?);
    }
    Ok(out)
}

fn parse_label(s: &str, origin: &str, line: u64) -> Result<Label> {
    Label::parse(s).ok_or_else(|| {
        parse_error(
            origin,
            line,
            format!("label `{s}` is neither benign nor anomalous"),
        )
    })
}

fn make_record(
    timestamp_ms: u64,
    rtu_id: &str,
    points_requested: u32,
    channel: &str,
    label: Option<Label>,
    origin: &str,
    line: u64,
) -> Result<MessageRecord> {
    let mut record = MessageRecord::new(timestamp_ms, rtu_id, points_requested, channel)
        .map_err(|e| parse_error(origin, line, e.to_string()))?;
    record.label = label;
    Ok(record)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Token {
    Text(String),
    Number(serde_json::Number),
}

impl Token {
    fn into_string(self) -> String {
        match self {
            Token::Text(s) => s,
            Token::Number(n) => n.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    timestamp_ms: u64,
    rtu_id: Token,
    points_requested: u32,
    channel: Token,
    #[serde(default)]
    label: Option<String>,
}

fn parse_jsonl<R: BufRead>(reader: R, origin: &str) -> Result<Vec<MessageRecord>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n as u64 + 1;
        let text = line.map_err(|e| parse_error(origin, line_no, e.to_string()))?;
        if text.trim().is_empty() {
            continue;
        }
        let raw: JsonRecord =
            serde_json::from_str(&text).map_err(|e| parse_error(origin, line_no, e.to_string()))?;
        let label = raw
            .label
            .as_deref()
            .map(|s| parse_label(s, origin, line_no))
            .transpose()?;
        out.push(make_record(
            raw.timestamp_ms,
            &raw.rtu_id.into_string(),
            raw.points_requested,
            &raw.channel.into_string(),
            label,
            origin,
            line_no,
        )?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct OutRecord<'a> {
    timestamp_ms: u64,
    rtu_id: &'a str,
    points_requested: u32,
    channel: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'static str>,
}

impl<'a> From<&'a MessageRecord> for OutRecord<'a> {
    fn from(r: &'a MessageRecord) -> Self {
        Self {
            timestamp_ms: r.timestamp_ms,
            rtu_id: &r.rtu_id,
            points_requested: r.points_requested,
            channel: &r.channel,
            label: r.label.map(Label::as_str),
        }
    }
}

/// Writes records with a header row (CSV). The label column is present
/// when any record carries a label.
pub fn write_log<W: Write>(writer: W, records: &[MessageRecord], format: LogFormat) -> Result<()> {
    let labeled = records.iter().any(|r| r.label.is_some());
    let data = |e: std::io::Error| Error::Data(format!("writing log: {e}"));
    match format {
        LogFormat::Csv => {
            let mut csv = csv::Writer::from_writer(writer);
            let columns = if labeled { &COLUMNS[..] } else { &COLUMNS[..4] };
            let csv_err = |e: csv::Error| Error::Data(format!("writing log: {e}"));
            csv.write_record(columns).map_err(csv_err)?;
            for r in records {
                let ts = r.timestamp_ms.to_string();
                let pts = r.points_requested.to_string();
                let mut row = vec![ts.as_str(), &r.rtu_id, pts.as_str(), &r.channel];
                if labeled {
                    row.push(r.label.map_or("", Label::as_str));
                }
                csv.write_record(&row).map_err(csv_err)?;
            }
            csv.flush().map_err(data)
        }
        LogFormat::JsonLines => {
            let mut w = BufWriter::new(writer);
            for r in records {
                serde_json::to_writer(&mut w, &OutRecord::from(r))
                    .map_err(|e| Error::Data(e.to_string()))?;
                w.write_all(b"\n").map_err(data)?;
            }
            w.flush().map_err(data)
        }
    }
}

pub fn write_log_file(path: &Path, records: &[MessageRecord]) -> Result<()> {
    let format = LogFormat::from_path(path)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_log(file, records, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(text: &str) -> Result<Vec<MessageRecord>> {
        parse_log(text.as_bytes(), LogFormat::Csv, "test")
    }

    fn jsonl(text: &str) -> Result<Vec<MessageRecord>> {
        parse_log(text.as_bytes(), LogFormat::JsonLines, "test")
    }

    #[test]
    fn csv_line_without_label() {
        let got = csv("1580515200000,RTU_07,12,CH_3\n").unwrap();
        assert_eq!(
            got,
            vec![MessageRecord::new(1580515200000, "RTU_07", 12, "CH_3").unwrap()]
        );
    }

    #[test]
    fn csv_header_in_any_order() {
        let got =
            csv("channel,label,rtu_id,timestamp_ms,points_requested\nC,anomalous,R,5,2\n").unwrap();
        assert_eq!(
            got[0],
            MessageRecord::new(5, "R", 2, "C")
                .unwrap()
                .with_label(Label::Anomalous)
        );
    }

    #[test]
    fn jsonl_labeled_record() {
        let got = jsonl(r#"{"timestamp_ms":1,"rtu_id":7,"points_requested":3,"channel":"CH","label":"anomalous"}"#).unwrap();
        assert_eq!(got[0].rtu_id, "7");
        assert_eq!(got[0].label, Some(Label::Anomalous));
    }

    #[test]
    fn zero_points_names_constraint_and_line() {
        let err = csv("1,A,4,C\n2,A,0,C\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("points_requested must be at least 1"), "{err}");
        let err = jsonl(
            "\n{\"timestamp_ms\":1,\"rtu_id\":\"A\",\"points_requested\":0,\"channel\":\"C\"}",
        )
        .unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn missing_fields_are_reported() {
        let err = csv("1,A,4\n").unwrap_err().to_string();
        assert!(err.contains("channel"), "{err}");
        let err = jsonl(r#"{"timestamp_ms":1,"rtu_id":"A","points_requested":4}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("channel"), "{err}");
    }

    #[test]
    fn bad_label_rejected() {
        assert!(csv("1,A,4,C,maybe\n").is_err());
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(csv("").unwrap().is_empty());
        assert!(jsonl("\n\n").unwrap().is_empty());
    }

    #[test]
    fn round_trip_both_formats() {
        let records = vec![
            MessageRecord::new(10, "A, quoted", 4, "C1")
                .unwrap()
                .with_label(Label::Benign),
            MessageRecord::new(20, "B", 8, "C2").unwrap(),
        ];
        for format in [LogFormat::Csv, LogFormat::JsonLines] {
            let mut buf = Vec::new();
            write_log(&mut buf, &records, format).unwrap();
            assert_eq!(parse_log(buf.as_slice(), format, "rt").unwrap(), records);
        }
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            LogFormat::from_path(Path::new("a.CSV")).unwrap(),
            LogFormat::Csv
        );
        assert_eq!(
            LogFormat::from_path(Path::new("a.jsonl")).unwrap(),
            LogFormat::JsonLines
        );
        assert!(LogFormat::from_path(Path::new("a.txt")).is_err());
    }
}
