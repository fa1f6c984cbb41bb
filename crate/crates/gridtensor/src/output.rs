//! Score tables, ROC/PR curve files and metrics summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use gridtensor_core::{EvaluationReport, Label, ScoredMessage};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `scores.csv` for the tensor model, `scores_<model>.csv` for a baseline.
pub fn output_path(dir: &Path, stem: &str, model: Option<&str>, ext: &str) -> PathBuf {
    match model {
        Some(m) => dir.join(format!("{stem}_{m}.{ext}")),
        None => dir.join(format!("{stem}.{ext}")),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Columns `[model,]row_id,timestamp_ms,rtu_id,points_requested,channel,oov,p_value[,label]`.
/// The p-value is empty for messages left unscored; the label column is
/// present when any input record is labeled.
pub fn write_scores<W: Write>(
    writer: W,
    scored: &[ScoredMessage],
    model: Option<&str>,
) -> Result<()> {
    let labeled = scored.iter().any(|s| s.record.label.is_some());
    let mut csv = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Data(format!("writing scores: {e}"));
    let mut header = Vec::new();
    if model.is_some() {
        header.push("model");
    }
    header.extend([
        "row_id",
        "timestamp_ms",
        "rtu_id",
        "points_requested",
        "channel",
        "oov",
        "p_value",
    ]);
    if labeled {
        header.push("label");
    }
    csv.write_record(&header).map_err(err)?;
    for s in scored {
        let r = &s.record;
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        if let Some(m) = model {
            row.push(m.to_string());
        }
        row.push(s.row.to_string());
        row.push(r.timestamp_ms.to_string());
        row.push(r.rtu_id.clone());
        row.push(r.points_requested.to_string());
        row.push(r.channel.clone());
        row.push(s.outcome.is_oov().to_string());
        row.push(s.p_value().map_or(String::new(), |p| p.to_string()));
        if labeled {
            row.push(r.label.map_or("", Label::as_str).to_string());
        }
        csv.write_record(&row).map_err(err)?;
    }
    csv.flush()
        .map_err(|e| Error::Data(format!("writing scores: {e}")))
}

pub fn write_scores_file(path: &Path, scored: &[ScoredMessage], model: Option<&str>) -> Result<()> {
    write_scores(create(path)?, scored, model)
}

/// One row of a score table as read back for evaluation.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ScoreRow {
    #[serde(default)]
    pub model: Option<String>,
    pub row_id: usize,
    pub oov: bool,
    pub p_value: Option<f64>,
    #[serde(default, deserialize_with = "label_or_empty")]
    pub label: Option<Label>,
}

fn label_or_empty<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<Label>, D::Error> {
    let s: Option<String> = Option::deserialize(d)?;
    match s.as_deref().map(str::trim) {
        None | Some("") => Ok(None),
        Some(t) => Label::parse(t)
            .map(Some)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown label `{t}`"))),
    }
}

pub fn read_scores_file(path: &Path) -> Result<Vec<ScoreRow>> {
    let origin = path.display().to_string();
    let mut csv = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{origin}: {other:?}")),
    })?;
    csv.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Parse {
                origin: origin.clone(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })
        })
        .collect()
}

/// `(p_value, is_anomalous)` pairs, or `None` when some row lacks a label.
pub fn labeled_pairs(rows: &[ScoreRow]) -> Option<Vec<(f64, bool)>> {
    if rows.iter().any(|r| r.label.is_none()) {
        return None;
    }
    Some(
        rows.iter()
            .filter_map(|r| Some((r.p_value?, r.label?.is_anomalous())))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub model: String,
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub anomalies: usize,
    pub benign: usize,
    /// Messages without a p-value, excluded from the curves.
    pub unscored: usize,
    pub out_of_vocabulary: usize,
    pub rank: Option<usize>,
}

fn write_pairs(path: &Path, header: [&str; 2], pairs: &[(f64, f64)]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{},{}", header[0], header[1]).map_err(io)?;
    for (a, b) in pairs {
        writeln!(w, "{a},{b}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes `roc[_model].csv`, `pr[_model].csv` and `metrics[_model].json`.
pub fn write_evaluation(
    dir: &Path,
    model: Option<&str>,
    report: &EvaluationReport,
    metrics: &Metrics,
) -> Result<()> {
    write_pairs(
        &output_path(dir, "roc", model, "csv"),
        ["fpr", "tpr"],
        &report.roc,
    )?;
    write_pairs(
        &output_path(dir, "pr", model, "csv"),
        ["recall", "precision"],
        &report.pr,
    )?;
    let path = output_path(dir, "metrics", model, "json");
    let mut text = serde_json::to_string_pretty(metrics).map_err(|e| Error::Data(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridtensor_core::{MessageRecord, Outcome};

    fn msg(row: usize, label: Option<Label>, outcome: Outcome) -> ScoredMessage {
        let mut record = MessageRecord::new(1000 + row as u64, "R1", 4, "CH").unwrap();
        record.label = label;
        ScoredMessage {
            row,
            record,
            index: None,
            outcome,
        }
    }

    #[test]
    fn score_table_layout() {
        let scored = vec![
            msg(0, Some(Label::Benign), Outcome::NoDelta),
            msg(1, Some(Label::Anomalous), Outcome::OutOfVocabulary),
            msg(
                2,
                Some(Label::Benign),
                Outcome::Scored {
                    rate: 2.0,
                    p_value: 0.5,
                },
            ),
        ];
        let mut buf = Vec::new();
        write_scores(&mut buf, &scored, Some("pca")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "model,row_id,timestamp_ms,rtu_id,points_requested,channel,oov,p_value,label"
        );
        assert_eq!(lines[1], "pca,0,1000,R1,4,CH,false,,benign");
        assert_eq!(lines[2], "pca,1,1001,R1,4,CH,true,0,anomalous");
        assert_eq!(lines[3], "pca,2,1002,R1,4,CH,false,0.5,benign");
    }

    #[test]
    fn unlabeled_table_has_no_label_column() {
        let mut buf = Vec::new();
        write_scores(&mut buf, &[msg(0, None, Outcome::OutOfVocabulary)], None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("row_id,"));
        assert!(text.lines().next().unwrap().ends_with(",p_value"));
    }

    #[test]
    fn scores_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let scored = vec![
            msg(0, Some(Label::Benign), Outcome::NoDelta),
            msg(
                1,
                Some(Label::Anomalous),
                Outcome::Scored {
                    rate: 0.1,
                    p_value: 0.1 + 0.2,
                },
            ),
        ];
        write_scores_file(&path, &scored, None).unwrap();
        let rows = read_scores_file(&path).unwrap();
        assert_eq!(rows[0].p_value, None);
        assert_eq!(rows[1].p_value, Some(0.1 + 0.2));
        assert_eq!(labeled_pairs(&rows), Some(vec![(0.1 + 0.2, true)]));
    }
}
