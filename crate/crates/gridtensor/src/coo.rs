//! Text form of a sparse tensor: a `shape=N1,...,ND` header, then one
//! `i1,...,iD,value` row per stored coordinate. Values use the shortest
//! representation that parses back to the same `f64`.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use gridtensor_core::SparseTensor;

use crate::{Error, Result};

pub fn write_tensor<W: Write>(mut w: W, tensor: &SparseTensor) -> std::io::Result<()> {
    let shape: Vec<String> = tensor.shape().iter().map(ToString::to_string).collect();
    writeln!(w, "shape={}", shape.join(","))?;
    for (index, value) in tensor.iter() {
        for i in index {
            write!(w, "{i},")?;
        }
        writeln!(w, "{value}")?;
    }
    w.flush()
}

pub fn read_tensor<R: BufRead>(reader: R, origin: &str) -> Result<SparseTensor> {
    let err = |line: u64, message: String| Error::Parse {
        origin: origin.to_string(),
        line,
        message,
    };
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| err(1, "missing shape header".into()))?
        .map_err(|e| err(1, e.to_string()))?;
    let dims = header
        .trim()
        .strip_prefix("shape=")
        .ok_or_else(|| err(1, format!("expected `shape=...`, found `{header}`")))?;
    let shape = dims
        .split(',')
        .map(|d| d.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| err(1, format!("shape: {e}")))?;

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (n, line) in lines.enumerate() {
        let line_no = n as u64 + 2;
        let line = line.map_err(|e| err(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != shape.len() + 1 {
            return Err(err(
                line_no,
                format!(
                    "expected {} fields, found {}",
                    shape.len() + 1,
                    fields.len()
                ),
            ));
        }
        let (coords, value) = fields.split_at(shape.len());
        let index = coords
            .iter()
            .map(|c| c.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| err(line_no, format!("index: {e}")))?;
        let value: f64 = value[0]
            .parse()
            .map_err(|e| err(line_no, format!("value: {e}")))?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(err(
                line_no,
                format!("stored values must be positive and finite, found {value}"),
            ));
        }
        if !seen.insert(index.clone()) {
            return Err(err(line_no, format!("duplicate coordinate {index:?}")));
        }
        entries.push((index, value));
    }
    SparseTensor::from_entries(&shape, entries).map_err(|e| err(0, e.to_string()))
}
