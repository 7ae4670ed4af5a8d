//! File formats: wave-bundle CSV, machine manifest, feature CSV, prediction
//! CSV, and feature-list files.
//!
//! All files are UTF-8, comma-separated with `.` decimals and LF line
//! endings, written atomically (temp file + rename) so a crash never leaves
//! a half-written artifact. Floats are written in shortest round-trip form,
//! which makes every writer byte-deterministic for identical inputs.
//!
//! Parse errors report the file and 1-based line number.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::datagen::GeneratedMachine;
use crate::features::{FeatureMatrix, FeatureVector};
use crate::signal::{Wave, WaveArray};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::Format {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Write `content` to `path` atomically: a temp file in the same directory
/// is written, flushed, and renamed over the target.
pub fn atomic_write(path: &Path, content: &str) -> Result<(), IoError> {
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(parent).map_err(file_err(path))?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(file_err(path))?;
    tmp.write_all(content.as_bytes()).map_err(file_err(path))?;
    tmp.flush().map_err(file_err(path))?;
    tmp.persist(path)
        .map_err(|e| file_err(path)(e.error))
        .map(|_| ())
}

/// Shortest round-trip decimal form of a float.
fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

fn parse_f64(path: &Path, line: usize, field: &str, what: &str) -> Result<f64, IoError> {
    field
        .parse::<f64>()
        .map_err(|_| format_err(path, line, format!("cannot parse {what} from {field:?}")))
}

// ---------------------------------------------------------------------------
// Wave-bundle CSV: machine_id,sensor_id,timestamp,s0,...,s{M-1}
// ---------------------------------------------------------------------------

/// Serialize one machine's wave bundle (one row per sensor wave, sensor
/// order within each timestamp).
pub fn wave_csv_string(machine: &GeneratedMachine) -> String {
    let wave_len = machine.arrays[0].waves()[0].len();
    let mut out = String::from("machine_id,sensor_id,timestamp");
    for i in 0..wave_len {
        out.push_str(&format!(",s{i}"));
    }
    out.push('\n');
    for array in &machine.arrays {
        for wave in array.waves() {
            out.push_str(wave.machine_id());
            out.push(',');
            out.push_str(&wave.sensor_id().to_string());
            out.push(',');
            out.push_str(&fmt_f64(wave.timestamp()));
            for sample in wave.samples() {
                out.push(',');
                out.push_str(&fmt_f64(*sample));
            }
            out.push('\n');
        }
    }
    out
}

/// Write one machine's wave bundle to `dir/<machine_id>.csv`.
pub fn write_wave_csv(dir: &Path, machine: &GeneratedMachine) -> Result<PathBuf, IoError> {
    let path = dir.join(format!("{}.csv", machine.timeline.machine_id()));
    atomic_write(&path, &wave_csv_string(machine))?;
    Ok(path)
}

/// Read a wave-bundle CSV back into wave arrays grouped by timestamp (rows
/// must be grouped: all six sensors of a timestamp adjacent).
pub fn read_wave_csv(path: &Path) -> Result<Vec<WaveArray>, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))?;
    let columns = header.split(',').count();
    if columns < 4 || !header.starts_with("machine_id,sensor_id,timestamp,s0") {
        return Err(format_err(path, 1, "expected machine_id,sensor_id,timestamp,s0,... header"));
    }
    let wave_len = columns - 3;

    let mut arrays = Vec::new();
    let mut pending: Vec<Wave> = Vec::new();
    for (index, row) in lines {
        let line = index + 1;
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let machine_id = fields
            .next()
            .ok_or_else(|| format_err(path, line, "missing machine_id"))?;
        let sensor: u8 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| format_err(path, line, "cannot parse sensor_id"))?;
        let timestamp = parse_f64(
            path,
            line,
            fields
                .next()
                .ok_or_else(|| format_err(path, line, "missing timestamp"))?,
            "timestamp",
        )?;
        let samples = fields
            .map(|f| parse_f64(path, line, f, "sample"))
            .collect::<Result<Vec<f64>, _>>()?;
        if samples.len() != wave_len {
            return Err(format_err(
                path,
                line,
                format!("expected {wave_len} samples, got {}", samples.len()),
            ));
        }
        let wave = Wave::new(machine_id, sensor, timestamp, samples)
            .map_err(|e| format_err(path, line, e.to_string()))?;
        if let Some(first) = pending.first() {
            if first.timestamp() != timestamp || first.machine_id() != machine_id {
                return Err(format_err(
                    path,
                    line,
                    "incomplete sensor group before this row",
                ));
            }
        }
        pending.push(wave);
        if pending.len() == crate::signal::SENSOR_COUNT {
            let array = WaveArray::new(std::mem::take(&mut pending))
                .map_err(|e| format_err(path, line, e.to_string()))?;
            arrays.push(array);
        }
    }
    if !pending.is_empty() {
        return Err(format_err(path, 0, "trailing incomplete sensor group"));
    }
    Ok(arrays)
}

// ---------------------------------------------------------------------------
// Machine manifest CSV: machine_id,failure_time,downtime_end
// ---------------------------------------------------------------------------

/// Per-machine failure metadata needed to label timestamps. Healthy machines
/// leave both time fields empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub machine_id: String,
    pub failure_time: Option<f64>,
    pub downtime_end: Option<f64>,
}

pub fn manifest_csv_string(entries: &[ManifestEntry]) -> String {
    let mut out = String::from("machine_id,failure_time,downtime_end\n");
    for e in entries {
        out.push_str(&e.machine_id);
        out.push(',');
        if let Some(f) = e.failure_time {
            out.push_str(&fmt_f64(f));
        }
        out.push(',');
        if let Some(d) = e.downtime_end {
            out.push_str(&fmt_f64(d));
        }
        out.push('\n');
    }
    out
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), IoError> {
    atomic_write(path, &manifest_csv_string(entries))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))?;
    if header != "machine_id,failure_time,downtime_end" {
        return Err(format_err(path, 1, "expected machine_id,failure_time,downtime_end header"));
    }
    let mut entries = Vec::new();
    for (index, row) in lines {
        let line = index + 1;
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 3 {
            return Err(format_err(path, line, "expected 3 fields"));
        }
        let parse_opt = |field: &str, what: &str| -> Result<Option<f64>, IoError> {
            if field.is_empty() {
                Ok(None)
            } else {
                parse_f64(path, line, field, what).map(Some)
            }
        };
        entries.push(ManifestEntry {
            machine_id: fields[0].to_string(),
            failure_time: parse_opt(fields[1], "failure_time")?,
            downtime_end: parse_opt(fields[2], "downtime_end")?,
        });
    }
    Ok(entries)
}

// ---------------------------------------------------------------------------
// Feature CSV: machine_id,timestamp,label,<feature names...>
// ---------------------------------------------------------------------------

/// Serialize a labeled feature matrix. Missing feature values become empty
/// fields.
pub fn feature_csv_string(matrix: &FeatureMatrix) -> String {
    let mut out = String::from("machine_id,timestamp,label");
    for name in matrix.names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let labels = matrix.labels();
    for (i, row) in matrix.rows().iter().enumerate() {
        out.push_str(&row.machine_id);
        out.push(',');
        out.push_str(&fmt_f64(row.timestamp));
        out.push(',');
        if let Some(labels) = labels {
            out.push_str(&labels[i].to_string());
        }
        for value in &row.values {
            out.push(',');
            if let Some(v) = value {
                out.push_str(&fmt_f64(*v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_feature_csv(path: &Path, matrix: &FeatureMatrix) -> Result<(), IoError> {
    atomic_write(path, &feature_csv_string(matrix))
}

pub fn read_feature_csv(path: &Path) -> Result<FeatureMatrix, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))?;
    let header_fields: Vec<&str> = header.split(',').collect();
    if header_fields.len() < 4
        || header_fields[0] != "machine_id"
        || header_fields[1] != "timestamp"
        || header_fields[2] != "label"
    {
        return Err(format_err(path, 1, "expected machine_id,timestamp,label,<features> header"));
    }
    let names: Vec<String> = header_fields[3..].iter().map(|s| s.to_string()).collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (index, row) in lines {
        let line = index + 1;
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != names.len() + 3 {
            return Err(format_err(
                path,
                line,
                format!("expected {} fields, got {}", names.len() + 3, fields.len()),
            ));
        }
        let timestamp = parse_f64(path, line, fields[1], "timestamp")?;
        let label: u8 = fields[2]
            .parse()
            .map_err(|_| format_err(path, line, format!("cannot parse label {:?}", fields[2])))?;
        if label > 2 {
            return Err(format_err(path, line, format!("label {label} outside 0..=2")));
        }
        let values = fields[3..]
            .iter()
            .map(|f| {
                if f.is_empty() {
                    Ok(None)
                } else {
                    parse_f64(path, line, f, "feature value").map(Some)
                }
            })
            .collect::<Result<Vec<Option<f64>>, _>>()?;
        rows.push(FeatureVector {
            machine_id: fields[0].to_string(),
            timestamp,
            names: names.clone(),
            values,
        });
        labels.push(label);
    }
    FeatureMatrix::new(rows, Some(labels)).map_err(|e| format_err(path, 0, e.to_string()))
}

// ---------------------------------------------------------------------------
// Prediction CSV: loop_id,timestamp,truth,predicted
// ---------------------------------------------------------------------------

/// One row of a standalone prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub loop_id: String,
    pub timestamp: f64,
    pub truth: u8,
    pub predicted: u8,
}

pub fn prediction_csv_string(rows: &[PredictionRow]) -> String {
    let mut out = String::from("loop_id,timestamp,truth,predicted\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.loop_id,
            fmt_f64(r.timestamp),
            r.truth,
            r.predicted
        ));
    }
    out
}

pub fn write_prediction_csv(path: &Path, rows: &[PredictionRow]) -> Result<(), IoError> {
    atomic_write(path, &prediction_csv_string(rows))
}

pub fn read_prediction_csv(path: &Path) -> Result<Vec<PredictionRow>, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))?;
    if header != "loop_id,timestamp,truth,predicted" {
        return Err(format_err(path, 1, "expected loop_id,timestamp,truth,predicted header"));
    }
    let mut rows = Vec::new();
    for (index, row) in lines {
        let line = index + 1;
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(format_err(path, line, "expected 4 fields"));
        }
        let parse_state = |field: &str, what: &str| -> Result<u8, IoError> {
            let v: u8 = field.parse().map_err(|_| {
                format_err(path, line, format!("cannot parse {what} from {field:?}"))
            })?;
            if v > 2 {
                return Err(format_err(path, line, format!("{what} {v} outside 0..=2")));
            }
            Ok(v)
        };
        rows.push(PredictionRow {
            loop_id: fields[0].to_string(),
            timestamp: parse_f64(path, line, fields[1], "timestamp")?,
            truth: parse_state(fields[2], "truth")?,
            predicted: parse_state(fields[3], "predicted")?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Feature-list files: one feature name per line.
// ---------------------------------------------------------------------------

pub fn write_feature_list(path: &Path, names: &[String]) -> Result<(), IoError> {
    let mut out = String::new();
    for name in names {
        out.push_str(name);
        out.push('\n');
    }
    atomic_write(path, &out)
}

pub fn read_feature_list(path: &Path) -> Result<Vec<String>, IoError> {
    let text = fs::read_to_string(path).map_err(file_err(path))?;
    Ok(text
        .lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.to_string())
        .collect())
}
