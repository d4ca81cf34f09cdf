//! Line-delimited trajectory log.
//!
//! Every drag iteration appends one record per point; fixation changes,
//! copy-paste applications, and denoiser steps appear as event records.
//! The initial per-point records (timestep 0, iteration 0) also carry the
//! target coordinates so a log is self-contained for plotting.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogEvent {
    #[serde(rename = "enter_I")]
    EnterFixation,
    #[serde(rename = "exit_I")]
    ExitFixation,
    #[serde(rename = "copy_paste")]
    CopyPaste,
    #[serde(rename = "denoise")]
    Denoise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub timestep: usize,
    pub iteration: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub point_id: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fixated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub event: Option<LogEvent>,
    /// Target coordinates, present on the initial record of each point.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gy: Option<f64>,
}

impl LogRecord {
    pub fn event(timestep: usize, iteration: usize, point_id: Option<usize>, event: LogEvent) -> Self {
        LogRecord {
            timestep,
            iteration,
            point_id,
            x: None,
            y: None,
            e: None,
            fixated: None,
            loss: None,
            event: Some(event),
            gx: None,
            gy: None,
        }
    }
}

/// In-memory trajectory log; serialized as one JSON object per line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryLog {
    pub records: Vec<LogRecord>,
}

impl TrajectoryLog {
    pub fn push(&mut self, record: LogRecord) {
        self.records.push(record);
    }

    pub fn fixation_event_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r.event, Some(LogEvent::EnterFixation) | Some(LogEvent::ExitFixation)))
            .count()
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        writer.write_all(self.to_jsonl()?.as_bytes())?;
        writer.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<TrajectoryLog> {
        let reader = BufReader::new(File::open(path)?);
        let mut records = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: LogRecord = serde_json::from_str(&line).map_err(|e| {
                Error::parse(format!("trajectory log line {}: {e}", lineno + 1))
            })?;
            records.push(record);
        }
        Ok(TrajectoryLog { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_roundtrip() {
        let mut log = TrajectoryLog::default();
        log.push(LogRecord {
            timestep: 0,
            iteration: 0,
            point_id: Some(0),
            x: Some(3.0),
            y: Some(4.0),
            e: Some(5.0),
            fixated: Some(false),
            loss: None,
            event: None,
            gx: Some(6.0),
            gy: Some(8.0),
        });
        log.push(LogRecord::event(0, 1, Some(0), LogEvent::EnterFixation));
        log.push(LogRecord::event(0, 1, None, LogEvent::Denoise));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.jsonl");
        log.save(&path).unwrap();
        let loaded = TrajectoryLog::load(&path).unwrap();
        assert_eq!(loaded, log);
        assert_eq!(loaded.fixation_event_count(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"timestep\":0,\"iteration\":0}\nnot json\n").unwrap();
        let err = TrajectoryLog::load(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn event_names_match_interface() {
        let rec = LogRecord::event(1, 2, Some(3), LogEvent::ExitFixation);
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"exit_I\""), "{json}");
    }
}
