//! Training telemetry as a JSON-lines stream.
//!
//! One row per optimization step with the fixed key set
//! `{step, phase, loss_D, loss_E, d_real_mean, d_fake_mean}`.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

/// One metrics line. `loss_E` carries the encoder loss during adaptation and
/// the generator loss during source-GAN training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub phase: String,
    #[serde(rename = "loss_D")]
    pub loss_d: f64,
    #[serde(rename = "loss_E")]
    pub loss_e: f64,
    pub d_real_mean: f64,
    pub d_fake_mean: f64,
}

impl From<&crate::error::StepTelemetry> for MetricsRow {
    fn from(t: &crate::error::StepTelemetry) -> MetricsRow {
        MetricsRow {
            step: t.step,
            phase: t.phase.clone(),
            loss_d: t.loss_d,
            loss_e: t.loss_e_or_g,
            d_real_mean: t.d_real_mean,
            d_fake_mean: t.d_fake_mean,
        }
    }
}

pub trait MetricsSink {
    fn record(&mut self, row: &MetricsRow) -> Result<()>;
    fn flush(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default)]
pub struct NullSink;

impl MetricsSink for NullSink {
    fn record(&mut self, _row: &MetricsRow) -> Result<()> {
        Ok(())
    }
}

/// Keeps rows in memory, for tests and the degenerate-equivalence check.
#[derive(Debug, Default)]
pub struct VecSink {
    pub rows: Vec<MetricsRow>,
}

impl MetricsSink for VecSink {
    fn record(&mut self, row: &MetricsRow) -> Result<()> {
        self.rows.push(row.clone());
        Ok(())
    }
}

/// Appends one JSON object per line to a file.
#[derive(Debug)]
pub struct JsonlSink {
    writer: BufWriter<fs::File>,
}

impl JsonlSink {
    pub fn create(path: &Path) -> Result<JsonlSink> {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        Ok(JsonlSink {
            writer: BufWriter::new(fs::File::create(path)?),
        })
    }

    /// Parse a metrics file back into rows.
    pub fn read_all(path: &Path) -> Result<Vec<MetricsRow>> {
        let text = fs::read_to_string(path)?;
        let mut rows = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            rows.push(serde_json::from_str(line).map_err(|e| {
                crate::error::Error::Config(format!("bad metrics line: {e}"))
            })?);
        }
        Ok(rows)
    }
}

impl MetricsSink for JsonlSink {
    fn record(&mut self, row: &MetricsRow) -> Result<()> {
        serde_json::to_writer(&mut self.writer, row)
            .map_err(|e| crate::error::Error::State(format!("metrics serialization: {e}")))?;
        self.writer.write_all(b"\n")?;
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

impl Drop for JsonlSink {
    fn drop(&mut self) {
        let _ = self.writer.flush();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> MetricsRow {
        MetricsRow {
            step: 3,
            phase: "adapt/0".into(),
            loss_d: 1.25,
            loss_e: 0.5,
            d_real_mean: 0.75,
            d_fake_mean: 0.25,
        }
    }

    #[test]
    fn json_keys_are_the_contracted_set() {
        let v: serde_json::Value = serde_json::to_value(row()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
        let mut expected = vec!["step", "phase", "loss_D", "loss_E", "d_real_mean", "d_fake_mean"];
        let mut got = keys.clone();
        got.sort_unstable();
        expected.sort_unstable();
        assert_eq!(got, expected);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.jsonl");
        {
            let mut sink = JsonlSink::create(&path).unwrap();
            sink.record(&row()).unwrap();
            let mut second = row();
            second.step = 4;
            sink.record(&second).unwrap();
        }
        let rows = JsonlSink::read_all(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], row());
        assert_eq!(rows[1].step, 4);
    }
}
