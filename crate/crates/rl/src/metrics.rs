//! Training metrics rows and their CSV form.

use std::io;

use serde::Serialize;

use crate::rollout::EpisodeRecord;

/// Column order is the CSV header.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    /// Environment steps taken so far.
    pub step: u64,
    /// Configuration index, or `mean` for the average over configurations.
    pub config_id: String,
    pub success_rate: f64,
    pub mean_return: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_range: f64,
}

pub const HEADER: [&str; 8] =
    ["step", "config_id", "success_rate", "mean_return", "policy_loss", "value_loss", "entropy", "clip_range"];

/// Loss averages reported with each block of rows.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossSummary {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_range: f64,
}

/// One row per configuration with finished episodes, then the mean of those
/// per-config rates.
pub fn summarize(step: u64, configs: usize, episodes: &[EpisodeRecord], loss: LossSummary) -> Vec<MetricRow> {
    let row = |id: String, success_rate, mean_return| MetricRow {
        step,
        config_id: id,
        success_rate,
        mean_return,
        policy_loss: loss.policy_loss,
        value_loss: loss.value_loss,
        entropy: loss.entropy,
        clip_range: loss.clip_range,
    };
    let mut rows = Vec::new();
    for c in 0..configs {
        let mine: Vec<&EpisodeRecord> = episodes.iter().filter(|e| e.config_id == c).collect();
        if mine.is_empty() {
            continue;
        }
        let n = mine.len() as f64;
        let s = mine.iter().filter(|e| e.success).count() as f64 / n;
        let r = mine.iter().map(|e| e.ret).sum::<f64>() / n;
        rows.push(row(c.to_string(), s, r));
    }
    if !rows.is_empty() {
        let n = rows.len() as f64;
        let s = rows.iter().map(|r| r.success_rate).sum::<f64>() / n;
        let r = rows.iter().map(|r| r.mean_return).sum::<f64>() / n;
        rows.push(row("mean".into(), s, r));
    }
    rows
}

/// Streams rows to a CSV sink, header first.
pub struct MetricsWriter<W: io::Write> {
    inner: csv::Writer<W>,
}

impl<W: io::Write> MetricsWriter<W> {
    pub fn new(sink: W) -> io::Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
        inner.write_record(HEADER)?;
        Ok(MetricsWriter { inner })
    }

    /// Continues a file that already has its header.
    pub fn append(sink: W) -> Self {
        MetricsWriter { inner: csv::WriterBuilder::new().has_headers(false).from_writer(sink) }
    }

    pub fn write(&mut self, rows: &[MetricRow]) -> io::Result<()> {
        for r in rows {
            self.inner.serialize(r)?;
        }
        self.inner.flush()
    }
}
