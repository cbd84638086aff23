use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const METRICS_HEADER: &str =
    "interval,episodes,buffer_size,mean_episode_length,mean_root_value,do_actions_added_rate,exploitability,throttled";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub interval: usize,
    /// Self-play episodes completed so far.
    pub episodes: usize,
    pub buffer_size: usize,
    pub mean_episode_length: f64,
    /// Mean of player 0's root value target over the interval.
    pub mean_root_value: f64,
    /// Actions added per double-oracle call over the interval.
    pub do_actions_added_rate: f64,
    pub exploitability: Option<f64>,
    /// The trainer hit the train/generation ratio during the interval.
    pub throttled: bool,
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.interval,
            self.episodes,
            self.buffer_size,
            self.mean_episode_length,
            self.mean_root_value,
            self.do_actions_added_rate,
            self.exploitability.map(|x| x.to_string()).unwrap_or_default(),
            self.throttled as u8
        )
    }
}

/// Running sums for the current interval.
#[derive(Clone, Debug, Default)]
pub(crate) struct IntervalStats {
    pub episodes: usize,
    pub turns: usize,
    pub root_value: f64,
    pub do_added: usize,
    pub do_calls: usize,
    pub throttled: bool,
}

impl IntervalStats {
    pub fn row(&self, interval: usize, episodes: usize, buffer_size: usize, exploitability: Option<f64>) -> MetricsRow {
        let per = |x: f64, n: usize| if n == 0 { 0.0 } else { x / n as f64 };
        MetricsRow {
            interval,
            episodes,
            buffer_size,
            mean_episode_length: per(self.turns as f64, self.episodes),
            mean_root_value: per(self.root_value, self.episodes),
            do_actions_added_rate: per(self.do_added as f64, self.do_calls),
            exploitability,
            throttled: self.throttled,
        }
    }
}

/// Append-only CSV and JSON-lines metrics files. IO failures are logged
/// and otherwise ignored.
pub struct MetricsSink {
    csv: Option<BufWriter<File>>,
    jsonl: Option<BufWriter<File>>,
    dir: Option<PathBuf>,
    pub rows: Vec<MetricsRow>,
}

fn open_append(path: &Path) -> Option<BufWriter<File>> {
    match OpenOptions::new().create(true).append(true).open(path) {
        Ok(f) => Some(BufWriter::new(f)),
        Err(e) => {
            log::warn!("cannot open {}: {e}", path.display());
            None
        }
    }
}

impl MetricsSink {
    /// In-memory sink.
    pub fn memory() -> Self {
        Self {
            csv: None,
            jsonl: None,
            dir: None,
            rows: Vec::new(),
        }
    }

    /// Sink writing `metrics.csv` and `metrics.jsonl` under `dir`.
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join("metrics.csv");
        let fresh = std::fs::metadata(&csv_path).map_or(true, |m| m.len() == 0);
        let mut csv = open_append(&csv_path);
        if fresh {
            if let Some(w) = csv.as_mut() {
                if let Err(e) = writeln!(w, "{METRICS_HEADER}") {
                    log::warn!("metrics write failed: {e}");
                }
            }
        }
        Ok(Self {
            csv,
            jsonl: open_append(&dir.join("metrics.jsonl")),
            dir: Some(dir.to_owned()),
            rows: Vec::new(),
        })
    }

    pub fn record(&mut self, row: MetricsRow) {
        log::info!("{}", row.csv_line());
        if let Some(w) = self.csv.as_mut() {
            if let Err(e) = writeln!(w, "{}", row.csv_line()).and_then(|_| w.flush()) {
                log::warn!("metrics write failed: {e}");
            }
        }
        if let Some(w) = self.jsonl.as_mut() {
            let line = serde_json::to_string(&row).expect("row serializes");
            if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                log::warn!("metrics write failed: {e}");
            }
        }
        self.rows.push(row);
    }

    /// Writes `summary.json` next to the streams.
    pub fn finish(&mut self, summary: &serde_json::Value) {
        let Some(dir) = &self.dir else { return };
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(summary).expect("summary serializes");
        if let Err(e) = std::fs::write(&path, text) {
            log::warn!("cannot write {}: {e}", path.display());
        }
    }
}
