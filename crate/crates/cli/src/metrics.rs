//! Line-delimited JSON metrics.
//!
//! Each record is written and flushed as one complete line, so a crashed run
//! leaves a readable prefix. Non-finite numbers are stored as `null`.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: u64,
    pub episode_return: Option<f64>,
    pub success_rate: Option<f64>,
    pub survival_rate: Option<f64>,
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    pub alpha: Option<f64>,
    pub mean_q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub visit_coverage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub main_coverage: Option<f64>,
    /// Set on the last record of a run that stopped on an error.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// `Some(v)` for finite `v`.
pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Appends records to a metrics file, refusing steps that do not increase.
#[derive(Debug)]
pub struct MetricsWriter {
    path: PathBuf,
    file: File,
    last_step: Option<u64>,
}

impl MetricsWriter {
    /// Opens `path` for appending. Existing records are read so the step
    /// order carries over from an earlier run.
    pub fn open(path: &Path) -> Result<Self> {
        let last_step = if path.exists() { read_metrics(path)?.last().map(|r| r.step) } else { None };
        let file = OpenOptions::new().create(true).append(true).open(path).with_context(|| format!("opening {}", path.display()))?;
        Ok(MetricsWriter { path: path.to_path_buf(), file, last_step })
    }

    pub fn last_step(&self) -> Option<u64> {
        self.last_step
    }

    pub fn append(&mut self, record: &MetricsRecord) -> Result<()> {
        if let Some(last) = self.last_step {
            if record.step <= last {
                bail!("metrics step {} does not follow {last} in {}", record.step, self.path.display());
            }
        }
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        self.last_step = Some(record.step);
        Ok(())
    }
}

/// Reads every complete record; a truncated final line is ignored.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() => break,
            Err(e) => bail!("{}:{}: {e}", path.display(), i + 1),
        }
    }
    Ok(out)
}
