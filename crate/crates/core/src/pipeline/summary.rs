use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quality::QualityReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub subject: String,
    pub clip: String,
    pub pass: bool,
    pub identity_min: f64,
    pub lip_sync: Option<f64>,
    pub histogram_nonzero_fraction: f64,
    pub n_frames: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        Some(Self {
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub root: PathBuf,
    pub rows: Vec<SummaryRow>,
    /// Clip directories without a readable `quality.json`.
    pub missing_quality: Vec<PathBuf>,
    pub identity: Option<Stats>,
    pub lip_sync: Option<Stats>,
    pub warnings: Vec<String>,
}

impl DatasetSummary {
    pub fn failures(&self) -> Vec<&SummaryRow> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }

    pub fn all_passed(&self) -> bool {
        self.missing_quality.is_empty() && self.rows.iter().all(|r| r.pass)
    }
}

fn sorted_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    v.sort();
    Ok(v)
}

/// Scans `root/<subject>/<clip>/quality.json`. A clip directory is any
/// second-level directory holding `meta.json` or `audio.wav`.
pub fn summarize(root: impl AsRef<Path>) -> Result<DatasetSummary> {
    let root = root.as_ref();
    let mut rows = Vec::new();
    let mut missing_quality = Vec::new();
    let mut warnings = Vec::new();
    for subject in sorted_dirs(root)? {
        for clip in sorted_dirs(&subject)? {
            if !(clip.join("meta.json").exists() || clip.join("audio.wav").exists()) {
                continue;
            }
            match QualityReport::read(clip.join("quality.json")) {
                Ok(q) => rows.push(SummaryRow {
                    subject: subject.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                    clip: clip.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                    pass: q.pass,
                    identity_min: q.identity.min,
                    lip_sync: q.lip_sync.r,
                    histogram_nonzero_fraction: q.histograms.nonzero_fraction,
                    n_frames: q.n_frames,
                }),
                Err(e) => {
                    warnings.push(format!("{}: {e}", clip.display()));
                    missing_quality.push(clip);
                }
            }
        }
    }
    if rows.is_empty() && missing_quality.is_empty() {
        warnings.push(format!("no clips found under {}", root.display()));
    }
    Ok(DatasetSummary {
        root: root.to_path_buf(),
        identity: Stats::of(rows.iter().map(|r| r.identity_min)),
        lip_sync: Stats::of(rows.iter().filter_map(|r| r.lip_sync)),
        rows,
        missing_quality,
        warnings,
    })
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:<10} {:>6} {:>9} {:>8} {:>7}", "subject", "clip", "frames", "identity", "lip-sync", "result")?;
        for r in &self.rows {
            let sync = r.lip_sync.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
            let result = if r.pass { "pass" } else { "FAIL" };
            writeln!(
                f,
                "{:<16} {:<10} {:>6} {:>9.3} {:>8} {:>7}",
                r.subject, r.clip, r.n_frames, r.identity_min, sync, result
            )?;
        }
        let passed = self.rows.iter().filter(|r| r.pass).count();
        write!(f, "clips: {}  passed: {}  failed: {}", self.rows.len(), passed, self.rows.len() - passed)?;
        if !self.missing_quality.is_empty() {
            write!(f, "  missing quality.json: {}", self.missing_quality.len())?;
        }
        for (name, s) in [("identity", self.identity), ("lip-sync", self.lip_sync)] {
            if let Some(s) = s {
                write!(f, "\n{name}: min {:.3}  mean {:.3}  max {:.3}", s.min, s.mean, s.max)?;
            }
        }
        for w in &self.warnings {
            write!(f, "\nwarning: {w}")?;
        }
        Ok(())
    }
}
