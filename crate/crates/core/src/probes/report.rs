//! Report files: fixed-column CSV summaries, long-format CSV for plotting
//! (`step,series,value,seed`), and full JSON dumps.
//!
//! Column sets:
//! * `sweep.csv`: proportion, n_runs, then mean/std of EM and F1 for the
//!   challenging and shortcut test sets.
//! * `speed.csv`: condition, seed, steps_to_threshold (`not_reached` if never).
//! * `width.csv`: condition, seed, k, final_train_f1; `width_min_k.csv`:
//!   condition, seed, threshold, min_k.
//! * `gap.csv`: step, mean shortcut F1, mean challenging F1, gap, smoothed gap.
//!
//! Scores are written with four decimals.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{GapReport, ProbeError, SpeedReport, SweepReport, WidthReport};

fn io_err(path: &Path, e: impl std::fmt::Display) -> ProbeError {
    ProbeError::Io { path: path.display().to_string(), detail: e.to_string() }
}

/// Hex SHA-256 of the JSON serialization.
pub fn dataset_hash<T: Serialize + ?Sized>(items: &T) -> String {
    let json = serde_json::to_vec(items).expect("serializable");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), ProbeError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongRow {
    pub step: usize,
    pub series: String,
    pub value: String,
    pub seed: String,
}

pub fn write_long_csv(path: &Path, rows: &[LongRow]) -> Result<(), ProbeError> {
    write_csv(path, rows)
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ProbeError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
struct SweepCsv {
    proportion: String,
    n_runs: usize,
    challenging_em_mean: String,
    challenging_em_std: String,
    challenging_f1_mean: String,
    challenging_f1_std: String,
    shortcut_em_mean: String,
    shortcut_em_std: String,
    shortcut_f1_mean: String,
    shortcut_f1_std: String,
}

impl SweepReport {
    /// Writes `sweep.csv`, `sweep_long.csv` and `sweep.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ProbeError> {
        let rows: Vec<SweepCsv> = self
            .rows
            .iter()
            .map(|r| SweepCsv {
                proportion: format!("{:.2}", r.proportion),
                n_runs: r.n_runs,
                challenging_em_mean: f4(r.challenging_em_mean),
                challenging_em_std: f4(r.challenging_em_std),
                challenging_f1_mean: f4(r.challenging_f1_mean),
                challenging_f1_std: f4(r.challenging_f1_std),
                shortcut_em_mean: f4(r.shortcut_em_mean),
                shortcut_em_std: f4(r.shortcut_em_std),
                shortcut_f1_mean: f4(r.shortcut_f1_mean),
                shortcut_f1_std: f4(r.shortcut_f1_std),
            })
            .collect();
        let long: Vec<LongRow> = self
            .runs
            .iter()
            .flat_map(|r| {
                [("challenging_f1", r.challenging.f1), ("shortcut_f1", r.shortcut.f1)].map(|(name, v)| LongRow {
                    step: self.steps,
                    series: format!("p={:.2}/{name}", r.proportion),
                    value: f4(v),
                    seed: r.seed_index.to_string(),
                })
            })
            .collect();
        let files = [dir.join("sweep.csv"), dir.join("sweep_long.csv"), dir.join("sweep.json")];
        write_csv(&files[0], &rows)?;
        write_long_csv(&files[1], &long)?;
        write_json(&files[2], self)?;
        Ok(files.to_vec())
    }
}

#[derive(Serialize)]
struct SpeedCsv {
    condition: String,
    seed: usize,
    steps_to_threshold: String,
}

fn steps_cell(v: Option<f64>) -> String {
    v.map(|s| format!("{s:.1}")).unwrap_or_else(|| "not_reached".into())
}

impl SpeedReport {
    /// Writes `speed.csv`, `speed_long.csv` (train F1 curves) and `speed.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ProbeError> {
        let rows: Vec<SpeedCsv> = self
            .runs
            .iter()
            .map(|r| SpeedCsv {
                condition: r.condition.to_string(),
                seed: r.seed_index,
                steps_to_threshold: steps_cell(r.steps_to_threshold),
            })
            .collect();
        let long: Vec<LongRow> = self
            .runs
            .iter()
            .flat_map(|r| {
                r.curve.iter().map(move |&(step, f1)| LongRow {
                    step,
                    series: format!("{}_train_f1", r.condition),
                    value: f4(f1),
                    seed: r.seed_index.to_string(),
                })
            })
            .collect();
        let files = [dir.join("speed.csv"), dir.join("speed_long.csv"), dir.join("speed.json")];
        write_csv(&files[0], &rows)?;
        write_long_csv(&files[1], &long)?;
        write_json(&files[2], self)?;
        Ok(files.to_vec())
    }
}

#[derive(Serialize)]
struct WidthCsv {
    condition: String,
    seed: usize,
    k: usize,
    final_train_f1: String,
}

#[derive(Serialize)]
struct MinKCsv {
    condition: String,
    seed: usize,
    threshold: String,
    min_k: String,
}

impl WidthReport {
    /// Writes `width.csv`, `width_min_k.csv` and `width.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ProbeError> {
        let rows: Vec<WidthCsv> = self
            .runs
            .iter()
            .map(|r| WidthCsv {
                condition: r.condition.to_string(),
                seed: r.seed_index,
                k: r.unmasked_units,
                final_train_f1: f4(r.final_train_f1),
            })
            .collect();
        let mins: Vec<MinKCsv> = self
            .min_k
            .iter()
            .map(|m| MinKCsv {
                condition: m.condition.to_string(),
                seed: m.seed_index,
                threshold: f4(m.threshold),
                min_k: m.min_k.map(|k| k.to_string()).unwrap_or_else(|| "not_reached".into()),
            })
            .collect();
        let files = [dir.join("width.csv"), dir.join("width_min_k.csv"), dir.join("width.json")];
        write_csv(&files[0], &rows)?;
        write_csv(&files[1], &mins)?;
        write_json(&files[2], self)?;
        Ok(files.to_vec())
    }
}

#[derive(Serialize)]
struct GapCsv {
    step: usize,
    f1_shortcut_test: String,
    f1_challenging_test: String,
    gap: String,
    smoothed_gap: String,
}

impl GapReport {
    /// Writes `gap.csv` (mean over seeds), `gap_long.csv` (per seed) and `gap.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ProbeError> {
        let rows: Vec<GapCsv> = self
            .mean_trace
            .iter()
            .zip(&self.smoothed_gap)
            .map(|(t, s)| GapCsv {
                step: t.step,
                f1_shortcut_test: f4(t.f1_shortcut_test),
                f1_challenging_test: f4(t.f1_challenging_test),
                gap: f4(t.gap),
                smoothed_gap: f4(*s),
            })
            .collect();
        let mut long = Vec::new();
        for g in &self.seeds {
            for (t, s) in g.trace.iter().zip(&g.smoothed_gap) {
                for (series, v) in [
                    ("f1_shortcut_test", t.f1_shortcut_test),
                    ("f1_challenging_test", t.f1_challenging_test),
                    ("gap", t.gap),
                    ("smoothed_gap", *s),
                ] {
                    long.push(LongRow { step: t.step, series: series.into(), value: f4(v), seed: g.seed_index.to_string() });
                }
            }
        }
        let files = [dir.join("gap.csv"), dir.join("gap_long.csv"), dir.join("gap.json")];
        write_csv(&files[0], &rows)?;
        write_long_csv(&files[1], &long)?;
        write_json(&files[2], self)?;
        Ok(files.to_vec())
    }
}
