//! Plot-ready CSV: mean and standard error across seeds (or files) per x-point.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;

use crate::analyze::SCORE_NAMES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// Metrics JSONL files, one per seed; x is the update index.
    TrainingCurve,
    /// `cvar.csv` files; x is α.
    CvarCurve,
    /// `heatmap.csv` grids; one row per cell.
    Heatmap,
    /// `scores.csv` files; per success-rate bin and score function.
    ScoreHistogram,
}

/// Mean and standard error (sample standard deviation over √n); a single
/// value has standard error 0.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

type Groups = BTreeMap<Vec<Key>, Vec<f64>>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = read(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match cells {
            Ok(c) => rows.push(c),
            // a header line
            Err(_) if i == 0 => {}
            Err(e) => bail!("{}:{}: {e}", path.display(), i + 1),
        }
    }
    Ok(rows)
}

fn lookup<'a>(v: &'a serde_json::Value, path: &str) -> Option<&'a serde_json::Value> {
    path.split('.').try_fold(v, |v, k| v.get(k))
}

fn collect(kind: PlotKind, inputs: &[PathBuf], field: &str) -> Result<Groups> {
    let mut g = Groups::new();
    for path in inputs {
        match kind {
            PlotKind::TrainingCurve => {
                for (i, line) in read(path)?.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let v: serde_json::Value =
                        serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
                    if v.get("gradient").and_then(|g| g.as_bool()) == Some(false) {
                        continue;
                    }
                    let (Some(x), Some(y)) =
                        (v.get("update").and_then(|x| x.as_f64()), lookup(&v, field).and_then(|y| y.as_f64()))
                    else {
                        continue;
                    };
                    g.entry(vec![Key(x)]).or_default().push(y);
                }
            }
            PlotKind::CvarCurve => {
                for row in csv_rows(path)? {
                    if row.len() < 2 {
                        bail!("{}: expected alpha,value[,seed] rows", path.display());
                    }
                    g.entry(vec![Key(row[0])]).or_default().push(row[1]);
                }
            }
            PlotKind::Heatmap => {
                for (r, row) in csv_rows(path)?.iter().enumerate() {
                    for (c, &count) in row.iter().enumerate() {
                        g.entry(vec![Key(r as f64), Key(c as f64)]).or_default().push(count);
                    }
                }
            }
            PlotKind::ScoreHistogram => {
                for row in csv_rows(path)? {
                    if row.len() != 1 + SCORE_NAMES.len() {
                        bail!("{}: expected success plus {} score columns", path.display(), SCORE_NAMES.len());
                    }
                    let bin = sfl_core::eval::rate_bin(row[0], 10);
                    for (k, &s) in row[1..].iter().enumerate() {
                        g.entry(vec![Key(k as f64), Key(bin as f64)]).or_default().push(s);
                    }
                }
            }
        }
    }
    Ok(g)
}

/// Builds the CSV text. Fails on empty input; x-points missing from some
/// inputs are flagged in a leading comment line.
pub fn emit_plot_data(kind: PlotKind, inputs: &[PathBuf], field: &str) -> Result<String> {
    if inputs.is_empty() {
        bail!("no input files");
    }
    let groups = collect(kind, inputs, field)?;
    if groups.is_empty() {
        bail!("inputs contain no data points");
    }
    let mut out = String::new();
    let full = groups.values().map(Vec::len).max().unwrap_or(0);
    let partial = groups.values().filter(|v| v.len() < full).count();
    if kind != PlotKind::ScoreHistogram && (partial > 0 || (kind != PlotKind::Heatmap && full < inputs.len())) {
        writeln!(out, "# warning: partial data, {partial} points have fewer than {} samples", full.max(inputs.len()))?;
    }
    let header = match kind {
        PlotKind::TrainingCurve => "update",
        PlotKind::CvarCurve => "alpha",
        PlotKind::Heatmap => "row,col",
        PlotKind::ScoreHistogram => "score,bin",
    };
    writeln!(out, "{header},mean,stderr,n")?;
    for (key, ys) in &groups {
        let (m, se) = mean_stderr(ys);
        let key: Vec<String> = match kind {
            PlotKind::ScoreHistogram => vec![SCORE_NAMES[key[0].0 as usize].to_string(), key[1].0.to_string()],
            _ => key.iter().map(|k| k.0.to_string()).collect(),
        };
        writeln!(out, "{},{m},{se},{}", key.join(","), ys.len())?;
    }
    Ok(out)
}

/// As [`emit_plot_data`], writing to `out` only on success.
pub fn write_plot_data(kind: PlotKind, inputs: &[PathBuf], field: &str, out: &Path) -> Result<()> {
    let text = emit_plot_data(kind, inputs, field)?;
    fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}
