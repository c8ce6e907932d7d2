//! ROC/AUC and report files for learning curves and model comparisons.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainer::TrainHistory;

pub const LEARNING_CURVE_FILE: &str = "learning_curve.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// ROC points ordered by descending threshold. The first point is `(0, 0)`
/// at threshold `+∞`; the last is `(1, 1)` at the smallest score.
#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
}

impl RocCurve {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.fpr.iter().copied().zip(self.tpr.iter().copied()).collect()
    }
}

/// `(threshold, fp, tp)` cumulative counts.
type Groups = Vec<(f64, u64, u64)>;

/// Cumulative `(threshold, fp, tp)` counts per distinct score, descending.
fn tie_groups(scores: &[f64], labels: &[u8]) -> Result<(Groups, u64, u64)> {
    if scores.len() != labels.len() {
        return Err(Error::Arity(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Range(format!("score {s} is not a number")));
    }
    let n_pos = labels.iter().filter(|&&l| l != 0).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateClass(format!(
            "need both classes, got {n_pos} positive and {n_neg} negative"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups = Vec::new();
    let (mut fp, mut tp) = (0, 0);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] != 0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        groups.push((t, fp, tp));
    }
    Ok((groups, n_pos, n_neg))
}

/// ROC curve with tied scores grouped into a single point.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    let (groups, n_pos, n_neg) = tie_groups(scores, labels)?;
    let mut roc = RocCurve {
        thresholds: vec![f64::INFINITY],
        fpr: vec![0.0],
        tpr: vec![0.0],
    };
    for (t, fp, tp) in groups {
        roc.thresholds.push(t);
        roc.fpr.push(fp as f64 / n_neg as f64);
        roc.tpr.push(tp as f64 / n_pos as f64);
    }
    Ok(roc)
}

/// Trapezoidal area under the ROC curve.
///
/// The area is accumulated in integer units of `1 / (2·P·N)`, so the result
/// is the Mann–Whitney statistic with ties counted one half, to the last bit.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (groups, n_pos, n_neg) = tie_groups(scores, labels)?;
    let mut twice_area: u128 = 0;
    let (mut fp_prev, mut tp_prev) = (0u64, 0u64);
    for (_, fp, tp) in groups {
        twice_area += u128::from(fp - fp_prev) * u128::from(tp_prev + tp);
        fp_prev = fp;
        tp_prev = tp;
    }
    Ok(twice_area as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Identity of the model a set of runs belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub ansatz: String,
    pub n_hidden: usize,
    pub n_iterations: usize,
    pub param_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub ansatz: String,
    pub n_hidden: usize,
    pub n_iterations: usize,
    pub param_count: usize,
    pub final_val_auc: f64,
}

impl SummaryRow {
    pub fn new(info: &ModelSummary, final_val_auc: f64) -> Self {
        Self {
            model: info.model.clone(),
            ansatz: info.ansatz.clone(),
            n_hidden: info.n_hidden,
            n_iterations: info.n_iterations,
            param_count: info.param_count,
            final_val_auc,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n_runs: usize,
}

/// Mean and sample standard deviation; a single value has deviation 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.windows(2).all(|w| w[0] == w[1]) {
        return (values.first().copied().unwrap_or(f64::NAN), 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// `(step, metric, value)` triples of one run, step 0 being the initial
/// validation.
fn series(h: &TrainHistory) -> Vec<(usize, &'static str, f64)> {
    let mut out = vec![(0, "val_loss", h.initial.loss), (0, "val_auc", h.initial.auc)];
    for r in &h.records {
        out.push((r.step, "train_loss", r.train_loss));
        if let Some(v) = &r.validation {
            out.push((r.step, "val_loss", v.loss));
            out.push((r.step, "val_auc", v.auc));
        }
    }
    out
}

/// Per-step mean and std across runs. All runs must share one step grid.
pub fn learning_curve(histories: &[TrainHistory]) -> Result<Vec<CurvePoint>> {
    let first = histories
        .first()
        .ok_or_else(|| Error::Arity("no histories to aggregate".into()))?;
    let grid: Vec<(usize, &str)> = series(first).iter().map(|&(s, m, _)| (s, m)).collect();
    let mut columns: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (run, h) in histories.iter().enumerate() {
        let s = series(h);
        let this: Vec<(usize, &str)> = s.iter().map(|&(st, m, _)| (st, m)).collect();
        if this != grid {
            return Err(Error::Alignment(format!(
                "run {run} has a different step grid from run 0"
            )));
        }
        for (i, &(_, _, v)) in s.iter().enumerate() {
            columns.entry(i).or_default().push(v);
        }
    }
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &(step, metric))| {
            let (mean, std) = mean_std(&columns[&i]);
            CurvePoint {
                step,
                metric: metric.to_string(),
                mean,
                std,
                n_runs: histories.len(),
            }
        })
        .collect())
}

/// Mean over runs of the last recorded validation AUC.
pub fn final_val_auc(histories: &[TrainHistory]) -> f64 {
    let finals: Vec<f64> = histories.iter().map(|h| h.final_validation().auc).collect();
    mean_std(&finals).0
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T], append: bool) -> Result<()> {
    let exists = append && path.exists();
    let file = fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(!exists).from_writer(file);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Append one row to a summary CSV, writing the header if the file is new.
pub fn append_summary(path: &Path, row: &SummaryRow) -> Result<()> {
    write_rows(path, std::slice::from_ref(row), true)
}

/// Write `learning_curve.csv` and `summary.csv` into `dir`.
pub fn emit_history(histories: &[TrainHistory], info: &ModelSummary, dir: &Path) -> Result<SummaryRow> {
    let curve = learning_curve(histories)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rows(&dir.join(LEARNING_CURVE_FILE), &curve, false)?;
    let row = SummaryRow::new(info, final_val_auc(histories));
    write_rows(&dir.join(SUMMARY_FILE), std::slice::from_ref(&row), false)?;
    Ok(row)
}
