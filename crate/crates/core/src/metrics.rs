//! Ranking and thresholded classification metrics, plus report emission.
//!
//! Positive class (label 1) is "hallucinated" throughout.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidArgument(format!("label {bad} is not binary")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    Ok((pos, labels.len() - pos))
}

/// Indices sorted by score (ascending), ties adjacent.
fn sorted_by_score(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    idx
}

/// Runs of equal scores as (positives, negatives), in ascending score order.
fn tie_groups(scores: &[f64], labels: &[u8]) -> Vec<(u64, u64)> {
    let idx = sorted_by_score(scores);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let s = scores[idx[i]];
        let (mut p, mut n) = (0u64, 0u64);
        while i < idx.len() && scores[idx[i]] == s {
            if labels[idx[i]] == 1 {
                p += 1;
            } else {
                n += 1;
            }
            i += 1;
        }
        groups.push((p, n));
    }
    groups
}

/// Mann-Whitney AUROC: probability a random positive outscores a random
/// negative, ties credited one half.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    // twice the Mann-Whitney U statistic, kept integral
    let mut doubled: u128 = 0;
    let mut neg_below: u64 = 0;
    for (p, n) in tie_groups(scores, labels) {
        doubled += u128::from(p) * u128::from(2 * neg_below + n);
        neg_below += n;
    }
    Ok(doubled as f64 / (2 * pos as u128 * neg as u128) as f64)
}

/// Average precision: mean over positives of the precision at the threshold
/// where each is retrieved (tied scores retrieved together).
pub fn aupr(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, _) = check_inputs(scores, labels)?;
    if pos == 0 {
        return Err(Error::InvalidArgument(
            "AUPR needs at least one positive".into(),
        ));
    }
    let mut sum = 0.0;
    let (mut tp, mut seen) = (0u64, 0u64);
    for (p, n) in tie_groups(scores, labels).into_iter().rev() {
        tp += p;
        seen += p + n;
        if p > 0 {
            sum += p as f64 * (tp as f64 / seen as f64);
        }
    }
    Ok(sum / pos as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn accuracy(&self) -> f64 {
        let total = self.tp + self.fp + self.tn + self.fn_;
        (self.tp + self.tn) as f64 / total as f64
    }

    /// 2TP / (2TP + FP + FN); 0 when the denominator is 0.
    pub fn f1(&self) -> f64 {
        let den = 2 * self.tp + self.fp + self.fn_;
        if den == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / den as f64
        }
    }
}

pub fn confusion_and_scores(preds: &[u8], labels: &[u8]) -> Result<(Counts, f64, f64)> {
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: preds.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::InvalidArgument("no predictions".into()));
    }
    let mut c = Counts::default();
    for (&p, &l) in preds.iter().zip(labels) {
        match (p != 0, l != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok((c, c.f1(), c.accuracy()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auroc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aupr: Option<f64>,
    pub f1: f64,
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Counts>,
    #[serde(default)]
    pub config: Value,
}

impl EvalReport {
    /// Scores feed AUROC/AUPR; thresholded predictions feed F1/accuracy.
    pub fn from_scores(
        dataset: impl Into<String>,
        method: impl Into<String>,
        scores: &[f64],
        preds: &[u8],
        labels: &[u8],
        config: Value,
    ) -> Result<Self> {
        let (counts, f1, accuracy) = confusion_and_scores(preds, labels)?;
        Ok(EvalReport {
            dataset: dataset.into(),
            method: method.into(),
            auroc: Some(auroc(scores, labels)?),
            aupr: Some(aupr(scores, labels)?),
            f1,
            accuracy,
            counts: Some(counts),
            config,
        })
    }

    pub const TABLE_HEADER: &'static str =
        "dataset    method                AUROC     AUPR       F1 Accuracy";

    pub fn table_row(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "--".to_string(), |x| format!("{x:.4}"));
        format!(
            "{:<10} {:<18} {:>8} {:>8} {:>8} {:>8}",
            self.dataset,
            self.method,
            cell(self.auroc),
            cell(self.aupr),
            cell(Some(self.f1)),
            cell(Some(self.accuracy)),
        )
    }

    /// Sorted-key JSON with metric fields fixed to 6 decimals.
    pub fn to_canonical_json(&self) -> Result<String> {
        let v = serde_json::to_value(self)?;
        let mut out = String::new();
        write_canonical(&v, &mut out, 0, &["auroc", "aupr", "f1", "accuracy"]);
        out.push('\n');
        Ok(out)
    }
}

fn write_canonical(v: &Value, out: &mut String, indent: usize, fixed_keys: &[&str]) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(indent + 1), Value::String((*k).clone()));
                let child = &map[k.as_str()];
                match child {
                    Value::Number(n) if fixed_keys.contains(&k.as_str()) => {
                        let _ = write!(out, "{:.6}", n.as_f64().unwrap_or(f64::NAN));
                    }
                    // fixed formatting applies to the top-level metrics only
                    _ => write_canonical(child, out, indent + 1, &[]),
                }
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}}}", pad(indent));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_canonical(item, out, indent + 1, &[]);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}]", pad(indent));
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Writes `path` (JSON) and a sibling `.txt` holding the table header and row.
pub fn emit_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report.to_canonical_json()?).map_err(|e| Error::io(path, e))?;
    let txt = path.with_extension("txt");
    let table = format!("{}\n{}\n", EvalReport::TABLE_HEADER, report.table_row());
    std::fs::write(&txt, table).map_err(|e| Error::io(&txt, e))?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&raw)?)
}
