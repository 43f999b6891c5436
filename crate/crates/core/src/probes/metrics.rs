use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::textproc::{is_punct, tokenize};

/// Lowercased tokens with pure-punctuation tokens dropped.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().filter(|t| !is_punct(&t.surface)).map(|t| t.surface).collect()
}

fn token_f1(pred: &[String], gold: &[String]) -> f64 {
    if pred.is_empty() || gold.is_empty() {
        return if pred.is_empty() && gold.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for g in gold {
        *counts.entry(g).or_default() += 1;
    }
    let mut common = 0;
    for p in pred {
        if let Some(c) = counts.get_mut(p.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Token F1 against the best-matching gold.
pub fn f1_score(prediction: &str, golds: &[String]) -> Result<f64, ProbeError> {
    if golds.is_empty() {
        return Err(ProbeError::NoGold);
    }
    let pred = normalize_tokens(prediction);
    Ok(golds.iter().map(|g| token_f1(&pred, &normalize_tokens(g))).fold(0.0, f64::max))
}

/// Normalized token sequences are equal for some gold.
pub fn exact_match(prediction: &str, golds: &[String]) -> Result<bool, ProbeError> {
    if golds.is_empty() {
        return Err(ProbeError::NoGold);
    }
    let pred = normalize_tokens(prediction);
    Ok(golds.iter().any(|g| normalize_tokens(g) == pred))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub em: f64,
    pub f1: f64,
    pub n: usize,
}

impl EvalResult {
    /// Averages per-instance (em, f1) pairs.
    pub fn from_scores(scores: &[(bool, f64)]) -> Result<Self, ProbeError> {
        if scores.is_empty() {
            return Err(ProbeError::EmptyTestSet);
        }
        let n = scores.len();
        let em = scores.iter().filter(|s| s.0).count() as f64 / n as f64;
        let f1 = scores.iter().map(|s| s.1).sum::<f64>() / n as f64;
        Ok(EvalResult { em, f1, n })
    }
}

/// Mean and population standard deviation.
pub fn aggregate_runs(values: &[f64]) -> Result<(f64, f64), ProbeError> {
    if values.is_empty() {
        return Err(ProbeError::EmptyInput);
    }
    // Summing in sorted order makes the result independent of input order.
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Trailing mean over the last `window` points; early points average what
/// is available.
pub fn smooth_trailing(series: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            let part = &series[lo..=i];
            part.iter().sum::<f64>() / part.len() as f64
        })
        .collect()
}

/// First step at which the curve reaches `threshold`, linearly interpolated
/// between the two straddling checkpoints. `None` when never reached.
pub fn steps_to_threshold(curve: &[(usize, f64)], threshold: f64) -> Option<f64> {
    let i = curve.iter().position(|&(_, v)| v >= threshold)?;
    if i == 0 {
        return Some(curve[0].0 as f64);
    }
    let (s0, v0) = (curve[i - 1].0 as f64, curve[i - 1].1);
    let (s1, v1) = (curve[i].0 as f64, curve[i].1);
    Some(s0 + (threshold - v0) / (v1 - v0) * (s1 - s0))
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}
