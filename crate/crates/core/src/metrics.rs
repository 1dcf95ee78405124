//! Scores against labels: ROC/AUC with the half-tie term, precision-recall
//! and average precision, and the F1/sensitivity pair of a top-fraction
//! decision rule.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{math, Error, Label, LabelVector, Result, ScoreVector};

fn check_lengths(scores: &ScoreVector, labels: &LabelVector) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(alloc::format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    Ok(())
}

fn class_counts(labels: &LabelVector) -> (usize, usize) {
    let pos = labels.n_anomalies();
    (pos, labels.len() - pos)
}

/// Indices sorted by descending score; equal scores keep input order.
fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Groups of the descending order that share a score: `(positives, negatives)`.
fn tie_groups(scores: &[f64], labels: &LabelVector) -> Vec<(usize, usize)> {
    let order = descending_order(scores);
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut last: Option<f64> = None;
    for i in order {
        if last != Some(scores[i]) {
            groups.push((0, 0));
            last = Some(scores[i]);
        }
        let g = groups.last_mut().expect("group pushed above");
        if labels.0[i].is_anomaly() {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

/// `P(s+ > s-) + P(s+ = s-) / 2` from midranks.
pub fn auc(scores: &ScoreVector, labels: &LabelVector) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes".into()));
    }
    // walk groups from the lowest score: each positive beats every negative
    // strictly below and ties half of those in its own group
    let mut below = 0usize;
    let mut twice_wins = 0u128;
    for &(p, n) in tie_groups(scores.as_slice(), labels).iter().rev() {
        twice_wins += (p as u128) * (2 * below as u128 + n as u128);
        below += n;
    }
    Ok(twice_wins as f64 / (2.0 * pos as f64 * neg as f64))
}

/// `(x, y)` points of a threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<(f64, f64)>,
}

pub type RocCurve = Curve;
pub type PrCurve = Curve;

/// `(FPR, TPR)` from `(0, 0)` to `(1, 1)`, one point per distinct score.
pub fn roc_curve(scores: &ScoreVector, labels: &LabelVector) -> Result<RocCurve> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric("ROC needs both classes".into()));
    }
    let mut points = alloc::vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (p, n) in tie_groups(scores.as_slice(), labels) {
        tp += p;
        fp += n;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(Curve { points })
}

/// `(recall, precision)`, one point per distinct score, descending.
pub fn pr_curve(scores: &ScoreVector, labels: &LabelVector) -> Result<PrCurve> {
    check_lengths(scores, labels)?;
    let (pos, _) = class_counts(labels);
    if pos == 0 {
        return Err(Error::UndefinedMetric("precision-recall needs a positive".into()));
    }
    let mut points = Vec::new();
    let (mut tp, mut seen) = (0usize, 0usize);
    for (p, n) in tie_groups(scores.as_slice(), labels) {
        tp += p;
        seen += p + n;
        points.push((tp as f64 / pos as f64, tp as f64 / seen as f64));
    }
    Ok(Curve { points })
}

/// `sum_k (R_k - R_{k-1}) P_k` over the distinct thresholds.
pub fn average_precision(scores: &ScoreVector, labels: &LabelVector) -> Result<f64> {
    let pr = pr_curve(scores, labels)?;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for &(r, p) in &pr.points {
        ap += (r - prev_recall) * p;
        prev_recall = r;
    }
    Ok(ap)
}

/// Number flagged by the top-fraction rule: `ceil(alpha * n)`.
pub fn top_fraction_count(alpha: f64, n: usize) -> usize {
    // the small slack keeps alpha * n integral when alpha = k / n is inexact
    (math::ceil(alpha * n as f64 - 1e-9) as usize).clamp(1, n.max(1))
}

/// Flags the `ceil(alpha * n)` highest scores; ties keep input order.
pub fn classify_top_fraction(scores: &ScoreVector, alpha: f64) -> Result<LabelVector> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(alloc::format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let n = scores.len();
    let mut labels = alloc::vec![Label::Normal; n];
    if n == 0 {
        return Ok(LabelVector(labels));
    }
    for &i in descending_order(scores.as_slice())
        .iter()
        .take(top_fraction_count(alpha, n))
    {
        labels[i] = Label::Anomaly;
    }
    Ok(LabelVector(labels))
}

/// `(F1, p_c)` with `F1 = 2TP / (2TP + FP + FN)` and `p_c = TP / (TP + FN)`.
pub fn f1_and_sensitivity(predicted: &LabelVector, truth: &LabelVector) -> Result<(f64, f64)> {
    if predicted.len() != truth.len() {
        return Err(Error::Dimension("predicted and true labels differ in length".into()));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (p, t) in predicted.iter().zip(truth.iter()) {
        match (p.is_anomaly(), t.is_anomaly()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp + fn_ == 0 {
        return Err(Error::UndefinedMetric("sensitivity needs a true anomaly".into()));
    }
    let f1 = 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
    Ok((f1, tp as f64 / (tp + fn_) as f64))
}

/// Decision rule used for F1 and `p_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    pub rule: String,
    pub alpha: f64,
    pub n_flagged: usize,
    pub ties: String,
}

impl ThresholdRule {
    pub fn top_fraction(alpha: f64, n: usize) -> Self {
        ThresholdRule {
            rule: "top-fraction".into(),
            alpha,
            n_flagged: top_fraction_count(alpha, n),
            ties: "stable input order".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f1: f64,
    pub ap: f64,
    pub auc: f64,
    pub p_c: f64,
    pub threshold_rule: ThresholdRule,
}

/// All four metrics, thresholding at `alpha` (usually the true anomaly rate).
pub fn evaluate(scores: &ScoreVector, labels: &LabelVector, alpha: f64) -> Result<EvalReport> {
    let predicted = classify_top_fraction(scores, alpha)?;
    let (f1, p_c) = f1_and_sensitivity(&predicted, labels)?;
    Ok(EvalReport {
        f1,
        ap: average_precision(scores, labels)?,
        auc: auc(scores, labels)?,
        p_c,
        threshold_rule: ThresholdRule::top_fraction(alpha, scores.len()),
    })
}
