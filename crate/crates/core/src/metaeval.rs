//! Meta-evaluation of the metrics against labeled defect data: F-beta,
//! ROC-AUC and optimal-F2 thresholding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reward::{aspect_reward, MetricReport, ShapingConfig};

#[derive(Debug, Error, PartialEq)]
pub enum MetaEvalError {
    #[error("confusion counts are all zero")]
    Empty,
    #[error("need at least one positive and one negative label")]
    DegenerateLabels,
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("non-finite score")]
    NonFiniteScore,
    #[error("sample ids do not align; missing predictions: {missing_predictions:?}; missing labels: {missing_labels:?}")]
    IdMismatch { missing_predictions: Vec<String>, missing_labels: Vec<String> },
    #[error("duplicate sample_id {0:?}")]
    DuplicateId(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("record {0:?} has no applicable label")]
    NoApplicableLabel(String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Aspect,
    Whitespace,
    Collision,
    Imbalance,
}

impl Dimension {
    pub const ALL: [Dimension; 4] =
        [Dimension::Aspect, Dimension::Whitespace, Dimension::Collision, Dimension::Imbalance];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Aspect => "aspect",
            Dimension::Whitespace => "whitespace",
            Dimension::Collision => "collision",
            Dimension::Imbalance => "imbalance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Defect,
    Ok,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub sample_id: String,
    pub defect_labels: BTreeMap<Dimension, Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_values: Option<BTreeMap<Dimension, f64>>,
}

/// Defect scores for one sample; higher means more defective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    pub scores: BTreeMap<Dimension, f64>,
}

/// Orients a metric report so that higher is worse in every dimension.
///
/// Aspect uses `1 - aspect_reward`; the other three are already defect-positive.
pub fn defect_scores(report: &MetricReport, shaping: &ShapingConfig) -> BTreeMap<Dimension, f64> {
    let mut out = BTreeMap::new();
    if let Some(r) = report.aspect_ratio.and_then(|x| aspect_reward(x, shaping).ok()) {
        out.insert(Dimension::Aspect, 1.0 - r);
    }
    if let Some(w) = report.whitespace_ratio {
        out.insert(Dimension::Whitespace, w);
    }
    if let Some(c) = report.collision_score {
        out.insert(Dimension::Collision, c);
    }
    if let Some(d) = report.imbalance_d {
        out.insert(Dimension::Imbalance, d);
    }
    out
}

/// `(1+β²)PR / (β²P + R)`, with 0 whenever a ratio is undefined.
pub fn f_beta(tp: u64, fp: u64, fn_: u64, beta: f64) -> Result<f64, MetaEvalError> {
    if tp + fp + fn_ == 0 {
        return Err(MetaEvalError::Empty);
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let p = tp as f64 / (tp + fp) as f64;
    let r = tp as f64 / (tp + fn_) as f64;
    let b2 = beta * beta;
    Ok((1.0 + b2) * p * r / (b2 * p + r))
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize), MetaEvalError> {
    if scores.len() != labels.len() {
        return Err(MetaEvalError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetaEvalError::NonFiniteScore);
    }
    let pos = labels.iter().filter(|l| **l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetaEvalError::DegenerateLabels);
    }
    Ok((pos, neg))
}

/// Mann-Whitney AUC with average ranks for ties.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetaEvalError> {
    let (pos, neg) = check(scores, labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += idx[i..=j].iter().filter(|&&k| labels[k]).count() as f64 * avg_rank;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    /// Samples with `score >= threshold` are flagged as defects.
    pub threshold: f64,
    pub f1: f64,
    pub f2: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

pub fn confusion_at(scores: &[f64], labels: &[bool], threshold: f64) -> (u64, u64, u64) {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (s, &l) in scores.iter().zip(labels) {
        match (*s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    (tp, fp, fn_)
}

/// Picks the distinct score value that maximizes F2; ties go to the higher
/// threshold (fewer flagged samples).
pub fn optimal_f2_threshold(scores: &[f64], labels: &[bool]) -> Result<ThresholdChoice, MetaEvalError> {
    check(scores, labels)?;
    let mut candidates = scores.to_vec();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // Sweep from the top; a running tally keeps this O(n log n).
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let total_pos = labels.iter().filter(|l| **l).count() as u64;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut cursor = 0;
    let mut best: Option<ThresholdChoice> = None;
    for &t in candidates.iter().rev() {
        while cursor < order.len() && scores[order[cursor]] >= t {
            if labels[order[cursor]] {
                tp += 1;
            } else {
                fp += 1;
            }
            cursor += 1;
        }
        let fn_ = total_pos - tp;
        let f2 = f_beta(tp, fp, fn_, 2.0)?;
        if best.is_none_or(|b| f2 > b.f2) {
            best = Some(ThresholdChoice { threshold: t, f1: f_beta(tp, fp, fn_, 1.0)?, f2, tp, fp, fn_ });
        }
    }
    Ok(best.expect("at least one candidate"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionResult {
    pub f1: f64,
    pub f2: f64,
    pub roc_auc: f64,
    pub chosen_threshold: f64,
    pub support_pos: usize,
    pub support_neg: usize,
    /// Labeled samples left out because the prediction had no score.
    pub missing_scores: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetaEvalResult {
    pub dimensions: BTreeMap<Dimension, DimensionResult>,
    /// Dimensions with only one label class, which cannot be scored.
    pub skipped: BTreeMap<Dimension, String>,
}

pub fn metaeval(labels: &[LabeledRecord], predictions: &[Prediction]) -> Result<MetaEvalResult, MetaEvalError> {
    let mut preds: BTreeMap<&str, &Prediction> = BTreeMap::new();
    for p in predictions {
        if preds.insert(p.sample_id.as_str(), p).is_some() {
            return Err(MetaEvalError::DuplicateId(p.sample_id.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    for r in labels {
        if !seen.insert(r.sample_id.as_str()) {
            return Err(MetaEvalError::DuplicateId(r.sample_id.clone()));
        }
        if r.defect_labels.values().all(|l| *l == Label::NotApplicable) {
            return Err(MetaEvalError::NoApplicableLabel(r.sample_id.clone()));
        }
    }
    let missing_predictions: Vec<String> =
        seen.iter().filter(|id| !preds.contains_key(*id)).map(|s| s.to_string()).collect();
    let missing_labels: Vec<String> =
        preds.keys().filter(|id| !seen.contains(*id)).map(|s| s.to_string()).collect();
    if !missing_predictions.is_empty() || !missing_labels.is_empty() {
        return Err(MetaEvalError::IdMismatch { missing_predictions, missing_labels });
    }

    // Sorting by id makes the result independent of record order.
    let mut sorted: Vec<&LabeledRecord> = labels.iter().collect();
    sorted.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));

    let mut result = MetaEvalResult::default();
    for dim in Dimension::ALL {
        let mut scores = Vec::new();
        let mut truth = Vec::new();
        let mut missing = 0;
        for r in &sorted {
            let positive = match r.defect_labels.get(&dim) {
                Some(Label::Defect) => true,
                Some(Label::Ok) => false,
                _ => continue,
            };
            match preds[r.sample_id.as_str()].scores.get(&dim) {
                Some(s) => {
                    scores.push(*s);
                    truth.push(positive);
                }
                None => missing += 1,
            }
        }
        if scores.is_empty() {
            continue;
        }
        let (auc, choice) = match (roc_auc(&scores, &truth), optimal_f2_threshold(&scores, &truth)) {
            (Ok(a), Ok(c)) => (a, c),
            (Err(e), _) | (_, Err(e)) => {
                result.skipped.insert(dim, e.to_string());
                continue;
            }
        };
        let support_pos = truth.iter().filter(|t| **t).count();
        result.dimensions.insert(
            dim,
            DimensionResult {
                f1: choice.f1,
                f2: choice.f2,
                roc_auc: auc,
                chosen_threshold: choice.threshold,
                support_pos,
                support_neg: truth.len() - support_pos,
                missing_scores: missing,
            },
        );
    }
    Ok(result)
}

pub fn render_table(result: &MetaEvalResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<11} {:>6} {:>6} {:>7} {:>10} {:>5} {:>5}", "dimension", "F1", "F2", "ROC-AUC", "threshold", "pos", "neg");
    for (dim, r) in &result.dimensions {
        let _ = writeln!(
            s,
            "{:<11} {:>6.3} {:>6.3} {:>7.3} {:>10.4} {:>5} {:>5}",
            dim.name(),
            r.f1,
            r.f2,
            r.roc_auc,
            r.chosen_threshold,
            r.support_pos,
            r.support_neg
        );
    }
    for (dim, why) in &result.skipped {
        let _ = writeln!(s, "{:<11} skipped: {why}", dim.name());
    }
    s
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, MetaEvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| MetaEvalError::Io(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

pub fn parse_labels(text: &str) -> Result<Vec<LabeledRecord>, MetaEvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| MetaEvalError::Parse { line: i + 1, message: e.to_string() })
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<LabeledRecord>, MetaEvalError> {
    let text = read_lines(path)?.into_iter().map(|(_, l)| l).collect::<Vec<_>>().join("\n");
    parse_labels(&text)
}

/// Parses one prediction line.
///
/// Accepts either `{"sample_id", "scores": {...}}` or a scoring result with
/// `request_id`/`sample_id` and a `metric_report`, which is oriented with
/// [`defect_scores`].
pub fn parse_prediction(line: &str, shaping: &ShapingConfig) -> Result<Prediction, String> {
    let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id = v
        .get("sample_id")
        .or_else(|| v.get("request_id"))
        .and_then(|x| x.as_str())
        .ok_or("missing sample_id/request_id")?
        .to_string();
    if let Some(scores) = v.get("scores") {
        let scores = serde_json::from_value(scores.clone()).map_err(|e| e.to_string())?;
        return Ok(Prediction { sample_id: id, scores });
    }
    match v.get("metric_report") {
        Some(report) => {
            let report: MetricReport = serde_json::from_value(report.clone()).map_err(|e| e.to_string())?;
            Ok(Prediction { sample_id: id, scores: defect_scores(&report, shaping) })
        }
        // An error record from a batch run carries no scores.
        None if v.get("error").is_some() => Ok(Prediction { sample_id: id, scores: BTreeMap::new() }),
        None => Err("expected `scores` or `metric_report`".into()),
    }
}

pub fn parse_predictions(text: &str, shaping: &ShapingConfig) -> Result<Vec<Prediction>, MetaEvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_prediction(l, shaping).map_err(|message| MetaEvalError::Parse { line: i + 1, message }))
        .collect()
}

pub fn read_predictions(path: &Path, shaping: &ShapingConfig) -> Result<Vec<Prediction>, MetaEvalError> {
    let text = read_lines(path)?.into_iter().map(|(_, l)| l).collect::<Vec<_>>().join("\n");
    parse_predictions(&text, shaping)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_beta_examples() {
        assert_eq!(f_beta(10, 0, 0, 1.0).unwrap(), 1.0);
        assert_eq!(f_beta(10, 0, 0, 2.0).unwrap(), 1.0);
        assert!((f_beta(1, 1, 1, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((f_beta(1, 1, 1, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((f_beta(2, 0, 8, 2.0).unwrap() - 1.0 / 4.2).abs() < 1e-15);
        assert_eq!(f_beta(0, 0, 0, 1.0), Err(MetaEvalError::Empty));
        assert_eq!(f_beta(0, 3, 2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn auc_examples() {
        let labels = [false, false, true, true];
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &labels).unwrap(), 0.0);
        assert_eq!(roc_auc(&[0.3; 4], &labels).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.3; 2], &[true, true]), Err(MetaEvalError::DegenerateLabels));
    }

    #[test]
    fn separable_threshold_tiebreak() {
        let c = optimal_f2_threshold(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(c.threshold, 0.8);
        assert_eq!(c.f2, 1.0);
        assert_eq!(optimal_f2_threshold(&[0.1, 0.2], &[true, true]), Err(MetaEvalError::DegenerateLabels));
    }

    #[test]
    fn perfect_predictions() {
        let mut labels = Vec::new();
        let mut preds = Vec::new();
        for i in 0..6 {
            let defect = i % 2 == 0;
            let id = format!("s{i}");
            labels.push(LabeledRecord {
                sample_id: id.clone(),
                defect_labels: Dimension::ALL
                    .into_iter()
                    .map(|d| (d, if defect { Label::Defect } else { Label::Ok }))
                    .collect(),
                metric_values: None,
            });
            preds.push(Prediction {
                sample_id: id,
                scores: Dimension::ALL.into_iter().map(|d| (d, if defect { 1.0 } else { 0.0 })).collect(),
            });
        }
        let r = metaeval(&labels, &preds).unwrap();
        assert_eq!(r.dimensions.len(), 4);
        for d in r.dimensions.values() {
            assert_eq!((d.f1, d.f2, d.roc_auc), (1.0, 1.0, 1.0));
            assert_eq!((d.support_pos, d.support_neg), (3, 3));
        }
    }

    #[test]
    fn id_mismatch_lists_ids() {
        let labels = vec![LabeledRecord {
            sample_id: "a".into(),
            defect_labels: [(Dimension::Aspect, Label::Ok)].into(),
            metric_values: None,
        }];
        let preds = vec![Prediction { sample_id: "b".into(), scores: BTreeMap::new() }];
        match metaeval(&labels, &preds) {
            Err(MetaEvalError::IdMismatch { missing_predictions, missing_labels }) => {
                assert_eq!(missing_predictions, vec!["a"]);
                assert_eq!(missing_labels, vec!["b"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn not_applicable_is_per_dimension() {
        let rec = |id: &str, a: Label, w: Label| LabeledRecord {
            sample_id: id.into(),
            defect_labels: [(Dimension::Aspect, a), (Dimension::Whitespace, w)].into(),
            metric_values: None,
        };
        let labels = vec![
            rec("1", Label::Defect, Label::NotApplicable),
            rec("2", Label::Ok, Label::Defect),
            rec("3", Label::Ok, Label::Ok),
        ];
        let pred = |id: &str| Prediction {
            sample_id: id.into(),
            scores: [(Dimension::Aspect, 0.5), (Dimension::Whitespace, 0.5)].into(),
        };
        let r = metaeval(&labels, &[pred("1"), pred("2"), pred("3")]).unwrap();
        assert_eq!(r.dimensions[&Dimension::Aspect].support_pos + r.dimensions[&Dimension::Aspect].support_neg, 3);
        assert_eq!(r.dimensions[&Dimension::Whitespace].support_pos + r.dimensions[&Dimension::Whitespace].support_neg, 2);
    }

    #[test]
    fn prediction_lines() {
        let s = ShapingConfig::default();
        let p = parse_prediction(r#"{"sample_id":"x","scores":{"collision":0.3}}"#, &s).unwrap();
        assert_eq!(p.scores[&Dimension::Collision], 0.3);
        let p = parse_prediction(
            r#"{"request_id":"y","metric_report":{"aspect_ratio":1.7777777777777777,"whitespace_ratio":0.4,"collision_score":null,"imbalance_d":1.0,"render_error":null}}"#,
            &s,
        )
        .unwrap();
        assert!(p.scores[&Dimension::Aspect].abs() < 1e-12);
        assert!(!p.scores.contains_key(&Dimension::Collision));
        let p = parse_prediction(r#"{"request_id":"z","error":{"status":400,"message":"empty"}}"#, &s).unwrap();
        assert!(p.scores.is_empty());
    }
}
