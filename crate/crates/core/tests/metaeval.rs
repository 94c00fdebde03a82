use std::collections::BTreeMap;

use proptest::prelude::*;
use slidescore_core::metaeval::*;

fn labeled(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    proptest::collection::vec((0u8..8, any::<bool>()), n)
        .prop_map(|v| (v.iter().map(|(s, _)| *s as f64 / 8.0).collect(), v.iter().map(|(_, l)| *l).collect()))
        .prop_filter("both classes", |(_, l): &(Vec<f64>, Vec<bool>)| l.iter().any(|x| *x) && l.iter().any(|x| !*x))
}

/// Counts concordant pairs directly.
fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                den += 1.0;
                num += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
            }
        }
    }
    num / den
}

/// Every cut between sorted scores, plus both ends.
fn brute_force_best_f2(scores: &[f64], labels: &[bool]) -> f64 {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut cuts = vec![sorted[0] - 1.0, sorted[sorted.len() - 1] + 1.0];
    for w in sorted.windows(2) {
        cuts.push(w[0]);
        cuts.push((w[0] + w[1]) / 2.0);
    }
    cuts.push(sorted[sorted.len() - 1]);
    cuts.into_iter()
        .filter_map(|t| {
            let (tp, fp, fn_) = confusion_at(scores, labels, t);
            f_beta(tp, fp, fn_, 2.0).ok()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn auc_matches_pairwise_count((s, l) in labeled(20)) {
        prop_assert!((roc_auc(&s, &l).unwrap() - pairwise_auc(&s, &l)).abs() < 1e-12);
    }

    #[test]
    fn auc_invariant_under_monotone_transform((s, l) in labeled(15)) {
        let t: Vec<f64> = s.iter().map(|x| (3.0 * x).exp() - 7.0).collect();
        prop_assert_eq!(roc_auc(&s, &l).unwrap(), roc_auc(&t, &l).unwrap());
    }

    #[test]
    fn threshold_matches_brute_force((s, l) in labeled(6)) {
        let c = optimal_f2_threshold(&s, &l).unwrap();
        prop_assert!((c.f2 - brute_force_best_f2(&s, &l)).abs() < 1e-12);
        let (tp, fp, fn_) = confusion_at(&s, &l, c.threshold);
        prop_assert_eq!(c.f2, f_beta(tp, fp, fn_, 2.0).unwrap());
        prop_assert_eq!(c.f1, f_beta(tp, fp, fn_, 1.0).unwrap());
    }

    #[test]
    fn f2_vs_f1_follows_precision_recall(tp in 1u64..50, fp in 0u64..50, fn_ in 0u64..50) {
        let p = tp as f64 / (tp + fp) as f64;
        let r = tp as f64 / (tp + fn_) as f64;
        let (f1, f2) = (f_beta(tp, fp, fn_, 1.0).unwrap(), f_beta(tp, fp, fn_, 2.0).unwrap());
        if r >= p {
            prop_assert!(f2 >= f1 - 1e-12);
        } else {
            prop_assert!(f2 <= f1 + 1e-12);
        }
    }

    #[test]
    fn metaeval_ignores_record_order((s, l) in labeled(12), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut labels: Vec<LabeledRecord> = Vec::new();
        let mut preds: Vec<Prediction> = Vec::new();
        for (i, (score, lab)) in s.iter().zip(&l).enumerate() {
            let id = format!("s{i:02}");
            labels.push(LabeledRecord {
                sample_id: id.clone(),
                defect_labels: [(Dimension::Collision, if *lab { Label::Defect } else { Label::Ok })].into(),
                metric_values: None,
            });
            preds.push(Prediction { sample_id: id, scores: [(Dimension::Collision, *score)].into() });
        }
        let a = metaeval(&labels, &preds).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        labels.shuffle(&mut rng);
        preds.shuffle(&mut rng);
        prop_assert_eq!(a, metaeval(&labels, &preds).unwrap());
    }
}

#[test]
fn random_scores_give_chance_auc() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let n = 4000;
    let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.3)).collect();
    let auc = roc_auc(&scores, &labels).unwrap();
    assert!((auc - 0.5).abs() < 3.0 / (n as f64).sqrt(), "{auc}");
}

#[test]
fn constant_predictions_give_half() {
    let labels: Vec<LabeledRecord> = (0..10)
        .map(|i| LabeledRecord {
            sample_id: i.to_string(),
            defect_labels: Dimension::ALL.into_iter().map(|d| (d, if i < 3 { Label::Defect } else { Label::Ok })).collect(),
            metric_values: None,
        })
        .collect();
    let preds: Vec<Prediction> = (0..10)
        .map(|i| Prediction { sample_id: i.to_string(), scores: Dimension::ALL.into_iter().map(|d| (d, 0.5)).collect::<BTreeMap<_, _>>() })
        .collect();
    let r = metaeval(&labels, &preds).unwrap();
    assert!(r.dimensions.values().all(|d| d.roc_auc == 0.5));
    let table = render_table(&r);
    assert!(table.contains("collision") && table.contains("0.500"));
}
