//! Exhaustive brute-force oracles for every scalar metric: all 2^n
//! labelings of up to five samples with distinct scores. The oracles are
//! written independently (pairwise loops, threshold sweeps) but follow the
//! same documented tie and summation rules, so agreement is bit-for-bit.

use betarisk_core::error::Error;
use betarisk_core::metrics::{
    auc, brier, classification_metrics, ece, prc, EceMode, Scored, DEFAULT_ECE_BINS,
};

const SCORES: [f64; 5] = [0.9, 0.7, 0.5, 0.3, 0.1];

fn build(labels: &[u8]) -> Vec<Scored> {
    labels
        .iter()
        .zip(SCORES)
        .map(|(&label, risk)| Scored {
            label,
            risk,
            binary_pred: u8::from(risk >= 0.5),
        })
        .collect()
}

fn oracle_classification(s: &[Scored]) -> (f64, f64, f64) {
    let tp = s.iter().filter(|x| x.label == 1 && x.binary_pred == 1).count();
    let fp = s.iter().filter(|x| x.label == 0 && x.binary_pred == 1).count();
    let fn_ = s.iter().filter(|x| x.label == 1 && x.binary_pred == 0).count();
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (f1, precision, recall)
}

/// Pairwise rank statistic with integer half-credit accounting: two units
/// per win, one per tie, single final division.
fn oracle_auc(s: &[Scored]) -> Option<f64> {
    let pos: Vec<f64> = s.iter().filter(|x| x.label == 1).map(|x| x.risk).collect();
    let neg: Vec<f64> = s.iter().filter(|x| x.label == 0).map(|x| x.risk).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins2 = 0u64;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins2 += 2;
            } else if p == n {
                wins2 += 1;
            }
        }
    }
    Some(wins2 as f64 / (2 * pos.len() * neg.len()) as f64)
}

/// Threshold sweep over descending unique scores, rectangle rule
/// Σ (recall_k − recall_{k−1}) · precision_k.
fn oracle_prc(s: &[Scored]) -> Option<f64> {
    let n_pos = s.iter().filter(|x| x.label == 1).count();
    if n_pos == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = s.iter().map(|x| x.risk).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for &t in &thresholds {
        let tp = s.iter().filter(|x| x.label == 1 && x.risk >= t).count();
        let picked = s.iter().filter(|x| x.risk >= t).count();
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / picked as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(ap)
}

/// Equal-width bins over risk; per-bin sums in ascending value order (the
/// documented canonical order), count-weighted absolute gaps.
fn oracle_ece(s: &[Scored], bins: usize) -> f64 {
    let mut per_bin: Vec<Vec<(f64, u8)>> = vec![Vec::new(); bins];
    for x in s {
        let b = ((x.risk * bins as f64) as usize).min(bins - 1);
        per_bin[b].push((x.risk, x.label));
    }
    let n = s.len() as f64;
    let mut total = 0.0;
    for cell in &mut per_bin {
        if cell.is_empty() {
            continue;
        }
        cell.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let count = cell.len() as f64;
        let mean_risk: f64 = cell.iter().map(|(r, _)| r).sum::<f64>() / count;
        let pos_rate: f64 = cell.iter().map(|(_, l)| f64::from(*l)).sum::<f64>() / count;
        total += (count / n) * (mean_risk - pos_rate).abs();
    }
    total
}

fn oracle_brier(s: &[Scored]) -> f64 {
    let mut sq: Vec<f64> = s
        .iter()
        .map(|x| {
            let d = x.risk - f64::from(x.label);
            d * d
        })
        .collect();
    sq.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sq.iter().sum::<f64>() / s.len() as f64
}

#[test]
fn all_labelings_of_up_to_five_samples_match_bit_for_bit() {
    let mut checked = 0usize;
    for n in 1..=5usize {
        for mask in 0..(1u32 << n) {
            let labels: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            let s = build(&labels);

            let (f1, precision, recall, _) = classification_metrics(&s).unwrap();
            let (of1, op, or) = oracle_classification(&s);
            assert_eq!(f1, of1, "f1 for {labels:?}");
            assert_eq!(precision, op, "precision for {labels:?}");
            assert_eq!(recall, or, "recall for {labels:?}");

            match (auc(&s), oracle_auc(&s)) {
                (Ok(got), Some(want)) => assert_eq!(got, want, "auc for {labels:?}"),
                (Err(Error::UndefinedMetric(_)), None) => {}
                (got, want) => panic!("auc mismatch for {labels:?}: {got:?} vs {want:?}"),
            }

            match (prc(&s), oracle_prc(&s)) {
                (Ok(got), Some(want)) => assert_eq!(got, want, "prc for {labels:?}"),
                (Err(Error::UndefinedMetric(_)), None) => {}
                (got, want) => panic!("prc mismatch for {labels:?}: {got:?} vs {want:?}"),
            }

            assert_eq!(
                ece(&s, DEFAULT_ECE_BINS, EceMode::PositiveClass).unwrap(),
                oracle_ece(&s, DEFAULT_ECE_BINS),
                "ece for {labels:?}"
            );
            assert_eq!(brier(&s).unwrap(), oracle_brier(&s), "brier for {labels:?}");
            checked += 1;
        }
    }
    assert_eq!(checked, 2 + 4 + 8 + 16 + 32);
}

/// The same exhaustive sweep with ties present, pinning the documented
/// tie rules (half-credit AUC, grouped-threshold average precision).
#[test]
fn tied_scores_follow_documented_rules() {
    let tied_scores = [0.7, 0.7, 0.5, 0.3, 0.3];
    for mask in 0..(1u32 << 5) {
        let labels: Vec<u8> = (0..5).map(|i| ((mask >> i) & 1) as u8).collect();
        let s: Vec<Scored> = labels
            .iter()
            .zip(tied_scores)
            .map(|(&label, risk)| Scored {
                label,
                risk,
                binary_pred: u8::from(risk >= 0.5),
            })
            .collect();
        match (auc(&s), oracle_auc(&s)) {
            (Ok(got), Some(want)) => assert_eq!(got, want, "auc for {labels:?}"),
            (Err(Error::UndefinedMetric(_)), None) => {}
            (got, want) => panic!("auc mismatch for {labels:?}: {got:?} vs {want:?}"),
        }
        match (prc(&s), oracle_prc(&s)) {
            (Ok(got), Some(want)) => assert_eq!(got, want, "prc for {labels:?}"),
            (Err(Error::UndefinedMetric(_)), None) => {}
            (got, want) => panic!("prc mismatch for {labels:?}: {got:?} vs {want:?}"),
        }
    }
}
