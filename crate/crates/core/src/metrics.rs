//! Classification, calibration, and ensemble evaluation. Tie handling is
//! pinned so every metric matches an exhaustive brute-force oracle
//! bit-for-bit: AUC gives half credit to ties via exact integer pair
//! counting; average precision processes tied scores as one group.

use serde::{Deserialize, Serialize};

use crate::beta::BetaParams;
use crate::error::{Error, Result};

pub const DEFAULT_ECE_BINS: usize = 15;

/// One scored sample as produced by model inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: usize,
    pub label: u8,
    pub alpha: f64,
    pub beta: f64,
    /// Mean of the predicted Beta.
    pub risk: f64,
    pub std_dev: f64,
    /// risk ≥ 0.5.
    pub binary_pred: u8,
}

impl PredictionRecord {
    pub fn new(sample_id: usize, label: u8, params: &BetaParams) -> Result<Self> {
        if label > 1 {
            return Err(Error::Domain(format!("label must be 0 or 1, got {label}")));
        }
        let risk = params.mean();
        Ok(Self {
            sample_id,
            label,
            alpha: params.alpha(),
            beta: params.beta(),
            risk,
            std_dev: params.std_dev(),
            binary_pred: u8::from(risk >= 0.5),
        })
    }

    /// Consistency check for records read from external files.
    pub fn validate(&self) -> Result<()> {
        if self.label > 1 {
            return Err(Error::Structural(format!(
                "record {}: label {} is not binary",
                self.sample_id, self.label
            )));
        }
        let params = BetaParams::new(self.alpha, self.beta)?;
        if (self.risk - params.mean()).abs() > 1e-12 {
            return Err(Error::Structural(format!(
                "record {}: risk {} disagrees with alpha/(alpha+beta) = {}",
                self.sample_id,
                self.risk,
                params.mean()
            )));
        }
        if self.binary_pred != u8::from(self.risk >= 0.5) {
            return Err(Error::Structural(format!(
                "record {}: binary_pred {} disagrees with thresholded risk",
                self.sample_id, self.binary_pred
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

/// (label, score) view that lets every metric run on both raw records and
/// ensemble-averaged risks.
#[derive(Debug, Clone, Copy)]
pub struct Scored {
    pub label: u8,
    pub risk: f64,
    pub binary_pred: u8,
}

impl From<&PredictionRecord> for Scored {
    fn from(r: &PredictionRecord) -> Self {
        Scored {
            label: r.label,
            risk: r.risk,
            binary_pred: r.binary_pred,
        }
    }
}

fn scored(records: &[PredictionRecord]) -> Vec<Scored> {
    records.iter().map(Scored::from).collect()
}

fn require_nonempty(samples: &[Scored]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no records to evaluate".into()));
    }
    Ok(())
}

pub fn confusion(samples: &[Scored]) -> ConfusionCounts {
    let mut c = ConfusionCounts {
        true_pos: 0,
        false_pos: 0,
        true_neg: 0,
        false_neg: 0,
    };
    for s in samples {
        match (s.label, s.binary_pred) {
            (1, 1) => c.true_pos += 1,
            (0, 1) => c.false_pos += 1,
            (0, 0) => c.true_neg += 1,
            _ => c.false_neg += 1,
        }
    }
    c
}

/// (f1, precision, recall, confusion); degenerate denominators give 0.
pub fn classification_metrics(samples: &[Scored]) -> Result<(f64, f64, f64, ConfusionCounts)> {
    require_nonempty(samples)?;
    let c = confusion(samples);
    let precision = if c.true_pos + c.false_pos == 0 {
        0.0
    } else {
        c.true_pos as f64 / (c.true_pos + c.false_pos) as f64
    };
    let recall = if c.true_pos + c.false_neg == 0 {
        0.0
    } else {
        c.true_pos as f64 / (c.true_pos + c.false_neg) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok((f1, precision, recall, c))
}

/// Rank AUC: fraction of (positive, negative) pairs ranked correctly,
/// ties half credit. Pairs are counted in integers (two units per win,
/// one per tie), so the single final division is exactly reproducible.
pub fn auc(samples: &[Scored]) -> Result<f64> {
    require_nonempty(samples)?;
    let mut items: Vec<(f64, u8)> = samples.iter().map(|s| (s.risk, s.label)).collect();
    let n_pos = items.iter().filter(|(_, l)| *l == 1).count();
    let n_neg = items.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs at least one positive and one negative".into(),
        ));
    }
    items.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite risks"));
    // Sweep ascending: each positive beats every strictly-lower negative
    // and half-ties with equal-scored negatives.
    let mut wins2: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < items.len() {
        let mut j = i;
        while j < items.len() && items[j].0 == items[i].0 {
            j += 1;
        }
        let group = &items[i..j];
        let g_pos = group.iter().filter(|(_, l)| *l == 1).count() as u128;
        let g_neg = group.len() as u128 - g_pos;
        wins2 += g_pos * (2 * neg_below + g_neg);
        neg_below += g_neg;
        i = j;
    }
    Ok(wins2 as f64 / (2 * n_pos as u128 * n_neg as u128) as f64)
}

/// Average precision over descending-risk thresholds, tied scores as one
/// group: Σ (recall_n − recall_{n−1}) · precision_n.
pub fn prc(samples: &[Scored]) -> Result<f64> {
    require_nonempty(samples)?;
    let n_pos = samples.iter().filter(|s| s.label == 1).count();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric(
            "average precision needs at least one positive".into(),
        ));
    }
    let mut items: Vec<(f64, u8)> = samples.iter().map(|s| (s.risk, s.label)).collect();
    items.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite risks"));
    let mut ap = 0.0;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < items.len() {
        let mut j = i;
        while j < items.len() && items[j].0 == items[i].0 {
            j += 1;
        }
        tp += items[i..j].iter().filter(|(_, l)| *l == 1).count();
        seen += j - i;
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EceMode {
    /// Bin by predicted risk; gap = |mean risk − positive rate|.
    PositiveClass,
    /// Bin by max(risk, 1−risk); gap = |mean confidence − accuracy|.
    Confidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub bin_low: f64,
    pub bin_high: f64,
    /// Mean binned statistic (risk or confidence); 0 for empty bins.
    pub mean_risk: f64,
    /// Empirical positive rate (or accuracy in confidence mode); 0 if empty.
    pub pos_rate: f64,
    pub count: usize,
}

fn bin_index(value: f64, bins: usize) -> usize {
    ((value * bins as f64) as usize).min(bins - 1)
}

/// Sum in ascending value order so the result is independent of input
/// permutation (equal values commute, so sorting fixes the float sum).
fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    values.iter().sum()
}

pub fn reliability_bins(
    samples: &[Scored],
    bins: usize,
    mode: EceMode,
) -> Result<Vec<ReliabilityBin>> {
    require_nonempty(samples)?;
    if bins == 0 {
        return Err(Error::InvalidParameter("bin count must be positive".into()));
    }
    let mut confs: Vec<Vec<f64>> = vec![Vec::new(); bins];
    let mut hit_sum = vec![0.0; bins];
    for s in samples {
        let (conf, hit) = match mode {
            EceMode::PositiveClass => (s.risk, f64::from(s.label)),
            EceMode::Confidence => (
                s.risk.max(1.0 - s.risk),
                f64::from(s.binary_pred == s.label),
            ),
        };
        let b = bin_index(conf, bins);
        confs[b].push(conf);
        // Hits are 0/1, summed exactly in any order.
        hit_sum[b] += hit;
    }
    Ok((0..bins)
        .map(|b| {
            let count = confs[b].len();
            ReliabilityBin {
                bin_low: b as f64 / bins as f64,
                bin_high: (b + 1) as f64 / bins as f64,
                mean_risk: if count == 0 {
                    0.0
                } else {
                    ordered_sum(&mut confs[b]) / count as f64
                },
                pos_rate: if count == 0 { 0.0 } else { hit_sum[b] / count as f64 },
                count,
            }
        })
        .collect())
}

/// Count-weighted mean absolute gap over nonempty equal-width bins.
pub fn ece(samples: &[Scored], bins: usize, mode: EceMode) -> Result<f64> {
    let rel = reliability_bins(samples, bins, mode)?;
    let n = samples.len() as f64;
    Ok(rel
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| (b.count as f64 / n) * (b.mean_risk - b.pos_rate).abs())
        .sum())
}

/// Mean squared gap between risk and label.
pub fn brier(samples: &[Scored]) -> Result<f64> {
    require_nonempty(samples)?;
    let mut sq: Vec<f64> = samples
        .iter()
        .map(|s| {
            let d = s.risk - f64::from(s.label);
            d * d
        })
        .collect();
    Ok(ordered_sum(&mut sq) / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub members: usize,
    /// Dataset mean of the per-sample population variance of member risks.
    pub mean_variance: f64,
    /// Fraction of samples whose member binary predictions are not unanimous.
    pub disagreement_rate: f64,
    /// Per-sample ensemble risk, in input record order.
    pub mean_risks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_samples: usize,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub auc: f64,
    pub prc: f64,
    pub ece: f64,
    pub brier: f64,
    pub confusion: ConfusionCounts,
    pub reliability: Vec<ReliabilityBin>,
    pub ensemble: Option<EnsembleStats>,
}

fn report_from_scored(samples: &[Scored], bins: usize, mode: EceMode) -> Result<EvalReport> {
    let (f1, precision, recall, confusion) = classification_metrics(samples)?;
    Ok(EvalReport {
        n_samples: samples.len(),
        f1,
        precision,
        recall,
        auc: auc(samples)?,
        prc: prc(samples)?,
        ece: ece(samples, bins, mode)?,
        brier: brier(samples)?,
        confusion,
        reliability: reliability_bins(samples, bins, mode)?,
        ensemble: None,
    })
}

/// Full single-model report.
pub fn evaluate(records: &[PredictionRecord], bins: usize, mode: EceMode) -> Result<EvalReport> {
    report_from_scored(&scored(records), bins, mode)
}

/// Fuse aligned member predictions: per-sample mean risk, mean population
/// variance, and the unanimity-based disagreement rate. Returns the fused
/// per-sample scores alongside the summary stats.
pub fn ensemble_stats(
    members: &[Vec<PredictionRecord>],
) -> Result<(Vec<Scored>, EnsembleStats)> {
    if members.len() < 2 {
        return Err(Error::InvalidParameter(
            "an ensemble needs at least two members".into(),
        ));
    }
    let n = members[0].len();
    if n == 0 {
        return Err(Error::InvalidParameter("members scored no samples".into()));
    }
    for (mi, m) in members.iter().enumerate() {
        if m.len() != n {
            return Err(Error::Structural(format!(
                "member {mi} scored {} samples, member 0 scored {n}",
                m.len()
            )));
        }
        for (r0, r) in members[0].iter().zip(m) {
            if r.sample_id != r0.sample_id {
                return Err(Error::Structural(format!(
                    "member {mi}: sample id {} does not align with member 0's {}",
                    r.sample_id, r0.sample_id
                )));
            }
            if r.label != r0.label {
                return Err(Error::Structural(format!(
                    "member {mi}: label mismatch on sample {}",
                    r.sample_id
                )));
            }
        }
    }
    let m_count = members.len() as f64;
    let mut fused = Vec::with_capacity(n);
    let mut mean_risks = Vec::with_capacity(n);
    let mut var_sum = 0.0;
    let mut disagreements = 0usize;
    for i in 0..n {
        let risks: Vec<f64> = members.iter().map(|m| m[i].risk).collect();
        let all_equal = risks.iter().all(|&r| r == risks[0]);
        // Exact path so M copies of one member reproduce it bit-for-bit.
        let (mean, var) = if all_equal {
            (risks[0], 0.0)
        } else {
            let mean = risks.iter().sum::<f64>() / m_count;
            let var = risks.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / m_count;
            (mean, var)
        };
        var_sum += var;
        let first_pred = members[0][i].binary_pred;
        if members.iter().any(|m| m[i].binary_pred != first_pred) {
            disagreements += 1;
        }
        fused.push(Scored {
            label: members[0][i].label,
            risk: mean,
            binary_pred: u8::from(mean >= 0.5),
        });
        mean_risks.push(mean);
    }
    let stats = EnsembleStats {
        members: members.len(),
        mean_variance: var_sum / n as f64,
        disagreement_rate: disagreements as f64 / n as f64,
        mean_risks,
    };
    Ok((fused, stats))
}

/// Deep-ensemble report: per-sample mean risk drives every scalar metric;
/// spread across members becomes variance and disagreement.
pub fn ensemble_eval(
    members: &[Vec<PredictionRecord>],
    bins: usize,
    mode: EceMode,
) -> Result<EvalReport> {
    let (fused, stats) = ensemble_stats(members)?;
    let mut report = report_from_scored(&fused, bins, mode)?;
    report.ensemble = Some(stats);
    Ok(report)
}
