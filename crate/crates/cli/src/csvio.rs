//! Fixed-layout CSV formatting. Floats use Rust's shortest round-trip
//! `Display` form, so output is lossless and byte-stable across runs.

use betarisk_core::metrics::{PredictionRecord, ReliabilityBin};
use std::fmt::Write as _;

pub fn predictions_csv(records: &[PredictionRecord]) -> String {
    let mut s = String::from("id,label,alpha,beta,risk,std_dev,binary_pred\n");
    for r in records {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.sample_id, r.label, r.alpha, r.beta, r.risk, r.std_dev, r.binary_pred
        )
        .expect("string write");
    }
    s
}

pub fn reliability_csv(bins: &[ReliabilityBin]) -> String {
    let mut s = String::from("bin_low,bin_high,mean_risk,pos_rate,count\n");
    for b in bins {
        writeln!(
            s,
            "{},{},{},{},{}",
            b.bin_low, b.bin_high, b.mean_risk, b.pos_rate, b.count
        )
        .expect("string write");
    }
    s
}

/// One cell of the surrogate-vs-true loss sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W2Row {
    pub alpha: f64,
    pub beta: f64,
    pub w2_true: f64,
    pub w2_surrogate: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
}

pub fn w2_csv(rows: &[W2Row]) -> String {
    let mut s = String::from("alpha,beta,w2_true,w2_surrogate,abs_diff,rel_diff\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            r.alpha, r.beta, r.w2_true, r.w2_surrogate, r.abs_diff, r.rel_diff
        )
        .expect("string write");
    }
    s
}
