//! Training losses: the moment-space Wasserstein-2 surrogate, the true
//! quantile-integral W2 distance used to audit it, class-weighted binary
//! cross-entropy in stable logit form, their weighted compound, and exact
//! analytic gradients of the compound loss.

use serde::{Deserialize, Serialize};

use crate::beta::BetaParams;
use crate::error::{Error, Result};

/// Minimum quadrature resolution accepted by `w2_true`.
pub const MIN_W2_NODES: usize = 64;
/// Default quadrature resolution.
pub const DEFAULT_W2_NODES: usize = 1024;

/// Loss mixing weights and per-class BCE weights (index 0 = negative class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub class_weights: [f64; 2],
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 5.0,
            lambda2: 1.0,
            class_weights: [1.25948, 4.85382],
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda1.is_finite() || !self.lambda2.is_finite() {
            return Err(Error::InvalidParameter(
                "loss mixing weights must be finite".into(),
            ));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::InvalidParameter(
                "loss mixing weights must be nonnegative".into(),
            ));
        }
        if self.class_weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidParameter(
                "class weights must be finite and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Analytic gradient of the compound loss with respect to the predicted
/// (α, β) and the classification logit. Targets and labels are constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompoundGrad {
    pub d_alpha: f64,
    pub d_beta: f64,
    pub d_logit: f64,
}

/// (μ_p − μ_t)² + (σ_p − σ_t)²: squared distance between the two
/// distributions' mean/standard-deviation pairs.
pub fn w2_surrogate(pred: &BetaParams, target: &BetaParams) -> f64 {
    let dm = pred.mean() - target.mean();
    let ds = pred.std_dev() - target.std_dev();
    dm * dm + ds * ds
}

/// Quantiles of `p` at the `nodes` midpoint abscissas u_i = (i + ½)/nodes.
pub fn quantile_grid(p: &BetaParams, nodes: usize) -> Result<Vec<f64>> {
    let n = nodes as f64;
    (0..nodes)
        .map(|i| p.quantile((i as f64 + 0.5) / n))
        .collect()
}

/// Mean squared difference of two precomputed quantile grids; the midpoint
/// rule makes each node weight exactly 1/n.
pub fn w2_true_from_grids(pred_q: &[f64], target_q: &[f64]) -> Result<f64> {
    if pred_q.len() != target_q.len() || pred_q.is_empty() {
        return Err(Error::Structural(format!(
            "quantile grids must be nonempty and equal length, got {} and {}",
            pred_q.len(),
            target_q.len()
        )));
    }
    let sum: f64 = pred_q
        .iter()
        .zip(target_q)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / pred_q.len() as f64)
}

/// True squared Wasserstein-2 distance ∫₀¹ (Q_pred(u) − Q_target(u))² du,
/// approximated by midpoint quadrature on `nodes` uniform points.
pub fn w2_true(pred: &BetaParams, target: &BetaParams, nodes: usize) -> Result<f64> {
    if nodes < MIN_W2_NODES {
        return Err(Error::Domain(format!(
            "w2_true needs at least {MIN_W2_NODES} quadrature nodes, got {nodes}"
        )));
    }
    let pq = quantile_grid(pred, nodes)?;
    let tq = quantile_grid(target, nodes)?;
    w2_true_from_grids(&pq, &tq)
}

/// softplus(x) = ln(1 + eˣ) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic sigmoid, evaluated on the non-overflowing branch.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Class-weighted binary cross-entropy from the raw logit:
/// −w_class · [y·ln p + (1−y)·ln(1−p)] with p = sigmoid(logit), computed in
/// log-sum form so neither log can see a zero.
pub fn bce(logit: f64, label: u8, w: &LossWeights) -> Result<f64> {
    if label > 1 {
        return Err(Error::Domain(format!("label must be 0 or 1, got {label}")));
    }
    if !logit.is_finite() {
        return Err(Error::Domain(format!("logit must be finite, got {logit}")));
    }
    let nll = if label == 1 {
        softplus(-logit)
    } else {
        softplus(logit)
    };
    Ok(w.class_weights[label as usize] * nll)
}

/// λ1·bce + λ2·w2_surrogate.
pub fn compound(
    pred: &BetaParams,
    target: &BetaParams,
    logit: f64,
    label: u8,
    w: &LossWeights,
) -> Result<f64> {
    Ok(w.lambda1 * bce(logit, label, w)? + w.lambda2 * w2_surrogate(pred, target))
}

/// Closed-form partials of the compound loss. The surrogate terms chain
/// through μ = α/(α+β) and σ = √(αβ/((α+β)²(α+β+1))):
///   ∂μ/∂α = β/(α+β)²,  ∂v/∂α = v·(1/α − 2/(α+β) − 1/(α+β+1)),  ∂σ = ∂v/(2σ),
/// and the BCE term contributes λ1·w_class·(p − y) to the logit.
pub fn grad_compound(
    pred: &BetaParams,
    target: &BetaParams,
    logit: f64,
    label: u8,
    w: &LossWeights,
) -> Result<CompoundGrad> {
    if label > 1 {
        return Err(Error::Domain(format!("label must be 0 or 1, got {label}")));
    }
    if !logit.is_finite() {
        return Err(Error::Domain(format!("logit must be finite, got {logit}")));
    }
    let (a, b) = (pred.alpha(), pred.beta());
    let s = a + b;
    let mu = pred.mean();
    let var = pred.variance();
    let sigma = pred.std_dev();

    let dmu = mu - target.mean();
    let dsig = sigma - target.std_dev();

    let dmu_da = b / (s * s);
    let dmu_db = -a / (s * s);
    let shared = -2.0 / s - 1.0 / (s + 1.0);
    let dvar_da = var * (1.0 / a + shared);
    let dvar_db = var * (1.0 / b + shared);
    let dsig_da = dvar_da / (2.0 * sigma);
    let dsig_db = dvar_db / (2.0 * sigma);

    let d_alpha = w.lambda2 * (2.0 * dmu * dmu_da + 2.0 * dsig * dsig_da);
    let d_beta = w.lambda2 * (2.0 * dmu * dmu_db + 2.0 * dsig * dsig_db);
    let p = sigmoid(logit);
    let d_logit = w.lambda1 * w.class_weights[label as usize] * (p - f64::from(label));

    Ok(CompoundGrad {
        d_alpha,
        d_beta,
        d_logit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn bp(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    #[test]
    fn surrogate_hand_values() {
        assert!(close(w2_surrogate(&bp(2.0, 2.0), &bp(2.0, 5.0)), 0.050000, 1e-5));
        assert!(close(w2_surrogate(&bp(10.0, 10.0), &bp(2.0, 2.0)), 0.013110, 1e-5));
        assert_eq!(w2_surrogate(&bp(3.0, 4.0), &bp(3.0, 4.0)), 0.0);
    }

    #[test]
    fn surrogate_symmetric_and_zero_iff_moments_match() {
        let p = bp(1.5, 3.0);
        let q = bp(6.0, 2.5);
        assert_eq!(w2_surrogate(&p, &q), w2_surrogate(&q, &p));
        // Different shape pairs can share a mean but not (mean, σ) unless equal.
        assert!(w2_surrogate(&bp(1.0, 1.0), &bp(2.0, 2.0)) > 0.0);
    }

    #[test]
    fn w2_true_identity_and_positivity() {
        let t = bp(2.0, 5.0);
        assert!(w2_true(&t, &t, 256).unwrap() <= 1e-10);
        assert!(w2_true(&bp(1.0, 1.0), &bp(2.0, 2.0), 256).unwrap() > 0.0);
    }

    #[test]
    fn w2_true_rejects_coarse_grids() {
        let t = bp(2.0, 5.0);
        assert!(w2_true(&t, &t, 63).is_err());
        assert!(w2_true(&t, &t, 64).is_ok());
    }

    #[test]
    fn bce_hand_values() {
        let unit = LossWeights {
            lambda1: 1.0,
            lambda2: 1.0,
            class_weights: [1.0, 1.0],
        };
        assert!(close(bce(0.0, 1, &unit).unwrap(), std::f64::consts::LN_2, 1e-12));
        assert!(bce(60.0, 1, &unit).unwrap() < 1e-20);
        let w = LossWeights::default();
        let logit_p08 = (0.8_f64 / 0.2).ln();
        assert!(close(bce(logit_p08, 1, &w).unwrap(), 1.08312, 1e-4));
    }

    #[test]
    fn bce_rejects_bad_inputs() {
        let w = LossWeights::default();
        assert!(bce(f64::INFINITY, 1, &w).is_err());
        assert!(bce(0.0, 2, &w).is_err());
    }

    #[test]
    fn compound_hand_value() {
        let w = LossWeights::default();
        let logit_p08 = (0.8_f64 / 0.2).ln();
        let v = compound(&bp(2.0, 2.0), &bp(2.0, 5.0), logit_p08, 1, &w).unwrap();
        assert!(close(v, 5.46560, 1e-3), "compound {v}");
    }

    #[test]
    fn compound_degenerate_weights() {
        let w = LossWeights {
            lambda1: 0.0,
            lambda2: 1.0,
            ..LossWeights::default()
        };
        let p = bp(2.0, 2.0);
        let t = bp(2.0, 5.0);
        assert_eq!(
            compound(&p, &t, 0.3, 1, &w).unwrap(),
            w2_surrogate(&p, &t)
        );
    }

    #[test]
    fn compound_term_order_is_immaterial() {
        // a + b == b + a exactly in IEEE arithmetic.
        let w = LossWeights::default();
        let p = bp(2.0, 2.0);
        let t = bp(2.0, 5.0);
        let a = w.lambda1 * bce(0.7, 1, &w).unwrap();
        let b = w.lambda2 * w2_surrogate(&p, &t);
        assert_eq!(a + b, b + a);
        assert_eq!(compound(&p, &t, 0.7, 1, &w).unwrap(), a + b);
    }

    #[test]
    fn grad_zero_at_matched_prediction() {
        let w = LossWeights::default();
        let t = bp(3.0, 4.0);
        let g = grad_compound(&t, &t, -30.0, 0, &w).unwrap();
        assert_eq!(g.d_alpha, 0.0);
        assert_eq!(g.d_beta, 0.0);
        // p = sigmoid(-30) ≈ 9e-14; the logit gradient is λ1·w·(p − 0).
        assert!(g.d_logit.abs() < 1e-10);
    }

    #[test]
    fn logit_grad_hand_value() {
        let w = LossWeights {
            lambda1: 1.0,
            lambda2: 1.0,
            class_weights: [1.0, 1.0],
        };
        let g = grad_compound(&bp(2.0, 2.0), &bp(2.0, 2.0), 0.0, 1, &w).unwrap();
        assert!(close(g.d_logit, -0.5, 1e-12));
    }

    #[test]
    fn grads_match_central_differences_spot() {
        let w = LossWeights::default();
        let cases = [
            (2.0, 2.0, 2.0, 5.0, 0.3, 1u8),
            (0.7, 3.0, 22.0, 1e-5, -1.2, 0u8),
            (5.0, 1.5, 1e-5, 22.0, 2.0, 1u8),
            (10.0, 10.0, 2.0, 2.0, 0.0, 0u8),
        ];
        let h = 1e-5;
        for &(pa, pb, ta, tb, logit, label) in &cases {
            let t = bp(ta, tb);
            let g = grad_compound(&bp(pa, pb), &t, logit, label, &w).unwrap();
            let f = |a: f64, b: f64, l: f64| {
                compound(&bp(a, b), &t, l, label, &w).unwrap()
            };
            let num_a = (f(pa + h, pb, logit) - f(pa - h, pb, logit)) / (2.0 * h);
            let num_b = (f(pa, pb + h, logit) - f(pa, pb - h, logit)) / (2.0 * h);
            let num_l = (f(pa, pb, logit + h) - f(pa, pb, logit - h)) / (2.0 * h);
            for (ana, num) in [(g.d_alpha, num_a), (g.d_beta, num_b), (g.d_logit, num_l)] {
                let scale = ana.abs().max(num.abs());
                let err = (ana - num).abs();
                assert!(
                    err <= 1e-8 || err / scale <= 1e-4,
                    "case ({pa},{pb}) vs ({ta},{tb}): analytic {ana} numeric {num}"
                );
            }
        }
    }

    #[test]
    fn weights_validation() {
        assert!(LossWeights::default().validate().is_ok());
        let negative = LossWeights {
            lambda1: -1.0,
            ..LossWeights::default()
        };
        assert!(negative.validate().is_err());
        let zero_class = LossWeights {
            class_weights: [0.0, 1.0],
            ..LossWeights::default()
        };
        assert!(zero_class.validate().is_err());
    }
}
