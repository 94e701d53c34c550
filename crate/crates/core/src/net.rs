//! A small two-head model over multi-scale pooled features: one shared
//! encoder MLP is applied to every scale's feature block, the per-scale
//! embeddings are concatenated, and two linear heads emit the Beta shape
//! pair (through a softplus-plus-floor link) and a classification logit.
//! Forward and reverse passes are hand-written and exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beta::BetaParams;
use crate::error::{Error, Result};
use crate::loss::{self, CompoundGrad, LossWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Rectifier,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Rectifier => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Rectifier => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_scales: usize,
    /// Features per scale fed to the shared encoder.
    pub feature_dim: usize,
    pub encoder_widths: Vec<usize>,
    /// Hidden widths of the distribution head; empty = single linear layer.
    pub dist_head_widths: Vec<usize>,
    /// Hidden widths of the classification head; empty = single linear layer.
    pub cls_head_widths: Vec<usize>,
    pub activation: Activation,
    /// Additive floor keeping both Beta shapes strictly positive.
    pub alpha_beta_floor: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            num_scales: 3,
            feature_dim: 64,
            encoder_widths: vec![32, 16],
            dist_head_widths: vec![],
            cls_head_widths: vec![],
            activation: Activation::Rectifier,
            alpha_beta_floor: 1e-4,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_scales == 0 || self.feature_dim == 0 {
            return Err(Error::InvalidParameter(
                "num_scales and feature_dim must be positive".into(),
            ));
        }
        if self.encoder_widths.is_empty() {
            return Err(Error::InvalidParameter(
                "encoder needs at least one layer width".into(),
            ));
        }
        let widths = self
            .encoder_widths
            .iter()
            .chain(&self.dist_head_widths)
            .chain(&self.cls_head_widths);
        for &w in widths {
            if w == 0 {
                return Err(Error::InvalidParameter(
                    "layer widths must be positive".into(),
                ));
            }
        }
        if !self.alpha_beta_floor.is_finite() || self.alpha_beta_floor <= 0.0 {
            return Err(Error::InvalidParameter(
                "alpha/beta floor must be finite and positive".into(),
            ));
        }
        Ok(())
    }

    /// Width of the concatenated embedding feeding both heads.
    pub fn concat_width(&self) -> usize {
        self.num_scales * *self.encoder_widths.last().expect("validated nonempty")
    }
}

/// One dense layer; `w` is row-major `[out_dim × in_dim]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl LinearLayer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            w: vec![0.0; in_dim * out_dim],
            b: vec![0.0; out_dim],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.b.clone();
        for (o, out_o) in out.iter_mut().enumerate() {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = 0.0;
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            *out_o += acc;
        }
        out
    }

    fn shape_ok(&self) -> bool {
        self.in_dim > 0
            && self.out_dim > 0
            && self.w.len() == self.in_dim * self.out_dim
            && self.b.len() == self.out_dim
            && self.w.iter().chain(&self.b).all(|v| v.is_finite())
    }
}

/// All parameters, grouped so the trainer can assign per-group learning
/// rates. The same shape doubles as a gradient/moment container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub backbone: Vec<LinearLayer>,
    pub dist_head: Vec<LinearLayer>,
    pub cls_head: Vec<LinearLayer>,
}

pub const GROUP_NAMES: [&str; 3] = ["backbone", "dist_head", "cls_head"];

impl ParamSet {
    pub fn zeros_like(&self) -> Self {
        let z = |layers: &[LinearLayer]| {
            layers
                .iter()
                .map(|l| LinearLayer::zeros(l.in_dim, l.out_dim))
                .collect()
        };
        Self {
            backbone: z(&self.backbone),
            dist_head: z(&self.dist_head),
            cls_head: z(&self.cls_head),
        }
    }

    pub fn groups(&self) -> [(&'static str, &Vec<LinearLayer>); 3] {
        [
            ("backbone", &self.backbone),
            ("dist_head", &self.dist_head),
            ("cls_head", &self.cls_head),
        ]
    }

    pub fn groups_mut(&mut self) -> [(&'static str, &mut Vec<LinearLayer>); 3] {
        [
            ("backbone", &mut self.backbone),
            ("dist_head", &mut self.dist_head),
            ("cls_head", &mut self.cls_head),
        ]
    }

    /// dst += src, elementwise over identical shapes.
    pub fn add_assign(&mut self, src: &ParamSet) {
        let add = |dst: &mut Vec<LinearLayer>, src: &Vec<LinearLayer>| {
            for (d, s) in dst.iter_mut().zip(src) {
                for (dv, sv) in d.w.iter_mut().zip(&s.w) {
                    *dv += sv;
                }
                for (dv, sv) in d.b.iter_mut().zip(&s.b) {
                    *dv += sv;
                }
            }
        };
        add(&mut self.backbone, &src.backbone);
        add(&mut self.dist_head, &src.dist_head);
        add(&mut self.cls_head, &src.cls_head);
    }

    pub fn scale_assign(&mut self, factor: f64) {
        for (_, layers) in self.groups_mut() {
            for l in layers.iter_mut() {
                for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                    *v *= factor;
                }
            }
        }
    }

    fn shape_ok(&self) -> bool {
        self.backbone
            .iter()
            .chain(&self.dist_head)
            .chain(&self.cls_head)
            .all(LinearLayer::shape_ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub config: ModelConfig,
    pub params: ParamSet,
}

/// Full-distribution prediction for one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskPrediction {
    pub alpha: f64,
    pub beta: f64,
    /// Mean of the predicted Beta: the scalar risk score.
    pub risk: f64,
    pub std_dev: f64,
}

/// Deterministic fan-in-scaled uniform init: weights U(−1/√fan_in,
/// 1/√fan_in) drawn in fixed layer order, biases zero.
pub fn init(config: &ModelConfig, seed: u64) -> Result<ModelState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make_stack = |dims: &[usize]| -> Vec<LinearLayer> {
        dims.windows(2)
            .map(|io| {
                let (in_dim, out_dim) = (io[0], io[1]);
                let bound = 1.0 / (in_dim as f64).sqrt();
                let w = (0..in_dim * out_dim)
                    .map(|_| rng.gen_range(-bound..bound))
                    .collect();
                LinearLayer {
                    in_dim,
                    out_dim,
                    w,
                    b: vec![0.0; out_dim],
                }
            })
            .collect()
    };

    let mut enc_dims = vec![config.feature_dim];
    enc_dims.extend(&config.encoder_widths);
    let backbone = make_stack(&enc_dims);

    let mut dist_dims = vec![config.concat_width()];
    dist_dims.extend(&config.dist_head_widths);
    dist_dims.push(2);
    let dist_head = make_stack(&dist_dims);

    let mut cls_dims = vec![config.concat_width()];
    cls_dims.extend(&config.cls_head_widths);
    cls_dims.push(1);
    let cls_head = make_stack(&cls_dims);

    Ok(ModelState {
        config: config.clone(),
        params: ParamSet {
            backbone,
            dist_head,
            cls_head,
        },
    })
}

/// Structural check used after deserializing a state from disk.
pub fn validate_state(state: &ModelState) -> Result<()> {
    state.config.validate()?;
    if !state.params.shape_ok() {
        return Err(Error::Structural(
            "parameter tensors are inconsistent with their declared shapes".into(),
        ));
    }
    let enc_in = state.params.backbone.first().map(|l| l.in_dim);
    if enc_in != Some(state.config.feature_dim) {
        return Err(Error::Structural(
            "encoder input width disagrees with config feature_dim".into(),
        ));
    }
    Ok(())
}

struct LayerTrace {
    input: Vec<f64>,
    pre: Vec<f64>,
}

struct Trace {
    // [scale][layer]
    scale_layers: Vec<Vec<LayerTrace>>,
    dist_layers: Vec<LayerTrace>,
    cls_layers: Vec<LayerTrace>,
    raw_dist: [f64; 2],
    logit: f64,
}

fn forward_mlp(
    layers: &[LinearLayer],
    activation: Activation,
    activate_last: bool,
    x: &[f64],
) -> (Vec<f64>, Vec<LayerTrace>) {
    let mut traces = Vec::with_capacity(layers.len());
    let mut cur = x.to_vec();
    let last = layers.len() - 1;
    for (j, layer) in layers.iter().enumerate() {
        let pre = layer.forward(&cur);
        let post = if activate_last || j < last {
            pre.iter().map(|&z| activation.apply(z)).collect()
        } else {
            pre.clone()
        };
        traces.push(LayerTrace { input: cur, pre });
        cur = post;
    }
    (cur, traces)
}

/// Backprop through one MLP; `g_out` is the loss gradient at the MLP
/// output. Layer gradients accumulate into `grads`; returns the gradient
/// at the MLP input.
fn backward_mlp(
    layers: &[LinearLayer],
    traces: &[LayerTrace],
    activation: Activation,
    activate_last: bool,
    g_out: Vec<f64>,
    grads: &mut [LinearLayer],
) -> Vec<f64> {
    let last = layers.len() - 1;
    let mut g = g_out;
    for j in (0..layers.len()).rev() {
        let layer = &layers[j];
        let trace = &traces[j];
        // Convert to gradient at the pre-activation.
        let g_pre: Vec<f64> = if activate_last || j < last {
            g.iter()
                .zip(&trace.pre)
                .map(|(gv, &z)| gv * activation.derivative(z))
                .collect()
        } else {
            g
        };
        let gl = &mut grads[j];
        for (o, (gb, gp)) in gl.b.iter_mut().zip(&g_pre).enumerate() {
            *gb += gp;
            let row = &mut gl.w[o * layer.in_dim..(o + 1) * layer.in_dim];
            for (wv, xv) in row.iter_mut().zip(&trace.input) {
                *wv += gp * xv;
            }
        }
        let mut g_in = vec![0.0; layer.in_dim];
        for (o, gp) in g_pre.iter().enumerate() {
            let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
            for (gi, wv) in g_in.iter_mut().zip(row) {
                *gi += gp * wv;
            }
        }
        g = g_in;
    }
    g
}

fn check_features(config: &ModelConfig, features: &[Vec<f64>]) -> Result<()> {
    if features.len() != config.num_scales {
        return Err(Error::Structural(format!(
            "expected {} feature scales, got {}",
            config.num_scales,
            features.len()
        )));
    }
    for (s, f) in features.iter().enumerate() {
        if f.len() != config.feature_dim {
            return Err(Error::Structural(format!(
                "scale {s}: expected {} features, got {}",
                config.feature_dim,
                f.len()
            )));
        }
    }
    Ok(())
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn forward_trace(state: &ModelState, features: &[Vec<f64>]) -> Result<Trace> {
    check_features(&state.config, features)?;
    let cfg = &state.config;
    let mut scale_layers = Vec::with_capacity(cfg.num_scales);
    let mut concat = Vec::with_capacity(cfg.concat_width());
    for f in features {
        let (embedding, traces) =
            forward_mlp(&state.params.backbone, cfg.activation, true, f);
        concat.extend_from_slice(&embedding);
        scale_layers.push(traces);
    }
    let (raw_dist, dist_layers) =
        forward_mlp(&state.params.dist_head, cfg.activation, false, &concat);
    let (raw_cls, cls_layers) =
        forward_mlp(&state.params.cls_head, cfg.activation, false, &concat);
    Ok(Trace {
        scale_layers,
        dist_layers,
        cls_layers,
        raw_dist: [raw_dist[0], raw_dist[1]],
        logit: raw_cls[0],
    })
}

/// Smallest |pre-activation| that feeds an activation anywhere in the
/// network for this input. Finite-difference gradient checks use this to
/// reject inputs sitting on a rectifier kink, where one-sided derivatives
/// make numeric and analytic gradients legitimately disagree.
pub fn min_activation_margin(state: &ModelState, features: &[Vec<f64>]) -> Result<f64> {
    let trace = forward_trace(state, features)?;
    let mut margin = f64::INFINITY;
    for layers in &trace.scale_layers {
        for lt in layers {
            for &z in &lt.pre {
                margin = margin.min(z.abs());
            }
        }
    }
    // Head activations sit between hidden layers only; the final layer is
    // linear, so its pre-activations never meet a kink.
    for head in [&trace.dist_layers, &trace.cls_layers] {
        if head.len() > 1 {
            for lt in &head[..head.len() - 1] {
                for &z in &lt.pre {
                    margin = margin.min(z.abs());
                }
            }
        }
    }
    Ok(margin)
}

/// Forward pass: predicted Beta parameters and the classification logit.
pub fn forward(state: &ModelState, features: &[Vec<f64>]) -> Result<(BetaParams, f64)> {
    let trace = forward_trace(state, features)?;
    let alpha = softplus(trace.raw_dist[0]) + state.config.alpha_beta_floor;
    let beta = softplus(trace.raw_dist[1]) + state.config.alpha_beta_floor;
    Ok((BetaParams::new(alpha, beta)?, trace.logit))
}

/// Forward pass summarized as a risk score with its uncertainty.
pub fn predict_risk(state: &ModelState, features: &[Vec<f64>]) -> Result<RiskPrediction> {
    let (params, _) = forward(state, features)?;
    Ok(RiskPrediction {
        alpha: params.alpha(),
        beta: params.beta(),
        risk: params.mean(),
        std_dev: params.std_dev(),
    })
}

/// Forward plus full reverse pass of the compound loss. Per-scale encoder
/// gradients accumulate into the one shared backbone. Returns the loss and
/// a gradient set shaped like the parameters.
pub fn backward(
    state: &ModelState,
    features: &[Vec<f64>],
    target: &BetaParams,
    label: u8,
    weights: &LossWeights,
) -> Result<(f64, ParamSet)> {
    let cfg = &state.config;
    let trace = forward_trace(state, features)?;
    let alpha = softplus(trace.raw_dist[0]) + cfg.alpha_beta_floor;
    let beta = softplus(trace.raw_dist[1]) + cfg.alpha_beta_floor;
    let pred = BetaParams::new(alpha, beta)?;
    let loss_value = loss::compound(&pred, target, trace.logit, label, weights)?;
    let CompoundGrad {
        d_alpha,
        d_beta,
        d_logit,
    } = loss::grad_compound(&pred, target, trace.logit, label, weights)?;

    let mut grads = state.params.zeros_like();

    // softplus'(x) = sigmoid(x).
    let g_raw_dist = vec![
        d_alpha * loss::sigmoid(trace.raw_dist[0]),
        d_beta * loss::sigmoid(trace.raw_dist[1]),
    ];
    let g_concat_dist = backward_mlp(
        &state.params.dist_head,
        &trace.dist_layers,
        cfg.activation,
        false,
        g_raw_dist,
        &mut grads.dist_head,
    );
    let g_concat_cls = backward_mlp(
        &state.params.cls_head,
        &trace.cls_layers,
        cfg.activation,
        false,
        vec![d_logit],
        &mut grads.cls_head,
    );

    let emb_width = *cfg.encoder_widths.last().expect("validated nonempty");
    for (s, traces) in trace.scale_layers.iter().enumerate() {
        let lo = s * emb_width;
        let g_emb: Vec<f64> = (0..emb_width)
            .map(|i| g_concat_dist[lo + i] + g_concat_cls[lo + i])
            .collect();
        backward_mlp(
            &state.params.backbone,
            traces,
            cfg.activation,
            true,
            g_emb,
            &mut grads.backbone,
        );
    }
    Ok((loss_value, grads))
}
