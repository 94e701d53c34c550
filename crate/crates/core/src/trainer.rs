//! Training loop: per-group learning rates, adaptive-moment optimizer
//! with decoupled weight decay, cosine-annealing warm-restart schedule,
//! per-epoch regenerated crop targets, and validation-accuracy checkpoint
//! selection. Everything is seeded; (config, seed) fully determine the
//! resulting checkpoint.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelgen::{make_target, CropGeometry, LabelGenConfig};
use crate::loss::LossWeights;
use crate::net::{self, ModelConfig, ModelState, ParamSet};
use crate::synthdata::{
    crop_features_oriented, derive_seed, scene_features, Orientation, Scene, GRID_SIZE,
};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub t0: f64,
    pub t_mult: f64,
    pub eta_min: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            t0: 10.0,
            t_mult: 2.0,
            eta_min: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_backbone: f64,
    pub lr_dist_head: f64,
    pub lr_cls_head: f64,
    pub weight_decay: f64,
    pub schedule: ScheduleConfig,
    /// Square-crop area fraction range for augmentation.
    pub crop_area_range: (f64, f64),
    pub loss_weights: LossWeights,
    pub labels: LabelGenConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            lr_backbone: 1e-4,
            lr_dist_head: 0.02,
            lr_cls_head: 1e-4,
            weight_decay: 0.01,
            schedule: ScheduleConfig::default(),
            crop_area_range: (0.5, 1.0),
            loss_weights: LossWeights::default(),
            labels: LabelGenConfig {
                epsilon: 0.08,
                ..LabelGenConfig::default()
            },
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch_size must be positive".into()));
        }
        for (name, lr) in [
            ("lr_backbone", self.lr_backbone),
            ("lr_dist_head", self.lr_dist_head),
            ("lr_cls_head", self.lr_cls_head),
        ] {
            if !lr.is_finite() || lr <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {lr}"
                )));
            }
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "weight_decay must be finite and nonnegative, got {}",
                self.weight_decay
            )));
        }
        let (lo, hi) = self.crop_area_range;
        if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || lo > hi || hi > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "crop_area_range must satisfy 0 < lo <= hi <= 1, got ({lo}, {hi})"
            )));
        }
        if self.schedule.t0 < 1.0 || self.schedule.t_mult < 1.0 {
            return Err(Error::InvalidParameter(
                "schedule needs T0 >= 1 and Tmult >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.schedule.eta_min) {
            return Err(Error::InvalidParameter(
                "schedule eta_min must lie in [0, 1)".into(),
            ));
        }
        self.loss_weights.validate()?;
        self.labels.validate()
    }
}

/// Cosine-annealing warm-restart rate at a (possibly fractional) epoch.
/// Cycle lengths are T0, T0·Tmult, T0·Tmult², ...; each cycle starts back
/// at `base_lr` and decays toward `eta_min · base_lr`'s absolute level.
pub fn lr_at(base_lr: f64, step_epoch: f64, schedule: &ScheduleConfig) -> f64 {
    let mut start = 0.0;
    let mut len = schedule.t0;
    while step_epoch >= start + len {
        start += len;
        len *= schedule.t_mult;
    }
    let t_cur = step_epoch - start;
    let span = base_lr - schedule.eta_min;
    schedule.eta_min + span * 0.5 * (1.0 + (std::f64::consts::PI * t_cur / len).cos())
}

/// First/second moment buffers plus the shared step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: ParamSet,
    pub v: ParamSet,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        Self {
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }
}

/// Scheduled per-group rates for one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupRates {
    pub backbone: f64,
    pub dist_head: f64,
    pub cls_head: f64,
}

impl GroupRates {
    pub fn scheduled(cfg: &TrainConfig, epoch: f64) -> Self {
        Self {
            backbone: lr_at(cfg.lr_backbone, epoch, &cfg.schedule),
            dist_head: lr_at(cfg.lr_dist_head, epoch, &cfg.schedule),
            cls_head: lr_at(cfg.lr_cls_head, epoch, &cfg.schedule),
        }
    }

    fn for_group(&self, name: &str) -> f64 {
        match name {
            "backbone" => self.backbone,
            "dist_head" => self.dist_head,
            _ => self.cls_head,
        }
    }
}

/// One decoupled-weight-decay adaptive-moment update:
/// θ ← θ − η·(m̂/(√v̂ + δ) + wd·θ), per group with that group's rate.
pub fn optimizer_step(
    params: &mut ParamSet,
    grads: &ParamSet,
    moments: &mut AdamState,
    weight_decay: f64,
    rates: &GroupRates,
) -> Result<()> {
    for (name, layers) in grads.groups() {
        for l in layers {
            if !l.w.iter().chain(&l.b).all(|g| g.is_finite()) {
                return Err(Error::NonFiniteGradient { group: name.into() });
            }
        }
    }
    moments.step += 1;
    let t = moments.step as i32;
    let bc1 = 1.0 - BETA1.powi(t);
    let bc2 = 1.0 - BETA2.powi(t);

    let grad_groups = grads.groups();
    let m_groups = moments.m.groups_mut();
    let v_groups = moments.v.groups_mut();
    for (gi, (name, layers)) in params.groups_mut().into_iter().enumerate() {
        let lr = rates.for_group(name);
        let g_layers = grad_groups[gi].1;
        let m_layers = &mut *m_groups[gi].1;
        let v_layers = &mut *v_groups[gi].1;
        for (((p, g), m), v) in layers
            .iter_mut()
            .zip(g_layers)
            .zip(m_layers.iter_mut())
            .zip(v_layers.iter_mut())
        {
            let params_iter = p.w.iter_mut().chain(p.b.iter_mut());
            let grads_iter = g.w.iter().chain(g.b.iter());
            let m_iter = m.w.iter_mut().chain(m.b.iter_mut());
            let v_iter = v.w.iter_mut().chain(v.b.iter_mut());
            for (((pv, gv), mv), vv) in params_iter.zip(grads_iter).zip(m_iter).zip(v_iter) {
                *mv = BETA1 * *mv + (1.0 - BETA1) * gv;
                *vv = BETA2 * *vv + (1.0 - BETA2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= lr * (m_hat / (v_hat.sqrt() + ADAM_EPS) + weight_decay * *pv);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Schedule multiplier applied to every group's base rate this epoch.
    pub lr_factor: f64,
    /// Mean per-sample compound loss over the epoch.
    pub train_loss: f64,
    pub val_accuracy: f64,
}

fn with_sample(i: usize, e: Error) -> Error {
    match e {
        Error::NonConvergence { what, iterations } => Error::NonConvergence {
            what: format!("sample {i}: {what}"),
            iterations,
        },
        Error::Domain(msg) => Error::Domain(format!("sample {i}: {msg}")),
        Error::InvalidParameter(msg) => Error::InvalidParameter(format!("sample {i}: {msg}")),
        Error::Structural(msg) => Error::Structural(format!("sample {i}: {msg}")),
        other => other,
    }
}

/// One pass over the dataset: seeded permutation, per-sample random crop
/// plus content orientation, fresh geometry-derived targets, fixed-order
/// batch gradient accumulation, one optimizer step per batch. Returns the
/// mean per-sample loss.
pub fn train_epoch(
    state: &mut ModelState,
    moments: &mut AdamState,
    dataset: &[Scene],
    epoch_index: usize,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::InvalidParameter("training set is empty".into()));
    }
    let rates = GroupRates::scheduled(cfg, epoch_index as f64);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(rng);

    let (area_lo, area_hi) = cfg.crop_area_range;
    let mut loss_sum = 0.0;
    for batch in order.chunks(cfg.batch_size) {
        let mut accum = state.params.zeros_like();
        for &i in batch {
            let scene = &dataset[i];
            let area = rng.gen_range(area_lo..=area_hi);
            let side = ((GRID_SIZE as f64 * area.sqrt()).round() as u32)
                .clamp(4, GRID_SIZE as u32);
            let max_off = GRID_SIZE as u32 - side;
            let ox = rng.gen_range(0..=max_off);
            let oy = rng.gen_range(0..=max_off);
            let geometry = CropGeometry::new(GRID_SIZE as u32, side, ox, oy)
                .map_err(|e| with_sample(i, e))?;
            let orientation = Orientation {
                quarter_turns: rng.gen_range(0..4u8),
                flip_horizontal: rng.gen_bool(0.5),
            };
            let features = crop_features_oriented(scene, &geometry, orientation)
                .map_err(|e| with_sample(i, e))?;
            let target =
                make_target(scene.label, &geometry, &cfg.labels).map_err(|e| with_sample(i, e))?;
            let (loss, grads) =
                net::backward(state, &features, &target, scene.label, &cfg.loss_weights)
                    .map_err(|e| with_sample(i, e))?;
            loss_sum += loss;
            accum.add_assign(&grads);
        }
        accum.scale_assign(1.0 / batch.len() as f64);
        optimizer_step(&mut state.params, &accum, moments, cfg.weight_decay, &rates)?;
    }
    Ok(loss_sum / dataset.len() as f64)
}

/// Fraction of scenes whose thresholded risk (≥ 0.5 predicts positive)
/// matches the label, on whole-scene features.
pub fn accuracy(state: &ModelState, scenes: &[Scene]) -> Result<f64> {
    if scenes.is_empty() {
        return Err(Error::InvalidParameter("validation set is empty".into()));
    }
    let mut correct = 0usize;
    for scene in scenes {
        let pred = net::predict_risk(state, &scene_features(scene)?)?;
        let predicted = u8::from(pred.risk >= 0.5);
        if predicted == scene.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / scenes.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub best: ModelState,
    /// 0-based epoch index of the best checkpoint; 0 also covers the
    /// epochs=0 case where the initial state is returned.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub final_state: ModelState,
    pub history: Vec<EpochStats>,
}

/// Train for `cfg.epochs`, validating after every epoch; returns the
/// highest-accuracy state with ties broken by the earliest epoch.
pub fn fit(
    train: &[Scene],
    val: &[Scene],
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidParameter(
            "fit needs nonempty train and validation sets".into(),
        ));
    }
    let mut state = net::init(model_cfg, derive_seed(cfg.seed, 0x1_417))?;
    let mut moments = AdamState::new(&state.params);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = state.clone();
    let mut best_epoch = 0usize;
    let mut best_acc = f64::NEG_INFINITY;
    if cfg.epochs == 0 {
        best_acc = accuracy(&state, val)?;
    }
    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1 + epoch as u64));
        let train_loss = train_epoch(&mut state, &mut moments, train, epoch, cfg, &mut rng)?;
        let val_accuracy = accuracy(&state, val)?;
        history.push(EpochStats {
            epoch,
            lr_factor: lr_at(1.0, epoch as f64, &cfg.schedule),
            train_loss,
            val_accuracy,
        });
        // Strictly greater: ties keep the earlier checkpoint.
        if val_accuracy > best_acc {
            best_acc = val_accuracy;
            best = state.clone();
            best_epoch = epoch;
        }
    }
    Ok(FitResult {
        best,
        best_epoch,
        best_val_accuracy: best_acc,
        final_state: state,
        history,
    })
}

/// On-disk training artifact: enough to re-run inference and to recompute
/// the exact train/validation split it was selected on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: ModelState,
    pub train: TrainConfig,
    pub epoch: usize,
    pub val_fraction: f64,
    pub dataset_seed: u64,
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &std::path::Path) -> Result<()> {
    let text = serde_json::to_string_pretty(ckpt).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_checkpoint(path: &std::path::Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)?;
    let ckpt: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    net::validate_state(&ckpt.model)?;
    ckpt.train.validate()?;
    if !(0.0..1.0).contains(&ckpt.val_fraction) {
        return Err(Error::Structural(format!(
            "checkpoint val_fraction {} is outside (0, 1)",
            ckpt.val_fraction
        )));
    }
    Ok(ckpt)
}
