//! Subcommand argument structs and implementations. Every command reads
//! inputs, computes, writes artifacts, and prints a short stdout summary;
//! none of them embeds timestamps or host state in its outputs.

use betarisk_core::labelgen::PositiveBetaMode;
use betarisk_core::metrics::{self, EceMode, EvalReport, PredictionRecord};
use betarisk_core::net::{self, Activation, ModelState};
use betarisk_core::synthdata::{self, Dataset, DatasetSpec};
use betarisk_core::trainer::{self, Checkpoint};
use betarisk_core::{BetaParams, Error, Result};
use clap::Args;
use rayon::prelude::*;
use std::path::{Path, PathBuf};

use crate::config::{self, Overrides, RunConfig};
use crate::csvio::{self, W2Row};
use crate::geojson;
use crate::svg;

// ---------------------------------------------------------------------------
// Shared flag parsers and helpers

fn parse_activation(s: &str) -> std::result::Result<Activation, String> {
    match s {
        "rectifier" => Ok(Activation::Rectifier),
        "tanh" => Ok(Activation::Tanh),
        other => Err(format!(
            "unknown activation '{other}' (expected 'rectifier' or 'tanh')"
        )),
    }
}

fn parse_positive_mode(s: &str) -> std::result::Result<PositiveBetaMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_ece_mode(s: &str) -> std::result::Result<EceMode, String> {
    match s {
        "positive-class" => Ok(EceMode::PositiveClass),
        "confidence" => Ok(EceMode::Confidence),
        other => Err(format!(
            "unknown calibration mode '{other}' (expected 'positive-class' or 'confidence')"
        )),
    }
}

fn parse_widths(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad layer width '{part}': {e}"))
        })
        .collect()
}

/// Target Beta parameters given as "alpha,beta".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub alpha: f64,
    pub beta: f64,
}

fn parse_target(s: &str) -> std::result::Result<TargetSpec, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("target must be 'alpha,beta', got '{s}'"));
    }
    let alpha: f64 = parts[0].trim().parse().map_err(|e| format!("bad alpha: {e}"))?;
    let beta: f64 = parts[1].trim().parse().map_err(|e| format!("bad beta: {e}"))?;
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(format!("target shapes must be positive and finite, got {alpha},{beta}"));
    }
    Ok(TargetSpec { alpha, beta })
}

/// Inclusive parameter grid given as "low:high:step".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub low: f64,
    pub high: f64,
    pub step: f64,
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid must be 'low:high:step', got '{s}'"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad grid number '{p}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let (low, high, step) = (nums[0], nums[1], nums[2]);
    if !(low > 0.0 && low.is_finite() && high.is_finite() && high >= low) {
        return Err(format!("grid range must satisfy 0 < low <= high, got {low}:{high}"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(format!("grid step must be positive, got {step}"));
    }
    Ok(GridSpec { low, high, step })
}

/// All values low, low+step, ... that fit below high (inclusive up to
/// float tolerance).
fn grid_values(g: &GridSpec) -> Vec<f64> {
    let n = ((g.high - g.low) / g.step + 1e-9).floor() as usize;
    (0..=n).map(|i| g.low + i as f64 * g.step).collect()
}

/// Prefix I/O failures with the file they concern; other error kinds
/// already carry their own context.
fn at_path(err: Error, path: &Path) -> Error {
    match err {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |e: std::io::Error| at_path(Error::Io(e), path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
    }
    std::fs::write(path, text).map_err(io)?;
    Ok(())
}

fn write_json_pretty<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

/// Which side of the stored train/validation split to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitSel {
    Val,
    Train,
    All,
}

fn split_scene_ids(dataset: &Dataset, val_fraction: f64, split: SplitSel) -> Result<Vec<usize>> {
    let (train_idx, val_idx) =
        synthdata::split_indices(dataset.scenes.len(), val_fraction, dataset.spec.seed)?;
    Ok(match split {
        SplitSel::Val => val_idx,
        SplitSel::Train => train_idx,
        SplitSel::All => (0..dataset.scenes.len()).collect(),
    })
}

/// A checkpoint only makes sense against the corpus it was trained on:
/// the stored dataset seed pins both the scenes and the split.
fn verify_checkpoint_matches(ckpt: &Checkpoint, dataset: &Dataset) -> Result<()> {
    net::validate_state(&ckpt.model)?;
    if ckpt.dataset_seed != dataset.spec.seed {
        return Err(Error::Structural(format!(
            "checkpoint was trained on dataset seed {} but this dataset has seed {}",
            ckpt.dataset_seed, dataset.spec.seed
        )));
    }
    let cfg = &ckpt.model.config;
    if cfg.num_scales != synthdata::NUM_SCALES || cfg.feature_dim != synthdata::FEATURES_PER_SCALE {
        return Err(Error::Structural(format!(
            "checkpoint expects {} scales x {} features but the corpus provides {} x {}",
            cfg.num_scales,
            cfg.feature_dim,
            synthdata::NUM_SCALES,
            synthdata::FEATURES_PER_SCALE
        )));
    }
    Ok(())
}

/// Full-scene (no crop) inference over the selected sample indices.
fn predict_records(
    model: &ModelState,
    dataset: &Dataset,
    ids: &[usize],
) -> Result<Vec<PredictionRecord>> {
    ids.par_iter()
        .map(|&i| {
            let scene = &dataset.scenes[i];
            let features = synthdata::scene_features(scene)?;
            let (params, _logit) = net::forward(model, &features)?;
            PredictionRecord::new(i, scene.label, &params)
        })
        .collect()
}

fn print_report_summary(report: &EvalReport) {
    println!(
        "n {}  f1 {:.4}  precision {:.4}  recall {:.4}  auc {:.4}  prc {:.4}  ece {:.4}  brier {:.4}",
        report.n_samples,
        report.f1,
        report.precision,
        report.recall,
        report.auc,
        report.prc,
        report.ece,
        report.brier
    );
}

// ---------------------------------------------------------------------------
// gen-data

#[derive(Args, Debug)]
pub struct GenDataArgs {
    /// Number of samples to generate.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of samples labeled positive.
    #[arg(long, default_value_t = 0.35)]
    pub pos_frac: f64,
    /// Fraction of the negatives rendered as hard negatives.
    #[arg(long, default_value_t = 0.7)]
    pub hard_frac: f64,
    /// White-noise amplitude added to every scale.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Output dataset file (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn gen_data(args: &GenDataArgs) -> Result<()> {
    let spec = DatasetSpec {
        n_samples: args.n,
        positive_fraction: args.pos_frac,
        hard_negative_fraction: args.hard_frac,
        noise_level: args.noise,
        seed: args.seed,
    };
    let dataset = synthdata::generate(&spec)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| at_path(Error::Io(e), parent))?;
        }
    }
    synthdata::save_dataset(&dataset, &args.out).map_err(|e| at_path(e, &args.out))?;
    let n_pos = dataset.scenes.iter().filter(|s| s.label == 1).count();
    println!(
        "wrote {} samples ({} positive, {} negative) to {}",
        dataset.scenes.len(),
        n_pos,
        dataset.scenes.len() - n_pos,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset file produced by gen-data.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory for the config snapshot, logs, and checkpoints.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Optional JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Held-out validation fraction.
    #[arg(long)]
    pub val_frac: Option<f64>,
    /// Classification loss weight.
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Distribution loss weight.
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub lr_backbone: Option<f64>,
    #[arg(long)]
    pub lr_dist_head: Option<f64>,
    #[arg(long)]
    pub lr_cls_head: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Near-zero Beta shape for degenerate target sides.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Positive-target construction: verbatim or mean-realizing.
    #[arg(long, value_parser = parse_positive_mode)]
    pub positive_mode: Option<PositiveBetaMode>,
    /// Hidden nonlinearity: rectifier or tanh.
    #[arg(long, value_parser = parse_activation)]
    pub activation: Option<Activation>,
    /// Comma-separated encoder widths, e.g. "32,16".
    #[arg(long, value_parser = parse_widths)]
    pub encoder_widths: Option<Vec<usize>>,
}

fn overrides_from(args: &TrainArgs) -> Overrides {
    Overrides {
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
        val_fraction: args.val_frac,
        lambda1: args.lambda1,
        lambda2: args.lambda2,
        lr_backbone: args.lr_backbone,
        lr_dist_head: args.lr_dist_head,
        lr_cls_head: args.lr_cls_head,
        weight_decay: args.weight_decay,
        epsilon: args.epsilon,
        positive_mode: args.positive_mode,
        activation: args.activation,
        encoder_widths: args.encoder_widths.clone(),
    }
}

/// Split deterministically, fit, and write the run artifacts: the
/// effective config snapshot, per-epoch stats, and best/final checkpoints.
fn run_training(cfg: &RunConfig, dataset: &Dataset, out_dir: &Path) -> Result<trainer::FitResult> {
    let (train_idx, val_idx) =
        synthdata::split_indices(dataset.scenes.len(), cfg.val_fraction, dataset.spec.seed)?;
    let train_scenes: Vec<_> = train_idx.iter().map(|&i| dataset.scenes[i].clone()).collect();
    let val_scenes: Vec<_> = val_idx.iter().map(|&i| dataset.scenes[i].clone()).collect();
    let fit = trainer::fit(&train_scenes, &val_scenes, &cfg.model, &cfg.train)?;

    std::fs::create_dir_all(out_dir).map_err(|e| at_path(Error::Io(e), out_dir))?;
    write_json_pretty(&out_dir.join("config.json"), cfg)?;
    let mut log = String::new();
    for stats in &fit.history {
        log.push_str(
            &serde_json::to_string(stats)
                .map_err(|e| Error::Parse(format!("serializing epoch stats: {e}")))?,
        );
        log.push('\n');
    }
    write_text(&out_dir.join("metrics.jsonl"), &log)?;

    let best = Checkpoint {
        model: fit.best.clone(),
        train: cfg.train.clone(),
        epoch: fit.best_epoch,
        val_fraction: cfg.val_fraction,
        dataset_seed: dataset.spec.seed,
    };
    let best_path = out_dir.join("best.ckpt.json");
    trainer::save_checkpoint(&best, &best_path).map_err(|e| at_path(e, &best_path))?;
    let final_ckpt = Checkpoint {
        model: fit.final_state.clone(),
        train: cfg.train.clone(),
        epoch: cfg.train.epochs.saturating_sub(1),
        val_fraction: cfg.val_fraction,
        dataset_seed: dataset.spec.seed,
    };
    let final_path = out_dir.join("final.ckpt.json");
    trainer::save_checkpoint(&final_ckpt, &final_path).map_err(|e| at_path(e, &final_path))?;
    Ok(fit)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let cfg = config::resolve(
        &args.data.display().to_string(),
        args.config.as_deref(),
        &overrides_from(args),
    )?;
    let dataset = synthdata::load_dataset(&args.data).map_err(|e| at_path(e, &args.data))?;
    let fit = run_training(&cfg, &dataset, &args.out_dir)?;
    for stats in &fit.history {
        println!(
            "epoch {:>3}  lr_factor {:.6}  train_loss {:.6}  val_acc {:.4}",
            stats.epoch, stats.lr_factor, stats.train_loss, stats.val_accuracy
        );
    }
    if fit.history.is_empty() {
        println!(
            "no training epochs requested; wrote the initial state (val_acc {:.4})",
            fit.best_val_accuracy
        );
    } else {
        println!(
            "best epoch {}  val_acc {:.4}",
            fit.best_epoch, fit.best_val_accuracy
        );
    }
    println!("artifacts in {}", args.out_dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Which side of the checkpoint's stored split to evaluate.
    #[arg(long, value_enum, default_value_t = SplitSel::Val)]
    pub split: SplitSel,
    /// Metrics report output (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-sample prediction dump (CSV).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Optional reliability-diagram table (CSV).
    #[arg(long)]
    pub reliability: Option<PathBuf>,
    #[arg(long, default_value_t = metrics::DEFAULT_ECE_BINS)]
    pub bins: usize,
    /// Calibration binning: positive-class or confidence.
    #[arg(long, value_parser = parse_ece_mode, default_value = "positive-class")]
    pub ece_mode: EceMode,
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let ckpt = trainer::load_checkpoint(&args.checkpoint).map_err(|e| at_path(e, &args.checkpoint))?;
    let dataset = synthdata::load_dataset(&args.data).map_err(|e| at_path(e, &args.data))?;
    verify_checkpoint_matches(&ckpt, &dataset)?;
    let ids = split_scene_ids(&dataset, ckpt.val_fraction, args.split)?;
    let records = predict_records(&ckpt.model, &dataset, &ids)?;
    let report = metrics::evaluate(&records, args.bins, args.ece_mode)?;
    write_json_pretty(&args.out, &report)?;
    if let Some(path) = &args.predictions {
        write_text(path, &csvio::predictions_csv(&records))?;
    }
    if let Some(path) = &args.reliability {
        write_text(path, &csvio::reliability_csv(&report.reliability))?;
    }
    print_report_summary(&report);
    Ok(())
}

// ---------------------------------------------------------------------------
// ensemble

#[derive(Args, Debug)]
pub struct EnsembleArgs {
    /// Two or more member checkpoints.
    #[arg(long, num_args = 2.., required = true)]
    pub checkpoints: Vec<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitSel::Val)]
    pub split: SplitSel,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = metrics::DEFAULT_ECE_BINS)]
    pub bins: usize,
    #[arg(long, value_parser = parse_ece_mode, default_value = "positive-class")]
    pub ece_mode: EceMode,
}

pub fn ensemble(args: &EnsembleArgs) -> Result<()> {
    let dataset = synthdata::load_dataset(&args.data).map_err(|e| at_path(e, &args.data))?;
    let mut ckpts = Vec::with_capacity(args.checkpoints.len());
    for path in &args.checkpoints {
        let ckpt = trainer::load_checkpoint(path).map_err(|e| at_path(e, path))?;
        verify_checkpoint_matches(&ckpt, &dataset)?;
        ckpts.push(ckpt);
    }
    // Members must agree on the split, or their predictions would not be
    // aligned sample by sample.
    for (path, ckpt) in args.checkpoints.iter().zip(&ckpts).skip(1) {
        if ckpt.val_fraction != ckpts[0].val_fraction {
            return Err(Error::Structural(format!(
                "member {} holds out {} of the data but the first member holds out {}",
                path.display(),
                ckpt.val_fraction,
                ckpts[0].val_fraction
            )));
        }
    }
    let ids = split_scene_ids(&dataset, ckpts[0].val_fraction, args.split)?;
    let members: Vec<Vec<PredictionRecord>> = ckpts
        .iter()
        .map(|ckpt| predict_records(&ckpt.model, &dataset, &ids))
        .collect::<Result<_>>()?;
    let report = metrics::ensemble_eval(&members, args.bins, args.ece_mode)?;
    write_json_pretty(&args.out, &report)?;
    print_report_summary(&report);
    if let Some(stats) = &report.ensemble {
        println!(
            "ensemble of {}: mean_variance {:.6}  disagreement {:.4}",
            stats.members, stats.mean_variance, stats.disagreement_rate
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// w2-analysis

#[derive(Args, Debug)]
pub struct W2Args {
    /// Fixed target distribution as "alpha,beta".
    #[arg(long, value_parser = parse_target, default_value = "2,5")]
    pub target: TargetSpec,
    /// Predicted-parameter grid as "low:high:step", applied to both shapes.
    #[arg(long, value_parser = parse_grid, default_value = "0.5:10:0.25")]
    pub grid: GridSpec,
    /// Quadrature nodes for the true distance.
    #[arg(long, default_value_t = betarisk_core::loss::DEFAULT_W2_NODES)]
    pub nodes: usize,
    /// Directory for the CSV and the two heatmaps.
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn w2_analysis(args: &W2Args) -> Result<()> {
    let target = BetaParams::new(args.target.alpha, args.target.beta)?;
    let target_q = betarisk_core::loss::quantile_grid(&target, args.nodes)?;
    let coords = grid_values(&args.grid);

    // Row-major sweep: beta varies by row, alpha by column.
    let cells: Vec<(f64, f64)> = coords
        .iter()
        .flat_map(|&b| coords.iter().map(move |&a| (a, b)))
        .collect();
    let rows: Vec<W2Row> = cells
        .par_iter()
        .map(|&(alpha, beta)| {
            let pred = BetaParams::new(alpha, beta)?;
            let pred_q = betarisk_core::loss::quantile_grid(&pred, args.nodes)?;
            let w2_true = betarisk_core::loss::w2_true_from_grids(&pred_q, &target_q)?;
            let w2_surrogate = betarisk_core::loss::w2_surrogate(&pred, &target);
            let abs_diff = (w2_surrogate - w2_true).abs();
            let rel_diff = if w2_true > 0.0 { abs_diff / w2_true } else { 0.0 };
            Ok(W2Row { alpha, beta, w2_true, w2_surrogate, abs_diff, rel_diff })
        })
        .collect::<Result<_>>()?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| at_path(Error::Io(e), &args.out_dir))?;
    write_text(&args.out_dir.join("w2_sweep.csv"), &csvio::w2_csv(&rows))?;

    let abs_values: Vec<f64> = rows.iter().map(|r| r.abs_diff).collect();
    let rel_values: Vec<f64> = rows.iter().map(|r| r.rel_diff).collect();
    let abs_title = format!(
        "abs |surrogate - true W2^2|, target Beta({}, {})",
        args.target.alpha, args.target.beta
    );
    let rel_title = format!(
        "relative difference vs true W2^2, target Beta({}, {})",
        args.target.alpha, args.target.beta
    );
    write_text(
        &args.out_dir.join("abs_diff.svg"),
        &svg::heatmap(&svg::HeatmapSpec {
            title: &abs_title,
            legend: "log10",
            coords: &coords,
            values: &abs_values,
            log_color: true,
        }),
    )?;
    write_text(
        &args.out_dir.join("rel_diff.svg"),
        &svg::heatmap(&svg::HeatmapSpec {
            title: &rel_title,
            legend: "log10",
            coords: &coords,
            values: &rel_values,
            log_color: true,
        }),
    )?;

    let mut abs_sorted = abs_values.clone();
    abs_sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite diffs"));
    let median = abs_sorted[abs_sorted.len() / 2];
    println!(
        "{} cells  median abs diff {:.6e}  max abs diff {:.6e}",
        rows.len(),
        median,
        abs_sorted[abs_sorted.len() - 1]
    );
    println!("artifacts in {}", args.out_dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// ablation

/// The fixed grid of (classification, distribution) loss-weight pairs.
pub const ABLATION_WEIGHTS: [(f64, f64); 5] = [(10.0, 1.0), (5.0, 1.0), (1.0, 1.0), (1.0, 5.0), (1.0, 10.0)];

#[derive(Args, Debug)]
pub struct AblationArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Output table file (text).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub val_frac: Option<f64>,
}

pub fn ablation(args: &AblationArgs) -> Result<()> {
    let over = Overrides {
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
        val_fraction: args.val_frac,
        ..Default::default()
    };
    let base = config::resolve(&args.data.display().to_string(), args.config.as_deref(), &over)?;
    let dataset = synthdata::load_dataset(&args.data).map_err(|e| at_path(e, &args.data))?;
    let (train_idx, val_idx) =
        synthdata::split_indices(dataset.scenes.len(), base.val_fraction, dataset.spec.seed)?;
    let train_scenes: Vec<_> = train_idx.iter().map(|&i| dataset.scenes[i].clone()).collect();
    let val_scenes: Vec<_> = val_idx.iter().map(|&i| dataset.scenes[i].clone()).collect();

    let mut table = String::from("lambda1  lambda2  f1      precision  recall\n");
    for (l1, l2) in ABLATION_WEIGHTS {
        let mut cfg = base.clone();
        cfg.train.loss_weights.lambda1 = l1;
        cfg.train.loss_weights.lambda2 = l2;
        let fit = trainer::fit(&train_scenes, &val_scenes, &cfg.model, &cfg.train)?;
        let records: Vec<PredictionRecord> = val_idx
            .iter()
            .map(|&i| {
                let features = synthdata::scene_features(&dataset.scenes[i])?;
                let (params, _) = net::forward(&fit.best, &features)?;
                PredictionRecord::new(i, dataset.scenes[i].label, &params)
            })
            .collect::<Result<_>>()?;
        let scored: Vec<metrics::Scored> = records.iter().map(metrics::Scored::from).collect();
        let (f1, precision, recall, _) = metrics::classification_metrics(&scored)?;
        table.push_str(&format!(
            "{:<7}  {:<7}  {:.4}  {:<9.4}  {:.4}\n",
            l1, l2, f1, precision, recall
        ));
    }
    write_text(&args.out, &table)?;
    print!("{table}");
    println!("table written to {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// riskmap

#[derive(Args, Debug)]
pub struct RiskmapArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitSel::All)]
    pub split: SplitSel,
    #[arg(long)]
    pub out_geojson: PathBuf,
    #[arg(long)]
    pub out_svg: PathBuf,
}

pub fn riskmap(args: &RiskmapArgs) -> Result<()> {
    let ckpt = trainer::load_checkpoint(&args.checkpoint).map_err(|e| at_path(e, &args.checkpoint))?;
    let dataset = synthdata::load_dataset(&args.data).map_err(|e| at_path(e, &args.data))?;
    verify_checkpoint_matches(&ckpt, &dataset)?;
    let ids = split_scene_ids(&dataset, ckpt.val_fraction, args.split)?;
    let records = predict_records(&ckpt.model, &dataset, &ids)?;

    let mut features = Vec::with_capacity(records.len());
    let mut points = Vec::with_capacity(records.len());
    for rec in &records {
        let (lon, lat) = dataset.scenes[rec.sample_id].location;
        if !lon.is_finite() || !lat.is_finite() {
            return Err(Error::Structural(format!(
                "sample {} has no usable location ({lon}, {lat})",
                rec.sample_id
            )));
        }
        features.push(geojson::point(
            lon,
            lat,
            geojson::Properties {
                risk: rec.risk,
                alpha: rec.alpha,
                beta: rec.beta,
                std_dev: rec.std_dev,
                label: rec.label,
            },
        ));
        points.push(svg::ScatterPoint { lon, lat, risk: rec.risk, label: rec.label });
    }
    write_json_pretty(&args.out_geojson, &geojson::collection(features))?;
    write_text(&args.out_svg, &svg::risk_scatter("per-location crash risk", &points))?;
    println!(
        "wrote {} features to {} and {}",
        records.len(),
        args.out_geojson.display(),
        args.out_svg.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values_cover_the_default_sweep() {
        let g = parse_grid("0.5:10:0.25").unwrap();
        let values = grid_values(&g);
        assert_eq!(values.len(), 39);
        assert_eq!(values[0], 0.5);
        assert!((values[38] - 10.0).abs() < 1e-12);
        // The default target (2, 5) lies on the grid, giving an identity cell.
        assert!(values.iter().any(|&v| (v - 2.0).abs() < 1e-12));
        assert!(values.iter().any(|&v| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn grid_values_handle_non_divisible_ranges() {
        let g = parse_grid("0.5:10:0.3").unwrap();
        let values = grid_values(&g);
        assert!((values[values.len() - 1] - 9.8).abs() < 1e-12);
        assert!(values.iter().all(|&v| v <= 10.0 + 1e-12));
    }

    #[test]
    fn bad_grid_and_target_specs_are_rejected() {
        assert!(parse_grid("0.5:10:0").is_err());
        assert!(parse_grid("0.5:10:-1").is_err());
        assert!(parse_grid("0:10:0.25").is_err());
        assert!(parse_grid("5:1:0.25").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_target("2").is_err());
        assert!(parse_target("0,5").is_err());
        assert!(parse_target("2,5").unwrap().beta == 5.0);
    }

    #[test]
    fn width_and_mode_parsers_round_trip() {
        assert_eq!(parse_widths("32,16").unwrap(), vec![32, 16]);
        assert!(parse_widths("32,x").is_err());
        assert_eq!(parse_activation("tanh").unwrap(), Activation::Tanh);
        assert!(parse_activation("gelu").is_err());
        assert_eq!(
            parse_positive_mode("mean-realizing").unwrap(),
            PositiveBetaMode::MeanRealizing
        );
        assert!(parse_ece_mode("confidence").is_ok());
        assert!(parse_ece_mode("banana").is_err());
    }

    #[test]
    fn ablation_weight_grid_is_the_fixed_five() {
        assert_eq!(
            ABLATION_WEIGHTS,
            [(10.0, 1.0), (5.0, 1.0), (1.0, 1.0), (1.0, 5.0), (1.0, 10.0)]
        );
    }
}
