//! Procedural construction of Beta-distribution targets from a binary
//! label and crop geometry: crops that sit closer to the scene center and
//! cover more area get targets with higher mean and concentration.

use serde::{Deserialize, Serialize};

use crate::beta::BetaParams;
use crate::error::{Error, Result};

/// How the positive-label (α, β) pair is assembled from (μ_t, k_t).
///
/// `Verbatim` keeps β at ε, which forces the target mean to ≈ 1 for every
/// positive regardless of μ_t; `MeanRealizing` splits the concentration so
/// the target mean equals μ_t exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveBetaMode {
    Verbatim,
    MeanRealizing,
}

impl std::str::FromStr for PositiveBetaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verbatim" => Ok(Self::Verbatim),
            "mean-realizing" | "mean_realizing" => Ok(Self::MeanRealizing),
            other => Err(Error::InvalidParameter(format!(
                "unknown positive beta mode `{other}` (expected `verbatim` or `mean-realizing`)"
            ))),
        }
    }
}

/// Target-generation constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelGenConfig {
    /// Concentration assigned to negatives and the ceiling for positives.
    pub base_concentration: f64,
    /// Near-zero shape used for the degenerate side of a target.
    pub epsilon: f64,
    /// Target mean for a positive crop with zero influence.
    pub min_positive_mean: f64,
    /// Target concentration for a positive crop with zero influence.
    pub min_positive_concentration: f64,
    /// Weight of the centrality term in influence.
    pub distance_weight: f64,
    /// Weight of the size term in influence.
    pub size_weight: f64,
    pub positive_mode: PositiveBetaMode,
}

impl Default for LabelGenConfig {
    fn default() -> Self {
        Self {
            base_concentration: 22.0,
            epsilon: 1e-5,
            min_positive_mean: 0.18,
            min_positive_concentration: 18.0,
            distance_weight: 0.7,
            size_weight: 0.3,
            positive_mode: PositiveBetaMode::Verbatim,
        }
    }
}

impl LabelGenConfig {
    pub fn validate(&self) -> Result<()> {
        let all_finite = self.base_concentration.is_finite()
            && self.epsilon.is_finite()
            && self.min_positive_mean.is_finite()
            && self.min_positive_concentration.is_finite()
            && self.distance_weight.is_finite()
            && self.size_weight.is_finite();
        if !all_finite {
            return Err(Error::InvalidParameter(
                "label generation constants must all be finite".into(),
            ));
        }
        if self.base_concentration <= 0.0 || self.epsilon <= 0.0 {
            return Err(Error::InvalidParameter(
                "base concentration and epsilon must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.min_positive_mean) {
            return Err(Error::InvalidParameter(format!(
                "min positive mean {} outside [0, 1)",
                self.min_positive_mean
            )));
        }
        if self.min_positive_concentration <= 0.0
            || self.min_positive_concentration > self.base_concentration
        {
            return Err(Error::InvalidParameter(
                "min positive concentration must lie in (0, base concentration]".into(),
            ));
        }
        if self.distance_weight < 0.0
            || self.size_weight < 0.0
            || (self.distance_weight + self.size_weight - 1.0).abs() > 1e-12
        {
            return Err(Error::InvalidParameter(
                "influence weights must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(())
    }
}

/// A square crop window inside a square source image, in pixels. Validated
/// so the window always lies fully inside the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropGeometry {
    source_size: u32,
    crop_size: u32,
    offset_x: u32,
    offset_y: u32,
}

impl CropGeometry {
    pub fn new(source_size: u32, crop_size: u32, offset_x: u32, offset_y: u32) -> Result<Self> {
        if source_size == 0 || crop_size == 0 {
            return Err(Error::InvalidParameter(
                "source and crop sizes must be positive".into(),
            ));
        }
        if crop_size > source_size {
            return Err(Error::InvalidParameter(format!(
                "crop size {crop_size} exceeds source size {source_size}"
            )));
        }
        if offset_x + crop_size > source_size || offset_y + crop_size > source_size {
            return Err(Error::InvalidParameter(format!(
                "crop {crop_size}px at ({offset_x}, {offset_y}) leaves the {source_size}px source"
            )));
        }
        Ok(Self {
            source_size,
            crop_size,
            offset_x,
            offset_y,
        })
    }

    /// The whole source as one crop.
    pub fn full(source_size: u32) -> Result<Self> {
        Self::new(source_size, source_size, 0, 0)
    }

    pub fn source_size(&self) -> u32 {
        self.source_size
    }

    pub fn crop_size(&self) -> u32 {
        self.crop_size
    }

    pub fn offset_x(&self) -> u32 {
        self.offset_x
    }

    pub fn offset_y(&self) -> u32 {
        self.offset_y
    }
}

/// Distance between crop center and source center, normalized by the
/// source's half-diagonal and clamped into [0, 1].
pub fn normalized_distance(g: &CropGeometry) -> f64 {
    let half = f64::from(g.crop_size) / 2.0;
    let cx = f64::from(g.offset_x) + half;
    let cy = f64::from(g.offset_y) + half;
    let sc = f64::from(g.source_size) / 2.0;
    let dist = ((cx - sc).powi(2) + (cy - sc).powi(2)).sqrt();
    let half_diagonal = sc * std::f64::consts::SQRT_2;
    (dist / half_diagonal).clamp(0.0, 1.0)
}

/// Crop area as a fraction of source area: (crop/source)².
pub fn normalized_size(g: &CropGeometry) -> f64 {
    let r = f64::from(g.crop_size) / f64::from(g.source_size);
    r * r
}

/// influence = w_dist · (1 − d_norm) + w_size · s_norm, from precomputed scores.
pub fn influence_from_scores(d_norm: f64, s_norm: f64, config: &LabelGenConfig) -> f64 {
    config.distance_weight * (1.0 - d_norm) + config.size_weight * s_norm
}

/// Influence of a crop: centrality and coverage blended by the config weights.
pub fn influence(g: &CropGeometry, config: &LabelGenConfig) -> f64 {
    influence_from_scores(normalized_distance(g), normalized_size(g), config)
}

/// Target Beta parameters from a binary label and precomputed geometry scores.
pub fn make_target_from_scores(
    label: u8,
    d_norm: f64,
    s_norm: f64,
    config: &LabelGenConfig,
) -> Result<BetaParams> {
    if label > 1 {
        return Err(Error::Domain(format!(
            "label must be 0 or 1, got {label}"
        )));
    }
    if label == 0 {
        return BetaParams::new(config.epsilon, config.base_concentration);
    }
    let infl = influence_from_scores(d_norm, s_norm, config);
    let mu = config.min_positive_mean + (1.0 - config.min_positive_mean) * infl;
    let k = config.min_positive_concentration
        + (config.base_concentration - config.min_positive_concentration) * infl;
    match config.positive_mode {
        PositiveBetaMode::Verbatim => BetaParams::new(mu * k, config.epsilon),
        // ε floors keep both shapes valid when influence reaches an exact
        // endpoint (μ = 1 would otherwise zero out β).
        PositiveBetaMode::MeanRealizing => BetaParams::new(
            (mu * k).max(config.epsilon),
            ((1.0 - mu) * k).max(config.epsilon),
        ),
    }
}

/// Target Beta parameters from a binary label and crop geometry.
pub fn make_target(label: u8, g: &CropGeometry, config: &LabelGenConfig) -> Result<BetaParams> {
    make_target_from_scores(label, normalized_distance(g), normalized_size(g), config)
}
