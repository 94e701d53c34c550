//! Seeded synthetic scene corpus with planted hazard motifs, standing in
//! for an out-of-scope satellite dataset. Positive scenes carry a centered
//! motif (crossing lines plus a radial bump); hard negatives carry
//! road-like lines that avoid the center; easy negatives are smooth
//! background. Also provides the pooled-feature extraction used as model
//! input and the deterministic train/validation split.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelgen::CropGeometry;

pub const GRID_SIZE: usize = 64;
pub const NUM_SCALES: usize = 3;
/// Pooling grid is POOL_CELLS × POOL_CELLS per crop.
pub const POOL_CELLS: usize = 4;
/// Per-cell statistics: mean, max, population std, mean |gradient|.
pub const STATS_PER_CELL: usize = 4;
pub const FEATURES_PER_SCALE: usize = POOL_CELLS * POOL_CELLS * STATS_PER_CELL;

const BG_LATTICE: usize = 9;
const BG_AMPLITUDE: f64 = 0.35;
const LINE_AMPLITUDE: f64 = 0.6;
const BUMP_AMPLITUDE: f64 = 1.0;
/// Per-scale rendering: larger index simulates a finer (zoomed-in) ground
/// resolution, so motif strokes span more pixels there.
const LINE_SIGMA: [f64; NUM_SCALES] = [1.0, 1.5, 2.2];
const BUMP_RADIUS: [f64; NUM_SCALES] = [4.0, 8.0, 16.0];
/// Hard-negative lines keep at least this distance from the scene center.
const HARD_NEG_CLEARANCE: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Positive,
    HardNegative,
    EasyNegative,
}

impl SampleKind {
    pub fn label(self) -> u8 {
        match self {
            SampleKind::Positive => 1,
            _ => 0,
        }
    }
}

/// One multi-scale scene; grids are row-major GRID_SIZE × GRID_SIZE.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scales: Vec<Vec<f64>>,
    pub label: u8,
    pub kind: SampleKind,
    /// Synthetic coordinates in [-0.5, 0.5]².
    pub location: (f64, f64),
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_samples: usize,
    pub positive_fraction: f64,
    /// Fraction of the negatives rendered as hard negatives.
    pub hard_negative_fraction: f64,
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            positive_fraction: 0.35,
            hard_negative_fraction: 0.7,
            noise_level: 0.05,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter(
                "n_samples must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("positive_fraction", self.positive_fraction),
            ("hard_negative_fraction", self.hard_negative_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if !self.noise_level.is_finite() || self.noise_level < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise_level must be finite and nonnegative, got {}",
                self.noise_level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub scenes: Vec<Scene>,
}

/// SplitMix64-style stream derivation: one master seed, many independent
/// deterministic substreams.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct LineSpec {
    /// A point the line passes through.
    point: (f64, f64),
    angle: f64,
}

enum Motif {
    Positive { lines: [LineSpec; 2] },
    Lines(Vec<LineSpec>),
    None,
}

fn grid_center() -> f64 {
    (GRID_SIZE as f64 - 1.0) / 2.0
}

fn draw_motif(kind: SampleKind, rng: &mut ChaCha8Rng) -> Motif {
    use std::f64::consts::PI;
    let c = grid_center();
    match kind {
        SampleKind::Positive => {
            let a1 = rng.gen_range(0.0..PI);
            // Separation in (30°, 150°) keeps the crossing visibly X-shaped.
            let sep = rng.gen_range(PI / 6.0..PI * 5.0 / 6.0);
            let a2 = (a1 + sep) % PI;
            Motif::Positive {
                lines: [
                    LineSpec { point: (c, c), angle: a1 },
                    LineSpec { point: (c, c), angle: a2 },
                ],
            }
        }
        SampleKind::HardNegative => {
            let n = rng.gen_range(2..=3usize);
            let lines = (0..n)
                .map(|_| {
                    let angle = rng.gen_range(0.0..PI);
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let dist = sign * rng.gen_range(HARD_NEG_CLEARANCE..24.0);
                    // Shift the through-point off-center along the normal.
                    let (nx, ny) = (-angle.sin(), angle.cos());
                    LineSpec {
                        point: (c + dist * nx, c + dist * ny),
                        angle,
                    }
                })
                .collect();
            Motif::Lines(lines)
        }
        SampleKind::EasyNegative => Motif::None,
    }
}

fn render_background(rng: &mut ChaCha8Rng, noise_level: f64, grid: &mut [f64]) {
    let mut lattice = [[0.0f64; BG_LATTICE]; BG_LATTICE];
    for row in lattice.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.gen_range(0.0..BG_AMPLITUDE);
        }
    }
    let step = (BG_LATTICE - 1) as f64 / (GRID_SIZE - 1) as f64;
    for y in 0..GRID_SIZE {
        for x in 0..GRID_SIZE {
            let u = x as f64 * step;
            let v = y as f64 * step;
            let i0 = (u as usize).min(BG_LATTICE - 2);
            let j0 = (v as usize).min(BG_LATTICE - 2);
            let fu = u - i0 as f64;
            let fv = v - j0 as f64;
            let top = lattice[j0][i0] * (1.0 - fu) + lattice[j0][i0 + 1] * fu;
            let bot = lattice[j0 + 1][i0] * (1.0 - fu) + lattice[j0 + 1][i0 + 1] * fu;
            grid[y * GRID_SIZE + x] = top * (1.0 - fv) + bot * fv;
        }
    }
    if noise_level > 0.0 {
        for v in grid.iter_mut() {
            *v += rng.gen_range(-noise_level..noise_level);
        }
    }
}

fn add_line(grid: &mut [f64], line: &LineSpec, sigma: f64) {
    let (px, py) = line.point;
    let (nx, ny) = (-line.angle.sin(), line.angle.cos());
    let denom = 2.0 * sigma * sigma;
    for y in 0..GRID_SIZE {
        for x in 0..GRID_SIZE {
            let d = (x as f64 - px) * nx + (y as f64 - py) * ny;
            grid[y * GRID_SIZE + x] += LINE_AMPLITUDE * (-d * d / denom).exp();
        }
    }
}

fn add_bump(grid: &mut [f64], radius: f64) {
    let c = grid_center();
    let denom = 2.0 * radius * radius;
    for y in 0..GRID_SIZE {
        for x in 0..GRID_SIZE {
            let dx = x as f64 - c;
            let dy = y as f64 - c;
            grid[y * GRID_SIZE + x] += BUMP_AMPLITUDE * (-(dx * dx + dy * dy) / denom).exp();
        }
    }
}

/// Render one scene from its seed. Draw order is fixed (location, motif
/// parameters, then per-scale background) so stored records regenerate
/// bit-identical grids.
pub fn render_scene(kind: SampleKind, seed: u64, noise_level: f64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lon = rng.gen_range(-0.5..0.5);
    let lat = rng.gen_range(-0.5..0.5);
    let motif = draw_motif(kind, &mut rng);
    let mut scales = Vec::with_capacity(NUM_SCALES);
    for s in 0..NUM_SCALES {
        let mut grid = vec![0.0f64; GRID_SIZE * GRID_SIZE];
        render_background(&mut rng, noise_level, &mut grid);
        match &motif {
            Motif::Positive { lines } => {
                for line in lines {
                    add_line(&mut grid, line, LINE_SIGMA[s]);
                }
                add_bump(&mut grid, BUMP_RADIUS[s]);
            }
            Motif::Lines(lines) => {
                for line in lines {
                    add_line(&mut grid, line, LINE_SIGMA[s]);
                }
            }
            Motif::None => {}
        }
        scales.push(grid);
    }
    Scene {
        scales,
        label: kind.label(),
        kind,
        location: (lon, lat),
        seed,
    }
}

/// Deterministic corpus: counts by rounding, kind order shuffled once,
/// per-sample seeds derived from the spec seed.
pub fn generate(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.n_samples;
    let n_pos = (n as f64 * spec.positive_fraction).round() as usize;
    let n_neg = n - n_pos;
    let n_hard = (n_neg as f64 * spec.hard_negative_fraction).round() as usize;
    let n_easy = n_neg - n_hard;

    let mut kinds = Vec::with_capacity(n);
    kinds.extend(std::iter::repeat_n(SampleKind::Positive, n_pos));
    kinds.extend(std::iter::repeat_n(SampleKind::HardNegative, n_hard));
    kinds.extend(std::iter::repeat_n(SampleKind::EasyNegative, n_easy));
    let mut order_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 0));
    kinds.shuffle(&mut order_rng);

    let scenes = kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| render_scene(kind, derive_seed(spec.seed, 1 + i as u64), spec.noise_level))
        .collect();
    Ok(Dataset {
        spec: spec.clone(),
        scenes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orientation {
    /// Clockwise quarter turns applied to the crop content, 0..=3.
    pub quarter_turns: u8,
    pub flip_horizontal: bool,
}

impl Orientation {
    pub const IDENTITY: Orientation = Orientation {
        quarter_turns: 0,
        flip_horizontal: false,
    };
}

fn extract_window(grid: &[f64], g: &CropGeometry) -> Vec<f64> {
    let side = g.crop_size() as usize;
    let ox = g.offset_x() as usize;
    let oy = g.offset_y() as usize;
    let mut out = Vec::with_capacity(side * side);
    for y in 0..side {
        let row = (oy + y) * GRID_SIZE + ox;
        out.extend_from_slice(&grid[row..row + side]);
    }
    out
}

fn orient(window: &mut [f64], side: usize, o: Orientation) {
    if o.flip_horizontal {
        for y in 0..side {
            window[y * side..(y + 1) * side].reverse();
        }
    }
    for _ in 0..(o.quarter_turns % 4) {
        // Clockwise: (y, x) → (x, side-1-y).
        let src = window.to_vec();
        for y in 0..side {
            for x in 0..side {
                window[x * side + (side - 1 - y)] = src[y * side + x];
            }
        }
    }
}

fn pool_window(window: &[f64], side: usize) -> Vec<f64> {
    let mut feats = Vec::with_capacity(FEATURES_PER_SCALE);
    for cy in 0..POOL_CELLS {
        let y0 = cy * side / POOL_CELLS;
        let y1 = (cy + 1) * side / POOL_CELLS;
        for cx in 0..POOL_CELLS {
            let x0 = cx * side / POOL_CELLS;
            let x1 = (cx + 1) * side / POOL_CELLS;
            let count = ((y1 - y0) * (x1 - x0)) as f64;
            let mut sum = 0.0;
            let mut max = f64::NEG_INFINITY;
            for y in y0..y1 {
                for x in x0..x1 {
                    let v = window[y * side + x];
                    sum += v;
                    if v > max {
                        max = v;
                    }
                }
            }
            let mean = sum / count;
            let mut var_sum = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    let d = window[y * side + x] - mean;
                    var_sum += d * d;
                }
            }
            let std = (var_sum / count).sqrt();
            // Mean |forward difference| over in-cell adjacent pairs; no
            // reads outside the cell, so pooling sees only crop content.
            let mut grad_sum = 0.0;
            let mut grad_n = 0usize;
            for y in y0..y1 {
                for x in x0..x1.saturating_sub(1) {
                    grad_sum += (window[y * side + x + 1] - window[y * side + x]).abs();
                    grad_n += 1;
                }
            }
            for y in y0..y1.saturating_sub(1) {
                for x in x0..x1 {
                    grad_sum += (window[(y + 1) * side + x] - window[y * side + x]).abs();
                    grad_n += 1;
                }
            }
            let grad = if grad_n == 0 { 0.0 } else { grad_sum / grad_n as f64 };
            feats.extend_from_slice(&[mean, max, std, grad]);
        }
    }
    feats
}

/// Pooled features of one crop window, after an optional content
/// orientation change (geometry for label generation is unaffected). The
/// same pixel window applies to every scale.
pub fn crop_features_oriented(
    scene: &Scene,
    g: &CropGeometry,
    orientation: Orientation,
) -> Result<Vec<Vec<f64>>> {
    if g.source_size() as usize != GRID_SIZE {
        return Err(Error::Structural(format!(
            "crop geometry targets a {}-pixel source, scenes are {}",
            g.source_size(),
            GRID_SIZE
        )));
    }
    let side = g.crop_size() as usize;
    if side < POOL_CELLS {
        return Err(Error::Structural(format!(
            "crop side {side} is smaller than the {POOL_CELLS}x{POOL_CELLS} pooling grid"
        )));
    }
    let mut out = Vec::with_capacity(scene.scales.len());
    for grid in &scene.scales {
        let mut window = extract_window(grid, g);
        orient(&mut window, side, orientation);
        out.push(pool_window(&window, side));
    }
    Ok(out)
}

pub fn crop_features(scene: &Scene, g: &CropGeometry) -> Result<Vec<Vec<f64>>> {
    crop_features_oriented(scene, g, Orientation::IDENTITY)
}

/// Features of the whole scene (the full-image inference path).
pub fn scene_features(scene: &Scene) -> Result<Vec<Vec<f64>>> {
    let g = CropGeometry::full(GRID_SIZE as u32)?;
    crop_features(scene, &g)
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleRecord {
    label: u8,
    kind: SampleKind,
    lon: f64,
    lat: f64,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetFile {
    spec: DatasetSpec,
    samples: Vec<SampleRecord>,
}

/// Compact dataset file: spec plus per-sample records; grids regenerate
/// from seeds on load.
pub fn save_dataset(dataset: &Dataset, path: &std::path::Path) -> Result<()> {
    let file = DatasetFile {
        spec: dataset.spec.clone(),
        samples: dataset
            .scenes
            .iter()
            .map(|s| SampleRecord {
                label: s.label,
                kind: s.kind,
                lon: s.location.0,
                lat: s.location.1,
                seed: s.seed,
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_dataset(path: &std::path::Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let file: DatasetFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    file.spec.validate()?;
    let mut scenes = Vec::with_capacity(file.samples.len());
    for (i, rec) in file.samples.iter().enumerate() {
        let scene = render_scene(rec.kind, rec.seed, file.spec.noise_level);
        if scene.label != rec.label || scene.location != (rec.lon, rec.lat) {
            return Err(Error::Structural(format!(
                "sample {i}: stored record does not match its regenerated scene"
            )));
        }
        scenes.push(scene);
    }
    if scenes.is_empty() {
        return Err(Error::Structural("dataset file holds no samples".into()));
    }
    Ok(Dataset {
        spec: file.spec,
        scenes,
    })
}

/// Seeded permutation split; both sides sorted ascending, disjoint, and
/// jointly covering 0..n.
pub fn split_indices(n: usize, val_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&val_fraction) || val_fraction <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "val_fraction must lie in (0, 1), got {val_fraction}"
        )));
    }
    let n_val = (n as f64 * val_fraction).round() as usize;
    if n_val == 0 || n_val >= n {
        return Err(Error::InvalidParameter(format!(
            "split of {n} samples at fraction {val_fraction} leaves an empty side"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5_1D));
    perm.shuffle(&mut rng);
    let mut val: Vec<usize> = perm[..n_val].to_vec();
    let mut train: Vec<usize> = perm[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((train, val))
}

/// Sum of squared deviations from the scene-wide mean, over one window,
/// summed across scales. The "motif energy" of that window.
pub fn window_energy(scene: &Scene, x0: usize, y0: usize, side: usize) -> f64 {
    let mut total = 0.0;
    for grid in &scene.scales {
        let mean: f64 = grid.iter().sum::<f64>() / grid.len() as f64;
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                let d = grid[y * GRID_SIZE + x] - mean;
                total += d * d;
            }
        }
    }
    total
}
