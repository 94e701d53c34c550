//! Dependency-free SVG rendering: parameter-grid heatmaps and a location
//! scatter colored by risk. All coordinates and colors are emitted with
//! fixed formatting so identical inputs produce identical bytes.

use std::fmt::Write as _;

/// Five-stop perceptual colormap (dark violet to yellow), linearly
/// interpolated in RGB.
const STOPS: [(u8, u8, u8); 5] = [
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
];

/// Map t in [0, 1] to a hex color along the stop gradient.
pub fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let scaled = t * (STOPS.len() - 1) as f64;
    let k = (scaled.floor() as usize).min(STOPS.len() - 2);
    let local = scaled - k as f64;
    let (r0, g0, b0) = STOPS[k];
    let (r1, g1, b1) = STOPS[k + 1];
    let lerp = |a: u8, b: u8| -> u8 { (a as f64 + (b as f64 - a as f64) * local).round() as u8 };
    format!("#{:02x}{:02x}{:02x}", lerp(r0, r1), lerp(g0, g1), lerp(b0, b1))
}

/// Inputs for one square heatmap over a shared parameter axis.
pub struct HeatmapSpec<'a> {
    pub title: &'a str,
    /// Caption next to the colorbar describing the plotted quantity.
    pub legend: &'a str,
    /// Tick values shared by both axes; the grid is coords × coords.
    pub coords: &'a [f64],
    /// Row-major cell values; row index = y parameter, column index = x.
    pub values: &'a [f64],
    /// Color by log10 of the value (for positive quantities spanning
    /// orders of magnitude) instead of the raw value.
    pub log_color: bool,
}

const CELL: usize = 12;
const LEFT: usize = 64;
const TOP: usize = 44;
const BAR_GAP: usize = 24;
const BAR_W: usize = 18;
const RIGHT: usize = 110;
const BOTTOM: usize = 56;

/// Color-normalization transform shared by the cells and the colorbar.
fn transform(v: f64, log_color: bool) -> f64 {
    if log_color {
        v.max(1e-300).log10()
    } else {
        v
    }
}

pub fn heatmap(spec: &HeatmapSpec) -> String {
    let n = spec.coords.len();
    assert_eq!(spec.values.len(), n * n, "heatmap needs an n x n value grid");
    let plot = n * CELL;
    let width = LEFT + plot + BAR_GAP + BAR_W + RIGHT;
    let height = TOP + plot + BOTTOM;

    let transformed: Vec<f64> = spec
        .values
        .iter()
        .map(|&v| transform(v, spec.log_color))
        .collect();
    let lo = transformed.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = transformed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let norm = |t: f64| -> f64 {
        if hi > lo {
            (t - lo) / (hi - lo)
        } else {
            0.5
        }
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(s, "<rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"26\" font-family=\"monospace\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        LEFT + plot / 2,
        spec.title
    );

    // Cells; the y axis increases upward.
    for iy in 0..n {
        let y = TOP + (n - 1 - iy) * CELL;
        for ix in 0..n {
            let x = LEFT + ix * CELL;
            let fill = color(norm(transformed[iy * n + ix]));
            let _ = writeln!(
                s,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{fill}\"/>"
            );
        }
    }
    let _ = writeln!(
        s,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{plot}\" height=\"{plot}\" fill=\"none\" stroke=\"#444444\"/>"
    );

    // Up to six ticks per axis, always including both ends.
    let tick_count = 6.min(n);
    let tick_indices: Vec<usize> = (0..tick_count)
        .map(|k| k * (n - 1) / (tick_count - 1).max(1))
        .collect();
    for &i in &tick_indices {
        let cx = LEFT + i * CELL + CELL / 2;
        let _ = writeln!(
            s,
            "<text x=\"{cx}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{:.2}</text>",
            TOP + plot + 16,
            spec.coords[i]
        );
        let cy = TOP + (n - 1 - i) * CELL + CELL / 2 + 4;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{cy}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{:.2}</text>",
            LEFT - 8,
            spec.coords[i]
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\">alpha</text>",
        LEFT + plot / 2,
        TOP + plot + 40
    );
    let _ = writeln!(
        s,
        "<text x=\"18\" y=\"{}\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">beta</text>",
        TOP + plot / 2,
        TOP + plot / 2
    );

    // Colorbar: 32 slices from bottom (min) to top (max).
    let bar_x = LEFT + plot + BAR_GAP;
    let slices = 32usize;
    for k in 0..slices {
        let t = (k as f64 + 0.5) / slices as f64;
        let slice_h = plot as f64 / slices as f64;
        let y = TOP as f64 + plot as f64 - (k + 1) as f64 * slice_h;
        let _ = writeln!(
            s,
            "<rect x=\"{bar_x}\" y=\"{y:.2}\" width=\"{BAR_W}\" height=\"{:.2}\" fill=\"{}\"/>",
            slice_h + 0.5,
            color(t)
        );
    }
    let _ = writeln!(
        s,
        "<rect x=\"{bar_x}\" y=\"{TOP}\" width=\"{BAR_W}\" height=\"{plot}\" fill=\"none\" stroke=\"#444444\"/>"
    );
    let label = |v: f64| -> String {
        if spec.log_color {
            format!("1e{v:.2}")
        } else {
            format!("{v:.3}")
        }
    };
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        bar_x + BAR_W + 6,
        TOP + 4,
        label(hi)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        bar_x + BAR_W + 6,
        TOP + plot,
        label(lo)
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>",
        bar_x,
        TOP - 10,
        spec.legend
    );
    s.push_str("</svg>\n");
    s
}

/// One plotted location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub lon: f64,
    pub lat: f64,
    pub risk: f64,
    pub label: u8,
}

const SC_SIZE: usize = 640;
const SC_MARGIN: usize = 40;

/// Risk-colored scatter over [-0.5, 0.5]^2 coordinates; crash-labeled
/// points get a diamond outline on top of the risk dot.
pub fn risk_scatter(title: &str, points: &[ScatterPoint]) -> String {
    let plot = SC_SIZE - 2 * SC_MARGIN;
    let height = SC_SIZE + 70;
    let px = |lon: f64| SC_MARGIN as f64 + (lon + 0.5) * plot as f64;
    let py = |lat: f64| SC_MARGIN as f64 + (0.5 - lat) * plot as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SC_SIZE}\" height=\"{height}\" viewBox=\"0 0 {SC_SIZE} {height}\">"
    );
    let _ = writeln!(s, "<rect width=\"{SC_SIZE}\" height=\"{height}\" fill=\"#ffffff\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"26\" font-family=\"monospace\" font-size=\"15\" text-anchor=\"middle\">{title}</text>",
        SC_SIZE / 2
    );
    let _ = writeln!(
        s,
        "<rect x=\"{SC_MARGIN}\" y=\"{SC_MARGIN}\" width=\"{plot}\" height=\"{plot}\" fill=\"none\" stroke=\"#444444\"/>"
    );
    for p in points {
        let x = px(p.lon);
        let y = py(p.lat);
        let _ = writeln!(
            s,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{}\"/>",
            color(p.risk)
        );
        if p.label == 1 {
            let _ = writeln!(
                s,
                "<path d=\"M {x:.2} {:.2} L {:.2} {y:.2} L {x:.2} {:.2} L {:.2} {y:.2} Z\" fill=\"none\" stroke=\"#111111\" stroke-width=\"1.2\"/>",
                y - 7.0,
                x + 7.0,
                y + 7.0,
                x - 7.0
            );
        }
    }

    // Horizontal risk colorbar under the plot.
    let bar_y = SC_SIZE + 10;
    let bar_w = plot;
    let slices = 32usize;
    for k in 0..slices {
        let slice_w = bar_w as f64 / slices as f64;
        let x = SC_MARGIN as f64 + k as f64 * slice_w;
        let t = (k as f64 + 0.5) / slices as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{x:.2}\" y=\"{bar_y}\" width=\"{:.2}\" height=\"14\" fill=\"{}\"/>",
            slice_w + 0.5,
            color(t)
        );
    }
    let _ = writeln!(
        s,
        "<rect x=\"{SC_MARGIN}\" y=\"{bar_y}\" width=\"{bar_w}\" height=\"14\" fill=\"none\" stroke=\"#444444\"/>"
    );
    for (frac, txt) in [(0.0, "0.0"), (0.5, "0.5"), (1.0, "1.0")] {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{txt}</text>",
            SC_MARGIN as f64 + frac * bar_w as f64,
            bar_y + 30
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">risk</text>",
        SC_MARGIN + bar_w / 2,
        bar_y + 46
    );
    s.push_str("</svg>\n");
    s
}
