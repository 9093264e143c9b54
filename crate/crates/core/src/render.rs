//! Minimal PNG rendering of sweep results: a fixed-colormap heatmap per pair
//! for 2-D grids, a line plot per pair for 1-D grids. Verification plots,
//! not publication figures.

use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::sweep::{SweepResult, NA};

const BG: Rgb<u8> = Rgb([255, 255, 255]);
const FG: Rgb<u8> = Rgb([32, 32, 32]);
const FRAME: Rgb<u8> = Rgb([96, 96, 96]);
const MISSING: Rgb<u8> = Rgb([200, 200, 200]);
const LINE: Rgb<u8> = Rgb([33, 102, 172]);

/// Canonical colormap byte anchors, equally spaced on [0, 1].
const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

fn colormap(t: f64) -> Rgb<u8> {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let lo = t.floor() as usize;
    let hi = (lo + 1).min(VIRIDIS.len() - 1);
    let f = t - lo as f64;
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    Rgb([
        mix(VIRIDIS[lo][0], VIRIDIS[hi][0]),
        mix(VIRIDIS[lo][1], VIRIDIS[hi][1]),
        mix(VIRIDIS[lo][2], VIRIDIS[hi][2]),
    ])
}

/// 8x8 bitmap text, ASCII only; other characters advance the cursor blank.
fn draw_text(img: &mut RgbImage, x: u32, y: u32, text: &str, color: Rgb<u8>) {
    let (w, h) = img.dimensions();
    for (i, ch) in text.chars().enumerate() {
        let glyph = match font8x8::legacy::BASIC_LEGACY.get(ch as usize) {
            Some(g) => *g,
            None => continue,
        };
        let gx = x + 8 * i as u32;
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..8u32 {
                if bits >> col & 1 != 0 {
                    let (px, py) = (gx + col, y + row as u32);
                    if px < w && py < h {
                        img.put_pixel(px, py, color);
                    }
                }
            }
        }
    }
}

fn fmt_range(lo: f64, hi: f64) -> String {
    format!("{lo:.3} .. {hi:.3}")
}

struct Layout {
    top: u32,
    bottom: u32,
    side: u32,
}

const LAYOUT: Layout = Layout {
    top: 14,
    bottom: 30,
    side: 8,
};

/// One scalar per grid point, in grid order; None renders as the missing
/// color (heatmap) or a gap (line plot).
struct Series<'a> {
    title: String,
    values: Vec<Option<f64>>,
    result: &'a SweepResult,
}

impl Series<'_> {
    fn finite_range(&self) -> Option<(f64, f64)> {
        let mut range: Option<(f64, f64)> = None;
        for &v in self.values.iter().flatten() {
            range = Some(match range {
                None => (v, v),
                Some((lo, hi)) => (lo.min(v), hi.max(v)),
            });
        }
        range
    }

    fn heatmap(&self) -> RgbImage {
        let (rows, cols) = self.result.spec.shape();
        // Axis 0 runs along x, axis 1 up the y axis.
        let sx = (400usize.div_ceil(rows)).clamp(1, 16) as u32;
        let sy = (400usize.div_ceil(cols)).clamp(1, 16) as u32;
        let (pw, ph) = (rows as u32 * sx, cols as u32 * sy);
        let w = pw + 2 * LAYOUT.side;
        let h = ph + LAYOUT.top + LAYOUT.bottom;
        let mut img = RgbImage::from_pixel(w, h, BG);
        let (lo, hi) = self.finite_range().unwrap_or((0.0, 0.0));
        let span = if hi > lo { hi - lo } else { 1.0 };
        for r in 0..rows {
            for c in 0..cols {
                let color = match self.values[r * cols + c] {
                    Some(v) => colormap((v - lo) / span),
                    None => MISSING,
                };
                for dx in 0..sx {
                    for dy in 0..sy {
                        let px = LAYOUT.side + r as u32 * sx + dx;
                        let py = LAYOUT.top + (cols - 1 - c) as u32 * sy + dy;
                        img.put_pixel(px, py, color);
                    }
                }
            }
        }
        let axes = &self.result.spec.axes;
        draw_text(
            &mut img,
            LAYOUT.side,
            3,
            &format!("{}  [{}]", self.title, fmt_range(lo, hi)),
            FG,
        );
        draw_text(
            &mut img,
            LAYOUT.side,
            LAYOUT.top + ph + 4,
            &format!(
                "x {}: {} wb",
                axes[0].param,
                fmt_range(axes[0].start, axes[0].stop)
            ),
            FG,
        );
        draw_text(
            &mut img,
            LAYOUT.side,
            LAYOUT.top + ph + 14,
            &format!(
                "y {}: {} wb",
                axes[1].param,
                fmt_range(axes[1].start, axes[1].stop)
            ),
            FG,
        );
        img
    }

    fn line_plot(&self) -> RgbImage {
        let n = self.values.len();
        let sx = (600usize.div_ceil(n.max(2) - 1)).clamp(1, 16) as u32;
        let pw = (n as u32 - 1) * sx + 1;
        let ph = 300u32;
        let w = pw + 2 * LAYOUT.side;
        let h = ph + LAYOUT.top + LAYOUT.bottom;
        let mut img = RgbImage::from_pixel(w, h, BG);
        let (lo, hi) = self.finite_range().unwrap_or((0.0, 1.0));
        // Pad the value axis so flat lines sit mid-plot, not on the frame.
        let pad = 0.05 * (hi - lo).max(1e-30);
        let (lo, hi) = (lo - pad, hi + pad);
        let to_y = |v: f64| {
            let t = (v - lo) / (hi - lo);
            LAYOUT.top + ((1.0 - t) * (ph - 1) as f64).round() as u32
        };
        for x in 0..pw {
            img.put_pixel(LAYOUT.side + x, LAYOUT.top, FRAME);
            img.put_pixel(LAYOUT.side + x, LAYOUT.top + ph - 1, FRAME);
        }
        if lo < 0.0 && 0.0 < hi {
            let y0 = to_y(0.0);
            for x in 0..pw {
                img.put_pixel(LAYOUT.side + x, y0, MISSING);
            }
        }
        let mut prev: Option<(u32, u32)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            let point = v.map(|v| (LAYOUT.side + i as u32 * sx, to_y(v)));
            if let (Some((x0, y0)), Some((x1, y1))) = (prev, point) {
                // Integer line segment; spans at most `sx` columns.
                let steps = (x1 - x0).max(y1.abs_diff(y0)).max(1);
                for s in 0..=steps {
                    let f = s as f64 / steps as f64;
                    let x = x0 + ((x1 - x0) as f64 * f).round() as u32;
                    let y = (y0 as f64 + (y1 as f64 - y0 as f64) * f).round() as u32;
                    img.put_pixel(x, y, LINE);
                }
            }
            prev = point;
        }
        let axis = &self.result.spec.axes[0];
        draw_text(
            &mut img,
            LAYOUT.side,
            3,
            &format!("{}  [{}]", self.title, fmt_range(lo + pad, hi - pad)),
            FG,
        );
        draw_text(
            &mut img,
            LAYOUT.side,
            LAYOUT.top + ph + 4,
            &format!("x {}: {} wb", axis.param, fmt_range(axis.start, axis.stop)),
            FG,
        );
        draw_text(
            &mut img,
            LAYOUT.side,
            LAYOUT.top + ph + 14,
            &format!("y range: {}", fmt_range(lo + pad, hi - pad)),
            FG,
        );
        img
    }

    fn render(&self) -> RgbImage {
        if self.result.spec.axes.len() == 2 {
            self.heatmap()
        } else {
            self.line_plot()
        }
    }
}

fn stem_path(out_stem: &Path, suffix: &str) -> PathBuf {
    let name = out_stem
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out_stem.with_file_name(format!("{name}_{suffix}.png"))
}

/// Render one image per requested pair (plus a stability-margin image when
/// the sweep carried no pairs) next to `out_stem`. Returns the paths written.
pub fn render_sweep(
    result: &SweepResult,
    base: &SystemParams,
    out_stem: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let save = |img: RgbImage, path: PathBuf, written: &mut Vec<PathBuf>| -> Result<()> {
        img.save(&path)
            .map_err(|e| Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))))?;
        written.push(path);
        Ok(())
    };
    for (col, pair) in result.spec.pairs.iter().enumerate() {
        let series = Series {
            title: pair.label(),
            values: result
                .points
                .iter()
                .map(|p| p.negativities.get(col).copied().flatten())
                .collect(),
            result,
        };
        save(series.render(), stem_path(out_stem, &pair.label()), &mut written)?;
    }
    if result.spec.pairs.is_empty() {
        let wb = base.omega_b[0];
        let series = Series {
            title: format!("stability margin ({NA} = failed)"),
            values: result.points.iter().map(|p| p.margin.map(|m| m / wb)).collect(),
            result,
        };
        save(series.render(), stem_path(out_stem, "margin"), &mut written)?;
    }
    Ok(written)
}
