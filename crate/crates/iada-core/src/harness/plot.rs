//! PNG rendering of the sweep curve: median accuracy per sub-domain count
//! with min–max whiskers, on a log₂ count axis. Pure-raster drawing with an
//! embedded 5×7 font so the output is byte-deterministic.

use crate::error::{Error, Result};
use crate::harness::sweep::SweepOutput;
use image::{Rgb, RgbImage};
use std::io::Cursor;

const WIDTH: u32 = 640;
const HEIGHT: u32 = 440;
const MARGIN_LEFT: u32 = 78;
const MARGIN_RIGHT: u32 = 24;
const MARGIN_TOP: u32 = 46;
const MARGIN_BOTTOM: u32 = 58;

const BG: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([20, 20, 20]);
const GRID: Rgb<u8> = Rgb([225, 225, 225]);
const IADA_COLOR: Rgb<u8> = Rgb([36, 90, 200]);
const SDM_COLOR: Rgb<u8> = Rgb([214, 116, 32]);

/// Axis ranges in data units: `((count_lo, count_hi), (pct_lo, pct_hi))`.
/// Both cover every plotted value — medians and whisker extremes — with
/// padding on each side.
pub fn sweep_axis_bounds(sweep: &SweepOutput) -> ((f64, f64), (f64, f64)) {
    let mut count_min = f64::INFINITY;
    let mut count_max = f64::NEG_INFINITY;
    let mut pct_min = f64::INFINITY;
    let mut pct_max = f64::NEG_INFINITY;
    for p in &sweep.points {
        count_min = count_min.min(p.count as f64);
        count_max = count_max.max(p.count as f64);
        for stat in std::iter::once(&p.iada).chain(p.iada_sdm.as_ref()) {
            pct_min = pct_min.min(100.0 * stat.min);
            pct_max = pct_max.max(100.0 * stat.max);
        }
    }
    // fifth-of-an-octave padding left/right on the log axis
    let x = (count_min * 0.87, count_max * 1.15);
    let span = (pct_max - pct_min).max(2.0);
    let y = ((pct_min - 0.1 * span).max(0.0), (pct_max + 0.1 * span).min(100.0));
    (x, y)
}

/// Render the sweep as PNG bytes. Fails on an empty sweep.
pub fn render_sweep_plot(sweep: &SweepOutput) -> Result<Vec<u8>> {
    if sweep.points.is_empty() {
        return Err(Error::invalid("cannot plot an empty sweep"));
    }
    let ((x_lo, x_hi), (y_lo, y_hi)) = sweep_axis_bounds(sweep);
    let (lx_lo, lx_hi) = (x_lo.log2(), x_hi.log2());

    let plot_w = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) as f64;
    let plot_h = (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) as f64;
    let to_px = |count: f64, pct: f64| -> (f64, f64) {
        let fx = (count.log2() - lx_lo) / (lx_hi - lx_lo).max(1e-9);
        let fy = (pct - y_lo) / (y_hi - y_lo).max(1e-9);
        (
            MARGIN_LEFT as f64 + fx * plot_w,
            (HEIGHT - MARGIN_BOTTOM) as f64 - fy * plot_h,
        )
    };

    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, BG);

    // horizontal grid + y tick labels at a round percent step
    let step = nice_step((y_hi - y_lo) / 5.0);
    let mut tick = (y_lo / step).ceil() * step;
    while tick <= y_hi + 1e-9 {
        let (_, py) = to_px(x_lo, tick);
        draw_hline(&mut img, MARGIN_LEFT, WIDTH - MARGIN_RIGHT, py as i32, GRID);
        let label = format!("{tick:.0}");
        let lx = MARGIN_LEFT as i32 - 10 - text_width(&label);
        draw_text(&mut img, lx, py as i32 - 3, &label, AXIS);
        tick += step;
    }
    // x ticks at the plotted counts themselves
    for p in &sweep.points {
        let (px, _) = to_px(p.count as f64, y_lo);
        let base = (HEIGHT - MARGIN_BOTTOM) as i32;
        draw_vline(&mut img, px as i32, base, base + 4, AXIS);
        let label = p.count.to_string();
        draw_text(&mut img, px as i32 - text_width(&label) / 2, base + 8, &label, AXIS);
    }

    // frame
    let (x0, x1) = (MARGIN_LEFT as i32, (WIDTH - MARGIN_RIGHT) as i32);
    let (y0, y1) = (MARGIN_TOP as i32, (HEIGHT - MARGIN_BOTTOM) as i32);
    draw_hline(&mut img, x0 as u32, x1 as u32, y1, AXIS);
    draw_vline(&mut img, x0, y0, y1, AXIS);

    // series
    draw_series(&mut img, sweep, false, IADA_COLOR, &to_px);
    if sweep.points.iter().any(|p| p.iada_sdm.is_some()) {
        draw_series(&mut img, sweep, true, SDM_COLOR, &to_px);
    }

    // title, axis labels, legend
    let title = format!(
        "FINAL ACCURACY AT FACTOR {:.2} VS SUB-DOMAIN COUNT",
        sweep.end_factor
    );
    draw_text(&mut img, x0, 14, &title, AXIS);
    draw_text(
        &mut img,
        (x0 + x1) / 2 - text_width("SUB-DOMAIN COUNT") / 2,
        HEIGHT as i32 - 22,
        "SUB-DOMAIN COUNT",
        AXIS,
    );
    draw_text(&mut img, 8, MARGIN_TOP as i32 - 16, "ACC %", AXIS);
    let mut legend_y = y0 + 8;
    for (label, color, present) in [
        ("IADA", IADA_COLOR, true),
        ("IADA SDM", SDM_COLOR, sweep.points.iter().any(|p| p.iada_sdm.is_some())),
    ] {
        if !present {
            continue;
        }
        draw_hline(&mut img, (x0 + 10) as u32, (x0 + 34) as u32, legend_y + 3, color);
        draw_text(&mut img, x0 + 40, legend_y, label, AXIS);
        legend_y += 14;
    }

    let mut bytes = Vec::new();
    image::DynamicImage::ImageRgb8(img)
        .write_to(&mut Cursor::new(&mut bytes), image::ImageFormat::Png)
        .map_err(|e| Error::State(format!("PNG encoding: {e}")))?;
    Ok(bytes)
}

fn draw_series(
    img: &mut RgbImage,
    sweep: &SweepOutput,
    sdm: bool,
    color: Rgb<u8>,
    to_px: &dyn Fn(f64, f64) -> (f64, f64),
) {
    let pts: Vec<(f64, f64, f64, f64)> = sweep
        .points
        .iter()
        .filter_map(|p| {
            let stat = if sdm { p.iada_sdm.as_ref()? } else { Some(&p.iada)? };
            Some((
                p.count as f64,
                100.0 * stat.median,
                100.0 * stat.min,
                100.0 * stat.max,
            ))
        })
        .collect();
    for w in pts.windows(2) {
        let (ax, ay) = to_px(w[0].0, w[0].1);
        let (bx, by) = to_px(w[1].0, w[1].1);
        draw_line(img, ax as i32, ay as i32, bx as i32, by as i32, color);
    }
    for &(count, median, lo, hi) in &pts {
        let (px, p_lo) = to_px(count, lo);
        let (_, p_hi) = to_px(count, hi);
        draw_vline(img, px as i32, p_hi as i32, p_lo as i32, color);
        draw_hline(img, (px as i32 - 2) as u32, (px as i32 + 2) as u32, p_lo as i32, color);
        draw_hline(img, (px as i32 - 2) as u32, (px as i32 + 2) as u32, p_hi as i32, color);
        let (_, p_med) = to_px(count, median);
        for dy in -2i32..=2 {
            for dx in -2i32..=2 {
                put(img, px as i32 + dx, p_med as i32 + dy, color);
            }
        }
    }
}

/// Round `raw` up to a 1/2/5 × 10ᵏ grid step.
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.abs().max(1e-12).log10().floor());
    let unit = raw / mag;
    let nice = if unit <= 1.0 {
        1.0
    } else if unit <= 2.0 {
        2.0
    } else if unit <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn put(img: &mut RgbImage, x: i32, y: i32, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, color);
    }
}

fn draw_hline(img: &mut RgbImage, x0: u32, x1: u32, y: i32, color: Rgb<u8>) {
    for x in x0.min(x1)..=x0.max(x1) {
        put(img, x as i32, y, color);
    }
}

fn draw_vline(img: &mut RgbImage, x: i32, y0: i32, y1: i32, color: Rgb<u8>) {
    for y in y0.min(y1)..=y0.max(y1) {
        put(img, x, y, color);
    }
}

fn draw_line(img: &mut RgbImage, mut x0: i32, mut y0: i32, x1: i32, y1: i32, color: Rgb<u8>) {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(img, x0, y0, color);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// 5×7 uppercase/digit font, MSB = leftmost of the 5 columns.
fn glyph(c: char) -> [u8; 7] {
    match c {
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        'A' => [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'B' => [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E],
        'C' => [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E],
        'D' => [0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E],
        'E' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F],
        'F' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10],
        'G' => [0x0E, 0x11, 0x10, 0x13, 0x11, 0x11, 0x0F],
        'H' => [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'I' => [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
        'J' => [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C],
        'K' => [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
        'L' => [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F],
        'M' => [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11],
        'N' => [0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11],
        'O' => [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'P' => [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
        'Q' => [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D],
        'R' => [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11],
        'S' => [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E],
        'T' => [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
        'U' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'V' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04],
        'W' => [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A],
        'X' => [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11],
        'Y' => [0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04],
        'Z' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C],
        '-' | '–' => [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00],
        '%' => [0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03],
        '(' => [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
        ')' => [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
        '/' => [0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10],
        ':' => [0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00],
        _ => [0x00; 7],
    }
}

fn text_width(s: &str) -> i32 {
    6 * s.chars().count() as i32
}

/// Draw `text` with its top-left corner at `(x, y)`; lowercase is uppercased,
/// unknown glyphs render as spaces.
fn draw_text(img: &mut RgbImage, x: i32, y: i32, text: &str, color: Rgb<u8>) {
    let mut cx = x;
    for c in text.chars() {
        let rows = glyph(c.to_ascii_uppercase());
        for (dy, row) in rows.iter().enumerate() {
            for dx in 0..5 {
                if row & (0x10 >> dx) != 0 {
                    put(img, cx + dx, y + dy as i32, color);
                }
            }
        }
        cx += 6;
    }
}
