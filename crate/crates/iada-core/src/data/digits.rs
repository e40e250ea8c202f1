//! Procedural 28×28 digit synthesis.
//!
//! Each class is a fixed stroke skeleton (polylines and sampled arcs in a
//! unit box) rendered through a per-sample jittered affine map — rotation,
//! slant, anisotropic scale, translation, pen thickness, and a low-frequency
//! waviness — then rasterized as an anti-aliased distance field. The output
//! archives use the standard idx naming, so an externally obtained digit
//! dataset can replace the synthetic one without code changes.

use crate::data::batch::NUM_CLASSES;
use crate::data::idx::{write_idx_images, write_idx_labels, Split};
use crate::error::Result;
use crate::runtime::seed::SeedSplitter;
use ndarray::{Array2, Array3, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

const SIDE: usize = 28;

type Point = (f64, f64);

/// Sample an elliptical arc; angles in degrees, y axis pointing down.
fn arc(cx: f64, cy: f64, rx: f64, ry: f64, a0: f64, a1: f64, n: usize) -> Vec<Point> {
    (0..=n)
        .map(|i| {
            let a = (a0 + (a1 - a0) * i as f64 / n as f64).to_radians();
            (cx + rx * a.cos(), cy - ry * a.sin())
        })
        .collect()
}

/// Stroke skeleton of one digit class in the unit box (x right, y down).
fn glyph_strokes(class: u8) -> Vec<Vec<Point>> {
    match class {
        0 => vec![arc(0.50, 0.50, 0.21, 0.32, 90.0, 450.0, 28)],
        1 => vec![vec![(0.36, 0.30), (0.52, 0.14), (0.52, 0.86)]],
        2 => {
            let mut top = arc(0.50, 0.32, 0.20, 0.18, 165.0, -25.0, 14);
            top.push((0.30, 0.84));
            top.push((0.72, 0.84));
            vec![top]
        }
        3 => vec![
            arc(0.48, 0.31, 0.20, 0.17, 150.0, -90.0, 14),
            arc(0.48, 0.66, 0.21, 0.19, 90.0, -150.0, 16),
        ],
        4 => vec![
            vec![(0.58, 0.14), (0.30, 0.58), (0.76, 0.58)],
            vec![(0.64, 0.26), (0.64, 0.86)],
        ],
        5 => {
            let mut stroke = vec![(0.68, 0.16), (0.36, 0.16), (0.345, 0.45)];
            stroke.extend(arc(0.47, 0.63, 0.21, 0.20, 128.0, -128.0, 18));
            vec![stroke]
        }
        6 => vec![
            vec![(0.60, 0.13), (0.46, 0.32), (0.36, 0.52), (0.325, 0.66)],
            arc(0.50, 0.665, 0.175, 0.175, 90.0, 450.0, 20),
        ],
        7 => vec![
            vec![(0.28, 0.16), (0.72, 0.16), (0.44, 0.86)],
            vec![(0.38, 0.50), (0.62, 0.50)],
        ],
        8 => vec![
            arc(0.50, 0.31, 0.165, 0.16, 90.0, 450.0, 20),
            arc(0.50, 0.655, 0.195, 0.185, 90.0, 450.0, 22),
        ],
        9 => vec![
            arc(0.50, 0.335, 0.18, 0.175, 90.0, 450.0, 20),
            vec![(0.68, 0.335), (0.66, 0.60), (0.54, 0.86)],
        ],
        other => panic!("digit class {other} out of range"),
    }
}

/// Insert points so no segment exceeds `max_len` (pixel units); keeps the
/// waviness warp from leaving long straight runs unbent.
fn densify(points: &[Point], max_len: f64) -> Vec<Point> {
    let mut out = vec![points[0]];
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let pieces = (len / max_len).ceil().max(1.0) as usize;
        for i in 1..=pieces {
            let t = i as f64 / pieces as f64;
            out.push((a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t));
        }
    }
    out
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0)
    };
    let (dx, dy) = (wx - t * vx, wy - t * vy);
    (dx * dx + dy * dy).sqrt()
}

struct Jitter {
    rotation: f64,
    slant: f64,
    scale_x: f64,
    scale_y: f64,
    shift_x: f64,
    shift_y: f64,
    thickness: f64,
    ink: f64,
    wave_amp: f64,
    wave_freq: f64,
    wave_phase: f64,
}

impl Jitter {
    fn sample<R: Rng>(rng: &mut R) -> Jitter {
        Jitter {
            rotation: rng.random_range(-0.16..0.16),
            slant: rng.random_range(-0.28..0.28),
            scale_x: rng.random_range(0.72..1.12),
            scale_y: rng.random_range(0.55..1.12),
            shift_x: rng.random_range(-2.0..2.0),
            shift_y: rng.random_range(-2.0..2.0),
            thickness: rng.random_range(1.45..2.35),
            ink: rng.random_range(0.55..1.0),
            wave_amp: rng.random_range(0.0..0.45),
            wave_freq: rng.random_range(0.15..0.40),
            wave_phase: rng.random_range(0.0..std::f64::consts::TAU),
        }
    }

    /// Map a unit-box glyph point into jittered pixel coordinates.
    fn apply(&self, p: Point) -> Point {
        let c = SIDE as f64 / 2.0;
        // unit box → pixels, centered
        let mut x = p.0 * SIDE as f64 - c;
        let mut y = p.1 * SIDE as f64 - c;
        x += self.slant * -y; // slant: top leans by shear against y
        x *= self.scale_x;
        y *= self.scale_y;
        let (sin, cos) = self.rotation.sin_cos();
        let (rx, ry) = (cos * x - sin * y, sin * x + cos * y);
        let px = rx + c + self.shift_x;
        let py = ry + c + self.shift_y;
        (px + self.wave_amp * (self.wave_freq * py + self.wave_phase).sin(), py)
    }
}

/// Render one digit with per-sample jitter drawn from `rng`.
pub fn render_digit<R: Rng>(class: u8, rng: &mut R) -> Array2<u8> {
    let jitter = Jitter::sample(rng);
    let mut segments: Vec<(Point, Point)> = Vec::new();
    for stroke in glyph_strokes(class) {
        let px: Vec<Point> = stroke.iter().map(|&p| jitter.apply(p)).collect();
        let dense = densify(&px, 2.0);
        segments.extend(dense.windows(2).map(|w| (w[0], w[1])));
    }
    // anti-aliased pen: full ink inside thickness − aa, falls to zero at
    // thickness + aa
    let aa = 0.65;
    let mut img = Array2::<u8>::zeros((SIDE, SIDE));
    for r in 0..SIDE {
        for c in 0..SIDE {
            let p = (c as f64 + 0.5, r as f64 + 0.5);
            let mut d = f64::INFINITY;
            for &(a, b) in &segments {
                d = d.min(point_segment_distance(p, a, b));
                if d <= jitter.thickness - aa {
                    break;
                }
            }
            let v = ((jitter.thickness + aa - d) / (2.0 * aa)).clamp(0.0, 1.0);
            img[(r, c)] = (v * jitter.ink * 255.0).round() as u8;
        }
    }
    img
}

/// Class-balanced, shuffled dataset of `count` digits.
pub fn synthesize_dataset(count: usize, seed: u64) -> (Array3<u8>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<u8> = (0..count).map(|i| (i % NUM_CLASSES) as u8).collect();
    labels.shuffle(&mut rng);
    let mut images = Array3::<u8>::zeros((count, SIDE, SIDE));
    for (i, &label) in labels.iter().enumerate() {
        images
            .index_axis_mut(Axis(0), i)
            .assign(&render_digit(label, &mut rng));
    }
    (images, labels)
}

/// Write a four-file idx archive (train + test splits) under `dir`.
pub fn write_digit_archive(dir: &Path, train: usize, test: usize, seed: u64) -> Result<()> {
    let splitter = SeedSplitter::new(seed);
    let (train_images, train_labels) = synthesize_dataset(train, splitter.derive("synth", 0));
    let (test_images, test_labels) = synthesize_dataset(test, splitter.derive("synth", 1));
    write_idx_images(&Split::Train.images_path(dir), &train_images)?;
    write_idx_labels(&Split::Train.labels_path(dir), &train_labels)?;
    write_idx_images(&Split::Test.images_path(dir), &test_images)?;
    write_idx_labels(&Split::Test.labels_path(dir), &test_labels)?;
    Ok(())
}
