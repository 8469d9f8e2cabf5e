use std::collections::BTreeSet;
use std::fmt::Write as _;

use hine_imaging::{PipelineConfig, RasterImage, Rgb};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::metrics::Point;

/// A straight limb drawn as a capsule: every pixel whose centre lies within
/// `width / 2` of the segment is filled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stroke {
    pub from: (i32, i32),
    pub to: (i32, i32),
    pub width: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StickFigureSpec {
    pub torso: Stroke,
    pub limbs: Vec<Stroke>,
    pub fill: Rgb,
    pub background: Rgb,
    pub canvas: (usize, usize),
    /// Per-channel jitter amplitude, 0..=20.
    pub noise: u8,
}

impl StickFigureSpec {
    pub fn strokes(&self) -> impl Iterator<Item = &Stroke> {
        std::iter::once(&self.torso).chain(&self.limbs)
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub image: RasterImage,
    /// Stroke centrelines rasterized at unit width, sorted and deduplicated.
    pub ground_truth: Vec<Point>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvalidSpec {
    #[error("canvas must be non-empty")]
    EmptyCanvas,
    #[error("stroke width {0} is below 3")]
    StrokeTooThin(u32),
    #[error("stroke {0:?} leaves the canvas")]
    OutOfCanvas(Stroke),
    #[error("noise amplitude {0} exceeds 20")]
    TooNoisy(u8),
    #[error("fill colour {0:?} would pass as background")]
    FillLooksLikeBackground(Rgb),
    #[error("background colour {0:?} is not near-white")]
    BackgroundNotWhite(Rgb),
}

fn near_white(c: Rgb) -> bool {
    let cfg = PipelineConfig::default();
    let max = f64::from(c[0].max(c[1]).max(c[2]));
    let min = f64::from(c[0].min(c[1]).min(c[2]));
    let sat = if max > 0.0 { (max - min) / max } else { 0.0 };
    max >= cfg.background_value_min && sat <= cfg.background_saturation_max
}

fn validate(spec: &StickFigureSpec) -> Result<(), InvalidSpec> {
    let (w, h) = spec.canvas;
    if w == 0 || h == 0 {
        return Err(InvalidSpec::EmptyCanvas);
    }
    if spec.noise > 20 {
        return Err(InvalidSpec::TooNoisy(spec.noise));
    }
    if near_white(spec.fill) {
        return Err(InvalidSpec::FillLooksLikeBackground(spec.fill));
    }
    if !near_white(spec.background) {
        return Err(InvalidSpec::BackgroundNotWhite(spec.background));
    }
    for s in spec.strokes() {
        if s.width < 3 {
            return Err(InvalidSpec::StrokeTooThin(s.width));
        }
        let r = (s.width as f64 / 2.0).ceil() as i32;
        let fits =
            |(x, y): (i32, i32)| x - r >= 0 && y - r >= 0 && x + r < w as i32 && y + r < h as i32;
        if !fits(s.from) || !fits(s.to) {
            return Err(InvalidSpec::OutOfCanvas(s.clone()));
        }
    }
    Ok(())
}

fn distance_to_segment(px: f64, py: f64, s: &Stroke) -> f64 {
    let (ax, ay) = (s.from.0 as f64, s.from.1 as f64);
    let (bx, by) = (s.to.0 as f64, s.to.1 as f64);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (ax + t * dx - px, ay + t * dy - py);
    (cx * cx + cy * cy).sqrt()
}

fn bresenham(from: (i32, i32), to: (i32, i32), out: &mut BTreeSet<(usize, usize)>) {
    let (mut x, mut y) = from;
    let dx = (to.0 - x).abs();
    let dy = -(to.1 - y).abs();
    let sx = if x < to.0 { 1 } else { -1 };
    let sy = if y < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        out.insert((y as usize, x as usize));
        if (x, y) == to {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Renders the figure and its unit-width centreline. Deterministic in
/// `(spec, seed)`; the seed only drives the noise.
pub fn gen_scene(spec: &StickFigureSpec, seed: u64) -> Result<Scene, InvalidSpec> {
    validate(spec)?;
    let (w, h) = spec.canvas;
    let mut inside = vec![false; w * h];
    for s in spec.strokes() {
        let r = s.width as f64 / 2.0;
        let pad = r.ceil() as i32;
        let x0 = (s.from.0.min(s.to.0) - pad).max(0) as usize;
        let x1 = (s.from.0.max(s.to.0) + pad).min(w as i32 - 1) as usize;
        let y0 = (s.from.1.min(s.to.1) - pad).max(0) as usize;
        let y1 = (s.from.1.max(s.to.1) + pad).min(h as i32 - 1) as usize;
        for y in y0..=y1 {
            for x in x0..=x1 {
                if distance_to_segment(x as f64, y as f64, s) <= r {
                    inside[y * w + x] = true;
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = i16::from(spec.noise);
    let mut jitter = |c: u8| -> u8 {
        if amp == 0 {
            c
        } else {
            (i16::from(c) + rng.random_range(-amp..=amp)).clamp(0, 255) as u8
        }
    };
    let image = RasterImage::from_fn(w, h, |x, y| {
        let base = if inside[y * w + x] {
            spec.fill
        } else {
            spec.background
        };
        [jitter(base[0]), jitter(base[1]), jitter(base[2])]
    });

    let mut truth = BTreeSet::new();
    for s in spec.strokes() {
        bresenham(s.from, s.to, &mut truth);
    }
    // stored (y, x) for raster ordering
    let ground_truth = truth.into_iter().map(|(y, x)| (x, y)).collect();
    Ok(Scene {
        image,
        ground_truth,
    })
}

/// One `x y` pair per line.
pub fn format_ground_truth(points: &[Point]) -> String {
    let mut out = String::with_capacity(points.len() * 8);
    for (x, y) in points {
        let _ = writeln!(out, "{x} {y}");
    }
    out
}
