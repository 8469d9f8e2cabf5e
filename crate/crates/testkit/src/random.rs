use std::f64::consts::PI;

use hine_imaging::{BinaryMask, RasterImage, Rgb};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scene::{StickFigureSpec, Stroke};

/// Independent per-pixel coin flips on a random canvas up to the given size.
pub fn random_noise_mask(
    rng: &mut impl Rng,
    max_w: usize,
    max_h: usize,
    density: f64,
) -> BinaryMask {
    let w = rng.random_range(1..=max_w);
    let h = rng.random_range(1..=max_h);
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(density))
}

/// Silhouette-like mask: a union of random ellipses, rectangles and thick
/// bars, with a few holes punched out and a sprinkle of pixel noise.
pub fn random_blob_mask(rng: &mut impl Rng, max_w: usize, max_h: usize) -> BinaryMask {
    let w = rng.random_range(4.max(max_w / 4)..=max_w);
    let h = rng.random_range(4.max(max_h / 4)..=max_h);
    let mut mask = BinaryMask::new(w, h);
    let shapes = rng.random_range(1..=6);
    for _ in 0..shapes {
        paint_shape(rng, &mut mask, true);
    }
    for _ in 0..rng.random_range(0..=3) {
        paint_shape(rng, &mut mask, false);
    }
    let speckle = rng.random_range(0.0..0.03);
    for y in 0..h {
        for x in 0..w {
            if rng.random_bool(speckle) {
                mask.set(x, y, !mask.get(x, y));
            }
        }
    }
    mask
}

fn paint_shape(rng: &mut impl Rng, mask: &mut BinaryMask, on: bool) {
    let (w, h) = (mask.width() as f64, mask.height() as f64);
    let cx = rng.random_range(0.0..w);
    let cy = rng.random_range(0.0..h);
    let scale = if on { 0.4 } else { 0.15 };
    let rx = rng.random_range(1.0..(w * scale).max(1.5));
    let ry = rng.random_range(1.0..(h * scale).max(1.5));
    let kind = rng.random_range(0..3);
    let angle = rng.random_range(0.0..PI);
    let (sin, cos) = angle.sin_cos();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            // rotate into the shape frame
            let (u, v) = (dx * cos + dy * sin, -dx * sin + dy * cos);
            let hit = match kind {
                0 => (u / rx).powi(2) + (v / ry).powi(2) <= 1.0,
                1 => u.abs() <= rx && v.abs() <= ry,
                _ => u.abs() <= rx * 1.5 && v.abs() <= (ry * 0.25).max(0.6),
            };
            if hit {
                mask.set(x, y, on);
            }
        }
    }
}

/// Image with patchy regions drawn from a small palette of colours that land
/// in distinct clustering bins, for exercising segmentation and merging.
pub fn random_label_image(rng: &mut impl Rng, max_w: usize, max_h: usize) -> RasterImage {
    const PALETTE: [Rgb; 6] = [
        [245, 245, 245],
        [30, 30, 30],
        [220, 30, 30],
        [30, 200, 40],
        [40, 40, 220],
        [230, 200, 20],
    ];
    let w = rng.random_range(1..=max_w);
    let h = rng.random_range(1..=max_h);
    let colours = rng.random_range(2..=PALETTE.len());
    let block = rng.random_range(1..=4);
    let bw = w.div_ceil(block);
    let cells: Vec<Rgb> = (0..bw * h.div_ceil(block))
        .map(|_| PALETTE[rng.random_range(0..colours)])
        .collect();
    let jitter = rng.random_bool(0.3);
    RasterImage::from_fn(w, h, |x, y| {
        let mut c = cells[(y / block) * bw + x / block];
        if rng.random_bool(0.1) {
            c = PALETTE[rng.random_range(0..colours)];
        }
        if jitter {
            for ch in c.iter_mut() {
                *ch = ch.saturating_add(rng.random_range(0..8));
            }
        }
        c
    })
}

fn polar(from: (f64, f64), angle: f64, len: f64) -> (f64, f64) {
    (from.0 + len * angle.cos(), from.1 + len * angle.sin())
}

fn round(p: (f64, f64)) -> (i32, i32) {
    (p.0.round() as i32, p.1.round() as i32)
}

fn segment_distance(a: &Stroke, b: &Stroke) -> f64 {
    fn point_seg(p: (f64, f64), s: &Stroke) -> f64 {
        let (ax, ay) = (s.from.0 as f64, s.from.1 as f64);
        let (dx, dy) = (s.to.0 as f64 - ax, s.to.1 as f64 - ay);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p.0 - ax) * dx + (p.1 - ay) * dy) / len2).clamp(0.0, 1.0)
        };
        ((ax + t * dx - p.0).powi(2) + (ay + t * dy - p.1).powi(2)).sqrt()
    }
    fn cross(o: (i32, i32), a: (i32, i32), b: (i32, i32)) -> i64 {
        i64::from(a.0 - o.0) * i64::from(b.1 - o.1) - i64::from(a.1 - o.1) * i64::from(b.0 - o.0)
    }
    let straddles = |s: &Stroke, t: &Stroke| {
        let (d1, d2) = (cross(s.from, s.to, t.from), cross(s.from, s.to, t.to));
        (d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)
    };
    if straddles(a, b) && straddles(b, a) {
        return 0.0;
    }
    let f = |p: (i32, i32)| (p.0 as f64, p.1 as f64);
    // without a proper crossing the closest pair involves an endpoint
    [
        point_seg(f(a.from), b),
        point_seg(f(a.to), b),
        point_seg(f(b.from), a),
        point_seg(f(b.to), a),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

fn direction_away(s: &Stroke, joint: (i32, i32)) -> f64 {
    let other = if s.from == joint { s.to } else { s.from };
    ((other.1 - joint.1) as f64).atan2((other.0 - joint.0) as f64)
}

fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn plausible(strokes: &[Stroke], canvas: (usize, usize)) -> bool {
    for s in strokes {
        let r = (s.width as f64 / 2.0).ceil() as i32 + 2;
        for p in [s.from, s.to] {
            if p.0 - r < 0
                || p.1 - r < 0
                || p.0 + r >= canvas.0 as i32
                || p.1 + r >= canvas.1 as i32
            {
                return false;
            }
        }
    }
    for (i, a) in strokes.iter().enumerate() {
        for b in &strokes[i + 1..] {
            let shared = [a.from, a.to]
                .into_iter()
                .find(|p| *p == b.from || *p == b.to);
            match shared {
                Some(joint) => {
                    if angle_between(direction_away(a, joint), direction_away(b, joint))
                        < 55f64.to_radians()
                    {
                        return false;
                    }
                }
                None => {
                    let gap = (a.width + b.width) as f64 / 2.0 + 8.0;
                    if segment_distance(a, b) < gap {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// A random but anatomically loose stick figure: torso, head, two arms and
/// two legs, each limb optionally bent once. Limbs meeting at a joint are at
/// least 55 degrees apart and unrelated limbs keep clear of each other.
pub fn random_stick_figure(
    seed: u64,
    canvas: (usize, usize),
    stroke_widths: std::ops::RangeInclusive<u32>,
) -> StickFigureSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cw, ch) = (canvas.0 as f64, canvas.1 as f64);
    let scale = cw.min(ch) / 288.0;
    loop {
        let width = rng.random_range(stroke_widths.clone());
        let hip = (
            rng.random_range(0.4 * cw..0.6 * cw),
            rng.random_range(0.55 * ch..0.65 * ch),
        );
        let up = -PI / 2.0 + rng.random_range(-0.35..0.35);
        let neck = polar(hip, up, rng.random_range(60.0..85.0) * scale);
        let (hip_i, neck_i) = (round(hip), round(neck));
        let stroke = |from, to| Stroke { from, to, width };

        let mut strokes = vec![stroke(hip_i, neck_i)];
        let head = polar(
            neck,
            up + rng.random_range(-0.3..0.3),
            rng.random_range(18.0..28.0) * scale,
        );
        strokes.push(stroke(neck_i, round(head)));

        let mut limb = |rng: &mut ChaCha8Rng, root: (f64, f64), base: f64, len: f64| {
            let upper = polar(root, base, len * rng.random_range(0.45..0.6));
            let bent = rng.random_bool(0.6);
            let end = if bent {
                polar(
                    upper,
                    base + rng.random_range(-0.9..0.9),
                    len * rng.random_range(0.35..0.5),
                )
            } else {
                polar(upper, base, len * rng.random_range(0.35..0.5))
            };
            strokes.push(stroke(round(root), round(upper)));
            strokes.push(stroke(round(upper), round(end)));
        };
        let down = up + PI;
        // arms hang to either side of the torso, legs spread below the hip
        let bases = [
            up - PI / 2.0 + rng.random_range(-0.6..0.9),
            up + PI / 2.0 + rng.random_range(-0.9..0.6),
            down - rng.random_range(0.5..1.1),
            down + rng.random_range(0.5..1.1),
        ];
        limb(&mut rng, neck, bases[0], 85.0 * scale);
        limb(&mut rng, neck, bases[1], 85.0 * scale);
        limb(&mut rng, hip, bases[2], 110.0 * scale);
        limb(&mut rng, hip, bases[3], 110.0 * scale);

        if !plausible(&strokes, canvas) {
            continue;
        }
        let fill = [
            rng.random_range(150..=210),
            rng.random_range(90..=130),
            rng.random_range(60..=90),
        ];
        let torso = strokes.remove(0);
        return StickFigureSpec {
            torso,
            limbs: strokes,
            fill,
            background: [246, 246, 244],
            canvas,
            noise: 0,
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::gen_scene;

    #[test]
    fn stick_figures_are_valid_and_seeded() {
        for seed in 0..20 {
            let spec = random_stick_figure(seed, (352, 288), 7..=11);
            assert_eq!(spec, random_stick_figure(seed, (352, 288), 7..=11));
            gen_scene(&spec, seed).unwrap();
        }
    }

    #[test]
    fn masks_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = random_blob_mask(&mut rng, 64, 64);
            assert!(m.width() <= 64 && m.height() <= 64);
            let n = random_noise_mask(&mut rng, 16, 16, 0.5);
            assert!(n.width() <= 16 && n.height() <= 16);
        }
    }
}
