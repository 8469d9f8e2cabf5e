use crate::config::PipelineConfig;
use crate::error::ImagingError;
use crate::image::BinaryMask;
use crate::segment::{LabelMap, RegionStats};

/// Near-white test applied to a region's mean colour.
pub fn is_background_color(stats: &RegionStats, cfg: &PipelineConfig) -> bool {
    let (value, saturation) = stats.mean_value_saturation();
    value >= cfg.background_value_min && saturation <= cfg.background_saturation_max
}

/// Selects the non-background region with the longest contour and returns its
/// pixels as a mask, optionally with enclosed holes filled.
///
/// Contour length is the region's perimeter in boundary pixels. Ties go to the
/// larger area, then the lower id.
pub fn extract_silhouette(lm: &LabelMap, cfg: &PipelineConfig) -> Result<BinaryMask, ImagingError> {
    let chosen = lm
        .regions()
        .iter()
        .enumerate()
        .filter(|(_, r)| !is_background_color(r, cfg))
        .max_by(|(a, ra), (b, rb)| {
            ra.perimeter
                .cmp(&rb.perimeter)
                .then(ra.area.cmp(&rb.area))
                .then(b.cmp(a))
        })
        .map(|(id, _)| id as u32)
        .ok_or(ImagingError::NoForeground)?;

    let (w, h) = (lm.width(), lm.height());
    let bits: Vec<bool> = lm.labels().iter().map(|&l| l == chosen).collect();
    let mut mask = BinaryMask::from_bits(w, h, bits).expect("label map dimensions");
    if cfg.fill_holes {
        fill_holes(&mut mask);
    }
    Ok(mask)
}

/// Adds every background pixel that cannot reach the image border through
/// 4-connected background.
fn fill_holes(mask: &mut BinaryMask) {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = vec![false; w * h];
    let mut stack = Vec::new();
    let seed = |x: usize, y: usize, outside: &mut Vec<bool>, stack: &mut Vec<usize>| {
        let i = y * w + x;
        if !mask.get(x, y) && !outside[i] {
            outside[i] = true;
            stack.push(i);
        }
    };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut stack);
        seed(x, h - 1, &mut outside, &mut stack);
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut stack);
        seed(w - 1, y, &mut outside, &mut stack);
    }
    while let Some(i) = stack.pop() {
        let (x, y) = (i % w, i / w);
        if x > 0 {
            seed(x - 1, y, &mut outside, &mut stack);
        }
        if x + 1 < w {
            seed(x + 1, y, &mut outside, &mut stack);
        }
        if y > 0 {
            seed(x, y - 1, &mut outside, &mut stack);
        }
        if y + 1 < h {
            seed(x, y + 1, &mut outside, &mut stack);
        }
    }
    for y in 0..h {
        for x in 0..w {
            if !outside[y * w + x] {
                mask.set(x, y, true);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{RasterImage, Rgb};
    use crate::segment::segment;

    const WHITE: Rgb = [245, 245, 245];
    const DARK: Rgb = [60, 40, 30];

    fn scene(w: usize, h: usize, dark: impl Fn(usize, usize) -> bool) -> RasterImage {
        RasterImage::from_fn(w, h, |x, y| if dark(x, y) { DARK } else { WHITE })
    }

    #[test]
    fn single_blob_on_white() {
        let inside = |x: usize, y: usize| (3..7).contains(&x) && (2..5).contains(&y);
        let img = scene(10, 8, inside);
        let mask = extract_silhouette(
            &segment(&img, &PipelineConfig::default()),
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(mask, BinaryMask::from_fn(10, 8, inside));
    }

    #[test]
    fn all_white_has_no_foreground() {
        let img = RasterImage::filled(6, 6, WHITE);
        let cfg = PipelineConfig::default();
        assert_eq!(
            extract_silhouette(&segment(&img, &cfg), &cfg),
            Err(ImagingError::NoForeground)
        );
    }

    #[test]
    fn contour_beats_area() {
        // a 1x20 bar (perimeter 20, area 20) against a 5x5 square (perimeter 16, area 25)
        let bar = |x: usize, y: usize| y == 2 && (2..22).contains(&x);
        let square = |x: usize, y: usize| (5..10).contains(&x) && (6..11).contains(&y);
        let img = scene(24, 14, |x, y| bar(x, y) || square(x, y));
        let cfg = PipelineConfig::default();
        let mask = extract_silhouette(&segment(&img, &cfg), &cfg).unwrap();
        assert_eq!(mask, BinaryMask::from_fn(24, 14, bar));
    }

    #[test]
    fn holes_filled_only_when_enabled() {
        let ring = |x: usize, y: usize| {
            (2..7).contains(&x)
                && (2..7).contains(&y)
                && !((3..6).contains(&x) && (3..6).contains(&y))
        };
        let img = scene(9, 9, ring);
        let mut cfg = PipelineConfig::default();
        let lm = segment(&img, &cfg);
        let filled = extract_silhouette(&lm, &cfg).unwrap();
        assert_eq!(filled.count(), 25);
        cfg.fill_holes = false;
        let raw = extract_silhouette(&lm, &cfg).unwrap();
        assert_eq!(raw.count(), 16);
    }
}
