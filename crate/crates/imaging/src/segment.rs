use crate::config::PipelineConfig;
use crate::hsv::{classify_pixel, rgb_to_hsv, FeatureBin};
use crate::image::{RasterImage, Rgb};

/// Per-region statistics carried by a [`LabelMap`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionStats {
    pub area: u64,
    /// Channel sums over the region's pixels; the mean colour is `color_sum / area`.
    pub color_sum: [u64; 3],
    /// Region pixels with at least one 8-neighbour outside the region.
    /// Neighbours beyond the image edge count as outside.
    pub perimeter: u64,
    pub touches_border: bool,
}

impl RegionStats {
    pub fn mean_color(&self) -> [f64; 3] {
        let a = self.area.max(1) as f64;
        [
            self.color_sum[0] as f64 / a,
            self.color_sum[1] as f64 / a,
            self.color_sum[2] as f64 / a,
        ]
    }

    /// Mean colour rounded to the nearest 8-bit triple.
    pub fn mean_rgb(&self) -> Rgb {
        let area = self.area.max(1);
        let round = |s: u64| ((s + area / 2) / area).min(255) as u8;
        [
            round(self.color_sum[0]),
            round(self.color_sum[1]),
            round(self.color_sum[2]),
        ]
    }

    /// Value (0..255) and saturation (0..1) of the mean colour.
    pub fn mean_value_saturation(&self) -> (f64, f64) {
        let [r, g, b] = self.mean_color();
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let sat = if max > 0.0 { (max - min) / max } else { 0.0 };
        (max, sat)
    }
}

/// Region labelling of an image: one id per pixel plus per-region stats.
///
/// Ids are contiguous `0..regions.len()` and every region is 4-connected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    pub(crate) width: usize,
    pub(crate) height: usize,
    pub(crate) labels: Vec<u32>,
    pub(crate) regions: Vec<RegionStats>,
}

impl LabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn regions(&self) -> &[RegionStats] {
        &self.regions
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    #[inline]
    pub fn label_at(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Renders each pixel with its region's rounded mean colour.
    pub fn render_mean_colors(&self) -> RasterImage {
        let palette: Vec<Rgb> = self.regions.iter().map(RegionStats::mean_rgb).collect();
        let pixels = self.labels.iter().map(|&l| palette[l as usize]).collect();
        RasterImage::new(self.width, self.height, pixels).expect("label map is non-empty")
    }
}

/// Counts, for each label, the pixels that have an 8-neighbour carrying a
/// different label or lying outside the raster.
pub(crate) fn perimeters(width: usize, height: usize, labels: &[u32], count: usize) -> Vec<u64> {
    let mut out = vec![0u64; count];
    for y in 0..height {
        for x in 0..width {
            let l = labels[y * width + x];
            let on_edge = x == 0 || y == 0 || x + 1 == width || y + 1 == height;
            let boundary = on_edge || {
                let mut differs = false;
                'scan: for ny in y - 1..=y + 1 {
                    for nx in x - 1..=x + 1 {
                        if labels[ny * width + nx] != l {
                            differs = true;
                            break 'scan;
                        }
                    }
                }
                differs
            };
            if boundary {
                out[l as usize] += 1;
            }
        }
    }
    out
}

/// Splits the image into 4-connected components of equal [`FeatureBin`].
///
/// Ids are assigned in raster order of each component's first pixel.
pub fn segment(img: &RasterImage, cfg: &PipelineConfig) -> LabelMap {
    let (w, h) = (img.width(), img.height());
    let bins: Vec<FeatureBin> = img
        .pixels()
        .iter()
        .map(|&p| classify_pixel(rgb_to_hsv(p), cfg))
        .collect();

    const UNSET: u32 = u32::MAX;
    let mut labels = vec![UNSET; w * h];
    let mut regions = Vec::new();
    let mut stack = Vec::new();

    for start in 0..w * h {
        if labels[start] != UNSET {
            continue;
        }
        let id = regions.len() as u32;
        let bin = bins[start];
        let mut stats = RegionStats {
            area: 0,
            color_sum: [0; 3],
            perimeter: 0,
            touches_border: false,
        };
        labels[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let [r, g, b] = img.pixels()[i];
            stats.area += 1;
            stats.color_sum[0] += u64::from(r);
            stats.color_sum[1] += u64::from(g);
            stats.color_sum[2] += u64::from(b);
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                stats.touches_border = true;
            }
            let mut visit = |j: usize| {
                if labels[j] == UNSET && bins[j] == bin {
                    labels[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        regions.push(stats);
    }

    let lengths = perimeters(w, h, &labels, regions.len());
    for (stats, p) in regions.iter_mut().zip(lengths) {
        stats.perimeter = p;
    }

    LabelMap {
        width: w,
        height: h,
        labels,
        regions,
    }
}
