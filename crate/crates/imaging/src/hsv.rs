use crate::config::PipelineConfig;
use crate::image::Rgb;

/// Hexcone HSV. `value` keeps the 0..255 scale of the input channels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HsvPixel {
    /// Degrees in `[0, 360)`; 0 for achromatic pixels.
    pub hue: f64,
    /// `(max - min) / max`, 0 when `max == 0`.
    pub saturation: f64,
    pub value: u8,
}

pub fn rgb_to_hsv([r, g, b]: Rgb) -> HsvPixel {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    if max == 0 || max == min {
        return HsvPixel {
            hue: 0.0,
            saturation: 0.0,
            value: max,
        };
    }
    let delta = f64::from(max - min);
    let (rf, gf, bf) = (f64::from(r), f64::from(g), f64::from(b));
    let sector = if max == r {
        (gf - bf) / delta
    } else if max == g {
        (bf - rf) / delta + 2.0
    } else {
        (rf - gf) / delta + 4.0
    };
    let mut hue = 60.0 * sector;
    if hue < 0.0 {
        hue += 360.0;
    }
    if hue >= 360.0 {
        hue -= 360.0;
    }
    HsvPixel {
        hue,
        saturation: delta / f64::from(max),
        value: max,
    }
}

/// Histogram bin a pixel falls into after threshold clustering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureBin {
    Chromatic(u16),
    Achromatic(u16),
}

/// Saturation a pixel of the given intensity must reach to be treated as chromatic.
pub(crate) fn saturation_threshold(value: f64, cfg: &PipelineConfig) -> f64 {
    cfg.sat_threshold_max - cfg.sat_threshold_slope * (value / 255.0)
}

pub fn classify_pixel(p: HsvPixel, cfg: &PipelineConfig) -> FeatureBin {
    let value = f64::from(p.value);
    if p.saturation >= saturation_threshold(value, cfg) {
        let width = 360.0 / f64::from(cfg.hue_bins);
        let bin = (p.hue / width).floor() as u16;
        FeatureBin::Chromatic(bin.min(cfg.hue_bins - 1))
    } else {
        let width = 256.0 / f64::from(cfg.gray_bins);
        let bin = (value / width).floor() as u16;
        FeatureBin::Achromatic(bin.min(cfg.gray_bins - 1))
    }
}
