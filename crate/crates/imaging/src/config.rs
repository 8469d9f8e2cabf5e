use serde::{Deserialize, Serialize};

use crate::error::ImagingError;

/// Tunable parameters for every pipeline stage.
///
/// The clustering parameters follow the saturation-threshold family
/// `s_th(V) = sat_threshold_max - sat_threshold_slope * V / 255`: a pixel whose
/// saturation reaches `s_th` is binned by hue, otherwise by intensity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub sat_threshold_max: f64,
    pub sat_threshold_slope: f64,
    pub hue_bins: u16,
    pub gray_bins: u16,
    /// Regions smaller than this fraction of the image area are absorbed.
    pub min_region_fraction: f64,
    /// Mean intensity at or above which a region may count as background.
    pub background_value_min: f64,
    /// Mean saturation at or below which a region may count as background.
    pub background_saturation_max: f64,
    pub fill_holes: bool,
    /// Upper bound on full thinning passes.
    pub max_thinning_iterations: usize,
    /// Drop single-pixel components after thinning. Off by default since it
    /// changes the component count.
    pub remove_isolated: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sat_threshold_max: 1.0,
            sat_threshold_slope: 0.8,
            hue_bins: 16,
            gray_bins: 8,
            min_region_fraction: 0.001,
            background_value_min: 200.0,
            background_saturation_max: 0.2,
            fill_holes: true,
            max_thinning_iterations: 10_000,
            remove_isolated: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ImagingError> {
        let bad = |msg: &str| Err(ImagingError::InvalidConfig(msg.to_string()));
        if self.hue_bins < 1 {
            return bad("hue_bins must be at least 1");
        }
        if self.gray_bins < 1 {
            return bad("gray_bins must be at least 1");
        }
        if !(self.min_region_fraction > 0.0 && self.min_region_fraction < 1.0) {
            return bad("min_region_fraction must lie strictly between 0 and 1");
        }
        if !self.sat_threshold_max.is_finite() || !self.sat_threshold_slope.is_finite() {
            return bad("saturation threshold parameters must be finite");
        }
        if !(0.0..=255.0).contains(&self.background_value_min) {
            return bad("background_value_min must lie in 0..=255");
        }
        if !(0.0..=1.0).contains(&self.background_saturation_max) {
            return bad("background_saturation_max must lie in 0..=1");
        }
        if self.max_thinning_iterations == 0 {
            return bad("max_thinning_iterations must be positive");
        }
        Ok(())
    }
}
