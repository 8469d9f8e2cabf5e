use crate::config::PipelineConfig;
use crate::error::ImagingError;
use crate::image::{BinaryMask, RasterImage};
use crate::merge::merge_small_regions;
use crate::segment::{segment, LabelMap};
use crate::silhouette::extract_silhouette;
use crate::thin::{thin_with, Skeleton, ThinningOptions};

/// The four staged outputs of a pipeline run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineResult {
    pub initial_segments: LabelMap,
    pub merged_segments: LabelMap,
    pub silhouette: BinaryMask,
    pub skeleton: Skeleton,
}

/// segment -> merge -> silhouette -> thin.
pub fn run_pipeline(
    img: &RasterImage,
    cfg: &PipelineConfig,
) -> Result<PipelineResult, ImagingError> {
    cfg.validate()?;
    let initial_segments = segment(img, cfg);
    let merged_segments = merge_small_regions(&initial_segments, cfg);
    let silhouette = extract_silhouette(&merged_segments, cfg)?;
    let opts = ThinningOptions {
        max_iterations: cfg.max_thinning_iterations,
        remove_isolated: cfg.remove_isolated,
        ..Default::default()
    };
    let skeleton = thin_with(&silhouette, &opts);
    Ok(PipelineResult {
        initial_segments,
        merged_segments,
        silhouette,
        skeleton,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_frame_has_no_foreground() {
        let img = RasterImage::filled(352, 288, [255, 255, 255]);
        assert_eq!(
            run_pipeline(&img, &PipelineConfig::default()),
            Err(ImagingError::NoForeground)
        );
    }

    #[test]
    fn invalid_config_rejected() {
        let img = RasterImage::filled(4, 4, [0, 0, 0]);
        let cfg = PipelineConfig {
            gray_bins: 0,
            ..Default::default()
        };
        assert!(matches!(
            run_pipeline(&img, &cfg),
            Err(ImagingError::InvalidConfig(_))
        ));
    }

    #[test]
    fn cross_on_white() {
        let img = RasterImage::from_fn(40, 30, |x, y| {
            let bar = (13..18).contains(&y) && (5..35).contains(&x);
            let post = (18..23).contains(&x) && (3..27).contains(&y);
            if bar || post {
                [90, 50, 40]
            } else {
                [250, 250, 250]
            }
        });
        let r = run_pipeline(&img, &PipelineConfig::default()).unwrap();
        assert!(r.merged_segments.region_count() <= r.initial_segments.region_count());
        assert!(r.skeleton.as_mask().is_subset_of(&r.silhouette));
        assert!(r.skeleton.as_mask().get(20, 15));
        assert!(r.skeleton.as_mask().count() > 40);
    }
}
