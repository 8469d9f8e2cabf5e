//! Semi-automatic skeleton extraction for infant examination frames.
//!
//! The pipeline runs in four stages, each of which is returned to the caller:
//!
//! 1. [`segment`]: HSV threshold clustering into 4-connected regions.
//! 2. [`merge_small_regions`]: absorption of small regions into their neighbours.
//! 3. [`extract_silhouette`]: the non-background region with the longest contour.
//! 4. [`thin`]: safe-point thinning of the silhouette down to a unit-width skeleton.
//!
//! Every operation is a pure function of its inputs.

pub mod codec;
mod config;
mod error;
mod hsv;
mod image;
mod merge;
mod pipeline;
mod segment;
mod silhouette;
mod thin;

pub use config::PipelineConfig;
pub use error::{CodecError, ImagingError};
pub use hsv::{classify_pixel, rgb_to_hsv, FeatureBin, HsvPixel};
pub use image::{BinaryMask, RasterImage, Rgb};
pub use merge::merge_small_regions;
pub use pipeline::{run_pipeline, PipelineResult};
pub use segment::{segment, LabelMap, RegionStats};
pub use silhouette::{extract_silhouette, is_background_color};
pub use thin::{thin, thin_with, EdgeClass, Skeleton, ThinningOptions};
