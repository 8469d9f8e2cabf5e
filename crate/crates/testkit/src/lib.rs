//! Synthetic scenes and deliberately naive reference implementations used to
//! check the skeleton pipeline without clinical images.
//!
//! Nothing in here calls into the pipeline's algorithms; only the shared
//! raster types are borrowed from `hine-imaging`.

mod invariants;
mod metrics;
mod oracle;
mod random;
mod scene;

pub use invariants::{check_thinning_invariants, Verdict, Violation};
pub use metrics::{hausdorff, Point};
pub use oracle::{
    endpoints, has_block, oracle_background_components, oracle_components, oracle_perimeter,
    reducible_blocks, reference_merge, Connectivity, ReferenceMerge,
};
pub use random::{random_blob_mask, random_label_image, random_noise_mask, random_stick_figure};
pub use scene::{format_ground_truth, gen_scene, InvalidSpec, Scene, StickFigureSpec, Stroke};
