//! Renderings of the four pipeline stages and their on-disk form.

use std::io;
use std::path::{Path, PathBuf};

use hine_imaging::codec::{encode_mask, encode_png, encode_png_gray, encode_ppm};
use hine_imaging::{LabelMap, PipelineResult, RasterImage, Rgb};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Segments,
    Merged,
    Silhouette,
    Skeleton,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::Segments,
        Stage::Merged,
        Stage::Silhouette,
        Stage::Skeleton,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Segments => "segments",
            Stage::Merged => "merged",
            Stage::Silhouette => "silhouette",
            Stage::Skeleton => "skeleton",
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Stage::Segments => ".seg.ppm",
            Stage::Merged => ".merged.ppm",
            Stage::Silhouette => ".mask.pgm",
            Stage::Skeleton => ".skel.pgm",
        }
    }
}

/// Distinct, stable colour per region id: hues step by the golden angle.
pub fn label_color(id: u32) -> Rgb {
    let hue = (f64::from(id) * 137.507_764) % 360.0;
    let (s, v) = (0.65, 0.92);
    let c = v * s;
    let x = c * (1.0 - ((hue / 60.0) % 2.0 - 1.0).abs());
    let (r, g, b) = match (hue / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let to = |u: f64| ((u + m) * 255.0).round() as u8;
    [to(r), to(g), to(b)]
}

pub fn render_labels(lm: &LabelMap) -> RasterImage {
    RasterImage::from_fn(lm.width(), lm.height(), |x, y| {
        label_color(lm.label_at(x, y))
    })
}

/// One stage as stored bytes (PPM or PGM) and as a PNG preview.
pub struct EncodedStage {
    pub stage: Stage,
    pub bytes: Vec<u8>,
    pub png: Vec<u8>,
}

pub fn encode_stages(result: &PipelineResult) -> Vec<EncodedStage> {
    Stage::ALL
        .into_iter()
        .map(|stage| {
            let (bytes, png) = match stage {
                Stage::Segments => {
                    let img = render_labels(&result.initial_segments);
                    (encode_ppm(&img), encode_png(&img))
                }
                Stage::Merged => {
                    let img = result.merged_segments.render_mean_colors();
                    (encode_ppm(&img), encode_png(&img))
                }
                Stage::Silhouette => {
                    let m = &result.silhouette;
                    (
                        encode_mask(m),
                        encode_png_gray(m.width(), m.height(), &m.to_gray()),
                    )
                }
                Stage::Skeleton => {
                    let m = result.skeleton.as_mask();
                    (
                        encode_mask(m),
                        encode_png_gray(m.width(), m.height(), &m.to_gray()),
                    )
                }
            };
            EncodedStage { stage, bytes, png }
        })
        .collect()
}

/// Writes `<stem><suffix>` files into `dir`: all four stages, or only the
/// skeleton.
pub fn write_stages(
    dir: &Path,
    stem: &str,
    result: &PipelineResult,
    all: bool,
) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for s in encode_stages(result) {
        if !all && s.stage != Stage::Skeleton {
            continue;
        }
        let path = dir.join(format!("{stem}{}", s.stage.suffix()));
        std::fs::write(&path, &s.bytes)?;
        written.push(path);
    }
    Ok(written)
}
