//! Content-addressed frame and sequence storage.
//!
//! Blobs live at `<root>/<first two hex digits>/<hash>` and each stored item
//! has a `<root>/<hash>.meta` JSON sidecar. A sequence blob is its manifest:
//! the frame hashes in order, one per line. Files are written to a temporary
//! name and hard-linked into place, so a blob or sidecar either exists
//! complete or not at all and the first writer's sidecar is the one kept.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use hine_imaging::codec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_FPS: u32 = 25;
pub const DEFAULT_MAX_DIMENSION: usize = 4096;
/// Frame geometry of the reference capture setup.
pub const REFERENCE_GEOMETRY: (usize, usize) = (352, 288);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    Frame,
    Sequence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CameraTag {
    C1,
    C2,
}

impl CameraTag {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "C1" | "c1" => Some(CameraTag::C1),
            "C2" | "c2" => Some(CameraTag::C2),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaRef {
    pub hash: String,
    pub kind: MediaKind,
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub fps: u32,
    #[serde(default)]
    pub camera_tag: Option<CameraTag>,
}

#[derive(Debug, Error)]
pub enum MediaError {
    #[error("unreadable image: {0}")]
    Format(String),
    #[error("{width}x{height} exceeds the {max}x{max} limit")]
    Dimension {
        width: usize,
        height: usize,
        max: usize,
    },
    #[error("frame {index} is {actual:?}, expected {expected:?}")]
    MixedDimensions {
        index: usize,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("no media with hash {0}")]
    NotFound(String),
    #[error("frame {index} out of range for {count} frames")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("frame decoder failed: {0}")]
    Decoder(String),
    #[error("media storage: {0}")]
    Io(#[from] io::Error),
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug)]
pub struct MediaStore {
    root: PathBuf,
    max_dimension: usize,
}

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn valid_hash(hash: &str) -> bool {
    hash.len() == 64
        && hash
            .bytes()
            .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

impl MediaStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, MediaError> {
        Self::with_limit(root, DEFAULT_MAX_DIMENSION)
    }

    pub fn with_limit(root: impl Into<PathBuf>, max_dimension: usize) -> Result<Self, MediaError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            max_dimension,
        })
    }

    pub fn max_dimension(&self) -> usize {
        self.max_dimension
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn blob_path(&self, hash: &str) -> PathBuf {
        self.root.join(&hash[..2]).join(hash)
    }

    fn meta_path(&self, hash: &str) -> PathBuf {
        self.root.join(format!("{hash}.meta"))
    }

    /// Writes `bytes` to `dest` unless it already exists.
    fn place(&self, dest: &Path, bytes: &[u8]) -> Result<(), MediaError> {
        if dest.exists() {
            return Ok(());
        }
        let dir = dest.parent().expect("store paths have a parent");
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            match fs::hard_link(&tmp, dest) {
                Err(e) if e.kind() != io::ErrorKind::AlreadyExists => Err(e),
                _ => Ok(()),
            }
        })();
        let _ = fs::remove_file(&tmp);
        result.map_err(MediaError::from)
    }

    fn check_frame(&self, bytes: &[u8]) -> Result<(usize, usize), MediaError> {
        let img = codec::decode(bytes).map_err(|e| MediaError::Format(e.to_string()))?;
        let (width, height) = (img.width(), img.height());
        if width > self.max_dimension || height > self.max_dimension {
            return Err(MediaError::Dimension {
                width,
                height,
                max: self.max_dimension,
            });
        }
        Ok((width, height))
    }

    fn store(&self, blob: &[u8], meta: MediaRef) -> Result<MediaRef, MediaError> {
        self.place(&self.blob_path(&meta.hash), blob)?;
        let json = serde_json::to_vec_pretty(&meta).expect("media metadata serializes");
        self.place(&self.meta_path(&meta.hash), &json)?;
        // a concurrent or earlier ingest may own the sidecar
        self.get(&meta.hash)
    }

    pub fn ingest_frame(
        &self,
        bytes: &[u8],
        camera_tag: Option<CameraTag>,
    ) -> Result<MediaRef, MediaError> {
        let (width, height) = self.check_frame(bytes)?;
        let hash = content_hash(bytes);
        self.store(
            bytes,
            MediaRef {
                hash,
                kind: MediaKind::Frame,
                width,
                height,
                frame_count: 1,
                fps: DEFAULT_FPS,
                camera_tag,
            },
        )
    }

    pub fn ingest_sequence<B: AsRef<[u8]>>(
        &self,
        frames: &[B],
        fps: u32,
        camera_tag: Option<CameraTag>,
    ) -> Result<MediaRef, MediaError> {
        if frames.is_empty() {
            return Err(MediaError::Invalid(
                "a sequence needs at least one frame".into(),
            ));
        }
        if fps == 0 {
            return Err(MediaError::Invalid("fps must be positive".into()));
        }
        let mut dims = None;
        for (index, frame) in frames.iter().enumerate() {
            let d = self.check_frame(frame.as_ref())?;
            match dims {
                None => dims = Some(d),
                Some(expected) if expected != d => {
                    return Err(MediaError::MixedDimensions {
                        index,
                        expected,
                        actual: d,
                    })
                }
                Some(_) => {}
            }
        }
        let (width, height) = dims.expect("at least one frame");
        let mut manifest = String::with_capacity(frames.len() * 65);
        for frame in frames {
            self.ingest_frame(frame.as_ref(), camera_tag)?;
            manifest.push_str(&content_hash(frame.as_ref()));
            manifest.push('\n');
        }
        self.store(
            manifest.as_bytes(),
            MediaRef {
                hash: content_hash(manifest.as_bytes()),
                kind: MediaKind::Sequence,
                width,
                height,
                frame_count: frames.len(),
                fps,
                camera_tag,
            },
        )
    }

    /// Expands a video into numbered frames with an external command and
    /// ingests them as a sequence. `{input}` and `{output}` in the arguments
    /// are replaced by the video path and a scratch directory; the frames are
    /// taken in file-name order.
    pub fn ingest_video(
        &self,
        decoder: &[String],
        video: &Path,
        fps: u32,
        camera_tag: Option<CameraTag>,
    ) -> Result<MediaRef, MediaError> {
        let (program, args) = decoder
            .split_first()
            .ok_or_else(|| MediaError::Invalid("empty decoder command".into()))?;
        let scratch = tempfile::tempdir_in(&self.root)?;
        let fill = |a: &String| {
            a.replace("{input}", &video.display().to_string())
                .replace("{output}", &scratch.path().display().to_string())
        };
        let status = Command::new(program)
            .args(args.iter().map(fill))
            .status()
            .map_err(|e| MediaError::Decoder(format!("{program}: {e}")))?;
        if !status.success() {
            return Err(MediaError::Decoder(format!(
                "{program} exited with {status}"
            )));
        }
        let mut paths: Vec<PathBuf> = fs::read_dir(scratch.path())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        let frames = paths.iter().map(fs::read).collect::<Result<Vec<_>, _>>()?;
        if frames.is_empty() {
            return Err(MediaError::Decoder(format!("{program} produced no frames")));
        }
        self.ingest_sequence(&frames, fps, camera_tag)
    }

    pub fn get(&self, hash: &str) -> Result<MediaRef, MediaError> {
        if !valid_hash(hash) {
            return Err(MediaError::NotFound(hash.to_string()));
        }
        match fs::read(self.meta_path(hash)) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map_err(|e| MediaError::Io(io::Error::new(io::ErrorKind::InvalidData, e))),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Err(MediaError::NotFound(hash.to_string()))
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn contains(&self, hash: &str) -> bool {
        valid_hash(hash) && self.meta_path(hash).is_file()
    }

    /// Bytes of one frame exactly as ingested.
    pub fn fetch(&self, hash: &str, frame_index: usize) -> Result<Vec<u8>, MediaError> {
        let meta = self.get(hash)?;
        if frame_index >= meta.frame_count {
            return Err(MediaError::IndexOutOfRange {
                index: frame_index,
                count: meta.frame_count,
            });
        }
        let blob = fs::read(self.blob_path(hash))?;
        match meta.kind {
            MediaKind::Frame => Ok(blob),
            MediaKind::Sequence => {
                let manifest = String::from_utf8(blob)
                    .map_err(|e| MediaError::Io(io::Error::new(io::ErrorKind::InvalidData, e)))?;
                let frame = manifest
                    .lines()
                    .nth(frame_index)
                    .ok_or_else(|| MediaError::NotFound(format!("{hash}/{frame_index}")))?;
                Ok(fs::read(self.blob_path(frame))?)
            }
        }
    }

    /// Number of stored blobs, sequences and frames alike.
    pub fn blob_count(&self) -> Result<usize, MediaError> {
        let mut n = 0;
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            if entry.file_type()?.is_dir() && entry.file_name().len() == 2 {
                n += fs::read_dir(entry.path())?
                    .filter_map(Result::ok)
                    .filter(|e| valid_hash(&e.file_name().to_string_lossy()))
                    .count();
            }
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hine_imaging::RasterImage;

    fn frame(w: usize, h: usize, shade: u8) -> Vec<u8> {
        codec::encode_ppm(&RasterImage::filled(w, h, [shade, 40, 90]))
    }

    #[test]
    fn frame_round_trip_and_dedup() {
        let dir = tempfile::tempdir().unwrap();
        let store = MediaStore::open(dir.path()).unwrap();
        let bytes = frame(352, 288, 10);
        let r = store.ingest_frame(&bytes, Some(CameraTag::C1)).unwrap();
        assert_eq!(
            (r.width, r.height, r.frame_count, r.kind),
            (352, 288, 1, MediaKind::Frame)
        );
        assert_eq!(store.fetch(&r.hash, 0).unwrap(), bytes);
        assert_eq!(store.blob_count().unwrap(), 1);

        let again = store.ingest_frame(&bytes, Some(CameraTag::C2)).unwrap();
        assert_eq!(again, r, "first ingest's metadata is kept");
        assert_eq!(store.blob_count().unwrap(), 1);
    }

    #[test]
    fn errors() {
        let dir = tempfile::tempdir().unwrap();
        let store = MediaStore::with_limit(dir.path(), 64).unwrap();
        let bytes = frame(8, 8, 1);
        assert!(matches!(
            store.ingest_frame(&bytes[..bytes.len() - 1], None),
            Err(MediaError::Format(_))
        ));
        assert!(matches!(
            store.ingest_frame(b"hello", None),
            Err(MediaError::Format(_))
        ));
        assert!(matches!(
            store.ingest_frame(&frame(65, 2, 1), None),
            Err(MediaError::Dimension { .. })
        ));
        let r = store.ingest_frame(&bytes, None).unwrap();
        assert!(matches!(
            store.fetch(&r.hash, 1),
            Err(MediaError::IndexOutOfRange { index: 1, count: 1 })
        ));
        assert!(matches!(
            store.fetch(&"0".repeat(64), 0),
            Err(MediaError::NotFound(_))
        ));
        assert!(matches!(
            store.fetch("../../etc/passwd", 0),
            Err(MediaError::NotFound(_))
        ));
    }

    #[test]
    fn sequences() {
        let dir = tempfile::tempdir().unwrap();
        let store = MediaStore::open(dir.path()).unwrap();
        let frames: Vec<Vec<u8>> = (0..10).map(|i| frame(32, 24, i)).collect();
        let seq = store.ingest_sequence(&frames, 25, None).unwrap();
        assert_eq!(
            (seq.kind, seq.frame_count, seq.fps),
            (MediaKind::Sequence, 10, 25)
        );
        for (i, f) in frames.iter().enumerate() {
            assert_eq!(&store.fetch(&seq.hash, i).unwrap(), f);
        }
        assert!(matches!(
            store.fetch(&seq.hash, 10),
            Err(MediaError::IndexOutOfRange { .. })
        ));

        let single = store.ingest_sequence(&frames[..1], 25, None).unwrap();
        assert_eq!((single.kind, single.frame_count), (MediaKind::Sequence, 1));
        assert_ne!(single.hash, content_hash(&frames[0]));

        let mixed = vec![frame(352, 288, 0), frame(320, 240, 0)];
        assert!(matches!(
            store.ingest_sequence(&mixed, 25, None),
            Err(MediaError::MixedDimensions { index: 1, .. })
        ));
    }
}
