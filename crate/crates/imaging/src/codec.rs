//! Binary PPM (P6), PGM (P5) and PNG reading; PPM/PGM/PNG writing.
//!
//! The netpbm writers emit the canonical header `P6\n<w> <h>\n255\n`, so
//! `encode_ppm(decode(x))` reproduces any canonical file byte for byte.

use std::io::Cursor;

use crate::error::CodecError;
use crate::image::{BinaryMask, RasterImage, Rgb};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        match bytes {
            [b'P', b'6', ..] => Some(ImageFormat::Ppm),
            [b'P', b'5', ..] => Some(ImageFormat::Pgm),
            [0x89, b'P', b'N', b'G', ..] => Some(ImageFormat::Png),
            _ => None,
        }
    }

    pub fn mime_type(self) -> &'static str {
        match self {
            ImageFormat::Ppm => "image/x-portable-pixmap",
            ImageFormat::Pgm => "image/x-portable-graymap",
            ImageFormat::Png => "image/png",
        }
    }
}

/// Decodes any supported format into RGB. Gray inputs are replicated across
/// the three channels.
pub fn decode(bytes: &[u8]) -> Result<RasterImage, CodecError> {
    match ImageFormat::sniff(bytes).ok_or(CodecError::UnknownFormat)? {
        ImageFormat::Ppm | ImageFormat::Pgm => decode_pnm(bytes).map(|(img, _)| img),
        ImageFormat::Png => decode_png(bytes),
    }
}

/// Width and height without decoding the raster, after checking that the
/// pixel data is complete.
pub fn probe_dimensions(bytes: &[u8]) -> Result<(usize, usize), CodecError> {
    match ImageFormat::sniff(bytes).ok_or(CodecError::UnknownFormat)? {
        ImageFormat::Ppm | ImageFormat::Pgm => {
            let header = parse_pnm_header(bytes)?;
            let need = header.width * header.height * header.channels;
            let have = bytes.len() - header.data_offset;
            if have < need {
                return Err(CodecError::Truncated {
                    expected: need,
                    actual: have,
                });
            }
            Ok((header.width, header.height))
        }
        ImageFormat::Png => decode_png(bytes).map(|img| (img.width(), img.height())),
    }
}

struct PnmHeader {
    channels: usize,
    width: usize,
    height: usize,
    maxval: usize,
    data_offset: usize,
}

fn parse_pnm_header(bytes: &[u8]) -> Result<PnmHeader, CodecError> {
    let channels = match ImageFormat::sniff(bytes) {
        Some(ImageFormat::Ppm) => 3,
        Some(ImageFormat::Pgm) => 1,
        _ => return Err(CodecError::UnknownFormat),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (n, field) in fields.iter_mut().enumerate() {
        // whitespace and comments before each token
        loop {
            match bytes.get(pos) {
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n' && c != b'\r') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(CodecError::Header("header ends early".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(CodecError::Header(format!(
                "expected a number for field {n}"
            )));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CodecError::Header("number out of range".into()))?;
    }
    match bytes.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err(CodecError::Header("missing whitespace after maxval".into())),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(CodecError::Header("zero dimension".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(CodecError::Unsupported(format!("maxval {maxval}")));
    }
    width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| CodecError::Header("dimensions overflow".into()))?;
    Ok(PnmHeader {
        channels,
        width,
        height,
        maxval,
        data_offset: pos,
    })
}

fn decode_pnm(bytes: &[u8]) -> Result<(RasterImage, ImageFormat), CodecError> {
    let header = parse_pnm_header(bytes)?;
    let need = header.width * header.height * header.channels;
    let data = &bytes[header.data_offset..];
    if data.len() < need {
        return Err(CodecError::Truncated {
            expected: need,
            actual: data.len(),
        });
    }
    let data = &data[..need];
    let scale = |v: u8| -> u8 {
        if header.maxval == 255 {
            v
        } else {
            ((usize::from(v).min(header.maxval) * 255 + header.maxval / 2) / header.maxval) as u8
        }
    };
    let (pixels, format): (Vec<Rgb>, _) = if header.channels == 3 {
        (
            data.chunks_exact(3)
                .map(|c| [scale(c[0]), scale(c[1]), scale(c[2])])
                .collect(),
            ImageFormat::Ppm,
        )
    } else {
        (
            data.iter()
                .map(|&g| {
                    let g = scale(g);
                    [g, g, g]
                })
                .collect(),
            ImageFormat::Pgm,
        )
    };
    let img = RasterImage::new(header.width, header.height, pixels)
        .map_err(|e| CodecError::Header(e.to_string()))?;
    Ok((img, format))
}

/// Reads a P5 file as raw gray bytes.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), CodecError> {
    let header = parse_pnm_header(bytes)?;
    if header.channels != 1 {
        return Err(CodecError::Unsupported("expected a P5 graymap".into()));
    }
    let need = header.width * header.height;
    let data = &bytes[header.data_offset..];
    if data.len() < need {
        return Err(CodecError::Truncated {
            expected: need,
            actual: data.len(),
        });
    }
    Ok((header.width, header.height, data[..need].to_vec()))
}

fn decode_png(bytes: &[u8]) -> Result<RasterImage, CodecError> {
    let png_err = |e: png::DecodingError| CodecError::Png(e.to_string());
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::normalize_to_color8());
    let mut reader = decoder.read_info().map_err(png_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| CodecError::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let step = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => {
            return Err(CodecError::Unsupported("unexpanded palette".into()))
        }
    };
    let mut pixels = Vec::with_capacity(w * h);
    for row in buf.chunks(info.line_size).take(h) {
        for px in row[..w * step].chunks_exact(step) {
            pixels.push(if step < 3 {
                [px[0], px[0], px[0]]
            } else {
                [px[0], px[1], px[2]]
            });
        }
    }
    RasterImage::new(w, h, pixels).map_err(|e| CodecError::Png(e.to_string()))
}

pub fn encode_ppm(img: &RasterImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.reserve(img.pixels().len() * 3);
    for p in img.pixels() {
        out.extend_from_slice(p);
    }
    out
}

pub fn encode_pgm(width: usize, height: usize, gray: &[u8]) -> Vec<u8> {
    assert_eq!(gray.len(), width * height, "gray buffer size");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(gray);
    out
}

/// Mask as P5 with 0 for background and 255 for foreground.
pub fn encode_mask(mask: &BinaryMask) -> Vec<u8> {
    encode_pgm(mask.width(), mask.height(), &mask.to_gray())
}

pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask, CodecError> {
    let (w, h, gray) = decode_pgm(bytes)?;
    BinaryMask::from_gray(w, h, &gray).map_err(|e| CodecError::Header(e.to_string()))
}

fn encode_png_raw(width: usize, height: usize, color: png::ColorType, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory png header");
        writer.write_image_data(data).expect("in-memory png data");
        writer.finish().expect("in-memory png trailer");
    }
    out
}

pub fn encode_png(img: &RasterImage) -> Vec<u8> {
    let data: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    encode_png_raw(img.width(), img.height(), png::ColorType::Rgb, &data)
}

pub fn encode_png_gray(width: usize, height: usize, gray: &[u8]) -> Vec<u8> {
    encode_png_raw(width, height, png::ColorType::Grayscale, gray)
}
