//! Frame and mask file formats plus directory-of-frames sequences.
//!
//! Binary PGM (P5) is the canonical format: 8-bit samples for maxval < 256,
//! big-endian 16-bit samples otherwise. Masks are written as PBM (P4).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::{BitDepth, Frame, Sequence};
use crate::mask::RoiMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
    TiffGray,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Png => "png",
            ImageFormat::TiffGray => "tif",
        }
    }

    fn matches(self, path: &Path) -> bool {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match (self, ext.as_deref()) {
            (ImageFormat::Pgm, Some("pgm")) => true,
            (ImageFormat::Png, Some("png")) => true,
            (ImageFormat::TiffGray, Some("tif" | "tiff")) => true,
            _ => false,
        }
    }
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pgm" => Ok(ImageFormat::Pgm),
            "png" => Ok(ImageFormat::Png),
            "tiff" | "tif" | "tiff-gray" => Ok(ImageFormat::TiffGray),
            other => Err(Error::UnsupportedFormat(other.to_string())),
        }
    }
}

/// Reads every frame of `format` in `dir`, ordered by file name.
pub fn load_sequence(dir: &Path, format: ImageFormat) -> Result<Sequence> {
    let files = list_frames(dir, format)?;
    if files.is_empty() {
        return Err(Error::EmptySequence);
    }
    let frames = files
        .iter()
        .map(|p| load_frame(p, format))
        .collect::<Result<Vec<_>>>()?;
    Sequence::new(frames, 1.0)
}

/// Sorted list of files in `dir` carrying the format's extension.
pub fn list_frames(dir: &Path, format: ImageFormat) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Err(Error::MissingPath(dir.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && format.matches(&path) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn load_frame(path: &Path, format: ImageFormat) -> Result<Frame> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    match format {
        ImageFormat::Pgm => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_pgm(&bytes).map_err(|reason| Error::Malformed {
                path: path.to_path_buf(),
                reason,
            })
        }
        ImageFormat::Png | ImageFormat::TiffGray => load_with_image_crate(path),
    }
}

pub fn save_frame(frame: &Frame, path: &Path, format: ImageFormat) -> Result<()> {
    match format {
        ImageFormat::Pgm => write_file(path, &encode_pgm(frame)),
        ImageFormat::Png | ImageFormat::TiffGray => save_with_image_crate(frame, path, format),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let maxval = frame.depth().max_value();
    let mut out = format!("P5\n{} {}\n{}\n", frame.width(), frame.height(), maxval).into_bytes();
    match frame.depth() {
        BitDepth::Eight => out.extend(frame.pixels().iter().map(|&v| v as u8)),
        BitDepth::Sixteen => {
            for &v in frame.pixels() {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
    }
    out
}

/// Parses the whitespace-separated header tokens of a binary netpbm file,
/// returning the tokens and the offset of the first raster byte.
fn parse_header(bytes: &[u8], magic: &str, n_tokens: usize) -> Result<(Vec<usize>, usize), String> {
    if bytes.len() < 2 || &bytes[..2] != magic.as_bytes() {
        return Err(format!("missing {magic} magic"));
    }
    let mut pos = 2;
    let mut tokens = Vec::with_capacity(n_tokens);
    while tokens.len() < n_tokens {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        let s = std::str::from_utf8(&bytes[start..pos]).map_err(|e| e.to_string())?;
        tokens.push(s.parse::<usize>().map_err(|e| e.to_string())?);
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err("missing raster separator".into());
    }
    Ok((tokens, pos + 1))
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Frame, String> {
    let (tok, start) = parse_header(bytes, "P5", 3)?;
    let (width, height, maxval) = (tok[0], tok[1], tok[2]);
    if width == 0 || height == 0 {
        return Err("zero dimension".into());
    }
    let n = width * height;
    let raster = &bytes[start..];
    let (depth, pixels) = match maxval {
        1..=255 => {
            if raster.len() < n {
                return Err(format!("expected {n} raster bytes, found {}", raster.len()));
            }
            (BitDepth::Eight, raster[..n].iter().map(|&b| b as u16).collect::<Vec<_>>())
        }
        256..=65535 => {
            if raster.len() < 2 * n {
                return Err(format!("expected {} raster bytes, found {}", 2 * n, raster.len()));
            }
            let px = raster[..2 * n]
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect();
            (BitDepth::Sixteen, px)
        }
        _ => return Err(format!("unsupported maxval {maxval}")),
    };
    Frame::new(width, height, depth, pixels).map_err(|e| e.to_string())
}

pub fn encode_pbm(mask: &RoiMask) -> Vec<u8> {
    let (w, h) = mask.dims();
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    let row_bytes = w.div_ceil(8);
    for y in 0..h {
        let mut row = vec![0u8; row_bytes];
        for x in 0..w {
            if mask.get(x, y) {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

pub fn decode_pbm(bytes: &[u8]) -> Result<RoiMask, String> {
    let (tok, start) = parse_header(bytes, "P4", 2)?;
    let (w, h) = (tok[0], tok[1]);
    let row_bytes = w.div_ceil(8);
    let raster = &bytes[start..];
    if raster.len() < row_bytes * h {
        return Err("truncated raster".into());
    }
    Ok(RoiMask::from_fn(w, h, |x, y| {
        raster[y * row_bytes + x / 8] & (0x80 >> (x % 8)) != 0
    }))
}

pub fn save_mask(mask: &RoiMask, path: &Path) -> Result<()> {
    write_file(path, &encode_pbm(mask))
}

pub fn load_mask(path: &Path) -> Result<RoiMask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pbm(&bytes).map_err(|reason| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    })
}

fn load_with_image_crate(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        image::DynamicImage::ImageLuma8(buf) => Frame::new(
            w,
            h,
            BitDepth::Eight,
            buf.into_raw().into_iter().map(u16::from).collect(),
        ),
        image::DynamicImage::ImageLuma16(buf) => Frame::new(w, h, BitDepth::Sixteen, buf.into_raw()),
        other => Err(Error::UnsupportedFormat(format!(
            "{}: non-grayscale color type {:?}",
            path.display(),
            other.color()
        ))),
    }
}

fn save_with_image_crate(frame: &Frame, path: &Path, format: ImageFormat) -> Result<()> {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let fmt = match format {
        ImageFormat::Png => image::ImageFormat::Png,
        _ => image::ImageFormat::Tiff,
    };
    let result = match frame.depth() {
        BitDepth::Eight => {
            let raw: Vec<u8> = frame.pixels().iter().map(|&v| v as u8).collect();
            image::GrayImage::from_raw(w, h, raw)
                .expect("buffer sized to frame")
                .save_with_format(path, fmt)
        }
        BitDepth::Sixteen => image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w, h, frame.pixels().to_vec())
            .expect("buffer sized to frame")
            .save_with_format(path, fmt),
    };
    result.map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::UnsupportedFormat(other.to_string()),
    })
}

/// Zero-padded frame file name, e.g. `frame_0007.pgm`.
pub fn frame_file_name(prefix: &str, index: usize, ext: &str) -> String {
    format!("{prefix}{index:04}.{ext}")
}
