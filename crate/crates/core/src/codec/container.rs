//! The `.froi` container.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4 | magic `FROI` |
//! | 4  | 2 | version (1) |
//! | 6  | 4 | width |
//! | 10 | 4 | height |
//! | 14 | 1 | bit depth (8 or 16) |
//! | 15 | 1 | DWT levels |
//! | 16 | 1 | scaling factor |
//! | 17 | 4 | compression rate × 100, 0 for lossless |
//! | 21 | 4 | mask segment length |
//! | 25 | 4 | payload length |
//! | 29 | … | mask segment, then payload |
//!
//! The mask segment starts with a method byte. Method 0 stores the row-major
//! mask as alternating run lengths (LEB128 varints), starting with a run of
//! unset pixels. Method 1 codes every pixel with the adaptive binary coder,
//! using a 10-pixel causal neighbourhood as context. The encoder keeps the
//! shorter of the two.
//!
//! The payload holds two bytes per subband (magnitude planes of RoI and
//! background coefficients), a u32 count of coding decisions, and the
//! arithmetic-coded bytes.

use super::arith::{Context, Decoder, Encoder};
use super::bitplane::{BandPlanes, EmbeddedStream};
use crate::error::{Error, Result};
use crate::frame::BitDepth;
use crate::mask::RoiMask;

pub const MAGIC: &[u8; 4] = b"FROI";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 29;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub width: u32,
    pub height: u32,
    pub depth: BitDepth,
    pub levels: u8,
    pub scaling: u8,
    /// Target rate × 100; 0 marks a lossless stream.
    pub rate_centi: u32,
}

impl Header {
    pub fn is_lossless(&self) -> bool {
        self.rate_centi == 0
    }

    pub fn compression_rate(&self) -> Option<f64> {
        (!self.is_lossless()).then(|| self.rate_centi as f64 / 100.0)
    }
}

/// A parsed or freshly encoded container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiBitstream {
    pub header: Header,
    pub mask: RoiMask,
    pub stream: EmbeddedStream,
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn get_varint(input: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let byte = *input
            .get(*pos)
            .ok_or_else(|| Error::CorruptStream("mask segment ends inside a varint".into()))?;
        *pos += 1;
        v |= ((byte & 0x7f) as u64) << shift;
        if byte & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(Error::CorruptStream("varint too long".into()))
}

pub fn encode_mask_rle(mask: &RoiMask) -> Vec<u8> {
    let mut out = Vec::new();
    let mut current = false;
    let mut run = 0u64;
    for &b in mask.bits() {
        if b == current {
            run += 1;
        } else {
            put_varint(&mut out, run);
            current = b;
            run = 1;
        }
    }
    put_varint(&mut out, run);
    out
}

pub fn decode_mask_rle(data: &[u8], width: usize, height: usize) -> Result<RoiMask> {
    let n = width * height;
    let mut bits = Vec::with_capacity(n);
    let mut pos = 0;
    let mut value = false;
    while pos < data.len() {
        let run = get_varint(data, &mut pos)? as usize;
        if bits.len() + run > n {
            return Err(Error::CorruptStream("mask runs exceed the frame size".into()));
        }
        bits.resize(bits.len() + run, value);
        value = !value;
    }
    if bits.len() != n {
        return Err(Error::CorruptStream(format!(
            "mask runs cover {} of {n} pixels",
            bits.len()
        )));
    }
    RoiMask::new(width, height, bits)
}

pub const MASK_RLE: u8 = 0;
pub const MASK_CONTEXT: u8 = 1;

/// Causal template: three pixels two rows up, five one row up, two to the left.
fn mask_context(bits: &[bool], width: usize, x: usize, y: usize) -> usize {
    let at = |dx: isize, dy: isize| -> usize {
        let (nx, ny) = (x as isize + dx, y as isize - dy);
        (nx >= 0 && ny >= 0 && (nx as usize) < width && bits[ny as usize * width + nx as usize]) as usize
    };
    let mut c = 0;
    for (dx, dy) in [(-1, 2), (0, 2), (1, 2), (-2, 1), (-1, 1), (0, 1), (1, 1), (2, 1), (-2, 0), (-1, 0)] {
        c = (c << 1) | at(dx, dy);
    }
    c
}

pub fn encode_mask_context(mask: &RoiMask) -> Vec<u8> {
    let (w, h) = mask.dims();
    let bits = mask.bits();
    let mut contexts = vec![Context::default(); 1 << 10];
    let mut enc = Encoder::new();
    for y in 0..h {
        for x in 0..w {
            enc.encode(&mut contexts[mask_context(bits, w, x, y)], bits[y * w + x]);
        }
    }
    enc.finish()
}

pub fn decode_mask_context(data: &[u8], width: usize, height: usize) -> Result<RoiMask> {
    let mut bits = vec![false; width * height];
    let mut contexts = vec![Context::default(); 1 << 10];
    let mut dec = Decoder::new(data);
    for y in 0..height {
        for x in 0..width {
            let c = mask_context(&bits, width, x, y);
            bits[y * width + x] = dec.decode(&mut contexts[c]);
        }
    }
    if dec.overran() {
        return Err(Error::CorruptStream("mask segment too short".into()));
    }
    RoiMask::new(width, height, bits)
}

/// The mask segment: method byte plus the shorter encoding.
pub fn encode_mask(mask: &RoiMask) -> Vec<u8> {
    let rle = encode_mask_rle(mask);
    // the context coder needs at least its 5-byte flush
    let coded = (rle.len() > 5).then(|| encode_mask_context(mask));
    let (method, body) = match coded {
        Some(c) if c.len() < rle.len() => (MASK_CONTEXT, c),
        _ => (MASK_RLE, rle),
    };
    let mut out = Vec::with_capacity(body.len() + 1);
    out.push(method);
    out.extend_from_slice(&body);
    out
}

pub fn decode_mask(segment: &[u8], width: usize, height: usize) -> Result<RoiMask> {
    match segment.split_first() {
        Some((&MASK_RLE, body)) => decode_mask_rle(body, width, height),
        Some((&MASK_CONTEXT, body)) => decode_mask_context(body, width, height),
        Some((m, _)) => Err(Error::CorruptStream(format!("unknown mask method {m}"))),
        None => Err(Error::CorruptStream("empty mask segment".into())),
    }
}

/// Bytes taken by the payload prefix for `bands` subbands.
pub fn payload_prefix_len(bands: usize) -> usize {
    2 * bands + 4
}

impl RoiBitstream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mask = encode_mask(&self.mask);
        let payload_len = payload_prefix_len(self.stream.planes.len()) + self.stream.bytes.len();
        let h = &self.header;
        let mut out = Vec::with_capacity(HEADER_LEN + mask.len() + payload_len);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&h.width.to_le_bytes());
        out.extend_from_slice(&h.height.to_le_bytes());
        out.push(h.depth.bits() as u8);
        out.push(h.levels);
        out.push(h.scaling);
        out.extend_from_slice(&h.rate_centi.to_le_bytes());
        out.extend_from_slice(&(mask.len() as u32).to_le_bytes());
        out.extend_from_slice(&(payload_len as u32).to_le_bytes());
        out.extend_from_slice(&mask);
        for p in &self.stream.planes {
            out.push(p.roi);
            out.push(p.background);
        }
        out.extend_from_slice(&self.stream.decisions.to_le_bytes());
        out.extend_from_slice(&self.stream.bytes);
        out
    }

    pub fn parse(data: &[u8]) -> Result<Self> {
        if data.len() < HEADER_LEN {
            return Err(Error::TruncatedStream {
                expected: HEADER_LEN,
                found: data.len(),
            });
        }
        if &data[0..4] != MAGIC {
            return Err(Error::CorruptStream("bad magic".into()));
        }
        let u16_at = |o: usize| u16::from_le_bytes([data[o], data[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(data[o..o + 4].try_into().unwrap());
        let version = u16_at(4);
        if version != VERSION {
            return Err(Error::CorruptStream(format!("unsupported version {version}")));
        }
        let depth = BitDepth::from_bits(data[14] as u32)
            .map_err(|_| Error::CorruptStream(format!("bad bit depth {}", data[14])))?;
        let header = Header {
            width: u32_at(6),
            height: u32_at(10),
            depth,
            levels: data[15],
            scaling: data[16],
            rate_centi: u32_at(17),
        };
        let (width, height) = (header.width as usize, header.height as usize);
        if width == 0 || height == 0 {
            return Err(Error::CorruptStream("zero frame dimension".into()));
        }
        super::dwt::check_levels(width, height, header.levels)
            .map_err(|e| Error::CorruptStream(e.to_string()))?;
        let mask_len = u32_at(21) as usize;
        let payload_len = u32_at(25) as usize;
        let expected = HEADER_LEN + mask_len + payload_len;
        if data.len() < expected {
            return Err(Error::TruncatedStream {
                expected,
                found: data.len(),
            });
        }
        if data.len() > expected {
            return Err(Error::CorruptStream(format!(
                "{} trailing bytes",
                data.len() - expected
            )));
        }
        let mask = decode_mask(&data[HEADER_LEN..HEADER_LEN + mask_len], width, height)?;
        let payload = &data[HEADER_LEN + mask_len..];
        let bands = 1 + 3 * header.levels as usize;
        let prefix = payload_prefix_len(bands);
        if payload.len() < prefix {
            return Err(Error::CorruptStream("payload shorter than its prefix".into()));
        }
        let planes: Vec<BandPlanes> = payload[..2 * bands]
            .chunks_exact(2)
            .map(|c| BandPlanes {
                roi: c[0],
                background: c[1],
            })
            .collect();
        if planes.iter().any(|p| p.roi > 64 || p.background > 64) {
            return Err(Error::CorruptStream("bitplane count out of range".into()));
        }
        let decisions = u32::from_le_bytes(payload[2 * bands..prefix].try_into().unwrap());
        Ok(Self {
            header,
            mask,
            stream: EmbeddedStream {
                planes,
                decisions,
                bytes: payload[prefix..].to_vec(),
            },
        })
    }
}
