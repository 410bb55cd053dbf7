//! Embedded bitplane coding of wavelet coefficients.
//!
//! Magnitude bitplanes are visited from the most significant plane down;
//! within a plane subbands go coarse-to-fine and coefficients in raster
//! order. Each visit codes either a significance decision (with the sign
//! on becoming significant) or a refinement bit. RoI coefficients are coded
//! with their magnitudes shifted up by the scaling factor, so their bits
//! reach the stream before background bits of the same weight. Every
//! subband is also shifted by its weight shift, the rounded log2 of its
//! synthesis gain relative to the weakest band, so that equal planes carry
//! roughly equal pixel-domain distortion. Any prefix of the decision
//! sequence decodes to a valid approximation.

use super::arith::{Context, Decoder, Encoder};
use super::dwt::Subband;
use crate::error::{Error, Result};

const MARKER: u16 = 0xA5C3;
const MARKER_RESERVE: usize = 3;

fn bit_length(v: u64) -> u8 {
    (64 - v.leading_zeros()) as u8
}

/// Per-band weight shifts from synthesis gains.
pub fn weight_shifts(gains: &[f64]) -> Vec<u8> {
    let min = gains.iter().copied().fold(f64::INFINITY, f64::min);
    gains.iter().map(|g| (g / min).log2().round().max(0.0) as u8).collect()
}

/// Magnitude bits needed per subband for RoI and background coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BandPlanes {
    pub roi: u8,
    pub background: u8,
}

#[derive(Default, Clone, Copy)]
struct BandContexts {
    significance: [Context; 3],
    sign: Context,
    refine: Context,
}

/// Shape of one subband as seen by the coder.
#[derive(Debug, Clone, Copy)]
pub struct BandShape {
    pub width: usize,
    pub height: usize,
}

/// Coding state shared by encoder and decoder.
struct State {
    significant: Vec<Vec<bool>>,
    negative: Vec<Vec<bool>>,
    magnitude: Vec<Vec<u64>>,
    /// Lowest plane whose bit is known, per coefficient.
    known: Vec<Vec<u8>>,
}

impl State {
    fn new(shapes: &[BandShape], flags: &[Vec<bool>], planes: &[BandPlanes]) -> Self {
        let known = flags
            .iter()
            .zip(planes)
            .map(|(f, p)| f.iter().map(|&r| if r { p.roi } else { p.background }).collect())
            .collect();
        let sized = |v| shapes.iter().map(|s| vec![v; s.width * s.height]).collect::<Vec<_>>();
        Self {
            significant: sized(false),
            negative: sized(false),
            magnitude: shapes.iter().map(|s| vec![0u64; s.width * s.height]).collect(),
            known,
        }
    }

    fn neighbor_context(&self, band: usize, shape: BandShape, i: usize) -> usize {
        let sig = &self.significant[band];
        let (x, y) = ((i % shape.width) as isize, (i / shape.width) as isize);
        let mut count = 0;
        for dy in -1..=1isize {
            let ny = y + dy;
            if ny < 0 || ny >= shape.height as isize {
                continue;
            }
            for dx in -1..=1isize {
                let nx = x + dx;
                if (dx == 0 && dy == 0) || nx < 0 || nx >= shape.width as isize {
                    continue;
                }
                if sig[ny as usize * shape.width + nx as usize] {
                    count += 1;
                    if count == 2 {
                        return 2;
                    }
                }
            }
        }
        count
    }
}

/// Source or sink of coding decisions. `None` ends the traversal.
trait Decisions {
    /// Significance of coefficient `i` of `band` at `plane`, with its sign when significant.
    fn significance(
        &mut self,
        band: usize,
        i: usize,
        plane: u8,
        sig_ctx: &mut Context,
        sign_ctx: &mut Context,
    ) -> Option<(bool, bool)>;

    fn refinement(&mut self, band: usize, i: usize, plane: u8, ctx: &mut Context) -> Option<bool>;
}

fn traverse(
    shapes: &[BandShape],
    flags: &[Vec<bool>],
    planes: &[BandPlanes],
    shifts: &[u8],
    scaling: u8,
    io: &mut impl Decisions,
) -> State {
    let mut state = State::new(shapes, flags, planes);
    let mut contexts = vec![BandContexts::default(); shapes.len()];
    let top = planes.iter().map(|p| p.roi.max(p.background)).max().unwrap_or(0);
    for plane in (0..top).rev() {
        for (b, &shape) in shapes.iter().enumerate() {
            let bp = planes[b];
            if plane >= bp.roi.max(bp.background) {
                continue;
            }
            let ctx = &mut contexts[b];
            for i in 0..shape.width * shape.height {
                let roi = flags[b][i];
                let limit = if roi { bp.roi } else { bp.background };
                // shifted magnitudes carry zero bits at the bottom
                let floor = shifts[b] + if roi { scaling } else { 0 };
                if plane >= limit || plane < floor {
                    continue;
                }
                if state.significant[b][i] {
                    match io.refinement(b, i, plane, &mut ctx.refine) {
                        Some(bit) => {
                            state.magnitude[b][i] |= (bit as u64) << plane;
                            state.known[b][i] = plane;
                        }
                        None => return state,
                    }
                } else {
                    let n = state.neighbor_context(b, shape, i);
                    match io.significance(b, i, plane, &mut ctx.significance[n], &mut ctx.sign) {
                        Some((sig, neg)) => {
                            if sig {
                                state.significant[b][i] = true;
                                state.negative[b][i] = neg;
                                state.magnitude[b][i] = 1 << plane;
                            }
                            state.known[b][i] = plane;
                        }
                        None => return state,
                    }
                }
            }
        }
    }
    state
}

struct Writer<'a> {
    magnitude: &'a [Vec<u64>],
    negative: &'a [Vec<bool>],
    enc: Encoder,
    budget: Option<usize>,
    decisions: u32,
}

impl Writer<'_> {
    fn fits(&self) -> bool {
        self.budget
            .is_none_or(|b| self.enc.finished_len() + MARKER_RESERVE <= b)
    }
}

impl Decisions for Writer<'_> {
    fn significance(
        &mut self,
        band: usize,
        i: usize,
        plane: u8,
        sig_ctx: &mut Context,
        sign_ctx: &mut Context,
    ) -> Option<(bool, bool)> {
        let cp = self.enc.checkpoint();
        let saved = (*sig_ctx, *sign_ctx);
        let sig = (self.magnitude[band][i] >> plane) & 1 == 1;
        let neg = self.negative[band][i];
        self.enc.encode(sig_ctx, sig);
        if sig {
            self.enc.encode(sign_ctx, neg);
        }
        if !self.fits() {
            self.enc.rollback(cp);
            (*sig_ctx, *sign_ctx) = saved;
            return None;
        }
        self.decisions += 1;
        Some((sig, neg))
    }

    fn refinement(&mut self, band: usize, i: usize, plane: u8, ctx: &mut Context) -> Option<bool> {
        let cp = self.enc.checkpoint();
        let saved = *ctx;
        let bit = (self.magnitude[band][i] >> plane) & 1 == 1;
        self.enc.encode(ctx, bit);
        if !self.fits() {
            self.enc.rollback(cp);
            *ctx = saved;
            return None;
        }
        self.decisions += 1;
        Some(bit)
    }
}

struct Reader<'a> {
    dec: Decoder<'a>,
    remaining: u32,
}

impl Decisions for Reader<'_> {
    fn significance(
        &mut self,
        _: usize,
        _: usize,
        _: u8,
        sig_ctx: &mut Context,
        sign_ctx: &mut Context,
    ) -> Option<(bool, bool)> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let sig = self.dec.decode(sig_ctx);
        let neg = sig && self.dec.decode(sign_ctx);
        Some((sig, neg))
    }

    fn refinement(&mut self, _: usize, _: usize, _: u8, ctx: &mut Context) -> Option<bool> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(self.dec.decode(ctx))
    }
}

/// Output of the embedded encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddedStream {
    pub planes: Vec<BandPlanes>,
    /// Number of coding decisions in `bytes`.
    pub decisions: u32,
    pub bytes: Vec<u8>,
}

/// Smallest possible arithmetic-coded segment (flush plus marker).
pub const MIN_STREAM_BYTES: usize = 5 + MARKER_RESERVE;

/// Codes the subbands, stopping once the arithmetic-coded bytes would exceed
/// `budget` (unbounded when `None`).
pub fn encode_bands(
    bands: &[Subband],
    flags: &[Vec<bool>],
    shifts: &[u8],
    scaling: u8,
    budget: Option<usize>,
) -> EmbeddedStream {
    let shapes: Vec<BandShape> = bands
        .iter()
        .map(|b| BandShape {
            width: b.width,
            height: b.height,
        })
        .collect();
    let mut magnitude = Vec::with_capacity(bands.len());
    let mut negative = Vec::with_capacity(bands.len());
    let mut planes = Vec::with_capacity(bands.len());
    for ((band, f), &shift) in bands.iter().zip(flags).zip(shifts) {
        let mut bp = BandPlanes::default();
        let mut mags = Vec::with_capacity(band.data.len());
        for (&c, &roi) in band.data.iter().zip(f) {
            let m = (c.unsigned_abs() as u64) << shift;
            let m = if roi { m << scaling } else { m };
            let len = bit_length(m);
            if roi {
                bp.roi = bp.roi.max(len);
            } else {
                bp.background = bp.background.max(len);
            }
            mags.push(m);
        }
        magnitude.push(mags);
        negative.push(band.data.iter().map(|&c| c < 0).collect::<Vec<_>>());
        planes.push(bp);
    }
    let mut writer = Writer {
        magnitude: &magnitude,
        negative: &negative,
        enc: Encoder::new(),
        budget,
        decisions: 0,
    };
    traverse(&shapes, flags, &planes, shifts, scaling, &mut writer);
    let mut enc = writer.enc;
    for k in (0..16).rev() {
        enc.encode_bypass((MARKER >> k) & 1 == 1);
    }
    EmbeddedStream {
        planes,
        decisions: writer.decisions,
        bytes: enc.finish(),
    }
}

/// Decodes an embedded stream into reconstructed (unscaled) coefficients.
///
/// Coefficients whose trailing bits were not transmitted are placed at the
/// middle of their remaining uncertainty interval before the RoI scaling is
/// undone.
pub fn decode_bands(
    shapes: &[BandShape],
    flags: &[Vec<bool>],
    shifts: &[u8],
    scaling: u8,
    stream: &EmbeddedStream,
) -> Result<Vec<Vec<i32>>> {
    let mut reader = Reader {
        dec: Decoder::new(&stream.bytes),
        remaining: stream.decisions,
    };
    let state = traverse(shapes, flags, &stream.planes, shifts, scaling, &mut reader);
    if reader.remaining != 0 {
        return Err(Error::CorruptStream(format!(
            "{} coding decisions left after the last plane",
            reader.remaining
        )));
    }
    let mut marker = 0u16;
    for _ in 0..16 {
        marker = (marker << 1) | reader.dec.decode_bypass() as u16;
    }
    if marker != MARKER || reader.dec.overran() {
        return Err(Error::CorruptStream("arithmetic decoder lost sync".into()));
    }
    let mut out = Vec::with_capacity(shapes.len());
    for b in 0..shapes.len() {
        let coeffs = (0..state.significant[b].len())
            .map(|i| {
                if !state.significant[b][i] {
                    return 0;
                }
                let k = state.known[b][i];
                let mut m = state.magnitude[b][i];
                if k > 0 {
                    m += 1 << (k - 1);
                }
                m >>= shifts[b] + if flags[b][i] { scaling } else { 0 };
                let v = m.min(i32::MAX as u64) as i32;
                if state.negative[b][i] {
                    -v
                } else {
                    v
                }
            })
            .collect();
        out.push(coeffs);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::dwt::SubbandKind;

    fn band(w: usize, h: usize, data: Vec<i32>) -> Subband {
        Subband {
            kind: SubbandKind::LL,
            level: 1,
            width: w,
            height: h,
            data,
        }
    }

    fn shapes(bands: &[Subband]) -> Vec<BandShape> {
        bands
            .iter()
            .map(|b| BandShape {
                width: b.width,
                height: b.height,
            })
            .collect()
    }

    #[test]
    fn unbounded_round_trip_is_exact() {
        let data: Vec<i32> = (0..64).map(|i| (i * 37 % 29) - 14).collect();
        let bands = vec![band(8, 8, data.clone()), band(4, 2, vec![0, 1, -1, 300, 0, 0, -7, 2])];
        let flags = vec![(0..64).map(|i| i % 5 == 0).collect(), vec![true; 8]];
        for s in [1u8, 4, 10] {
            let st = encode_bands(&bands, &flags, &[0, 2], s, None);
            let dec = decode_bands(&shapes(&bands), &flags, &[0, 2], s, &st).unwrap();
            assert_eq!(dec[0], data);
            assert_eq!(dec[1], bands[1].data);
        }
    }

    #[test]
    fn budget_is_respected_and_prefix_decodes() {
        let data: Vec<i32> = (0..1024).map(|i| ((i * 7919) % 401) - 200).collect();
        let bands = vec![band(32, 32, data)];
        let flags = vec![vec![false; 1024]];
        let full = encode_bands(&bands, &flags, &[1], 3, None);
        let mut prev_err = u64::MAX;
        for budget in [20usize, 60, 150, 400, 900] {
            let st = encode_bands(&bands, &flags, &[1], 3, Some(budget));
            assert!(st.bytes.len() <= budget, "{} > {budget}", st.bytes.len());
            assert!(st.decisions < full.decisions);
            let dec = decode_bands(&shapes(&bands), &flags, &[1], 3, &st).unwrap();
            let err: u64 = dec[0]
                .iter()
                .zip(&bands[0].data)
                .map(|(a, b)| (a - b).unsigned_abs() as u64 * (a - b).unsigned_abs() as u64)
                .sum();
            assert!(err <= prev_err);
            prev_err = err;
        }
    }

    #[test]
    fn corrupted_stream_is_detected() {
        let data: Vec<i32> = (0..256).map(|i| (i * 13 % 51) - 25).collect();
        let bands = vec![band(16, 16, data)];
        let flags = vec![vec![false; 256]];
        let mut st = encode_bands(&bands, &flags, &[0], 1, None);
        let mid = st.bytes.len() / 2;
        st.bytes[mid] ^= 0x5a;
        assert!(decode_bands(&shapes(&bands), &flags, &[0], 1, &st).is_err());
    }

    #[test]
    fn empty_roi_ignores_scaling() {
        let data: Vec<i32> = (0..100).map(|i| i % 17 - 8).collect();
        let bands = vec![band(10, 10, data)];
        let flags = vec![vec![false; 100]];
        let a = encode_bands(&bands, &flags, &[0], 1, Some(40));
        let b = encode_bands(&bands, &flags, &[0], 9, Some(40));
        assert_eq!(a, b);
    }
}
