//! Adaptive binary range coder with integer-only state.
//!
//! Probabilities are 15-bit estimates of a zero bit, adapted by a shift of 5
//! after every coded symbol. Carries are resolved through a cached byte plus
//! a count of pending 0xFF bytes, so bytes already in the output buffer are
//! final and the encoder can roll back to any earlier symbol boundary.

const PROB_BITS: u32 = 15;
const PROB_ONE: u16 = 1 << PROB_BITS;
const ADAPT_SHIFT: u32 = 5;
const TOP: u32 = 1 << 24;

/// Adaptive probability context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context(u16);

impl Default for Context {
    fn default() -> Self {
        Context(PROB_ONE / 2)
    }
}

impl Context {
    #[inline]
    fn update(&mut self, bit: bool) {
        if bit {
            self.0 -= self.0 >> ADAPT_SHIFT;
        } else {
            self.0 += (PROB_ONE - self.0) >> ADAPT_SHIFT;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Checkpoint {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    len: usize,
}

#[derive(Debug, Clone)]
pub struct Encoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.out.push(temp.wrapping_add(carry));
                temp = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> 24) & 0xFF) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    #[inline]
    fn code(&mut self, prob: u16, bit: bool) {
        let bound = (self.range >> PROB_BITS) * prob as u32;
        if bit {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    #[inline]
    pub fn encode(&mut self, ctx: &mut Context, bit: bool) {
        self.code(ctx.0, bit);
        ctx.update(bit);
    }

    /// Equiprobable bit, no adaptation.
    pub fn encode_bypass(&mut self, bit: bool) {
        self.code(PROB_ONE / 2, bit);
    }

    /// Size of the output if the stream were terminated now.
    pub fn finished_len(&self) -> usize {
        self.out.len() + self.cache_size as usize + 4
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            low: self.low,
            range: self.range,
            cache: self.cache,
            cache_size: self.cache_size,
            len: self.out.len(),
        }
    }

    pub fn rollback(&mut self, cp: Checkpoint) {
        self.low = cp.low;
        self.range = cp.range;
        self.cache = cp.cache;
        self.cache_size = cp.cache_size;
        self.out.truncate(cp.len);
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    input: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        let mut d = Self {
            input,
            pos: 0,
            range: u32::MAX,
            code: 0,
        };
        for _ in 0..5 {
            d.code = (d.code << 8) | d.next_byte() as u32;
        }
        d
    }

    #[inline]
    fn next_byte(&mut self) -> u8 {
        let b = self.input.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    #[inline]
    fn decode_with(&mut self, prob: u16) -> bool {
        let bound = (self.range >> PROB_BITS) * prob as u32;
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte() as u32;
        }
        bit
    }

    #[inline]
    pub fn decode(&mut self, ctx: &mut Context) -> bool {
        let bit = self.decode_with(ctx.0);
        ctx.update(bit);
        bit
    }

    pub fn decode_bypass(&mut self) -> bool {
        self.decode_with(PROB_ONE / 2)
    }

    /// True once the decoder has consumed bytes past the end of its input.
    pub fn overran(&self) -> bool {
        self.pos > self.input.len()
    }
}
