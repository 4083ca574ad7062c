//! Packed binary rasters.
//!
//! A [`Bitmask`] stores a `width x height` plane row-major, one bit per pixel,
//! with every row padded to a whole byte. Within a byte the leftmost pixel is
//! the most significant bit. The byte stream is kept in little-endian `u64`
//! words so set operations and popcounts run a word at a time; padding bits
//! (row tails and the final word tail) are always zero, which is what lets
//! word-level popcounts equal pixel counts.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("mask dimensions must be positive, got {width}x{height}")]
    ZeroDimensions { width: u32, height: u32 },
    #[error("mask shape mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    ShapeMismatch {
        left_width: u32,
        left_height: u32,
        right_width: u32,
        right_height: u32,
    },
    #[error("jaccard score undefined: both masks are empty")]
    UndefinedScore,
    #[error("expected {expected} bytes of packed rows, got {actual}")]
    PayloadLength { expected: usize, actual: usize },
    #[error("pixel ({x}, {y}) outside {width}x{height} mask")]
    OutOfBounds {
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitmask {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

/// Pixel counts of `|m ∩ d|` and `|m ∪ d|` from one fused pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MaskSetOpsResult {
    pub intersection_count: u64,
    pub union_count: u64,
}

impl MaskSetOpsResult {
    /// `intersection / union`, or `None` when the union is empty.
    pub fn ratio(&self) -> Option<f64> {
        (self.union_count > 0).then(|| self.intersection_count as f64 / self.union_count as f64)
    }
}

impl Bitmask {
    /// Bytes per packed row.
    pub fn row_stride(width: u32) -> usize {
        (width as usize).div_ceil(8)
    }

    /// Total packed payload length in bytes for a `width x height` plane.
    pub fn packed_len(width: u32, height: u32) -> usize {
        Self::row_stride(width) * height as usize
    }

    pub fn empty(width: u32, height: u32) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroDimensions { width, height });
        }
        let words = Self::packed_len(width, height).div_ceil(8);
        Ok(Self {
            width,
            height,
            words: vec![0; words],
        })
    }

    pub fn full(width: u32, height: u32) -> Result<Self, MaskError> {
        let mut mask = Self::empty(width, height)?;
        mask.words.iter_mut().for_each(|w| *w = u64::MAX);
        mask.clear_padding();
        Ok(mask)
    }

    /// Builds a mask from packed rows. Padding bits in `bytes` are ignored.
    pub fn from_packed(width: u32, height: u32, bytes: &[u8]) -> Result<Self, MaskError> {
        let mut mask = Self::empty(width, height)?;
        let expected = Self::packed_len(width, height);
        if bytes.len() != expected {
            return Err(MaskError::PayloadLength {
                expected,
                actual: bytes.len(),
            });
        }
        for (word, chunk) in mask.words.iter_mut().zip(bytes.chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *word = u64::from_le_bytes(buf);
        }
        mask.clear_padding();
        Ok(mask)
    }

    /// Builds a mask from a row-major slice of booleans.
    pub fn from_pixels(width: u32, height: u32, pixels: &[bool]) -> Result<Self, MaskError> {
        let mut mask = Self::empty(width, height)?;
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(MaskError::PayloadLength {
                expected,
                actual: pixels.len(),
            });
        }
        for (i, _) in pixels.iter().enumerate().filter(|(_, &on)| on) {
            let (x, y) = ((i % width as usize) as u32, (i / width as usize) as u32);
            mask.set_unchecked(x, y, true);
        }
        Ok(mask)
    }

    pub fn from_coords<I>(width: u32, height: u32, coords: I) -> Result<Self, MaskError>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut mask = Self::empty(width, height)?;
        for (x, y) in coords {
            mask.set(x, y, true)?;
        }
        Ok(mask)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn same_shape(&self, other: &Bitmask) -> bool {
        self.dims() == other.dims()
    }

    pub fn check_shape(&self, other: &Bitmask) -> Result<(), MaskError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(MaskError::ShapeMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            })
        }
    }

    #[inline]
    fn locate(&self, x: u32, y: u32) -> (usize, u32) {
        let byte = y as usize * Self::row_stride(self.width) + (x / 8) as usize;
        let bit_in_byte = 7 - (x % 8);
        (byte / 8, (byte % 8) as u32 * 8 + bit_in_byte)
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        if x >= self.width || y >= self.height {
            return false;
        }
        let (word, bit) = self.locate(x, y);
        self.words[word] >> bit & 1 == 1
    }

    pub fn set(&mut self, x: u32, y: u32, on: bool) -> Result<(), MaskError> {
        if x >= self.width || y >= self.height {
            return Err(MaskError::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        self.set_unchecked(x, y, on);
        Ok(())
    }

    fn set_unchecked(&mut self, x: u32, y: u32, on: bool) {
        let (word, bit) = self.locate(x, y);
        if on {
            self.words[word] |= 1 << bit;
        } else {
            self.words[word] &= !(1 << bit);
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Iterates set pixels in row-major order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width).filter_map(move |x| self.get(x, y).then_some((x, y)))
        })
    }

    /// Packed rows, exactly `packed_len(width, height)` bytes.
    pub fn to_packed(&self) -> Vec<u8> {
        let len = Self::packed_len(self.width, self.height);
        self.words
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(len)
            .collect()
    }

    pub fn union(&self, other: &Bitmask) -> Result<Bitmask, MaskError> {
        self.check_shape(other)?;
        Ok(self.zip_words(other, |a, b| a | b))
    }

    pub fn intersection(&self, other: &Bitmask) -> Result<Bitmask, MaskError> {
        self.check_shape(other)?;
        Ok(self.zip_words(other, |a, b| a & b))
    }

    /// In-place union; used to accumulate the combined activation mask.
    pub fn union_with(&mut self, other: &Bitmask) -> Result<(), MaskError> {
        self.check_shape(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Bitmask) -> Result<bool, MaskError> {
        self.check_shape(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0))
    }

    pub fn counts(&self, other: &Bitmask) -> Result<MaskSetOpsResult, MaskError> {
        self.check_shape(other)?;
        let (mut inter, mut uni) = (0u64, 0u64);
        for (a, b) in self.words.iter().zip(&other.words) {
            inter += (a & b).count_ones() as u64;
            uni += (a | b).count_ones() as u64;
        }
        Ok(MaskSetOpsResult {
            intersection_count: inter,
            union_count: uni,
        })
    }

    /// Counts for `self` against `covered ∪ candidate` without materializing the union.
    /// Callers must have checked shapes.
    pub(crate) fn counts_against_union(
        &self,
        covered: &Bitmask,
        candidate: &Bitmask,
    ) -> MaskSetOpsResult {
        debug_assert!(self.same_shape(covered) && self.same_shape(candidate));
        let (mut inter, mut uni) = (0u64, 0u64);
        for ((m, c), d) in self.words.iter().zip(&covered.words).zip(&candidate.words) {
            let combined = c | d;
            inter += (m & combined).count_ones() as u64;
            uni += (m | combined).count_ones() as u64;
        }
        MaskSetOpsResult {
            intersection_count: inter,
            union_count: uni,
        }
    }

    fn zip_words(&self, other: &Bitmask, op: impl Fn(u64, u64) -> u64) -> Bitmask {
        Bitmask {
            width: self.width,
            height: self.height,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    fn clear_padding(&mut self) {
        let stride = Self::row_stride(self.width);
        let tail_bits = (stride * 8) as u32 - self.width;
        if tail_bits > 0 {
            // The last byte of each row keeps only its high `8 - tail_bits` bits.
            let keep = 0xffu8 << tail_bits;
            for y in 0..self.height as usize {
                let byte = y * stride + stride - 1;
                let shift = (byte % 8) * 8;
                let clear = (!keep as u64) << shift;
                self.words[byte / 8] &= !clear;
            }
        }
        let used = Self::packed_len(self.width, self.height);
        let rem = used % 8;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (rem * 8)) - 1;
            }
        }
    }
}

/// `|m ∩ d| / |m ∪ d|`.
pub fn jaccard(m: &Bitmask, d: &Bitmask) -> Result<f64, MaskError> {
    m.counts(d)?.ratio().ok_or(MaskError::UndefinedScore)
}

pub fn union(a: &Bitmask, b: &Bitmask) -> Result<Bitmask, MaskError> {
    a.union(b)
}

pub fn counts(m: &Bitmask, d: &Bitmask) -> Result<MaskSetOpsResult, MaskError> {
    m.counts(d)
}

impl fmt::Debug for Bitmask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Bitmask({}x{}, {} set)",
            self.width,
            self.height,
            self.count_ones()
        )?;
        if f.alternate() && self.width <= 64 && self.height <= 64 {
            for y in 0..self.height {
                writeln!(f)?;
                for x in 0..self.width {
                    f.write_str(if self.get(x, y) { "#" } else { "." })?;
                }
            }
        }
        Ok(())
    }
}
