//! Bit-packed binary matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// Number of `u64` words needed to hold `bits` bits.
#[inline]
pub fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Mask selecting the valid bits of the last word of a `bits`-long row.
#[inline]
pub fn tail_mask(bits: usize) -> u64 {
    match bits % WORD_BITS {
        0 => !0,
        r => (1u64 << r) - 1,
    }
}

/// A dense binary matrix, row-major, each row packed into `u64` words.
///
/// The usual orientation is samples × signals. Evaluation code works on the
/// transpose (signals × samples) so that one word holds 64 samples of the
/// same signal. Bits past `cols` in the last word of every row are always
/// zero, so word-level popcounts never need masking.
#[derive(Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl core::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "BitMatrix({}x{})", self.rows, self.cols)?;
        if self.rows * self.cols <= 256 {
            for r in 0..self.rows {
                f.write_str("\n  ")?;
                for c in 0..self.cols {
                    f.write_str(if self.get(r, c) { "1" } else { "0" })?;
                }
            }
        }
        Ok(())
    }
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Builds a matrix from row-major booleans.
    pub fn from_bools(rows: usize, cols: usize, bits: &[bool]) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::structural("bool slice length does not match rows*cols"));
        }
        Ok(Self::from_fn(rows, cols, |r, c| bits[r * cols + c]))
    }

    /// Builds a matrix from already packed row words. Padding bits are cleared.
    pub fn from_words(rows: usize, cols: usize, data: Vec<u64>) -> Result<Self> {
        let words_per_row = words_for(cols);
        if data.len() != rows * words_per_row {
            return Err(Error::structural("word buffer length does not match shape"));
        }
        let mut m = BitMatrix {
            rows,
            cols,
            words_per_row,
            data,
        };
        for r in 0..rows {
            m.clear_padding(r);
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.rows && col < self.cols);
        let w = self.data[row * self.words_per_row + col / WORD_BITS];
        (w >> (col % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        assert!(row < self.rows && col < self.cols, "bit index out of range");
        let w = &mut self.data[row * self.words_per_row + col / WORD_BITS];
        let mask = 1u64 << (col % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[u64] {
        let start = row * self.words_per_row;
        &self.data[start..start + self.words_per_row]
    }

    /// Mutable access to a packed row. Callers writing whole words must
    /// call [`BitMatrix::clear_padding`] afterwards.
    #[inline]
    pub fn row_mut(&mut self, row: usize) -> &mut [u64] {
        let start = row * self.words_per_row;
        &mut self.data[start..start + self.words_per_row]
    }

    #[inline]
    pub fn clear_padding(&mut self, row: usize) {
        if self.words_per_row > 0 {
            let mask = tail_mask(self.cols);
            let last = row * self.words_per_row + self.words_per_row - 1;
            self.data[last] &= mask;
        }
    }

    pub fn as_words(&self) -> &[u64] {
        &self.data
    }

    pub fn count_ones_row(&self, row: usize) -> usize {
        self.row(row).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.cols, self.rows);
        let out_wpr = out.words_per_row;
        for r in 0..self.rows {
            let (word_idx, shift) = (r / WORD_BITS, r % WORD_BITS);
            for (wi, &word) in self.row(r).iter().enumerate() {
                let mut w = word;
                while w != 0 {
                    let c = wi * WORD_BITS + w.trailing_zeros() as usize;
                    out.data[c * out_wpr + word_idx] |= 1u64 << shift;
                    w &= w - 1;
                }
            }
        }
        out
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(rows.len(), self.cols);
        for (dst, &src) in rows.iter().enumerate() {
            out.row_mut(dst).copy_from_slice(self.row(src));
        }
        out
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[BitMatrix]) -> Result<BitMatrix> {
        let cols = parts.first().map_or(0, |p| p.cols);
        if parts.iter().any(|p| p.cols != cols) {
            return Err(Error::structural("vstack: column counts differ"));
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let mut data = Vec::with_capacity(rows * words_for(cols));
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(BitMatrix {
            rows,
            cols,
            words_per_row: words_for(cols),
            data,
        })
    }

    /// Contiguous range of rows.
    pub fn slice_rows(&self, start: usize, end: usize) -> BitMatrix {
        assert!(start <= end && end <= self.rows);
        BitMatrix {
            rows: end - start,
            cols: self.cols,
            words_per_row: self.words_per_row,
            data: self.data[start * self.words_per_row..end * self.words_per_row].to_vec(),
        }
    }
}
