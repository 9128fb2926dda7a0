//! Fixed-length packed binary words.

use std::fmt;
use std::ops::BitXor;

use crate::error::{check_len, Result};

const WORD: usize = 64;

/// A fixed-length sequence of bits, packed into 64-bit words.
///
/// Used for keys, syndromes and error patterns alike. Bits past `len` in the
/// last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitBlock {
    len: usize,
    words: Vec<u64>,
}

impl BitBlock {
    pub fn zeros(len: usize) -> Self {
        BitBlock {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = BitBlock {
            len,
            words: vec![u64::MAX; len.div_ceil(WORD)],
        };
        b.mask_tail();
        b
    }

    /// Builds a block from 0/1 values; any nonzero byte counts as 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut b = BitBlock::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            if v != 0 {
                b.words[i / WORD] |= 1 << (i % WORD);
            }
        }
        b
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let bits: Vec<u8> = iter.into_iter().map(u8::from).collect();
        BitBlock::from_bits(&bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Panics if `i >= len`.
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1 << (i % WORD);
    }

    /// Number of set bits.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor(&self, other: &BitBlock) -> Result<BitBlock> {
        check_len(self.len, other.len)?;
        Ok(BitBlock {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    pub fn hamming_distance(&self, other: &BitBlock) -> Result<usize> {
        check_len(self.len, other.len)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    pub fn complement(&self) -> BitBlock {
        let mut b = BitBlock {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        b.mask_tail();
        b
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    /// Positions of set bits in increasing order.
    pub fn ones_positions(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    /// Keeps the bits at `positions` (in the given order).
    pub fn select(&self, positions: &[usize]) -> BitBlock {
        BitBlock::from_bools(positions.iter().map(|&p| self.get(p)))
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    fn mask_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl BitXor for &BitBlock {
    type Output = BitBlock;

    /// Panics on length mismatch; use [`BitBlock::xor`] for a checked variant.
    fn bitxor(self, rhs: &BitBlock) -> BitBlock {
        self.xor(rhs).expect("xor of blocks with different lengths")
    }
}

impl fmt::Debug for BitBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitBlock[{}](", self.len)?;
        if self.len <= 128 {
            for b in self.iter() {
                write!(f, "{}", u8::from(b))?;
            }
        } else {
            write!(f, "weight={}", self.weight())?;
        }
        write!(f, ")")
    }
}
