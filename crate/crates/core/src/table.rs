//! Dense value tables over F_q^n.
//!
//! A point (x_1, ..., x_n) is encoded as the base-q integer with x_1 in the
//! least significant digit. Tables over F_2 are bit-packed into u64 words;
//! the exhaustive bias and Gowers sums spend nearly all of their time in the
//! packed derivative, so that path is branch-free word arithmetic.

use crate::error::{Error, Result};

/// Largest domain a dense table may occupy.
pub const TABLE_CAP: u64 = 1 << 24;

/// Index of a point of F_q^n.
pub fn encode_point(x: &[u8], q: u8) -> u64 {
    let mut idx = 0u64;
    for &d in x.iter().rev() {
        idx = idx * q as u64 + d as u64;
    }
    idx
}

/// Point of F_q^n from an index.
pub fn decode_point(mut idx: u64, q: u8, n: usize) -> Vec<u8> {
    let mut x = vec![0u8; n];
    for d in x.iter_mut() {
        *d = (idx % q as u64) as u8;
        idx /= q as u64;
    }
    x
}

/// Index of the coordinatewise sum of two points.
pub fn add_index(a: u64, b: u64, q: u8, n: usize) -> u64 {
    if q == 2 {
        return a ^ b;
    }
    let q = q as u64;
    let mut out = 0u64;
    let mut pow = 1u64;
    let (mut a, mut b) = (a, b);
    for _ in 0..n {
        out += ((a % q + b % q) % q) * pow;
        a /= q;
        b /= q;
        pow *= q;
    }
    out
}

pub fn domain_size(q: u8, n: usize) -> u128 {
    (q as u128).pow(n as u32)
}

/// Dense table of field values over F_q^n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FnTable {
    /// q = 2; bit i of the packed words is the value at index i. Unused
    /// high bits of the last word are zero.
    Packed { n: usize, words: Vec<u64> },
    /// q > 2; one byte per point.
    Bytes { q: u8, n: usize, vals: Vec<u8> },
}

impl FnTable {
    pub fn q(&self) -> u8 {
        match self {
            FnTable::Packed { .. } => 2,
            FnTable::Bytes { q, .. } => *q,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            FnTable::Packed { n, .. } | FnTable::Bytes { n, .. } => *n,
        }
    }

    pub fn len(&self) -> u64 {
        (self.q() as u64).pow(self.n() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn from_values(q: u8, n: usize, vals: Vec<u8>) -> Result<FnTable> {
        let size = domain_size(q, n);
        if size > TABLE_CAP as u128 {
            return Err(Error::CapExceeded {
                size,
                cap: TABLE_CAP as u128,
            });
        }
        debug_assert_eq!(vals.len() as u128, size);
        if q == 2 {
            let nbits = vals.len();
            let mut words = vec![0u64; nbits.div_ceil(64)];
            for (i, &v) in vals.iter().enumerate() {
                if v != 0 {
                    words[i / 64] |= 1 << (i % 64);
                }
            }
            Ok(FnTable::Packed { n, words })
        } else {
            Ok(FnTable::Bytes { q, n, vals })
        }
    }

    #[inline]
    pub fn value(&self, idx: u64) -> u8 {
        match self {
            FnTable::Packed { words, .. } => {
                ((words[(idx / 64) as usize] >> (idx % 64)) & 1) as u8
            }
            FnTable::Bytes { vals, .. } => vals[idx as usize],
        }
    }

    /// Table of x -> f(x + y) - f(x).
    pub fn derivative(&self, y: u64) -> FnTable {
        match self {
            FnTable::Packed { n, words } => {
                let mut shifted = xor_permute(words, y, *n);
                for (s, w) in shifted.iter_mut().zip(words.iter()) {
                    *s ^= *w;
                }
                FnTable::Packed {
                    n: *n,
                    words: shifted,
                }
            }
            FnTable::Bytes { q, n, vals } => {
                let len = vals.len() as u64;
                let mut out = vec![0u8; vals.len()];
                for x in 0..len {
                    let xs = add_index(x, y, *q, *n);
                    let d = (q + vals[xs as usize] - vals[x as usize]) % q;
                    out[x as usize] = d;
                }
                FnTable::Bytes {
                    q: *q,
                    n: *n,
                    vals: out,
                }
            }
        }
    }

    /// Count of each field value; index v holds |{x : f(x) = v}|.
    pub fn histogram(&self) -> Vec<u64> {
        match self {
            FnTable::Packed { n, words } => {
                let total = 1u64 << n;
                let ones: u64 = words.iter().map(|w| w.count_ones() as u64).sum();
                vec![total - ones, ones]
            }
            FnTable::Bytes { q, vals, .. } => {
                let mut h = vec![0u64; *q as usize];
                for &v in vals {
                    h[v as usize] += 1;
                }
                h
            }
        }
    }

    /// Accumulate the value histogram into `acc`.
    pub fn histogram_into(&self, acc: &mut [u64]) {
        match self {
            FnTable::Packed { n, words } => {
                let total = 1u64 << n;
                let ones: u64 = words.iter().map(|w| w.count_ones() as u64).sum();
                acc[0] += total - ones;
                acc[1] += ones;
            }
            FnTable::Bytes { vals, .. } => {
                for &v in vals {
                    acc[v as usize] += 1;
                }
            }
        }
    }
}

/// Permute a packed table by XOR with y: bit i of the result is bit (i ^ y)
/// of the input.
fn xor_permute(words: &[u64], y: u64, n: usize) -> Vec<u64> {
    let hi = (y >> 6) as usize;
    let mut out: Vec<u64> = if hi == 0 {
        words.to_vec()
    } else {
        (0..words.len()).map(|i| words[i ^ hi]).collect()
    };
    let lo = (y & 63) as u32;
    if lo != 0 {
        let max_k = n.min(6);
        for k in 0..max_k {
            if lo >> k & 1 == 1 {
                let shift = 1u32 << k;
                let mask = INTRA_MASKS[k];
                for w in out.iter_mut() {
                    *w = ((*w & mask) << shift) | ((*w >> shift) & mask);
                }
            }
        }
    }
    out
}

/// Mask of bit positions whose k-th index bit is zero, for k = 0..6.
const INTRA_MASKS: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0f0f_0f0f_0f0f_0f0f,
    0x00ff_00ff_00ff_00ff,
    0x0000_ffff_0000_ffff,
    0x0000_0000_ffff_ffff,
];
