//! Packed data transfers: eight Q8.8 values per 128-bit word, lane i at
//! bits [16i, 16i+16), little-endian lane order. Rows are padded with zero
//! lanes to a whole word; lengths travel separately.

use crate::fixed::Fixed16;

pub const LANES: usize = 8;

/// Pack exactly eight values into one word, lane 0 in the low bits.
pub fn pack_words(values: &[Fixed16; LANES]) -> u128 {
    let mut word = 0u128;
    for (i, v) in values.iter().enumerate() {
        word |= ((v.0 as u16) as u128) << (16 * i);
    }
    word
}

/// Inverse of [`pack_words`].
pub fn unpack_words(word: u128) -> [Fixed16; LANES] {
    let mut out = [Fixed16::ZERO; LANES];
    for (i, v) in out.iter_mut().enumerate() {
        *v = Fixed16(((word >> (16 * i)) & 0xFFFF) as u16 as i16);
    }
    out
}

/// Pack a row of values into ceil(len/8) words, zero-padding the tail.
/// Returns the words and the value count to carry alongside.
pub fn pack_row(values: &[Fixed16]) -> (Vec<u128>, usize) {
    let words = values
        .chunks(LANES)
        .map(|chunk| {
            let mut lanes = [Fixed16::ZERO; LANES];
            lanes[..chunk.len()].copy_from_slice(chunk);
            pack_words(&lanes)
        })
        .collect();
    (words, values.len())
}

/// Unpack a row of `len` values from its packed words.
pub fn unpack_row(words: &[u128], len: usize) -> Vec<Fixed16> {
    debug_assert_eq!(words.len(), words_per_row(len));
    let mut out = Vec::with_capacity(len);
    for word in words {
        for v in unpack_words(*word) {
            if out.len() == len {
                break;
            }
            out.push(v);
        }
    }
    out
}

/// Words needed for a row of `len` values.
pub const fn words_per_row(len: usize) -> usize {
    len.div_ceil(LANES)
}
