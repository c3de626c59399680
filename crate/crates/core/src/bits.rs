//! Word-level bit manipulation shared by the set algebra.

#[inline]
pub(crate) fn words_for(nbits: usize) -> usize {
    nbits.div_ceil(64)
}

#[inline]
fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        !0
    } else {
        (1u64 << n) - 1
    }
}

/// 64 bits of `src` starting at bit `bit`; bits past the end read as zero.
#[inline]
fn read64(src: &[u64], bit: usize) -> u64 {
    let w = bit / 64;
    let o = bit % 64;
    let lo = src.get(w).copied().unwrap_or(0) >> o;
    if o == 0 {
        lo
    } else {
        lo | (src.get(w + 1).copied().unwrap_or(0) << (64 - o))
    }
}

/// Copies `len` bits from `src[src_off..]` into `dst[dst_off..]`.
pub(crate) fn copy_bits(src: &[u64], src_off: usize, dst: &mut [u64], dst_off: usize, len: usize) {
    let mut done = 0;
    while done < len {
        let d = dst_off + done;
        let dw = d / 64;
        let dofs = d % 64;
        let take = (64 - dofs).min(len - done);
        let m = low_mask(take);
        let bits = read64(src, src_off + done) & m;
        dst[dw] = (dst[dw] & !(m << dofs)) | (bits << dofs);
        done += take;
    }
}

/// Rotates every block of `block_len` bits so that bit `p` of a block moves
/// to `(p + shift) mod block_len`. `dst` must be zeroed or fully overwritten.
pub(crate) fn rotate_blocks(src: &[u64], dst: &mut [u64], nbits: usize, block_len: usize, shift: usize) {
    debug_assert!(shift < block_len && nbits.is_multiple_of(block_len));
    let mut base = 0;
    while base < nbits {
        copy_bits(src, base, dst, base + shift, block_len - shift);
        copy_bits(src, base + block_len - shift, dst, base, shift);
        base += block_len;
    }
}

pub(crate) fn popcount(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

/// Iterator over set bit positions in ascending order.
pub(crate) struct Ones<'a> {
    words: &'a [u64],
    idx: usize,
    cur: u64,
}

impl<'a> Ones<'a> {
    pub(crate) fn new(words: &'a [u64]) -> Self {
        Ones { words, idx: 0, cur: words.first().copied().unwrap_or(0) }
    }
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.cur != 0 {
                let t = self.cur.trailing_zeros() as usize;
                self.cur &= self.cur - 1;
                return Some(self.idx * 64 + t);
            }
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.idx];
        }
    }
}

pub(crate) fn ones(words: &[u64]) -> Ones<'_> {
    Ones::new(words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn to_bools(w: &[u64], n: usize) -> Vec<bool> {
        (0..n).map(|i| w[i / 64] >> (i % 64) & 1 == 1).collect()
    }

    proptest! {
        #[test]
        fn copy_matches_bitwise(src in proptest::collection::vec(any::<u64>(), 1..5),
                                dst in proptest::collection::vec(any::<u64>(), 1..5),
                                a in 0usize..300, b in 0usize..300, len in 0usize..300) {
            let nsrc = src.len() * 64;
            let ndst = dst.len() * 64;
            let a = a % nsrc;
            let b = b % ndst;
            let len = len.min(nsrc - a).min(ndst - b);
            let mut out = dst.clone();
            copy_bits(&src, a, &mut out, b, len);
            let s = to_bools(&src, nsrc);
            let mut expect = to_bools(&dst, ndst);
            expect[b..b + len].copy_from_slice(&s[a..a + len]);
            prop_assert_eq!(to_bools(&out, ndst), expect);
        }

        #[test]
        fn rotate_matches_bitwise(src in proptest::collection::vec(any::<u64>(), 1..4),
                                  block in 1usize..70, shift in 0usize..70) {
            let nbits = (src.len() * 64 / block) * block;
            prop_assume!(nbits > 0);
            let shift = shift % block;
            let mut srcm = src.clone();
            // clear bits past nbits
            for i in nbits..src.len() * 64 { srcm[i / 64] &= !(1 << (i % 64)); }
            let mut out = vec![0u64; src.len()];
            rotate_blocks(&srcm, &mut out, nbits, block, shift);
            let s = to_bools(&srcm, nbits);
            let got = to_bools(&out, nbits);
            for (p, &bit) in s.iter().enumerate() {
                let base = p / block * block;
                let q = base + (p - base + shift) % block;
                prop_assert_eq!(got[q], bit);
            }
        }
    }

    #[test]
    fn ones_iterates_ascending() {
        let w = [0b1010u64, 1 << 63];
        assert_eq!(ones(&w).collect::<Vec<_>>(), vec![1, 3, 127]);
        assert_eq!(popcount(&w), 3);
    }
}
