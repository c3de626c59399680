//! Single-word kernels for groups of order at most 64.
//!
//! Every subset is a `u64` mask. Translation by `g` is done with one
//! precomputed table per (g, byte position), so translating a whole set costs
//! at most eight lookups. The exhaustive verification suites run almost
//! entirely on these kernels.

/// Largest group order handled by the mask kernels.
pub const MAX_MASK_ORDER: usize = 64;

pub struct MaskTables {
    size: usize,
    nbytes: usize,
    shift: Vec<u64>,
    add: Vec<u8>,
    neg: Vec<u8>,
    full: u64,
}

impl MaskTables {
    pub(crate) fn build(size: usize, add: impl Fn(usize, usize) -> usize) -> Self {
        assert!((1..=MAX_MASK_ORDER).contains(&size));
        let nbytes = size.div_ceil(8);
        let mut add_t = vec![0u8; size * size];
        for x in 0..size {
            for y in 0..size {
                add_t[x * size + y] = add(x, y) as u8;
            }
        }
        let mut neg = vec![0u8; size];
        for x in 0..size {
            neg[x] = (0..size).find(|&y| add_t[x * size + y] == 0).unwrap() as u8;
        }
        let mut shift = vec![0u64; size * nbytes * 256];
        for g in 0..size {
            for j in 0..nbytes {
                for v in 0..256usize {
                    let mut out = 0u64;
                    for bit in 0..8 {
                        let x = j * 8 + bit;
                        if v >> bit & 1 == 1 && x < size {
                            out |= 1 << add_t[x * size + g];
                        }
                    }
                    shift[(g * nbytes + j) * 256 + v] = out;
                }
            }
        }
        let full = if size == 64 { !0 } else { (1u64 << size) - 1 };
        MaskTables { size, nbytes, shift, add: add_t, neg, full }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn full(&self) -> u64 {
        self.full
    }

    #[inline]
    pub fn add(&self, x: usize, y: usize) -> usize {
        self.add[x * self.size + y] as usize
    }

    #[inline]
    pub fn neg(&self, x: usize) -> usize {
        self.neg[x] as usize
    }

    /// `m + g`.
    #[inline]
    pub fn translate(&self, m: u64, g: usize) -> u64 {
        let base = g * self.nbytes * 256;
        let mut out = 0;
        for j in 0..self.nbytes {
            out |= self.shift[base + j * 256 + ((m >> (8 * j)) & 0xff) as usize];
        }
        out
    }

    /// `-m`.
    pub fn negate(&self, m: u64) -> u64 {
        let mut out = 0;
        let mut r = m;
        while r != 0 {
            let x = r.trailing_zeros() as usize;
            r &= r - 1;
            out |= 1 << self.neg[x];
        }
        out
    }

    pub fn sumset(&self, a: u64, b: u64) -> u64 {
        if a == 0 || b == 0 {
            return 0;
        }
        let (small, large) = if a.count_ones() <= b.count_ones() { (a, b) } else { (b, a) };
        let mut acc = 0;
        let mut r = small;
        while r != 0 {
            let x = r.trailing_zeros() as usize;
            r &= r - 1;
            acc |= self.translate(large, x);
            if acc == self.full {
                break;
            }
        }
        acc
    }

    /// `{g : c + g = c}`; the whole group for the empty set.
    pub fn stabilizer(&self, c: u64) -> u64 {
        if c == 0 {
            return self.full;
        }
        let c0 = c.trailing_zeros() as usize;
        let nc0 = self.neg[c0] as usize;
        let mut h = 0;
        let mut r = c;
        while r != 0 {
            let x = r.trailing_zeros() as usize;
            r &= r - 1;
            let g = self.add(x, nc0);
            if self.translate(c, g) == c {
                h |= 1 << g;
            }
        }
        h
    }

    /// `{g : g + b ⊆ a + b}` given the precomputed sumset `ab`.
    pub fn movers(&self, ab: u64, b: u64) -> u64 {
        if b == 0 {
            return self.full;
        }
        let mut out = 0;
        for g in 0..self.size {
            if self.translate(b, g) & !ab == 0 {
                out |= 1 << g;
            }
        }
        out
    }

    /// Counts `|a ∩ (t - b)|` for every `t`.
    pub fn convolution(&self, a: u64, b: u64) -> Vec<u64> {
        let mut counts = vec![0u64; self.size];
        let mut r = a;
        while r != 0 {
            let x = r.trailing_zeros() as usize;
            r &= r - 1;
            let mut s = self.translate(b, x);
            while s != 0 {
                let t = s.trailing_zeros() as usize;
                s &= s - 1;
                counts[t] += 1;
            }
        }
        counts
    }
}
