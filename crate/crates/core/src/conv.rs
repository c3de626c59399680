//! Counting convolutions `counts[t] = |A ∩ (t - B)|` and popular sumsets.

use std::str::FromStr;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Result, SumsetError};
use crate::group::GroupSpec;
use crate::gset::GSet;
use crate::rational::Rational;

/// Largest pre-rounding error tolerated by the DFT backend.
pub const DFT_RESIDUAL_GUARD: f64 = 0.25;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Naive,
    Dft,
    Auto,
}

impl FromStr for Backend {
    type Err = SumsetError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Backend::Naive),
            "dft" => Ok(Backend::Dft),
            "auto" => Ok(Backend::Auto),
            _ => Err(SumsetError::Parse(format!("unknown backend {s:?} (naive, dft, auto)"))),
        }
    }
}

/// Representation counts of every element of `A + B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvolutionTable {
    #[serde(skip)]
    pub group: GroupSpec,
    pub counts: Vec<u64>,
}

impl ConvolutionTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `{t : counts[t] > 0}`.
    pub fn support(&self) -> GSet {
        GSet::from_predicate(&self.group, |t| self.counts[t.0] > 0)
    }

    /// `{t : counts[t] > δ|G|}`, or `≥` when `strict` is false.
    pub fn above(&self, delta: Rational, strict: bool) -> GSet {
        let n = self.group.size() as i128;
        let num = *delta.numer() as i128;
        let den = *delta.denom() as i128;
        GSet::from_predicate(&self.group, |t| {
            let lhs = self.counts[t.0] as i128 * den;
            let rhs = num * n;
            if strict {
                lhs > rhs
            } else {
                lhs >= rhs
            }
        })
    }
}

/// Counts with the requested backend. Results never depend on the backend.
pub fn convolution_counts(a: &GSet, b: &GSet, backend: Backend) -> Result<ConvolutionTable> {
    a.check_same(b)?;
    let counts = match backend {
        Backend::Naive => naive_counts(a, b),
        Backend::Dft => dft_counts(a, b).unwrap_or_else(|| {
            log::warn!("dft residual above {DFT_RESIDUAL_GUARD} on {}; using naive counts", a.group().descriptor());
            naive_counts(a, b)
        }),
        Backend::Auto => {
            if prefers_dft(a, b) {
                dft_counts(a, b).unwrap_or_else(|| naive_counts(a, b))
            } else {
                naive_counts(a, b)
            }
        }
    };
    debug_assert_eq!(counts.iter().sum::<u64>(), (a.len() * b.len()) as u64);
    Ok(ConvolutionTable { group: a.group().clone(), counts })
}

fn prefers_dft(a: &GSet, b: &GSet) -> bool {
    let n = a.group().size();
    if n > 1 << 20 {
        return false;
    }
    let small = a.len().min(b.len()) as f64;
    let log = (n as f64).log2().max(1.0);
    // naive ~ |small|·|G|/64 word ops plus |A||B| increments; dft ~ |G|·log|G|
    small * (n as f64 / 64.0) + (a.len() * b.len()) as f64 > 24.0 * n as f64 * log
}

/// Slides the larger set across every element of the smaller one.
pub fn naive_counts(a: &GSet, b: &GSet) -> Vec<u64> {
    let g = a.group();
    if let Some(t) = g.mask_tables() {
        return t.convolution(a.words()[0], b.words()[0]);
    }
    let mut counts = vec![0u64; g.size()];
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    for x in small.iter() {
        let shifted = g.translate_words(large.words(), x);
        for t in crate::bits::ones(&shifted) {
            counts[t] += 1;
        }
    }
    counts
}

/// Separable transform over each cyclic factor; `None` if rounding is unsafe.
pub fn dft_counts(a: &GSet, b: &GSet) -> Option<Vec<u64>> {
    let g = a.group();
    let n = g.size();
    let expected = (a.len() * b.len()) as u64;
    let mut fa = indicator(a);
    let mut fb = indicator(b);
    let mut planner = FftPlanner::<f64>::new();
    transform(g, &mut fa, &mut planner, false);
    transform(g, &mut fb, &mut planner, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    transform(g, &mut fa, &mut planner, true);
    let scale = 1.0 / n as f64;
    let mut counts = Vec::with_capacity(n);
    for v in &fa {
        let re = v.re * scale;
        let r = re.round();
        if (re - r).abs() >= DFT_RESIDUAL_GUARD || (v.im * scale).abs() >= DFT_RESIDUAL_GUARD || r < 0.0 {
            return None;
        }
        counts.push(r as u64);
    }
    if counts.iter().sum::<u64>() != expected {
        return None;
    }
    Some(counts)
}

fn indicator(a: &GSet) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); a.group().size()];
    for x in a.iter() {
        v[x.0].re = 1.0;
    }
    v
}

fn transform(g: &GroupSpec, data: &mut [Complex64], planner: &mut FftPlanner<f64>, inverse: bool) {
    let n = g.size();
    for (&order, &stride) in g.orders().iter().zip(g.strides()) {
        if order == 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(order) } else { planner.plan_fft_forward(order) };
        let block = order * stride;
        let mut line = vec![Complex64::new(0.0, 0.0); order];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for base in (0..n).step_by(block) {
            for off in 0..stride {
                let start = base + off;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[start + j * stride] = *v;
                }
            }
        }
    }
}

/// `A +_δ B = {t : |A ∩ (t - B)| > δ|G|}`.
pub fn popular_sumset(a: &GSet, b: &GSet, delta: Rational) -> Result<GSet> {
    popular_sumset_with(a, b, delta, true, Backend::Auto)
}

/// [`popular_sumset`] with a choice of `>` or `≥` and of backend.
pub fn popular_sumset_with(a: &GSet, b: &GSet, delta: Rational, strict: bool, backend: Backend) -> Result<GSet> {
    if delta < Rational::from_integer(0) {
        return Err(SumsetError::InvalidArgument(format!("delta must be >= 0, got {delta}")));
    }
    Ok(convolution_counts(a, b, backend)?.above(delta, strict))
}

const WALSH_PRIME: u64 = (1 << 61) - 1;

fn mulmod(x: u64, y: u64) -> u64 {
    let p = x as u128 * y as u128;
    let lo = (p as u64) & WALSH_PRIME;
    let hi = (p >> 61) as u64;
    let s = lo + hi;
    if s >= WALSH_PRIME {
        s - WALSH_PRIME
    } else {
        s
    }
}

fn walsh_in_place(v: &mut [u64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let x = v[j];
                let y = v[j + h];
                let s = x + y;
                v[j] = if s >= WALSH_PRIME { s - WALSH_PRIME } else { s };
                v[j + h] = if x >= y { x - y } else { x + WALSH_PRIME - y };
            }
        }
        h *= 2;
    }
}

/// Exact counts on `(Z/2)^N` via the Walsh–Hadamard transform modulo the
/// prime `2^61 - 1`. Counts never exceed `|G| < 2^61`, so the residues are
/// the counts themselves.
pub fn walsh_counts(a: &GSet, b: &GSet) -> Result<Vec<u64>> {
    a.check_same(b)?;
    let g = a.group();
    if !g.orders().iter().all(|&n| n == 2 || n == 1) {
        return Err(SumsetError::InvalidArgument("Walsh transform needs an elementary abelian 2-group".into()));
    }
    let n = g.size();
    let load = |s: &GSet| {
        let mut v = vec![0u64; n];
        for x in s.iter() {
            v[x.0] = 1;
        }
        v
    };
    let mut fa = load(a);
    walsh_in_place(&mut fa);
    if a == b {
        for x in fa.iter_mut() {
            *x = mulmod(*x, *x);
        }
    } else {
        let mut fb = load(b);
        walsh_in_place(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x = mulmod(*x, *y);
        }
    }
    walsh_in_place(&mut fa);
    // inverse of 2 is 2^60 modulo 2^61 - 1
    let mut inv_n = 1u64;
    for _ in 0..n.trailing_zeros() {
        inv_n = mulmod(inv_n, 1 << 60);
    }
    for x in fa.iter_mut() {
        *x = mulmod(*x, inv_n);
    }
    Ok(fa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Element;
    use crate::rational::ratio;
    use crate::sets::sumset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(n: usize) -> GroupSpec {
        GroupSpec::cyclic(n).unwrap()
    }

    fn set(g: &GroupSpec, xs: &[usize]) -> GSet {
        GSet::from_indices(g, xs.iter().copied()).unwrap()
    }

    fn brute(a: &GSet, b: &GSet) -> Vec<u64> {
        let g = a.group();
        let mut c = vec![0; g.size()];
        for x in a.iter() {
            for y in b.iter() {
                c[g.add(x, y).0] += 1;
            }
        }
        c
    }

    #[test]
    fn examples() {
        let g = z(4);
        for be in [Backend::Naive, Backend::Dft, Backend::Auto] {
            assert_eq!(convolution_counts(&set(&g, &[0, 1]), &set(&g, &[0]), be).unwrap().counts, vec![1, 1, 0, 0]);
            let f = GSet::full(&g);
            assert_eq!(convolution_counts(&f, &f, be).unwrap().counts, vec![4, 4, 4, 4]);
        }
        let t = convolution_counts(&set(&g, &[0, 1]), &set(&g, &[0]), Backend::Naive).unwrap();
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"counts":[1,1,0,0]}"#);
    }

    #[test]
    fn popular_examples() {
        let g4 = z(4);
        let f = GSet::full(&g4);
        assert!(popular_sumset(&f, &f, ratio(1, 2)).unwrap().is_full());
        let g5 = z(5);
        let p = set(&g5, &[0]);
        assert_eq!(popular_sumset(&p, &p, ratio(1, 10)).unwrap().indices(), vec![0]);
        assert!(popular_sumset(&p, &p, ratio(1, 5)).unwrap().is_empty());
        assert_eq!(popular_sumset_with(&p, &p, ratio(1, 5), false, Backend::Naive).unwrap().indices(), vec![0]);
        assert!(popular_sumset(&p, &p, ratio(-1, 5)).is_err());
    }

    #[test]
    fn backends_agree_random_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for orders in [vec![8, 9], vec![64], vec![3, 3, 3, 3, 3], vec![2, 2, 2, 2, 2, 2, 2, 2], vec![5, 7, 11]] {
            let g = GroupSpec::new(&orders).unwrap();
            for _ in 0..10 {
                let pa = rng.gen_range(0.0..1.0);
                let pb = rng.gen_range(0.0..1.0);
                let a = GSet::from_predicate(&g, |_| rng.gen_bool(pa));
                let b = GSet::from_predicate(&g, |_| rng.gen_bool(pb));
                let naive = naive_counts(&a, &b);
                assert_eq!(naive, brute(&a, &b));
                assert_eq!(dft_counts(&a, &b).unwrap(), naive);
                assert_eq!(naive.iter().sum::<u64>(), (a.len() * b.len()) as u64);
            }
        }
    }

    #[test]
    fn popular_zero_is_sumset_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for orders in [vec![12], vec![2, 6], vec![4, 4, 2]] {
            let g = GroupSpec::new(&orders).unwrap();
            for _ in 0..50 {
                let a = GSet::from_predicate(&g, |_| rng.gen_bool(0.3));
                let b = GSet::from_predicate(&g, |_| rng.gen_bool(0.3));
                let p0 = popular_sumset(&a, &b, ratio(0, 1)).unwrap();
                assert_eq!(p0, sumset(&a, &b).unwrap());
                let mut prev = p0;
                for k in 1..8 {
                    let p = popular_sumset(&a, &b, ratio(k, 16)).unwrap();
                    assert!(p.is_subset(&prev).unwrap());
                    prev = p;
                }
            }
        }
    }

    #[test]
    fn translation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = GroupSpec::new(&[6, 10]).unwrap();
        for _ in 0..20 {
            let a = GSet::from_predicate(&g, |_| rng.gen_bool(0.4));
            let b = GSet::from_predicate(&g, |_| rng.gen_bool(0.4));
            let s = Element(rng.gen_range(0..60));
            let t = Element(rng.gen_range(0..60));
            let base = naive_counts(&a, &b);
            let moved = naive_counts(&a.translate(s), &b.translate(t));
            for x in g.elements() {
                assert_eq!(moved[x.0], base[g.sub(g.sub(x, s), t).0]);
            }
        }
    }

    #[test]
    fn walsh_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = GroupSpec::new(&[2; 9]).unwrap();
        for _ in 0..10 {
            let a = GSet::from_predicate(&g, |_| rng.gen_bool(0.5));
            let b = GSet::from_predicate(&g, |_| rng.gen_bool(0.2));
            assert_eq!(walsh_counts(&a, &b).unwrap(), naive_counts(&a, &b));
            assert_eq!(walsh_counts(&a, &a).unwrap(), naive_counts(&a, &a));
        }
        assert!(walsh_counts(&GSet::full(&z(4)), &GSet::full(&z(4))).is_err());
    }
}
