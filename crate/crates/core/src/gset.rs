//! Subsets of a finite abelian group, stored as flat bitsets.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Result, SumsetError};
use crate::group::{Element, GroupSpec};
use crate::rational::{ratio, Rational};

/// A subset of `G`. Immutable once built; every operation returns a new set.
#[derive(Clone)]
pub struct GSet {
    group: GroupSpec,
    bits: Vec<u64>,
    len: usize,
}

impl GSet {
    pub fn empty(group: &GroupSpec) -> Self {
        GSet { group: group.clone(), bits: vec![0; group.words()], len: 0 }
    }

    pub fn full(group: &GroupSpec) -> Self {
        let n = group.size();
        let mut bits = vec![!0u64; group.words()];
        if !n.is_multiple_of(64) {
            *bits.last_mut().unwrap() = (1u64 << (n % 64)) - 1;
        }
        GSet { group: group.clone(), bits, len: n }
    }

    pub fn singleton(group: &GroupSpec, x: Element) -> Result<Self> {
        Self::from_indices(group, [x.0])
    }

    pub fn from_indices(group: &GroupSpec, idx: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut bits = vec![0u64; group.words()];
        for i in idx {
            if i >= group.size() {
                return Err(SumsetError::InvalidArgument(format!(
                    "element {i} out of range for group of size {}",
                    group.size()
                )));
            }
            bits[i / 64] |= 1 << (i % 64);
        }
        Ok(Self::from_words_unchecked(group, bits))
    }

    pub fn from_elements(group: &GroupSpec, xs: impl IntoIterator<Item = Element>) -> Result<Self> {
        Self::from_indices(group, xs.into_iter().map(|x| x.0))
    }

    /// Builds from a `u64` mask; the group must have order at most 64.
    pub fn from_mask(group: &GroupSpec, mask: u64) -> Self {
        assert!(group.size() <= 64, "mask sets need |G| <= 64");
        let n = group.size();
        let m = if n == 64 { mask } else { mask & ((1u64 << n) - 1) };
        GSet { group: group.clone(), bits: vec![m], len: m.count_ones() as usize }
    }

    pub(crate) fn from_words_unchecked(group: &GroupSpec, bits: Vec<u64>) -> Self {
        debug_assert_eq!(bits.len(), group.words());
        let len = bits::popcount(&bits);
        GSet { group: group.clone(), bits, len }
    }

    pub fn from_predicate(group: &GroupSpec, mut f: impl FnMut(Element) -> bool) -> Self {
        let mut bits = vec![0u64; group.words()];
        for x in 0..group.size() {
            if f(Element(x)) {
                bits[x / 64] |= 1 << (x % 64);
            }
        }
        Self::from_words_unchecked(group, bits)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    /// The single-word mask for groups of order at most 64.
    pub fn mask(&self) -> Option<u64> {
        (self.group.size() <= 64).then(|| self.bits[0])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.len == self.group.size()
    }

    /// Normalized counting measure `|A|/|G|`.
    pub fn measure(&self) -> Rational {
        ratio(self.len as i64, self.group.size() as i64)
    }

    pub fn contains(&self, x: Element) -> bool {
        x.0 < self.group.size() && self.bits[x.0 / 64] >> (x.0 % 64) & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = Element> + '_ {
        bits::ones(&self.bits).map(Element)
    }

    pub fn indices(&self) -> Vec<usize> {
        bits::ones(&self.bits).collect()
    }

    pub fn min_element(&self) -> Option<Element> {
        self.iter().next()
    }

    pub(crate) fn check_same(&self, other: &GSet) -> Result<()> {
        if self.group.same_as(&other.group) {
            Ok(())
        } else {
            Err(SumsetError::GroupMismatch { left: self.group.descriptor(), right: other.group.descriptor() })
        }
    }

    fn zip_with(&self, other: &GSet, f: impl Fn(u64, u64) -> u64) -> Result<GSet> {
        self.check_same(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_words_unchecked(&self.group, bits))
    }

    pub fn union(&self, other: &GSet) -> Result<GSet> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &GSet) -> Result<GSet> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &GSet) -> Result<GSet> {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn symmetric_difference(&self, other: &GSet) -> Result<GSet> {
        self.zip_with(other, |a, b| a ^ b)
    }

    pub fn complement(&self) -> GSet {
        let full = GSet::full(&self.group);
        full.difference(self).expect("same group")
    }

    pub fn is_subset(&self, other: &GSet) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| a & !b == 0))
    }

    pub fn is_disjoint(&self, other: &GSet) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| a & b == 0))
    }

    pub fn with(&self, x: Element) -> GSet {
        let mut bits = self.bits.clone();
        bits[x.0 / 64] |= 1 << (x.0 % 64);
        Self::from_words_unchecked(&self.group, bits)
    }

    pub fn without(&self, x: Element) -> GSet {
        let mut bits = self.bits.clone();
        bits[x.0 / 64] &= !(1 << (x.0 % 64));
        Self::from_words_unchecked(&self.group, bits)
    }

    pub fn toggled(&self, x: Element) -> GSet {
        let mut bits = self.bits.clone();
        bits[x.0 / 64] ^= 1 << (x.0 % 64);
        Self::from_words_unchecked(&self.group, bits)
    }

    /// `A + g`.
    pub fn translate(&self, g: Element) -> GSet {
        if g.0 == 0 {
            return self.clone();
        }
        let bits = self.group.translate_words(&self.bits, g);
        GSet { group: self.group.clone(), bits, len: self.len }
    }

    /// `-A`.
    pub fn negate(&self) -> GSet {
        if let Some(t) = self.group.mask_tables() {
            return GSet::from_mask(&self.group, t.negate(self.bits[0]));
        }
        let g = &self.group;
        GSet::from_elements(g, self.iter().map(|x| g.neg(x))).expect("in range")
    }

    /// Hex form: bit `i` of the big integer is element `i`; `0x` prefixed.
    pub fn to_hex(&self) -> String {
        let mut s = String::from("0x");
        let mut started = false;
        for w in self.bits.iter().rev() {
            if started {
                s.push_str(&format!("{w:016x}"));
            } else if *w != 0 {
                s.push_str(&format!("{w:x}"));
                started = true;
            }
        }
        if !started {
            s.push('0');
        }
        s
    }

    pub fn from_hex(group: &GroupSpec, hex: &str) -> Result<GSet> {
        let h = hex.trim().trim_start_matches("0x").trim_start_matches("0X");
        if h.is_empty() {
            return Err(SumsetError::Parse(format!("empty hex set {hex:?}")));
        }
        let mut bits = vec![0u64; group.words()];
        for (k, c) in h.bytes().rev().enumerate() {
            let v =
                (c as char).to_digit(16).ok_or_else(|| SumsetError::Parse(format!("bad hex digit {:?}", c as char)))?
                    as u64;
            for b in 0..4 {
                if v >> b & 1 == 1 {
                    let i = 4 * k + b;
                    if i >= group.size() {
                        return Err(SumsetError::InvalidArgument(format!(
                            "hex set has bit {i} beyond group size {}",
                            group.size()
                        )));
                    }
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
        }
        Ok(Self::from_words_unchecked(group, bits))
    }
}

impl GSet {
    /// Parses comma-separated indices (`"0,2,4"`), coordinate tuples
    /// (`"(0,1),(1,0)"`), a hex bitset (`"0x15"`), a JSON index list, a JSON
    /// list of coordinate lists, or a JSON set object for the same group.
    pub fn parse(group: &GroupSpec, text: &str) -> Result<GSet> {
        let t = text.trim();
        if t.is_empty() || t == "[]" {
            return Ok(GSet::empty(group));
        }
        if t.starts_with("0x") || t.starts_with("0X") {
            return GSet::from_hex(group, t);
        }
        if t.starts_with('{') {
            let set: GSet = serde_json::from_str(t).map_err(|e| SumsetError::Parse(e.to_string()))?;
            if !set.group.same_as(group) {
                return Err(SumsetError::GroupMismatch { left: set.group.descriptor(), right: group.descriptor() });
            }
            return Ok(set);
        }
        if t.starts_with('[') {
            let v: serde_json::Value = serde_json::from_str(t).map_err(|e| SumsetError::Parse(e.to_string()))?;
            let items = v.as_array().ok_or_else(|| SumsetError::Parse("expected a JSON list".into()))?;
            let mut out = Vec::with_capacity(items.len());
            for it in items {
                let x = match it {
                    serde_json::Value::Array(c) => {
                        let digits = c
                            .iter()
                            .map(|d| d.as_u64().map(|d| d as usize))
                            .collect::<Option<Vec<_>>>()
                            .ok_or_else(|| SumsetError::Parse(format!("bad coordinate list {it}")))?;
                        group.encode(&digits)?
                    }
                    _ => Element(it.as_u64().ok_or_else(|| SumsetError::Parse(format!("bad element {it}")))? as usize),
                };
                out.push(x);
            }
            return GSet::from_elements(group, out);
        }
        if t.contains('(') {
            let mut out = Vec::new();
            for chunk in t.split(')') {
                let chunk = chunk.trim_start_matches([',', ';', ' ']).trim();
                if chunk.is_empty() {
                    continue;
                }
                let inner =
                    chunk.strip_prefix('(').ok_or_else(|| SumsetError::Parse(format!("bad tuple {chunk:?}")))?;
                let digits = inner
                    .split(',')
                    .map(|d| d.trim().parse::<usize>().map_err(|_| SumsetError::Parse(format!("bad coordinate {d:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                out.push(group.encode(&digits)?);
            }
            return GSet::from_elements(group, out);
        }
        let idx = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<usize>().map_err(|_| SumsetError::Parse(format!("bad element {p:?}"))))
            .collect::<Result<Vec<_>>>()?;
        GSet::from_indices(group, idx)
    }
}

impl PartialEq for GSet {
    fn eq(&self, other: &Self) -> bool {
        self.group.same_as(&other.group) && self.bits == other.bits
    }
}

impl Eq for GSet {}

impl Hash for GSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.group.orders().hash(state);
        self.bits.hash(state);
    }
}

/// Lexicographic order on the ascending element lists.
impl Ord for GSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.group.orders().cmp(other.group.orders()).then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for GSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for GSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|x| x.0)).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct GSetJson {
    group: GroupSpec,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    elements: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    hex: Option<String>,
}

impl Serialize for GSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GSetJson { group: self.group.clone(), elements: Some(self.indices()), hex: None }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = GSetJson::deserialize(d)?;
        match (j.elements, j.hex) {
            (Some(e), None) => GSet::from_indices(&j.group, e).map_err(D::Error::custom),
            (None, Some(h)) => GSet::from_hex(&j.group, &h).map_err(D::Error::custom),
            _ => Err(D::Error::custom("set needs exactly one of \"elements\" or \"hex\"")),
        }
    }
}
