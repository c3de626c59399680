//! Finite abelian groups `Z/n₁ × … × Z/nₖ` with mixed-radix element indices.

mod catalog;
mod hom;
mod subgroup;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Result, SumsetError};
use crate::small::{MaskTables, MAX_MASK_ORDER};

pub use catalog::{abelian_groups_of_order, abelian_groups_up_to};
pub use hom::{homs_onto_cyclic, kernel, surjective_homs_to_cyclic, CyclicHom};
pub use subgroup::{enumerate_subgroups, Subgroup};

/// Parses `"7"`, `"2x4"`, `"2,4"`, `"[2, 4]"` or `"Z/2 x Z/4"`.
impl FromStr for GroupSpec {
    type Err = SumsetError;

    fn from_str(s: &str) -> Result<Self> {
        let cleaned = s.trim().trim_start_matches('[').trim_end_matches(']');
        let orders = cleaned
            .split(['x', ',', '*', '×'])
            .map(|p| {
                let p = p.trim();
                let p = p.strip_prefix("Z/").unwrap_or(p);
                p.parse::<usize>().map_err(|_| SumsetError::Parse(format!("bad group factor {p:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        GroupSpec::new(&orders)
    }
}

/// Default cap on `|G|` for bitset-backed sets.
pub const DEFAULT_SIZE_CAP: usize = 1 << 24;

/// A group element, stored as its mixed-radix index.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Element(pub usize);

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

struct GroupInner {
    orders: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
    masks: OnceLock<Option<MaskTables>>,
}

/// A finite abelian group given by its cyclic factor orders.
///
/// `index(x) = Σ xᵢ·∏_{j>i} nⱼ`, so the last factor varies fastest. Cloning is
/// cheap: the spec and its lookup tables are shared.
#[derive(Clone)]
pub struct GroupSpec(Arc<GroupInner>);

impl GroupSpec {
    /// Validates `orders` against the default size cap.
    pub fn new(orders: &[usize]) -> Result<Self> {
        Self::with_cap(orders, DEFAULT_SIZE_CAP)
    }

    pub fn with_cap(orders: &[usize], cap: usize) -> Result<Self> {
        if orders.is_empty() {
            return Err(SumsetError::InvalidSpec("empty list of orders".into()));
        }
        if let Some(bad) = orders.iter().find(|&&n| n == 0) {
            return Err(SumsetError::InvalidSpec(format!("cyclic order {bad} must be >= 1")));
        }
        let mut size: u128 = 1;
        for &n in orders {
            size = size.saturating_mul(n as u128);
        }
        if size > cap as u128 {
            return Err(SumsetError::SizeLimit { size, cap });
        }
        let size = size as usize;
        let mut strides = vec![1; orders.len()];
        for i in (0..orders.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * orders[i + 1];
        }
        Ok(GroupSpec(Arc::new(GroupInner { orders: orders.to_vec(), strides, size, masks: OnceLock::new() })))
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        Self::new(&[n])
    }

    pub fn orders(&self) -> &[usize] {
        &self.0.orders
    }

    pub fn strides(&self) -> &[usize] {
        &self.0.strides
    }

    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn rank(&self) -> usize {
        self.0.orders.len()
    }

    /// Least common multiple of the factor orders.
    pub fn exponent(&self) -> usize {
        self.0.orders.iter().fold(1, |acc, &n| acc.lcm(&n))
    }

    pub fn is_cyclic_factor(&self) -> bool {
        self.rank() == 1
    }

    /// Short human-readable name, e.g. `2x4`.
    pub fn descriptor(&self) -> String {
        self.0.orders.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x")
    }

    pub fn same_as(&self, other: &GroupSpec) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.orders == other.0.orders
    }

    pub fn zero(&self) -> Element {
        Element(0)
    }

    pub fn contains(&self, x: Element) -> bool {
        x.0 < self.0.size
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> {
        (0..self.0.size).map(Element)
    }

    pub fn digits(&self, x: Element) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.rank());
        for (&n, &s) in self.0.orders.iter().zip(&self.0.strides) {
            out.push(x.0 / s % n);
        }
        out
    }

    pub fn encode(&self, digits: &[usize]) -> Result<Element> {
        if digits.len() != self.rank() {
            return Err(SumsetError::InvalidArgument(format!(
                "expected {} coordinates, got {}",
                self.rank(),
                digits.len()
            )));
        }
        let mut idx = 0;
        for ((&d, &n), &s) in digits.iter().zip(&self.0.orders).zip(&self.0.strides) {
            if d >= n {
                return Err(SumsetError::InvalidArgument(format!("coordinate {d} out of range for Z/{n}")));
            }
            idx += d * s;
        }
        Ok(Element(idx))
    }

    pub fn add(&self, x: Element, y: Element) -> Element {
        if let Some(t) = self.mask_tables() {
            return Element(t.add(x.0, y.0));
        }
        let mut idx = 0;
        for (&n, &s) in self.0.orders.iter().zip(&self.0.strides) {
            let d = (x.0 / s % n + y.0 / s % n) % n;
            idx += d * s;
        }
        Element(idx)
    }

    pub fn neg(&self, x: Element) -> Element {
        let mut idx = 0;
        for (&n, &s) in self.0.orders.iter().zip(&self.0.strides) {
            let d = x.0 / s % n;
            idx += ((n - d) % n) * s;
        }
        Element(idx)
    }

    pub fn sub(&self, x: Element, y: Element) -> Element {
        self.add(x, self.neg(y))
    }

    /// `k·x`.
    pub fn scale(&self, k: usize, x: Element) -> Element {
        let mut idx = 0;
        for (&n, &s) in self.0.orders.iter().zip(&self.0.strides) {
            let d = x.0 / s % n;
            idx += (d * (k % n)) % n * s;
        }
        Element(idx)
    }

    /// Additive order of `x`.
    pub fn element_order(&self, x: Element) -> usize {
        self.0
            .orders
            .iter()
            .zip(&self.0.strides)
            .map(|(&n, &s)| n / (x.0 / s % n).gcd(&n))
            .fold(1, |acc, o| acc.lcm(&o))
    }

    /// Character pairing `⟨x, y⟩ = Σ xᵢyᵢ/nᵢ ∈ Q/Z`, returned as its numerator
    /// over `exponent()`.
    pub fn pairing(&self, x: Element, y: Element) -> usize {
        let l = self.exponent();
        let mut acc = 0usize;
        for (&n, &s) in self.0.orders.iter().zip(&self.0.strides) {
            let xi = x.0 / s % n;
            let yi = y.0 / s % n;
            acc = (acc + (xi * yi % n) * (l / n)) % l;
        }
        acc
    }

    /// Mask kernels, present for groups of order at most 64.
    pub fn mask_tables(&self) -> Option<&MaskTables> {
        self.0
            .masks
            .get_or_init(|| {
                if self.0.size <= MAX_MASK_ORDER {
                    let g = self.clone_without_tables();
                    Some(MaskTables::build(self.0.size, move |x, y| g.add_digits(x, y)))
                } else {
                    None
                }
            })
            .as_ref()
    }

    fn clone_without_tables(&self) -> GroupSpec {
        GroupSpec(Arc::new(GroupInner {
            orders: self.0.orders.clone(),
            strides: self.0.strides.clone(),
            size: self.0.size,
            masks: OnceLock::from(None),
        }))
    }

    fn add_digits(&self, x: usize, y: usize) -> usize {
        let mut idx = 0;
        for (&n, &s) in self.0.orders.iter().zip(&self.0.strides) {
            idx += ((x / s % n + y / s % n) % n) * s;
        }
        idx
    }

    pub(crate) fn words(&self) -> usize {
        bits::words_for(self.0.size)
    }

    /// `src + g` on raw words.
    pub(crate) fn translate_words(&self, src: &[u64], g: Element) -> Vec<u64> {
        if let Some(t) = self.mask_tables() {
            return vec![t.translate(src[0], g.0)];
        }
        let n = self.0.size;
        let mut cur = src.to_vec();
        let mut tmp = vec![0u64; cur.len()];
        for (&order, &stride) in self.0.orders.iter().zip(&self.0.strides) {
            let d = g.0 / stride % order;
            if d == 0 {
                continue;
            }
            bits::rotate_blocks(&cur, &mut tmp, n, order * stride, d * stride);
            std::mem::swap(&mut cur, &mut tmp);
        }
        cur
    }
}

impl PartialEq for GroupSpec {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl Eq for GroupSpec {}

impl fmt::Debug for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.orders.iter().map(|n| format!("Z/{n}")).collect();
        write!(f, "{}", parts.join(" x "))
    }
}

#[derive(Serialize, Deserialize)]
struct GroupJson {
    orders: Vec<usize>,
}

impl Serialize for GroupSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GroupJson { orders: self.0.orders.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = GroupJson::deserialize(d)?;
        GroupSpec::new(&j.orders).map_err(serde::de::Error::custom)
    }
}

/// Validates a list of orders into a group; alias kept for the CLI surface.
pub fn make_group(orders: &[usize]) -> Result<GroupSpec> {
    GroupSpec::new(orders)
}
