use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{Element, GroupSpec};
use crate::error::{Result, SumsetError};
use crate::gset::GSet;
use crate::sets::sumset;

struct SubgroupInner {
    members: GSet,
    index: usize,
    coset_reps: Vec<Element>,
    coset_of: Vec<u32>,
}

/// A subgroup `K ≤ G` together with its coset table.
///
/// Cosets are numbered by their least element, so `coset_reps()` is
/// ascending and `coset_reps()[0] == 0`.
#[derive(Clone)]
pub struct Subgroup(Arc<SubgroupInner>);

impl Subgroup {
    /// Verifies that `members` is closed under the group law.
    pub fn new(members: GSet) -> Result<Self> {
        let g = members.group().clone();
        if !members.contains(g.zero()) {
            return Err(SumsetError::NotSubgroup("does not contain 0".into()));
        }
        for a in members.iter() {
            if members.translate(a) != members {
                return Err(SumsetError::NotSubgroup(format!("not closed under adding {a}")));
            }
        }
        Ok(Self::from_closed(members))
    }

    /// Trusted constructor for sets already known to be subgroups.
    pub(crate) fn from_closed(members: GSet) -> Self {
        let g = members.group().clone();
        debug_assert!(members.contains(g.zero()));
        let n = g.size();
        let mut coset_of = vec![u32::MAX; n];
        let mut coset_reps = Vec::with_capacity(n / members.len().max(1));
        let elems: Vec<Element> = members.iter().collect();
        for x in 0..n {
            if coset_of[x] != u32::MAX {
                continue;
            }
            let id = coset_reps.len() as u32;
            coset_reps.push(Element(x));
            for &k in &elems {
                coset_of[g.add(Element(x), k).0] = id;
            }
        }
        let index = coset_reps.len();
        debug_assert_eq!(index * members.len(), n);
        Subgroup(Arc::new(SubgroupInner { members, index, coset_reps, coset_of }))
    }

    pub fn trivial(g: &GroupSpec) -> Self {
        Self::from_closed(GSet::from_indices(g, [0]).expect("0 in range"))
    }

    pub fn whole(g: &GroupSpec) -> Self {
        Self::from_closed(GSet::full(g))
    }

    /// `⟨x⟩`.
    pub fn cyclic(g: &GroupSpec, x: Element) -> Self {
        let mut idx = vec![0usize];
        let mut cur = x;
        while cur.0 != 0 {
            idx.push(cur.0);
            cur = g.add(cur, x);
        }
        Self::from_closed(GSet::from_indices(g, idx).expect("in range"))
    }

    /// Smallest subgroup containing every element of `gens`.
    pub fn generated_by(g: &GroupSpec, gens: impl IntoIterator<Item = Element>) -> Self {
        let mut acc = GSet::from_indices(g, [0]).expect("0 in range");
        for x in gens {
            if acc.contains(x) {
                continue;
            }
            let c = Subgroup::cyclic(g, x);
            acc = sumset(&acc, c.members()).expect("same group");
        }
        Self::from_closed(acc)
    }

    pub fn group(&self) -> &GroupSpec {
        self.0.members.group()
    }

    pub fn members(&self) -> &GSet {
        &self.0.members
    }

    pub fn order(&self) -> usize {
        self.0.members.len()
    }

    pub fn index(&self) -> usize {
        self.0.index
    }

    pub fn coset_reps(&self) -> &[Element] {
        &self.0.coset_reps
    }

    /// Number of the coset containing `x`.
    pub fn coset_index(&self, x: Element) -> usize {
        self.0.coset_of[x.0] as usize
    }

    pub fn coset_rep_of(&self, x: Element) -> Element {
        self.0.coset_reps[self.coset_index(x)]
    }

    /// `x + K`.
    pub fn coset_of(&self, x: Element) -> GSet {
        self.coset(self.coset_index(x))
    }

    pub fn coset(&self, i: usize) -> GSet {
        let g = self.group();
        let id = i as u32;
        GSet::from_predicate(g, |x| self.0.coset_of[x.0] == id)
    }

    pub fn same_coset(&self, x: Element, y: Element) -> bool {
        self.0.coset_of[x.0] == self.0.coset_of[y.0]
    }

    pub fn contains(&self, x: Element) -> bool {
        self.0.members.contains(x)
    }

    pub fn is_whole(&self) -> bool {
        self.0.index == 1
    }

    pub fn is_trivial(&self) -> bool {
        self.order() == 1
    }

    pub fn is_subgroup_of(&self, other: &Subgroup) -> bool {
        self.members().is_subset(other.members()).unwrap_or(false)
    }

    /// `H + K`.
    pub fn join(&self, other: &Subgroup) -> Result<Subgroup> {
        Ok(Self::from_closed(sumset(self.members(), other.members())?))
    }
}

impl PartialEq for Subgroup {
    fn eq(&self, other: &Self) -> bool {
        self.0.members == other.0.members
    }
}

impl Eq for Subgroup {}

/// Ordered by index, then lexicographically by members.
impl Ord for Subgroup {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.index().cmp(&other.index()).then_with(|| self.members().cmp(other.members()))
    }
}

impl PartialOrd for Subgroup {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subgroup{:?}[index {}]", self.members(), self.index())
    }
}

#[derive(Serialize)]
struct SubgroupJson {
    members: Vec<usize>,
}

impl Serialize for Subgroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SubgroupJson { members: self.members().indices() }.serialize(s)
    }
}

/// Every subgroup of order at most `max_order`, found as joins of cyclic
/// subgroups. Joins only grow, so the order bound prunes soundly.
fn subgroups_of_order_at_most(g: &GroupSpec, max_order: usize) -> Vec<GSet> {
    let mut seen_cyclic = HashSet::new();
    let mut cyclics = Vec::new();
    for x in g.elements() {
        if g.element_order(x) > max_order {
            continue;
        }
        let c = Subgroup::cyclic(g, x).members().clone();
        if seen_cyclic.insert(c.words().to_vec()) {
            cyclics.push(c);
        }
    }
    let trivial = GSet::from_indices(g, [0]).expect("0 in range");
    let mut found = HashSet::new();
    found.insert(trivial.words().to_vec());
    let mut out = vec![trivial.clone()];
    let mut queue = VecDeque::from([trivial]);
    while let Some(h) = queue.pop_front() {
        for c in &cyclics {
            if c.is_subset(&h).expect("same group") {
                continue;
            }
            if h.len() * 2 > max_order {
                break;
            }
            let j = sumset(&h, c).expect("same group");
            if j.len() <= max_order && found.insert(j.words().to_vec()) {
                out.push(j.clone());
                queue.push_back(j);
            }
        }
    }
    out
}

/// `{x : ⟨x, y⟩ = 0 for all y ∈ h}`; its index equals `|h|`.
fn annihilator(g: &GroupSpec, h: &GSet) -> GSet {
    let ys: Vec<Element> = h.iter().filter(|y| y.0 != 0).collect();
    GSet::from_predicate(g, |x| ys.iter().all(|&y| g.pairing(x, y) == 0))
}

/// All subgroups of index at most `max_index`, sorted by
/// `(index, lexicographic member list)`. `G` itself is always first.
///
/// Subgroups of index `m` correspond to subgroups of order `m` of the
/// character group (isomorphic to `G`) via annihilators, so the search runs
/// bottom-up among small subgroups, where the order bound prunes.
pub fn enumerate_subgroups(g: &GroupSpec, max_index: usize) -> Result<Vec<Subgroup>> {
    if max_index == 0 {
        return Err(SumsetError::InvalidArgument("max_index must be >= 1".into()));
    }
    let n = g.size();
    let sets: Vec<GSet> = if max_index >= n {
        subgroups_of_order_at_most(g, n)
    } else {
        subgroups_of_order_at_most(g, max_index).iter().map(|h| annihilator(g, h)).collect()
    };
    let mut out: Vec<Subgroup> =
        sets.into_iter().map(Subgroup::from_closed).filter(|k| k.index() <= max_index).collect();
    out.sort();
    Ok(out)
}
