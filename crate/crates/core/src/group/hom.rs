use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use serde::Serialize;

use super::{Element, GroupSpec, Subgroup};
use crate::error::{Result, SumsetError};
use crate::gset::GSet;

struct HomInner {
    domain: Subgroup,
    modulus: usize,
    scale: usize,
    multipliers: Vec<usize>,
    surjective: bool,
    kernel: Subgroup,
    table: Vec<u32>,
}

/// A homomorphism `τ: K → Z/NZ` for a subgroup `K ≤ G`.
///
/// `τ(x) = ((Σ aᵢxᵢ) mod N·s) / s` where `xᵢ` are the coordinates of `x` in `G`.
/// When `K = G` the scale `s` is 1 and this is the plain multiplier form
/// `Σ aᵢxᵢ mod N` with `aᵢnᵢ ≡ 0 (mod N)`. Restrictions of characters of `G`
/// to a proper subgroup may need `s > 1`.
#[derive(Clone)]
pub struct CyclicHom(Arc<HomInner>);

impl CyclicHom {
    /// A homomorphism defined on all of `G`.
    pub fn new(g: &GroupSpec, modulus: usize, multipliers: Vec<usize>) -> Result<Self> {
        if modulus == 0 {
            return Err(SumsetError::InvalidArgument("target modulus must be >= 1".into()));
        }
        if multipliers.len() != g.rank() {
            return Err(SumsetError::InvalidArgument(format!(
                "expected {} multipliers, got {}",
                g.rank(),
                multipliers.len()
            )));
        }
        for (&a, &n) in multipliers.iter().zip(g.orders()) {
            if a >= modulus || (a * n) % modulus != 0 {
                return Err(SumsetError::InvalidArgument(format!(
                    "multiplier {a} is not well defined on Z/{n} -> Z/{modulus}"
                )));
            }
        }
        Ok(Self::build(Subgroup::whole(g), modulus, 1, multipliers))
    }

    fn build(domain: Subgroup, modulus: usize, scale: usize, multipliers: Vec<usize>) -> Self {
        let mut partial = HomInner {
            kernel: domain.clone(),
            domain,
            modulus,
            scale,
            multipliers,
            surjective: false,
            table: Vec::new(),
        };
        let g = partial.domain.group().clone();
        let mut image = vec![false; modulus];
        let mut ker = Vec::new();
        let mut table = vec![u32::MAX; g.size()];
        for x in partial.domain.members().iter() {
            let v = eval(&g, &partial.multipliers, modulus * scale, scale, x);
            table[x.0] = v as u32;
            image[v] = true;
            if v == 0 {
                ker.push(x);
            }
        }
        partial.surjective = image.iter().all(|&b| b);
        partial.table = table;
        partial.kernel = Subgroup::from_closed(GSet::from_elements(&g, ker).expect("in range"));
        CyclicHom(Arc::new(partial))
    }

    pub fn group(&self) -> &GroupSpec {
        self.0.domain.group()
    }

    pub fn domain(&self) -> &Subgroup {
        &self.0.domain
    }

    pub fn modulus(&self) -> usize {
        self.0.modulus
    }

    pub fn scale(&self) -> usize {
        self.0.scale
    }

    pub fn multipliers(&self) -> &[usize] {
        &self.0.multipliers
    }

    pub fn is_surjective(&self) -> bool {
        self.0.surjective
    }

    pub fn kernel(&self) -> &Subgroup {
        &self.0.kernel
    }

    /// `|τ(K)|`.
    pub fn image_size(&self) -> usize {
        self.0.domain.order() / self.0.kernel.order()
    }

    /// `τ(x)`; `x` must lie in the domain.
    pub fn apply(&self, x: Element) -> usize {
        debug_assert!(self.0.domain.contains(x));
        self.0.table[x.0] as usize
    }

    /// `τ(x)`, or `None` when `x` lies outside the domain.
    pub fn try_apply(&self, x: Element) -> Option<usize> {
        self.0.table.get(x.0).filter(|&&v| v != u32::MAX).map(|&v| v as usize)
    }

    /// `τ⁻¹(P)` for `P = {v : keep(v)}`, as a subset of the domain.
    pub fn preimage(&self, keep: impl Fn(usize) -> bool) -> GSet {
        let g = self.group();
        GSet::from_elements(g, self.0.domain.members().iter().filter(|&x| keep(self.apply(x)))).expect("in range")
    }
}

fn eval(g: &GroupSpec, mult: &[usize], lift: usize, scale: usize, x: Element) -> usize {
    let mut acc = 0usize;
    for ((&a, &n), &s) in mult.iter().zip(g.orders()).zip(g.strides()) {
        acc = (acc + a * (x.0 / s % n)) % lift;
    }
    debug_assert_eq!(acc % scale, 0);
    acc / scale
}

impl PartialEq for CyclicHom {
    fn eq(&self, other: &Self) -> bool {
        self.0.domain == other.0.domain
            && self.0.modulus == other.0.modulus
            && self.0.domain.members().iter().all(|x| self.apply(x) == other.apply(x))
    }
}

impl Eq for CyclicHom {}

impl fmt::Debug for CyclicHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CyclicHom(N={}, multipliers={:?}", self.0.modulus, self.0.multipliers)?;
        if self.0.scale != 1 {
            write!(f, ", scale={}, domain={:?}", self.0.scale, self.0.domain.members())?;
        }
        write!(f, ")")
    }
}

#[derive(Serialize)]
struct HomJson {
    #[serde(rename = "N")]
    n: usize,
    multipliers: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    domain: Option<Vec<usize>>,
}

impl Serialize for CyclicHom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let whole = self.0.domain.is_whole();
        HomJson {
            n: self.0.modulus,
            multipliers: self.0.multipliers.clone(),
            scale: (!whole).then_some(self.0.scale),
            domain: (!whole).then(|| self.0.domain.members().indices()),
        }
        .serialize(s)
    }
}

impl CyclicHom {
    /// Rebuilds a homomorphism from its serialized fields.
    pub fn from_parts(
        g: &GroupSpec,
        modulus: usize,
        multipliers: Vec<usize>,
        scale: Option<usize>,
        domain: Option<Vec<usize>>,
    ) -> Result<Self> {
        match (scale, domain) {
            (None, None) => Self::new(g, modulus, multipliers),
            (Some(s), Some(d)) => {
                let k = Subgroup::new(GSet::from_indices(g, d)?)?;
                if s == 0 || multipliers.len() != g.rank() {
                    return Err(SumsetError::InvalidArgument("bad restricted homomorphism".into()));
                }
                let lift = modulus * s;
                for x in k.members().iter() {
                    let mut acc = 0;
                    for ((&a, &n), &st) in multipliers.iter().zip(g.orders()).zip(g.strides()) {
                        acc = (acc + a * (x.0 / st % n)) % lift;
                    }
                    if acc % s != 0 {
                        return Err(SumsetError::InvalidArgument("restricted map is not integral".into()));
                    }
                }
                Ok(Self::build(k, modulus, s, multipliers))
            }
            _ => Err(SumsetError::InvalidArgument("scale and domain must be given together".into())),
        }
    }
}

/// Every surjective `τ: G → Z/NZ`, in lexicographic order of multipliers.
///
/// Maps that differ by an automorphism of `Z/NZ` are all kept: composing
/// with a unit changes which preimages are difference-1 progressions.
pub fn surjective_homs_to_cyclic(g: &GroupSpec, n: i64) -> Result<Vec<CyclicHom>> {
    if n <= 0 {
        return Err(SumsetError::InvalidArgument(format!("target modulus must be >= 1, got {n}")));
    }
    let n = n as usize;
    let allowed: Vec<Vec<usize>> = g.orders().iter().map(|&ni| (0..n).step_by(n / n.gcd(&ni)).collect()).collect();
    let mut out = Vec::new();
    let mut pick = vec![0usize; allowed.len()];
    loop {
        let mult: Vec<usize> = pick.iter().zip(&allowed).map(|(&p, a)| a[p]).collect();
        let gcd = mult.iter().fold(n, |acc, &a| acc.gcd(&a));
        if gcd == 1 {
            out.push(CyclicHom::build(Subgroup::whole(g), n, 1, mult));
        }
        // odometer, last factor fastest so output is lexicographic
        let mut i = allowed.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            pick[i] += 1;
            if pick[i] < allowed[i].len() {
                break;
            }
            pick[i] = 0;
        }
    }
}

/// Every surjective homomorphism from the subgroup `k` onto `Z/NZ`.
///
/// For `k = G` this is [`surjective_homs_to_cyclic`]. Otherwise each such map
/// is the restriction of a character of `G` (characters into `Q/Z` extend
/// from subgroups), so the characters `x ↦ ⟨x, y⟩` are scanned in order of
/// `y` and deduplicated by their values on `k`.
pub fn homs_onto_cyclic(k: &Subgroup, n: usize) -> Vec<CyclicHom> {
    let g = k.group();
    if n == 0 {
        return Vec::new();
    }
    if k.is_whole() {
        return surjective_homs_to_cyclic(g, n as i64).expect("n >= 1");
    }
    let l = g.exponent();
    if !l.is_multiple_of(n) || !k.order().is_multiple_of(n) {
        return Vec::new();
    }
    let s = l / n;
    let members: Vec<Element> = k.members().iter().collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for y in g.elements() {
        let mut values = Vec::with_capacity(members.len());
        let mut ok = true;
        for &x in &members {
            let v = g.pairing(x, y);
            if !v.is_multiple_of(s) {
                ok = false;
                break;
            }
            values.push((v / s) as u32);
        }
        if !ok {
            continue;
        }
        let img = values.iter().fold(n, |acc, &v| acc.gcd(&(v as usize)));
        if img != 1 || !seen.insert(values) {
            continue;
        }
        let mult: Vec<usize> = g.orders().iter().zip(g.digits(y)).map(|(&ni, yi)| (yi * (l / ni)) % l).collect();
        out.push(CyclicHom::build(k.clone(), n, s, mult));
    }
    out
}

/// `{x : τ(x) = 0}`.
pub fn kernel(h: &CyclicHom) -> Subgroup {
    h.kernel().clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{abelian_groups_up_to, enumerate_subgroups};

    #[test]
    fn z6_to_z3() {
        let g = GroupSpec::cyclic(6).unwrap();
        let homs = surjective_homs_to_cyclic(&g, 3).unwrap();
        assert_eq!(homs.len(), 2);
        assert_eq!(homs[0].multipliers(), &[1]);
        assert_eq!(homs[1].multipliers(), &[2]);
        for h in &homs {
            assert_eq!(h.kernel().members().indices(), vec![0, 3]);
            assert_eq!(h.kernel().index(), 3);
        }
    }

    #[test]
    fn obstructions_and_units() {
        let z2 = GroupSpec::cyclic(2).unwrap();
        assert!(surjective_homs_to_cyclic(&z2, 3).unwrap().is_empty());
        let z4 = GroupSpec::cyclic(4).unwrap();
        let h: Vec<Vec<usize>> =
            surjective_homs_to_cyclic(&z4, 4).unwrap().iter().map(|h| h.multipliers().to_vec()).collect();
        assert_eq!(h, vec![vec![1], vec![3]]);
        assert!(surjective_homs_to_cyclic(&z4, 0).is_err());
        assert!(surjective_homs_to_cyclic(&z4, -2).is_err());
    }

    #[test]
    fn kernel_examples() {
        let z6 = GroupSpec::cyclic(6).unwrap();
        let t = CyclicHom::new(&z6, 1, vec![0]).unwrap();
        assert!(t.is_surjective());
        assert!(kernel(&t).is_whole());
        let v = GroupSpec::new(&[2, 2]).unwrap();
        let d = CyclicHom::new(&v, 2, vec![1, 1]).unwrap();
        let k = kernel(&d);
        assert_eq!(k.members().indices(), vec![0, 3]);
        assert_eq!(k.index(), 2);
        assert!(CyclicHom::new(&z6, 4, vec![1]).is_err());
    }

    #[test]
    fn homomorphism_law_exhaustive() {
        for g in abelian_groups_up_to(16) {
            for n in 1..=g.size() {
                for h in surjective_homs_to_cyclic(&g, n as i64).unwrap() {
                    assert_eq!(h.kernel().order() * h.image_size(), g.size());
                    for x in g.elements() {
                        for y in g.elements() {
                            assert_eq!(h.apply(g.add(x, y)), (h.apply(x) + h.apply(y)) % n);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn character_route_agrees_on_whole_group() {
        // The restriction route, forced onto G, must find the same maps.
        for g in abelian_groups_up_to(12) {
            let whole = Subgroup::whole(&g);
            for n in 1..=g.size() {
                let direct = surjective_homs_to_cyclic(&g, n as i64).unwrap();
                let l = g.exponent();
                let mut via: Vec<Vec<usize>> = Vec::new();
                if l % n == 0 {
                    let mut seen = HashSet::new();
                    for y in g.elements() {
                        let vals: Vec<usize> = g.elements().map(|x| g.pairing(x, y)).collect();
                        if vals.iter().any(|v| v % (l / n) != 0) {
                            continue;
                        }
                        let vals: Vec<usize> = vals.iter().map(|v| v / (l / n)).collect();
                        if vals.iter().fold(n, |a, &v| a.gcd(&v)) == 1 && seen.insert(vals.clone()) {
                            via.push(vals);
                        }
                    }
                }
                let mut d: Vec<Vec<usize>> =
                    direct.iter().map(|h| whole.members().iter().map(|x| h.apply(x)).collect()).collect();
                d.sort();
                via.sort();
                assert_eq!(d, via, "{g:?} N={n}");
            }
        }
    }

    #[test]
    fn restricted_homs_are_homs() {
        for g in abelian_groups_up_to(16) {
            for k in enumerate_subgroups(&g, g.size()).unwrap() {
                for n in 2..=k.order() {
                    for h in homs_onto_cyclic(&k, n) {
                        assert!(h.is_surjective());
                        for x in k.members().iter() {
                            for y in k.members().iter() {
                                assert_eq!(h.apply(g.add(x, y)), (h.apply(x) + h.apply(y)) % n);
                            }
                        }
                    }
                }
            }
        }
        // Z/2 inside Z/4 maps onto Z/2 although no map Z/4 -> Z/2 is nonzero on 2
        let z4 = GroupSpec::cyclic(4).unwrap();
        let k = Subgroup::new(GSet::from_indices(&z4, [0, 2]).unwrap()).unwrap();
        let homs = homs_onto_cyclic(&k, 2);
        assert_eq!(homs.len(), 1);
        assert_eq!(homs[0].apply(Element(2)), 1);
    }

    #[test]
    fn serialization() {
        let z6 = GroupSpec::cyclic(6).unwrap();
        let h = CyclicHom::new(&z6, 3, vec![2]).unwrap();
        assert_eq!(serde_json::to_string(&h).unwrap(), r#"{"N":3,"multipliers":[2]}"#);
    }
}
