//! Sumsets, stabilizers, mover sets, periodicity and quasi-periodic decompositions.

use crate::error::{Result, SumsetError};
use crate::group::{Element, Subgroup};
use crate::gset::GSet;
use crate::rational::{ratio, Rational};

/// `A + B`; empty if either side is.
pub fn sumset(a: &GSet, b: &GSet) -> Result<GSet> {
    a.check_same(b)?;
    let g = a.group();
    if a.is_empty() || b.is_empty() {
        return Ok(GSet::empty(g));
    }
    if let Some(t) = g.mask_tables() {
        return Ok(GSet::from_mask(g, t.sumset(a.words()[0], b.words()[0])));
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut acc = vec![0u64; g.words()];
    let mut count = 0;
    for x in small.iter() {
        let shifted = g.translate_words(large.words(), x);
        for (w, s) in acc.iter_mut().zip(&shifted) {
            *w |= s;
        }
        count += 1;
        // Full coverage can only be detected cheaply every so often.
        if count % 16 == 0 && crate::bits::popcount(&acc) == g.size() {
            break;
        }
    }
    Ok(GSet::from_words_unchecked(g, acc))
}

/// `A - B`.
pub fn difference_set(a: &GSet, b: &GSet) -> Result<GSet> {
    sumset(a, &b.negate())
}

/// `H(C) = {g : C + g = C}`; the whole group for the empty set.
pub fn stabilizer(c: &GSet) -> Subgroup {
    let g = c.group();
    if c.is_empty() {
        return Subgroup::whole(g);
    }
    if let Some(t) = g.mask_tables() {
        return Subgroup::from_closed(GSet::from_mask(g, t.stabilizer(c.words()[0])));
    }
    let c0 = c.min_element().expect("nonempty");
    let mut members = Vec::new();
    for x in c.iter() {
        let d = g.sub(x, c0);
        if c.translate(d) == *c {
            members.push(d);
        }
    }
    Subgroup::from_closed(GSet::from_elements(g, members).expect("in range"))
}

/// `{g : g + B ⊆ A + B}`; the whole group when `B` is empty.
pub fn mover_set(a: &GSet, b: &GSet) -> Result<GSet> {
    a.check_same(b)?;
    let g = a.group();
    if b.is_empty() {
        return Ok(GSet::full(g));
    }
    let ab = sumset(a, b)?;
    if let Some(t) = g.mask_tables() {
        return Ok(GSet::from_mask(g, t.movers(ab.words()[0], b.words()[0])));
    }
    let b0 = b.min_element().expect("nonempty");
    let mut out = Vec::new();
    for s in ab.iter() {
        let cand = g.sub(s, b0);
        if b.translate(cand).is_subset(&ab)? {
            out.push(cand);
        }
    }
    out.sort();
    GSet::from_elements(g, out)
}

/// `A + K`, the union of the cosets of `K` that meet `A`.
pub fn periodization(a: &GSet, k: &Subgroup) -> Result<GSet> {
    a.check_same(k.members())?;
    let g = a.group();
    let mut hit = vec![false; k.index()];
    for x in a.iter() {
        hit[k.coset_index(x)] = true;
    }
    Ok(GSet::from_predicate(g, |x| hit[k.coset_index(x)]))
}

/// `(|A + K| - |A|) / |K|`, the least `ε` for which `A` is `ε`-periodic
/// with respect to `K`. Zero for the empty set.
pub fn epsilon_periodicity(a: &GSet, k: &Subgroup) -> Result<Rational> {
    if a.is_empty() {
        a.check_same(k.members())?;
        return Ok(ratio(0, 1));
    }
    let ak = periodization(a, k)?;
    Ok(ratio((ak.len() - a.len()) as i64, k.order() as i64))
}

/// `A = A₁ ∪ A₀` with `A₀` inside one coset of `K` and `(A₁ + K) ∩ A₀ = ∅`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QPDecomposition {
    pub subgroup: Subgroup,
    pub periodic_part: GSet,
    pub residual_part: GSet,
    pub residual_coset: Element,
    pub epsilon_defect: Rational,
}

impl QPDecomposition {
    /// True when the periodic part is a union of `K`-cosets.
    pub fn is_exact(&self) -> bool {
        *self.epsilon_defect.numer() == 0
    }

    /// Re-checks every structural condition against `a`.
    pub fn verify(&self, a: &GSet) -> Result<()> {
        let k = &self.subgroup;
        let bad = |m: &str| Err(SumsetError::Precondition(format!("decomposition: {m}")));
        if self.residual_part.is_empty() {
            return bad("residual part is empty");
        }
        if self.periodic_part.union(&self.residual_part)? != *a {
            return bad("parts do not reassemble the set");
        }
        if !self.periodic_part.is_disjoint(&self.residual_part)? {
            return bad("parts overlap");
        }
        if !self.residual_part.is_subset(&k.coset_of(self.residual_coset))? {
            return bad("residual part leaves its coset");
        }
        if !periodization(&self.periodic_part, k)?.is_disjoint(&self.residual_part)? {
            return bad("periodic part's cosets meet the residual");
        }
        if epsilon_periodicity(&self.periodic_part, k)? != self.epsilon_defect {
            return bad("defect mismatch");
        }
        Ok(())
    }
}

/// One candidate per coset `c + K` meeting `A` (ascending coset
/// representative), kept when `(A₁ + K) ∩ A₀ = ∅` and the defect of `A₁` is at
/// most `epsilon`. With `epsilon = 0` these are the exact decompositions.
pub fn quasiperiodic_decompositions(a: &GSet, k: &Subgroup, epsilon: Rational) -> Result<Vec<QPDecomposition>> {
    a.check_same(k.members())?;
    if a.is_empty() {
        return Err(SumsetError::InvalidArgument("cannot decompose the empty set".into()));
    }
    let mut meets = vec![false; k.index()];
    for x in a.iter() {
        meets[k.coset_index(x)] = true;
    }
    let mut out = Vec::new();
    for (ci, _) in meets.iter().enumerate().filter(|(_, &m)| m) {
        let coset = k.coset(ci);
        let a0 = a.intersection(&coset)?;
        let a1 = a.difference(&coset)?;
        // A₁ avoids the coset of A₀, so (A₁ + K) ∩ A₀ = ∅ holds by construction.
        let defect = epsilon_periodicity(&a1, k)?;
        if defect > epsilon {
            continue;
        }
        let d = QPDecomposition {
            subgroup: k.clone(),
            periodic_part: a1,
            residual_part: a0,
            residual_coset: k.coset_reps()[ci],
            epsilon_defect: defect,
        };
        if cfg!(debug_assertions) {
            d.verify(a)?;
        }
        out.push(d);
    }
    Ok(out)
}

/// Whether `a + b + K` is reached only from `(a + K) + (b + K)`.
pub fn is_unique_expression(a_set: &GSet, b_set: &GSet, k: &Subgroup, a: Element, b: Element) -> Result<bool> {
    a_set.check_same(b_set)?;
    a_set.check_same(k.members())?;
    if !a_set.contains(a) {
        return Err(SumsetError::Precondition(format!("{a} is not in A")));
    }
    if !b_set.contains(b) {
        return Err(SumsetError::Precondition(format!("{b} is not in B")));
    }
    let g = a_set.group();
    let target = k.coset_index(g.add(a, b));
    let ca = k.coset_index(a);
    let cb = k.coset_index(b);
    let mut a_cosets = vec![false; k.index()];
    for x in a_set.iter() {
        a_cosets[k.coset_index(x)] = true;
    }
    let mut b_cosets = vec![false; k.index()];
    for y in b_set.iter() {
        b_cosets[k.coset_index(y)] = true;
    }
    for (i, _) in a_cosets.iter().enumerate().filter(|(_, &h)| h) {
        let ri = k.coset_reps()[i];
        for (j, _) in b_cosets.iter().enumerate().filter(|(_, &h)| h) {
            let rj = k.coset_reps()[j];
            if k.coset_index(g.add(ri, rj)) == target && (i != ca || j != cb) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{abelian_groups_up_to, enumerate_subgroups, surjective_homs_to_cyclic, GroupSpec};
    use proptest::prelude::*;

    fn z(n: usize) -> GroupSpec {
        GroupSpec::cyclic(n).unwrap()
    }

    fn set(g: &GroupSpec, xs: &[usize]) -> GSet {
        GSet::from_indices(g, xs.iter().copied()).unwrap()
    }

    fn sub(g: &GroupSpec, xs: &[usize]) -> Subgroup {
        Subgroup::new(set(g, xs)).unwrap()
    }

    fn brute_sumset(a: &GSet, b: &GSet) -> Vec<usize> {
        let g = a.group();
        let mut v: Vec<usize> = a.iter().flat_map(|x| b.iter().map(move |y| g.add(x, y).0)).collect();
        v.sort();
        v.dedup();
        v
    }

    #[test]
    fn sumset_examples() {
        let g = z(5);
        assert_eq!(sumset(&set(&g, &[0, 1]), &set(&g, &[0, 1])).unwrap().indices(), vec![0, 1, 2]);
        let g6 = z(6);
        assert!(sumset(&GSet::full(&g6), &set(&g6, &[0])).unwrap().is_full());
        assert_eq!(sumset(&set(&g6, &[0, 3]), &set(&g6, &[0, 3])).unwrap().indices(), vec![0, 3]);
        assert!(sumset(&GSet::empty(&g6), &GSet::full(&g6)).unwrap().is_empty());
    }

    #[test]
    fn stabilizer_examples() {
        let g6 = z(6);
        assert_eq!(stabilizer(&set(&g6, &[0, 2, 4])).members().indices(), vec![0, 2, 4]);
        let g5 = z(5);
        assert!(stabilizer(&set(&g5, &[0])).is_trivial());
        assert!(stabilizer(&set(&g5, &[0, 1, 2])).is_trivial());
        assert!(stabilizer(&GSet::empty(&g5)).is_whole());
    }

    #[test]
    fn mover_examples() {
        let g5 = z(5);
        let a = set(&g5, &[0, 1]);
        assert_eq!(mover_set(&a, &a).unwrap(), a);
        assert!(mover_set(&GSet::full(&g5), &set(&g5, &[2])).unwrap().is_full());
        let g6 = z(6);
        assert_eq!(mover_set(&set(&g6, &[0, 3]), &set(&g6, &[0])).unwrap().indices(), vec![0, 3]);
        assert!(mover_set(&a, &GSet::empty(&g5)).unwrap().is_full());
    }

    #[test]
    fn periodization_examples() {
        let g = z(6);
        let k3 = sub(&g, &[0, 3]);
        let k2 = sub(&g, &[0, 2, 4]);
        assert_eq!(periodization(&set(&g, &[1]), &k3).unwrap().indices(), vec![1, 4]);
        assert_eq!(periodization(&set(&g, &[0, 2, 4]), &k2).unwrap().indices(), vec![0, 2, 4]);
        assert!(periodization(&set(&g, &[0, 1]), &k2).unwrap().is_full());
    }

    #[test]
    fn epsilon_examples() {
        let g = z(6);
        assert_eq!(epsilon_periodicity(&set(&g, &[0, 2, 4]), &sub(&g, &[0, 2, 4])).unwrap(), ratio(0, 1));
        assert_eq!(epsilon_periodicity(&set(&g, &[0]), &Subgroup::whole(&g)).unwrap(), ratio(5, 6));
        assert_eq!(epsilon_periodicity(&set(&g, &[0, 3, 1]), &sub(&g, &[0, 3])).unwrap(), ratio(1, 2));
        assert_eq!(epsilon_periodicity(&GSet::empty(&g), &sub(&g, &[0, 3])).unwrap(), ratio(0, 1));
    }

    #[test]
    fn qp_examples() {
        let g = z(6);
        let k = sub(&g, &[0, 3]);
        let d = quasiperiodic_decompositions(&set(&g, &[0, 3, 1]), &k, ratio(0, 1)).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].periodic_part.indices(), vec![0, 3]);
        assert_eq!(d[0].residual_part.indices(), vec![1]);
        assert_eq!(d[0].residual_coset, Element(1));

        let d = quasiperiodic_decompositions(&set(&g, &[1]), &k, ratio(0, 1)).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d[0].periodic_part.is_empty());

        assert!(quasiperiodic_decompositions(&set(&g, &[0, 1]), &k, ratio(0, 1)).unwrap().is_empty());
        assert!(quasiperiodic_decompositions(&GSet::empty(&g), &k, ratio(0, 1)).is_err());
    }

    #[test]
    fn unique_expression_examples() {
        let g4 = z(4);
        let k = sub(&g4, &[0, 2]);
        let a = set(&g4, &[0, 1, 2]);
        let b = set(&g4, &[1]);
        assert!(is_unique_expression(&a, &b, &k, Element(1), Element(1)).unwrap());
        assert!(is_unique_expression(&a, &b, &k, Element(3), Element(1)).is_err());

        let g6 = z(6);
        let full = GSet::full(&g6);
        for kk in enumerate_subgroups(&g6, 6).unwrap().into_iter().filter(|k| !k.is_whole()) {
            assert!(!is_unique_expression(&full, &full, &kk, Element(0), Element(0)).unwrap());
        }
        let k3 = sub(&g6, &[0, 3]);
        assert!(is_unique_expression(&set(&g6, &[0, 3]), &set(&g6, &[1]), &k3, Element(0), Element(1)).unwrap());
    }

    #[test]
    fn kernel_is_stabilizer_of_zero_fibre() {
        for g in abelian_groups_up_to(24) {
            for n in 1..=g.size() {
                for h in surjective_homs_to_cyclic(&g, n as i64).unwrap() {
                    let fibre = h.preimage(|v| v == 0);
                    assert_eq!(stabilizer(&fibre), *h.kernel());
                }
            }
        }
    }

    #[test]
    fn stabilizer_is_maximal_exhaustive() {
        for g in abelian_groups_up_to(12) {
            let subs = enumerate_subgroups(&g, g.size()).unwrap();
            for m in 0..(1u64 << g.size()) {
                let a = GSet::from_mask(&g, m);
                let h = stabilizer(&a);
                assert_eq!(sumset(&a, h.members()).unwrap(), a);
                for k in &subs {
                    let fixes = k.members().iter().all(|x| a.translate(x) == a);
                    assert_eq!(fixes, k.is_subgroup_of(&h), "{g:?} {a:?} {k:?}");
                }
            }
        }
    }

    #[test]
    fn large_sets_agree_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for orders in [vec![97], vec![3, 40], vec![2, 2, 2, 16], vec![9, 9]] {
            let g = GroupSpec::new(&orders).unwrap();
            for _ in 0..20 {
                let a = GSet::from_predicate(&g, |_| rng.gen_bool(0.1));
                let b = GSet::from_predicate(&g, |_| rng.gen_bool(0.2));
                assert_eq!(sumset(&a, &b).unwrap().indices(), brute_sumset(&a, &b));
                let k = stabilizer(&a);
                for x in g.elements() {
                    assert_eq!(k.contains(x), a.translate(x) == a);
                }
                let mv = mover_set(&a, &b).unwrap();
                let ab = sumset(&a, &b).unwrap();
                for x in g.elements() {
                    assert_eq!(mv.contains(x), b.translate(x).is_subset(&ab).unwrap());
                }
            }
        }
    }

    #[test]
    fn large_sets_full_sum() {
        let g = z(300);
        let a = GSet::from_predicate(&g, |x| x.0 < 200);
        let b = GSet::from_predicate(&g, |x| x.0 < 150);
        assert!(sumset(&a, &b).unwrap().is_full());
    }

    #[test]
    fn large_ab_covers_group() {
        // |A| + |B| > |G| forces A + B = G.
        for g in abelian_groups_up_to(12) {
            let n = g.size();
            for ma in 1..(1u64 << n) {
                let a = GSet::from_mask(&g, ma);
                for mb in 1..(1u64 << n) {
                    if (ma.count_ones() + mb.count_ones()) as usize <= n {
                        continue;
                    }
                    let b = GSet::from_mask(&g, mb);
                    assert!(sumset(&a, &b).unwrap().is_full());
                }
            }
        }
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<usize>, u64, u64, usize)> {
        prop_oneof![
            Just(vec![64]),
            Just(vec![2, 32]),
            Just(vec![4, 4, 4]),
            Just(vec![7]),
            Just(vec![3, 5]),
            Just(vec![2, 2, 3]),
        ]
        .prop_flat_map(|o| {
            let n: usize = o.iter().product();
            (Just(o), any::<u64>(), any::<u64>(), 0..n)
        })
    }

    proptest! {
        #[test]
        fn sumset_commutes_and_is_translation_equivariant((orders, ma, mb, t) in arb_pair()) {
            let g = GroupSpec::new(&orders).unwrap();
            let a = GSet::from_mask(&g, ma);
            let b = GSet::from_mask(&g, mb);
            let ab = sumset(&a, &b).unwrap();
            prop_assert_eq!(&ab, &sumset(&b, &a).unwrap());
            prop_assert_eq!(ab.indices(), brute_sumset(&a, &b));
            prop_assert_eq!(sumset(&a.translate(Element(t)), &b).unwrap(), ab.translate(Element(t)));
        }

        #[test]
        fn movers_contain_a((orders, ma, mb, _t) in arb_pair()) {
            let g = GroupSpec::new(&orders).unwrap();
            let a = GSet::from_mask(&g, ma);
            let b = GSet::from_mask(&g, mb);
            prop_assert!(a.is_subset(&mover_set(&a, &b).unwrap()).unwrap());
        }

        #[test]
        fn periodization_idempotent_and_monotone((orders, ma, mb, t) in arb_pair()) {
            let g = GroupSpec::new(&orders).unwrap();
            let subs = enumerate_subgroups(&g, g.size()).unwrap();
            let k = &subs[t % subs.len()];
            let a = GSet::from_mask(&g, ma);
            let b = a.union(&GSet::from_mask(&g, mb)).unwrap();
            let ak = periodization(&a, k).unwrap();
            prop_assert_eq!(&periodization(&ak, k).unwrap(), &ak);
            prop_assert!(ak.is_subset(&periodization(&b, k).unwrap()).unwrap());
            prop_assert_eq!(&ak, &sumset(&a, k.members()).unwrap());
        }

        #[test]
        fn exact_decompositions_reassemble((orders, ma, _mb, t) in arb_pair()) {
            let g = GroupSpec::new(&orders).unwrap();
            let a = GSet::from_mask(&g, ma | 1);
            let subs = enumerate_subgroups(&g, g.size()).unwrap();
            let k = &subs[t % subs.len()];
            for d in quasiperiodic_decompositions(&a, k, ratio(0, 1)).unwrap() {
                prop_assert!(d.is_exact());
                prop_assert_eq!(d.periodic_part.union(&d.residual_part).unwrap(), a.clone());
                prop_assert_eq!(periodization(&d.periodic_part, k).unwrap(), d.periodic_part.clone());
            }
        }
    }
}
