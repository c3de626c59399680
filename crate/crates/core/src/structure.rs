//! Kneser certificates, progression covers and classification of pairs with
//! small sumset.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SumsetError};
use crate::group::{enumerate_subgroups, homs_onto_cyclic, CyclicHom, Element, GroupSpec, Subgroup};
use crate::gset::GSet;
use crate::rational::{ratio, Rational};
use crate::sets::{
    epsilon_periodicity, periodization, quasiperiodic_decompositions, stabilizer, sumset, QPDecomposition,
};

/// `x < y + ε·z`, exactly.
pub(crate) fn lt_plus(x: usize, y: usize, eps: Rational, z: usize) -> bool {
    let (p, q) = (*eps.numer() as i128, *eps.denom() as i128);
    q * (x as i128) < q * (y as i128) + p * (z as i128)
}

/// `x ≤ y + ε·z`, exactly.
pub(crate) fn le_plus(x: usize, y: usize, eps: Rational, z: usize) -> bool {
    let (p, q) = (*eps.numer() as i128, *eps.denom() as i128);
    q * (x as i128) <= q * (y as i128) + p * (z as i128)
}

/// Both sides of `|A+B| = |A+H| + |B+H| - |H|` with `H = H(A+B)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KneserCertificate {
    #[serde(rename = "A")]
    pub a: GSet,
    #[serde(rename = "B")]
    pub b: GSet,
    pub stabilizer: Subgroup,
    pub lhs: usize,
    pub rhs: usize,
    pub valid: bool,
}

/// The certificate for a critical pair (`|A+B| < |A| + |B|`), else `None`.
pub fn kneser_certificate(a: &GSet, b: &GSet) -> Result<Option<KneserCertificate>> {
    if a.is_empty() || b.is_empty() {
        return Err(SumsetError::InvalidArgument("Kneser certificate needs nonempty sets".into()));
    }
    let ab = sumset(a, b)?;
    if ab.len() >= a.len() + b.len() {
        return Ok(None);
    }
    let h = stabilizer(&ab);
    let rhs = periodization(a, &h)?.len() + periodization(b, &h)?.len() - h.order();
    Ok(Some(KneserCertificate {
        a: a.clone(),
        b: b.clone(),
        lhs: ab.len(),
        rhs,
        valid: ab.len() == rhs,
        stabilizer: h,
    }))
}

/// The closed arc `[left, left + length]` of the circle `R/Z`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalInterval {
    #[serde(with = "crate::rational::as_json")]
    left: Rational,
    #[serde(with = "crate::rational::as_json")]
    length: Rational,
}

impl RationalInterval {
    pub fn new(left: Rational, length: Rational) -> Result<Self> {
        let zero = ratio(0, 1);
        let one = ratio(1, 1);
        if left < zero || left >= one {
            return Err(SumsetError::InvalidArgument(format!("interval start {left} not in [0,1)")));
        }
        if length <= zero || length > one {
            return Err(SumsetError::InvalidArgument(format!("interval length {length} not in (0,1]")));
        }
        Ok(RationalInterval { left, length })
    }

    pub fn left(&self) -> Rational {
        self.left
    }

    pub fn length(&self) -> Rational {
        self.length
    }

    /// Whether `x` (taken mod 1) lies on the arc.
    pub fn contains(&self, x: Rational) -> bool {
        let mut d = x - self.left;
        d -= d.floor();
        d <= self.length
    }
}

/// `|{j/N : 0 ≤ j < N} ∩ I|`, counted exactly.
pub fn lattice_interval_count(n: u64, interval: &RationalInterval) -> Result<u64> {
    if n == 0 {
        return Err(SumsetError::InvalidArgument("N must be >= 1".into()));
    }
    if interval.length == ratio(1, 1) {
        return Ok(n);
    }
    // An arc shorter than the circle meets each residue class at most once,
    // so counting integers in [N·left, N·right] is exact.
    let lo = interval.left * Rational::from_integer(n as i64);
    let hi = (interval.left + interval.length) * Rational::from_integer(n as i64);
    Ok((hi.floor().to_integer() - lo.ceil().to_integer() + 1).max(0) as u64)
}

/// `{start, start+1, …, start+length-1}` in `Z/NZ`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Progression {
    pub start: usize,
    pub length: usize,
}

impl Progression {
    pub fn contains(&self, v: usize, n: usize) -> bool {
        (v + n - self.start % n) % n < self.length
    }
}

/// `shift + τ⁻¹(P)` for the difference-1 progression `P`.
pub fn progression_preimage(h: &CyclicHom, start: usize, length: usize, shift: Element) -> Result<GSet> {
    if !h.is_surjective() {
        return Err(SumsetError::InvalidArgument("homomorphism is not surjective".into()));
    }
    let n = h.modulus();
    if length == 0 || length > n {
        return Err(SumsetError::InvalidArgument(format!("progression length {length} not in [1,{n}]")));
    }
    let g = h.group();
    if !g.contains(shift) {
        return Err(SumsetError::InvalidArgument(format!("shift {shift} outside the group")));
    }
    let p = Progression { start: start % n, length };
    Ok(h.preimage(|v| p.contains(v, n)).translate(shift))
}

/// Shortest arc of `Z/NZ` containing every marked residue, least start on ties.
fn shortest_arc(present: &[bool]) -> Progression {
    let n = present.len();
    let vals: Vec<usize> = (0..n).filter(|&v| present[v]).collect();
    let mut best = Progression { start: 0, length: n };
    for (i, &v) in vals.iter().enumerate() {
        let next = vals[(i + 1) % vals.len()];
        let gap = if vals.len() == 1 { n } else { (next + n - v) % n };
        let cand = Progression { start: next, length: n - gap + 1 };
        if (cand.length, cand.start) < (best.length, best.start) {
            best = cand;
        }
    }
    best
}

/// `A ⊆ shift_a + A'` and `B ⊆ shift_b + B'` where `A' = τ⁻¹(prog_a)` and
/// `B' = τ⁻¹(prog_b)` are parallel progressions under one `τ: K → Z/NZ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgressionCover {
    pub hom: CyclicHom,
    pub prog_a: Progression,
    pub prog_b: Progression,
    pub shift_a: Element,
    pub shift_b: Element,
    /// `τ⁻¹(prog_a)`, a subset of `K`.
    pub a_prime: GSet,
    /// `τ⁻¹(prog_b)`, a subset of `K`.
    pub b_prime: GSet,
}

impl ProgressionCover {
    pub fn modulus(&self) -> usize {
        self.hom.modulus()
    }

    pub fn subgroup(&self) -> &Subgroup {
        self.hom.domain()
    }

    /// Re-derives both progressions and checks the containments.
    pub fn verify(&self, a: &GSet, b: &GSet) -> Result<()> {
        let bad = |m: String| Err(SumsetError::Precondition(format!("cover: {m}")));
        let zero = self.hom.group().zero();
        for (name, set, prog, shift, prime) in
            [("A", a, self.prog_a, self.shift_a, &self.a_prime), ("B", b, self.prog_b, self.shift_b, &self.b_prime)]
        {
            let expect = progression_preimage(&self.hom, prog.start, prog.length, zero)?;
            if expect != *prime {
                return bad(format!("{name}' is not the preimage of its progression"));
            }
            if !set.is_subset(&prime.translate(shift))? {
                return bad(format!("{name} is not inside its translated progression"));
            }
        }
        Ok(())
    }
}

fn in_single_coset(a: &GSet, k: &Subgroup) -> bool {
    match a.min_element() {
        Some(x0) => {
            let c = k.coset_index(x0);
            a.iter().all(|x| k.coset_index(x) == c)
        }
        None => false,
    }
}

/// Surjections onto each admissible `Z/N`, keyed by `N`.
pub type HomsByModulus = Vec<(usize, Vec<CyclicHom>)>;

/// Surjective homomorphisms `K → Z/NZ` for `N` from `|K|` down to `n_min + 1`.
pub fn cover_homs(k: &Subgroup, n_min: usize) -> HomsByModulus {
    (n_min + 1..=k.order())
        .rev()
        .filter(|n| k.order().is_multiple_of(*n))
        .map(|n| (n, homs_onto_cyclic(k, n)))
        .filter(|(_, h)| !h.is_empty())
        .collect()
}

fn cover_for_hom(h: &CyclicHom, a: &GSet, b: &GSet, shift_a: Element, shift_b: Element) -> ProgressionCover {
    let g = h.group();
    let n = h.modulus();
    let arc = |set: &GSet, shift: Element| {
        let mut present = vec![false; n];
        for x in set.iter() {
            present[h.apply(g.sub(x, shift))] = true;
        }
        shortest_arc(&present)
    };
    let prog_a = arc(a, shift_a);
    let prog_b = arc(b, shift_b);
    let pre = |p: Progression| h.preimage(|v| p.contains(v, n));
    ProgressionCover { a_prime: pre(prog_a), b_prime: pre(prog_b), hom: h.clone(), prog_a, prog_b, shift_a, shift_b }
}

fn search_covers(
    a: &GSet,
    b: &GSet,
    k: &Subgroup,
    homs: &[(usize, Vec<CyclicHom>)],
    accept: impl Fn(&ProgressionCover) -> bool,
    first_only: bool,
) -> Vec<ProgressionCover> {
    let mut out = Vec::new();
    if !in_single_coset(a, k) || !in_single_coset(b, k) {
        return out;
    }
    let shift_a = k.coset_rep_of(a.min_element().expect("nonempty"));
    let shift_b = k.coset_rep_of(b.min_element().expect("nonempty"));
    for (_, hs) in homs {
        for h in hs {
            let c = cover_for_hom(h, a, b, shift_a, shift_b);
            if accept(&c) {
                out.push(c);
                if first_only {
                    return out;
                }
            }
        }
    }
    out
}

fn cover_accept<'a>(a: &'a GSet, b: &'a GSet, epsilon: Rational) -> impl Fn(&ProgressionCover) -> bool + 'a {
    let n = a.group().size();
    move |c: &ProgressionCover| {
        lt_plus(c.a_prime.len(), a.len(), epsilon, n) && lt_plus(c.b_prime.len(), b.len(), epsilon, n)
    }
}

/// First parallel progression cover with `|A'| < |A| + ε|G|` and
/// `|B'| < |B| + ε|G|`, scanning `N` downward from `|K|` to `n_min + 1`, then
/// homomorphisms in enumeration order. Each progression is the shortest arc
/// containing the image, so the start is the least one among shortest arcs.
pub fn cover_by_parallel_progressions(
    a: &GSet,
    b: &GSet,
    k: &Subgroup,
    epsilon: Rational,
    n_min: usize,
) -> Result<Option<ProgressionCover>> {
    a.check_same(b)?;
    a.check_same(k.members())?;
    if a.is_empty() || b.is_empty() {
        return Ok(None);
    }
    let homs = cover_homs(k, n_min);
    Ok(search_covers(a, b, k, &homs, cover_accept(a, b, epsilon), true).pop())
}

/// Every qualifying cover, one per homomorphism, in search order.
pub fn progression_covers(
    a: &GSet,
    b: &GSet,
    k: &Subgroup,
    epsilon: Rational,
    n_min: usize,
) -> Result<Vec<ProgressionCover>> {
    a.check_same(b)?;
    a.check_same(k.members())?;
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let homs = cover_homs(k, n_min);
    Ok(search_covers(a, b, k, &homs, cover_accept(a, b, epsilon), false))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    TypeI,
    TypeII,
    #[serde(rename = "TypeIII_2")]
    TypeIII2,
    Unclassified,
}

impl Tag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::TypeI => "TypeI",
            Tag::TypeII => "TypeII",
            Tag::TypeIII2 => "TypeIII_2",
            Tag::Unclassified => "Unclassified",
        }
    }
}

/// Sizes behind a periodicity witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicityStats {
    #[serde(with = "crate::rational::as_json")]
    pub defect: Rational,
    pub sumset_size: usize,
    pub sumset_plus_k: usize,
    pub a_plus_k: usize,
    pub b_plus_k: usize,
}

/// Why a subgroup yielded no witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupDiagnostic {
    pub k_index: usize,
    pub members: Vec<usize>,
    #[serde(with = "crate::rational::as_json")]
    pub periodicity_defect: Rational,
    pub type_i: String,
    pub type_ii: String,
    pub type_iii: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Periodicity(PeriodicityStats),
    Decompositions { a: QPDecomposition, b: QPDecomposition },
    Cover(ProgressionCover),
    Failure { diagnostics: Vec<SubgroupDiagnostic> },
}

/// Outcome of classifying a pair: a tag, the subgroup used and a witness that
/// can be re-checked independently.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationResult {
    pub a: GSet,
    pub b: GSet,
    pub tag: Tag,
    pub subgroup: Option<Subgroup>,
    pub witness: Witness,
    pub epsilon: Rational,
    pub delta_used: Rational,
    pub d: usize,
}

/// Recorded in every result: arcs of the circle have no preimages in a finite
/// group, so the Bohr-interval alternative never applies.
pub const BOHR_NOTE: &str = "not applicable: a finite group has no surjective homomorphism onto the circle";

impl ClassificationResult {
    /// Independent re-check of the witness against the stored pair.
    pub fn verify(&self) -> Result<()> {
        let bad = |m: &str| Err(SumsetError::Precondition(format!("{} witness: {m}", self.tag.as_str())));
        let (a, b, eps) = (&self.a, &self.b, self.epsilon);
        let k = match (&self.tag, &self.subgroup) {
            (Tag::Unclassified, _) => return Ok(()),
            (_, Some(k)) => k,
            _ => return bad("missing subgroup"),
        };
        if k.index() > self.d {
            return bad("subgroup index exceeds d");
        }
        let ab = sumset(a, b)?;
        let defect = epsilon_periodicity(&ab, k)?;
        match (&self.tag, &self.witness) {
            (Tag::TypeI, Witness::Periodicity(s)) => {
                let abk = periodization(&ab, k)?.len();
                let ak = periodization(a, k)?.len();
                let bk = periodization(b, k)?.len();
                if defect > eps || abk > ak + bk {
                    return bad("conditions fail");
                }
                if s.defect != defect || s.sumset_plus_k != abk || s.a_plus_k != ak || s.b_plus_k != bk {
                    return bad("stats mismatch");
                }
            }
            (Tag::TypeII, Witness::Decompositions { a: da, b: db }) => {
                if defect <= eps {
                    return bad("sumset is epsilon-periodic");
                }
                da.verify(a)?;
                db.verify(b)?;
                if da.subgroup != *k || db.subgroup != *k {
                    return bad("decomposition uses another subgroup");
                }
                if da.epsilon_defect > eps || db.epsilon_defect > eps {
                    return bad("periodic part defect above epsilon");
                }
                if da.periodic_part.is_empty() && db.periodic_part.is_empty() {
                    return bad("both periodic parts empty");
                }
                let s = sumset(&da.residual_part, &db.residual_part)?;
                if !le_plus(s.len(), da.residual_part.len() + db.residual_part.len(), eps, k.order()) {
                    return bad("residual sumset too large");
                }
            }
            (Tag::TypeIII2, Witness::Cover(c)) => {
                c.verify(a, b)?;
                if c.subgroup() != k {
                    return bad("cover lives in another subgroup");
                }
                let n = a.group().size();
                if Rational::from_integer(ab.len() as i64)
                    >= (ratio(1, 1) - eps) * Rational::from_integer(k.order() as i64)
                {
                    return bad("sumset not below (1-eps)|K|");
                }
                if !lt_plus(c.a_prime.len(), a.len(), eps, n) || !lt_plus(c.b_prime.len(), b.len(), eps, n) {
                    return bad("progressions too long");
                }
                if c.modulus() <= self.d {
                    return bad("N not above d");
                }
            }
            _ => return bad("witness kind does not match tag"),
        }
        Ok(())
    }

    pub fn modulus(&self) -> Option<usize> {
        match &self.witness {
            Witness::Cover(c) => Some(c.modulus()),
            _ => None,
        }
    }
}

/// Reusable classification context for one group and one `(ε, d)`.
pub struct Classifier {
    group: GroupSpec,
    epsilon: Rational,
    d: usize,
    subgroups: Vec<Subgroup>,
    homs: Vec<OnceLock<HomsByModulus>>,
    max_modulus: Option<usize>,
}

impl Classifier {
    pub fn new(group: &GroupSpec, epsilon: Rational, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(SumsetError::InvalidArgument("d must be >= 1".into()));
        }
        if epsilon < ratio(0, 1) {
            return Err(SumsetError::InvalidArgument("epsilon must be >= 0".into()));
        }
        let subgroups = enumerate_subgroups(group, d)?;
        let homs = subgroups.iter().map(|_| OnceLock::new()).collect();
        Ok(Classifier { group: group.clone(), epsilon, d, subgroups, homs, max_modulus: None })
    }

    /// Restricts type III covers to cyclic images `Z/N` with `N <= max`.
    pub fn with_max_modulus(mut self, max: Option<usize>) -> Self {
        self.max_modulus = max;
        self.homs = self.subgroups.iter().map(|_| OnceLock::new()).collect();
        self
    }

    pub fn subgroups(&self) -> &[Subgroup] {
        &self.subgroups
    }

    fn homs_for(&self, i: usize) -> &[(usize, Vec<CyclicHom>)] {
        self.homs[i].get_or_init(|| {
            let mut homs = cover_homs(&self.subgroups[i], self.d);
            homs.retain(|(n, _)| self.max_modulus.is_none_or(|m| *n <= m));
            homs
        })
    }

    fn check_preconditions(&self, a: &GSet, b: &GSet, ab: &GSet, delta: Rational) -> Result<()> {
        let n = self.group.size();
        let eps = self.epsilon;
        if !a.group().same_as(&self.group) {
            return Err(SumsetError::GroupMismatch { left: a.group().descriptor(), right: self.group.descriptor() });
        }
        a.check_same(b)?;
        if le_plus(a.len(), 0, eps, n) {
            return Err(SumsetError::Precondition(format!("m(A) = {}/{n} is not above epsilon", a.len())));
        }
        if le_plus(b.len(), 0, eps, n) {
            return Err(SumsetError::Precondition(format!("m(B) = {}/{n} is not above epsilon", b.len())));
        }
        let (p, q) = (*delta.numer() as i128, *delta.denom() as i128);
        if q * ab.len() as i128 > q * (a.len() + b.len()) as i128 + p * n as i128 {
            return Err(SumsetError::Precondition(format!("m(A+B) = {}/{n} exceeds m(A) + m(B) + delta", ab.len())));
        }
        Ok(())
    }

    fn type_i(&self, a: &GSet, b: &GSet, ab: &GSet, k: &Subgroup) -> Result<std::result::Result<Witness, String>> {
        let defect = epsilon_periodicity(ab, k)?;
        if defect > self.epsilon {
            return Ok(Err(format!("A+B has defect {defect} > epsilon")));
        }
        let abk = periodization(ab, k)?.len();
        let ak = periodization(a, k)?.len();
        let bk = periodization(b, k)?.len();
        if abk > ak + bk {
            return Ok(Err(format!("|A+B+K| = {abk} > |A+K| + |B+K| = {}", ak + bk)));
        }
        Ok(Ok(Witness::Periodicity(PeriodicityStats {
            defect,
            sumset_size: ab.len(),
            sumset_plus_k: abk,
            a_plus_k: ak,
            b_plus_k: bk,
        })))
    }

    fn type_ii(&self, a: &GSet, b: &GSet, ab: &GSet, k: &Subgroup) -> Result<std::result::Result<Witness, String>> {
        let eps = self.epsilon;
        if epsilon_periodicity(ab, k)? <= eps {
            return Ok(Err("A+B is epsilon-periodic".into()));
        }
        let da = quasiperiodic_decompositions(a, k, eps)?;
        let db = quasiperiodic_decompositions(b, k, eps)?;
        if da.is_empty() || db.is_empty() {
            return Ok(Err("no epsilon-quasi-periodic decomposition".into()));
        }
        for pa in &da {
            for pb in &db {
                if pa.periodic_part.is_empty() && pb.periodic_part.is_empty() {
                    continue;
                }
                let s = sumset(&pa.residual_part, &pb.residual_part)?;
                if le_plus(s.len(), pa.residual_part.len() + pb.residual_part.len(), eps, k.order()) {
                    return Ok(Ok(Witness::Decompositions { a: pa.clone(), b: pb.clone() }));
                }
            }
        }
        Ok(Err("no decomposition pair with a nonempty periodic part and small residual sumset".into()))
    }

    fn type_iii(&self, i: usize, a: &GSet, b: &GSet, ab: &GSet) -> std::result::Result<Witness, String> {
        let k = &self.subgroups[i];
        let bound = (ratio(1, 1) - self.epsilon) * Rational::from_integer(k.order() as i64);
        if Rational::from_integer(ab.len() as i64) >= bound {
            return Err(format!("|A+B| = {} is not below (1-epsilon)|K| = {bound}", ab.len()));
        }
        if !in_single_coset(a, k) || !in_single_coset(b, k) {
            return Err("A or B meets several cosets".into());
        }
        let homs = self.homs_for(i);
        match search_covers(a, b, k, homs, cover_accept(a, b, self.epsilon), true).pop() {
            Some(c) => Ok(Witness::Cover(c)),
            None => match self.max_modulus {
                Some(m) => Err(format!("no parallel progression cover with {} < N <= {m}", self.d)),
                None => Err(format!("no parallel progression cover with N > {}", self.d)),
            },
        }
    }

    fn result(
        &self,
        a: &GSet,
        b: &GSet,
        delta: Rational,
        tag: Tag,
        k: Option<&Subgroup>,
        w: Witness,
    ) -> ClassificationResult {
        ClassificationResult {
            a: a.clone(),
            b: b.clone(),
            tag,
            subgroup: k.cloned(),
            witness: w,
            epsilon: self.epsilon,
            delta_used: delta,
            d: self.d,
        }
    }

    /// Tries clause (I) on every subgroup, then (II), then (III), each in
    /// ascending index order, and returns the first witness.
    pub fn classify(&self, a: &GSet, b: &GSet, delta: Rational) -> Result<ClassificationResult> {
        let ab = sumset(a, b)?;
        self.check_preconditions(a, b, &ab, delta)?;
        let mut diags: Vec<SubgroupDiagnostic> = Vec::new();
        let mut reasons_i = Vec::new();
        for k in &self.subgroups {
            match self.type_i(a, b, &ab, k)? {
                Ok(w) => return self.finish(self.result(a, b, delta, Tag::TypeI, Some(k), w)),
                Err(r) => reasons_i.push(r),
            }
        }
        let mut reasons_ii = Vec::new();
        for k in &self.subgroups {
            match self.type_ii(a, b, &ab, k)? {
                Ok(w) => return self.finish(self.result(a, b, delta, Tag::TypeII, Some(k), w)),
                Err(r) => reasons_ii.push(r),
            }
        }
        let mut reasons_iii = Vec::new();
        for (i, k) in self.subgroups.iter().enumerate() {
            match self.type_iii(i, a, b, &ab) {
                Ok(w) => return self.finish(self.result(a, b, delta, Tag::TypeIII2, Some(k), w)),
                Err(r) => reasons_iii.push(r),
            }
        }
        for (i, k) in self.subgroups.iter().enumerate() {
            diags.push(SubgroupDiagnostic {
                k_index: k.index(),
                members: k.members().indices(),
                periodicity_defect: epsilon_periodicity(&ab, k)?,
                type_i: reasons_i[i].clone(),
                type_ii: reasons_ii[i].clone(),
                type_iii: reasons_iii[i].clone(),
            });
        }
        Ok(self.result(a, b, delta, Tag::Unclassified, None, Witness::Failure { diagnostics: diags }))
    }

    /// Every `(K, clause)` combination that holds, subgroup-major.
    pub fn all_witnesses(&self, a: &GSet, b: &GSet, delta: Rational) -> Result<Vec<ClassificationResult>> {
        let ab = sumset(a, b)?;
        self.check_preconditions(a, b, &ab, delta)?;
        let mut out = Vec::new();
        for (i, k) in self.subgroups.iter().enumerate() {
            if let Ok(w) = self.type_i(a, b, &ab, k)? {
                out.push(self.finish(self.result(a, b, delta, Tag::TypeI, Some(k), w))?);
            }
            if let Ok(w) = self.type_ii(a, b, &ab, k)? {
                out.push(self.finish(self.result(a, b, delta, Tag::TypeII, Some(k), w))?);
            }
            if let Ok(w) = self.type_iii(i, a, b, &ab) {
                out.push(self.finish(self.result(a, b, delta, Tag::TypeIII2, Some(k), w))?);
            }
        }
        Ok(out)
    }

    fn finish(&self, r: ClassificationResult) -> Result<ClassificationResult> {
        r.verify()?;
        Ok(r)
    }
}

/// Classifies `(A, B)` using subgroups of index at most `d`.
pub fn classify_pair(a: &GSet, b: &GSet, epsilon: Rational, d: usize, delta: Rational) -> Result<ClassificationResult> {
    Classifier::new(a.group(), epsilon, d)?.classify(a, b, delta)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Critical,
    Subcritical,
    Supercritical,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ExactType {
    I,
    II,
    III,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactHit {
    pub k_index: usize,
    pub members: Vec<usize>,
    #[serde(rename = "type")]
    pub kind: ExactType,
}

/// Tameness of a critical pair, or the exact structure types of a pair with
/// `|A+B| = |A| + |B|`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TameReport {
    pub regime: Regime,
    pub sumset_size: usize,
    pub certificate: Option<KneserCertificate>,
    pub tame: Option<bool>,
    /// Every subgroup and exact type that holds, subgroup by subgroup from `G` down.
    pub exact_types: Vec<ExactHit>,
    /// Only the trivial subgroup works; finer classifications would be needed.
    pub unclassified_exact: bool,
}

/// Tameness for critical pairs; exact types (I)–(III) for subcritical ones.
/// With the trivial subgroup, type (I) always holds, so the report flags
/// pairs where no nontrivial subgroup gives a type.
pub fn tame_pair_check(a: &GSet, b: &GSet) -> Result<TameReport> {
    if a.is_empty() || b.is_empty() {
        return Err(SumsetError::InvalidArgument("tame pair check needs nonempty sets".into()));
    }
    let ab = sumset(a, b)?;
    let g = a.group();
    let total = a.len() + b.len();
    if ab.len() < total {
        let cert = kneser_certificate(a, b)?.expect("critical");
        let tame = cert.valid;
        return Ok(TameReport {
            regime: Regime::Critical,
            sumset_size: ab.len(),
            certificate: Some(cert),
            tame: Some(tame),
            exact_types: Vec::new(),
            unclassified_exact: false,
        });
    }
    if ab.len() > total {
        return Ok(TameReport {
            regime: Regime::Supercritical,
            sumset_size: ab.len(),
            certificate: None,
            tame: None,
            exact_types: Vec::new(),
            unclassified_exact: false,
        });
    }
    let zero = ratio(0, 1);
    let mut hits = Vec::new();
    for k in enumerate_subgroups(g, g.size())? {
        let hit = |kind| ExactHit { k_index: k.index(), members: k.members().indices(), kind };
        let abk = periodization(&ab, &k)?;
        if abk == ab {
            hits.push(hit(ExactType::I));
            continue;
        }
        let da = quasiperiodic_decompositions(a, &k, zero)?;
        let db = quasiperiodic_decompositions(b, &k, zero)?;
        let mut found_ii = false;
        'outer: for pa in &da {
            for pb in &db {
                if pa.periodic_part.is_empty() && pb.periodic_part.is_empty() {
                    continue;
                }
                let s = sumset(&pa.residual_part, &pb.residual_part)?;
                if s.len() == pa.residual_part.len() + pb.residual_part.len() {
                    found_ii = true;
                    break 'outer;
                }
            }
        }
        if found_ii {
            hits.push(hit(ExactType::II));
        }
        let homs = cover_homs(&k, 1);
        let exact = |c: &ProgressionCover| c.a_prime.len() == a.len() && c.b_prime.len() == b.len();
        if !search_covers(a, b, &k, &homs, exact, true).is_empty() {
            hits.push(hit(ExactType::III));
        }
    }
    let unclassified_exact = hits.iter().all(|h| h.k_index == g.size());
    Ok(TameReport {
        regime: Regime::Subcritical,
        sumset_size: ab.len(),
        certificate: None,
        tame: None,
        exact_types: hits,
        unclassified_exact,
    })
}
