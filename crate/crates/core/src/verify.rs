//! Exhaustive invariant suites over small groups.
//!
//! Every suite walks its instances in a fixed order and merges per-set
//! results in that order, so reports do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SumsetError};
use crate::group::{abelian_groups_up_to, enumerate_subgroups, Element, GroupSpec, Subgroup};
use crate::gset::GSet;
use crate::search::build_qp_pair;
use crate::small::MaskTables;

/// Stored reproducers per suite; the count is always exact.
pub const ANOMALY_LIMIT: usize = 50;

/// A falsified instance with everything needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Anomaly {
    pub suite: String,
    pub group: String,
    #[serde(rename = "A")]
    pub a: Vec<usize>,
    #[serde(rename = "B")]
    pub b: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subgroup: Option<Vec<usize>>,
    pub detail: String,
}

/// Outcome of one suite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub statement: String,
    pub groups: usize,
    pub max_size: usize,
    pub instances: u64,
    pub anomaly_count: u64,
    pub anomalies: Vec<Anomaly>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.anomaly_count == 0
    }
}

/// Options for [`lemma_suites`].
#[derive(Clone, Debug)]
pub struct LemmaConfig {
    /// Largest group searched exhaustively.
    pub max_size: usize,
    /// Largest group for the exhaustive `|A| + |B| > |G|` check.
    pub large_sum_max_size: usize,
    /// Largest group for the sampled coset-overlap checks.
    pub sample_max_size: usize,
    /// Random pairs drawn per sampled group.
    pub samples: usize,
    pub seed: u64,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        LemmaConfig { max_size: 8, large_sum_max_size: 12, sample_max_size: 12, samples: 2000, seed: 0 }
    }
}

#[derive(Default)]
struct Acc {
    instances: u64,
    count: u64,
    anomalies: Vec<Anomaly>,
}

impl Acc {
    fn merge(mut self, other: Acc) -> Acc {
        self.instances += other.instances;
        self.count += other.count;
        let room = ANOMALY_LIMIT.saturating_sub(self.anomalies.len());
        self.anomalies.extend(other.anomalies.into_iter().take(room));
        self
    }
}

struct Ctx<'a> {
    suite: &'static str,
    group: String,
    t: &'a MaskTables,
    subgroups: Vec<u64>,
}

impl Ctx<'_> {
    fn fail(&self, acc: &mut Acc, a: u64, b: u64, k: Option<u64>, detail: String) {
        acc.count += 1;
        if acc.anomalies.len() < ANOMALY_LIMIT {
            acc.anomalies.push(Anomaly {
                suite: self.suite.to_string(),
                group: self.group.clone(),
                a: bits(a),
                b: bits(b),
                subgroup: k.map(bits),
                detail,
            });
        }
    }

    fn coset(&self, k: u64, x: usize) -> u64 {
        self.t.translate(k, x)
    }
}

fn bits(m: u64) -> Vec<usize> {
    (0..64).filter(|&i| m >> i & 1 == 1).collect()
}

fn ones(m: u64) -> impl Iterator<Item = usize> {
    let mut r = m;
    std::iter::from_fn(move || {
        if r == 0 {
            None
        } else {
            let x = r.trailing_zeros() as usize;
            r &= r - 1;
            Some(x)
        }
    })
}

fn pop(m: u64) -> usize {
    m.count_ones() as usize
}

fn subgroup_masks(g: &GroupSpec) -> Result<Vec<u64>> {
    Ok(enumerate_subgroups(g, g.size())?.iter().map(|k| k.members().mask().expect("small group")).collect())
}

fn groups(max_size: usize) -> Result<Vec<GroupSpec>> {
    let gs = abelian_groups_up_to(max_size);
    if gs.iter().any(|g| g.mask_tables().is_none()) {
        return Err(SumsetError::SizeLimit { size: max_size as u128, cap: crate::small::MAX_MASK_ORDER });
    }
    Ok(gs)
}

type PairCheck = fn(&Ctx, &mut Acc, u64, u64);

/// Runs `check` on every ordered pair of nonempty subsets of every group.
fn pair_suite(suite: &'static str, statement: &str, max_size: usize, check: PairCheck) -> Result<SuiteReport> {
    let gs = groups(max_size)?;
    let mut total = Acc::default();
    for g in &gs {
        let t = g.mask_tables().expect("checked");
        let ctx = Ctx { suite, group: g.descriptor(), t, subgroups: subgroup_masks(g)? };
        let full = t.full();
        let acc = (1..=full)
            .into_par_iter()
            .map(|a| {
                let mut acc = Acc::default();
                for b in 1..=full {
                    check(&ctx, &mut acc, a, b);
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Acc::default(), Acc::merge);
        total = total.merge(acc);
    }
    Ok(report(suite, statement, gs.len(), max_size, total))
}

fn report(suite: &str, statement: &str, groups: usize, max_size: usize, acc: Acc) -> SuiteReport {
    SuiteReport {
        suite: suite.to_string(),
        statement: statement.to_string(),
        groups,
        max_size,
        instances: acc.instances,
        anomaly_count: acc.count,
        anomalies: acc.anomalies,
    }
}

fn kneser_check(ctx: &Ctx, acc: &mut Acc, a: u64, b: u64) {
    let t = ctx.t;
    let ab = t.sumset(a, b);
    if pop(ab) >= pop(a) + pop(b) {
        return;
    }
    acc.instances += 1;
    let h = t.stabilizer(ab);
    let lhs = pop(ab);
    let rhs = pop(t.sumset(a, h)) + pop(t.sumset(b, h)) - pop(h);
    if lhs != rhs {
        ctx.fail(acc, a, b, Some(h), format!("|A+B| = {lhs} but |A+H| + |B+H| - |H| = {rhs}"));
    }
}

/// Every critical pair satisfies `|A+B| = |A+H| + |B+H| - |H|` with
/// `H` the stabilizer of `A+B`.
pub fn kneser_suite(max_size: usize) -> Result<SuiteReport> {
    pair_suite("kneser", "critical pairs satisfy |A+B| = |A+H| + |B+H| - |H| for H = stab(A+B)", max_size, kneser_check)
}

fn large_sum_check(ctx: &Ctx, acc: &mut Acc, a: u64, b: u64) {
    if pop(a) + pop(b) <= ctx.t.size() {
        return;
    }
    acc.instances += 1;
    if ctx.t.sumset(a, b) != ctx.t.full() {
        ctx.fail(acc, a, b, None, "|A| + |B| > |G| but A+B is not G".into());
    }
}

fn coset_overlap_check(ctx: &Ctx, acc: &mut Acc, a: u64, b: u64) {
    let t = ctx.t;
    let ab = t.sumset(a, b);
    for &k in &ctx.subgroups {
        for x in ones(a) {
            let ax = pop(a & ctx.coset(k, x));
            for y in ones(b) {
                if ax + pop(b & ctx.coset(k, y)) <= pop(k) {
                    continue;
                }
                acc.instances += 1;
                let target = ctx.coset(k, t.add(x, y));
                if target & !ab != 0 {
                    ctx.fail(acc, a, b, Some(k), format!("overlap at a = {x}, b = {y} but a+b+K is not inside A+B"));
                }
            }
        }
    }
}

fn critical_parts(ctx: &Ctx, a: u64, b: u64) -> Option<(u64, u64)> {
    let ab = ctx.t.sumset(a, b);
    (pop(ab) < pop(a) + pop(b)).then(|| (ab, ctx.t.stabilizer(ab)))
}

fn coset_fill_check(ctx: &Ctx, acc: &mut Acc, a: u64, b: u64) {
    let Some((ab, h)) = critical_parts(ctx, a, b) else { return };
    acc.instances += 1;
    let need = pop(a) + pop(b);
    for (name, set) in [("a", a), ("b", b)] {
        for x in ones(set) {
            if pop(set & ctx.coset(h, x)) + pop(ab) < need {
                ctx.fail(acc, a, b, Some(h), format!("coset of {name} = {x} holds too few points"));
            }
        }
    }
}

fn mover_check(ctx: &Ctx, acc: &mut Acc, a: u64, b: u64) {
    let t = ctx.t;
    let Some((ab, h)) = critical_parts(ctx, a, b) else { return };
    acc.instances += 1;
    if t.movers(ab, b) != t.sumset(a, h) {
        ctx.fail(acc, a, b, Some(h), "{g : g + B in A+B} differs from A + H".into());
    }
    if t.movers(ab, a) != t.sumset(b, h) {
        ctx.fail(acc, a, b, Some(h), "{g : g + A in A+B} differs from B + H".into());
    }
}

fn escape_check(ctx: &Ctx, acc: &mut Acc, a: u64, b: u64) {
    let t = ctx.t;
    let Some((ab, h)) = critical_parts(ctx, a, b) else { return };
    for g in 0..t.size() {
        let ag = t.translate(a, g);
        if ag & !ab == 0 {
            continue;
        }
        acc.instances += 1;
        if pop(ag | ab) < pop(a) + pop(b) {
            ctx.fail(acc, a, b, Some(h), format!("A + {g} leaves A+B but |(A+g) ∪ (A+B)| < |A| + |B|"));
        }
    }
}

fn overflow_check(ctx: &Ctx, acc: &mut Acc, a: u64, b: u64) {
    let t = ctx.t;
    for &k in &ctx.subgroups {
        if pop(t.sumset(a, k)) + pop(t.sumset(b, k)) >= pop(a) + pop(b) + pop(k) {
            continue;
        }
        acc.instances += 1;
        for x in ones(a) {
            for y in ones(b) {
                if pop(a & ctx.coset(k, x)) + pop(b & ctx.coset(k, y)) <= pop(k) {
                    ctx.fail(acc, a, b, Some(k), format!("cosets of a = {x}, b = {y} do not overflow K"));
                }
            }
        }
    }
}

/// Checks the four conclusions for `B' ⊆ B` with `|B'| = |B|` and `(A, B')`
/// critical. Under counting measure `B' = B`, so the hypotheses
/// `|A+B| = |A| + |B|` and `|A+B'| < |A| + |B'|` never hold together.
fn pop1_check(ctx: &Ctx, acc: &mut Acc, a: u64, b: u64) {
    let t = ctx.t;
    let ab = t.sumset(a, b);
    if pop(ab) != pop(a) + pop(b) {
        return;
    }
    let b1 = b;
    let Some((ab1, h)) = critical_parts(ctx, a, b1) else { return };
    acc.instances += 1;
    let abh = t.sumset(ab, h);
    let rest = abh & !ab1;
    let Some(x) = ones(rest).next() else {
        ctx.fail(acc, a, b, Some(h), "(A+B+H) minus (A+B') is empty".into());
        return;
    };
    if rest != ctx.coset(h, x) {
        ctx.fail(acc, a, b, Some(h), "(A+B+H) minus (A+B') is not one coset".into());
    }
    if t.sumset(b1, h) != b1 {
        ctx.fail(acc, a, b, Some(h), "B' is not H-periodic".into());
    }
    let missing = pop(ab & !ab1);
    let decomposes = ones(a).any(|y| {
        let a0 = a & ctx.coset(h, y);
        let a1 = a & !a0;
        t.sumset(a1, h) == a1 && pop(a0) == missing
    });
    if !decomposes {
        ctx.fail(acc, a, b, Some(h), "A has no matching quasi-periodic decomposition".into());
    }
}

/// Every valid input to the quasi-periodic builder yields `|A+B| <= |A| + |B|`.
fn build_qp_suite(max_size: usize) -> Result<SuiteReport> {
    let gs = groups(max_size)?;
    let mut total = Acc::default();
    for g in &gs {
        let t = g.mask_tables().expect("checked");
        let ctx = Ctx { suite: "build_qp", group: g.descriptor(), t, subgroups: subgroup_masks(g)? };
        for k in enumerate_subgroups(g, g.size())? {
            total = total.merge(build_qp_for(&ctx, g, &k)?);
        }
    }
    Ok(report(
        "build_qp",
        "rebuilding a critical periodic pair around a unique expression coset keeps |A+B| <= |A| + |B|",
        gs.len(),
        max_size,
        total,
    ))
}

fn build_qp_for(ctx: &Ctx, g: &GroupSpec, k: &Subgroup) -> Result<Acc> {
    let t = ctx.t;
    let km = k.members().mask().expect("small group");
    let cosets: Vec<u64> = k.coset_reps().iter().map(|r| ctx.coset(km, r.0)).collect();
    let unions = |sel: u64| ones(sel).fold(0u64, |m, c| m | cosets[c]);
    let nsel = 1u64 << cosets.len();
    let subsets_of = |m: u64| -> Vec<u64> {
        let mut out = Vec::new();
        let mut s = m;
        while s != 0 {
            out.push(s);
            s = (s - 1) & m;
        }
        out.reverse();
        out
    };
    let accs = (1..nsel)
        .into_par_iter()
        .map(|cs| -> Result<Acc> {
            let mut acc = Acc::default();
            let c = unions(cs);
            for ds in 1..nsel {
                let d = unions(ds);
                let cd = t.sumset(c, d);
                if pop(cd) + pop(km) != pop(c) + pop(d) {
                    continue;
                }
                for ci in ones(cs) {
                    for di in ones(ds) {
                        let c0 = cosets[ci];
                        let d0 = cosets[di];
                        let target = t.sumset(c0, d0);
                        let unique = ones(cs)
                            .all(|x| ones(ds).all(|y| (x, y) == (ci, di) || t.sumset(cosets[x], cosets[y]) != target));
                        if !unique {
                            continue;
                        }
                        for a0 in subsets_of(c0) {
                            for b0 in subsets_of(d0) {
                                if pop(t.sumset(a0, b0)) > pop(a0) + pop(b0) {
                                    continue;
                                }
                                acc.instances += 1;
                                let built = build_qp_pair(
                                    &GSet::from_mask(g, c),
                                    &GSet::from_mask(g, d),
                                    k,
                                    Element(c0.trailing_zeros() as usize),
                                    Element(d0.trailing_zeros() as usize),
                                    &GSet::from_mask(g, a0),
                                    &GSet::from_mask(g, b0),
                                );
                                match built {
                                    Ok((a, b)) => {
                                        let (am, bm) = (a.mask().expect("small"), b.mask().expect("small"));
                                        if pop(t.sumset(am, bm)) > pop(am) + pop(bm) {
                                            ctx.fail(
                                                &mut acc,
                                                am,
                                                bm,
                                                Some(km),
                                                "built pair is not subcritical".into(),
                                            );
                                        }
                                    }
                                    Err(SumsetError::Anomaly(m)) => ctx.fail(&mut acc, a0, b0, Some(km), m),
                                    Err(e) => ctx.fail(
                                        &mut acc,
                                        c,
                                        d,
                                        Some(km),
                                        format!("valid input rejected ({e}); A0 = {:?}, B0 = {:?}", bits(a0), bits(b0)),
                                    ),
                                }
                            }
                        }
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(accs.into_iter().fold(Acc::default(), Acc::merge))
}

/// The coset-overlap statement on seeded random pairs in groups above the
/// exhaustive range.
fn sampled_overlap_suite(config: &LemmaConfig) -> Result<SuiteReport> {
    let gs: Vec<GroupSpec> =
        groups(config.sample_max_size)?.into_iter().filter(|g| g.size() > config.max_size).collect();
    let mut total = Acc::default();
    for (i, g) in gs.iter().enumerate() {
        let t = g.mask_tables().expect("checked");
        let ctx = Ctx { suite: "coset_overlap_sampled", group: g.descriptor(), t, subgroups: subgroup_masks(g)? };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(i as u64));
        let pairs: Vec<(u64, u64)> =
            (0..config.samples).map(|_| (rng.gen_range(1..=t.full()), rng.gen_range(1..=t.full()))).collect();
        let acc = pairs
            .par_iter()
            .map(|&(a, b)| {
                let mut acc = Acc::default();
                coset_overlap_check(&ctx, &mut acc, a, b);
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Acc::default(), Acc::merge);
        total = total.merge(acc);
    }
    Ok(report(
        "coset_overlap_sampled",
        "|A ∩ (a+K)| + |B ∩ (b+K)| > |K| implies a+b+K ⊆ A+B (sampled pairs, every subgroup)",
        gs.len(),
        config.sample_max_size,
        total,
    ))
}

/// The structural lemmas on critical and near-critical pairs.
pub fn lemma_suites(config: &LemmaConfig) -> Result<Vec<SuiteReport>> {
    let m = config.max_size;
    let mut out = vec![pair_suite(
        "large_sum",
        "|A| + |B| > |G| implies A+B = G",
        config.large_sum_max_size.max(m),
        large_sum_check,
    )?];
    let pair_suites: [(&'static str, &str, PairCheck); 6] = [
        (
            "coset_overlap",
            "|A ∩ (a+K)| + |B ∩ (b+K)| > |K| implies a+b+K ⊆ A+B (every subgroup K)",
            coset_overlap_check,
        ),
        (
            "critical_coset_fill",
            "critical pairs satisfy |A ∩ (a+H)| + |A+B| >= |A| + |B| and the same for B",
            coset_fill_check,
        ),
        ("critical_movers", "critical pairs satisfy {g : g+B ⊆ A+B} = A+H and {g : g+A ⊆ A+B} = B+H", mover_check),
        (
            "critical_translate",
            "critical pairs satisfy |(A+g) ∪ (A+B)| >= |A| + |B| whenever A+g leaves A+B",
            escape_check,
        ),
        (
            "coset_overflow",
            "|A+K| + |B+K| - |K| < |A| + |B| implies |A ∩ (a+K)| + |B ∩ (b+K)| > |K| for all a, b",
            overflow_check,
        ),
        (
            "subcritical_extension",
            "|A+B| = |A| + |B| with (A, B') critical for an equal-size B' ⊆ B forces one missing coset \
             (no instance exists under counting measure)",
            pop1_check,
        ),
    ];
    for (name, statement, check) in pair_suites {
        out.push(pair_suite(name, statement, m, check)?);
    }
    out.push(build_qp_suite(m)?);
    out.push(sampled_overlap_suite(config)?);
    Ok(out)
}
