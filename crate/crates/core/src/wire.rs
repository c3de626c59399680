//! JSON shapes for decompositions, covers and classification results.
//!
//! Sets nested inside a result are plain index lists; the enclosing result
//! carries the group once, and parsing rebuilds and re-checks every subgroup.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SumsetError};
use crate::group::{CyclicHom, Element, GroupSpec, Subgroup};
use crate::gset::GSet;
use crate::rational::Rational;
use crate::sets::QPDecomposition;
use crate::structure::{
    ClassificationResult, PeriodicityStats, Progression, ProgressionCover, SubgroupDiagnostic, Tag, Witness, BOHR_NOTE,
};

#[derive(Serialize, Deserialize)]
struct SubgroupWire {
    members: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct HomWire {
    #[serde(rename = "N")]
    n: usize,
    multipliers: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    scale: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    domain: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct QpWire {
    subgroup: SubgroupWire,
    periodic_part: Vec<usize>,
    residual_part: Vec<usize>,
    residual_coset: usize,
    #[serde(with = "crate::rational::as_json")]
    epsilon_defect: Rational,
}

#[derive(Serialize, Deserialize)]
struct CoverWire {
    hom: HomWire,
    prog_a: Progression,
    prog_b: Progression,
    shift_a: usize,
    shift_b: usize,
    a_prime: Vec<usize>,
    b_prime: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum WitnessWire {
    Periodicity(PeriodicityStats),
    Decompositions {
        #[serde(rename = "A")]
        a: QpWire,
        #[serde(rename = "B")]
        b: QpWire,
    },
    Cover(CoverWire),
    Failure {
        diagnostics: Vec<SubgroupDiagnostic>,
    },
}

#[derive(Serialize, Deserialize)]
struct ResultWire {
    group: GroupSpec,
    #[serde(rename = "A")]
    a: Vec<usize>,
    #[serde(rename = "B")]
    b: Vec<usize>,
    tag: Tag,
    subgroup: Option<SubgroupWire>,
    witness: WitnessWire,
    #[serde(with = "crate::rational::as_json")]
    epsilon: Rational,
    #[serde(with = "crate::rational::as_json")]
    delta_used: Rational,
    d: usize,
    bohr_intervals: String,
}

fn sub_to(k: &Subgroup) -> SubgroupWire {
    SubgroupWire { members: k.members().indices() }
}

fn sub_from(g: &GroupSpec, w: SubgroupWire) -> Result<Subgroup> {
    Subgroup::new(GSet::from_indices(g, w.members)?)
}

fn hom_to(h: &CyclicHom) -> HomWire {
    let whole = h.domain().is_whole();
    HomWire {
        n: h.modulus(),
        multipliers: h.multipliers().to_vec(),
        scale: (!whole).then_some(h.scale()),
        domain: (!whole).then(|| h.domain().members().indices()),
    }
}

fn qp_to(d: &QPDecomposition) -> QpWire {
    QpWire {
        subgroup: sub_to(&d.subgroup),
        periodic_part: d.periodic_part.indices(),
        residual_part: d.residual_part.indices(),
        residual_coset: d.residual_coset.0,
        epsilon_defect: d.epsilon_defect,
    }
}

fn qp_from(g: &GroupSpec, w: QpWire) -> Result<QPDecomposition> {
    Ok(QPDecomposition {
        subgroup: sub_from(g, w.subgroup)?,
        periodic_part: GSet::from_indices(g, w.periodic_part)?,
        residual_part: GSet::from_indices(g, w.residual_part)?,
        residual_coset: element(g, w.residual_coset)?,
        epsilon_defect: w.epsilon_defect,
    })
}

fn cover_to(c: &ProgressionCover) -> CoverWire {
    CoverWire {
        hom: hom_to(&c.hom),
        prog_a: c.prog_a,
        prog_b: c.prog_b,
        shift_a: c.shift_a.0,
        shift_b: c.shift_b.0,
        a_prime: c.a_prime.indices(),
        b_prime: c.b_prime.indices(),
    }
}

fn cover_from(g: &GroupSpec, w: CoverWire) -> Result<ProgressionCover> {
    let hom = CyclicHom::from_parts(g, w.hom.n, w.hom.multipliers, w.hom.scale, w.hom.domain)?;
    Ok(ProgressionCover {
        hom,
        prog_a: w.prog_a,
        prog_b: w.prog_b,
        shift_a: element(g, w.shift_a)?,
        shift_b: element(g, w.shift_b)?,
        a_prime: GSet::from_indices(g, w.a_prime)?,
        b_prime: GSet::from_indices(g, w.b_prime)?,
    })
}

fn element(g: &GroupSpec, x: usize) -> Result<Element> {
    if x < g.size() {
        Ok(Element(x))
    } else {
        Err(SumsetError::InvalidArgument(format!("element {x} out of range")))
    }
}

fn result_to(r: &ClassificationResult) -> ResultWire {
    ResultWire {
        group: r.a.group().clone(),
        a: r.a.indices(),
        b: r.b.indices(),
        tag: r.tag,
        subgroup: r.subgroup.as_ref().map(sub_to),
        witness: match &r.witness {
            Witness::Periodicity(s) => WitnessWire::Periodicity(s.clone()),
            Witness::Decompositions { a, b } => WitnessWire::Decompositions { a: qp_to(a), b: qp_to(b) },
            Witness::Cover(c) => WitnessWire::Cover(cover_to(c)),
            Witness::Failure { diagnostics } => WitnessWire::Failure { diagnostics: diagnostics.clone() },
        },
        epsilon: r.epsilon,
        delta_used: r.delta_used,
        d: r.d,
        bohr_intervals: BOHR_NOTE.to_string(),
    }
}

fn result_from(w: ResultWire) -> Result<ClassificationResult> {
    let g = w.group;
    let r = ClassificationResult {
        a: GSet::from_indices(&g, w.a)?,
        b: GSet::from_indices(&g, w.b)?,
        tag: w.tag,
        subgroup: w.subgroup.map(|s| sub_from(&g, s)).transpose()?,
        witness: match w.witness {
            WitnessWire::Periodicity(s) => Witness::Periodicity(s),
            WitnessWire::Decompositions { a, b } => Witness::Decompositions { a: qp_from(&g, a)?, b: qp_from(&g, b)? },
            WitnessWire::Cover(c) => Witness::Cover(cover_from(&g, c)?),
            WitnessWire::Failure { diagnostics } => Witness::Failure { diagnostics },
        },
        epsilon: w.epsilon,
        delta_used: w.delta_used,
        d: w.d,
    };
    Ok(r)
}

impl Serialize for QPDecomposition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        qp_to(self).serialize(s)
    }
}

impl Serialize for ProgressionCover {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        cover_to(self).serialize(s)
    }
}

impl Serialize for ClassificationResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        result_to(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassificationResult {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = ResultWire::deserialize(d)?;
        result_from(w).map_err(serde::de::Error::custom)
    }
}
