//! Consistency checks shared by the `check` subcommand and the test suite.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use faer::c64;

use crate::basis::{enumerate, ModeIndex, SymVector, TruncationPolicy};
use crate::eigensolver::eig_all;
use crate::hamiltonian::{assemble_full, cross_elements, BlockOperators, DynamicalOperators, ModelSpec, PartnerMode};
use crate::pointgroup::{branch_oh_to_td, GroupName, Irrep, PointGroup};
use crate::spectra::{multiset_distance, quartic_multiplets};
use crate::{Error, Result};

/// Deliberate corruption used to confirm that a check can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Flip the sign of one term of the first multi-term projected vector.
    ProjectorSign,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fault::None => "none",
            Fault::ProjectorSign => "projector-sign",
        })
    }
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Fault::None),
            "projector-sign" => Ok(Fault::ProjectorSign),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

/// Largest deviation between the union of all-partner block spectra and the
/// spectrum of the unreduced matrix, or infinity if the counts differ.
pub fn oracle_deviation(model: &ModelSpec) -> Result<f64> {
    let model = model.with_partners(PartnerMode::All);
    let group = PointGroup::build(GroupName::Td)?;
    let mut blocks = Vec::new();
    for irrep in Irrep::TD {
        let ops = BlockOperators::build_in(&group, &model, irrep)?;
        blocks.extend(eig_all(ops.matrix(model.g).as_ref(), false)?.values);
    }
    let full = eig_all(assemble_full(&model).as_ref(), false)?.values;
    Ok(multiset_distance(&blocks, &full).unwrap_or(f64::INFINITY))
}

fn corrupt(v: &SymVector) -> Option<SymVector> {
    if v.len() < 2 {
        return None;
    }
    let mut terms: Vec<(ModeIndex, i64)> = v.terms().collect();
    let last = terms.len() - 1;
    terms[last].1 = -terms[last].1;
    SymVector::from_terms(terms)
}

/// Largest `H₀` or `xyz` element between symmetry-adapted vectors of
/// different T_d irreps, plus the largest overlap between them.
pub fn mixing_defect(model: &ModelSpec, fault: Fault) -> Result<f64> {
    let group = PointGroup::build(GroupName::Td)?;
    let states = enumerate(model.truncation);
    let mut bases: Vec<Vec<SymVector>> = Irrep::TD
        .iter()
        .map(|&irrep| group.project(&states, irrep))
        .collect::<Result<_>>()?;
    if fault == Fault::ProjectorSign {
        let hit = bases
            .iter_mut()
            .flat_map(|b| b.iter_mut())
            .find(|v| v.len() >= 2)
            .ok_or_else(|| Error::InvalidModel("no multi-term vector to corrupt".into()))?;
        *hit = corrupt(hit).expect("sign flip keeps the vector nonzero");
    }
    let mut worst = 0.0f64;
    for a in 0..bases.len() {
        for b in a + 1..bases.len() {
            worst = worst.max(cross_elements(model, &bases[a], &bases[b])?);
            for u in &bases[a] {
                for v in &bases[b] {
                    worst = worst.max(u.overlap(v).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Commutator norms of the quartic dynamical operators with `H₀`, on
/// states at least four quanta from the truncation edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutatorReport {
    pub limit: u32,
    pub interior_states: usize,
    pub o1_h0: f64,
    pub o2_h0: f64,
    pub o1_o2: f64,
}

pub fn commutator_check(limit: u32) -> Result<CommutatorReport> {
    let ops = DynamicalOperators::build(TruncationPolicy::PerMode(limit))?;
    let keep = ops.interior_mask(limit);
    Ok(CommutatorReport {
        limit,
        interior_states: keep.iter().filter(|&&k| k).count(),
        o1_h0: ops.o1.commutator_norm(&ops.h0, &keep),
        o2_h0: ops.o2.commutator_norm(&ops.h0, &keep),
        o1_o2: ops.o1.commutator_norm(&ops.o2, &keep),
    })
}

/// One quartic multiplet at `g = 0` compared against the block spectra.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipletMatch {
    pub orbit: [u32; 3],
    /// Sum of the three one-dimensional eigenvalues.
    pub energy: f64,
    /// T_d multiplicities expected from the O_h content of the orbit.
    pub expected: BTreeMap<Irrep, usize>,
    /// Single-partner block eigenvalues found within `tol` of `energy`.
    pub found: BTreeMap<Irrep, usize>,
    /// Largest distance from `energy` among the matched eigenvalues.
    pub max_deviation: f64,
}

impl MultipletMatch {
    pub fn passed(&self) -> bool {
        self.expected == self.found
    }
}

/// The lowest `count` quartic multiplets at per-mode limit `limit`: each
/// sum of one-dimensional levels must appear in exactly the T_d blocks given
/// by branching its O_h content, and nowhere else.
pub fn quartic_multiplet_check(limit: u32, count: usize, tol: f64) -> Result<Vec<MultipletMatch>> {
    let td = PointGroup::build(GroupName::Td)?;
    let oh = PointGroup::build(GroupName::Oh)?;
    let model = ModelSpec::quartic(limit, 0.0)?.with_partners(PartnerMode::Single);
    let mut spectra: Vec<(Irrep, Vec<f64>)> = Vec::new();
    for irrep in Irrep::TD {
        let ops = BlockOperators::build_in(&td, &model, irrep)?;
        let values = eig_all(ops.matrix(0.0).as_ref(), false)?.values;
        spectra.push((irrep, values.iter().map(|z: &c64| z.re).collect()));
    }
    let mut out = Vec::new();
    for m in quartic_multiplets(limit as usize, count)? {
        let mut expected = BTreeMap::new();
        for (label, n) in oh.orbit_content(m.orbit) {
            *expected.entry(branch_oh_to_td(label)?).or_insert(0) += n;
        }
        let mut found = BTreeMap::new();
        let mut max_deviation = 0.0f64;
        for (irrep, values) in &spectra {
            let hits: Vec<f64> = values.iter().map(|e| (e - m.energy).abs()).filter(|&d| d < tol).collect();
            if !hits.is_empty() {
                found.insert(*irrep, hits.len());
                max_deviation = hits.iter().fold(max_deviation, |a, &b| a.max(b));
            }
        }
        out.push(MultipletMatch {
            orbit: m.orbit,
            energy: m.energy,
            expected,
            found,
            max_deviation,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_small() {
        let d = oracle_deviation(&ModelSpec::harmonic(4, 0.3).unwrap()).unwrap();
        assert!(d < 1e-10, "{d}");
        let d = oracle_deviation(&ModelSpec::quartic(3, 0.7).unwrap()).unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn mixing_and_fault() {
        let model = ModelSpec::harmonic(5, 0.0).unwrap();
        assert!(mixing_defect(&model, Fault::None).unwrap() < 1e-12);
        assert!(mixing_defect(&model, Fault::ProjectorSign).unwrap() > 0.1);
        assert_eq!("projector-sign".parse::<Fault>().unwrap(), Fault::ProjectorSign);
    }

    #[test]
    fn commutators_vanish_inside() {
        let r = commutator_check(8).unwrap();
        assert!(r.interior_states > 0);
        assert!(r.o1_h0 < 1e-10 && r.o2_h0 < 1e-10 && r.o1_o2 < 1e-10, "{r:?}");
    }

    #[test]
    fn ground_multiplet_is_a1() {
        let m = quartic_multiplet_check(8, 2, 1e-7).unwrap();
        assert_eq!(m[0].orbit, [0, 0, 0]);
        assert_eq!(m[0].expected, BTreeMap::from([(Irrep::A1, 1)]));
        assert!(m.iter().all(MultipletMatch::passed), "{m:?}");
    }
}
