//! T_d and O_h as groups of signed coordinate permutations.
//!
//! Classes are found by conjugation closure and matched to the tabulated
//! characters through the signature (cycle type, determinant, trace), which
//! separates every class of both groups. Projection works on product states
//! and yields exact integer vectors.

mod fixtures;
mod tables;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::basis::{orbit_states, ModeIndex, SymVector};
use crate::error::{Error, Result};

pub use fixtures::{distinct_assignments, paper_basis_fixtures, BasisFixture, FixtureSet, IndexExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupName {
    Td,
    Oh,
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupName::Td => "Td",
            GroupName::Oh => "Oh",
        })
    }
}

impl FromStr for GroupName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Td" | "td" | "TD" => Ok(GroupName::Td),
            "Oh" | "oh" | "OH" => Ok(GroupName::Oh),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

/// Irreducible representations of T_d and O_h.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Irrep {
    A1,
    A2,
    E,
    T1,
    T2,
    A1g,
    A2g,
    Eg,
    T1g,
    T2g,
    A1u,
    A2u,
    Eu,
    T1u,
    T2u,
}

impl Irrep {
    pub const TD: [Irrep; 5] = [Irrep::A1, Irrep::A2, Irrep::E, Irrep::T1, Irrep::T2];
    pub const OH: [Irrep; 10] = [
        Irrep::A1g,
        Irrep::A2g,
        Irrep::Eg,
        Irrep::T1g,
        Irrep::T2g,
        Irrep::A1u,
        Irrep::A2u,
        Irrep::Eu,
        Irrep::T1u,
        Irrep::T2u,
    ];

    pub fn dim(&self) -> usize {
        use Irrep::*;
        match self {
            A1 | A2 | A1g | A2g | A1u | A2u => 1,
            E | Eg | Eu => 2,
            T1 | T2 | T1g | T2g | T1u | T2u => 3,
        }
    }

    pub fn group(&self) -> GroupName {
        if Irrep::TD.contains(self) {
            GroupName::Td
        } else {
            GroupName::Oh
        }
    }

    pub fn name(&self) -> &'static str {
        use Irrep::*;
        match self {
            A1 => "A1",
            A2 => "A2",
            E => "E",
            T1 => "T1",
            T2 => "T2",
            A1g => "A1g",
            A2g => "A2g",
            Eg => "Eg",
            T1g => "T1g",
            T2g => "T2g",
            A1u => "A1u",
            A2u => "A2u",
            Eu => "Eu",
            T1u => "T1u",
            T2u => "T2u",
        }
    }
}

impl fmt::Display for Irrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Irrep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Irrep::TD
            .iter()
            .chain(Irrep::OH.iter())
            .find(|i| i.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CycleType {
    Identity,
    Transposition,
    ThreeCycle,
}

/// Conjugation-invariant fingerprint of a signed permutation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ClassSignature {
    pub cycle: CycleType,
    pub det: i32,
    pub trace: i32,
}

/// Signed permutation acting on coordinates as `r'_i = signs[i] · r[perm[i]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    perm: [u8; 3],
    signs: [i8; 3],
}

impl GroupElement {
    pub fn new(perm: [u8; 3], signs: [i8; 3]) -> Self {
        let mut seen = [false; 3];
        for &p in &perm {
            assert!(p < 3 && !seen[p as usize], "not a permutation: {perm:?}");
            seen[p as usize] = true;
        }
        assert!(signs.iter().all(|s| s.abs() == 1), "signs must be ±1");
        Self { perm, signs }
    }

    pub fn identity() -> Self {
        Self::new([0, 1, 2], [1, 1, 1])
    }

    /// The inversion `(x, y, z) → (−x, −y, −z)`.
    pub fn inversion() -> Self {
        Self::new([0, 1, 2], [-1, -1, -1])
    }

    pub fn perm(&self) -> [u8; 3] {
        self.perm
    }

    pub fn signs(&self) -> [i8; 3] {
        self.signs
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let mut perm = [0u8; 3];
        let mut signs = [1i8; 3];
        for i in 0..3 {
            let j = self.perm[i] as usize;
            perm[i] = other.perm[j];
            signs[i] = self.signs[i] * other.signs[j];
        }
        GroupElement { perm, signs }
    }

    pub fn inverse(&self) -> GroupElement {
        let mut perm = [0u8; 3];
        let mut signs = [1i8; 3];
        for i in 0..3 {
            let j = self.perm[i] as usize;
            perm[j] = i as u8;
            signs[j] = self.signs[i];
        }
        GroupElement { perm, signs }
    }

    fn perm_parity(&self) -> i32 {
        match self.cycle_type() {
            CycleType::Transposition => -1,
            _ => 1,
        }
    }

    pub fn cycle_type(&self) -> CycleType {
        let fixed = (0..3).filter(|&i| self.perm[i] as usize == i).count();
        match fixed {
            3 => CycleType::Identity,
            1 => CycleType::Transposition,
            _ => CycleType::ThreeCycle,
        }
    }

    pub fn det(&self) -> i32 {
        self.perm_parity() * self.signs.iter().map(|&s| s as i32).product::<i32>()
    }

    pub fn trace(&self) -> i32 {
        (0..3)
            .filter(|&i| self.perm[i] as usize == i)
            .map(|i| self.signs[i] as i32)
            .sum()
    }

    pub fn signature(&self) -> ClassSignature {
        ClassSignature {
            cycle: self.cycle_type(),
            det: self.det(),
            trace: self.trace(),
        }
    }

    /// Leaves `xyz` invariant (membership in T_d).
    pub fn preserves_xyz(&self) -> bool {
        self.signs.iter().map(|&s| s as i32).product::<i32>() == 1
    }

    /// Action on a product state: `O_g φ_q = sign · φ_{q'}` with
    /// `q'_i = q[perm[i]]`, using `φ_m(−x) = (−1)^m φ_m(x)`.
    pub fn act(&self, state: ModeIndex) -> (ModeIndex, i32) {
        let q = state.as_array();
        let mut out = [0u32; 3];
        let mut sign = 1;
        for i in 0..3 {
            out[i] = q[self.perm[i] as usize];
            if self.signs[i] < 0 && out[i] % 2 == 1 {
                sign = -sign;
            }
        }
        (ModeIndex::from_array(out), sign)
    }
}

/// All 48 signed permutations of three axes.
fn all_signed_permutations() -> Vec<GroupElement> {
    const PERMS: [[u8; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(48);
    for perm in PERMS {
        for mask in 0..8u8 {
            let signs = [0, 1, 2].map(|b| if mask & (1 << b) != 0 { -1 } else { 1 });
            out.push(GroupElement::new(perm, signs));
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ConjugacyClass {
    pub label: &'static str,
    pub size: usize,
    pub representative: GroupElement,
    pub signature: ClassSignature,
}

#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub group: GroupName,
    pub classes: Vec<ConjugacyClass>,
    pub irreps: Vec<Irrep>,
    /// `chi[irrep][class]`.
    pub chi: Vec<Vec<i32>>,
}

impl CharacterTable {
    pub fn order(&self) -> usize {
        self.classes.iter().map(|c| c.size).sum()
    }

    pub fn irrep_row(&self, irrep: Irrep) -> Option<&[i32]> {
        self.irreps
            .iter()
            .position(|&i| i == irrep)
            .map(|r| self.chi[r].as_slice())
    }
}

/// A finite point group with its elements and character table.
#[derive(Clone, Debug)]
pub struct PointGroup {
    name: GroupName,
    elements: Vec<GroupElement>,
    class_of: Vec<usize>,
    table: CharacterTable,
}

impl PointGroup {
    /// Builds T_d or O_h, computing classes by conjugation and checking them
    /// against the tabulated class sizes.
    pub fn build(name: GroupName) -> Result<Self> {
        let elements: Vec<GroupElement> = all_signed_permutations()
            .into_iter()
            .filter(|g| name == GroupName::Oh || g.preserves_xyz())
            .collect();
        let index: HashMap<GroupElement, usize> =
            elements.iter().enumerate().map(|(i, g)| (*g, i)).collect();

        for a in &elements {
            for b in &elements {
                if !index.contains_key(&a.compose(b)) {
                    return Err(Error::GroupConstruction(format!("{name} is not closed")));
                }
            }
        }

        let mut class_id = vec![usize::MAX; elements.len()];
        let mut raw_classes: Vec<Vec<usize>> = Vec::new();
        for (i, g) in elements.iter().enumerate() {
            if class_id[i] != usize::MAX {
                continue;
            }
            let cid = raw_classes.len();
            let mut members = Vec::new();
            for h in &elements {
                let c = h.compose(g).compose(&h.inverse());
                let j = index[&c];
                if class_id[j] == usize::MAX {
                    class_id[j] = cid;
                    members.push(j);
                }
            }
            members.sort_unstable();
            raw_classes.push(members);
        }

        let (columns, characters): (&[tables::ClassColumn], Vec<(Irrep, Vec<i32>)>) = match name {
            GroupName::Td => (
                &tables::TD_CLASSES,
                tables::TD_CHARACTERS.iter().map(|(i, r)| (*i, r.to_vec())).collect(),
            ),
            GroupName::Oh => (
                &tables::OH_CLASSES,
                tables::OH_CHARACTERS.iter().map(|(i, r)| (*i, r.to_vec())).collect(),
            ),
        };
        if raw_classes.len() != columns.len() {
            return Err(Error::GroupConstruction(format!(
                "{name}: found {} classes, table has {}",
                raw_classes.len(),
                columns.len()
            )));
        }

        // Table column for each computed class.
        let mut column_of_class = vec![usize::MAX; raw_classes.len()];
        for (cid, members) in raw_classes.iter().enumerate() {
            let sig = elements[members[0]].signature();
            if members.iter().any(|&m| elements[m].signature() != sig) {
                return Err(Error::GroupConstruction(format!(
                    "{name}: class with mixed signatures"
                )));
            }
            let col = columns
                .iter()
                .position(|c| c.signature == sig)
                .ok_or_else(|| Error::GroupConstruction(format!("{name}: no column for {sig:?}")))?;
            if columns[col].size != members.len() {
                return Err(Error::GroupConstruction(format!(
                    "{name}: class {} has {} elements, table says {}",
                    columns[col].label,
                    members.len(),
                    columns[col].size
                )));
            }
            column_of_class[cid] = col;
        }

        let mut classes: Vec<ConjugacyClass> = columns
            .iter()
            .map(|c| ConjugacyClass {
                label: c.label,
                size: c.size,
                representative: GroupElement::identity(),
                signature: c.signature,
            })
            .collect();
        for (cid, members) in raw_classes.iter().enumerate() {
            classes[column_of_class[cid]].representative = elements[members[0]];
        }
        let class_of = class_id.iter().map(|&c| column_of_class[c]).collect();

        let (irreps, chi) = characters.into_iter().unzip();
        Ok(Self {
            name,
            elements,
            class_of,
            table: CharacterTable {
                group: name,
                classes,
                irreps,
                chi,
            },
        })
    }

    pub fn name(&self) -> GroupName {
        self.name
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn table(&self) -> &CharacterTable {
        &self.table
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.table.irreps
    }

    /// Index into `table().classes` of the class containing `g`.
    pub fn class_index(&self, g: &GroupElement) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| e == g)
            .map(|i| self.class_of[i])
    }

    fn check_irrep(&self, irrep: Irrep) -> Result<&[i32]> {
        self.table.irrep_row(irrep).ok_or_else(|| Error::ForeignIrrep {
            irrep: irrep.to_string(),
            group: self.name.to_string(),
        })
    }

    /// Character of `irrep` at the element with index `element`.
    pub fn character(&self, irrep: Irrep, element: usize) -> Result<i32> {
        Ok(self.check_irrep(irrep)?[self.class_of[element]])
    }

    /// Unnormalized projection `Σ_g χ(g) O_g f` of a single product state.
    fn project_state(&self, row: &[i32], seed: ModeIndex) -> Vec<(ModeIndex, i64)> {
        self.elements
            .iter()
            .zip(&self.class_of)
            .filter(|(_, &c)| row[c] != 0)
            .map(|(g, &c)| {
                let (s, sign) = g.act(seed);
                (s, (row[c] * sign) as i64)
            })
            .collect()
    }

    /// Symmetry-adapted vectors spanning the full `irrep` isotypic subspace
    /// of `states`, which must be a union of complete permutation orbits.
    ///
    /// Seeds are processed in input order; a projection that is linearly
    /// dependent on earlier ones is discarded.
    pub fn project(&self, states: &[ModeIndex], irrep: Irrep) -> Result<Vec<SymVector>> {
        let row = self.check_irrep(irrep)?.to_vec();
        Ok(self.project_with(states, |seed| self.project_state(&row, seed)))
    }

    /// Like [`project`](Self::project) but keeps one partner per irrep copy:
    /// the isotypic vectors are further projected onto a one-dimensional
    /// irrep of the C2v subgroup `{E, C2z, σ(x↔y), σ(x↔−y)}` that occurs
    /// exactly once in the restriction of `irrep`. The resulting Hamiltonian
    /// block carries each eigenvalue once instead of `dim(irrep)` times.
    pub fn project_single_partner(&self, states: &[ModeIndex], irrep: Irrep) -> Result<Vec<SymVector>> {
        let row = self.check_irrep(irrep)?.to_vec();
        let (sub, sub_chi) = self.partner_selector(irrep)?;
        Ok(self.project_with(states, |seed| {
            let iso = self.project_state(&row, seed);
            let mut out = Vec::with_capacity(iso.len() * sub.len());
            for (h, &w) in sub.iter().zip(&sub_chi) {
                for &(s, c) in &iso {
                    let (t, sign) = h.act(s);
                    out.push((t, c * (w * sign) as i64));
                }
            }
            out
        }))
    }

    fn project_with(
        &self,
        states: &[ModeIndex],
        project_seed: impl Fn(ModeIndex) -> Vec<(ModeIndex, i64)>,
    ) -> Vec<SymVector> {
        let mut out: Vec<SymVector> = Vec::new();
        // Vectors from different orbits are orthogonal already.
        let mut by_orbit: HashMap<[u32; 3], Vec<usize>> = HashMap::new();
        for &seed in states {
            let Some(v) = SymVector::from_terms(project_seed(seed)) else {
                continue;
            };
            let key = seed.orbit_key();
            let prior: Vec<SymVector> = by_orbit
                .get(&key)
                .map(|ix| ix.iter().map(|&i| out[i].clone()).collect())
                .unwrap_or_default();
            if let Some(w) = v.orthogonalize_against(&prior) {
                by_orbit.entry(key).or_default().push(out.len());
                out.push(w);
            }
        }
        out
    }

    /// C2v subgroup elements and the characters of the one-dimensional
    /// subgroup irrep used to select a single partner of `irrep`.
    fn partner_selector(&self, irrep: Irrep) -> Result<([GroupElement; 4], [i32; 4])> {
        let sub = [
            GroupElement::identity(),
            GroupElement::new([0, 1, 2], [-1, -1, 1]),
            GroupElement::new([1, 0, 2], [1, 1, 1]),
            GroupElement::new([1, 0, 2], [-1, -1, 1]),
        ];
        const C2V: [[i32; 4]; 4] = [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]];
        let row = self.check_irrep(irrep)?;
        let restricted: Vec<i32> = sub
            .iter()
            .map(|h| row[self.class_index(h).expect("C2v lies in both groups")])
            .collect();
        for chi in C2V {
            let mult: i32 = restricted.iter().zip(chi).map(|(a, b)| a * b).sum();
            if mult == 4 {
                return Ok((sub, chi));
            }
        }
        Err(Error::GroupConstruction(format!(
            "no single-partner selector for {irrep}"
        )))
    }

    /// Multiplicity of each irrep in the representation carried by `states`
    /// (a union of complete orbits), from the character reduction formula.
    pub fn irrep_content(&self, states: &[ModeIndex]) -> Vec<(Irrep, usize)> {
        let mut perm_char = vec![0i64; self.elements.len()];
        for (gi, g) in self.elements.iter().enumerate() {
            for &s in states {
                let (t, sign) = g.act(s);
                if t == s {
                    perm_char[gi] += sign as i64;
                }
            }
        }
        let order = self.order() as i64;
        self.table
            .irreps
            .iter()
            .zip(&self.table.chi)
            .filter_map(|(&irrep, row)| {
                let sum: i64 = perm_char
                    .iter()
                    .zip(&self.class_of)
                    .map(|(&pc, &c)| pc * row[c] as i64)
                    .sum();
                debug_assert_eq!(sum % order, 0, "non-integral multiplicity");
                let mult = (sum / order) as usize;
                (mult > 0).then_some((irrep, mult))
            })
            .collect()
    }

    /// Irrep content of the orbit `{q}_P`.
    pub fn orbit_content(&self, q: [u32; 3]) -> Vec<(Irrep, usize)> {
        self.irrep_content(&orbit_states(q))
    }
}

/// O_h → T_d correlation. Under `H₀` symmetry O_h, the perturbed eigenstates
/// carry the T_d label obtained by restricting characters to the subgroup.
pub fn branch_oh_to_td(label: Irrep) -> Result<Irrep> {
    use Irrep::*;
    Ok(match label {
        A1g | A2u => A1,
        A2g | A1u => A2,
        Eg | Eu => E,
        T1g | T2u => T1,
        T2g | T1u => T2,
        other => {
            return Err(Error::ForeignIrrep {
                irrep: other.to_string(),
                group: GroupName::Oh.to_string(),
            })
        }
    })
}

/// Multiset rendering like `A1, E, E` used by the classifier.
pub fn format_content(content: &[(Irrep, usize)]) -> String {
    content
        .iter()
        .flat_map(|&(i, n)| std::iter::repeat_n(i.name(), n))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Parses an orbit pattern such as `2n,2m,2k+1` and instantiates it with
/// distinct values per letter (in order of first appearance: 0, 1, 2, …).
pub fn parse_orbit_pattern(pattern: &str) -> Result<[u32; 3]> {
    let parts: Vec<&str> = pattern.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::UnknownLabel(pattern.to_string()));
    }
    let mut letters: Vec<char> = Vec::new();
    let mut out = [0u32; 3];
    for (slot, part) in parts.iter().enumerate() {
        let expr = IndexExpr::parse(part).ok_or_else(|| Error::UnknownLabel(part.to_string()))?;
        let id = match letters.iter().position(|&c| c == expr.letter) {
            Some(i) => i,
            None => {
                letters.push(expr.letter);
                letters.len() - 1
            }
        };
        out[slot] = expr.eval(id as u32);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::level_states;

    fn td() -> PointGroup {
        PointGroup::build(GroupName::Td).unwrap()
    }

    fn oh() -> PointGroup {
        PointGroup::build(GroupName::Oh).unwrap()
    }

    #[test]
    fn class_sizes_match_tables() {
        let sizes: Vec<(&str, usize)> = td().table().classes.iter().map(|c| (c.label, c.size)).collect();
        assert_eq!(sizes, vec![("E", 1), ("8C3", 8), ("3C2", 3), ("6S4", 6), ("6σd", 6)]);
        let g = oh();
        let i = g.table().classes.iter().find(|c| c.label == "i").unwrap();
        assert_eq!(i.size, 1);
        assert_eq!(g.order(), 48);
        assert_eq!(td().order(), 24);
    }

    #[test]
    fn inversion_is_central() {
        let inv = GroupElement::inversion();
        assert_eq!(inv.det(), -1);
        assert_eq!(inv.trace(), -3);
        let g = oh();
        for h in g.elements() {
            assert_eq!(h.compose(&inv), inv.compose(h));
        }
        assert!(!inv.preserves_xyz());
    }

    #[test]
    fn character_orthogonality() {
        for g in [td(), oh()] {
            let t = g.table();
            let order = t.order() as i32;
            let dims: i32 = t.irreps.iter().map(|i| (i.dim() * i.dim()) as i32).sum();
            assert_eq!(dims, order);
            for (a, ra) in t.chi.iter().enumerate() {
                assert_eq!(ra[0] as usize, t.irreps[a].dim());
                for (b, rb) in t.chi.iter().enumerate() {
                    let s: i32 = t.classes.iter().enumerate().map(|(c, cl)| cl.size as i32 * ra[c] * rb[c]).sum();
                    assert_eq!(s, if a == b { order } else { 0 });
                }
            }
        }
    }

    #[test]
    fn action_examples() {
        let s = ModeIndex::new;
        assert_eq!(GroupElement::inversion().act(s(1, 0, 0)), (s(1, 0, 0), -1));
        let swap = GroupElement::new([1, 0, 2], [1, 1, 1]);
        assert_eq!(swap.act(s(2, 1, 0)), (s(1, 2, 0), 1));
        let c2z = GroupElement::new([0, 1, 2], [-1, -1, 1]);
        assert_eq!(c2z.act(s(1, 1, 3)), (s(1, 1, 3), 1));
    }

    #[test]
    fn action_is_a_homomorphism() {
        let g = oh();
        let states = level_states(4);
        for a in g.elements() {
            for b in g.elements() {
                let ab = a.compose(b);
                for &s in &states {
                    let (t1, s1) = b.act(s);
                    let (t2, s2) = a.act(t1);
                    assert_eq!(ab.act(s), (t2, s1 * s2));
                }
            }
        }
    }

    #[test]
    fn projection_small_levels() {
        let g = td();
        let a1 = g.project(&level_states(0), Irrep::A1).unwrap();
        assert_eq!(a1, vec![SymVector::unit(ModeIndex::new(0, 0, 0))]);
        let t2 = g.project(&level_states(1), Irrep::T2).unwrap();
        assert_eq!(t2.len(), 3);
        assert!(t2.iter().all(|v| v.len() == 1 && v.norm2() == 1));
        assert!(g.project(&level_states(1), Irrep::A1).unwrap().is_empty());
    }

    #[test]
    fn projection_rejects_foreign_irrep() {
        assert!(matches!(
            td().project(&level_states(1), Irrep::T1u),
            Err(Error::ForeignIrrep { .. })
        ));
    }

    /// Σ_g χ(g) D(g) over a level, as an integer matrix.
    fn projector_matrix(g: &PointGroup, states: &[ModeIndex], irrep: Irrep) -> Vec<Vec<i64>> {
        let index: HashMap<ModeIndex, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let n = states.len();
        let mut m = vec![vec![0i64; n]; n];
        for (gi, el) in g.elements().iter().enumerate() {
            let chi = g.character(irrep, gi).unwrap() as i64;
            for (j, &s) in states.iter().enumerate() {
                let (t, sign) = el.act(s);
                m[index[&t]][j] += chi * sign as i64;
            }
        }
        m
    }

    fn matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
        let n = a.len();
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
            .collect()
    }

    #[test]
    fn projectors_are_orthogonal_idempotents() {
        for g in [td(), oh()] {
            let order = g.order() as i64;
            for nu in [3u32, 6] {
                let states = level_states(nu);
                let mats: Vec<_> = g.irreps().iter().map(|&i| projector_matrix(&g, &states, i)).collect();
                for (a, ma) in mats.iter().enumerate() {
                    let d = g.irreps()[a].dim() as i64;
                    for (b, mb) in mats.iter().enumerate() {
                        let prod = matmul(ma, mb);
                        if a == b {
                            let lhs: Vec<Vec<i64>> = prod.iter().map(|r| r.iter().map(|x| x * d).collect()).collect();
                            let rhs: Vec<Vec<i64>> = ma.iter().map(|r| r.iter().map(|x| x * order).collect()).collect();
                            assert_eq!(lhs, rhs);
                        } else {
                            assert!(prod.iter().flatten().all(|&x| x == 0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn projection_dimensions_sum_to_degeneracy() {
        let g = td();
        for nu in 0..=9u32 {
            let states = level_states(nu);
            let mut total = 0;
            for &irrep in g.irreps() {
                let vs = g.project(&states, irrep).unwrap();
                assert!(vs.iter().all(|v| v.has_uniform_parity() && v.has_uniform_level()));
                let single = g.project_single_partner(&states, irrep).unwrap();
                assert_eq!(vs.len(), single.len() * irrep.dim());
                let content = g.irrep_content(&states);
                let mult = content.iter().find(|c| c.0 == irrep).map_or(0, |c| c.1);
                assert_eq!(single.len(), mult);
                total += vs.len();
            }
            assert_eq!(total as u32, (nu + 1) * (nu + 2) / 2);
        }
    }

    #[test]
    fn branching_matches_character_restriction() {
        let o = oh();
        let t = td();
        for &irrep in o.irreps() {
            let row = o.table().irrep_row(irrep).unwrap();
            // Restricted character on each T_d element.
            let restricted: Vec<i32> = t
                .elements()
                .iter()
                .map(|e| row[o.class_index(e).unwrap()])
                .collect();
            let mut hits = Vec::new();
            for &ti in t.irreps() {
                let s: i32 = (0..t.order()).map(|k| restricted[k] * t.character(ti, k).unwrap()).sum();
                assert_eq!(s % 24, 0);
                if s != 0 {
                    hits.push((ti, s / 24));
                }
            }
            assert_eq!(hits, vec![(branch_oh_to_td(irrep).unwrap(), 1)], "{irrep}");
        }
        assert_eq!(branch_oh_to_td(Irrep::A2u).unwrap(), Irrep::A1);
        assert_eq!(branch_oh_to_td(Irrep::T2u).unwrap(), Irrep::T1);
        assert_eq!(branch_oh_to_td(Irrep::Eg).unwrap(), Irrep::E);
        assert!(branch_oh_to_td(Irrep::A1).is_err());
    }

    #[test]
    fn orbit_patterns() {
        assert_eq!(parse_orbit_pattern("2n,2m,2k+1").unwrap(), [0, 2, 5]);
        assert_eq!(parse_orbit_pattern("2n+1,2n+1,2n+1").unwrap(), [1, 1, 1]);
        assert_eq!(format_content(&td().orbit_content([0, 2, 5])), "T1, T2");
        assert_eq!(format_content(&oh().orbit_content([1, 1, 1])), "A2u");
        assert_eq!(format_content(&oh().orbit_content([1, 1, 2])), "T2g");
        assert_eq!(format_content(&td().orbit_content([0, 2, 2])), "A1, E");
    }
}
