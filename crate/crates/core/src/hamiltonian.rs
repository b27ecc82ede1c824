//! Per-irrep matrix blocks of `H = H₀ + i·g·xyz`.
//!
//! Entries are contracted directly from the integer coefficients of the
//! symmetry-adapted vectors and the banded one-dimensional factors; the full
//! product-basis matrix exists only as an oracle.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use faer::{c64, Mat};

use crate::basis::{enumerate, ModeIndex, SymVector, TruncationPolicy};
use crate::error::{Error, Result};
use crate::oscillator1d::{quartic_1d_hamiltonian, x_matrix, Banded1D};
use crate::pointgroup::{GroupName, Irrep, PointGroup};

/// Largest tolerated `|M − Mᵀ|` (relative to the largest entry) before
/// symmetrization.
pub const ASYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// `p² + q²` per axis, truncated by total quanta.
    Harmonic,
    /// `p² + q⁴` per axis, truncated per mode.
    Quartic,
}

impl ModelKind {
    pub fn default_limit(&self) -> u32 {
        match self {
            ModelKind::Harmonic => 20,
            ModelKind::Quartic => 16,
        }
    }

    pub fn truncation(&self, limit: u32) -> TruncationPolicy {
        match self {
            ModelKind::Harmonic => TruncationPolicy::TotalQuanta(limit),
            ModelKind::Quartic => TruncationPolicy::PerMode(limit),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Harmonic => "harmonic",
            ModelKind::Quartic => "quartic",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "harmonic" => Ok(ModelKind::Harmonic),
            "quartic" => Ok(ModelKind::Quartic),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

/// Which symmetry-adapted vectors span a block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PartnerMode {
    /// The whole isotypic subspace; each eigenvalue appears `dim(irrep)` times.
    #[default]
    All,
    /// One partner per irrep copy; each eigenvalue appears once.
    Single,
}

impl fmt::Display for PartnerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartnerMode::All => "all",
            PartnerMode::Single => "single",
        })
    }
}

impl FromStr for PartnerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(PartnerMode::All),
            "single" => Ok(PartnerMode::Single),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub g: f64,
    pub truncation: TruncationPolicy,
    pub partners: PartnerMode,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, g: f64, truncation: TruncationPolicy) -> Result<Self> {
        if !g.is_finite() {
            return Err(Error::InvalidModel(format!("coupling g = {g} is not finite")));
        }
        match (kind, truncation) {
            (ModelKind::Harmonic, TruncationPolicy::TotalQuanta(_))
            | (ModelKind::Quartic, TruncationPolicy::PerMode(_)) => Ok(Self {
                kind,
                g,
                truncation,
                partners: PartnerMode::All,
            }),
            _ => Err(Error::InvalidModel(format!(
                "{kind} model cannot use truncation {truncation:?}"
            ))),
        }
    }

    pub fn harmonic(limit: u32, g: f64) -> Result<Self> {
        Self::new(ModelKind::Harmonic, g, TruncationPolicy::TotalQuanta(limit))
    }

    pub fn quartic(limit: u32, g: f64) -> Result<Self> {
        Self::new(ModelKind::Quartic, g, TruncationPolicy::PerMode(limit))
    }

    pub fn with_g(self, g: f64) -> Result<Self> {
        Self::new(self.kind, g, self.truncation).map(|m| m.with_partners(self.partners))
    }

    pub fn with_limit(self, limit: u32) -> Self {
        Self {
            truncation: self.truncation.with_limit(limit),
            ..self
        }
    }

    pub fn with_partners(self, partners: PartnerMode) -> Self {
        Self { partners, ..self }
    }
}

/// Banded one-dimensional factors for a truncation, applied to product states.
#[derive(Clone, Debug)]
pub struct ProductOperators {
    truncation: TruncationPolicy,
    x: Banded1D,
    h1: Option<Banded1D>,
}

impl ProductOperators {
    pub fn new(kind: ModelKind, truncation: TruncationPolicy) -> Self {
        let n_max = truncation.limit() as usize;
        Self {
            truncation,
            x: x_matrix(n_max),
            h1: (kind == ModelKind::Quartic).then(|| quartic_1d_hamiltonian(n_max)),
        }
    }

    fn for_states(kind: ModelKind, states: impl Iterator<Item = ModeIndex>) -> Self {
        let n_max = states.map(|s| s.max_quanta()).max().unwrap_or(0) + 1;
        let truncation = TruncationPolicy::PerMode(n_max);
        Self::new(kind, truncation)
    }

    pub fn truncation(&self) -> TruncationPolicy {
        self.truncation
    }

    /// `H₀|s⟩` restricted to the truncation.
    pub fn apply_h0(&self, s: ModeIndex, out: &mut Vec<(ModeIndex, f64)>) {
        out.clear();
        match &self.h1 {
            None => out.push((s, (2 * s.level() + 3) as f64)),
            Some(h1) => {
                let q = s.as_array();
                let diag: f64 = q.iter().map(|&i| h1.get(i as usize, i as usize)).sum();
                out.push((s, diag));
                for axis in 0..3 {
                    for (j, v) in h1.row_entries(q[axis] as usize) {
                        if j == q[axis] as usize {
                            continue;
                        }
                        let mut t = q;
                        t[axis] = j as u32;
                        let t = ModeIndex::from_array(t);
                        if self.truncation.contains(&t) {
                            out.push((t, v));
                        }
                    }
                }
            }
        }
    }

    /// `xyz|s⟩` restricted to the truncation.
    pub fn apply_xyz(&self, s: ModeIndex, out: &mut Vec<(ModeIndex, f64)>) {
        out.clear();
        let q = s.as_array();
        let rows: [Vec<(usize, f64)>; 3] = q.map(|i| {
            let i = i as usize;
            let mut r = Vec::with_capacity(2);
            if i > 0 {
                r.push((i - 1, self.x.get(i - 1, i)));
            }
            if i + 1 < self.x.order() {
                r.push((i + 1, self.x.get(i, i + 1)));
            }
            r
        });
        for &(a, va) in &rows[0] {
            for &(b, vb) in &rows[1] {
                for &(c, vc) in &rows[2] {
                    let t = ModeIndex::new(a as u32, b as u32, c as u32);
                    if self.truncation.contains(&t) {
                        out.push((t, va * vb * vc));
                    }
                }
            }
        }
    }

    fn apply(&self, op: Operator, s: ModeIndex, out: &mut Vec<(ModeIndex, f64)>) {
        match op {
            Operator::H0 => self.apply_h0(s, out),
            Operator::Xyz => self.apply_xyz(s, out),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Operator {
    H0,
    Xyz,
}

fn element(ops: &ProductOperators, op: Operator, u: &SymVector, v: &SymVector) -> f64 {
    let mut buf = Vec::new();
    let mut acc = 0.0;
    for (s, c) in v.terms() {
        ops.apply(op, s, &mut buf);
        for &(t, val) in &buf {
            let cu = u.coefficient(&t);
            if cu != 0 {
                acc += (cu * c) as f64 * val;
            }
        }
    }
    acc / (u.norm2() as f64 * v.norm2() as f64).sqrt()
}

/// `⟨u|xyz|v⟩` between normalized symmetry-adapted vectors.
pub fn xyz_element(u: &SymVector, v: &SymVector) -> f64 {
    let ops = ProductOperators::for_states(ModelKind::Harmonic, u.terms().chain(v.terms()).map(|(s, _)| s));
    element(&ops, Operator::Xyz, u, v)
}

/// `⟨u|H₀|v⟩` for the unperturbed part of `model`.
pub fn h0_element(model: &ModelSpec, u: &SymVector, v: &SymVector) -> f64 {
    let ops = ProductOperators::for_states(model.kind, u.terms().chain(v.terms()).map(|(s, _)| s));
    element(&ops, Operator::H0, u, v)
}

/// The real parts `H₀` and `xyz` of one irrep block, independent of `g`.
#[derive(Clone, Debug)]
pub struct BlockOperators {
    pub irrep: Irrep,
    pub kind: ModelKind,
    pub truncation: TruncationPolicy,
    pub partners: PartnerMode,
    pub basis: Vec<SymVector>,
    pub h0: Mat<f64>,
    pub xyz: Mat<f64>,
}

impl BlockOperators {
    pub fn build(model: &ModelSpec, irrep: Irrep) -> Result<Self> {
        let group = PointGroup::build(GroupName::Td)?;
        Self::build_in(&group, model, irrep)
    }

    /// Like [`build`](Self::build) with a prebuilt T_d group.
    pub fn build_in(group: &PointGroup, model: &ModelSpec, irrep: Irrep) -> Result<Self> {
        let states = enumerate(model.truncation);
        let basis = match model.partners {
            PartnerMode::All => group.project(&states, irrep)?,
            PartnerMode::Single => group.project_single_partner(&states, irrep)?,
        };
        Self::from_basis(model, irrep, basis)
    }

    /// Block operators over an explicit basis (used for fault injection and
    /// cross-irrep checks).
    pub fn from_basis(model: &ModelSpec, irrep: Irrep, basis: Vec<SymVector>) -> Result<Self> {
        let ops = ProductOperators::new(model.kind, model.truncation);
        let h0 = contract(&ops, Operator::H0, &basis, &basis)?;
        let xyz = contract(&ops, Operator::Xyz, &basis, &basis)?;
        Ok(Self {
            irrep,
            kind: model.kind,
            truncation: model.truncation,
            partners: model.partners,
            basis,
            h0,
            xyz,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn matrix(&self, g: f64) -> Mat<c64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| c64::new(self.h0[(i, j)], g * self.xyz[(i, j)]))
    }

    pub fn block(&self, g: f64) -> HamiltonianBlock {
        HamiltonianBlock {
            irrep: self.irrep,
            g,
            basis: self.basis.clone(),
            matrix: self.matrix(g),
        }
    }
}

/// `M[a][b] = ⟨rows_a|op|cols_b⟩`, symmetrized when `rows` and `cols`
/// coincide.
fn contract(ops: &ProductOperators, op: Operator, rows: &[SymVector], cols: &[SymVector]) -> Result<Mat<f64>> {
    let mut members: HashMap<ModeIndex, Vec<(usize, i64)>> = HashMap::new();
    for (a, u) in rows.iter().enumerate() {
        for (s, c) in u.terms() {
            members.entry(s).or_default().push((a, c));
        }
    }
    let mut m = Mat::<f64>::zeros(rows.len(), cols.len());
    let mut buf = Vec::new();
    for (b, v) in cols.iter().enumerate() {
        for (s, c) in v.terms() {
            ops.apply(op, s, &mut buf);
            for &(t, val) in &buf {
                if let Some(list) = members.get(&t) {
                    for &(a, cu) in list {
                        m[(a, b)] += (cu * c) as f64 * val;
                    }
                }
            }
        }
    }
    // One square root of the integer product keeps diagonal entries exact.
    for b in 0..cols.len() {
        for a in 0..rows.len() {
            m[(a, b)] /= ((rows[a].norm2() * cols[b].norm2()) as f64).sqrt();
        }
    }
    if std::ptr::eq(rows, cols) {
        symmetrize(&mut m)?;
    }
    Ok(m)
}

fn symmetrize(m: &mut Mat<f64>) -> Result<()> {
    let n = m.nrows();
    let mut scale = 1.0f64;
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            scale = scale.max(m[(i, j)].abs());
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > ASYMMETRY_TOL * scale {
        return Err(Error::Asymmetric(worst));
    }
    for j in 0..n {
        for i in j + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    Ok(())
}

/// Largest `|⟨u|H₀|v⟩|` or `|⟨u|xyz|v⟩|` between two sets of vectors.
pub fn cross_elements(model: &ModelSpec, us: &[SymVector], vs: &[SymVector]) -> Result<f64> {
    let ops = ProductOperators::new(model.kind, model.truncation);
    let mut worst = 0.0f64;
    for op in [Operator::H0, Operator::Xyz] {
        let m = contract(&ops, op, us, vs)?;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    Ok(worst)
}

/// `⟨u|xyz|v⟩` for every pair, within the truncation of `model`.
pub fn xyz_matrix(model: &ModelSpec, us: &[SymVector], vs: &[SymVector]) -> Result<Mat<f64>> {
    let ops = ProductOperators::new(model.kind, model.truncation);
    contract(&ops, Operator::Xyz, us, vs)
}

/// `H^S(g)` over the symmetry-adapted basis of one irrep.
#[derive(Clone, Debug)]
pub struct HamiltonianBlock {
    pub irrep: Irrep,
    pub g: f64,
    pub basis: Vec<SymVector>,
    pub matrix: Mat<c64>,
}

impl HamiltonianBlock {
    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    /// Writes `# irrep=<label> g=<value> n=<order>` followed by one
    /// `row col re im` line per nonzero entry.
    pub fn write_dump(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# irrep={} g={} n={}", self.irrep, self.g, self.order())?;
        let n = self.order();
        for i in 0..n {
            for j in 0..n {
                let z = self.matrix[(i, j)];
                if z.re != 0.0 || z.im != 0.0 {
                    writeln!(w, "{i} {j} {:.17e} {:.17e}", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }
}

pub fn assemble_block(model: &ModelSpec, irrep: Irrep) -> Result<HamiltonianBlock> {
    Ok(BlockOperators::build(model, irrep)?.block(model.g))
}

/// Full product-basis matrix in [`enumerate`] order, without symmetry
/// adaptation.
pub fn assemble_full(model: &ModelSpec) -> Mat<c64> {
    let states = enumerate(model.truncation);
    let index: HashMap<ModeIndex, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let ops = ProductOperators::new(model.kind, model.truncation);
    let n = states.len();
    let mut m = Mat::<c64>::zeros(n, n);
    let mut buf = Vec::new();
    for (j, &s) in states.iter().enumerate() {
        ops.apply_h0(s, &mut buf);
        for &(t, v) in &buf {
            m[(index[&t], j)].re += v;
        }
        ops.apply_xyz(s, &mut buf);
        for &(t, v) in &buf {
            m[(index[&t], j)].im += model.g * v;
        }
    }
    m
}

/// Real sparse operator over a list of product states, stored by rows.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseOperator {
    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn trace(&self) -> f64 {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().filter(|e| e.0 == i).map(|e| e.1).sum::<f64>())
            .sum()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.order();
        let mut m = Mat::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Frobenius norm of `[self, other]` restricted to rows and columns with
    /// `keep[i]` set.
    pub fn commutator_norm(&self, other: &SparseOperator, keep: &[bool]) -> f64 {
        let n = self.order();
        let mut acc = 0.0;
        let mut row = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        for i in (0..n).filter(|&i| keep[i]) {
            for (a, b, sign) in [(self, other, 1.0), (other, self, -1.0)] {
                for &(k, v) in a.row(i) {
                    for &(j, w) in b.row(k) {
                        if row[j] == 0.0 {
                            touched.push(j);
                        }
                        row[j] += sign * v * w;
                    }
                }
            }
            for &j in &touched {
                if keep[j] {
                    acc += row[j] * row[j];
                }
                row[j] = 0.0;
            }
            touched.clear();
        }
        acc.sqrt()
    }
}

/// The quartic `H₀` together with the operators
/// `O₁ = 2h_x − h_y − h_z` and `O₂ = 2h_y − h_x − h_z`, where
/// `h_a = p_a² + a⁴`.
#[derive(Clone, Debug)]
pub struct DynamicalOperators {
    pub states: Vec<ModeIndex>,
    pub h0: SparseOperator,
    pub o1: SparseOperator,
    pub o2: SparseOperator,
}

impl DynamicalOperators {
    pub fn build(truncation: TruncationPolicy) -> Result<Self> {
        let TruncationPolicy::PerMode(limit) = truncation else {
            return Err(Error::InvalidModel("dynamical operators need per-mode truncation".into()));
        };
        let states = enumerate(truncation);
        let index: HashMap<ModeIndex, usize> = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let h1 = quartic_1d_hamiltonian(limit as usize);
        let build = |weights: [f64; 3]| {
            let rows = states
                .iter()
                .map(|s| {
                    let q = s.as_array();
                    let mut row: Vec<(usize, f64)> = Vec::new();
                    for axis in 0..3 {
                        for (j, v) in h1.row_entries(q[axis] as usize) {
                            let mut t = q;
                            t[axis] = j as u32;
                            row.push((index[&ModeIndex::from_array(t)], weights[axis] * v));
                        }
                    }
                    row.sort_by_key(|e| e.0);
                    row.dedup_by(|b, a| {
                        if a.0 == b.0 {
                            a.1 += b.1;
                            true
                        } else {
                            false
                        }
                    });
                    row.retain(|e| e.1 != 0.0);
                    row
                })
                .collect();
            SparseOperator { rows }
        };
        Ok(Self {
            h0: build([1.0, 1.0, 1.0]),
            o1: build([2.0, -1.0, -1.0]),
            o2: build([-1.0, 2.0, -1.0]),
            states,
        })
    }

    /// States at least four quanta from every truncation edge.
    pub fn interior_mask(&self, limit: u32) -> Vec<bool> {
        self.states
            .iter()
            .map(|s| limit >= 4 && s.max_quanta() <= limit - 4)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{eig_all, sort_spectrum};

    #[test]
    fn model_validation() {
        assert!(ModelSpec::new(ModelKind::Harmonic, 0.1, TruncationPolicy::PerMode(4)).is_err());
        assert!(ModelSpec::new(ModelKind::Quartic, 0.1, TruncationPolicy::TotalQuanta(4)).is_err());
        assert!(ModelSpec::harmonic(4, f64::NAN).is_err());
        assert!(ModelSpec::quartic(4, 0.3).is_ok());
    }

    #[test]
    fn xyz_elements() {
        let o = SymVector::unit(ModeIndex::new(0, 0, 0));
        let v = SymVector::unit(ModeIndex::new(1, 1, 1));
        assert!((xyz_element(&o, &v) - 2f64.powf(-1.5)).abs() < 1e-15);
        assert_eq!(xyz_element(&o, &SymVector::unit(ModeIndex::new(2, 0, 0))), 0.0);
        let a = SymVector::from_terms([(ModeIndex::new(2, 0, 0), 1), (ModeIndex::new(0, 2, 0), 1)]).unwrap();
        assert_eq!(xyz_element(&a, &o), 0.0);
    }

    #[test]
    fn h0_elements() {
        let h = ModelSpec::harmonic(4, 0.0).unwrap();
        let o = SymVector::unit(ModeIndex::new(0, 0, 0));
        assert_eq!(h0_element(&h, &o, &o), 3.0);
        let v = SymVector::from_terms([(ModeIndex::new(2, 0, 0), 1), (ModeIndex::new(0, 1, 1), -1)]).unwrap();
        assert!((h0_element(&h, &v, &v) - 7.0).abs() < 1e-15);
        let q = ModelSpec::quartic(60, 0.0).unwrap();
        assert!((h0_element(&q, &o, &o) - 3.75).abs() < 1e-14);
    }

    #[test]
    fn a1_block_at_zero_coupling() {
        // {0,0,0} at ν=0, the A1 part of {2,0,0}_P at ν=2, {1,1,1} at ν=3.
        let model = ModelSpec::harmonic(3, 0.0).unwrap();
        let b = assemble_block(&model, Irrep::A1).unwrap();
        assert_eq!(b.order(), 3);
        let diag: Vec<f64> = (0..3).map(|i| b.matrix[(i, i)].re).collect();
        assert_eq!(diag, vec![3.0, 7.0, 9.0]);
        assert_eq!(assemble_block(&model.with_limit(2), Irrep::A1).unwrap().order(), 2);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(b.matrix[(i, j)], c64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn blocks_are_complex_symmetric_and_parity_graded() {
        for model in [ModelSpec::harmonic(7, 0.4).unwrap(), ModelSpec::quartic(5, 0.4).unwrap()] {
            for irrep in Irrep::TD {
                let b = BlockOperators::build(&model, irrep).unwrap();
                let m = b.matrix(model.g);
                for i in 0..b.dim() {
                    for j in 0..b.dim() {
                        assert_eq!(m[(i, j)], m[(j, i)]);
                        let same = b.basis[i].parity() == b.basis[j].parity();
                        if same {
                            assert_eq!(m[(i, j)].im, 0.0);
                        } else {
                            assert_eq!(m[(i, j)].re, 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn full_matrix_small() {
        let m = assemble_full(&ModelSpec::harmonic(1, 0.0).unwrap());
        assert_eq!(m.nrows(), 4);
        let mut v = eig_all(m.as_ref(), false).unwrap().values;
        sort_spectrum(&mut v);
        for (a, b) in v.iter().zip([3.0, 5.0, 5.0, 5.0]) {
            assert!((a.re - b).abs() < 1e-14 && a.im.abs() < 1e-14);
        }
        let full = assemble_full(&ModelSpec::quartic(3, 0.7).unwrap());
        let tr: c64 = (0..full.nrows()).map(|i| full[(i, i)]).sum();
        let tr0: c64 = {
            let m0 = assemble_full(&ModelSpec::quartic(3, 0.0).unwrap());
            (0..m0.nrows()).map(|i| m0[(i, i)]).sum()
        };
        assert_eq!(tr, tr0);
    }

    #[test]
    fn different_irreps_do_not_mix() {
        let group = PointGroup::build(GroupName::Td).unwrap();
        for model in [ModelSpec::harmonic(6, 0.0).unwrap(), ModelSpec::quartic(4, 0.0).unwrap()] {
            let states = enumerate(model.truncation);
            let bases: Vec<Vec<SymVector>> = Irrep::TD.iter().map(|&s| group.project(&states, s).unwrap()).collect();
            for a in 0..5 {
                for b in a + 1..5 {
                    assert!(cross_elements(&model, &bases[a], &bases[b]).unwrap() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dynamical_operators_commute_and_are_traceless() {
        let ops = DynamicalOperators::build(TruncationPolicy::PerMode(8)).unwrap();
        let keep = ops.interior_mask(8);
        assert!(ops.o1.commutator_norm(&ops.h0, &keep) < 1e-10);
        assert!(ops.o2.commutator_norm(&ops.h0, &keep) < 1e-10);
        assert!(ops.o1.trace().abs() < 1e-9);
        assert!(ops.o2.trace().abs() < 1e-9);
        let d = ops.o1.to_dense();
        for i in 0..d.nrows() {
            for j in 0..i {
                assert_eq!(d[(i, j)], d[(j, i)]);
            }
        }
    }

    #[test]
    fn commutator_detects_noncommuting_pair() {
        let ops = DynamicalOperators::build(TruncationPolicy::PerMode(6)).unwrap();
        let keep = vec![true; ops.states.len()];
        // x-only hop against the x oscillator part does not commute in general.
        let mut rows = vec![Vec::new(); ops.states.len()];
        rows[0].push((1, 1.0));
        rows[1].push((0, 1.0));
        let hop = SparseOperator { rows };
        assert!(hop.commutator_norm(&ops.o1, &keep) > 1e-3);
    }

    #[test]
    fn dump_format() {
        let b = assemble_block(&ModelSpec::harmonic(3, 0.5).unwrap(), Irrep::A1).unwrap();
        let mut out = Vec::new();
        b.write_dump(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("# irrep=A1 g=0.5 n={}", b.order()));
        for l in lines {
            let f: Vec<&str> = l.split(' ').collect();
            assert_eq!(f.len(), 4);
            let (i, j): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
            let re: f64 = f[2].parse().unwrap();
            let im: f64 = f[3].parse().unwrap();
            assert_eq!(c64::new(re, im), b.matrix[(i, j)]);
        }
    }
}
