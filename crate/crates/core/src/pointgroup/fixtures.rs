//! Parametric templates of the explicit T_d symmetry-adapted combinations of
//! oscillator product states. Used as golden data for projection.

use std::collections::BTreeMap;

use super::Irrep;
use crate::basis::{ModeIndex, SymVector};

/// Index expression `2·letter` or `2·letter + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexExpr {
    pub letter: char,
    pub odd: bool,
}

impl IndexExpr {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let (body, odd) = match s.strip_suffix("+1") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let letter = body.strip_prefix('2')?;
        let mut chars = letter.chars();
        let c = chars.next()?;
        if chars.next().is_some() || !c.is_ascii_alphabetic() {
            return None;
        }
        Some(Self { letter: c, odd })
    }

    pub fn eval(&self, value: u32) -> u32 {
        2 * value + self.odd as u32
    }
}

/// One symmetry-adapted combination: `Σ c_i φ_{q_i} / sqrt(norm2)`.
#[derive(Clone, Debug)]
pub struct BasisFixture {
    pub terms: Vec<(i64, [IndexExpr; 3])>,
    pub norm2: i64,
}

impl BasisFixture {
    fn parse(spec: &str) -> Self {
        let terms: Vec<(i64, [IndexExpr; 3])> = spec
            .split(';')
            .map(|t| {
                let (c, q) = t.split_once(':').expect("coefficient:indices");
                let exprs: Vec<IndexExpr> = q.split(',').map(|e| IndexExpr::parse(e).expect("index")).collect();
                (c.trim().parse().expect("coefficient"), [exprs[0], exprs[1], exprs[2]])
            })
            .collect();
        let norm2 = terms.iter().map(|(c, _)| c * c).sum();
        Self { terms, norm2 }
    }

    pub fn letters(&self) -> Vec<char> {
        let mut out: Vec<char> = Vec::new();
        for (_, q) in &self.terms {
            for e in q {
                if !out.contains(&e.letter) {
                    out.push(e.letter);
                }
            }
        }
        out
    }

    /// Concrete vector for the letter values; `None` if the instance
    /// collapses (coinciding terms cancel).
    pub fn instantiate(&self, values: &BTreeMap<char, u32>) -> Option<SymVector> {
        SymVector::from_terms(self.terms.iter().map(|(c, q)| {
            let idx = q.map(|e| e.eval(values[&e.letter]));
            (ModeIndex::from_array(idx), *c)
        }))
    }
}

/// A set of partner functions listed together for one irrep.
#[derive(Clone, Debug)]
pub struct FixtureSet {
    pub irrep: Irrep,
    pub partners: Vec<BasisFixture>,
}

impl FixtureSet {
    pub fn letters(&self) -> Vec<char> {
        let mut out: Vec<char> = Vec::new();
        for p in &self.partners {
            for c in p.letters() {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }
}

fn set(irrep: Irrep, partners: &[&str]) -> FixtureSet {
    FixtureSet {
        irrep,
        partners: partners.iter().map(|p| BasisFixture::parse(p)).collect(),
    }
}

/// Odd-index copy of a template: every `2x` becomes `2x+1`.
fn odd(spec: &str) -> String {
    spec.split(';')
        .map(|t| {
            let (c, q) = t.split_once(':').unwrap();
            let q: Vec<String> = q.split(',').map(|e| format!("{}+1", e.trim())).collect();
            format!("{c}:{}", q.join(","))
        })
        .collect::<Vec<_>>()
        .join(";")
}

const A1_SINGLE: &str = "1:2m,2m,2m";
const A1_TRIPLE: &str = "1:2m,2m,2n;1:2m,2n,2m;1:2n,2m,2m";
const A1_SIX: &str = "1:2m,2n,2k;1:2k,2m,2n;1:2n,2k,2m;1:2k,2n,2m;1:2m,2k,2n;1:2n,2m,2k";
const A2_SIX: &str = "1:2m,2n,2k;1:2k,2m,2n;1:2n,2k,2m;-1:2k,2n,2m;-1:2m,2k,2n;-1:2n,2m,2k";
const E_PAIRS: [[&str; 2]; 3] = [
    ["2:2n,2m,2m;-1:2m,2n,2m;-1:2m,2m,2n", "1:2m,2n,2m;-1:2m,2m,2n"],
    ["2:2m,2n,2k;-1:2k,2m,2n;-1:2n,2k,2m", "1:2k,2m,2n;-1:2n,2k,2m"],
    ["2:2n,2m,2k;-1:2k,2n,2m;-1:2m,2k,2n", "1:2k,2n,2m;-1:2m,2k,2n"],
];
const T_ODD_EVEN_ODD: [(&str, &str); 3] = [
    ("2m+1,2n,2k+1", "2k+1,2n,2m+1"),
    ("2k+1,2m+1,2n", "2m+1,2k+1,2n"),
    ("2n,2k+1,2m+1", "2n,2m+1,2k+1"),
];
const T_EVEN_ODD_EVEN: [(&str, &str); 3] = [
    ("2m,2n+1,2k", "2k,2n+1,2m"),
    ("2k,2m,2n+1", "2m,2k,2n+1"),
    ("2n+1,2k,2m", "2n+1,2m,2k"),
];

fn pair_set(irrep: Irrep, pairs: &[(&str, &str); 3], sign: i64) -> FixtureSet {
    let specs: Vec<String> = pairs
        .iter()
        .map(|(a, b)| format!("1:{a};{sign}:{b}"))
        .collect();
    let refs: Vec<&str> = specs.iter().map(String::as_str).collect();
    set(irrep, &refs)
}

/// All listed combinations for `irrep` (T_d labels only; empty otherwise).
pub fn paper_basis_fixtures(irrep: Irrep) -> Vec<FixtureSet> {
    match irrep {
        Irrep::A1 => [A1_SINGLE, A1_TRIPLE, A1_SIX]
            .iter()
            .flat_map(|s| [set(Irrep::A1, &[s]), set(Irrep::A1, &[&odd(s)])])
            .collect(),
        Irrep::A2 => vec![set(Irrep::A2, &[A2_SIX]), set(Irrep::A2, &[&odd(A2_SIX)])],
        Irrep::E => E_PAIRS
            .iter()
            .flat_map(|[a, b]| [set(Irrep::E, &[a, b]), set(Irrep::E, &[&odd(a), &odd(b)])])
            .collect(),
        Irrep::T1 => vec![
            pair_set(Irrep::T1, &T_ODD_EVEN_ODD, -1),
            pair_set(Irrep::T1, &T_EVEN_ODD_EVEN, -1),
        ],
        Irrep::T2 => vec![
            set(Irrep::T2, &["1:2m+1,2n,2n", "1:2n,2m+1,2n", "1:2n,2n,2m+1"]),
            set(Irrep::T2, &["1:2m,2n+1,2n+1", "1:2n+1,2m,2n+1", "1:2n+1,2n+1,2m"]),
            pair_set(Irrep::T2, &T_ODD_EVEN_ODD, 1),
            pair_set(Irrep::T2, &T_EVEN_ODD_EVEN, 1),
        ],
        _ => Vec::new(),
    }
}

/// Every assignment of distinct values `0..=max` to `letters`.
pub fn distinct_assignments(letters: &[char], max: u32) -> Vec<BTreeMap<char, u32>> {
    fn rec(letters: &[char], max: u32, cur: &mut BTreeMap<char, u32>, out: &mut Vec<BTreeMap<char, u32>>) {
        let Some((&first, rest)) = letters.split_first() else {
            out.push(cur.clone());
            return;
        };
        for v in 0..=max {
            if cur.values().any(|&u| u == v) {
                continue;
            }
            cur.insert(first, v);
            rec(rest, max, cur, out);
            cur.remove(&first);
        }
    }
    let mut out = Vec::new();
    rec(letters, max, &mut BTreeMap::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizations_match_listed_prefactors() {
        let expected = |irrep| match irrep {
            Irrep::A1 => vec![1, 1, 3, 3, 6, 6],
            Irrep::A2 => vec![6, 6],
            Irrep::E => vec![6, 2, 6, 2, 6, 2, 6, 2, 6, 2, 6, 2],
            Irrep::T1 => vec![2; 6],
            Irrep::T2 => vec![1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2],
            _ => vec![],
        };
        for irrep in Irrep::TD {
            let got: Vec<i64> = paper_basis_fixtures(irrep)
                .iter()
                .flat_map(|s| s.partners.iter().map(|p| p.norm2))
                .collect();
            assert_eq!(got, expected(irrep), "{irrep}");
        }
    }

    #[test]
    fn a1_template_instance() {
        let sets = paper_basis_fixtures(Irrep::A1);
        let values = BTreeMap::from([('m', 1), ('n', 0)]);
        let v = sets[2].partners[0].instantiate(&values).unwrap();
        assert_eq!(v.norm2(), 3);
        assert_eq!(v.coefficient(&ModeIndex::new(2, 2, 0)), 1);
    }

    #[test]
    fn assignments_are_distinct() {
        let a = distinct_assignments(&['m', 'n', 'k'], 3);
        assert_eq!(a.len(), 4 * 3 * 2);
    }
}
