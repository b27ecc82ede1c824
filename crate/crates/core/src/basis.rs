//! Product states `φ_m(x) φ_n(y) φ_k(z)` and integer symmetry-adapted vectors.

use std::collections::BTreeMap;
use std::fmt;

/// Quanta carried by each Cartesian mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub m: u32,
    pub n: u32,
    pub k: u32,
}

impl ModeIndex {
    pub const fn new(m: u32, n: u32, k: u32) -> Self {
        Self { m, n, k }
    }

    pub fn from_array(q: [u32; 3]) -> Self {
        Self::new(q[0], q[1], q[2])
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.m, self.n, self.k]
    }

    /// Total quanta `ν = m + n + k`.
    pub fn level(&self) -> u32 {
        self.m + self.n + self.k
    }

    /// Eigenvalue under inversion, `(-1)^ν`.
    pub fn parity(&self) -> i32 {
        if self.level() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn max_quanta(&self) -> u32 {
        self.m.max(self.n).max(self.k)
    }

    /// Quanta sorted in descending order; identifies the permutation orbit.
    pub fn orbit_key(&self) -> [u32; 3] {
        let mut q = self.as_array();
        q.sort_unstable_by(|a, b| b.cmp(a));
        q
    }

    /// Ordering used everywhere a basis is enumerated: level, then lexicographic.
    fn enumeration_key(&self) -> (u32, u32, u32, u32) {
        (self.level(), self.m, self.n, self.k)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.m, self.n, self.k)
    }
}

/// How the infinite product basis is cut off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncationPolicy {
    /// Keep states with `m + n + k ≤ limit`.
    TotalQuanta(u32),
    /// Keep states with `max(m, n, k) ≤ limit`.
    PerMode(u32),
}

impl TruncationPolicy {
    pub fn limit(&self) -> u32 {
        match *self {
            TruncationPolicy::TotalQuanta(l) | TruncationPolicy::PerMode(l) => l,
        }
    }

    pub fn contains(&self, s: &ModeIndex) -> bool {
        match *self {
            TruncationPolicy::TotalQuanta(l) => s.level() <= l,
            TruncationPolicy::PerMode(l) => s.max_quanta() <= l,
        }
    }

    /// Same truncation kind with a different limit.
    pub fn with_limit(&self, limit: u32) -> Self {
        match self {
            TruncationPolicy::TotalQuanta(_) => TruncationPolicy::TotalQuanta(limit),
            TruncationPolicy::PerMode(_) => TruncationPolicy::PerMode(limit),
        }
    }
}

/// All retained states, ordered by level then lexicographically.
pub fn enumerate(policy: TruncationPolicy) -> Vec<ModeIndex> {
    let l = policy.limit();
    let max_level = match policy {
        TruncationPolicy::TotalQuanta(l) => l,
        TruncationPolicy::PerMode(l) => 3 * l,
    };
    let mut out = Vec::new();
    for nu in 0..=max_level {
        for m in 0..=nu.min(l) {
            for n in 0..=(nu - m).min(l) {
                let s = ModeIndex::new(m, n, nu - m - n);
                if policy.contains(&s) {
                    out.push(s);
                }
            }
        }
    }
    debug_assert!(out
        .windows(2)
        .all(|w| w[0].enumeration_key() < w[1].enumeration_key()));
    out
}

/// The `(ν+1)(ν+2)/2` states with `m + n + k = ν`.
pub fn level_states(nu: u32) -> Vec<ModeIndex> {
    (0..=nu)
        .flat_map(|m| (0..=nu - m).map(move |n| ModeIndex::new(m, n, nu - m - n)))
        .collect()
}

/// Distinct permutations of a quanta triple, in enumeration order.
pub fn orbit_states(q: [u32; 3]) -> Vec<ModeIndex> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out: Vec<ModeIndex> = PERMS
        .iter()
        .map(|p| ModeIndex::new(q[p[0]], q[p[1]], q[p[2]]))
        .collect();
    out.sort_by_key(|s| s.enumeration_key());
    out.dedup();
    out
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Integer combination of product states; the normalized vector is
/// `terms / sqrt(norm2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymVector {
    terms: BTreeMap<ModeIndex, i64>,
    norm2: i64,
}

impl SymVector {
    /// Builds a vector from integer coefficients, dropping zeros and removing
    /// the common factor. Returns `None` for the zero vector.
    pub fn from_terms(terms: impl IntoIterator<Item = (ModeIndex, i64)>) -> Option<Self> {
        let mut map = BTreeMap::new();
        for (s, c) in terms {
            *map.entry(s).or_insert(0) += c;
        }
        map.retain(|_, c| *c != 0);
        if map.is_empty() {
            return None;
        }
        let mut g = map.values().fold(0, |acc, &c| gcd(acc, c));
        // First coefficient in enumeration order is made positive.
        let lead = *map.values().next().unwrap();
        if lead < 0 {
            g = -g;
        }
        map.values_mut().for_each(|c| *c /= g);
        let norm2 = map.values().map(|c| c * c).sum();
        Some(Self { terms: map, norm2 })
    }

    pub fn unit(state: ModeIndex) -> Self {
        Self::from_terms([(state, 1)]).unwrap()
    }

    pub fn terms(&self) -> impl Iterator<Item = (ModeIndex, i64)> + '_ {
        self.terms.iter().map(|(s, c)| (*s, *c))
    }

    pub fn coefficient(&self, s: &ModeIndex) -> i64 {
        self.terms.get(s).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm2(&self) -> i64 {
        self.norm2
    }

    pub fn norm(&self) -> f64 {
        (self.norm2 as f64).sqrt()
    }

    /// Shared inversion parity of every term.
    pub fn parity(&self) -> i32 {
        self.terms.keys().next().unwrap().parity()
    }

    pub fn has_uniform_parity(&self) -> bool {
        let p = self.parity();
        self.terms.keys().all(|s| s.parity() == p)
    }

    /// Level of the first term; meaningful when `has_uniform_level`.
    pub fn level(&self) -> u32 {
        self.terms.keys().next().unwrap().level()
    }

    pub fn has_uniform_level(&self) -> bool {
        let l = self.level();
        self.terms.keys().all(|s| s.level() == l)
    }

    /// Exact integer dot product of the unnormalized coefficients.
    pub fn dot(&self, other: &SymVector) -> i64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .terms
            .iter()
            .map(|(s, c)| c * large.coefficient(s))
            .sum()
    }

    /// Normalized overlap `⟨u|v⟩`.
    pub fn overlap(&self, other: &SymVector) -> f64 {
        self.dot(other) as f64 / (self.norm() * other.norm())
    }

    /// Fraction-free Gram–Schmidt step: removes the component along each
    /// vector in `basis` (assumed mutually orthogonal) using integer
    /// arithmetic only. Returns `None` if nothing is left.
    pub fn orthogonalize_against(&self, basis: &[SymVector]) -> Option<SymVector> {
        let mut cur = self.clone();
        for u in basis {
            let d = cur.dot(u);
            if d == 0 {
                continue;
            }
            let uu = u.norm2;
            let terms = cur
                .terms
                .keys()
                .chain(u.terms.keys())
                .copied()
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .map(|s| (s, uu * cur.coefficient(&s) - d * u.coefficient(&s)));
            cur = SymVector::from_terms(terms)?;
        }
        Some(cur)
    }

    /// Dense real coefficients over `states` (normalized).
    pub fn to_dense(&self, index_of: impl Fn(&ModeIndex) -> Option<usize>, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        let norm = self.norm();
        for (s, c) in self.terms() {
            if let Some(i) = index_of(&s) {
                v[i] = c as f64 / norm;
            }
        }
        v
    }
}

impl fmt::Display for SymVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (s, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " {} ", if c < 0 { '-' } else { '+' })?;
            } else if c < 0 {
                write!(f, "-")?;
            }
            if c.abs() != 1 {
                write!(f, "{}·", c.abs())?;
            }
            write!(f, "φ{s}")?;
        }
        write!(f, ")/√{}", self.norm2)
    }
}
