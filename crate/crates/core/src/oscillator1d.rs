//! One-dimensional ladder algebra in the eigenbasis of `p² + q²`.
//!
//! With this normalization the oscillator levels are `2n + 1` and
//! `⟨n|q|n+1⟩ = sqrt((n+1)/2)`. Powers of `q` are always formed at a padded
//! cutoff and truncated afterwards, so every retained entry is exact.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Real symmetric banded matrix over the oscillator basis `0..order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Banded1D {
    order: usize,
    bandwidth: usize,
    // diags[d][i] holds entry (i, i + d).
    diags: Vec<Vec<f64>>,
}

impl Banded1D {
    fn zeros(order: usize, bandwidth: usize) -> Self {
        let diags = (0..=bandwidth)
            .map(|d| vec![0.0; order.saturating_sub(d)])
            .collect();
        Self {
            order,
            bandwidth,
            diags,
        }
    }

    fn set(&mut self, i: usize, j: usize, value: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.diags[hi - lo][lo] = value;
    }

    /// Leading `order × order` block of a dense symmetric matrix.
    fn from_dense_leading(dense: &Mat<f64>, order: usize, bandwidth: usize) -> Self {
        let mut out = Self::zeros(order, bandwidth);
        for d in 0..=bandwidth {
            for i in 0..order.saturating_sub(d) {
                out.diags[d][i] = dense[(i, i + d)];
            }
        }
        out
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Entry `(row, col)`; zero outside the band.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.order && col < self.order, "index out of range");
        let (lo, hi) = if row <= col { (row, col) } else { (col, row) };
        let d = hi - lo;
        if d > self.bandwidth {
            0.0
        } else {
            self.diags[d][lo]
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        Mat::from_fn(self.order, self.order, |i, j| self.get(i, j))
    }

    /// Entrywise sum; both operands must share the same order.
    pub fn add(&self, other: &Banded1D) -> Banded1D {
        assert_eq!(self.order, other.order, "order mismatch");
        let bandwidth = self.bandwidth.max(other.bandwidth);
        let mut out = Self::zeros(self.order, bandwidth);
        for d in 0..=bandwidth {
            for i in 0..self.order.saturating_sub(d) {
                out.diags[d][i] = self.get(i, i + d) + other.get(i, i + d);
            }
        }
        out
    }

    /// Nonzero entries of row `row` as `(col, value)` pairs, in column order.
    pub fn row_entries(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = row.saturating_sub(self.bandwidth);
        let hi = (row + self.bandwidth).min(self.order - 1);
        (lo..=hi)
            .map(move |col| (col, self.get(row, col)))
            .filter(|&(_, v)| v != 0.0)
    }
}

/// Position operator `q`: `⟨n|q|n+1⟩ = sqrt((n+1)/2)`.
pub fn x_matrix(n_max: usize) -> Banded1D {
    let order = n_max + 1;
    let mut out = Banded1D::zeros(order, 1);
    for n in 0..n_max {
        out.set(n, n + 1, ((n + 1) as f64 / 2.0).sqrt());
    }
    out
}

fn padded_power(n_max: usize, power: usize) -> Banded1D {
    let x = x_matrix(n_max + power).to_dense();
    let mut acc = x.clone();
    for _ in 1..power {
        acc = &acc * &x;
    }
    Banded1D::from_dense_leading(&acc, n_max + 1, power)
}

/// `q²`, exact on every retained entry.
pub fn x2_matrix(n_max: usize) -> Banded1D {
    padded_power(n_max, 2)
}

/// `q⁴`, exact on every retained entry.
pub fn x4_matrix(n_max: usize) -> Banded1D {
    padded_power(n_max, 4)
}

/// Kinetic term `p²`.
pub fn p2_matrix(n_max: usize) -> Banded1D {
    let order = n_max + 1;
    let mut out = Banded1D::zeros(order, 2);
    for n in 0..order {
        out.set(n, n, n as f64 + 0.5);
        if n + 2 < order {
            let v = -(((n + 1) * (n + 2)) as f64).sqrt() / 2.0;
            out.set(n, n + 2, v);
        }
    }
    out
}

/// One-dimensional quartic Hamiltonian `p² + q⁴` in the oscillator basis.
pub fn quartic_1d_hamiltonian(n_max: usize) -> Banded1D {
    p2_matrix(n_max).add(&x4_matrix(n_max))
}

/// Number of quartic eigenvalues considered converged at cutoff `n_max`.
pub fn trusted_count(n_max: usize) -> usize {
    n_max / 2
}

/// The lowest `count` eigenvalues of `p² + q⁴`, ascending.
///
/// Only the lower half of the truncated spectrum is trusted; asking for more
/// is an error rather than a silent loss of accuracy.
pub fn quartic_1d_eigenvalues(n_max: usize, count: usize) -> Result<Vec<f64>> {
    let trusted = trusted_count(n_max);
    if count > trusted {
        return Err(Error::UntrustedWindow {
            count,
            trusted,
            n_max,
        });
    }
    let (values, _) = quartic_1d_eigensystem(n_max)?;
    Ok(values[..count].to_vec())
}

/// Full eigensystem of the truncated `p² + q⁴` matrix: ascending values and
/// the matching eigenvectors as columns.
///
/// Each eigenvector is supported on basis indices of a single parity; the
/// solver is applied to the even and odd sub-blocks separately so that the
/// other parity is exactly zero.
pub fn quartic_1d_eigensystem(n_max: usize) -> Result<(Vec<f64>, Mat<f64>)> {
    let h = quartic_1d_hamiltonian(n_max);
    let order = h.order();
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(order);
    for parity in 0..2 {
        let idx: Vec<usize> = (parity..order).step_by(2).collect();
        if idx.is_empty() {
            continue;
        }
        let sub = Mat::from_fn(idx.len(), idx.len(), |a, b| h.get(idx[a], idx[b]));
        let evd = sub
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| crate::eigensolver::EigenError::NoConvergence {
                unconverged: (0..idx.len()).collect(),
            })?;
        let s = evd.S();
        let u = evd.U();
        for col in 0..idx.len() {
            let mut v = vec![0.0; order];
            // Fix the sign so the largest component is positive.
            let mut pivot = 0.0f64;
            for (a, &i) in idx.iter().enumerate() {
                v[i] = u[(a, col)];
                if v[i].abs() > pivot.abs() {
                    pivot = v[i];
                }
            }
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            pairs.push((s[col], v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = Mat::from_fn(order, order, |i, j| pairs[j].1[i]);
    Ok((values, vectors))
}
