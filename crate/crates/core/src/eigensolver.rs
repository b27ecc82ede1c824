//! Dense eigenvalues of general complex matrices with verified postconditions.
//!
//! The Schur kernel is faer's; this module owns the contract around it:
//! every solve checks the trace and trace-of-square identities, and
//! eigenvector requests are residual-checked.

use faer::{c64, Mat, MatRef};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("eigensolver did not converge ({} unresolved eigenvalues)", unconverged.len())]
    NoConvergence { unconverged: Vec<usize> },

    #[error("matrix is not square ({rows}×{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("spectral identity violated: {what} defect {defect:e} exceeds {tolerance:e}")]
    IdentityViolated {
        what: &'static str,
        defect: f64,
        tolerance: f64,
    },

    #[error("eigenpair residual {residual:e} exceeds {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
}

/// Relative tolerance for the trace identities.
pub const TRACE_TOL: f64 = 1e-9;
/// Largest accepted relative eigenpair residual.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// c-norm threshold (relative to ‖v‖²) below which a vector is treated as
/// self-orthogonal.
pub const SELF_ORTHOGONAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct EigenResult {
    /// Eigenvalues in solver order (callers sort).
    pub values: Vec<c64>,
    /// Column eigenvectors, when requested.
    pub vectors: Option<Mat<c64>>,
    /// Largest `‖Mv − λv‖ / (‖M‖‖v‖)` over returned pairs; zero without vectors.
    pub residual_bound: f64,
}

pub fn frobenius_norm(m: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

fn trace(m: MatRef<'_, c64>) -> c64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// `tr(M²) = Σ_ij M_ij M_ji`.
fn trace_of_square(m: MatRef<'_, c64>) -> c64 {
    let n = m.nrows();
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += m[(i, j)] * m[(j, i)];
        }
    }
    acc
}

/// All eigenvalues of `m` (and optionally eigenvectors).
pub fn eig_all(m: MatRef<'_, c64>, want_vectors: bool) -> Result<EigenResult, EigenError> {
    let (rows, cols) = (m.nrows(), m.ncols());
    if rows != cols {
        return Err(EigenError::NotSquare { rows, cols });
    }
    let n = rows;
    if n == 0 {
        return Ok(EigenResult {
            values: Vec::new(),
            vectors: want_vectors.then(|| Mat::zeros(0, 0)),
            residual_bound: 0.0,
        });
    }
    for j in 0..n {
        for i in 0..n {
            let z = m[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(EigenError::NonFinite);
            }
        }
    }
    let no_conv = || EigenError::NoConvergence {
        unconverged: (0..n).collect(),
    };

    let (values, vectors) = if want_vectors {
        let evd = m.eigen().map_err(|_| no_conv())?;
        let s = evd.S();
        let values: Vec<c64> = (0..n).map(|i| s[i]).collect();
        (values, Some(evd.U().to_owned()))
    } else {
        (m.eigenvalues().map_err(|_| no_conv())?, None)
    };

    let norm = frobenius_norm(m).max(f64::MIN_POSITIVE);
    let tol1 = TRACE_TOL * norm * n as f64;
    let sum: c64 = values.iter().sum();
    let defect = (sum - trace(m)).norm();
    if defect > tol1 {
        return Err(EigenError::IdentityViolated {
            what: "trace",
            defect,
            tolerance: tol1,
        });
    }
    let tol2 = TRACE_TOL * norm * norm * n as f64;
    let sum2: c64 = values.iter().map(|l| l * l).sum();
    let defect = (sum2 - trace_of_square(m)).norm();
    if defect > tol2 {
        return Err(EigenError::IdentityViolated {
            what: "trace of square",
            defect,
            tolerance: tol2,
        });
    }

    let mut residual_bound = 0.0f64;
    if let Some(u) = &vectors {
        for (k, &lambda) in values.iter().enumerate() {
            let mut r2 = 0.0;
            let mut v2 = 0.0;
            for i in 0..n {
                let mut acc = -lambda * u[(i, k)];
                for j in 0..n {
                    acc += m[(i, j)] * u[(j, k)];
                }
                r2 += acc.norm_sqr();
                v2 += u[(i, k)].norm_sqr();
            }
            residual_bound = residual_bound.max((r2 / v2).sqrt() / norm);
        }
        if residual_bound > RESIDUAL_TOL {
            return Err(EigenError::Residual {
                residual: residual_bound,
                tolerance: RESIDUAL_TOL,
            });
        }
    }

    Ok(EigenResult {
        values,
        vectors,
        residual_bound,
    })
}

/// A vector whose c-product with itself vanishes: the signature of an
/// exceptional point.
#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("vector is self-orthogonal under the c-product (|Σv²| = {cnorm:e}, ‖v‖² = {norm2:e})")]
pub struct SelfOrthogonal {
    pub cnorm: f64,
    pub norm2: f64,
}

/// Scales `v` so that `Σ v_j² = 1` (no conjugation).
pub fn c_normalize(v: &[c64]) -> Result<Vec<c64>, SelfOrthogonal> {
    let c: c64 = v.iter().map(|z| z * z).sum();
    let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if c.norm() < SELF_ORTHOGONAL_TOL * norm2 || norm2 == 0.0 {
        return Err(SelfOrthogonal { cnorm: c.norm(), norm2 });
    }
    let s = c.sqrt();
    Ok(v.iter().map(|z| z / s).collect())
}

/// Largest distance in a greedy pairing of each eigenvalue with the complex
/// conjugate of another (real eigenvalues pair with themselves).
pub fn conjugation_defect(values: &[c64]) -> f64 {
    let mut sorted: Vec<c64> = values.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut used = vec![false; sorted.len()];
    let mut worst = 0.0f64;
    for i in 0..sorted.len() {
        if used[i] {
            continue;
        }
        let target = sorted[i].conj();
        let self_dist = (sorted[i] - target).norm();
        let mut best = (self_dist, i);
        for j in i + 1..sorted.len() {
            if !used[j] {
                let d = (sorted[j] - target).norm();
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        used[i] = true;
        used[best.1] = true;
        worst = worst.max(best.0);
    }
    worst
}

/// Total-order sort by real part, then imaginary part.
pub fn sort_spectrum(values: &mut [c64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    fn det_oracle(m: &Mat<c64>) -> c64 {
        let n = m.nrows();
        let mut a: Vec<Vec<c64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
        let mut det = c(1.0, 0.0);
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[x][k].norm().total_cmp(&a[y][k].norm())).unwrap();
            if p != k {
                a.swap(p, k);
                det = -det;
            }
            let piv = a[k][k];
            det *= piv;
            if piv.norm() == 0.0 {
                return c(0.0, 0.0);
            }
            for i in k + 1..n {
                let f = a[i][k] / piv;
                for j in k..n {
                    let t = a[k][j];
                    a[i][j] -= f * t;
                }
            }
        }
        det
    }

    #[test]
    fn diagonal_matrix() {
        let m = Mat::from_fn(4, 4, |i, j| if i == j { c([3.0, 5.0, 5.0, 5.0][i], 0.0) } else { c(0.0, 0.0) });
        let mut r = eig_all(m.as_ref(), false).unwrap().values;
        sort_spectrum(&mut r);
        for (a, b) in r.iter().zip([3.0, 5.0, 5.0, 5.0]) {
            assert!((a - c(b, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn coalescing_pair_closed_form() {
        for b in [1.0, 0.3, 1e-3] {
            let a = 2.5;
            let m = Mat::from_fn(2, 2, |i, j| if i == j { c(a, 0.0) } else { c(0.0, b) });
            let r = eig_all(m.as_ref(), true).unwrap();
            let mut v = r.values.clone();
            sort_spectrum(&mut v);
            assert!((v[0] - c(a, -b)).norm() < 1e-13);
            assert!((v[1] - c(a, b)).norm() < 1e-13);
            assert!(r.residual_bound < RESIDUAL_TOL);
            // Eigenvectors (1, ±1) are c-normalizable away from b = 0.
            let u = r.vectors.unwrap();
            let col: Vec<c64> = (0..2).map(|i| u[(i, 0)]).collect();
            assert!(c_normalize(&col).is_ok());
        }
    }

    #[test]
    fn c_normalize_cases() {
        assert!(c_normalize(&[c(1.0, 0.0), c(0.0, 1.0)]).is_err());
        let v = c_normalize(&[c(0.6, 0.0), c(0.8, 0.0)]).unwrap();
        assert!((v[0] - c(0.6, 0.0)).norm() < 1e-15 && (v[1] - c(0.8, 0.0)).norm() < 1e-15);
        let v = c_normalize(&[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(v, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let w = c_normalize(&[c(1.0, 2.0), c(0.5, -1.0), c(3.0, 0.0)]).unwrap();
        let s: c64 = w.iter().map(|z| z * z).sum();
        assert!((s - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        let m = Mat::<c64>::zeros(2, 3);
        assert!(matches!(eig_all(m.as_ref(), false), Err(EigenError::NotSquare { .. })));
        let m = Mat::from_fn(2, 2, |_, _| c(f64::NAN, 0.0));
        assert_eq!(eig_all(m.as_ref(), false).unwrap_err(), EigenError::NonFinite);
        assert!(eig_all(Mat::<c64>::zeros(0, 0).as_ref(), false).unwrap().values.is_empty());
    }

    #[test]
    fn conjugation_defect_detects_unpaired() {
        assert!(conjugation_defect(&[c(1.0, 0.0), c(2.0, 0.5), c(2.0, -0.5)]) < 1e-15);
        assert!(conjugation_defect(&[c(1.0, 0.0), c(2.0, 0.5)]) > 0.9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn matrix(n: usize) -> impl Strategy<Value = Mat<c64>> {
            proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n * n)
                .prop_map(move |v| Mat::from_fn(n, n, |i, j| c(v[i * n + j].0, v[i * n + j].1)))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn product_of_eigenvalues_is_determinant(m in (1usize..=6).prop_flat_map(matrix)) {
                let r = eig_all(m.as_ref(), true).unwrap();
                let prod: c64 = r.values.iter().product();
                let det = det_oracle(&m);
                prop_assert!((prod - det).norm() <= 1e-9 * det.norm().max(1.0));
            }

            #[test]
            fn complex_symmetric_parity_graded_spectra_pair_up(
                n in 2usize..8,
                seed in proptest::collection::vec(-1.0f64..1.0, 64),
                g in 0.0f64..2.0,
            ) {
                // Real H0 within parity sectors, ig·H' between them.
                let parity = |i: usize| i % 2;
                let m = Mat::from_fn(n, n, |i, j| {
                    let (a, b) = (i.min(j), i.max(j));
                    let x = seed[(a * 8 + b) % 64];
                    if parity(i) == parity(j) { c(x + if i == j { 3.0 * i as f64 } else { 0.0 }, 0.0) } else { c(0.0, g * x) }
                });
                let r = eig_all(m.as_ref(), false).unwrap();
                let scale = frobenius_norm(m.as_ref()).max(1.0);
                prop_assert!(conjugation_defect(&r.values) < 1e-9 * scale);
            }
        }
    }
}
