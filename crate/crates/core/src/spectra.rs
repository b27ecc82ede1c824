//! Coupling sweeps, branch tracking, exceptional points and the first-order
//! selection rule.

use std::collections::BTreeMap;
use std::io::Write;

use faer::{c64, Mat};
use rayon::prelude::*;

use crate::basis::{level_states, ModeIndex, SymVector, TruncationPolicy};
use crate::eigensolver::{conjugation_defect, eig_all, frobenius_norm, sort_spectrum};
use crate::error::{Error, Result};
use crate::hamiltonian::{xyz_matrix, BlockOperators, ModelKind, ModelSpec};
use crate::oscillator1d::{quartic_1d_eigensystem, trusted_count, x_matrix};
use crate::pointgroup::Irrep;

/// Default relative threshold on `|Im E|`.
pub const TOL_IM: f64 = 1e-8;
/// Bisection stops once the bracket is narrower than this.
pub const BISECT_WIDTH: f64 = 1e-6;
/// Largest `g_c` shift accepted when the cutoff grows by [`CUTOFF_STEP`].
pub const CUTOFF_SHIFT_TOL: f64 = 1e-3;
pub const CUTOFF_STEP: u32 = 4;
/// Relative tolerance for conjugate pairing and trace constancy.
pub const SPECTRAL_TOL: f64 = 1e-9;
/// Cost difference below which two assignments count as tied.
pub const TIE_TOL: f64 = 1e-12;
/// How many times an interval may be halved when branch matching conflicts.
pub const MAX_REFINE_DEPTH: u32 = 1;

/// `|Im E|` above which `E` counts as complex.
pub fn tol_im(rel: f64, e: c64) -> f64 {
    rel * e.re.abs().max(1.0)
}

pub fn is_complex(rel: f64, e: c64) -> bool {
    e.im.abs() > tol_im(rel, e)
}

/// Linear grid `g_min, …, g_max` with `steps` intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepGrid {
    pub g_min: f64,
    pub g_max: f64,
    pub steps: usize,
}

impl SweepGrid {
    pub fn new(g_min: f64, g_max: f64, steps: usize) -> Result<Self> {
        if !(g_min.is_finite() && g_max.is_finite()) || g_min >= g_max {
            return Err(Error::InvalidGrid(format!("need g_min < g_max, got {g_min} and {g_max}")));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("steps must be positive".into()));
        }
        Ok(Self { g_min, g_max, steps })
    }

    /// Grid points, skipping `g = 0` where degenerate multiplets leave branch
    /// identity undefined.
    pub fn points(&self) -> Vec<f64> {
        let h = (self.g_max - self.g_min) / self.steps as f64;
        (0..=self.steps)
            .map(|i| if i == self.steps { self.g_max } else { self.g_min + i as f64 * h })
            .filter(|&g| g != 0.0)
            .collect()
    }
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            g_min: 0.0,
            g_max: 1.0,
            steps: 200,
        }
    }
}

/// Sorted eigenvalues of one block at one coupling.
#[derive(Clone, Debug)]
pub struct SpectrumSlice {
    pub irrep: Irrep,
    pub g: f64,
    /// `None` when the solver failed at this point.
    pub values: Option<Vec<c64>>,
    pub failure: Option<String>,
    /// Whether `g` is on the nominal grid (as opposed to a refinement point).
    pub nominal: bool,
    /// Greedy conjugate-pairing distance divided by the matrix scale.
    pub pairing_defect: f64,
    /// `Σ E` of the block.
    pub trace: c64,
    /// Frobenius norm of the block.
    pub scale: f64,
}

impl SpectrumSlice {
    pub fn is_valid(&self) -> bool {
        self.values.is_some()
    }
}

/// Solves one block and sorts by real part, then imaginary part.
pub fn solve_sorted(ops: &BlockOperators, g: f64) -> Result<Vec<c64>> {
    let m = ops.matrix(g);
    let mut values = eig_all(m.as_ref(), false)?.values;
    sort_spectrum(&mut values);
    Ok(values)
}

fn slice_at(ops: &BlockOperators, g: f64, nominal: bool) -> SpectrumSlice {
    let m = ops.matrix(g);
    let scale = frobenius_norm(m.as_ref());
    let base = SpectrumSlice {
        irrep: ops.irrep,
        g,
        values: None,
        failure: None,
        nominal,
        pairing_defect: 0.0,
        trace: (0..m.nrows()).map(|i| m[(i, i)]).sum(),
        scale,
    };
    match eig_all(m.as_ref(), false) {
        Ok(r) => {
            let mut values = r.values;
            sort_spectrum(&mut values);
            let trace = values.iter().sum();
            SpectrumSlice {
                pairing_defect: conjugation_defect(&values) / scale.max(1.0),
                trace,
                values: Some(values),
                ..base
            }
        }
        Err(e) => SpectrumSlice {
            failure: Some(e.to_string()),
            ..base
        },
    }
}

/// Spectrum of `ops` at every grid point (in parallel).
pub fn sweep(ops: &BlockOperators, grid: &SweepGrid) -> Vec<SpectrumSlice> {
    grid.points().into_par_iter().map(|g| slice_at(ops, g, true)).collect()
}

/// Like [`sweep`], then halves every interval whose branch matching needed
/// conflict resolution, up to [`MAX_REFINE_DEPTH`] times.
pub fn sweep_refined(ops: &BlockOperators, grid: &SweepGrid) -> Vec<SpectrumSlice> {
    let mut slices = sweep(ops, grid);
    for _ in 0..MAX_REFINE_DEPTH {
        let mids: Vec<f64> = slices
            .windows(2)
            .filter_map(|w| match (&w[0].values, &w[1].values) {
                (Some(a), Some(b)) if match_step(a, b).conflicted => Some(0.5 * (w[0].g + w[1].g)),
                _ => None,
            })
            .collect();
        if mids.is_empty() {
            break;
        }
        let extra: Vec<SpectrumSlice> = mids.into_par_iter().map(|g| slice_at(ops, g, false)).collect();
        slices.extend(extra);
        slices.sort_by(|a, b| a.g.total_cmp(&b.g));
    }
    slices
}

/// One continuity-matched eigenvalue branch.
#[derive(Clone, Debug)]
pub struct BranchTrack {
    pub irrep: Irrep,
    pub branch: usize,
    pub samples: Vec<(f64, c64)>,
}

#[derive(Clone, Debug, Default)]
pub struct Tracking {
    pub tracks: Vec<BranchTrack>,
    /// Couplings at which a tie between assignments was broken by real-part
    /// ordering.
    pub ambiguous_at: Vec<f64>,
}

struct StepMatch {
    /// `target[i]` is the index in the next slice continuing branch `i`.
    target: Vec<usize>,
    conflicted: bool,
    ambiguous: bool,
}

/// Matches the values of one slice onto the next: nearest neighbour where
/// that is a bijection, minimal total distance on the conflicted rest.
fn match_step(prev: &[c64], next: &[c64]) -> StepMatch {
    let n = prev.len().min(next.len());
    let nearest: Vec<usize> = prev[..n]
        .iter()
        .map(|p| {
            (0..next.len())
                .min_by(|&a, &b| (next[a] - p).norm().total_cmp(&(next[b] - p).norm()))
                .expect("nonempty slice")
        })
        .collect();
    let mut claims = vec![0usize; next.len()];
    for &j in &nearest {
        claims[j] += 1;
    }
    let conflicted_rows: Vec<usize> = (0..n).filter(|&i| claims[nearest[i]] > 1).collect();
    let mut target = nearest.clone();
    if conflicted_rows.is_empty() {
        return StepMatch {
            target,
            conflicted: false,
            ambiguous: false,
        };
    }
    let taken: Vec<bool> = {
        let mut t = vec![false; next.len()];
        for i in 0..n {
            if claims[nearest[i]] == 1 {
                t[nearest[i]] = true;
            }
        }
        t
    };
    let free: Vec<usize> = (0..next.len()).filter(|&j| !taken[j]).collect();
    let cost: Vec<Vec<f64>> = conflicted_rows
        .iter()
        .map(|&i| free.iter().map(|&j| (next[j] - prev[i]).norm()).collect())
        .collect();
    let assign = min_cost_assignment(&cost);
    let mut ambiguous = false;
    let mut chosen: Vec<usize> = assign.iter().map(|&c| free[c]).collect();
    for a in 0..conflicted_rows.len() {
        for b in a + 1..conflicted_rows.len() {
            let (ca, cb) = (assign[a], assign[b]);
            let delta = cost[a][cb] + cost[b][ca] - cost[a][ca] - cost[b][cb];
            if delta.abs() < TIE_TOL {
                ambiguous = true;
                let (ia, ib) = (conflicted_rows[a], conflicted_rows[b]);
                let prev_order = prev[ia].re.total_cmp(&prev[ib].re);
                let next_order = next[chosen[a]].re.total_cmp(&next[chosen[b]].re);
                if prev_order != next_order && prev_order.is_ne() && next_order.is_ne() {
                    chosen.swap(a, b);
                }
            }
        }
    }
    for (k, &i) in conflicted_rows.iter().enumerate() {
        target[i] = chosen[k];
    }
    StepMatch {
        target,
        conflicted: true,
        ambiguous,
    }
}

/// Minimal-cost assignment of rows to distinct columns (rows ≤ columns),
/// by the Hungarian method with potentials.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "more rows than columns");
    // 1-based arrays; column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; n];
    for j in 1..=m {
        if row_of[j] != 0 {
            out[row_of[j] - 1] = j - 1;
        }
    }
    out
}

/// Links the sorted eigenvalues of consecutive valid slices into branches,
/// matching each new slice against values extrapolated from the last two
/// samples of every branch.
pub fn track(slices: &[SpectrumSlice]) -> Result<Tracking> {
    let valid: Vec<&SpectrumSlice> = slices.iter().filter(|s| s.is_valid()).collect();
    if valid.len() < 2 {
        return Err(Error::InvalidGrid("tracking needs at least two valid grid points".into()));
    }
    let first = valid[0].values.as_ref().unwrap();
    let irrep = valid[0].irrep;
    let mut tracks: Vec<BranchTrack> = first
        .iter()
        .enumerate()
        .map(|(b, &e)| BranchTrack {
            irrep,
            branch: b,
            samples: vec![(valid[0].g, e)],
        })
        .collect();
    let mut ambiguous_at = Vec::new();
    for w in valid.windows(2) {
        // Linear extrapolation from the last two samples carries branches
        // through crossings such as a ± ib at b = 0.
        let g = w[1].g;
        let prev: Vec<c64> = tracks
            .iter()
            .map(|t| match t.samples[..] {
                [.., (g0, e0), (g1, e1)] => e1 + (e1 - e0) * ((g - g1) / (g1 - g0)),
                [.., (_, e1)] => e1,
                [] => unreachable!("tracks start with one sample"),
            })
            .collect();
        let next = w[1].values.as_ref().unwrap();
        let step = match_step(&prev, next);
        if step.ambiguous {
            ambiguous_at.push(w[1].g);
        }
        for (t, &j) in tracks.iter_mut().zip(&step.target) {
            t.samples.push((w[1].g, next[j]));
        }
    }
    Ok(Tracking { tracks, ambiguous_at })
}

/// A refined coalescence of two branches.
#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalPoint {
    pub irrep: Irrep,
    pub branch_a: usize,
    pub branch_b: usize,
    pub g_lo: f64,
    pub g_hi: f64,
    pub g_c: f64,
    pub e_c: c64,
    /// The pair was already complex at the first grid point.
    pub unbracketed: bool,
    /// `g_c` was bisected; otherwise it is the midpoint of the grid bracket.
    pub refined: bool,
    /// Result of the cutoff-stability check, once run.
    pub converged: Option<bool>,
    /// `g_c` at the enlarged cutoff minus `g_c`, when it was found.
    pub cutoff_shift: Option<f64>,
}

/// The two eigenvalues nearest `center`, and whether either is complex.
fn pair_near(values: &[c64], center: f64, rel: f64) -> Option<(c64, c64, bool)> {
    if values.len() < 2 {
        return None;
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let da = (values[a] - c64::new(center, 0.0)).norm();
        let db = (values[b] - c64::new(center, 0.0)).norm();
        da.total_cmp(&db)
    });
    let (a, b) = (values[idx[0]], values[idx[1]]);
    Some((a, b, is_complex(rel, a) || is_complex(rel, b)))
}

/// Bisects on `[g_lo, g_hi]` for the coalescence of the pair located near
/// real part `center_lo` at `g_lo` and `center_hi` at `g_hi`. Returns the
/// final bracket, midpoint and pair mean, or `None` if the bracket does not
/// straddle a real-to-complex transition.
pub fn bisect_pair(
    solve: &(dyn Fn(f64) -> Result<Vec<c64>> + Sync),
    mut g_lo: f64,
    mut g_hi: f64,
    center_lo: f64,
    center_hi: f64,
    rel: f64,
    width: f64,
) -> Result<Option<(f64, f64, f64, c64)>> {
    let center_at = |g: f64, lo: (f64, f64), hi: (f64, f64)| {
        if hi.0 == lo.0 {
            lo.1
        } else {
            lo.1 + (hi.1 - lo.1) * (g - lo.0) / (hi.0 - lo.0)
        }
    };
    let mut lo = (g_lo, center_lo);
    let mut hi = (g_hi, center_hi);
    let broken_lo = pair_near(&solve(g_lo)?, center_lo, rel).map(|p| p.2);
    let broken_hi = pair_near(&solve(g_hi)?, center_hi, rel).map(|p| p.2);
    if broken_lo != Some(false) || broken_hi != Some(true) {
        return Ok(None);
    }
    while g_hi - g_lo >= width {
        let g = 0.5 * (g_lo + g_hi);
        let values = solve(g)?;
        let Some((a, b, broken)) = pair_near(&values, center_at(g, lo, hi), rel) else {
            return Ok(None);
        };
        if broken {
            g_hi = g;
            let c = if a.im.abs() >= b.im.abs() { a } else { b };
            hi = (g, c.re);
        } else {
            g_lo = g;
            lo = (g, 0.5 * (a.re + b.re));
        }
    }
    let g_c = 0.5 * (g_lo + g_hi);
    let values = solve(g_c)?;
    let (a, b, _) = pair_near(&values, center_at(g_c, lo, hi), rel).expect("at least two values");
    Ok(Some((g_lo, g_hi, g_c, 0.5 * (a + b))))
}

/// Exceptional points along tracked branches: every pair whose `|Im E|`
/// crosses the threshold between consecutive samples is refined by
/// bisection with `solve`.
pub fn find_exceptional(
    tracking: &Tracking,
    rel: f64,
    solve: &(dyn Fn(f64) -> Result<Vec<c64>> + Sync),
) -> Result<Vec<ExceptionalPoint>> {
    let options = ScanOptions {
        tol_im: rel,
        ..ScanOptions::default()
    };
    find_exceptional_below(tracking, &options, solve)
}

/// Like [`find_exceptional`], but crossings whose real part exceeds
/// `options.ceiling` keep their grid bracket instead of being bisected.
pub fn find_exceptional_below(
    tracking: &Tracking,
    options: &ScanOptions,
    solve: &(dyn Fn(f64) -> Result<Vec<c64>> + Sync),
) -> Result<Vec<ExceptionalPoint>> {
    let (rel, ceiling, width) = (options.tol_im, options.ceiling, options.bisect_width);
    let tracks = &tracking.tracks;
    let Some(first) = tracks.first() else {
        return Ok(Vec::new());
    };
    let irrep = first.irrep;
    let n_samples = first.samples.len();
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    let mut out = Vec::new();

    // Pairs complex from the outset cannot be bracketed.
    let mut seen = vec![false; tracks.len()];
    for i in 0..tracks.len() {
        let e = tracks[i].samples[0].1;
        if seen[i] || !is_complex(rel, e) {
            continue;
        }
        if let Some(j) = conjugate_partner(tracks, 0, i, &seen, rel) {
            seen[i] = true;
            seen[j] = true;
            let e2 = tracks[j].samples[0].1;
            let g0 = tracks[i].samples[0].0;
            out.push(ExceptionalPoint {
                irrep,
                branch_a: i.min(j),
                branch_b: i.max(j),
                g_lo: g0,
                g_hi: g0,
                g_c: g0,
                e_c: 0.5 * (e + e2),
                unbracketed: true,
                refined: false,
                converged: None,
                cutoff_shift: None,
            });
        }
    }

    for k in 0..n_samples - 1 {
        let rising: Vec<usize> = (0..tracks.len())
            .filter(|&i| !is_complex(rel, tracks[i].samples[k].1) && is_complex(rel, tracks[i].samples[k + 1].1))
            .collect();
        let mut used = vec![false; tracks.len()];
        for &i in &rising {
            if used[i] {
                continue;
            }
            let mask: Vec<bool> = (0..tracks.len()).map(|j| used[j] || !rising.contains(&j)).collect();
            if let Some(j) = conjugate_partner(tracks, k + 1, i, &mask, rel) {
                used[i] = true;
                used[j] = true;
                candidates.push((k, i.min(j), i.max(j)));
            }
        }
    }

    let refined: Vec<Result<Option<ExceptionalPoint>>> = candidates
        .par_iter()
        .map(|&(k, a, b)| {
            let (g_lo, ea) = tracks[a].samples[k];
            let eb = tracks[b].samples[k].1;
            let (g_hi, fa) = tracks[a].samples[k + 1];
            let center_lo = 0.5 * (ea.re + eb.re);
            let center_hi = fa.re;
            if ceiling.is_some_and(|c| center_hi > c) {
                return Ok(Some(ExceptionalPoint {
                    irrep,
                    branch_a: a,
                    branch_b: b,
                    g_lo,
                    g_hi,
                    g_c: 0.5 * (g_lo + g_hi),
                    e_c: c64::new(0.5 * (center_lo + center_hi), 0.0),
                    unbracketed: false,
                    refined: false,
                    converged: None,
                    cutoff_shift: None,
                }));
            }
            Ok(bisect_pair(solve, g_lo, g_hi, center_lo, center_hi, rel, width)?.map(|(lo, hi, g_c, e_c)| {
                ExceptionalPoint {
                    irrep,
                    branch_a: a,
                    branch_b: b,
                    g_lo: lo,
                    g_hi: hi,
                    g_c,
                    e_c,
                    unbracketed: false,
                    refined: true,
                    converged: None,
                    cutoff_shift: None,
                }
            }))
        })
        .collect();
    for r in refined {
        if let Some(ep) = r? {
            out.push(ep);
        }
    }
    dedup_points(&mut out, width);
    Ok(out)
}

/// Index `j ≠ i` (not masked) whose value at sample `k` is closest to the
/// conjugate of branch `i`'s, provided it is within the pairing tolerance
/// scaled by the pair's imaginary part.
fn conjugate_partner(tracks: &[BranchTrack], k: usize, i: usize, mask: &[bool], rel: f64) -> Option<usize> {
    let e = tracks[i].samples[k].1;
    let target = e.conj();
    let (j, d) = (0..tracks.len())
        .filter(|&j| j != i && !mask[j])
        .map(|j| (j, (tracks[j].samples[k].1 - target).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    // Accept if the partner is closer to conj(E) than to E itself.
    let tol = (e.im.abs()).max(tol_im(rel, e));
    (d < tol).then_some(j)
}

/// Removes repeated refinements of the same coalescence (same irrep, `g_c`
/// and `E_c` within the bisection resolution).
fn dedup_points(points: &mut Vec<ExceptionalPoint>, width: f64) {
    points.sort_by(|a, b| a.g_c.total_cmp(&b.g_c).then(a.e_c.re.total_cmp(&b.e_c.re)));
    let mut kept: Vec<ExceptionalPoint> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        let dup = kept.iter().any(|q| {
            q.irrep == p.irrep
                && (q.g_c - p.g_c).abs() < 2.0 * width
                && (q.e_c - p.e_c).norm() < 1e-4 * p.e_c.norm().max(1.0)
        });
        if !dup {
            kept.push(p);
        }
    }
    *points = kept;
}

/// Re-locates `ep` with a block built at a larger cutoff and records the
/// shift of `g_c`.
pub fn check_cutoff_stability(
    ep: &mut ExceptionalPoint,
    enlarged: &BlockOperators,
    options: &ScanOptions,
) -> Result<()> {
    if ep.unbracketed {
        ep.converged = Some(false);
        return Ok(());
    }
    if !ep.refined {
        return Ok(());
    }
    let solve = |g: f64| solve_sorted(enlarged, g);
    let lo = (ep.g_c - CUTOFF_SHIFT_TOL).max(f64::MIN_POSITIVE);
    let hi = ep.g_c + CUTOFF_SHIFT_TOL;
    // The shift only has to be resolved well below its tolerance.
    let width = options.bisect_width.max(1e-2 * CUTOFF_SHIFT_TOL);
    let found = bisect_pair(&solve, lo, hi, ep.e_c.re, ep.e_c.re, options.tol_im, width)?;
    ep.cutoff_shift = found.map(|(_, _, g_c, _)| g_c - ep.g_c);
    ep.converged = Some(matches!(ep.cutoff_shift, Some(s) if s.abs() < CUTOFF_SHIFT_TOL));
    Ok(())
}

/// Everything needed to scan one irrep block for exceptional points.
#[derive(Clone, Debug)]
pub struct IrrepScan {
    pub irrep: Irrep,
    pub slices: Vec<SpectrumSlice>,
    pub tracking: Tracking,
    pub points: Vec<ExceptionalPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    /// Relative `|Im E|` threshold.
    pub tol_im: f64,
    /// Bisect only crossings with `Re E` at or below this energy.
    pub ceiling: Option<f64>,
    /// Final bracket width of the bisection in `g`.
    pub bisect_width: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            tol_im: TOL_IM,
            ceiling: None,
            bisect_width: BISECT_WIDTH,
        }
    }
}

/// Sweeps, tracks and refines exceptional points of one block; when
/// `enlarged` is given each point also gets the cutoff-stability check.
pub fn scan_irrep(
    ops: &BlockOperators,
    enlarged: Option<&BlockOperators>,
    grid: &SweepGrid,
    options: &ScanOptions,
) -> Result<IrrepScan> {
    let slices = sweep_refined(ops, grid);
    let tracking = track(&slices)?;
    let solve = |g: f64| solve_sorted(ops, g);
    let mut points = find_exceptional_below(&tracking, options, &solve)?;
    if let Some(big) = enlarged {
        points
            .par_iter_mut()
            .map(|ep| check_cutoff_stability(ep, big, options))
            .collect::<Result<Vec<()>>>()?;
    }
    Ok(IrrepScan {
        irrep: ops.irrep,
        slices,
        tracking,
        points,
    })
}

/// Smallest-`g_c` summary over a set of exceptional points.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseTransitionEstimate {
    /// Upper bound on `Re E_c` of the points considered.
    pub window: f64,
    /// Minimum `g_c` over converged points inside the window.
    pub g_pt: Option<f64>,
    /// Some point above the window (converged or not) has a smaller `g_c`.
    pub decreasing: bool,
    /// Smallest `g_c` outside the window, if any.
    pub g_min_outside: Option<f64>,
    pub converged_in_window: usize,
}

pub fn phase_transition_estimate(points: &[ExceptionalPoint], window: f64) -> PhaseTransitionEstimate {
    let inside: Vec<&ExceptionalPoint> = points
        .iter()
        .filter(|p| p.e_c.re <= window && p.converged == Some(true))
        .collect();
    let g_pt = inside.iter().map(|p| p.g_c).min_by(f64::total_cmp);
    let g_min_outside = points
        .iter()
        .filter(|p| p.e_c.re > window)
        .map(|p| p.g_c)
        .min_by(f64::total_cmp);
    let decreasing = match (g_pt, g_min_outside) {
        (Some(a), Some(b)) => b < a,
        (None, Some(_)) => true,
        _ => false,
    };
    PhaseTransitionEstimate {
        window,
        g_pt,
        decreasing,
        g_min_outside,
        converged_in_window: inside.len(),
    }
}

/// Energy below which spectra at the given truncation are trusted: the
/// harmonic level `⌊limit/2⌋`, or for the quartic model the state built
/// from the highest trusted one-dimensional level on one axis.
pub fn trusted_energy(kind: ModelKind, truncation: TruncationPolicy) -> Result<f64> {
    let limit = truncation.limit();
    match kind {
        ModelKind::Harmonic => Ok((2 * (limit / 2) + 3) as f64),
        ModelKind::Quartic => {
            let n = limit as usize;
            let t = trusted_count(n).max(1);
            let (e, _) = quartic_1d_eigensystem(n)?;
            Ok(2.0 * e[0] + e[t - 1])
        }
    }
}

/// Spearman rank correlation (average ranks for ties); `None` for fewer than
/// two points or constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// `H′ = xyz` restricted to one degenerate eigenspace of `H₀`.
#[derive(Clone, Debug)]
pub struct LevelCheck {
    pub label: String,
    pub energy: f64,
    pub dim: usize,
    /// Common parity of the eigenspace, if it has one.
    pub parity: Option<i32>,
    pub max_entry: f64,
}

impl LevelCheck {
    pub fn passed(&self) -> bool {
        self.max_entry < FIRST_ORDER_TOL
    }
}

pub const FIRST_ORDER_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct FirstOrderReport {
    pub levels: Vec<LevelCheck>,
}

impl FirstOrderReport {
    pub fn passed(&self) -> bool {
        self.levels.iter().all(LevelCheck::passed)
    }
}

/// Harmonic levels `ν ∈ levels`: the `(ν+1)(ν+2)/2` product states are
/// exact eigenvectors of `H₀`.
pub fn first_order_check_harmonic(levels: impl IntoIterator<Item = u32>) -> Result<FirstOrderReport> {
    let mut out = Vec::new();
    for nu in levels {
        let states = level_states(nu);
        let vecs: Vec<SymVector> = states.iter().map(|&s| SymVector::unit(s)).collect();
        let model = ModelSpec::harmonic(nu + 1, 0.0)?;
        let m = xyz_matrix(&model, &vecs, &vecs)?;
        out.push(LevelCheck {
            label: format!("nu={nu}"),
            energy: (2 * nu + 3) as f64,
            dim: states.len(),
            parity: uniform_parity(&states),
            max_entry: max_abs(&m),
        });
    }
    Ok(FirstOrderReport { levels: out })
}

/// One degenerate multiplet of the separable quartic `H₀`: all distinct
/// permutations of a triple of one-dimensional levels.
#[derive(Clone, Debug, PartialEq)]
pub struct QuarticMultiplet {
    pub orbit: [u32; 3],
    pub energy: f64,
    pub states: Vec<ModeIndex>,
}

/// The lowest `count` quartic multiplets at one-dimensional cutoff `n_max`,
/// using only trusted one-dimensional levels.
pub fn quartic_multiplets(n_max: usize, count: usize) -> Result<Vec<QuarticMultiplet>> {
    let trusted = trusted_count(n_max);
    let (e, _) = quartic_1d_eigensystem(n_max)?;
    let mut all = Vec::new();
    for i in 0..trusted as u32 {
        for j in 0..=i {
            for k in 0..=j {
                let energy = e[i as usize] + e[j as usize] + e[k as usize];
                all.push(QuarticMultiplet {
                    orbit: [i, j, k],
                    energy,
                    states: crate::basis::orbit_states([i, j, k]),
                });
            }
        }
    }
    all.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    // Any multiplet above the lowest untrusted combination would be incomplete.
    let ceiling = 2.0 * e[0] + e.get(trusted).copied().unwrap_or(f64::INFINITY);
    all.retain(|m| m.energy < ceiling);
    if all.len() < count {
        return Err(Error::UntrustedWindow {
            count,
            trusted: all.len(),
            n_max,
        });
    }
    all.truncate(count);
    Ok(all)
}

/// The lowest `count` quartic multiplets: `xyz` between product eigenstates
/// `ρ_i ρ_j ρ_k` of `H₀`, from the one-dimensional overlaps `RᵀXR`.
pub fn first_order_check_quartic(n_max: usize, count: usize) -> Result<FirstOrderReport> {
    let (_, r) = quartic_1d_eigensystem(n_max)?;
    let x = x_matrix(n_max).to_dense();
    let xr: Mat<f64> = r.transpose() * &x * &r;
    let mut out = Vec::new();
    for m in quartic_multiplets(n_max, count)? {
        let mut worst = 0.0f64;
        for a in &m.states {
            for b in &m.states {
                let (p, q) = (a.as_array(), b.as_array());
                let v = (0..3).map(|ax| xr[(p[ax] as usize, q[ax] as usize)]).product::<f64>();
                worst = worst.max(v.abs());
            }
        }
        out.push(LevelCheck {
            label: format!("{{{},{},{}}}", m.orbit[0], m.orbit[1], m.orbit[2]),
            energy: m.energy,
            dim: m.states.len(),
            parity: uniform_parity(&m.states),
            max_entry: worst,
        });
    }
    Ok(FirstOrderReport { levels: out })
}

fn uniform_parity(states: &[ModeIndex]) -> Option<i32> {
    let p = states.first()?.parity();
    states.iter().all(|s| s.parity() == p).then_some(p)
}

fn max_abs(m: &Mat<f64>) -> f64 {
    let mut w = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            w = w.max(m[(i, j)].abs());
        }
    }
    w
}

/// Formats `x` with 15 significant digits, in plain decimal notation where
/// that stays readable.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.14e}")
    }
}

/// Writes the `g,irrep,branch,re,im` table for nominal grid points.
pub fn write_sweep_csv(w: &mut impl Write, tracking: &Tracking, nominal: &[f64]) -> std::io::Result<()> {
    writeln!(w, "g,irrep,branch,re,im")?;
    write_rows(w, tracking, nominal, |_| true)
}

/// Rows of all branches at nominal points where `keep(E)` holds (no header).
pub fn write_rows(
    w: &mut impl Write,
    tracking: &Tracking,
    nominal: &[f64],
    keep: impl Fn(c64) -> bool,
) -> std::io::Result<()> {
    let Some(first) = tracking.tracks.first() else {
        return Ok(());
    };
    let wanted: std::collections::HashSet<u64> = nominal.iter().map(|g| g.to_bits()).collect();
    for k in 0..first.samples.len() {
        let g = first.samples[k].0;
        if !wanted.contains(&g.to_bits()) {
            continue;
        }
        for t in &tracking.tracks {
            let e = t.samples[k].1;
            if keep(e) {
                writeln!(w, "{},{},{},{},{}", fmt_sig(g), t.irrep, t.branch, fmt_sig(e.re), fmt_sig(e.im))?;
            }
        }
    }
    Ok(())
}

pub const EP_HEADER: &str = "irrep,branch_a,branch_b,g_c,re_Ec,im_Ec,converged";

pub fn write_ep_row(w: &mut impl Write, ep: &ExceptionalPoint) -> std::io::Result<()> {
    let converged = match ep.converged {
        Some(true) => "true",
        Some(false) => "false",
        None => "unchecked",
    };
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        ep.irrep,
        ep.branch_a,
        ep.branch_b,
        if ep.unbracketed { "unbracketed".to_string() } else { fmt_sig(ep.g_c) },
        fmt_sig(ep.e_c.re),
        fmt_sig(ep.e_c.im),
        converged
    )
}

/// Greedy matching of two eigenvalue multisets; the largest
/// `|a − b| / (1 + |b|)` over matched pairs.
pub fn multiset_distance(a: &[c64], b: &[c64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut rest: Vec<c64> = b.to_vec();
    let mut worst = 0.0f64;
    let mut sorted = a.to_vec();
    sort_spectrum(&mut sorted);
    for x in sorted {
        let (k, d) = rest
            .iter()
            .enumerate()
            .map(|(k, y)| (k, (x - y).norm() / (1.0 + y.norm())))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        worst = worst.max(d);
        rest.swap_remove(k);
    }
    Some(worst)
}

/// Groups `values` into clusters of real parts within `tol` of each other,
/// returning `(mean, count)` per cluster in ascending order.
pub fn cluster_real(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize, f64)> = Vec::new();
    for x in v {
        match out.last_mut() {
            Some((sum, n, last)) if (x - *last).abs() <= tol => {
                *sum += x;
                *n += 1;
                *last = x;
            }
            _ => out.push((x, 1, x)),
        }
    }
    out.into_iter().map(|(s, n, _)| (s / n as f64, n)).collect()
}

/// Irrep multiplicities summed over a collection, as a sorted map.
pub fn content_map(content: &[(Irrep, usize)]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for (i, n) in content {
        *m.entry(i.to_string()).or_insert(0) += n;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::PartnerMode;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn slice(g: f64, values: Vec<c64>) -> SpectrumSlice {
        SpectrumSlice {
            irrep: Irrep::A1,
            g,
            values: Some(values),
            failure: None,
            nominal: true,
            pairing_defect: 0.0,
            trace: c(0.0, 0.0),
            scale: 1.0,
        }
    }

    #[test]
    fn grid_skips_zero() {
        let g = SweepGrid::new(0.0, 1.0, 50).unwrap().points();
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.02);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(SweepGrid::new(1.0, 0.0, 5).is_err());
        assert!(SweepGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn constant_branches_match_identically() {
        let s: Vec<SpectrumSlice> = (0..4).map(|k| slice(k as f64, vec![c(1.0, 0.0), c(2.0, 0.0)])).collect();
        let t = track(&s).unwrap();
        for (b, tr) in t.tracks.iter().enumerate() {
            assert!(tr.samples.iter().all(|&(_, e)| e == c(1.0 + b as f64, 0.0)));
        }
        assert!(t.ambiguous_at.is_empty());
    }

    #[test]
    fn crossing_pair_tracked_through_zero() {
        // [[a, ib], [ib, a]] has a ± ib; sweeping b through 0 the branches
        // cross and must keep their sign of b.
        let a = 2.0;
        let s: Vec<SpectrumSlice> = (-5..=5)
            .map(|k| {
                let b = k as f64 * 0.1 + 0.03;
                let mut v = vec![c(a, b), c(a, -b)];
                sort_spectrum(&mut v);
                slice(b, v)
            })
            .collect();
        let t = track(&s).unwrap();
        for tr in &t.tracks {
            let sign = tr.samples[0].1.im.signum() * tr.samples[0].0.signum();
            for &(b, e) in &tr.samples {
                assert_eq!(e.im.signum() * b.signum(), sign);
            }
        }
    }

    #[test]
    fn conflicting_nearest_neighbours_use_global_assignment() {
        let prev = [c(0.0, 0.0), c(0.4, 0.0)];
        let next = [c(0.45, 0.0), c(1.0, 0.0)];
        let m = match_step(&prev, &next);
        assert!(m.conflicted);
        assert_eq!(m.target, vec![0, 1]);
    }

    #[test]
    fn tie_is_flagged_and_resolved_by_real_order() {
        let prev = [c(1.0, 0.0), c(1.0, 0.0)];
        let next = [c(1.0, -0.5), c(1.0, 0.5)];
        assert!(match_step(&prev, &next).ambiguous);
    }

    #[test]
    fn hungarian_small() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        assert_eq!(min_cost_assignment(&cost), vec![1, 0, 2]);
        let rect = vec![vec![5.0, 1.0, 9.0], vec![1.0, 1.0, 9.0]];
        assert_eq!(min_cost_assignment(&rect), vec![1, 0]);
    }

    /// [[a − δ, i b], [i b, a + δ]] has E = a ± sqrt(δ² − b²): real for
    /// b < δ, complex beyond, coalescing at b = δ = 1. A distant third level
    /// keeps the pair search honest.
    fn synthetic_solve(g: f64) -> Result<Vec<c64>> {
        let (a, delta) = (3.0, 1.0);
        let m = Mat::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) => c(a - delta, 0.0),
            (1, 1) => c(a + delta, 0.0),
            (0, 1) | (1, 0) => c(0.0, g),
            (2, 2) => c(10.0, 0.0),
            _ => c(0.0, 0.0),
        });
        let mut v = eig_all(m.as_ref(), false)?.values;
        sort_spectrum(&mut v);
        Ok(v)
    }

    #[test]
    fn synthetic_exceptional_point_found_by_bisection() {
        let grid = SweepGrid::new(0.0, 2.0, 40).unwrap();
        let slices: Vec<SpectrumSlice> = grid.points().into_iter().map(|g| slice(g, synthetic_solve(g).unwrap())).collect();
        let t = track(&slices).unwrap();
        let eps = find_exceptional(&t, TOL_IM, &synthetic_solve).unwrap();
        assert_eq!(eps.len(), 1);
        let ep = &eps[0];
        assert!((ep.g_c - 1.0).abs() < 1e-6, "{}", ep.g_c);
        assert!(ep.g_hi - ep.g_lo < BISECT_WIDTH);
        assert!((ep.e_c - c(3.0, 0.0)).norm() < 1e-2);
    }

    #[test]
    fn already_complex_pair_is_unbracketed() {
        let grid = SweepGrid::new(1.5, 2.0, 10).unwrap();
        let slices: Vec<SpectrumSlice> = grid.points().into_iter().map(|g| slice(g, synthetic_solve(g).unwrap())).collect();
        let t = track(&slices).unwrap();
        let eps = find_exceptional(&t, TOL_IM, &synthetic_solve).unwrap();
        assert_eq!(eps.len(), 1);
        assert!(eps[0].unbracketed);
    }

    #[test]
    fn spearman_cases() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 5.0, 9.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        let r = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.9486832980505138).abs() < 1e-12);
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(3.0), "3.00000000000000");
        assert_eq!(fmt_sig(0.5), "0.500000000000000");
        assert_eq!(fmt_sig(-21.25), "-21.2500000000000");
        assert_eq!(fmt_sig(1e-9), "1.00000000000000e-9");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
    }

    #[test]
    fn harmonic_selection_rule_small_levels() {
        let r = first_order_check_harmonic(0..=4).unwrap();
        assert!(r.passed());
        assert_eq!(r.levels[3].dim, 10);
        assert_eq!(r.levels[3].parity, Some(-1));
    }

    #[test]
    fn quartic_multiplet_ordering() {
        let m = quartic_multiplets(40, 5).unwrap();
        let orbits: Vec<[u32; 3]> = m.iter().map(|m| m.orbit).collect();
        assert_eq!(orbits, vec![[0, 0, 0], [1, 0, 0], [1, 1, 0], [2, 0, 0], [1, 1, 1]]);
        assert!((m[0].energy - 3.181086).abs() < 1e-5);
        assert!(quartic_multiplets(4, 50).is_err());
    }

    #[test]
    fn low_harmonic_sweep_is_paired_and_trace_constant() {
        let model = ModelSpec::harmonic(6, 0.0).unwrap().with_partners(PartnerMode::Single);
        let ops = BlockOperators::build(&model, Irrep::T2).unwrap();
        let s = sweep(&ops, &SweepGrid::new(0.0, 1.0, 10).unwrap());
        let t0 = s[0].trace;
        for sl in &s {
            assert!(sl.pairing_defect < SPECTRAL_TOL);
            assert!((sl.trace - t0).norm() < SPECTRAL_TOL * sl.scale);
        }
    }

    #[test]
    fn multiset_distance_matches() {
        assert_eq!(multiset_distance(&[c(1.0, 0.0), c(2.0, 0.0)], &[c(2.0, 0.0), c(1.0, 0.0)]), Some(0.0));
        assert!(multiset_distance(&[c(1.0, 0.0)], &[]).is_none());
    }

    #[test]
    fn clusters() {
        let c = cluster_real(&[1.0, 3.0, 1.0 + 1e-12, 3.0], 1e-9);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].1, 2);
        assert_eq!(c[1].1, 2);
    }
}
