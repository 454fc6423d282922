//! Numerical checks of the local convergence theory: empirical rates from
//! traces, finite-termination detection, principal and Friedrichs angles,
//! spectra, semi-simplicity, and the linearized Sudoku iteration matrices.

use nalgebra::{DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::puzzles::SudokuInstance;
use crate::splitting::{Damping, IterationTrace};

/// Residuals at or below this are treated as floating-point floor.
pub const RESIDUAL_FLOOR: f64 = 1e-13;
/// Records at the end of a trace left out of rate fits; the reference point
/// is the final iterate, which contaminates the last few residuals.
pub const FIT_SKIP_LAST: usize = 5;
pub const MIN_FIT_POINTS: usize = 10;
pub const MIN_TRACE_LEN: usize = 30;
/// Iterates closer than this are considered identical.
pub const CONSTANT_TOL: f64 = 1e-14;
/// Smallest last move before a constant tail that counts as termination.
pub const TERMINATION_JUMP: f64 = 1e-10;
/// Principal angles below this count toward the intersection dimension.
pub const INTERSECTION_TOL: f64 = 1e-8;
/// Relative singular value cutoff (times the matrix order) for numerical rank.
pub const RANK_TOL_FACTOR: f64 = 1e-12;
pub const DEFAULT_DENSE_CAP: usize = 2000;

/// `sqrt(5)/5`: local rate of standard DR on lifted Sudoku.
pub fn sudoku_dr_rate() -> f64 {
    5f64.sqrt() / 5.0
}

/// The two eigenvalues `(lambda_minus, lambda_plus)` of the rotation-like
/// blocks of the damped Sudoku linearization, for `0 < gamma <= 5/4`.
///
/// `(2 gamma + 5 -+ sqrt(25 - 16 gamma^2)) / (10 (1 + gamma))`.
pub fn sudoku_ddr_block_eigenvalues(gamma: f64) -> (f64, f64) {
    let root = (25.0 - 16.0 * gamma * gamma).max(0.0).sqrt();
    let den = 10.0 * (1.0 + gamma);
    ((2.0 * gamma + 5.0 - root) / den, (2.0 * gamma + 5.0 + root) / den)
}

/// The distinct eigenvalues `{0, lambda_-, gamma/(1+gamma), lambda_+}` of the
/// damped Sudoku linearization (at least one clue), ascending.
pub fn sudoku_ddr_spectrum(gamma: f64) -> [f64; 4] {
    let (lm, lp) = sudoku_ddr_block_eigenvalues(gamma);
    let mut v = [0.0, lm, gamma / (1.0 + gamma), lp];
    v.sort_by(f64::total_cmp);
    v
}

/// Local rate of damped DR on lifted Sudoku: the largest eigenvalue modulus
/// of the linearization.
pub fn sudoku_ddr_rate(gamma: f64) -> f64 {
    let eta = gamma / (1.0 + gamma);
    let disc = 25.0 - 16.0 * gamma * gamma;
    let block = if disc >= 0.0 {
        sudoku_ddr_block_eigenvalues(gamma).1
    } else {
        // complex pair; |lambda|^2 is the block determinant
        (gamma / (5.0 * (1.0 + gamma))).sqrt()
    };
    block.max(eta)
}

/// Which sequence of a trace a rate is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateQuantity {
    /// `|z_k - z*|`.
    ZResidual,
    /// `|x_k - x*|`.
    XResidual,
    /// `|z_k - z_{k-1}|`; needs no reference point.
    ZStep,
}

impl RateQuantity {
    pub fn name(self) -> &'static str {
        match self {
            RateQuantity::ZResidual => "z_res",
            RateQuantity::XResidual => "x_res",
            RateQuantity::ZStep => "z_step",
        }
    }

    fn values(self, trace: &IterationTrace) -> Result<Vec<(usize, f64)>> {
        trace
            .records
            .iter()
            .map(|r| {
                let v = match self {
                    RateQuantity::ZResidual => r.z_res,
                    RateQuantity::XResidual => r.x_res,
                    RateQuantity::ZStep => Some(r.z_step),
                };
                v.map(|v| (r.k, v)).ok_or_else(|| {
                    Error::InsufficientData(format!("trace has no reference for {}", self.name()))
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Per-iteration contraction factor `10^slope`.
    pub rate: f64,
    /// Least-squares slope of `log10(residual)` against `k`.
    pub log10_slope: f64,
    /// First and last iteration of the fit window.
    pub window: (usize, usize),
    pub points: usize,
    pub r_squared: f64,
}

/// Fits `residual_k ~ c * rate^k` on the tail of a series.
///
/// The last [`FIT_SKIP_LAST`] points and residuals at or below
/// [`RESIDUAL_FLOOR`] are dropped; the fit uses the last
/// `max(MIN_FIT_POINTS, ceil(tail_fraction * usable))` remaining points.
pub fn fit_geometric(series: &[(usize, f64)], tail_fraction: f64) -> Result<RateEstimate> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("tail fraction {tail_fraction} outside (0, 1]")));
    }
    let end = series.len().saturating_sub(FIT_SKIP_LAST);
    let usable: Vec<(f64, f64)> = series[..end]
        .iter()
        .filter(|(_, v)| v.is_finite() && *v > RESIDUAL_FLOOR)
        .map(|&(k, v)| (k as f64, v.log10()))
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} usable tail points, need {MIN_FIT_POINTS}",
            usable.len()
        )));
    }
    let take = ((tail_fraction * usable.len() as f64).ceil() as usize).clamp(MIN_FIT_POINTS, usable.len());
    let window = &usable[usable.len() - take..];
    let n = window.len() as f64;
    let mk = window.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = window.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = window.iter().map(|p| (p.0 - mk).powi(2)).sum();
    let sxy: f64 = window.iter().map(|p| (p.0 - mk) * (p.1 - mv)).sum();
    let syy: f64 = window.iter().map(|p| (p.1 - mv).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateEstimate {
        rate: 10f64.powf(slope),
        log10_slope: slope,
        window: (window[0].0 as usize, window[window.len() - 1].0 as usize),
        points: window.len(),
        r_squared,
    })
}

pub fn fit_linear_rate(trace: &IterationTrace, quantity: RateQuantity, tail_fraction: f64) -> Result<RateEstimate> {
    fit_linear_rate_after(trace, quantity, 0, tail_fraction)
}

/// Like [`fit_linear_rate`], restricted to iterations `k >= k_min`.
pub fn fit_linear_rate_after(
    trace: &IterationTrace,
    quantity: RateQuantity,
    k_min: usize,
    tail_fraction: f64,
) -> Result<RateEstimate> {
    if trace.len() < MIN_TRACE_LEN {
        return Err(Error::InsufficientData(format!(
            "trace has {} records, need {MIN_TRACE_LEN}",
            trace.len()
        )));
    }
    let end = trace.len().saturating_sub(FIT_SKIP_LAST);
    let mut series = quantity.values(trace)?;
    let tail = series.split_off(end);
    series.retain(|&(k, _)| k >= k_min);
    series.extend(tail);
    fit_geometric(&series, tail_fraction)
}

/// Largest termination index over the given blocks, or `None` if any of
/// them does not terminate.
pub fn joint_termination(trace: &IterationTrace, blocks: &[TerminationBlock]) -> Result<Option<usize>> {
    let mut worst = 0;
    for &b in blocks {
        match detect_finite_termination(trace, b)? {
            Some(k) => worst = worst.max(k),
            None => return Ok(None),
        }
    }
    Ok(Some(worst))
}

/// Sequence checked for finite termination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationBlock {
    Z,
    X,
    /// `u` block `i` of a product-space run.
    U(usize),
}

/// Smallest `K` with the sequence constant from iterate `K` to the end of
/// the run, requiring at least one repeated iterate.
///
/// `Z` is read from the step lengths and needs no reference; `X` and `U`
/// need a trace recorded against the final iterate. For the real-valued
/// `Z` and `X` the constant tail must be entered by a jump larger than
/// [`TERMINATION_JUMP`]: geometric decay into the rounding floor is not
/// termination.
pub fn detect_finite_termination(trace: &IterationTrace, block: TerminationBlock) -> Result<Option<usize>> {
    let recs = &trace.records;
    if recs.is_empty() {
        return Ok(None);
    }
    let missing = || Error::InsufficientData("trace has no reference".into());
    // distance of each iterate to the next (Z) or to the reference (X, U)
    let (dist, min_tail, shift, jump): (Vec<f64>, usize, usize, bool) = match block {
        // record k holds |z_k - z_{k-1}|, so a constant run from record r
        // starts at iterate r - 1
        TerminationBlock::Z => (recs.iter().map(|r| r.z_step).collect(), 1, 1, true),
        TerminationBlock::X => (
            recs.iter().map(|r| r.x_res.ok_or_else(missing)).collect::<Result<_>>()?,
            2,
            0,
            true,
        ),
        TerminationBlock::U(i) => {
            if i >= trace.blocks {
                return Err(Error::InvalidParameter(format!("block {i} >= {}", trace.blocks)));
            }
            (
                recs.iter()
                    .map(|r| r.u_mismatch.as_ref().map(|m| m[i] as f64).ok_or_else(missing))
                    .collect::<Result<_>>()?,
                // the final record always matches its own reference
                2,
                0,
                false,
            )
        }
    };
    let tail = dist.iter().rev().take_while(|&&d| d <= CONSTANT_TOL).count();
    if tail < min_tail {
        return Ok(None);
    }
    let first = recs.len() - tail;
    if jump && first > 0 && dist[first - 1] <= TERMINATION_JUMP {
        return Ok(None);
    }
    Ok(Some(recs[first].k - shift))
}

/// Two subspaces of a common ambient space, given by orthonormal bases
/// stored as matrix columns.
#[derive(Debug, Clone)]
pub struct SubspacePair {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    let id = DMatrix::<f64>::identity(g.nrows(), g.ncols());
    (g - id).abs().max()
}

impl SubspacePair {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != b.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.nrows(),
            });
        }
        if a.ncols() == 0 || b.ncols() == 0 {
            return Err(Error::InvalidParameter("empty subspace basis".into()));
        }
        for m in [&a, &b] {
            let e = orthonormality_error(m);
            if e > crate::geometry::ORTHONORMAL_TOL {
                return Err(Error::NotOrthonormal(e));
            }
        }
        Ok(Self { a, b })
    }

    /// Builds the pair from lists of basis vectors.
    pub fn from_vectors(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        let to_matrix = |vs: &[Vec<f64>]| -> Result<DMatrix<f64>> {
            let n = vs.first().map_or(0, Vec::len);
            if vs.iter().any(|v| v.len() != n) {
                return Err(Error::InvalidParameter("ragged basis".into()));
            }
            Ok(DMatrix::from_fn(n, vs.len(), |i, j| vs[j][i]))
        };
        Self::new(to_matrix(a)?, to_matrix(b)?)
    }

    /// Ranges of two orthogonal projectors, via symmetric eigendecomposition.
    pub fn from_projectors(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<Self> {
        Self::new(projector_range(p)?, projector_range(q)?)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.a.ncols(), self.b.ncols())
    }

    pub fn ambient_dim(&self) -> usize {
        self.a.nrows()
    }
}

fn projector_range(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !p.is_square() {
        return Err(Error::InvalidParameter("projector must be square".into()));
    }
    let eig = p.clone().symmetric_eigen();
    let cols: Vec<DVector<f64>> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.5)
        .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return Err(Error::InvalidParameter("projector has empty range".into()));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Principal angles in ascending order, `min(p, q)` of them.
///
/// Cosines come from the singular values of `A^T B`, sines from those of
/// `A - B B^T A` (with `A` the smaller basis); each angle is taken from
/// whichever is better conditioned.
pub fn principal_angles(pair: &SubspacePair) -> Vec<f64> {
    let (a, b) = if pair.a.ncols() <= pair.b.ncols() {
        (&pair.a, &pair.b)
    } else {
        (&pair.b, &pair.a)
    };
    let cross = a.transpose() * b;
    let mut cosines: Vec<f64> = cross.singular_values().iter().map(|s| s.clamp(0.0, 1.0)).collect();
    cosines.sort_by(|x, y| y.total_cmp(x));
    cosines.truncate(a.ncols());
    let residual = a - b * (b.transpose() * a);
    let mut sines: Vec<f64> = residual.singular_values().iter().map(|s| s.clamp(0.0, 1.0)).collect();
    sines.sort_by(f64::total_cmp);
    let mut angles: Vec<f64> = cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| if c * c >= 0.5 { s.asin() } else { c.acos() })
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// The first principal angle beyond the intersection.
pub fn friedrichs_angle(pair: &SubspacePair) -> Result<f64> {
    friedrichs_angle_with_tol(pair, INTERSECTION_TOL)
}

pub fn friedrichs_angle_with_tol(pair: &SubspacePair, tol: f64) -> Result<f64> {
    let angles = principal_angles(pair);
    let d = angles.iter().filter(|&&t| t < tol).count();
    angles.get(d).copied().ok_or(Error::NestedSubspaces)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.0.hypot(z.1)).fold(0.0, f64::max))
}

/// Index sets of the diagonal blocks `m` decouples into under a symmetric
/// permutation (connected components of its sparsity graph).
pub fn decoupled_blocks(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != 0.0 {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = root(&mut parent, i);
        groups[r].push(i);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

const SCHUR_MAX_SWEEPS: usize = 10_000;

/// Eigenvalues as `(re, im)` pairs: a real Schur decomposition of each
/// decoupled diagonal block.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if let Some(i) = m.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut out = Vec::with_capacity(m.nrows());
    for idx in decoupled_blocks(m) {
        let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]);
        let schur = Schur::try_new(block, f64::EPSILON, SCHUR_MAX_SWEEPS)
            .ok_or_else(|| Error::InvalidParameter("Schur iteration did not converge".into()))?;
        out.extend(schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)));
    }
    Ok(out)
}

/// Singular values above `sigma_max * order * RANK_TOL_FACTOR`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let order = m.nrows().max(m.ncols()) as f64;
    let cutoff = smax * order * RANK_TOL_FACTOR;
    sv.iter().filter(|&&s| s > cutoff).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemiSimpleReport {
    pub rank: usize,
    pub rank_squared: usize,
}

impl SemiSimpleReport {
    pub fn is_semi_simple(&self) -> bool {
        self.rank == self.rank_squared
    }
}

/// Compares `rank(M - eta I)` with `rank((M - eta I)^2)`.
pub fn semi_simple_ranks(m: &DMatrix<f64>, eta: f64) -> Result<SemiSimpleReport> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let shifted = m - DMatrix::<f64>::identity(m.nrows(), m.ncols()) * eta;
    let squared = &shifted * &shifted;
    Ok(SemiSimpleReport {
        rank: numerical_rank(&shifted),
        rank_squared: numerical_rank(&squared),
    })
}

pub fn is_semi_simple(m: &DMatrix<f64>, eta: f64) -> Result<bool> {
    Ok(semi_simple_ranks(m, eta)?.is_semi_simple())
}

/// Linear parts of the product-space projections of a Sudoku instance
/// once the four binary blocks have terminated:
/// `P_C = diag(0, 0, 0, 0, D)` with `D` the clue-projection diagonal and
/// `P_S = (1/5) 1 1^T (x) I`.
#[derive(Debug, Clone)]
pub struct SudokuLinearization {
    cube: usize,
    diag: Vec<f64>,
}

pub const SUDOKU_BLOCKS: usize = 5;

impl SudokuLinearization {
    pub fn new(instance: &SudokuInstance, cap: usize) -> Result<Self> {
        let cube = instance.cube_len();
        let dim = SUDOKU_BLOCKS * cube;
        if dim > cap {
            return Err(Error::SizeCap { dim, cap });
        }
        Ok(Self {
            cube,
            diag: instance.clue_projection().linear_diagonal(),
        })
    }

    pub fn dim(&self) -> usize {
        SUDOKU_BLOCKS * self.cube
    }

    /// Rank of `P_C`: the number of unclamped cube entries.
    pub fn rank_c(&self) -> usize {
        self.diag.iter().filter(|&&d| d == 1.0).count()
    }

    pub fn projector_c(&self) -> DMatrix<f64> {
        let n = self.dim();
        let offset = (SUDOKU_BLOCKS - 1) * self.cube;
        let mut p = DMatrix::zeros(n, n);
        for (i, &d) in self.diag.iter().enumerate() {
            p[(offset + i, offset + i)] = d;
        }
        p
    }

    pub fn projector_s(&self) -> DMatrix<f64> {
        let n = self.dim();
        let w = 1.0 / SUDOKU_BLOCKS as f64;
        let mut p = DMatrix::zeros(n, n);
        for bi in 0..SUDOKU_BLOCKS {
            for bj in 0..SUDOKU_BLOCKS {
                for t in 0..self.cube {
                    p[(bi * self.cube + t, bj * self.cube + t)] = w;
                }
            }
        }
        p
    }

    /// `I + 2 P_C P_S - P_C - P_S`.
    pub fn dr_matrix(&self) -> DMatrix<f64> {
        let (pc, ps) = (self.projector_c(), self.projector_s());
        let n = self.dim();
        DMatrix::<f64>::identity(n, n) + (&pc * &ps) * 2.0 - &pc - &ps
    }

    /// `(gamma (I + 2 P_C P_S - P_C - P_S) + P_C) / (1 + gamma)`; the
    /// standard matrix for infinite damping.
    pub fn matrix(&self, damping: Damping) -> DMatrix<f64> {
        let gamma = damping.gamma();
        if gamma.is_infinite() {
            return self.dr_matrix();
        }
        (self.dr_matrix() * gamma + self.projector_c()) / (1.0 + gamma)
    }

    /// Orthonormal bases of `range(P_C)` and `range(P_S)`.
    pub fn ranges(&self) -> Result<SubspacePair> {
        let n = self.dim();
        let offset = (SUDOKU_BLOCKS - 1) * self.cube;
        let free: Vec<usize> = (0..self.cube).filter(|&i| self.diag[i] == 1.0).collect();
        let a = DMatrix::from_fn(n, free.len(), |r, c| if r == offset + free[c] { 1.0 } else { 0.0 });
        let w = 1.0 / (SUDOKU_BLOCKS as f64).sqrt();
        let b = DMatrix::from_fn(n, self.cube, |r, c| if r % self.cube == c { w } else { 0.0 });
        SubspacePair::new(a, b)
    }

    /// The `2p x 2p` block of the damped matrix in principal-angle
    /// coordinates, `[[gamma/5 + 1, 2 gamma/5], [-2 gamma/5, gamma/5]] / (1 + gamma)`
    /// with identity blocks of order `p`.
    pub fn rate_block(&self, gamma: f64) -> DMatrix<f64> {
        let p = self.rank_c();
        let mut m = DMatrix::zeros(2 * p, 2 * p);
        let s = 1.0 / (5.0 * (1.0 + gamma));
        for i in 0..p {
            m[(i, i)] = (gamma + 5.0) * s;
            m[(i, p + i)] = 2.0 * gamma * s;
            m[(p + i, i)] = -2.0 * gamma * s;
            m[(p + i, p + i)] = gamma * s;
        }
        m
    }
}

/// A fitted or computed rate next to its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub quantity: String,
    pub window_start: usize,
    pub window_end: usize,
    pub slope: f64,
    pub r_squared: f64,
    pub theoretical: Option<f64>,
    pub deviation: Option<f64>,
}

impl RateReport {
    pub fn new(quantity: RateQuantity, est: &RateEstimate, theoretical: Option<f64>) -> Self {
        Self {
            quantity: quantity.name().to_string(),
            window_start: est.window.0,
            window_end: est.window.1,
            slope: est.rate,
            r_squared: est.r_squared,
            theoretical,
            deviation: theoretical.map(|t| est.rate - t),
        }
    }

    pub const CSV_HEADER: &'static str = "quantity,window_start,window_end,slope,r_squared,theoretical,deviation";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.10}"));
        format!(
            "{},{},{},{:.10},{:.10},{},{}",
            self.quantity,
            self.window_start,
            self.window_end,
            self.slope,
            self.r_squared,
            opt(self.theoretical),
            opt(self.deviation)
        )
    }
}
