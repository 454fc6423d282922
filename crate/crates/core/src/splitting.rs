//! Douglas-Rachford iterations for two-set and product-space feasibility
//! problems, alternating projection as a baseline, and the run loop with
//! stopping logic and per-iteration traces.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_dim, distance, relaxed_project_into, Projection, Relaxation};

/// Below this block length the per-block work of a product step stays on
/// the calling thread.
#[cfg(feature = "parallel")]
const PAR_MIN_BLOCK: usize = 4096;

/// Damping `gamma > 0`; `+inf` is standard Douglas-Rachford.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damping(f64);

impl Damping {
    pub const STANDARD: Damping = Damping(f64::INFINITY);

    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 {
            Ok(Damping(gamma))
        } else {
            Err(Error::InvalidParameter(format!("damping gamma = {gamma} must be > 0")))
        }
    }

    pub fn gamma(self) -> f64 {
        self.0
    }

    /// Relaxation `gamma / (1 + gamma)` applied to the affine projection.
    pub fn relaxation(self) -> Relaxation {
        Relaxation::from_damping(self.0).expect("validated on construction")
    }

    /// `gamma / (1 + gamma)`, the local rate on finite sets.
    pub fn eta(self) -> f64 {
        self.relaxation().value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// `x = P_S z, u = P_C(2x - z), z += u - x`.
    Standard,
    /// As `Standard` with `x = P_S^{gamma/(1+gamma)} z`.
    Damped(Damping),
    /// Projection order exchanged: `x = P_C z, u = P_S(2x - z)`.
    Switched,
    /// `x = P_S P_C x`.
    AlternatingProjection,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Standard => write!(f, "sdr"),
            Method::Damped(d) => write!(f, "ddr(gamma={})", d.gamma()),
            Method::Switched => write!(f, "sdr-switched"),
            Method::AlternatingProjection => write!(f, "altproj"),
        }
    }
}

/// Iterates of one step on a two-set problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

fn two_set_step<C, S>(c: &C, s: &S, method: Method, z: &mut [f64], x: &mut [f64], u: &mut [f64], w: &mut [f64])
where
    C: Projection + ?Sized,
    S: Projection + ?Sized,
{
    match method {
        Method::Standard | Method::Damped(_) => {
            let lambda = match method {
                Method::Damped(d) => d.relaxation(),
                _ => Relaxation::PROJECTION,
            };
            relaxed_project_into(s, lambda, z, x);
            for ((wi, xi), zi) in w.iter_mut().zip(&*x).zip(&*z) {
                *wi = 2.0 * xi - zi;
            }
            c.project_into(w, u);
            for ((zi, ui), xi) in z.iter_mut().zip(&*u).zip(&*x) {
                *zi += ui - xi;
            }
        }
        Method::Switched => {
            c.project_into(z, x);
            for ((wi, xi), zi) in w.iter_mut().zip(&*x).zip(&*z) {
                *wi = 2.0 * xi - zi;
            }
            s.project_into(w, u);
            for ((zi, ui), xi) in z.iter_mut().zip(&*u).zip(&*x) {
                *zi += ui - xi;
            }
        }
        Method::AlternatingProjection => {
            c.project_into(x, u);
            s.project_into(u, x);
            z.copy_from_slice(x);
        }
    }
}

fn step_alloc<C, S>(c: &C, s: &S, method: Method, z: &[f64]) -> Step
where
    C: Projection + ?Sized,
    S: Projection + ?Sized,
{
    let n = z.len();
    let mut z = z.to_vec();
    let (mut x, mut u, mut w) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    two_set_step(c, s, method, &mut z, &mut x, &mut u, &mut w);
    Step { z, x, u }
}

/// One standard Douglas-Rachford step from `z`.
pub fn dr_step<C, S>(c: &C, s: &S, z: &[f64]) -> Step
where
    C: Projection + ?Sized,
    S: Projection + ?Sized,
{
    step_alloc(c, s, Method::Standard, z)
}

/// One damped step; `S` must be affine for the damping to be meaningful.
pub fn ddr_step<C, S>(c: &C, s: &S, damping: Damping, z: &[f64]) -> Step
where
    C: Projection + ?Sized,
    S: Projection + ?Sized,
{
    step_alloc(c, s, Method::Damped(damping), z)
}

pub fn dr_step_switched<C, S>(c: &C, s: &S, z: &[f64]) -> Step
where
    C: Projection + ?Sized,
    S: Projection + ?Sized,
{
    step_alloc(c, s, Method::Switched, z)
}

pub fn alternating_projection_step<C, S>(c: &C, s: &S, x: &[f64]) -> Vec<f64>
where
    C: Projection + ?Sized,
    S: Projection + ?Sized,
{
    s.project(&c.project(x))
}

/// Iterates of a run. Vectors are stored as `blocks` stacked copies of
/// length `block_len`; two-set problems have a single block.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    pub blocks: usize,
    pub block_len: usize,
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub k: usize,
}

impl SplitState {
    /// Starting state; for alternating projection `z0` is the first `x`.
    pub fn new(blocks: usize, block_len: usize, z0: Vec<f64>) -> Result<Self> {
        check_dim(blocks * block_len, z0.len())?;
        crate::geometry::check_finite(&z0)?;
        Ok(Self {
            blocks,
            block_len,
            x: z0.clone(),
            u: z0.clone(),
            z: z0,
            k: 0,
        })
    }

    pub fn block<'a>(&self, v: &'a [f64], i: usize) -> &'a [f64] {
        &v[i * self.block_len..(i + 1) * self.block_len]
    }

    fn mean_of(&self, v: &[f64]) -> Vec<f64> {
        block_mean(v, self.blocks, self.block_len)
    }

    pub fn x_mean(&self) -> Vec<f64> {
        self.mean_of(&self.x)
    }

    pub fn u_mean(&self) -> Vec<f64> {
        self.mean_of(&self.u)
    }
}

fn block_mean(v: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut mean = vec![0.0; n];
    for block in v.chunks_exact(n) {
        for (a, b) in mean.iter_mut().zip(block) {
            *a += b;
        }
    }
    let inv = 1.0 / m as f64;
    mean.iter_mut().for_each(|a| *a *= inv);
    mean
}

/// A feasibility problem the run loop can drive.
pub trait SplittingProblem: Sync {
    fn blocks(&self) -> usize;
    fn block_len(&self) -> usize;

    /// Advances `state` by one iteration of `method`; `scratch` has the
    /// stacked length.
    fn step(&self, method: Method, state: &mut SplitState, scratch: &mut [f64]);

    /// Half squared distance from the C-side iterate to `S`.
    fn objective(&self, method: Method, state: &SplitState) -> f64;

    /// The shadow point that should solve the problem, one block long.
    fn shadow(&self, method: Method, state: &SplitState) -> Vec<f64> {
        match method {
            Method::Switched => state.u_mean(),
            _ => state.x_mean(),
        }
    }
}

fn c_side(method: Method, state: &SplitState) -> &[f64] {
    match method {
        Method::Switched => &state.x,
        _ => &state.u,
    }
}

/// `C` closed, `S` (usually affine) in the same space.
pub struct TwoSetProblem<C, S> {
    pub c: C,
    pub s: S,
}

impl<C: Projection, S: Projection> TwoSetProblem<C, S> {
    pub fn new(c: C, s: S) -> Result<Self> {
        check_dim(c.dim(), s.dim())?;
        Ok(Self { c, s })
    }
}

impl<C: Projection, S: Projection> SplittingProblem for TwoSetProblem<C, S> {
    fn blocks(&self) -> usize {
        1
    }

    fn block_len(&self) -> usize {
        self.c.dim()
    }

    fn step(&self, method: Method, state: &mut SplitState, scratch: &mut [f64]) {
        two_set_step(&self.c, &self.s, method, &mut state.z, &mut state.x, &mut state.u, scratch);
        state.k += 1;
    }

    fn objective(&self, method: Method, state: &SplitState) -> f64 {
        crate::geometry::half_sq_distance(&self.s, c_side(method, state))
    }
}

/// Intersection of `m` sets recast over `m` stacked copies with the
/// consensus (diagonal) subspace.
pub struct ProductProblem {
    sets: Vec<Box<dyn Projection>>,
    n: usize,
}

impl ProductProblem {
    pub fn new(sets: Vec<Box<dyn Projection>>) -> Result<Self> {
        if sets.len() < 2 {
            return Err(Error::InvalidParameter("product space needs at least two sets".into()));
        }
        let n = sets[0].dim();
        for s in &sets {
            check_dim(n, s.dim())?;
        }
        Ok(Self { sets, n })
    }

    pub fn sets(&self) -> &[Box<dyn Projection>] {
        &self.sets
    }

    /// `P_C` on the stacked space, block by block.
    pub fn stacked_sets(&self) -> StackedSets<'_> {
        StackedSets(self)
    }

    pub fn consensus(&self) -> Consensus {
        Consensus {
            blocks: self.sets.len(),
            block_len: self.n,
        }
    }

    fn for_each_block<F>(&self, state: &mut SplitState, scratch: &mut [f64], f: F)
    where
        F: Fn(&dyn Projection, &mut [f64], &mut [f64], &mut [f64], &mut [f64]) + Sync,
    {
        let n = self.n;
        #[cfg(feature = "parallel")]
        if n >= PAR_MIN_BLOCK {
            use rayon::prelude::*;
            self.sets
                .par_iter()
                .zip(state.z.par_chunks_mut(n))
                .zip(state.x.par_chunks_mut(n))
                .zip(state.u.par_chunks_mut(n))
                .zip(scratch.par_chunks_mut(n))
                .for_each(|((((p, z), x), u), w)| f(p.as_ref(), z, x, u, w));
            return;
        }
        for ((((p, z), x), u), w) in self
            .sets
            .iter()
            .zip(state.z.chunks_mut(n))
            .zip(state.x.chunks_mut(n))
            .zip(state.u.chunks_mut(n))
            .zip(scratch.chunks_mut(n))
        {
            f(p.as_ref(), z, x, u, w);
        }
    }
}

impl SplittingProblem for ProductProblem {
    fn blocks(&self) -> usize {
        self.sets.len()
    }

    fn block_len(&self) -> usize {
        self.n
    }

    fn step(&self, method: Method, state: &mut SplitState, scratch: &mut [f64]) {
        let m = self.sets.len();
        let n = self.n;
        match method {
            Method::Standard | Method::Damped(_) => {
                let lambda = match method {
                    Method::Damped(d) => d.relaxation().value(),
                    _ => 1.0,
                };
                let xbar = block_mean(&state.z, m, n);
                self.for_each_block(state, scratch, |p, z, x, u, w| {
                    if lambda == 1.0 {
                        x.copy_from_slice(&xbar);
                    } else {
                        for ((xi, zi), bi) in x.iter_mut().zip(&*z).zip(&xbar) {
                            *xi = lambda * bi + (1.0 - lambda) * zi;
                        }
                    }
                    for ((wi, xi), zi) in w.iter_mut().zip(&*x).zip(&*z) {
                        *wi = 2.0 * xi - zi;
                    }
                    p.project_into(w, u);
                    for ((zi, ui), xi) in z.iter_mut().zip(&*u).zip(&*x) {
                        *zi += ui - xi;
                    }
                });
            }
            Method::Switched => {
                self.for_each_block(state, scratch, |p, z, x, _u, w| {
                    p.project_into(z, x);
                    for ((wi, xi), zi) in w.iter_mut().zip(&*x).zip(&*z) {
                        *wi = 2.0 * xi - zi;
                    }
                });
                let ubar = block_mean(scratch, m, n);
                self.for_each_block(state, scratch, |_p, z, x, u, _w| {
                    u.copy_from_slice(&ubar);
                    for ((zi, ui), xi) in z.iter_mut().zip(&*u).zip(&*x) {
                        *zi += ui - xi;
                    }
                });
            }
            Method::AlternatingProjection => {
                self.for_each_block(state, scratch, |p, _z, x, u, _w| {
                    p.project_into(x, u);
                });
                let xbar = block_mean(&state.u, m, n);
                for (x, z) in state.x.chunks_mut(n).zip(state.z.chunks_mut(n)) {
                    x.copy_from_slice(&xbar);
                    z.copy_from_slice(&xbar);
                }
            }
        }
        state.k += 1;
    }

    fn objective(&self, method: Method, state: &SplitState) -> f64 {
        let c = c_side(method, state);
        let mean = block_mean(c, self.sets.len(), self.n);
        0.5 * c
            .chunks_exact(self.n)
            .map(|b| b.iter().zip(&mean).map(|(a, m)| (a - m) * (a - m)).sum::<f64>())
            .sum::<f64>()
    }
}

/// Blockwise projection onto `C_1 x ... x C_m`.
pub struct StackedSets<'a>(&'a ProductProblem);

impl Projection for StackedSets<'_> {
    fn dim(&self) -> usize {
        self.0.n * self.0.sets.len()
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.0.n;
        for ((p, xi), oi) in self.0.sets.iter().zip(x.chunks(n)).zip(out.chunks_mut(n)) {
            p.project_into(xi, oi);
        }
    }
}

/// Projection onto the diagonal `{x_1 = ... = x_m}`: block averaging.
#[derive(Debug, Clone, Copy)]
pub struct Consensus {
    pub blocks: usize,
    pub block_len: usize,
}

impl Projection for Consensus {
    fn dim(&self) -> usize {
        self.blocks * self.block_len
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        let mean = block_mean(x, self.blocks, self.block_len);
        for o in out.chunks_mut(self.block_len) {
            o.copy_from_slice(&mean);
        }
    }
}

fn product_step(problem: &ProductProblem, method: Method, state: &SplitState) -> SplitState {
    let mut next = state.clone();
    let mut scratch = vec![0.0; state.z.len()];
    problem.step(method, &mut next, &mut scratch);
    next
}

/// One standard step on the product space.
pub fn dr_product_step(problem: &ProductProblem, state: &SplitState) -> SplitState {
    product_step(problem, Method::Standard, state)
}

/// One damped step on the product space.
pub fn ddr_product_step(problem: &ProductProblem, damping: Damping, state: &SplitState) -> SplitState {
    product_step(problem, Method::Damped(damping), state)
}

/// I.i.d. uniform `[0, 1)` entries from a seeded generator.
pub fn random_init(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random::<f64>()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopPolicy {
    pub max_iter: usize,
    /// Stopping tests are only evaluated from this iteration on.
    pub min_iter: usize,
    pub z_step_tol: f64,
    /// Stop as soon as the rounded shadow passes the feasibility check;
    /// otherwise run until the z-step test or `max_iter`.
    pub stop_on_feasible: bool,
}

impl Default for StopPolicy {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            min_iter: 100,
            z_step_tol: 1e-12,
            stop_on_feasible: true,
        }
    }
}

impl StopPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.min_iter > self.max_iter {
            return Err(Error::InvalidParameter(format!(
                "min_iter {} > max_iter {}",
                self.min_iter, self.max_iter
            )));
        }
        if !(self.z_step_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {} < 0", self.z_step_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    FeasibleFound,
    /// The z-step fell below tolerance at an infeasible point.
    Stalled,
    MaxIter,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::FeasibleFound => "feasible",
            Outcome::Stalled => "stalled",
            Outcome::MaxIter => "max-iter",
        })
    }
}

impl std::str::FromStr for Outcome {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "feasible" => Ok(Outcome::FeasibleFound),
            "stalled" => Ok(Outcome::Stalled),
            "max-iter" => Ok(Outcome::MaxIter),
            _ => Err(Error::InvalidParameter(format!("unknown outcome {s:?}"))),
        }
    }
}

/// Points the trace residuals are measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub z: Vec<f64>,
    /// Block mean of `x`.
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl Reference {
    pub fn from_state(state: &SplitState) -> Self {
        Self {
            z: state.z.clone(),
            x: state.x_mean(),
            u: state.u.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `|z_k - z_{k-1}|`.
    pub z_step: f64,
    pub z_res: Option<f64>,
    pub x_res: Option<f64>,
    /// Per block, the number of entries where `u_k` differs from the reference.
    pub u_mismatch: Option<Vec<usize>>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationTrace {
    pub blocks: usize,
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_reference(&self) -> bool {
        self.records.first().is_some_and(|r| r.z_res.is_some())
    }

    /// CSV with header `k,z_step,z_res,x_res,u0_mismatch..,objective`;
    /// residual cells are empty when no reference was set.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,z_step,z_res,x_res");
        for i in 0..self.blocks {
            out.push_str(&format!(",u{i}_mismatch"));
        }
        out.push_str(",objective\n");
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:e}"));
        for r in &self.records {
            out.push_str(&format!("{},{:e},{},{}", r.k, r.z_step, opt(r.z_res), opt(r.x_res)));
            for i in 0..self.blocks {
                match &r.u_mismatch {
                    Some(m) => out.push_str(&format!(",{}", m[i])),
                    None => out.push(','),
                }
            }
            out.push_str(&format!(",{:e}\n", r.objective));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            column: 1,
            message: "empty trace".into(),
        })?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        let expected_prefix = ["k", "z_step", "z_res", "x_res"];
        if cols.len() < 5 || cols[..4] != expected_prefix || cols.last() != Some(&"objective") {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("unexpected trace header {header:?}"),
            });
        }
        let blocks = cols.len() - 5;
        let mut records = Vec::new();
        for (ln, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            let err = |column: usize, message: String| Error::Parse {
                line: ln + 1,
                column,
                message,
            };
            if cells.len() != cols.len() {
                return Err(err(1, format!("expected {} cells, found {}", cols.len(), cells.len())));
            }
            let num = |c: usize| -> Result<f64> {
                cells[c].parse().map_err(|_| err(c + 1, format!("bad number {:?}", cells[c])))
            };
            let opt = |c: usize| -> Result<Option<f64>> {
                if cells[c].is_empty() { Ok(None) } else { num(c).map(Some) }
            };
            let k = cells[0].parse().map_err(|_| err(1, format!("bad index {:?}", cells[0])))?;
            let u_mismatch = if blocks > 0 && cells[4].is_empty() {
                None
            } else {
                Some(
                    (0..blocks)
                        .map(|i| cells[4 + i].parse().map_err(|_| err(5 + i, "bad count".into())))
                        .collect::<Result<Vec<usize>>>()?,
                )
            };
            records.push(TraceRecord {
                k,
                z_step: num(1)?,
                z_res: opt(2)?,
                x_res: opt(3)?,
                u_mismatch,
                objective: num(cols.len() - 1)?,
            });
        }
        Ok(Self { blocks, records })
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub state: SplitState,
    pub trace: IterationTrace,
    pub outcome: Outcome,
    /// Iterations executed; equals the number of trace records.
    pub iterations: usize,
}

/// Runs `method` from `z0` until a stopping test fires.
///
/// `feasible` receives the shadow point (one block) and decides whether it
/// solves the problem. With a `reference`, each record also carries the
/// residuals against it.
pub fn run<P: SplittingProblem + ?Sized>(
    problem: &P,
    method: Method,
    policy: &StopPolicy,
    z0: Vec<f64>,
    feasible: &dyn Fn(&[f64]) -> bool,
    reference: Option<&Reference>,
) -> Result<RunResult> {
    policy.validate()?;
    let mut state = SplitState::new(problem.blocks(), problem.block_len(), z0)?;
    if let Some(r) = reference {
        check_dim(state.z.len(), r.z.len())?;
        check_dim(state.block_len, r.x.len())?;
        check_dim(state.u.len(), r.u.len())?;
    }
    let mut scratch = vec![0.0; state.z.len()];
    let mut prev = state.z.clone();
    let mut trace = IterationTrace {
        blocks: state.blocks,
        records: Vec::new(),
    };
    let mut outcome = None;
    for k in 1..=policy.max_iter {
        prev.copy_from_slice(&state.z);
        problem.step(method, &mut state, &mut scratch);
        let z_step = distance(&state.z, &prev);
        trace.records.push(record(problem, method, &state, k, z_step, reference));

        if k < policy.min_iter {
            continue;
        }
        if policy.stop_on_feasible && feasible(&problem.shadow(method, &state)) {
            outcome = Some(Outcome::FeasibleFound);
            break;
        }
        if z_step <= policy.z_step_tol {
            outcome = Some(if feasible(&problem.shadow(method, &state)) {
                Outcome::FeasibleFound
            } else {
                Outcome::Stalled
            });
            break;
        }
    }
    let outcome = outcome.unwrap_or_else(|| {
        if feasible(&problem.shadow(method, &state)) {
            Outcome::FeasibleFound
        } else {
            Outcome::MaxIter
        }
    });
    Ok(RunResult {
        iterations: state.k,
        state,
        trace,
        outcome,
    })
}

fn record<P: SplittingProblem + ?Sized>(
    problem: &P,
    method: Method,
    state: &SplitState,
    k: usize,
    z_step: f64,
    reference: Option<&Reference>,
) -> TraceRecord {
    let (z_res, x_res, u_mismatch) = match reference {
        Some(r) => {
            let mismatch = state
                .u
                .chunks(state.block_len)
                .zip(r.u.chunks(state.block_len))
                .map(|(a, b)| a.iter().zip(b).filter(|(p, q)| p != q).count())
                .collect();
            (
                Some(distance(&state.z, &r.z)),
                Some(distance(&state.x_mean(), &r.x)),
                Some(mismatch),
            )
        }
        None => (None, None, None),
    };
    TraceRecord {
        k,
        z_step,
        z_res,
        x_res,
        u_mismatch,
        objective: problem.objective(method, state),
    }
}

/// Runs twice: the first pass finds the final iterate, the second repeats
/// the identical run and measures residuals against it.
pub fn run_traced<P: SplittingProblem + ?Sized>(
    problem: &P,
    method: Method,
    policy: &StopPolicy,
    z0: Vec<f64>,
    feasible: &dyn Fn(&[f64]) -> bool,
) -> Result<RunResult> {
    let first = run(problem, method, policy, z0.clone(), feasible, None)?;
    let reference = Reference::from_state(&first.state);
    let second = run(problem, method, policy, z0, feasible, Some(&reference))?;
    debug_assert_eq!(first.state, second.state);
    Ok(second)
}
