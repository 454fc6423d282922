//! Seeded solve, benchmark and rate-analysis drivers shared by the CLI,
//! the acceptance suite and the benches.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    detect_finite_termination, fit_linear_rate_after, joint_termination, sudoku_ddr_rate,
    sudoku_dr_rate, RateQuantity, RateReport, TerminationBlock,
};
use crate::error::{Error, Result};
use crate::geometry::Projection;
use crate::puzzles::{QueensInstance, SudokuInstance};
use crate::sets::TieBreak;
use crate::splitting::{
    random_init, run, run_traced, Damping, IterationTrace, Method, Outcome, ProductProblem, RunResult, SplittingProblem,
    StopPolicy,
};

/// Parses a method name (`sdr`, `ddr`, `sdr-switched`, `altproj`); `ddr`
/// needs `gamma`.
pub fn parse_method(name: &str, gamma: Option<f64>) -> Result<Method> {
    match name {
        "sdr" => Ok(Method::Standard),
        "ddr" => {
            let g = gamma.ok_or_else(|| Error::InvalidParameter("ddr needs a gamma".into()))?;
            Ok(Method::Damped(Damping::new(g)?))
        }
        "sdr-switched" => Ok(Method::Switched),
        "altproj" => Ok(Method::AlternatingProjection),
        _ => Err(Error::InvalidParameter(format!("unknown method {name:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Puzzle {
    Sudoku(SudokuInstance),
    Queens(QueensInstance),
}

impl Puzzle {
    pub fn constraint_sets(&self, tie: TieBreak) -> Vec<Box<dyn Projection>> {
        match self {
            Puzzle::Sudoku(p) => p.constraint_sets(tie),
            Puzzle::Queens(p) => p.constraint_sets(tie),
        }
    }

    pub fn problem(&self, tie: TieBreak) -> Result<ProductProblem> {
        ProductProblem::new(self.constraint_sets(tie))
    }

    pub fn block_len(&self) -> usize {
        match self {
            Puzzle::Sudoku(p) => p.cube_len(),
            Puzzle::Queens(p) => p.board_len(),
        }
    }

    pub fn blocks(&self) -> usize {
        match self {
            Puzzle::Sudoku(_) => 5,
            Puzzle::Queens(_) => 4,
        }
    }

    pub fn is_solved_by(&self, x: &[f64]) -> bool {
        match self {
            Puzzle::Sudoku(p) => p.is_solved_by(x),
            Puzzle::Queens(p) => p.is_solved_by(x),
        }
    }

    /// Text of the rounded shadow point.
    pub fn render(&self, x: &[f64]) -> String {
        match self {
            Puzzle::Sudoku(p) => p.round(x).serialize(),
            Puzzle::Queens(p) => p.round(x).serialize(),
        }
    }

    /// Constraint violations of the rounded shadow point, one per line.
    pub fn violations(&self, x: &[f64]) -> Vec<String> {
        let v = match self {
            Puzzle::Sudoku(p) => p.validate(&p.round(x)),
            Puzzle::Queens(p) => p.validate(&p.round(x)),
        };
        v.violations.iter().map(ToString::to_string).collect()
    }

    /// Blocks whose `u` iterate terminates finitely near a solution.
    pub fn binary_blocks(&self) -> Vec<TerminationBlock> {
        (0..4).map(TerminationBlock::U).collect()
    }

    /// Closed-form local rate of `method`, when one is known.
    pub fn theoretical_rate(&self, method: Method) -> Option<f64> {
        match (self, method) {
            (Puzzle::Sudoku(_), Method::Standard) => Some(sudoku_dr_rate()),
            (Puzzle::Sudoku(_), Method::Damped(d)) => Some(sudoku_ddr_rate(d.gamma())),
            (Puzzle::Queens(_), Method::Damped(d)) => Some(d.eta()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub policy: StopPolicy,
    pub tie: TieBreak,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::Standard,
            policy: StopPolicy::default(),
            tie: TieBreak::LowestIndex,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub result: RunResult,
    pub shadow: Vec<f64>,
    pub rendered: String,
    pub violations: Vec<String>,
    pub wall_ms: f64,
}

/// One seeded run; `traced` adds reference residuals (two passes).
pub fn solve(puzzle: &Puzzle, cfg: &RunConfig, traced: bool) -> Result<SolveReport> {
    let problem = puzzle.problem(cfg.tie)?;
    let z0 = random_init(problem.blocks() * problem.block_len(), cfg.seed);
    let feasible = |x: &[f64]| puzzle.is_solved_by(x);
    let t = Instant::now();
    let result = if traced {
        run_traced(&problem, cfg.method, &cfg.policy, z0, &feasible)?
    } else {
        run(&problem, cfg.method, &cfg.policy, z0, &feasible, None)?
    };
    let wall_ms = t.elapsed().as_secs_f64() * 1e3;
    let shadow = problem.shadow(cfg.method, &result.state);
    Ok(SolveReport {
        rendered: puzzle.render(&shadow),
        violations: puzzle.violations(&shadow),
        shadow,
        result,
        wall_ms,
    })
}

/// Caps the global worker pool; a no-op without the `parallel` feature.
pub fn configure_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(Error::InvalidParameter("thread count must be >= 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Runs spread over the rayon pool (sequential without the `parallel`
    /// feature).
    #[default]
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub run_id: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub iterations: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub method: String,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub const CSV_HEADER: &'static str = "run_id,seed,outcome,iterations,wall_ms";

    pub fn runs(&self) -> usize {
        self.rows.len()
    }

    pub fn successes(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome == Outcome::FeasibleFound).count()
    }

    pub fn success_rate(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.successes() as f64 / self.rows.len() as f64
        }
    }

    fn successful_iterations(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .rows
            .iter()
            .filter(|r| r.outcome == Outcome::FeasibleFound)
            .map(|r| r.iterations)
            .collect();
        v.sort_unstable();
        v
    }

    /// Mean iterations over successful runs.
    pub fn mean_iterations(&self) -> Option<f64> {
        let v = self.successful_iterations();
        (!v.is_empty()).then(|| v.iter().sum::<usize>() as f64 / v.len() as f64)
    }

    pub fn median_iterations(&self) -> Option<f64> {
        let v = self.successful_iterations();
        match v.len() {
            0 => None,
            n if n % 2 == 1 => Some(v[n / 2] as f64),
            n => Some((v[n / 2 - 1] + v[n / 2]) as f64 / 2.0),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{:.3}\n", r.run_id, r.seed, r.outcome, r.iterations, r.wall_ms));
        }
        out
    }

    pub fn from_csv(method: &str, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == Self::CSV_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    column: 1,
                    message: "missing bench header".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: i + 1,
                column: 1,
                message,
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(format!("expected 5 fields, got {}", f.len())));
            }
            rows.push(BenchRow {
                run_id: f[0].parse().map_err(|e| bad(format!("{e}")))?,
                seed: f[1].parse().map_err(|e| bad(format!("{e}")))?,
                outcome: f[2].parse().map_err(|e: Error| bad(e.to_string()))?,
                iterations: f[3].parse().map_err(|e| bad(format!("{e}")))?,
                wall_ms: f[4].parse().map_err(|e| bad(format!("{e}")))?,
            });
        }
        Ok(Self {
            method: method.to_string(),
            rows,
        })
    }
}

/// Runs seeds `base_seed + i` for `i < runs`; rows are ordered by run id
/// whatever the execution mode.
pub fn bench(
    puzzle: &Puzzle,
    method: Method,
    policy: &StopPolicy,
    tie: TieBreak,
    base_seed: u64,
    runs: usize,
    mode: ExecMode,
) -> Result<BenchReport> {
    policy.validate()?;
    let problem = puzzle.problem(tie)?;
    let len = problem.blocks() * problem.block_len();
    let one = |run_id: usize| -> Result<BenchRow> {
        let seed = base_seed.wrapping_add(run_id as u64);
        let t = Instant::now();
        let r = run(&problem, method, policy, random_init(len, seed), &|x| puzzle.is_solved_by(x), None)?;
        Ok(BenchRow {
            run_id,
            seed,
            outcome: r.outcome,
            iterations: r.iterations,
            wall_ms: t.elapsed().as_secs_f64() * 1e3,
        })
    };
    let rows = match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            (0..runs).into_par_iter().map(one).collect::<Result<Vec<_>>>()?
        }
        _ => (0..runs).map(one).collect::<Result<Vec<_>>>()?,
    };
    Ok(BenchReport {
        method: method.to_string(),
        rows,
    })
}

/// Policy for rate runs: keep iterating past feasibility until the z-step
/// reaches the residual floor.
pub fn rate_policy(base: &StopPolicy) -> StopPolicy {
    StopPolicy {
        stop_on_feasible: false,
        z_step_tol: base.z_step_tol.min(1e-13),
        ..*base
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateAnalysis {
    /// Absent when the trace was loaded from a file.
    pub outcome: Option<Outcome>,
    pub iterations: usize,
    /// Termination index of each `u` block; `None` also when the trace has
    /// no reference point.
    pub u_termination: Vec<Option<usize>>,
    pub z_termination: Option<usize>,
    /// Iteration after which all binary blocks are constant.
    pub binary_termination: Option<usize>,
    pub reports: Vec<RateReport>,
    /// Quantities that could not be fitted, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl RateAnalysis {
    pub fn report(&self, quantity: RateQuantity) -> Option<&RateReport> {
        self.reports.iter().find(|r| r.quantity == quantity.name())
    }
}

/// Locates finite termination and, when `z` does not terminate, fits
/// `|z_k - z*|` and `|z_k - z_{k-1}|` after the `binary` blocks have become
/// constant.
pub fn analyze_trace(
    trace: &IterationTrace,
    binary: &[TerminationBlock],
    theory: Option<f64>,
    tail_fraction: f64,
) -> Result<RateAnalysis> {
    let optional = |r: Result<Option<usize>>| match r {
        Err(Error::InsufficientData(_)) => Ok(None),
        other => other,
    };
    let u_termination = (0..trace.blocks)
        .map(|i| optional(detect_finite_termination(trace, TerminationBlock::U(i))))
        .collect::<Result<Vec<_>>>()?;
    let z_termination = detect_finite_termination(trace, TerminationBlock::Z)?;
    let binary = binary.iter().copied().filter(|b| match b {
        TerminationBlock::U(i) => *i < trace.blocks,
        _ => true,
    });
    let binary_termination = optional(joint_termination(trace, &binary.collect::<Vec<_>>()))?;
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    if let Some(k) = z_termination {
        for q in [RateQuantity::ZResidual, RateQuantity::ZStep] {
            skipped.push((q.name().to_string(), format!("z is constant from K={k}")));
        }
    } else {
        let k_min = binary_termination.unwrap_or(0);
        for q in [RateQuantity::ZResidual, RateQuantity::ZStep] {
            match fit_linear_rate_after(trace, q, k_min, tail_fraction) {
                Ok(est) => reports.push(RateReport::new(q, &est, theory)),
                Err(Error::InsufficientData(why)) => skipped.push((q.name().to_string(), why)),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(RateAnalysis {
        outcome: None,
        iterations: trace.len(),
        u_termination,
        z_termination,
        binary_termination,
        reports,
        skipped,
    })
}

/// Runs one traced solve past feasibility and analyzes its trace.
pub fn analyze_rates(puzzle: &Puzzle, cfg: &RunConfig, tail_fraction: f64) -> Result<(SolveReport, RateAnalysis)> {
    let cfg = RunConfig {
        policy: rate_policy(&cfg.policy),
        ..*cfg
    };
    let report = solve(puzzle, &cfg, true)?;
    let mut analysis = analyze_trace(
        &report.result.trace,
        &puzzle.binary_blocks(),
        puzzle.theoretical_rate(cfg.method),
        tail_fraction,
    )?;
    analysis.outcome = Some(report.result.outcome);
    Ok((report, analysis))
}
