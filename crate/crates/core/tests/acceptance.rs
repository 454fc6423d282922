//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Set `DR_ACCEPT_S16=1` to add the optional 16x16 size-independence run.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use drfeas::analysis::{
    detect_finite_termination, eigenvalues, fit_linear_rate, friedrichs_angle, semi_simple_ranks, spectral_radius,
    sudoku_ddr_block_eigenvalues, sudoku_ddr_spectrum, RateQuantity, SudokuLinearization, TerminationBlock,
    DEFAULT_DENSE_CAP,
};
use drfeas::experiment::{analyze_rates, bench, ExecMode, Puzzle, RunConfig};
use drfeas::geometry::{distance, AffineSubspace, Projection};
use drfeas::puzzles::{circle_line_instance, QueensInstance, SudokuGrid, SudokuInstance};
use drfeas::sets::{Group, GroupKind, GroupProjection, TieBreak, UnitCircle};
use drfeas::splitting::{
    ddr_step, dr_step, random_init, run, Damping, IterationTrace, Method, Outcome, ProductProblem, SplitState,
    SplittingProblem, StopPolicy, TraceRecord, TwoSetProblem,
};

struct Suite {
    results: Vec<(String, bool)>,
}

impl Suite {
    fn record(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((id.to_string(), pass));
    }
}

const SQRT5_5: f64 = 0.447_213_595_499_958;

/// Fitted `|z_k - z*|` slopes of the first `want` feasible sDR runs, one
/// generated instance per seed.
fn sudoku_slopes(s: usize, clues: usize, want: usize) -> (Vec<f64>, usize, f64) {
    let mut slopes = Vec::new();
    let mut tried = 0;
    let mut slowest: f64 = 0.0;
    for seed in 0..(3 * want as u64) {
        if slopes.len() == want {
            break;
        }
        tried += 1;
        let (inst, _) = SudokuInstance::generate(s, clues, seed).unwrap();
        let cfg = RunConfig {
            seed,
            ..RunConfig::default()
        };
        let t = Instant::now();
        let (_, a) = analyze_rates(&Puzzle::Sudoku(inst), &cfg, 1.0).unwrap();
        slowest = slowest.max(t.elapsed().as_secs_f64());
        if a.outcome != Some(Outcome::FeasibleFound) {
            continue;
        }
        slopes.push(a.report(RateQuantity::ZResidual).map_or(f64::NAN, |r| r.slope));
    }
    (slopes, tried, slowest)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn criteria_1_2(suite: &mut Suite) {
    let mut means = Vec::new();
    for (s, clues) in [(4, 4), (9, 37)] {
        let (slopes, tried, slowest) = sudoku_slopes(s, clues, 10);
        let good = slopes.iter().filter(|r| (*r - SQRT5_5).abs() <= 0.02).count();
        let m = mean(&slopes);
        means.push(m);
        suite.record(
            &format!("1 (s={s})"),
            slopes.len() == 10 && good >= 8 && slowest < 10.0,
            format!(
                "{good}/{} feasible runs ({tried} seeds) fit |z_k - z*| within 0.02 of sqrt(5)/5 = {SQRT5_5:.4}; \
                 mean {m:.6}, min {:.6}, max {:.6}; slowest run {slowest:.2} s",
                slopes.len(),
                slopes.iter().cloned().fold(f64::INFINITY, f64::min),
                slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ),
        );
    }
    let diff = (means[0] - means[1]).abs();
    suite.record("2", diff < 0.03, format!("mean slope s=4 {:.6} vs s=9 {:.6}, difference {diff:.2e} < 0.03", means[0], means[1]));
    if std::env::var_os("DR_ACCEPT_S16").is_some() {
        let (slopes, tried, slowest) = sudoku_slopes(16, 160, 3);
        let m = mean(&slopes);
        let diff = (m - means[0]).abs();
        suite.record(
            "2 (s=16)",
            !slopes.is_empty() && diff < 0.03,
            format!("{} feasible of {tried}; mean slope {m:.6}, difference to s=4 {diff:.2e}; slowest {slowest:.2} s", slopes.len()),
        );
    }
}

fn sudoku4() -> SudokuLinearization {
    let (inst, _) = SudokuInstance::generate(4, 4, 3).unwrap();
    SudokuLinearization::new(&inst, DEFAULT_DENSE_CAP).unwrap()
}

fn criterion_3(suite: &mut Suite) {
    let t = Instant::now();
    let lin = sudoku4();
    let prod = lin.projector_c() * lin.projector_s();
    let sv: Vec<f64> = prod.singular_values().iter().copied().filter(|&v| v > 1e-10).collect();
    let sv_err = sv.iter().map(|v| (v - SQRT5_5).abs()).fold(0.0, f64::max);
    let mut ok = sv.len() == lin.rank_c() && sv_err <= 1e-10;
    let mut detail = format!("{} nonzero singular values of P_C P_S, max |sigma - sqrt(5)/5| = {sv_err:.1e}", sv.len());

    let cos_f = friedrichs_angle(&lin.ranges().unwrap()).unwrap().cos();
    ok &= (cos_f - SQRT5_5).abs() <= 1e-10;
    detail.push_str(&format!("; cos theta_F = {cos_f:.12}"));

    let mut worst: f64 = 0.0;
    for gamma in [0.1, 0.2, 0.5, 1.0] {
        let eig = eigenvalues(&lin.matrix(Damping::new(gamma).unwrap())).unwrap();
        let closed = sudoku_ddr_spectrum(gamma);
        let mut err: f64 = 0.0;
        for &(re, im) in &eig {
            let d = closed.iter().map(|c| (re - c).abs()).fold(f64::INFINITY, f64::min);
            err = err.max(d.hypot(im));
        }
        // every closed-form value must be attained
        for c in closed {
            let d = eig.iter().map(|z| (z.0 - c).hypot(z.1)).fold(f64::INFINITY, f64::min);
            err = err.max(d);
        }
        worst = worst.max(err);
        ok &= eig.len() == lin.dim();
    }
    ok &= worst <= 1e-8;
    let lp = sudoku_ddr_block_eigenvalues(0.2).1;
    ok &= (lp - 0.86130).abs() <= 1e-5;
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 5.0;
    detail.push_str(&format!(
        "; M_gamma spectra at gamma in {{0.1, 0.2, 0.5, 1}} within {worst:.1e} of {{0, l-, g/(1+g), l+}}; \
         l+(0.2) = {lp:.6} (paper 0.86130); {secs:.2} s"
    ));
    suite.record("3", ok, detail);
}

fn criterion_4(suite: &mut Suite) {
    let gamma = 0.2;
    let lin = sudoku4();
    let p = lin.rank_c();
    let lp = sudoku_ddr_block_eigenvalues(gamma).1;
    // the block as printed in the proof carries a factor (1 + gamma)
    let block = lin.rate_block(gamma);
    let paper_mp = &block * (1.0 + gamma);
    let a = semi_simple_ranks(&block, lp).unwrap();
    let b = semi_simple_ranks(&paper_mp, (1.0 + gamma) * lp).unwrap();
    let literal = semi_simple_ranks(&paper_mp, lp).unwrap();
    let full = semi_simple_ranks(&lin.matrix(Damping::new(gamma).unwrap()), lp).unwrap();
    let ok = (a.rank, a.rank_squared) == (p, p)
        && (b.rank, b.rank_squared) == (p, p)
        && (full.rank, full.rank_squared) == (lin.dim() - p, lin.dim() - p);
    suite.record(
        "4",
        ok,
        format!(
            "p = {p}; rank(M_p/(1+g) - l+ I) = {}, squared {}; rank(M_p - (1+g) l+ I) = {}, squared {}; \
             full M_gamma: {}/{} (n - p = {}); literal rank(M_p - l+ I) = {} (l+ is not an eigenvalue of the unscaled block)",
            a.rank,
            a.rank_squared,
            b.rank,
            b.rank_squared,
            full.rank,
            full.rank_squared,
            lin.dim() - p,
            literal.rank
        ),
    );
}

fn criterion_5(suite: &mut Suite) {
    let t = Instant::now();
    let q = QueensInstance::new(8).unwrap();
    let prob = ProductProblem::new(q.constraint_sets(TieBreak::LowestIndex)).unwrap();
    let policy = StopPolicy {
        z_step_tol: 1e-14,
        stop_on_feasible: false,
        ..StopPolicy::default()
    };
    let (mut ok, mut terminated) = (0, 0);
    let mut ks = Vec::new();
    for seed in 0..100 {
        let r = run(&prob, Method::Standard, &policy, random_init(4 * 64, seed), &|x| q.is_solved_by(x), None).unwrap();
        if r.outcome != Outcome::FeasibleFound {
            continue;
        }
        ok += 1;
        if let Some(k) = detect_finite_termination(&r.trace, TerminationBlock::Z).unwrap() {
            terminated += 1;
            ks.push(k);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ks.sort_unstable();
    suite.record(
        "5",
        ok >= 80 && terminated == ok && secs < 60.0,
        format!(
            "8-queens sDR: {ok}/100 feasible (paper 94.8%), {terminated} of them with constant z from some K \
             (median K {}, max K {}); {secs:.2} s",
            ks.get(ks.len() / 2).copied().unwrap_or(0),
            ks.last().copied().unwrap_or(0)
        ),
    );
}

fn criterion_6(suite: &mut Suite) {
    let (sudoku, _) = SudokuInstance::generate(9, 37, 1).unwrap();
    let sudoku = Puzzle::Sudoku(sudoku);
    let queens = Puzzle::Queens(QueensInstance::new(8).unwrap());
    let policy = StopPolicy::default();
    let ddr = Method::Damped(Damping::new(0.2).unwrap());
    let go = |p: &Puzzle, m: Method| bench(p, m, &policy, TieBreak::LowestIndex, 0, 100, ExecMode::Parallel).unwrap();
    let s_sdr = go(&sudoku, Method::Standard);
    let s_ddr = go(&sudoku, ddr);
    let q_ddr = go(&queens, ddr);
    let q_sdr = go(&queens, Method::Standard);
    let avg = |r: &drfeas::experiment::BenchReport| r.mean_iterations().map_or("-".into(), |m| format!("{m:.1}"));
    suite.record(
        "6",
        s_sdr.success_rate() == 1.0 && s_ddr.successes() == 0 && q_ddr.successes() == 0,
        format!(
            "37-clue 9x9 Sudoku: sDR {}/100 (avg {} itr; paper 100%, 114), dDR(1/5) {}/100 (paper 0); \
             8-queens: dDR(1/5) {}/100 (paper 0), sDR {}/100 (avg {} itr; paper 94.8%, 653)",
            s_sdr.successes(),
            avg(&s_sdr),
            s_ddr.successes(),
            q_ddr.successes(),
            q_sdr.successes(),
            avg(&q_sdr)
        ),
    );
}

fn criterion_7(suite: &mut Suite) {
    let t = Instant::now();
    let cl = circle_line_instance();
    let prob = TwoSetProblem::new(UnitCircle, cl.line.clone()).unwrap();
    let policy = StopPolicy {
        max_iter: 2000,
        min_iter: 1,
        z_step_tol: 0.0,
        stop_on_feasible: false,
    };
    let never = |_: &[f64]| false;
    let sdr = run(&prob, Method::Standard, &policy, cl.z0.to_vec(), &never, None).unwrap();
    let gap = distance(&sdr.state.u, &sdr.state.x);
    let n = sdr.trace.len();
    let tail_min = sdr.trace.records[n - 100..].iter().map(|r| r.z_step).fold(f64::INFINITY, f64::min);

    let ddr = run(&prob, Method::Damped(Damping::new(0.2).unwrap()), &policy, cl.z0.to_vec(), &never, None).unwrap();
    let s = &ddr.state;
    let spread = distance(&s.u, &s.x).max(distance(&s.z, &s.x));
    let to_circle = (s.x[0].hypot(s.x[1]) - 1.0).abs();
    let to_line = distance(&s.x, &cl.line.project(&s.x));
    let secs = t.elapsed().as_secs_f64();
    suite.record(
        "7",
        gap > 1e-2 && tail_min > 1e-3 && spread < 1e-6 && to_circle < 1e-6 && to_line < 1e-6 && secs < 1.0,
        format!(
            "sDR: |u - x| = {gap:.3e}, min z-step over last 100 = {tail_min:.3e}; dDR(1/5): |u - x|, |z - x| <= {spread:.1e}, \
             distance to circle {to_circle:.1e}, to line {to_line:.1e}, limit ({:.6}, {:.6}); {secs:.3} s",
            s.x[0], s.x[1]
        ),
    );
}

fn random_subspace(rng: &mut ChaCha8Rng, n: usize, d: usize) -> AffineSubspace {
    let dirs: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
    let offset = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
    AffineSubspace::new(&dirs, offset).unwrap()
}

fn linear_part(s: &AffineSubspace, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, s.basis().len(), |i, j| s.basis()[j][i]);
    &b * b.transpose()
}

fn criterion_8(suite: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for gamma in [0.2, 1.0, 99.0] {
        let eta = gamma / (1.0 + gamma);
        for _ in 0..5 {
            let n = rng.random_range(3..12);
            let d = rng.random_range(1..n);
            let s = random_subspace(&mut rng, n, d);
            let m = (DMatrix::<f64>::identity(n, n) - linear_part(&s, n)) * eta;
            worst = worst.max((spectral_radius(&m).unwrap() - eta).abs());
            cases += 1;
        }
    }
    suite.record(
        "8",
        worst <= 1e-12,
        format!("rho(g/(1+g) (I - P_S)) = g/(1+g) over {cases} random affine S, gamma in {{0.2, 1, 99}}; max error {worst:.1e}"),
    );
}

/// Nearest point of a one-hot / at-most-one set by enumeration.
fn brute_force_group(x: &[f64], kind: GroupKind) -> f64 {
    let mut candidates: Vec<Vec<f64>> = (0..x.len())
        .map(|i| (0..x.len()).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    if kind == GroupKind::AtMostOne {
        candidates.push(vec![0.0; x.len()]);
    }
    candidates.iter().map(|c| distance(c, x)).fold(f64::INFINITY, f64::min)
}

fn group_oracle(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let grid = [-1.0, -0.5, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5];
    for case in 0..1000 {
        let dim = rng.random_range(1..10);
        let mut free: Vec<usize> = (0..dim).collect();
        let mut groups = Vec::new();
        while !free.is_empty() && groups.len() < 3 {
            let len = rng.random_range(1..=free.len().min(5));
            let indices: Vec<usize> = (0..len).map(|_| free.swap_remove(rng.random_range(0..free.len()))).collect();
            let kind = if rng.random_bool(0.5) { GroupKind::OneHot } else { GroupKind::AtMostOne };
            groups.push(Group { indices, kind });
        }
        let x: Vec<f64> = (0..dim).map(|_| grid[rng.random_range(0..grid.len())]).collect();
        let proj = GroupProjection::new(dim, groups.clone(), TieBreak::LowestIndex).map_err(|e| e.to_string())?;
        let px = proj.project(&x);
        for g in &groups {
            let xs: Vec<f64> = g.indices.iter().map(|&i| x[i]).collect();
            let ps: Vec<f64> = g.indices.iter().map(|&i| px[i]).collect();
            let ones = ps.iter().filter(|&&v| v == 1.0).count();
            let binary = ps.iter().all(|&v| v == 0.0 || v == 1.0);
            let member = binary && (ones == 1 || (ones == 0 && g.kind == GroupKind::AtMostOne));
            if !member || (distance(&ps, &xs) - brute_force_group(&xs, g.kind)).abs() > 1e-12 {
                return Err(format!("case {case}: group {:?} of {x:?} -> {ps:?}", g.indices));
            }
        }
        let covered: Vec<usize> = groups.iter().flat_map(|g| g.indices.clone()).collect();
        if (0..dim).any(|i| !covered.contains(&i) && px[i] != x[i]) {
            return Err(format!("case {case}: ungrouped entry changed"));
        }
    }
    Ok(())
}

fn product_oracle() -> Result<f64, String> {
    let (inst, _) = SudokuInstance::generate(4, 6, 2).unwrap();
    let problems = [
        ProductProblem::new(inst.constraint_sets(TieBreak::LowestIndex)).unwrap(),
        ProductProblem::new(QueensInstance::new(6).unwrap().constraint_sets(TieBreak::LowestIndex)).unwrap(),
        ProductProblem::new(inst.constraint_sets(TieBreak::LowestIndex).into_iter().take(2).collect()).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for (pi, prob) in problems.iter().enumerate() {
        let len = prob.blocks() * prob.block_len();
        let stacked = prob.stacked_sets();
        let consensus = prob.consensus();
        for seed in 0..10 {
            let z0: Vec<f64> = random_init(len, seed).iter().map(|v| 3.0 * v - 1.0).collect();
            for method in [Method::Standard, Method::Damped(Damping::new(0.2).unwrap())] {
                let mut state = SplitState::new(prob.blocks(), prob.block_len(), z0.clone()).unwrap();
                let mut scratch = vec![0.0; len];
                prob.step(method, &mut state, &mut scratch);
                let want = match method {
                    Method::Damped(d) => ddr_step(&stacked, &consensus, d, &z0),
                    _ => dr_step(&stacked, &consensus, &z0),
                };
                let err = distance(&state.z, &want.z).max(distance(&state.x, &want.x)).max(distance(&state.u, &want.u));
                if err > 1e-10 {
                    return Err(format!("problem {pi}, seed {seed}, {method}: error {err:.2e}"));
                }
                worst = worst.max(err);
            }
        }
    }
    Ok(worst)
}

fn idempotence_oracle(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let (inst, _) = SudokuInstance::generate(9, 30, 4).unwrap();
    let mut sets: Vec<(String, Box<dyn Projection>)> = Vec::new();
    for (i, p) in inst.constraint_sets(TieBreak::Seeded(3)).into_iter().enumerate() {
        sets.push((format!("sudoku C{}", i + 1), p));
    }
    for (i, p) in QueensInstance::new(8).unwrap().constraint_sets(TieBreak::LowestIndex).into_iter().enumerate() {
        sets.push((format!("queens C{}", i + 1), p));
    }
    sets.push(("unit circle".into(), Box::new(UnitCircle)));
    for _ in 0..5 {
        let n = rng.random_range(2..10);
        let d = rng.random_range(1..n);
        sets.push((format!("affine {d} in R^{n}"), Box::new(random_subspace(rng, n, d))));
    }
    for (name, p) in &sets {
        for _ in 0..50 {
            let x: Vec<f64> = (0..p.dim()).map(|_| rng.random::<f64>() * 3.0 - 1.0).collect();
            let once = p.project(&x);
            let twice = p.project(&once);
            if distance(&once, &twice) > 1e-12 {
                return Err(format!("{name} not idempotent"));
            }
        }
    }
    Ok(sets.len())
}

fn fitter_oracle() -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for eta in [0.1f64, 0.447, 0.5, 0.86, 0.99] {
        let trace = IterationTrace {
            blocks: 1,
            records: (1..=60)
                .map(|k| TraceRecord {
                    k,
                    z_step: 10.0 * eta.powi(k as i32),
                    z_res: Some(10.0 * eta.powi(k as i32)),
                    x_res: None,
                    u_mismatch: None,
                    objective: 0.0,
                })
                .collect(),
        };
        for q in [RateQuantity::ZResidual, RateQuantity::ZStep] {
            let est = fit_linear_rate(&trace, q, 0.5).map_err(|e| e.to_string())?;
            worst = worst.max((est.rate - eta).abs());
        }
    }
    if worst > 1e-6 {
        return Err(format!("fit error {worst:.1e}"));
    }
    Ok(worst)
}

fn parser_oracle() -> Result<usize, String> {
    let mut n = 0;
    for (s, clues) in [(4, 0), (4, 4), (9, 37), (9, 22), (16, 120)] {
        for seed in 0..4 {
            let (inst, sol) = SudokuInstance::generate(s, clues, seed).map_err(|e| e.to_string())?;
            let text = inst.serialize();
            let back = SudokuInstance::parse(&text).map_err(|e| e.to_string())?;
            if back != inst || back.serialize() != text {
                return Err(format!("instance s={s} seed={seed} does not round-trip"));
            }
            let grid = SudokuGrid::parse(&sol.serialize()).map_err(|e| e.to_string())?;
            if grid != sol {
                return Err(format!("solution s={s} seed={seed} does not round-trip"));
            }
            n += 2;
        }
    }
    Ok(n)
}

fn criterion_9(suite: &mut Suite) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let groups = group_oracle(&mut rng);
    let product = product_oracle();
    let idem = idempotence_oracle(&mut rng);
    let fit = fitter_oracle();
    let parse = parser_oracle();
    let secs = t.elapsed().as_secs_f64();
    let show = |r: &Result<String, String>| match r {
        Ok(s) => s.clone(),
        Err(e) => format!("FAILED ({e})"),
    };
    let parts = [
        groups.map(|()| "group projections match enumeration on 1000 random cases".to_string()),
        product.map(|w| format!("product step = stacked two-set step (max error {w:.1e})")),
        idem.map(|k| format!("{k} projections idempotent")),
        fit.map(|w| format!("synthetic rates recovered to {w:.1e}")),
        parse.map(|k| format!("{k} parser round trips")),
    ];
    let ok = parts.iter().all(Result::is_ok) && secs < 30.0;
    let detail = parts.iter().map(show).collect::<Vec<_>>().join("; ");
    suite.record("9", ok, format!("{detail}; {secs:.2} s"));
}

fn main() {
    // `cargo test` passes harness flags such as --quiet; only a filter of
    // "--list" needs an answer.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut suite = Suite { results: Vec::new() };
    let t = Instant::now();
    criteria_1_2(&mut suite);
    criterion_3(&mut suite);
    criterion_4(&mut suite);
    criterion_5(&mut suite);
    criterion_6(&mut suite);
    criterion_7(&mut suite);
    criterion_8(&mut suite);
    criterion_9(&mut suite);
    let failed: Vec<&str> = suite.results.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    println!(
        "acceptance: {} passed, {} failed in {:.1} s",
        suite.results.len() - failed.len(),
        failed.len(),
        t.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        eprintln!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
