//! `drfeas`: solve Sudoku and s-queens puzzles with Douglas-Rachford
//! splitting, benchmark success rates, and check local rates and spectra.

mod config;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;

use config::Settings;
use drfeas::analysis::{
    friedrichs_angle, semi_simple_ranks, sudoku_ddr_block_eigenvalues, sudoku_ddr_spectrum, sudoku_dr_rate,
    RateQuantity, RateReport, SudokuLinearization,
};
use drfeas::experiment::{self, analyze_rates, analyze_trace, solve, ExecMode, Puzzle, RateAnalysis, RunConfig};
use drfeas::puzzles::{QueensInstance, SudokuInstance};
use drfeas::splitting::{Damping, IterationTrace, Outcome};

const EXIT_INPUT: u8 = 1;
const EXIT_NOT_FEASIBLE: u8 = 2;

#[derive(Parser)]
#[command(name = "drfeas", version, about = "Douglas-Rachford splitting for Sudoku and s-queens")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance from one seeded start.
    Solve(Flags),
    /// Success rate over `--runs` seeded starts.
    Bench(Flags),
    /// Fit local linear rates and detect finite termination.
    Rates(Flags),
    /// Friedrichs angle and linearized spectra of a Sudoku instance.
    Angles(Flags),
}

#[derive(Args)]
struct Flags {
    /// key = value file with defaults for any flag below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// sdr | ddr | sdr-switched | altproj
    #[arg(long)]
    method: Option<String>,
    /// Damping for ddr; for `angles`, the matrix parameter.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
    #[arg(long = "min-iter")]
    min_iter: Option<String>,
    /// Stop once |z_k - z_{k-1}| falls to this.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    /// Trace CSV output path.
    #[arg(long)]
    trace: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Sudoku instance file.
    #[arg(long)]
    puzzle: Option<String>,
    /// Solve the s-queens puzzle of this size instead.
    #[arg(long = "queens-size")]
    queens_size: Option<String>,
    /// lowest | seeded
    #[arg(long)]
    tie: Option<String>,
    /// `rates`: analyze an existing trace CSV instead of running.
    #[arg(long = "from-trace")]
    from_trace: Option<String>,
    /// `rates`: fraction of the usable tail used in fits.
    #[arg(long = "tail-fraction")]
    tail_fraction: Option<String>,
    /// `angles`: largest dense matrix order.
    #[arg(long)]
    cap: Option<String>,
    /// `bench`: run seeds one after another.
    #[arg(long)]
    sequential: bool,
}

impl Flags {
    fn settings(&self) -> Result<Settings, String> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            s.apply_file(&read(path)?)?;
        }
        let pairs = [
            ("method", &self.method),
            ("gamma", &self.gamma),
            ("max-iter", &self.max_iter),
            ("min-iter", &self.min_iter),
            ("tol", &self.tol),
            ("seed", &self.seed),
            ("runs", &self.runs),
            ("trace", &self.trace),
            ("out", &self.out),
            ("puzzle", &self.puzzle),
            ("queens-size", &self.queens_size),
            ("tie", &self.tie),
            ("from-trace", &self.from_trace),
            ("tail-fraction", &self.tail_fraction),
            ("cap", &self.cap),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.apply(k, v)?;
            }
        }
        if self.sequential {
            s.sequential = true;
        }
        Ok(s)
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn out_file(s: &Settings, name: &str) -> Option<PathBuf> {
    s.out.as_ref().map(|d| d.join(name))
}

fn load_sudoku(s: &Settings) -> Result<SudokuInstance, String> {
    let path = s.puzzle.as_ref().ok_or("a Sudoku instance is required (--puzzle)")?;
    SudokuInstance::parse(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_puzzle(s: &Settings) -> Result<Puzzle, String> {
    match (&s.puzzle, s.queens_size) {
        (Some(_), Some(_)) => Err("give either --puzzle or --queens-size, not both".into()),
        (None, Some(n)) => QueensInstance::new(n).map(Puzzle::Queens).map_err(|e| e.to_string()),
        (Some(_), None) => load_sudoku(s).map(Puzzle::Sudoku),
        (None, None) => Err("no instance given (--puzzle or --queens-size)".into()),
    }
}

fn run_config(s: &Settings) -> Result<RunConfig, String> {
    Ok(RunConfig {
        method: s.method()?,
        policy: s.policy()?,
        tie: s.tie()?,
        seed: s.seed,
    })
}

fn cmd_solve(s: &Settings) -> Result<u8, String> {
    let puzzle = load_puzzle(s)?;
    let cfg = run_config(s)?;
    let rep = solve(&puzzle, &cfg, s.trace.is_some()).map_err(|e| e.to_string())?;
    let r = &rep.result;
    println!(
        "method={} seed={} outcome={} iterations={} wall_ms={:.3}",
        cfg.method, cfg.seed, r.outcome, r.iterations, rep.wall_ms
    );
    print!("{}", rep.rendered);
    for v in &rep.violations {
        println!("violation: {v}");
    }
    if let Some(path) = &s.trace {
        write(path, &r.trace.to_csv())?;
    }
    let feasible = r.outcome == Outcome::FeasibleFound;
    if feasible {
        if let Some(path) = out_file(s, "solution.txt") {
            write(&path, &rep.rendered)?;
        }
    }
    Ok(if feasible { 0 } else { EXIT_NOT_FEASIBLE })
}

fn cmd_bench(s: &Settings) -> Result<u8, String> {
    if s.runs == 0 {
        return Err("--runs must be >= 1".into());
    }
    let puzzle = load_puzzle(s)?;
    let cfg = run_config(s)?;
    let mode = if s.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    let rep = experiment::bench(&puzzle, cfg.method, &cfg.policy, cfg.tie, cfg.seed, s.runs, mode)
        .map_err(|e| e.to_string())?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"));
    println!(
        "method={} runs={} successes={} success_rate={:.3} mean_iterations={} median_iterations={}",
        rep.method,
        rep.runs(),
        rep.successes(),
        rep.success_rate(),
        fmt(rep.mean_iterations()),
        fmt(rep.median_iterations())
    );
    if let Some(path) = out_file(s, "bench.csv") {
        write(&path, &rep.to_csv())?;
    }
    Ok(0)
}

fn print_analysis(a: &RateAnalysis) {
    if let Some(o) = a.outcome {
        println!("outcome={o} iterations={}", a.iterations);
    }
    let show = |k: Option<usize>| k.map_or_else(|| "none".to_string(), |k| k.to_string());
    for (i, k) in a.u_termination.iter().enumerate() {
        println!("u{} terminates at K={}", i + 1, show(*k));
    }
    println!("z terminates at K={}", show(a.z_termination));
    println!("{}", RateReport::CSV_HEADER);
    for r in &a.reports {
        println!("{}", r.csv_row());
    }
    for (q, why) in &a.skipped {
        println!("{q}: not fitted ({why})");
    }
}

fn cmd_rates(s: &Settings) -> Result<u8, String> {
    let (trace, analysis, theory) = if let Some(path) = &s.from_trace {
        let trace = IterationTrace::from_csv(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
        let puzzle = load_puzzle(s).ok();
        let theory = match (&puzzle, s.method()) {
            (Some(p), Ok(m)) => p.theoretical_rate(m),
            _ => None,
        };
        let binary = puzzle.as_ref().map(Puzzle::binary_blocks).unwrap_or_default();
        let a = analyze_trace(&trace, &binary, theory, s.tail_fraction).map_err(|e| e.to_string())?;
        (trace, a, theory)
    } else {
        let puzzle = load_puzzle(s)?;
        let cfg = run_config(s)?;
        let (rep, a) = analyze_rates(&puzzle, &cfg, s.tail_fraction).map_err(|e| e.to_string())?;
        (rep.result.trace, a, puzzle.theoretical_rate(cfg.method))
    };
    print_analysis(&analysis);
    if let Some(path) = &s.trace {
        write(path, &trace.to_csv())?;
    }
    if s.out.is_some() {
        let mut csv = format!("{}\n", RateReport::CSV_HEADER);
        for r in &analysis.reports {
            csv.push_str(&r.csv_row());
            csv.push('\n');
        }
        write(&out_file(s, "rates.csv").unwrap(), &csv)?;
        let json = serde_json::to_string_pretty(&analysis).map_err(|e| e.to_string())?;
        write(&out_file(s, "rates.json").unwrap(), &json)?;
        let window = analysis
            .report(RateQuantity::ZResidual)
            .or_else(|| analysis.report(RateQuantity::ZStep))
            .map(|r| (r.window_start, r.window_end));
        write(&out_file(s, "residuals.svg").unwrap(), &plot::residual_plot(&trace, window, theory))?;
    }
    if analysis.reports.is_empty() && analysis.z_termination.is_none() {
        eprintln!("insufficient tail data: no rate fitted and no finite termination found");
        return Ok(EXIT_NOT_FEASIBLE);
    }
    Ok(0)
}

/// Distinct values (within `tol`) with multiplicities.
fn cluster(mut v: Vec<f64>, tol: f64) -> Vec<(f64, usize)> {
    v.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for x in v {
        match out.last_mut() {
            Some((c, n)) if (x - *c).abs() <= tol => *n += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

fn cmd_angles(s: &Settings) -> Result<u8, String> {
    let inst = load_sudoku(s)?;
    let lin = SudokuLinearization::new(&inst, s.cap).map_err(|e| e.to_string())?;
    let theta = friedrichs_angle(&lin.ranges().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let product: DMatrix<f64> = lin.projector_c() * lin.projector_s();
    let sv: Vec<f64> = product.singular_values().iter().copied().filter(|&x| x > 1e-10).collect();
    let sv = cluster(sv, 1e-9);
    println!("dimension={} rank_c={}", lin.dim(), lin.rank_c());
    println!(
        "cos_friedrichs={:.12} theoretical={:.12} deviation={:.3e}",
        theta.cos(),
        sudoku_dr_rate(),
        theta.cos() - sudoku_dr_rate()
    );
    for (v, n) in &sv {
        println!("singular_value={v:.12} multiplicity={n}");
    }
    let mut report = json!({
        "dimension": lin.dim(),
        "rank_c": lin.rank_c(),
        "cos_friedrichs": theta.cos(),
        "theoretical_cos": sudoku_dr_rate(),
        "singular_values": sv.iter().map(|(v, n)| json!({"value": v, "multiplicity": n})).collect::<Vec<_>>(),
    });
    if let Some(gamma) = s.gamma {
        let damping = Damping::new(gamma).map_err(|e| e.to_string())?;
        let eig = drfeas::analysis::eigenvalues(&lin.matrix(damping)).map_err(|e| e.to_string())?;
        let max_im = eig.iter().map(|z| z.1.abs()).fold(0.0, f64::max);
        let computed = cluster(eig.iter().map(|z| z.0).collect(), 1e-6);
        let (lm, lp) = sudoku_ddr_block_eigenvalues(gamma);
        let labels = [("zero", 0.0), ("lambda_minus", lm), ("eta", gamma / (1.0 + gamma)), ("lambda_plus", lp)];
        println!("gamma={gamma} max_imag={max_im:.2e}");
        let mut rows = Vec::new();
        for (name, value) in labels {
            let nearest = computed
                .iter()
                .min_by(|a, b| (a.0 - value).abs().total_cmp(&(b.0 - value).abs()))
                .map_or(f64::NAN, |c| c.0);
            println!("{name}: theoretical={value:.10} computed={nearest:.10} deviation={:.3e}", nearest - value);
            rows.push(json!({"label": name, "theoretical": value, "computed": nearest, "deviation": nearest - value}));
        }
        for (v, n) in &computed {
            println!("eigenvalue={v:.10} multiplicity={n}");
        }
        let ranks = semi_simple_ranks(&lin.rate_block(gamma), lp).map_err(|e| e.to_string())?;
        println!(
            "rate_block p={} rank(M-lambda_plus I)={} rank((M-lambda_plus I)^2)={}",
            lin.rank_c(),
            ranks.rank,
            ranks.rank_squared
        );
        report["gamma"] = json!(gamma);
        report["spectrum"] = json!(rows);
        report["closed_form"] = json!(sudoku_ddr_spectrum(gamma));
        report["semi_simple"] = json!({"p": lin.rank_c(), "rank": ranks.rank, "rank_squared": ranks.rank_squared});
    }
    if let Some(path) = out_file(s, "angles.json") {
        write(&path, &serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?)?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(t) = std::env::var("DR_THREADS") {
        match t.parse::<usize>().map_err(|e| e.to_string()).and_then(|n| {
            experiment::configure_threads(n).map_err(|e| e.to_string())
        }) {
            Ok(()) => {}
            Err(e) => {
                eprintln!("error: DR_THREADS={t:?}: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
        }
    }
    let (flags, cmd): (&Flags, fn(&Settings) -> Result<u8, String>) = match &cli.command {
        Command::Solve(f) => (f, cmd_solve),
        Command::Bench(f) => (f, cmd_bench),
        Command::Rates(f) => (f, cmd_rates),
        Command::Angles(f) => (f, cmd_angles),
    };
    match flags.settings().and_then(|s| cmd(&s)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
