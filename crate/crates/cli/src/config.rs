//! Run settings merged from defaults, an optional key=value file and flags.

use std::path::PathBuf;

use drfeas::experiment::parse_method;
use drfeas::sets::TieBreak;
use drfeas::splitting::{Method, StopPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub method: String,
    pub gamma: Option<f64>,
    pub max_iter: usize,
    pub min_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub runs: usize,
    pub tie: String,
    pub trace: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub puzzle: Option<PathBuf>,
    pub queens_size: Option<usize>,
    pub from_trace: Option<PathBuf>,
    pub tail_fraction: f64,
    pub cap: usize,
    pub sequential: bool,
}

impl Default for Settings {
    fn default() -> Self {
        let p = StopPolicy::default();
        Self {
            method: "sdr".into(),
            gamma: None,
            max_iter: p.max_iter,
            min_iter: p.min_iter,
            tol: p.z_step_tol,
            seed: 0,
            runs: 100,
            tie: "lowest".into(),
            trace: None,
            out: None,
            puzzle: None,
            queens_size: None,
            from_trace: None,
            tail_fraction: 0.5,
            cap: drfeas::analysis::DEFAULT_DENSE_CAP,
            sequential: false,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| format!("{key}: cannot parse {value:?}: {e}"))
}

fn boolean(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {value:?}")),
    }
}

impl Settings {
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "method" => self.method = value.to_string(),
            "gamma" => self.gamma = Some(num(key, value)?),
            "max-iter" => self.max_iter = num(key, value)?,
            "min-iter" => self.min_iter = num(key, value)?,
            "tol" => self.tol = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "runs" => self.runs = num(key, value)?,
            "tie" => self.tie = value.to_string(),
            "trace" => self.trace = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "puzzle" => self.puzzle = Some(value.into()),
            "queens-size" => self.queens_size = Some(num(key, value)?),
            "from-trace" => self.from_trace = Some(value.into()),
            "tail-fraction" => self.tail_fraction = num(key, value)?,
            "cap" => self.cap = num(key, value)?,
            "sequential" => self.sequential = boolean(key, value)?,
            _ => return Err(format!("unknown setting {key:?}")),
        }
        Ok(())
    }

    /// Applies every `key = value` line; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), String> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", n + 1))?;
            let k = k.trim().replace('_', "-");
            self.apply(&k, v.trim()).map_err(|e| format!("config line {}: {e}", n + 1))?;
        }
        Ok(())
    }

    pub fn method(&self) -> Result<Method, String> {
        parse_method(&self.method, self.gamma).map_err(|e| e.to_string())
    }

    pub fn policy(&self) -> Result<StopPolicy, String> {
        let p = StopPolicy {
            max_iter: self.max_iter,
            min_iter: self.min_iter,
            z_step_tol: self.tol,
            stop_on_feasible: true,
        };
        p.validate().map_err(|e| e.to_string())?;
        Ok(p)
    }

    pub fn tie(&self) -> Result<TieBreak, String> {
        match self.tie.as_str() {
            "lowest" => Ok(TieBreak::LowestIndex),
            "seeded" => Ok(TieBreak::Seeded(self.seed)),
            t => Err(format!("unknown tie-break mode {t:?} (lowest|seeded)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut s = Settings::default();
        s.apply_file("# demo\nmethod = ddr\ngamma=0.2\nmax_iter = 500 # short\n\n").unwrap();
        assert_eq!(s.method, "ddr");
        assert_eq!(s.max_iter, 500);
        s.apply("gamma", "0.5").unwrap();
        assert_eq!(s.gamma, Some(0.5));
        assert!(matches!(s.method().unwrap(), Method::Damped(_)));
    }

    #[test]
    fn rejects_bad_input() {
        let mut s = Settings::default();
        assert!(s.apply_file("nonsense").unwrap_err().contains("line 1"));
        assert!(s.apply("colour", "red").is_err());
        assert!(s.apply("seed", "-3").is_err());
        s.apply("method", "ddr").unwrap();
        assert!(s.method().is_err());
        s.apply("min-iter", "20000").unwrap();
        assert!(s.policy().is_err());
        s.apply("tie", "random").unwrap();
        assert!(s.tie().is_err());
    }
}
