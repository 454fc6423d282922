//! Puzzle instances, their text format, rounding of real iterates to
//! candidates, and exact validity checks.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{AffineSubspace, Projection};
use crate::sets::{
    cube_index, integer_sqrt, queens_constraint_groups, sudoku_constraint_groups, Clue,
    ClueProjection, GroupProjection, QueensConstraint, SudokuConstraint, TieBreak, UnitCircle,
};

/// A partially filled `s x s` Sudoku grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SudokuInstance {
    s: usize,
    clues: Vec<Clue>,
}

impl SudokuInstance {
    pub fn new(s: usize, mut clues: Vec<Clue>) -> Result<Self> {
        if s < 4 || integer_sqrt(s).is_none() {
            return Err(Error::InvalidInstance(format!(
                "sudoku size {s} is not a perfect square >= 4"
            )));
        }
        // validates ranges and duplicate cells
        ClueProjection::new(s, &clues)?;
        let b = integer_sqrt(s).unwrap_or(1);
        for (i, p) in clues.iter().enumerate() {
            for q in &clues[i + 1..] {
                let same_box = p.row / b == q.row / b && p.col / b == q.col / b;
                if p.digit == q.digit && (p.row == q.row || p.col == q.col || same_box) {
                    return Err(Error::InvalidInstance(format!(
                        "clues at ({}, {}) and ({}, {}) repeat digit {}",
                        p.row + 1,
                        p.col + 1,
                        q.row + 1,
                        q.col + 1,
                        p.digit + 1
                    )));
                }
            }
        }
        clues.sort_unstable();
        Ok(Self { s, clues })
    }

    pub fn size(&self) -> usize {
        self.s
    }

    pub fn box_size(&self) -> usize {
        integer_sqrt(self.s).expect("validated on construction")
    }

    pub fn clues(&self) -> &[Clue] {
        &self.clues
    }

    /// Length of the lifted cube.
    pub fn cube_len(&self) -> usize {
        self.s * self.s * self.s
    }

    /// Parses `s` lines of `s` whitespace-separated tokens; `.` or `0` is
    /// blank, digits are 1-based.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<(usize, Vec<&str>)> = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.split_whitespace().collect::<Vec<_>>()))
            .filter(|(_, toks)| !toks.is_empty())
            .collect();
        let Some((first_line, first)) = rows.first() else {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "empty grid".into(),
            });
        };
        let s = first.len();
        if s < 4 || integer_sqrt(s).is_none() {
            return Err(Error::Parse {
                line: *first_line,
                column: 1,
                message: format!("grid width {s} is not a perfect square >= 4"),
            });
        }
        if rows.len() != s {
            let line = rows.get(s).map_or(rows.last().unwrap().0 + 1, |r| r.0);
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("expected {s} rows, found {}", rows.len()),
            });
        }
        let mut clues = Vec::new();
        for (i, (line, toks)) in rows.iter().enumerate() {
            if toks.len() != s {
                return Err(Error::Parse {
                    line: *line,
                    column: toks.len().min(s) + 1,
                    message: format!("expected {s} tokens, found {}", toks.len()),
                });
            }
            for (j, tok) in toks.iter().enumerate() {
                if *tok == "." || *tok == "0" {
                    continue;
                }
                let digit: usize = tok.parse().map_err(|_| Error::Parse {
                    line: *line,
                    column: j + 1,
                    message: format!("invalid token {tok:?}"),
                })?;
                if digit == 0 || digit > s {
                    return Err(Error::Parse {
                        line: *line,
                        column: j + 1,
                        message: format!("digit {digit} out of range 1..={s}"),
                    });
                }
                clues.push(Clue {
                    row: i,
                    col: j,
                    digit: digit - 1,
                });
            }
        }
        Self::new(s, clues)
    }

    pub fn serialize(&self) -> String {
        let mut cells = vec![None; self.s * self.s];
        for c in &self.clues {
            cells[c.row * self.s + c.col] = Some(c.digit);
        }
        write_grid(self.s, |i, j| cells[i * self.s + j].map(|d| d + 1))
    }

    /// The five constraint sets `C1..C5` over the lifted cube.
    pub fn constraint_sets(&self, tie: TieBreak) -> Vec<Box<dyn Projection>> {
        let n = self.cube_len();
        let mut sets: Vec<Box<dyn Projection>> = SudokuConstraint::ALL
            .iter()
            .map(|&which| {
                let groups = sudoku_constraint_groups(self.s, which).expect("validated size");
                Box::new(GroupProjection::new(n, groups, tie).expect("groups partition the cube"))
                    as Box<dyn Projection>
            })
            .collect();
        sets.push(Box::new(
            ClueProjection::new(self.s, &self.clues).expect("validated clues"),
        ));
        sets
    }

    pub fn clue_projection(&self) -> ClueProjection {
        ClueProjection::new(self.s, &self.clues).expect("validated clues")
    }

    /// Digit grid with the argmax of every pillar.
    pub fn round(&self, x: &[f64]) -> SudokuGrid {
        let s = self.s;
        let cells = (0..s * s)
            .map(|cell| {
                let pillar = &x[cell * s..(cell + 1) * s];
                let mut best = 0;
                for k in 1..s {
                    if pillar[k] > pillar[best] {
                        best = k;
                    }
                }
                best
            })
            .collect();
        SudokuGrid { s, cells }
    }

    pub fn validate(&self, grid: &SudokuGrid) -> Validation {
        let s = self.s;
        let b = self.box_size();
        let mut violations = Vec::new();
        let all_digits = |cells: &mut dyn Iterator<Item = usize>| {
            let mut seen = vec![false; s];
            let mut count = 0;
            for d in cells {
                if d < s && !std::mem::replace(&mut seen[d], true) {
                    count += 1;
                }
            }
            count == s
        };
        for i in 0..s {
            if !all_digits(&mut (0..s).map(|j| grid.get(i, j))) {
                violations.push(Violation::Row(i));
            }
        }
        for j in 0..s {
            if !all_digits(&mut (0..s).map(|i| grid.get(i, j))) {
                violations.push(Violation::Column(j));
            }
        }
        for blk in 0..s {
            let (bi, bj) = (blk / b, blk % b);
            let mut cells = (0..s).map(|t| grid.get(bi * b + t / b, bj * b + t % b));
            if !all_digits(&mut cells) {
                violations.push(Violation::Block(blk));
            }
        }
        for c in &self.clues {
            if grid.get(c.row, c.col) != c.digit {
                violations.push(Violation::Clue {
                    row: c.row,
                    col: c.col,
                });
            }
        }
        Validation { violations }
    }

    /// Rounds `x` and checks the result exactly.
    pub fn is_solved_by(&self, x: &[f64]) -> bool {
        self.validate(&self.round(x)).is_valid()
    }

    /// A random instance: a shuffled pattern solution with `clues` cells kept.
    /// Solutions need not be unique.
    pub fn generate(s: usize, clues: usize, seed: u64) -> Result<(Self, SudokuGrid)> {
        let b = integer_sqrt(s)
            .filter(|_| s >= 4)
            .ok_or_else(|| Error::InvalidInstance(format!("sudoku size {s} is not a perfect square >= 4")))?;
        if clues > s * s {
            return Err(Error::InvalidParameter(format!("{clues} clues exceed {} cells", s * s)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shuffled_lines = |rng: &mut ChaCha8Rng| -> Vec<usize> {
            let mut bands: Vec<usize> = (0..b).collect();
            bands.shuffle(rng);
            bands
                .into_iter()
                .flat_map(|band| {
                    let mut inner: Vec<usize> = (0..b).collect();
                    inner.shuffle(rng);
                    inner.into_iter().map(move |t| band * b + t).collect::<Vec<_>>()
                })
                .collect()
        };
        let rows = shuffled_lines(&mut rng);
        let cols = shuffled_lines(&mut rng);
        let mut digits: Vec<usize> = (0..s).collect();
        digits.shuffle(&mut rng);
        let pattern = |i: usize, j: usize| (b * (i % b) + i / b + j) % s;
        let cells = (0..s * s)
            .map(|c| digits[pattern(rows[c / s], cols[c % s])])
            .collect();
        let solution = SudokuGrid { s, cells };
        let mut order: Vec<usize> = (0..s * s).collect();
        order.shuffle(&mut rng);
        let kept = order[..clues]
            .iter()
            .map(|&c| Clue {
                row: c / s,
                col: c % s,
                digit: solution.cells[c],
            })
            .collect();
        Ok((Self::new(s, kept)?, solution))
    }
}

fn write_grid(s: usize, cell: impl Fn(usize, usize) -> Option<usize>) -> String {
    let mut out = String::new();
    for i in 0..s {
        let line: Vec<String> = (0..s)
            .map(|j| cell(i, j).map_or_else(|| ".".to_string(), |d| d.to_string()))
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// A fully filled grid of 0-based digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SudokuGrid {
    s: usize,
    cells: Vec<usize>,
}

impl SudokuGrid {
    pub fn new(s: usize, cells: Vec<usize>) -> Result<Self> {
        if cells.len() != s * s {
            return Err(Error::DimensionMismatch {
                expected: s * s,
                got: cells.len(),
            });
        }
        if let Some(d) = cells.iter().find(|&&d| d >= s) {
            return Err(Error::InvalidInstance(format!("digit {} out of range", d + 1)));
        }
        Ok(Self { s, cells })
    }

    pub fn size(&self) -> usize {
        self.s
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.cells[i * self.s + j]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Binary cube with a one-hot pillar per cell.
    pub fn lift(&self) -> Vec<f64> {
        let s = self.s;
        let mut x = vec![0.0; s * s * s];
        for i in 0..s {
            for j in 0..s {
                x[cube_index(s, i, j, self.get(i, j))] = 1.0;
            }
        }
        x
    }

    /// Grid text with 1-based digits, same layout as instance files.
    pub fn serialize(&self) -> String {
        write_grid(self.s, |i, j| Some(self.get(i, j) + 1))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let inst = SudokuInstance::parse(text)?;
        let s = inst.size();
        if inst.clues().len() != s * s {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "solution grid has blank cells".into(),
            });
        }
        Ok(Self {
            s,
            cells: inst.clues().iter().map(|c| c.digit).collect(),
        })
    }
}

/// The `s`-queens puzzle on an `s x s` board.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueensInstance {
    s: usize,
}

impl QueensInstance {
    pub fn new(s: usize) -> Result<Self> {
        if s < 4 {
            return Err(Error::InvalidInstance(format!("queens board size {s} < 4")));
        }
        Ok(Self { s })
    }

    pub fn size(&self) -> usize {
        self.s
    }

    pub fn board_len(&self) -> usize {
        self.s * self.s
    }

    pub fn constraint_sets(&self, tie: TieBreak) -> Vec<Box<dyn Projection>> {
        QueensConstraint::ALL
            .iter()
            .map(|&which| {
                let groups = queens_constraint_groups(self.s, which).expect("validated size");
                Box::new(GroupProjection::new(self.board_len(), groups, tie).expect("partition"))
                    as Box<dyn Projection>
            })
            .collect()
    }

    /// One queen per row at the row argmax.
    pub fn round(&self, x: &[f64]) -> QueensBoard {
        let s = self.s;
        let mut queens = vec![false; s * s];
        for i in 0..s {
            let row = &x[i * s..(i + 1) * s];
            let mut best = 0;
            for j in 1..s {
                if row[j] > row[best] {
                    best = j;
                }
            }
            queens[i * s + best] = true;
        }
        QueensBoard { s, queens }
    }

    pub fn validate(&self, board: &QueensBoard) -> Validation {
        let s = self.s;
        let mut violations = Vec::new();
        for i in 0..s {
            if (0..s).filter(|&j| board.has_queen(i, j)).count() != 1 {
                violations.push(Violation::Row(i));
            }
        }
        for j in 0..s {
            if (0..s).filter(|&i| board.has_queen(i, j)).count() != 1 {
                violations.push(Violation::Column(j));
            }
        }
        for c in 0..2 * s - 1 {
            let n = (0..s)
                .filter(|&i| c >= i && c - i < s && board.has_queen(i, c - i))
                .count();
            if n > 1 {
                violations.push(Violation::AntiDiagonal(c));
            }
        }
        let s_i = s as isize;
        for d in -(s_i - 1)..s_i {
            let n = (0..s_i)
                .filter(|&i| (0..s_i).contains(&(i - d)) && board.has_queen(i as usize, (i - d) as usize))
                .count();
            if n > 1 {
                violations.push(Violation::Diagonal(d));
            }
        }
        Validation { violations }
    }

    pub fn is_solved_by(&self, x: &[f64]) -> bool {
        self.validate(&self.round(x)).is_valid()
    }
}

/// Binary board, `true` where a queen stands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueensBoard {
    s: usize,
    queens: Vec<bool>,
}

impl QueensBoard {
    pub fn from_positions(s: usize, positions: &[(usize, usize)]) -> Result<Self> {
        let mut queens = vec![false; s * s];
        for &(i, j) in positions {
            if i >= s || j >= s {
                return Err(Error::InvalidInstance(format!("queen ({i}, {j}) off the board")));
            }
            queens[i * s + j] = true;
        }
        Ok(Self { s, queens })
    }

    pub fn size(&self) -> usize {
        self.s
    }

    pub fn has_queen(&self, i: usize, j: usize) -> bool {
        self.queens[i * self.s + j]
    }

    pub fn positions(&self) -> Vec<(usize, usize)> {
        (0..self.s * self.s)
            .filter(|&c| self.queens[c])
            .map(|c| (c / self.s, c % self.s))
            .collect()
    }

    pub fn lift(&self) -> Vec<f64> {
        self.queens.iter().map(|&q| if q { 1.0 } else { 0.0 }).collect()
    }

    /// `Q` for a queen and `.` for an empty square, one row per line.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for i in 0..self.s {
            let row: Vec<&str> = (0..self.s)
                .map(|j| if self.has_queen(i, j) { "Q" } else { "." })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// A failed constraint group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Row(usize),
    Column(usize),
    /// Sudoku sub-grid, numbered row-major.
    Block(usize),
    Clue { row: usize, col: usize },
    /// Queens anti-diagonal `i + j = c`.
    AntiDiagonal(usize),
    /// Queens diagonal `i - j = d`.
    Diagonal(isize),
}

impl Violation {
    /// Label of the constraint family the group belongs to.
    pub fn constraint(&self) -> &'static str {
        match self {
            Violation::Row(_) => "C1",
            Violation::Column(_) => "C2",
            Violation::Block(_) => "C4",
            Violation::Clue { .. } => "C5",
            Violation::AntiDiagonal(_) => "C3",
            Violation::Diagonal(_) => "C4",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.constraint();
        match self {
            Violation::Row(i) => write!(f, "{c} row {i}"),
            Violation::Column(j) => write!(f, "{c} column {j}"),
            Violation::Block(b) => write!(f, "{c} block {b}"),
            Violation::Clue { row, col } => write!(f, "{c} clue ({row}, {col})"),
            Violation::AntiDiagonal(a) => write!(f, "{c} anti-diagonal {a}"),
            Violation::Diagonal(d) => write!(f, "{c} diagonal {d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Unit circle against the line `<x, (1, 2)> = sqrt(2)`.
#[derive(Debug, Clone)]
pub struct CircleLine {
    pub circle: UnitCircle,
    pub line: AffineSubspace,
    pub z0: [f64; 2],
}

impl CircleLine {
    /// The two intersection points, from `5 y^2 - 4 sqrt(2) y + 1 = 0`.
    pub fn intersections(&self) -> [[f64; 2]; 2] {
        let r2 = 2f64.sqrt();
        let disc = (32.0f64 - 20.0).sqrt();
        [1.0, -1.0].map(|sign| {
            let y = (4.0 * r2 + sign * disc) / 10.0;
            [r2 - 2.0 * y, y]
        })
    }
}

pub fn circle_line_instance() -> CircleLine {
    CircleLine {
        circle: UnitCircle,
        line: AffineSubspace::hyperplane(&[1.0, 2.0], 2f64.sqrt()).expect("non-zero normal"),
        z0: [-10.0, -8.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const GRID4: &str = "1 . . .\n. 2 . .\n. . 3 .\n. . . 4\n";

    /// Every 4x4 Sudoku solution by exhaustive backtracking.
    fn all_4x4_solutions() -> Vec<Vec<usize>> {
        fn ok(g: &[usize], pos: usize, d: usize) -> bool {
            let (i, j) = (pos / 4, pos % 4);
            (0..pos).all(|p| {
                let (pi, pj) = (p / 4, p % 4);
                let same = pi == i || pj == j || (pi / 2 == i / 2 && pj / 2 == j / 2);
                !(same && g[p] == d)
            })
        }
        fn rec(g: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if g.len() == 16 {
                out.push(g.clone());
                return;
            }
            for d in 0..4 {
                if ok(g, g.len(), d) {
                    g.push(d);
                    rec(g, out);
                    g.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn parse_examples() {
        let inst = SudokuInstance::parse(GRID4).unwrap();
        assert_eq!(inst.size(), 4);
        assert_eq!(inst.clues().len(), 4);
        assert_eq!(inst.clues()[1], Clue { row: 1, col: 1, digit: 1 });

        let blank = vec![". . . . . . . . ."; 9].join("\n");
        assert_eq!(SudokuInstance::parse(&blank).unwrap().clues().len(), 0);

        let mut bad = vec![". . . . . . . . ."; 9];
        bad[3] = ". . . 10 . . . . .";
        match SudokuInstance::parse(&bad.join("\n")) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (4, 4)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            SudokuInstance::parse("1 . .\n. . .\n. . ."),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            SudokuInstance::parse("1 . . .\n. 2 .\n. . 3 .\n. . . 4"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(SudokuInstance::parse("1 . . .\n. 2 . ."), Err(Error::Parse { .. })));
        assert!(matches!(SudokuInstance::parse("x . . .\n. . . .\n. . . .\n. . . ."), Err(Error::Parse { line: 1, column: 1, .. })));
        assert!(SudokuInstance::parse("").is_err());
    }

    #[test]
    fn conflicting_clues_rejected() {
        for text in ["1 1 . .\n. . . .\n. . . .\n. . . .", "2 . . .\n2 . . .\n. . . .\n. . . .", "3 . . .\n. 3 . .\n. . . .\n. . . ."] {
            assert!(matches!(SudokuInstance::parse(text), Err(Error::InvalidInstance(_))), "{text}");
        }
        assert!(SudokuInstance::parse("3 . . .\n. . 3 .\n. . . .\n. . . .").is_ok());
    }

    #[test]
    fn parse_tolerates_crlf_and_zero_blanks() {
        let inst = SudokuInstance::parse("1 0 0 0\r\n0 2 0 0\r\n0 0 3 0\r\n0 0 0 4\r\n").unwrap();
        assert_eq!(inst, SudokuInstance::parse(GRID4).unwrap());
    }

    #[test]
    fn serialize_round_trips() {
        for seed in 0..20 {
            for (s, clues) in [(4, 6), (9, 30), (16, 100)] {
                let (inst, sol) = SudokuInstance::generate(s, clues, seed).unwrap();
                assert_eq!(SudokuInstance::parse(&inst.serialize()).unwrap(), inst);
                assert_eq!(SudokuGrid::parse(&sol.serialize()).unwrap(), sol);
            }
        }
    }

    #[test]
    fn generated_solutions_are_valid() {
        for seed in 0..10 {
            for s in [4, 9, 16, 25] {
                let (inst, sol) = SudokuInstance::generate(s, s, seed).unwrap();
                assert!(inst.validate(&sol).is_valid());
            }
        }
    }

    #[test]
    fn validate_matches_exhaustive_4x4_solution_set() {
        let sols = all_4x4_solutions();
        assert_eq!(sols.len(), 288);
        let inst = SudokuInstance::new(4, vec![]).unwrap();
        for cells in &sols {
            assert!(inst.validate(&SudokuGrid::new(4, cells.clone()).unwrap()).is_valid());
        }
        // every grid outside the solution set is rejected
        let set: std::collections::HashSet<&Vec<usize>> = sols.iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let cells: Vec<usize> = (0..16).map(|_| rng.random_range(0..4)).collect();
            let valid = inst.validate(&SudokuGrid::new(4, cells.clone()).unwrap()).is_valid();
            assert_eq!(valid, set.contains(&cells));
        }
    }

    #[test]
    fn validate_reports_groups() {
        let (inst, sol) = SudokuInstance::generate(4, 4, 3).unwrap();
        let mut cells = sol.cells().to_vec();
        cells.swap(0, 1);
        let v = inst.validate(&SudokuGrid::new(4, cells).unwrap());
        assert!(!v.is_valid());
        assert!(v.violations.iter().any(|x| matches!(x, Violation::Column(0))));
    }

    #[test]
    fn rounding() {
        let (inst, sol) = SudokuInstance::generate(9, 30, 8).unwrap();
        assert_eq!(inst.round(&sol.lift()), sol);

        let inst4 = SudokuInstance::new(4, vec![]).unwrap();
        let mut x = vec![0.25; 64];
        x[..4].copy_from_slice(&[0.2, 0.9, 0.1, 0.05]);
        let g = inst4.round(&x);
        assert_eq!(g.get(0, 0) + 1, 2);
        assert_eq!(g.get(0, 1) + 1, 1);
    }

    /// Every 4-queens solution by brute force over C(16, 4) placements.
    #[test]
    fn queens_validate_against_brute_force() {
        let inst = QueensInstance::new(4).unwrap();
        let attacks = |a: (usize, usize), b: (usize, usize)| {
            a.0 == b.0 || a.1 == b.1 || a.0 + a.1 == b.0 + b.1 || a.0 as isize - a.1 as isize == b.0 as isize - b.1 as isize
        };
        let mut found = Vec::new();
        for mask in 0u32..(1 << 16) {
            if mask.count_ones() != 4 {
                continue;
            }
            let pos: Vec<(usize, usize)> = (0..16).filter(|c| mask >> c & 1 == 1).map(|c| (c / 4, c % 4)).collect();
            let brute = (0..4).all(|a| (a + 1..4).all(|b| !attacks(pos[a], pos[b])));
            let board = QueensBoard::from_positions(4, &pos).unwrap();
            assert_eq!(inst.validate(&board).is_valid(), brute);
            if brute {
                found.push(pos);
            }
        }
        assert_eq!(found.len(), 2);
        assert!(found.contains(&vec![(0, 1), (1, 3), (2, 0), (3, 2)]));
    }

    #[test]
    fn queens_diagonal_violation_is_named() {
        let inst = QueensInstance::new(4).unwrap();
        let board = QueensBoard::from_positions(4, &[(0, 0), (1, 1)]).unwrap();
        let v = inst.validate(&board);
        assert!(v.violations.contains(&Violation::Diagonal(0)));
        assert_eq!(Violation::Diagonal(0).to_string(), "C4 diagonal 0");
    }

    #[test]
    fn queens_rounding_is_idempotent_through_lift() {
        let inst = QueensInstance::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let x: Vec<f64> = (0..64).map(|_| rng.random()).collect();
            let b = inst.round(&x);
            assert_eq!(inst.round(&b.lift()), b);
        }
        assert!(QueensInstance::new(3).is_err());
    }

    #[test]
    fn circle_line_geometry() {
        let cl = circle_line_instance();
        assert_eq!(cl.z0, [-10.0, -8.0]);
        for p in cl.intersections() {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            assert!((p[0] + 2.0 * p[1] - 2f64.sqrt()).abs() < 1e-12);
            assert!(cl.line.contains(&p, 1e-12));
        }
        let r2 = 2f64.sqrt();
        assert!(((r2 / 5.0) + 2.0 * (2.0 * r2 / 5.0) - r2).abs() < 1e-15);
    }
}
