//! Projections onto the constraint sets of the lifted puzzles and the
//! circle of the two-dimensional example.
//!
//! A "group" is a list of coordinates whose restriction must be a standard
//! basis vector (one-hot) or either zero or a standard basis vector
//! (at-most-one). Group projections reduce to an argmax because
//! `|x - e_i|^2 = |x|^2 - 2 x_i + 1`.

use crate::error::{Error, Result};
use crate::geometry::Projection;

/// How ties in the argmax of a group projection are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestIndex,
    /// Pseudo-random among tied coordinates, keyed by this seed and the group.
    Seeded(u64),
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Position (within `indices`) of the largest entry of `x[indices]`.
fn group_argmax(x: &[f64], indices: &[usize], tie: TieBreak) -> (usize, f64) {
    let mut best = 0;
    let mut best_val = x[indices[0]];
    let mut ties = 1u64;
    for (pos, &i) in indices.iter().enumerate().skip(1) {
        let v = x[i];
        if v > best_val {
            best = pos;
            best_val = v;
            ties = 1;
        } else if v == best_val {
            ties += 1;
        }
    }
    if let (TieBreak::Seeded(seed), true) = (tie, ties > 1) {
        let key = splitmix(seed ^ splitmix(indices[0] as u64) ^ best_val.to_bits());
        let mut pick = key % ties;
        for (pos, &i) in indices.iter().enumerate() {
            if x[i] == best_val {
                if pick == 0 {
                    return (pos, best_val);
                }
                pick -= 1;
            }
        }
    }
    (best, best_val)
}

/// Nearest standard basis vector to `x`.
pub fn project_one_hot(x: &[f64], tie: TieBreak) -> Vec<f64> {
    let idx: Vec<usize> = (0..x.len()).collect();
    let mut out = vec![0.0; x.len()];
    let (pos, _) = group_argmax(x, &idx, tie);
    out[pos] = 1.0;
    out
}

/// Nearest point of `{0, e_1, ..., e_d}` to `x`; the boundary case
/// `max x_i = 1/2` resolves to the basis vector.
pub fn project_at_most_one(x: &[f64], tie: TieBreak) -> Vec<f64> {
    let idx: Vec<usize> = (0..x.len()).collect();
    let mut out = vec![0.0; x.len()];
    let (pos, val) = group_argmax(x, &idx, tie);
    if val >= 0.5 {
        out[pos] = 1.0;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    OneHot,
    AtMostOne,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub indices: Vec<usize>,
    pub kind: GroupKind,
}

/// Product of group constraints over disjoint coordinate groups.
/// Coordinates not covered by any group are left unchanged.
#[derive(Debug, Clone)]
pub struct GroupProjection {
    dim: usize,
    groups: Vec<Group>,
    tie: TieBreak,
}

impl GroupProjection {
    pub fn new(dim: usize, groups: Vec<Group>, tie: TieBreak) -> Result<Self> {
        let mut seen = vec![false; dim];
        for g in &groups {
            if g.indices.is_empty() {
                return Err(Error::InvalidInstance("empty group".into()));
            }
            for &i in &g.indices {
                if i >= dim {
                    return Err(Error::InvalidInstance(format!(
                        "group index {i} out of bounds for dimension {dim}"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidInstance(format!("index {i} in two groups")));
                }
            }
        }
        Ok(Self { dim, groups, tie })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }
}

impl Projection for GroupProjection {
    fn dim(&self) -> usize {
        self.dim
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        for g in &self.groups {
            let (pos, val) = group_argmax(x, &g.indices, self.tie);
            for &i in &g.indices {
                out[i] = 0.0;
            }
            if g.kind == GroupKind::OneHot || val >= 0.5 {
                out[g.indices[pos]] = 1.0;
            }
        }
    }
}

pub(crate) fn integer_sqrt(s: usize) -> Option<usize> {
    let r = (s as f64).sqrt().round() as usize;
    (r * r == s).then_some(r)
}

/// Flat index of cell `(i, j)` digit `k` in the lifted cube.
#[inline]
pub fn cube_index(s: usize, i: usize, j: usize, k: usize) -> usize {
    (i * s + j) * s + k
}

/// The four one-hot families of the lifted Sudoku cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SudokuConstraint {
    /// `C1(:, j, k)`: one row index per (column, digit).
    Rows,
    /// `C2(i, :, k)`: one column index per (row, digit).
    Columns,
    /// `C3(i, j, :)`: one digit per cell.
    Pillars,
    /// `C4`: one cell per (block, digit); blocks enumerated row-major.
    Blocks,
}

impl SudokuConstraint {
    pub const ALL: [SudokuConstraint; 4] = [Self::Rows, Self::Columns, Self::Pillars, Self::Blocks];
}

pub fn sudoku_constraint_groups(s: usize, which: SudokuConstraint) -> Result<Vec<Group>> {
    let b = integer_sqrt(s)
        .filter(|_| s >= 4)
        .ok_or_else(|| Error::InvalidInstance(format!("sudoku size {s} is not a perfect square >= 4")))?;
    let mut groups = Vec::with_capacity(s * s);
    let one_hot = |indices| Group {
        indices,
        kind: GroupKind::OneHot,
    };
    match which {
        SudokuConstraint::Rows => {
            for j in 0..s {
                for k in 0..s {
                    groups.push(one_hot((0..s).map(|i| cube_index(s, i, j, k)).collect()));
                }
            }
        }
        SudokuConstraint::Columns => {
            for i in 0..s {
                for k in 0..s {
                    groups.push(one_hot((0..s).map(|j| cube_index(s, i, j, k)).collect()));
                }
            }
        }
        SudokuConstraint::Pillars => {
            for i in 0..s {
                for j in 0..s {
                    groups.push(one_hot((0..s).map(|k| cube_index(s, i, j, k)).collect()));
                }
            }
        }
        SudokuConstraint::Blocks => {
            for bi in 0..b {
                for bj in 0..b {
                    for k in 0..s {
                        let cells = (0..b)
                            .flat_map(|di| (0..b).map(move |dj| (bi * b + di, bj * b + dj)))
                            .map(|(i, j)| cube_index(s, i, j, k))
                            .collect();
                        groups.push(one_hot(cells));
                    }
                }
            }
        }
    }
    Ok(groups)
}

/// A given digit: cell `(row, col)` holds `digit` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clue {
    pub row: usize,
    pub col: usize,
    pub digit: usize,
}

/// Clamps every clued pillar to the indicator of its digit.
///
/// The set is an affine subspace; its projection differs from the
/// identity only on clued pillars, where the linear part is zero.
#[derive(Debug, Clone)]
pub struct ClueProjection {
    s: usize,
    clues: Vec<Clue>,
}

impl ClueProjection {
    pub fn new(s: usize, clues: &[Clue]) -> Result<Self> {
        let mut taken = vec![false; s * s];
        for c in clues {
            if c.row >= s || c.col >= s || c.digit >= s {
                return Err(Error::InvalidInstance(format!("clue {c:?} out of range for size {s}")));
            }
            if std::mem::replace(&mut taken[c.row * s + c.col], true) {
                return Err(Error::InvalidInstance(format!(
                    "two clues in cell ({}, {})",
                    c.row, c.col
                )));
            }
        }
        Ok(Self {
            s,
            clues: clues.to_vec(),
        })
    }

    pub fn clues(&self) -> &[Clue] {
        &self.clues
    }

    /// Diagonal of the linear part: 0 on clamped entries, 1 elsewhere.
    pub fn linear_diagonal(&self) -> Vec<f64> {
        let mut d = vec![1.0; self.s * self.s * self.s];
        for c in &self.clues {
            let start = cube_index(self.s, c.row, c.col, 0);
            d[start..start + self.s].fill(0.0);
        }
        d
    }
}

impl Projection for ClueProjection {
    fn dim(&self) -> usize {
        self.s * self.s * self.s
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        for c in &self.clues {
            let start = cube_index(self.s, c.row, c.col, 0);
            out[start..start + self.s].fill(0.0);
            out[start + c.digit] = 1.0;
        }
    }
}

/// The four queens constraints on the `s x s` board.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueensConstraint {
    /// C1: exactly one queen per row.
    Rows,
    /// C2: exactly one queen per column.
    Columns,
    /// C3: at most one queen per anti-diagonal `i + j = c`.
    AntiDiagonals,
    /// C4: at most one queen per diagonal `i - j = c`.
    Diagonals,
}

impl QueensConstraint {
    pub const ALL: [QueensConstraint; 4] =
        [Self::Rows, Self::Columns, Self::AntiDiagonals, Self::Diagonals];
}

pub fn queens_constraint_groups(s: usize, which: QueensConstraint) -> Result<Vec<Group>> {
    if s < 4 {
        return Err(Error::InvalidInstance(format!("queens board size {s} < 4")));
    }
    let groups = match which {
        QueensConstraint::Rows => (0..s)
            .map(|i| Group {
                indices: (0..s).map(|j| i * s + j).collect(),
                kind: GroupKind::OneHot,
            })
            .collect(),
        QueensConstraint::Columns => (0..s)
            .map(|j| Group {
                indices: (0..s).map(|i| i * s + j).collect(),
                kind: GroupKind::OneHot,
            })
            .collect(),
        QueensConstraint::AntiDiagonals => (0..2 * s - 1)
            .map(|c| Group {
                indices: (0..s)
                    .filter(|&i| c >= i && c - i < s)
                    .map(|i| i * s + (c - i))
                    .collect(),
                kind: GroupKind::AtMostOne,
            })
            .collect(),
        QueensConstraint::Diagonals => (0..2 * s - 1)
            .map(|t| {
                // i - j = t - (s - 1)
                let d = t as isize - (s as isize - 1);
                Group {
                    indices: (0..s as isize)
                        .filter(|&i| (0..s as isize).contains(&(i - d)))
                        .map(|i| (i as usize) * s + (i - d) as usize)
                        .collect(),
                    kind: GroupKind::AtMostOne,
                }
            })
            .collect(),
    };
    Ok(groups)
}

/// Unit circle in the plane; the origin maps to `(1, 0)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitCircle;

impl Projection for UnitCircle {
    fn dim(&self) -> usize {
        2
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        let n = x[0].hypot(x[1]);
        if n == 0.0 {
            out[0] = 1.0;
            out[1] = 0.0;
        } else {
            out[0] = x[0] / n;
            out[1] = x[1] / n;
        }
    }
}
