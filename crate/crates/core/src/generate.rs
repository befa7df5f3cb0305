//! Benchmark generators: line, line with sink, grid and maze.
//!
//! States are named `s<i>`. Every non-goal state has reward 1, goals have
//! reward 0, and the initial set is every non-goal state of the underlying
//! layout (the sink of `line-sink` is not initial).

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::model::{dirac, normalize, Distribution, Mdp, ModelError};
use crate::rational::{fmt_rational, int, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Line,
    LineSink,
    Grid,
    Maze,
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "line" => Ok(Family::Line),
            "line-sink" => Ok(Family::LineSink),
            "grid" => Ok(Family::Grid),
            "maze" => Ok(Family::Maze),
            other => Err(format!("unknown family {other:?}")),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Line => "line",
            Family::LineSink => "line-sink",
            Family::Grid => "grid",
            Family::Maze => "maze",
        })
    }
}

pub fn generate_benchmark(family: Family, size: usize, p: &Rational) -> Result<Mdp, ModelError> {
    match family {
        Family::Line => line(size, p),
        Family::LineSink => line_sink(size, p),
        Family::Grid => grid(size),
        Family::Maze => maze(size),
    }
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

fn strs(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

fn rewards(n: usize, goal: usize) -> Vec<Rational> {
    (0..n)
        .map(|s| {
            if s == goal {
                Rational::zero()
            } else {
                Rational::one()
            }
        })
        .collect()
}

fn check_line(k: usize, p: &Rational) -> Result<(), ModelError> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(ModelError::Precondition(format!(
            "line size must be odd and at least 3, got {k}"
        )));
    }
    if !p.is_positive() || p > &Rational::one() {
        return Err(ModelError::Precondition(format!(
            "success probability must lie in (0, 1], got {}",
            fmt_rational(p)
        )));
    }
    Ok(())
}

/// Moves to `target` with probability `p`, the rest goes to `fail`.
fn attempt(target: usize, fail: usize, p: &Rational) -> Distribution {
    normalize(vec![(target, p.clone()), (fail, Rational::one() - p)])
}

fn line_rows(k: usize, p: &Rational, sink: Option<usize>) -> Vec<Vec<Distribution>> {
    let g = (k - 1) / 2;
    (0..k)
        .map(|s| {
            if s == g {
                return vec![dirac(s), dirac(s)];
            }
            let fail = sink.unwrap_or(s);
            let left = if s == 0 {
                dirac(s)
            } else {
                attempt(s - 1, fail, p)
            };
            let right = if s == k - 1 {
                dirac(s)
            } else {
                attempt(s + 1, fail, p)
            };
            vec![left, right]
        })
        .collect()
}

/// `L(k, p)`: a line of `k` states with the goal in the middle. Moves succeed
/// with probability `p` and otherwise stay put; pushing against either end is
/// a certain self-loop.
pub fn line(k: usize, p: &Rational) -> Result<Mdp, ModelError> {
    check_line(k, p)?;
    let g = (k - 1) / 2;
    let initial = (0..k).filter(|&s| s != g).collect();
    Mdp::try_new(
        names(k),
        strs(&["l", "r"]),
        initial,
        vec![g],
        line_rows(k, p, None),
        rewards(k, g),
    )
}

/// `L_s(k, p)`: as [`line`], but failed moves fall into an absorbing non-goal
/// sink `s<k>` with reward 1.
pub fn line_sink(k: usize, p: &Rational) -> Result<Mdp, ModelError> {
    check_line(k, p)?;
    let g = (k - 1) / 2;
    let mut rows = line_rows(k, p, Some(k));
    rows.push(vec![dirac(k), dirac(k)]);
    let initial = (0..k).filter(|&s| s != g).collect();
    Mdp::try_new(
        names(k + 1),
        strs(&["l", "r"]),
        initial,
        vec![g],
        rows,
        rewards(k + 1, g),
    )
}

const MOVES: [&str; 4] = ["up", "down", "left", "right"];

/// `G(k)`: a `k × k` grid in row-major order with the goal bottom-right.
/// Moves are deterministic; leaving the grid is a self-loop.
pub fn grid(k: usize) -> Result<Mdp, ModelError> {
    if k < 2 {
        return Err(ModelError::Precondition(format!(
            "grid size must be at least 2, got {k}"
        )));
    }
    let n = k * k;
    let rows = (0..n)
        .map(|s| {
            let (r, c) = (s / k, s % k);
            let up = if r > 0 { s - k } else { s };
            let down = if r + 1 < k { s + k } else { s };
            let left = if c > 0 { s - 1 } else { s };
            let right = if c + 1 < k { s + 1 } else { s };
            vec![dirac(up), dirac(down), dirac(left), dirac(right)]
        })
        .collect();
    let g = n - 1;
    let initial = (0..g).collect();
    Mdp::try_new(
        names(n),
        strs(&MOVES),
        initial,
        vec![g],
        rows,
        rewards(n, g),
    )
}

/// Layout of `M(c)`: a top row of `c` cells and three corridors hanging below
/// columns `0`, `(c-1)/2` and `c-1`.
#[derive(Debug, Clone, Copy)]
pub struct MazeLayout {
    pub columns: usize,
    pub depth: usize,
}

impl MazeLayout {
    pub fn new(c: usize) -> Self {
        MazeLayout {
            columns: c,
            depth: 2 + (c - 5) / 2,
        }
    }

    pub fn num_states(&self) -> usize {
        3 * self.depth + self.columns
    }

    /// Index of the corridor cell at `depth` (1-based) below corridor `j`.
    pub fn corridor(&self, j: usize, depth: usize) -> usize {
        self.columns + 3 * (depth - 1) + j
    }

    pub fn goal(&self) -> usize {
        self.corridor(1, self.depth)
    }
}

/// `M(c)`: the maze with `c` columns, `2 + (c-5)/2` corridor rows and the goal
/// at the bottom of the middle corridor. Top row first, then corridor cells
/// row by row.
pub fn maze(c: usize) -> Result<Mdp, ModelError> {
    if c < 5 || c.is_multiple_of(2) {
        return Err(ModelError::Precondition(format!(
            "maze columns must be odd and at least 5, got {c}"
        )));
    }
    let lay = MazeLayout::new(c);
    let n = lay.num_states();
    let tops = [0, (c - 1) / 2, c - 1];
    let mut rows = vec![Vec::new(); n];
    for (col, row) in rows.iter_mut().enumerate().take(c) {
        let down = tops
            .iter()
            .position(|&t| t == col)
            .map_or(col, |j| lay.corridor(j, 1));
        let left = if col > 0 { col - 1 } else { col };
        let right = if col + 1 < c { col + 1 } else { col };
        *row = vec![dirac(col), dirac(down), dirac(left), dirac(right)];
    }
    for (j, &top) in tops.iter().enumerate() {
        for d in 1..=lay.depth {
            let s = lay.corridor(j, d);
            let up = if d == 1 { top } else { lay.corridor(j, d - 1) };
            let down = if d < lay.depth {
                lay.corridor(j, d + 1)
            } else {
                s
            };
            rows[s] = vec![dirac(up), dirac(down), dirac(s), dirac(s)];
        }
    }
    let g = lay.goal();
    let initial = (0..n).filter(|&s| s != g).collect();
    Mdp::try_new(
        names(n),
        strs(&MOVES),
        initial,
        vec![g],
        rows,
        rewards(n, g),
    )
}

/// Compact identifier such as `L(7,1/2)`, `Ls(7,1/2)`, `G(3)` or `M(5)`.
pub fn model_id(family: Family, size: usize, p: &Rational) -> String {
    let suffix = if p == &int(1) {
        String::new()
    } else {
        format!(",{}", fmt_rational(p))
    };
    match family {
        Family::Line => format!("L({size}{suffix})"),
        Family::LineSink => format!("Ls({size}{suffix})"),
        Family::Grid => format!("G({size})"),
        Family::Maze => format!("M({size})"),
    }
}
