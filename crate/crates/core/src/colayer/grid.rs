use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use super::{check_dim, ActionSpace, ENUMERATION_LIMIT};
use crate::{Error, Result};

/// Neighbor offsets `(d_row, d_col)` in the order Dijkstra and the path
/// enumeration visit them: the 3×3 stencil in row-major order, skipping the
/// center.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] =
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn is_adjacent(&self, other: &Cell) -> bool {
        let dr = self.row.abs_diff(other.row);
        let dc = self.col.abs_diff(other.col);
        dr <= 1 && dc <= 1 && (dr, dc) != (0, 0)
    }
}

/// What the maximizer does with scores above zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PositiveScores {
    /// Fail with [`Error::PositiveScore`].
    #[default]
    Reject,
    /// Treat positive scores as zero before solving.
    Clamp,
}

/// Simple source→destination paths on an 8-connected grid, encoded as 0/1
/// cell-membership vectors (row-major) that include both endpoints.
///
/// With all scores `θ ≤ 0`, maximizing `⟨θ|a⟩` is a shortest path problem
/// with nonnegative cell weights `−θ`, solved by Dijkstra. Ties resolve
/// towards the first relaxation in [`NEIGHBOR_OFFSETS`] order from the
/// earliest-settled cell (settlement order: distance, then cell index).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridPathSpace {
    rows: usize,
    cols: usize,
    source: Cell,
    destination: Cell,
    positive: PositiveScores,
}

#[derive(PartialEq)]
struct Entry {
    dist: f64,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl GridPathSpace {
    pub fn new(rows: usize, cols: usize, source: Cell, destination: Cell) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InfeasibleAction("empty grid".into()));
        }
        for c in [source, destination] {
            if c.row >= rows || c.col >= cols {
                return Err(Error::InfeasibleAction(format!(
                    "cell ({}, {}) outside {rows}x{cols} grid",
                    c.row, c.col
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            source,
            destination,
            positive: PositiveScores::Reject,
        })
    }

    pub fn with_positive_scores(mut self, policy: PositiveScores) -> Self {
        self.positive = policy;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn source(&self) -> Cell {
        self.source
    }

    pub fn destination(&self) -> Cell {
        self.destination
    }

    pub fn index(&self, c: Cell) -> usize {
        c.row * self.cols + c.col
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell::new(index / self.cols, index % self.cols)
    }

    fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBOR_OFFSETS.iter().filter_map(move |&(dr, dc)| {
            let r = c.row.checked_add_signed(dr)?;
            let k = c.col.checked_add_signed(dc)?;
            (r < self.rows && k < self.cols).then(|| Cell::new(r, k))
        })
    }

    /// Membership vector of a cell sequence.
    pub fn encode(&self, path: &[Cell]) -> Vec<f64> {
        let mut a = vec![0.0; self.rows * self.cols];
        for &c in path {
            a[self.index(c)] = 1.0;
        }
        a
    }

    /// Cell sequence of a shortest path under the given scores.
    pub fn shortest_path(&self, theta: &[f64]) -> Result<Vec<Cell>> {
        check_dim("score vector", self.rows * self.cols, theta.len())?;
        let weight = |i: usize| -> Result<f64> {
            let s = theta[i];
            if s > 0.0 {
                match self.positive {
                    PositiveScores::Reject => Err(Error::PositiveScore { cell: i, score: s }),
                    PositiveScores::Clamp => Ok(0.0),
                }
            } else {
                Ok(-s)
            }
        };
        let n = self.rows * self.cols;
        let src = self.index(self.source);
        let dst = self.index(self.destination);
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        dist[src] = weight(src)?;
        let mut heap = BinaryHeap::new();
        heap.push(Entry {
            dist: dist[src],
            cell: src,
        });
        while let Some(Entry { dist: d, cell: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if u == dst {
                break;
            }
            for v in self.neighbors(self.cell(u)) {
                let vi = self.index(v);
                if done[vi] {
                    continue;
                }
                let nd = d + weight(vi)?;
                if nd < dist[vi] {
                    dist[vi] = nd;
                    prev[vi] = u;
                    heap.push(Entry { dist: nd, cell: vi });
                }
            }
        }
        let mut path = vec![self.destination];
        let mut cur = dst;
        while cur != src {
            cur = prev[cur];
            path.push(self.cell(cur));
        }
        path.reverse();
        Ok(path)
    }

    /// Every simple source→destination path as a cell sequence, in
    /// depth-first order over [`NEIGHBOR_OFFSETS`].
    pub fn simple_paths(&self) -> Result<Vec<Vec<Cell>>> {
        let mut out = Vec::new();
        let mut visited = vec![false; self.rows * self.cols];
        let mut stack = vec![self.source];
        visited[self.index(self.source)] = true;
        self.dfs(&mut stack, &mut visited, &mut out)?;
        Ok(out)
    }

    fn dfs(&self, stack: &mut Vec<Cell>, visited: &mut [bool], out: &mut Vec<Vec<Cell>>) -> Result<()> {
        let here = *stack.last().expect("nonempty stack");
        if here == self.destination {
            if out.len() == ENUMERATION_LIMIT {
                return Err(Error::EnumerationTooLarge {
                    limit: ENUMERATION_LIMIT,
                });
            }
            out.push(stack.clone());
            return Ok(());
        }
        let next: Vec<Cell> = self.neighbors(here).collect();
        for c in next {
            let i = self.index(c);
            if visited[i] {
                continue;
            }
            visited[i] = true;
            stack.push(c);
            self.dfs(stack, visited, out)?;
            stack.pop();
            visited[i] = false;
        }
        Ok(())
    }

    /// Decodes a membership vector into a simple path visiting exactly the
    /// marked cells, if one exists.
    pub fn decode(&self, action: &[f64]) -> Option<Vec<Cell>> {
        let n = self.rows * self.cols;
        if action.len() != n || action.iter().any(|&x| x != 0.0 && x != 1.0) {
            return None;
        }
        let member: Vec<bool> = action.iter().map(|&x| x == 1.0).collect();
        let size = member.iter().filter(|&&m| m).count();
        if !member[self.index(self.source)] || !member[self.index(self.destination)] {
            return None;
        }
        let mut visited = vec![false; n];
        visited[self.index(self.source)] = true;
        let mut stack = vec![self.source];
        self.hamiltonian(&member, size, &mut visited, &mut stack)
            .then_some(stack)
    }

    fn hamiltonian(&self, member: &[bool], size: usize, visited: &mut [bool], stack: &mut Vec<Cell>) -> bool {
        let here = *stack.last().expect("nonempty stack");
        if here == self.destination {
            return stack.len() == size;
        }
        let next: Vec<Cell> = self.neighbors(here).collect();
        for c in next {
            let i = self.index(c);
            if !member[i] || visited[i] {
                continue;
            }
            visited[i] = true;
            stack.push(c);
            if self.hamiltonian(member, size, visited, stack) {
                return true;
            }
            stack.pop();
            visited[i] = false;
        }
        false
    }
}

impl ActionSpace for GridPathSpace {
    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn argmax(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.encode(&self.shortest_path(theta)?))
    }

    /// Distinct membership vectors of all simple paths. Paths that visit
    /// the same cells in a different order share one encoding and appear
    /// once, at their first depth-first occurrence.
    fn enumerate(&self) -> Result<Vec<Vec<f64>>> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for p in self.simple_paths()? {
            let mut key: Vec<usize> = p.iter().map(|&c| self.index(c)).collect();
            key.sort_unstable();
            if seen.insert(key) {
                out.push(self.encode(&p));
            }
        }
        Ok(out)
    }

    fn is_feasible(&self, action: &[f64]) -> bool {
        self.decode(action).is_some()
    }
}
