//! Cost matrices, the sorted-neighbor index and row reduction.
//!
//! Vertices are `0..n` internally; the text format and every user-facing
//! rendering use `1..=n`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ParseError;
use crate::tour::Tour;

/// Integer cost unit. All value arithmetic is exact.
pub type Cost = i64;

/// An `n x n` cost table whose diagonal is unavailable.
///
/// The diagonal is not stored as a large number: [`CostMatrix::cost`] panics
/// when asked for it, and [`CostMatrix::get`] returns `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostMatrix {
    n: usize,
    costs: Vec<Cost>,
    symmetric: bool,
}

impl CostMatrix {
    /// Builds a matrix from row-major off-diagonal data. Diagonal entries of
    /// `rows` are ignored.
    pub fn from_rows(rows: &[Vec<Cost>]) -> Result<Self, ParseError> {
        let n = rows.len();
        if n < 3 {
            return Err(ParseError::TooSmall { n });
        }
        let mut costs = vec![0; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ParseError::RowLength { line: i + 1, expected: n, found: row.len() });
            }
            for (j, &c) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                if c < 0 {
                    return Err(ParseError::NegativeEntry { line: i + 1, row: i + 1, col: j + 1, value: c });
                }
                costs[i * n + j] = c;
            }
        }
        let mut m = CostMatrix { n, costs, symmetric: false };
        m.symmetric = m.data_is_symmetric();
        Ok(m)
    }

    /// Parses the plain-text instance format.
    ///
    /// ```text
    /// # comment
    /// n 3
    /// asymmetric        (optional; `symmetric` is also accepted)
    /// INF 1 2
    /// 1 INF 3
    /// 2 3 INF
    /// ```
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut n: Option<usize> = None;
        let mut directive: Option<bool> = None;
        let mut rows: Vec<(usize, Vec<Cost>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some(dim) = n else {
                let mut parts = line.split_whitespace();
                let malformed = || ParseError::MalformedDimension { line: line_no, text: line.to_string() };
                if parts.next() != Some("n") {
                    return Err(malformed());
                }
                let count = parts.next().and_then(|s| s.parse::<usize>().ok()).ok_or_else(malformed)?;
                if parts.next().is_some() {
                    return Err(malformed());
                }
                if count < 3 {
                    return Err(ParseError::TooSmall { n: count });
                }
                n = Some(count);
                continue;
            };
            if rows.is_empty() && directive.is_none() {
                match line {
                    "asymmetric" => {
                        directive = Some(false);
                        continue;
                    }
                    "symmetric" => {
                        directive = Some(true);
                        continue;
                    }
                    _ => {}
                }
            }
            let row_idx = rows.len();
            if row_idx >= dim {
                return Err(ParseError::RowCount { expected: dim, found: row_idx + 1 });
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != dim {
                return Err(ParseError::RowLength { line: line_no, expected: dim, found: fields.len() });
            }
            let mut row = Vec::with_capacity(dim);
            for (col, field) in fields.iter().enumerate() {
                if field.eq_ignore_ascii_case("inf") || *field == "∞" {
                    if col != row_idx {
                        return Err(ParseError::InfOffDiagonal { line: line_no, row: row_idx + 1, col: col + 1 });
                    }
                    row.push(0);
                    continue;
                }
                let value: Cost = field
                    .parse()
                    .map_err(|_| ParseError::InvalidField { line: line_no, text: field.to_string() })?;
                if value < 0 && col != row_idx {
                    return Err(ParseError::NegativeEntry { line: line_no, row: row_idx + 1, col: col + 1, value });
                }
                row.push(if col == row_idx { 0 } else { value });
            }
            rows.push((line_no, row));
        }
        let dim = n.ok_or(ParseError::MissingDimension)?;
        if rows.len() != dim {
            return Err(ParseError::RowCount { expected: dim, found: rows.len() });
        }
        let data: Vec<Vec<Cost>> = rows.into_iter().map(|(_, r)| r).collect();
        let mut m = Self::from_rows(&data)?;
        match directive {
            Some(false) => m.symmetric = false,
            Some(true) => {
                if let Some((i, j)) = m.first_asymmetric_pair() {
                    return Err(ParseError::NotSymmetric { row: i + 1, col: j + 1 });
                }
            }
            None => {}
        }
        Ok(m)
    }

    /// Canonical text form; [`CostMatrix::parse`] reproduces the matrix exactly.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n {}", self.n);
        if !self.symmetric {
            out.push_str("asymmetric\n");
        }
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| if i == j { "INF".to_string() } else { self.cost(i, j).to_string() })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Cost of arc `(i, j)`. Panics on the diagonal.
    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> Cost {
        assert!(i != j, "diagonal entry ({i}, {i}) is unavailable");
        self.costs[i * self.n + j]
    }

    /// Cost of arc `(i, j)`, or `None` on the diagonal.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<Cost> {
        (i != j).then(|| self.costs[i * self.n + j])
    }

    pub fn transposed(&self) -> CostMatrix {
        let n = self.n;
        let mut costs = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                costs[j * n + i] = self.costs[i * n + j];
            }
        }
        CostMatrix { n, costs, symmetric: self.symmetric }
    }

    pub fn max_cost(&self) -> Cost {
        (0..self.n)
            .flat_map(|i| (0..self.n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.cost(i, j))
            .max()
            .unwrap_or(0)
    }

    /// Smallest off-diagonal cost in row `i`.
    pub fn row_min(&self, i: usize) -> Cost {
        (0..self.n).filter(|&j| j != i).map(|j| self.cost(i, j)).min().expect("n >= 3")
    }

    /// Sum of the costs of `perm`'s arcs `a -> perm[a]` over the moved points.
    pub fn perm_value(&self, images: &[usize]) -> Cost {
        images.iter().enumerate().filter(|&(a, &b)| a != b).map(|(a, &b)| self.cost(a, b)).sum()
    }

    fn data_is_symmetric(&self) -> bool {
        self.first_asymmetric_pair().is_none()
    }

    fn first_asymmetric_pair(&self) -> Option<(usize, usize)> {
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.cost(i, j) != self.cost(j, i) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Random instance with costs in `0..=max_cost`, for tests and benchmarks.
    pub fn random(n: usize, symmetric: bool, max_cost: Cost, seed: u64) -> CostMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = vec![vec![0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j || (symmetric && j < i) {
                    continue;
                }
                let c = rng.gen_range(0..=max_cost);
                rows[i][j] = c;
                if symmetric {
                    rows[j][i] = c;
                }
            }
        }
        let mut m = CostMatrix::from_rows(&rows).expect("generated rows are valid");
        m.symmetric = symmetric;
        m
    }

    /// Value of a tour: the sum of its `n` arc costs.
    pub fn tour_value(&self, tour: &Tour) -> Cost {
        tour.value(self)
    }
}

/// For each vertex, the other vertices ordered by nondecreasing cost from it.
/// Ties go to the smaller vertex id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedNeighbors {
    rows: Vec<Vec<usize>>,
}

impl SortedNeighbors {
    pub fn new(m: &CostMatrix) -> Self {
        let n = m.n();
        let rows = (0..n)
            .map(|i| {
                let mut row: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                row.sort_by_key(|&j| (m.cost(i, j), j));
                row
            })
            .collect();
        SortedNeighbors { rows }
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    /// The `rank`-th nearest neighbor of `i`, 1-based rank.
    pub fn nth(&self, i: usize, rank: usize) -> Option<usize> {
        rank.checked_sub(1).and_then(|r| self.rows[i].get(r).copied())
    }
}

pub fn sorted_neighbors(m: &CostMatrix) -> SortedNeighbors {
    SortedNeighbors::new(m)
}

/// A matrix with each row's minimum subtracted from the row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedMatrix {
    pub base: CostMatrix,
    pub reduction_total: Cost,
}

pub fn row_reduce(m: &CostMatrix) -> ReducedMatrix {
    let n = m.n();
    let mut costs = m.costs.clone();
    let mut total = 0;
    for i in 0..n {
        let min = m.row_min(i);
        total += min;
        for j in 0..n {
            if i != j {
                costs[i * n + j] -= min;
            }
        }
    }
    let mut base = CostMatrix { n, costs, symmetric: false };
    base.symmetric = base.data_is_symmetric();
    ReducedMatrix { base, reduction_total: total }
}
