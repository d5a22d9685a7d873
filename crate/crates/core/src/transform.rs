//! The relative-cost view of a cost matrix under a permutation, and the
//! rotation facts that let every cycle search prune on partial sums.

use serde::Serialize;

use crate::cost::{Cost, CostMatrix};
use crate::error::{Error, Result};
use crate::perm::{format_cycle, Permutation};

/// `entry(a, b) = cost(a, D(b)) - cost(a, D(a))`, evaluated on demand.
///
/// A cycle `(a1 a2 ... ak)` in this view reassigns `a_i -> D(a_{i+1})`, and its
/// value is exactly the change in permutation value. The one exception is an
/// optional free row (the fixed point of an almost-perfect matching), whose
/// entries are raw costs with nothing subtracted.
#[derive(Clone, Copy)]
pub struct TransformMatrix<'a> {
    base: &'a CostMatrix,
    perm: &'a Permutation,
    free_row: Option<usize>,
}

impl<'a> TransformMatrix<'a> {
    pub fn base(&self) -> &'a CostMatrix {
        self.base
    }

    pub fn perm(&self) -> &'a Permutation {
        self.perm
    }

    pub fn free_row(&self) -> Option<usize> {
        self.free_row
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    /// `None` exactly when `D(b) = a`, the unavailable diagonal of `M`.
    #[inline]
    pub fn entry(&self, a: usize, b: usize) -> Option<Cost> {
        let target = self.perm.image(b);
        if target == a {
            return None;
        }
        let raw = self.base.cost(a, target);
        if self.free_row == Some(a) {
            Some(raw)
        } else {
            Some(raw - self.base.cost(a, self.perm.image(a)))
        }
    }
}

pub fn build_transform<'a>(m: &'a CostMatrix, d: &'a Permutation) -> Result<TransformMatrix<'a>> {
    build_transform_with_free_row(m, d, None)
}

/// Transform whose row `free_row` keeps raw costs. `free_row` must be the only
/// fixed point of `d`.
pub fn build_transform_with_free_row<'a>(
    m: &'a CostMatrix,
    d: &'a Permutation,
    free_row: Option<usize>,
) -> Result<TransformMatrix<'a>> {
    if m.n() != d.len() {
        return Err(Error::SizeMismatch { left: m.n(), right: d.len() });
    }
    if let Some(bad) = d.fixed_points().find(|&a| Some(a) != free_row) {
        return Err(Error::FixedPoint(bad + 1));
    }
    if let Some(f) = free_row {
        if d.image(f) != f {
            return Err(Error::Invariant(format!("free row {} is not a fixed point", f + 1)));
        }
    }
    Ok(TransformMatrix { base: m, perm: d, free_row })
}

/// How a cycle of a matching transform meets the matching's pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CycleKind {
    /// Not classified against a matching (descent cycles).
    Plain,
    /// No pair has both points on the cycle.
    Acceptable,
    /// Exactly one pair has both points on the cycle.
    Unlinked2,
    /// Exactly two pairs have both points on the cycle, interlaced.
    Linked2,
    /// Any other pattern: three or more full pairs, or two nested pairs.
    Multi,
}

/// A cycle together with its value in a stated transform (or in `M`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightedCycle {
    pub nodes: Vec<usize>,
    pub value: Cost,
    pub kind: CycleKind,
}

impl WeightedCycle {
    pub fn new(tm: &TransformMatrix<'_>, nodes: Vec<usize>) -> Result<Self> {
        let value = cycle_value(tm, &nodes)?;
        Ok(WeightedCycle { nodes, value, kind: CycleKind::Plain })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The same cycle written from its smallest vertex.
    pub fn canonical(mut self) -> Self {
        self.nodes = canonical_rotation(&self.nodes);
        self
    }

    /// As a permutation on `0..n` (points off the cycle fixed).
    pub fn to_permutation(&self, n: usize) -> Result<Permutation> {
        Permutation::from_cycles(n, std::slice::from_ref(&self.nodes))
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.nodes.len();
        (0..k).map(move |i| (self.nodes[i], self.nodes[(i + 1) % k]))
    }
}

impl std::fmt::Display for WeightedCycle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", format_cycle(&self.nodes), self.value)
    }
}

pub fn canonical_rotation(nodes: &[usize]) -> Vec<usize> {
    let Some(pos) = nodes.iter().enumerate().min_by_key(|&(_, v)| v).map(|(i, _)| i) else {
        return Vec::new();
    };
    let mut out = nodes.to_vec();
    out.rotate_left(pos);
    out
}

/// Cyclic arc sum of `nodes` in `tm`.
pub fn cycle_value(tm: &TransformMatrix<'_>, nodes: &[usize]) -> Result<Cost> {
    let n = tm.n();
    let mut seen = vec![false; n];
    for &v in nodes {
        if v >= n {
            return Err(Error::VertexOutOfRange(v + 1));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::RepeatedVertex(v + 1));
        }
    }
    if nodes.len() < 2 {
        return Err(Error::Invariant("a cycle needs at least two points".into()));
    }
    let k = nodes.len();
    let mut total = 0;
    for i in 0..k {
        let (a, b) = (nodes[i], nodes[(i + 1) % k]);
        total += tm.entry(a, b).ok_or(Error::UnavailableEntry(a + 1, b + 1))?;
    }
    Ok(total)
}

/// Smallest index `i` such that every cyclic prefix sum starting at `i` is at
/// most `bound`.
///
/// Such an index always exists when the total is at most `bound` and `bound`
/// is nonnegative.
pub fn determining_vertex(weights: &[Cost], bound: Cost) -> Result<usize> {
    let r = weights.len();
    (0..r)
        .find(|&start| {
            let mut sum = 0;
            (0..r).all(|k| {
                sum += weights[(start + k) % r];
                sum <= bound
            })
        })
        .ok_or(Error::NoDeterminingVertex)
}

/// Smallest index `d` such that every prefix starting at `d` has an average
/// no greater than the whole cycle's average.
pub fn aav_determining_node(weights: &[Cost]) -> usize {
    assert!(!weights.is_empty(), "empty cycle");
    let r = weights.len() as Cost;
    let total: Cost = weights.iter().sum();
    // prefix_k / k <= total / r  <=>  sum over the prefix of (r * w - total) <= 0
    let shifted: Vec<Cost> = weights.iter().map(|&w| r * w - total).collect();
    determining_vertex(&shifted, 0).expect("shifted weights sum to zero")
}
