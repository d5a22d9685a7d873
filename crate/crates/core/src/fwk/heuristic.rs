use std::cmp::Ordering;

use super::store::{extend, keep_better, PathRecord};
use crate::aav::Aav;
use crate::cost::{Cost, CostMatrix};
use crate::error::{Error, Result};
use crate::tour::Tour;
use crate::transform::aav_determining_node;

fn path_order(a: &PathRecord, b: &PathRecord) -> Ordering {
    a.aav().cmp(&b.aav()).then_with(|| a.nodes.cmp(&b.nodes))
}

/// Up to `k` records per arc count, ascending by aav.
#[derive(Debug, Clone)]
pub struct BestTable {
    k: Option<usize>,
    columns: Vec<Vec<PathRecord>>,
}

impl BestTable {
    /// `k` of `None` keeps everything.
    pub fn new(n: usize, k: Option<usize>) -> Self {
        BestTable { k, columns: vec![Vec::new(); n] }
    }

    pub fn column(&self, arcs: usize) -> &[PathRecord] {
        &self.columns[arcs]
    }

    /// True when a record with this aav would be kept in its column.
    pub fn admits(&self, arcs: usize, aav: Aav) -> bool {
        match self.k {
            Some(k) if self.columns[arcs].len() >= k => aav < self.columns[arcs][k - 1].aav(),
            _ => true,
        }
    }

    pub fn insert(&mut self, p: PathRecord) -> bool {
        let arcs = p.arcs();
        let col = &mut self.columns[arcs];
        let pos = col.binary_search_by(|q| path_order(q, &p)).unwrap_or_else(|e| e);
        if let Some(k) = self.k {
            if pos >= k {
                return false;
            }
        }
        col.insert(pos, p);
        if let Some(k) = self.k {
            col.truncate(k);
        }
        true
    }
}

fn closed_value(m: &CostMatrix, p: &PathRecord) -> Cost {
    p.value + m.cost(p.end(), p.start())
}

/// Column-by-column growth keeping the `k` best paths of each length;
/// returns the best tour found below `t0`, else `t0`.
pub fn fwk_heuristic1(m: &CostMatrix, t0: &Tour, k: Option<usize>) -> Result<Tour> {
    let n = m.n();
    if k == Some(0) {
        return Err(Error::Invariant("k must be at least 1".into()));
    }
    if t0.len() != n {
        return Err(Error::SizeMismatch { left: n, right: t0.len() });
    }
    let bound = Aav::new(t0.value(m), n);
    let mut table = BestTable::new(n, k);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                let p = PathRecord::arc(m, a, b);
                if bound.exceeds(p.value, 1) {
                    table.insert(p);
                }
            }
        }
    }
    let mut best: Option<Tour> = None;
    for arcs in 1..n - 1 {
        let parents = table.column(arcs).to_vec();
        for p in &parents {
            for w in 0..n {
                let Some(q) = extend(p, w, m, bound) else { continue };
                if table.admits(arcs + 1, q.aav()) {
                    table.insert(q);
                }
            }
        }
    }
    // Closing the last column gives the tours; the first one answers.
    for p in table.column(n - 1) {
        if bound.exceeds(closed_value(m, p), n) {
            keep_better(m, &mut best, Tour::new(p.nodes.clone())?);
        }
    }
    Ok(match best {
        Some(t) if t.value(m) < t0.value(m) => t,
        _ => t0.clone(),
    })
}

/// Arc count from which long paths are kept first: the first arc of `t0`,
/// read from its aav determining node, whose cost exceeds the tour aav while
/// most of the arcs after it do too. `n` when no arc qualifies.
pub fn pivot_length(m: &CostMatrix, t0: &Tour) -> usize {
    let n = t0.len();
    let weights: Vec<Cost> = t0.arcs().map(|(a, b)| m.cost(a, b)).collect();
    let d = aav_determining_node(&weights);
    let w: Vec<Cost> = (0..n).map(|i| weights[(d + i) % n]).collect();
    let total: Cost = w.iter().sum();
    let above = |c: Cost| c * n as Cost > total;
    for i in 0..n {
        let after = &w[i + 1..];
        let high = after.iter().filter(|&&c| above(c)).count();
        if above(w[i]) && 2 * high > after.len() {
            return i + 1;
        }
    }
    n
}

pub fn default_beam_width(n: usize) -> usize {
    (n.max(2) as f64).log2().ceil() as usize + 1
}

/// Beam search keeping `width` paths per round, preferring paths of at least
/// the pivot length once one exists.
pub fn fwk_heuristic2(m: &CostMatrix, t0: &Tour, width: Option<usize>) -> Result<Tour> {
    let n = m.n();
    if t0.len() != n {
        return Err(Error::SizeMismatch { left: n, right: t0.len() });
    }
    if width == Some(0) {
        return Err(Error::Invariant("beam width must be at least 1".into()));
    }
    let width = width.unwrap_or(usize::MAX);
    let bound = Aav::new(t0.value(m), n);
    let p = pivot_length(m, t0);
    let mut pool: Vec<(PathRecord, bool)> = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && bound.exceeds(m.cost(a, b), 1) {
                pool.push((PathRecord::arc(m, a, b), false));
            }
        }
    }
    let mut reached = false;
    let mut best: Option<Tour> = None;
    let select = |mut cands: Vec<(PathRecord, bool)>, reached: bool| {
        cands.sort_by(|x, y| {
            let lx = reached && x.0.arcs() >= p;
            let ly = reached && y.0.arcs() >= p;
            ly.cmp(&lx).then_with(|| path_order(&x.0, &y.0))
        });
        cands.dedup_by(|x, y| x.0.nodes == y.0.nodes);
        cands.truncate(width);
        cands
    };
    pool = select(pool, false);
    while pool.iter().any(|(_, done)| !done) {
        let mut next = Vec::new();
        for (q, done) in pool {
            if !done {
                for w in 0..n {
                    if let Some(c) = extend(&q, w, m, bound) {
                        if c.nodes.len() == n {
                            let total = closed_value(m, &c);
                            if bound.exceeds(total, n) {
                                keep_better(m, &mut best, Tour::new(c.nodes.clone())?);
                            }
                        }
                        reached |= c.arcs() >= p;
                        next.push((c, false));
                    }
                }
            }
            next.push((q, true));
        }
        pool = select(next, reached);
    }
    Ok(match best {
        Some(t) if t.value(m) < t0.value(m) => t,
        _ => t0.clone(),
    })
}
