use std::cmp::Ordering;
use std::collections::HashSet;

use serde::Serialize;

use crate::aav::Aav;
use crate::cost::{Cost, CostMatrix};
use crate::error::{Error, Result};
use crate::tour::Tour;

/// A simple path with its value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PathRecord {
    pub nodes: Vec<usize>,
    pub value: Cost,
}

impl PathRecord {
    pub fn new(m: &CostMatrix, nodes: Vec<usize>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Invariant("a path needs at least one arc".into()));
        }
        let mut seen = vec![false; m.n()];
        for &v in &nodes {
            if v >= m.n() {
                return Err(Error::VertexOutOfRange(v + 1));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::RepeatedVertex(v + 1));
            }
        }
        let value = nodes.windows(2).map(|w| m.cost(w[0], w[1])).sum();
        Ok(PathRecord { nodes, value })
    }

    pub fn arc(m: &CostMatrix, a: usize, b: usize) -> Self {
        PathRecord { nodes: vec![a, b], value: m.cost(a, b) }
    }

    pub fn arcs(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn aav(&self) -> Aav {
        Aav::new(self.value, self.arcs())
    }

    pub fn start(&self) -> usize {
        self.nodes[0]
    }

    pub fn end(&self) -> usize {
        *self.nodes.last().expect("nonempty path")
    }

    pub fn contains(&self, v: usize) -> bool {
        self.nodes.contains(&v)
    }
}

/// Replacement order for records with the same endpoints: smaller aav, then
/// more arcs, then the smaller node sequence.
fn replacement_order(a: &PathRecord, b: &PathRecord) -> Ordering {
    a.aav().cmp(&b.aav()).then(b.arcs().cmp(&a.arcs())).then_with(|| a.nodes.cmp(&b.nodes))
}

pub fn can_replace(existing: &PathRecord, candidate: &PathRecord) -> Result<bool> {
    if existing.start() != candidate.start() || existing.end() != candidate.end() {
        return Err(Error::EndpointMismatch);
    }
    Ok(replacement_order(candidate, existing) == Ordering::Less)
}

/// `p` followed by the arc to `next`, when that stays simple and below `bound`.
pub fn extend(p: &PathRecord, next: usize, m: &CostMatrix, bound: Aav) -> Option<PathRecord> {
    if p.contains(next) {
        return None;
    }
    let value = p.value + m.cost(p.end(), next);
    if !bound.exceeds(value, p.arcs() + 1) {
        return None;
    }
    let mut nodes = p.nodes.clone();
    nodes.push(next);
    Some(PathRecord { nodes, value })
}

/// Best record per (start, end) plus every record displaced or turned away.
#[derive(Debug, Clone)]
pub struct PathStore {
    n: usize,
    bound: Aav,
    active: Vec<Option<PathRecord>>,
    archive: Vec<PathRecord>,
    archived: HashSet<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inserted {
    Active,
    Archived,
    /// Not below the bound, or already known.
    Rejected,
}

impl PathStore {
    pub fn new(n: usize, bound: Aav) -> Self {
        PathStore { n, bound, active: vec![None; n * n], archive: Vec::new(), archived: HashSet::new() }
    }

    /// Store seeded with every single arc below the bound.
    pub fn from_arcs(m: &CostMatrix, bound: Aav) -> Self {
        let mut s = Self::new(m.n(), bound);
        for a in 0..m.n() {
            for b in 0..m.n() {
                if a != b {
                    s.insert(PathRecord::arc(m, a, b));
                }
            }
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bound(&self) -> Aav {
        self.bound
    }

    pub fn active(&self, start: usize, end: usize) -> Option<&PathRecord> {
        self.active[start * self.n + end].as_ref()
    }

    pub fn active_records(&self) -> impl Iterator<Item = &PathRecord> {
        self.active.iter().flatten()
    }

    pub fn archive(&self) -> &[PathRecord] {
        &self.archive
    }

    pub fn records(&self) -> impl Iterator<Item = &PathRecord> {
        self.active_records().chain(self.archive.iter())
    }

    fn push_archive(&mut self, r: PathRecord) -> bool {
        if self.archived.insert(r.nodes.clone()) {
            self.archive.push(r);
            true
        } else {
            false
        }
    }

    pub fn insert(&mut self, r: PathRecord) -> Inserted {
        if !self.bound.exceeds(r.value, r.arcs()) {
            return Inserted::Rejected;
        }
        let slot = r.start() * self.n + r.end();
        match &self.active[slot] {
            None => {
                self.active[slot] = Some(r);
                Inserted::Active
            }
            Some(cur) if cur.nodes == r.nodes => Inserted::Rejected,
            Some(cur) => {
                if replacement_order(&r, cur) == Ordering::Less {
                    let old = self.active[slot].replace(r).expect("occupied");
                    self.push_archive(old);
                    Inserted::Active
                } else if self.push_archive(r) {
                    Inserted::Archived
                } else {
                    Inserted::Rejected
                }
            }
        }
    }

    /// Tightens the bound and drops every record not below it.
    pub fn tighten(&mut self, bound: Aav) {
        if bound >= self.bound {
            return;
        }
        self.bound = bound;
        for slot in self.active.iter_mut() {
            if slot.as_ref().is_some_and(|r| !bound.exceeds(r.value, r.arcs())) {
                *slot = None;
            }
        }
        self.archive.retain(|r| bound.exceeds(r.value, r.arcs()));
        self.archived = self.archive.iter().map(|r| r.nodes.clone()).collect();
    }
}

/// Orders candidate tours: value, then the sequence read from vertex 1.
pub(crate) fn tour_key(m: &CostMatrix, t: &Tour) -> (Cost, Vec<usize>) {
    (t.value(m), t.rotated_to(0))
}

pub(crate) fn keep_better(m: &CostMatrix, best: &mut Option<Tour>, cand: Tour) {
    if best.as_ref().is_none_or(|b| tour_key(m, &cand) < tour_key(m, b)) {
        *best = Some(cand);
    }
}

#[derive(Debug, Clone, Default)]
pub struct PassOutcome {
    pub changed: bool,
    pub tour: Option<Tour>,
}

/// One pivot sweep: joins `active(i, j)` with `active(j, k)` and with the arc
/// `(j, k)`, and closes any Hamiltonian path whose cycle stays below the bound.
pub fn fwk_pass(m: &CostMatrix, store: &mut PathStore) -> PassOutcome {
    let n = m.n();
    let mut out = PassOutcome::default();
    for j in 0..n {
        for i in 0..n {
            let Some(left) = store.active(i, j).cloned() else { continue };
            for k in 0..n {
                if k == j {
                    continue;
                }
                let mut cands = Vec::new();
                if let Some(right) = store.active(j, k) {
                    if let Some(p) = join(&left, right) {
                        cands.push(p);
                    }
                }
                if k != i && !left.contains(k) {
                    cands.push(PathRecord {
                        nodes: left.nodes.iter().copied().chain([k]).collect(),
                        value: left.value + m.cost(j, k),
                    });
                }
                for p in cands {
                    if p.nodes.len() == n {
                        let total = p.value + m.cost(p.end(), p.start());
                        if store.bound().exceeds(total, n) {
                            if let Ok(t) = Tour::new(p.nodes.clone()) {
                                keep_better(m, &mut out.tour, t);
                            }
                        }
                    }
                    if store.insert(p) != Inserted::Rejected {
                        out.changed = true;
                    }
                }
            }
        }
    }
    out
}

/// `left` then `right` when they meet only at the shared endpoint.
fn join(left: &PathRecord, right: &PathRecord) -> Option<PathRecord> {
    if right.nodes[1..].iter().any(|v| left.contains(*v)) {
        return None;
    }
    let mut nodes = left.nodes.clone();
    nodes.extend_from_slice(&right.nodes[1..]);
    Some(PathRecord { nodes, value: left.value + right.value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn v(ids: &[usize]) -> Vec<usize> {
        ids.iter().map(|x| x - 1).collect()
    }

    fn rec(nodes: &[usize], value: Cost) -> PathRecord {
        PathRecord { nodes: nodes.to_vec(), value }
    }

    #[test]
    fn replacement_rule() {
        assert!(can_replace(&rec(&[0, 1, 2], 10), &rec(&[0, 3, 1, 2], 12)).unwrap());
        assert!(can_replace(&rec(&[0, 1, 2], 8), &rec(&[0, 3, 1, 2], 8)).unwrap());
        assert!(!can_replace(&rec(&[0, 3, 1, 2], 8), &rec(&[0, 1, 2], 8)).unwrap());
        // Same aav and arcs: the smaller node sequence stays.
        assert!(!can_replace(&rec(&[0, 1, 2], 8), &rec(&[0, 3, 2], 8)).unwrap());
        assert!(can_replace(&rec(&[0, 3, 2], 8), &rec(&[0, 1, 2], 8)).unwrap());
        assert_eq!(can_replace(&rec(&[0, 1], 1), &rec(&[0, 2], 1)), Err(Error::EndpointMismatch));
    }

    #[test]
    fn extension_on_example_eight() {
        let m = fixtures::ex8();
        let bound = Aav::new(102, 7);
        let p = PathRecord::new(&m, v(&[6, 5])).unwrap();
        assert_eq!(p.value, 6);
        let q = extend(&p, 2, &m, bound).unwrap();
        assert_eq!(q.nodes, v(&[6, 5, 3]));
        assert_eq!((q.value, q.arcs()), (7, 2));
        assert!(extend(&q, 5, &m, bound).is_none());
        // 6 -> 5 -> 3 -> 1 is 17 over 3 arcs; a bound of exactly 17/3 rejects it.
        assert!(extend(&q, 0, &m, Aav::new(17, 3)).is_none());
        assert!(extend(&q, 0, &m, Aav::new(18, 3)).is_some());
    }

    #[test]
    fn example_eight_store_entries() {
        let m = fixtures::ex8();
        let mut store = PathStore::from_arcs(&m, Aav::new(102, 7));
        for _ in 0..2 {
            fwk_pass(&m, &mut store);
        }
        let has = |nodes: &[usize], value: Cost| store.records().any(|r| r.nodes == v(nodes) && r.value == value);
        assert!(has(&[6, 5, 3], 7));
        assert!(has(&[2, 6, 5, 3], 14));
        for r in store.records() {
            assert!(store.bound().exceeds(r.value, r.arcs()));
        }
    }

    #[test]
    fn low_bound_keeps_store_empty() {
        let m = fixtures::ex8();
        let cheapest = (0..7).flat_map(|a| (0..7).filter(move |&b| b != a).map(move |b| (a, b)))
            .map(|(a, b)| m.cost(a, b))
            .min()
            .unwrap();
        let mut store = PathStore::from_arcs(&m, Aav::new(cheapest, 1));
        let out = fwk_pass(&m, &mut store);
        assert!(!out.changed && out.tour.is_none());
        assert_eq!(store.records().count(), 0);
    }

    #[test]
    fn tighten_prunes_records() {
        let m = CostMatrix::random(7, false, 40, 2);
        let mut store = PathStore::from_arcs(&m, Aav::new(40, 1));
        fwk_pass(&m, &mut store);
        let before = store.records().count();
        store.tighten(Aav::new(15, 1));
        assert!(store.records().count() <= before);
        for r in store.records() {
            assert!(Aav::new(15, 1).exceeds(r.value, r.arcs()));
        }
    }

    proptest! {
        #[test]
        fn insertion_order_does_not_matter(seed in any::<u64>(), shuffle_seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let m = CostMatrix::random(6, false, 9, seed);
            let bound = Aav::new(9, 1);
            let mut paths = Vec::new();
            let mut stack: Vec<Vec<usize>> = (0..6).map(|s| vec![s]).collect();
            while let Some(p) = stack.pop() {
                if p.len() >= 2 {
                    paths.push(PathRecord::new(&m, p.clone()).unwrap());
                }
                if p.len() < 4 {
                    for w in 0..6 {
                        if !p.contains(&w) {
                            let mut q = p.clone();
                            q.push(w);
                            stack.push(q);
                        }
                    }
                }
            }
            let mut a = PathStore::new(6, bound);
            for p in &paths {
                a.insert(p.clone());
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed);
            paths.shuffle(&mut rng);
            let mut b = PathStore::new(6, bound);
            for p in &paths {
                b.insert(p.clone());
            }
            let x: Vec<_> = a.active_records().cloned().collect();
            let y: Vec<_> = b.active_records().cloned().collect();
            prop_assert_eq!(x, y);
        }

        #[test]
        fn appending_a_dear_cycle_never_replaces(
            costs in proptest::collection::vec(0i64..50, 1..6),
            extra in proptest::collection::vec(0i64..50, 1..5),
            at in 0usize..6,
        ) {
            // A path below the bound, and a detour whose arcs all cost at least the bound.
            let bound = costs.iter().copied().max().unwrap() + 1;
            let sub = PathRecord { nodes: (0..=costs.len()).collect(), value: costs.iter().sum() };
            prop_assert!(Aav::new(bound, 1).exceeds(sub.value, sub.arcs()));
            let at = at % sub.nodes.len();
            let detour: Vec<usize> = (0..extra.len() - 1).map(|i| 100 + i).collect();
            // Leave at `at`, run the detour, come back to the next vertex.
            let cand = PathRecord {
                nodes: sub.nodes[..=at]
                    .iter()
                    .chain(&detour)
                    .chain(&sub.nodes[at + 1..])
                    .copied()
                    .collect(),
                value: sub.value + extra.iter().map(|e| bound + e).sum::<Cost>(),
            };
            prop_assume!(cand.arcs() == sub.arcs() + extra.len() - 1 && cand.end() == sub.end());
            prop_assert!(cand.aav() > sub.aav());
            prop_assert!(!can_replace(&sub, &cand).unwrap());
        }
    }
}
