use serde::Serialize;

use super::{CycleCatalog, Matching};
use crate::cost::{Cost, CostMatrix};
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::tour::Tour;
use crate::transform::CycleKind;

/// How a tour splits into cycles relative to a matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    /// Acceptable cycles.
    pub a: usize,
    /// Two-circuit cycles, linked or unlinked.
    pub t: usize,
    /// Points moved.
    pub p: usize,
    /// Cycles of any other pattern.
    pub multi: usize,
    /// Cycles joined at matching pairs form a tree.
    pub tree: bool,
}

impl Decomposition {
    /// `p = ceil(n / 2) + 3t + a - 1`, for decompositions made only of
    /// acceptable and two-circuit cycles.
    pub fn fits_formula(&self, n: usize) -> bool {
        self.multi == 0 && self.p + 1 == n.div_ceil(2) + 3 * self.t + self.a
    }
}

fn shape_counts(sigma: &Matching, cycles: &[Vec<usize>]) -> Decomposition {
    let n = sigma.n();
    let mut d = Decomposition { a: 0, t: 0, p: 0, multi: 0, tree: false };
    let mut owner = vec![usize::MAX; n];
    for (i, c) in cycles.iter().enumerate() {
        d.p += c.len();
        match sigma.classify(c).kind {
            CycleKind::Acceptable => d.a += 1,
            CycleKind::Unlinked2 | CycleKind::Linked2 => d.t += 1,
            _ => d.multi += 1,
        }
        for &v in c {
            owner[v] = i;
        }
    }
    // Link graph: one edge per pair split across two cycles.
    let k = cycles.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        parent[x] = r;
        r
    }
    let mut acyclic = true;
    let mut edges = 0;
    for (a, b) in sigma.pairs() {
        let (oa, ob) = (owner[a], owner[b]);
        if oa == usize::MAX || ob == usize::MAX || oa == ob {
            continue;
        }
        edges += 1;
        let (ra, rb) = (find(&mut parent, oa), find(&mut parent, ob));
        if ra == rb {
            acyclic = false;
        } else {
            parent[ra] = rb;
        }
    }
    d.tree = k > 0 && acyclic && edges + 1 == k;
    d
}

/// Decomposes `tour` against `sigma` (the cycles of `sigma ∘ tour`).
pub fn decompose(sigma: &Matching, tour: &Tour) -> Result<Decomposition> {
    let s = sigma.relative(tour)?;
    Ok(shape_counts(sigma, s.cycles()))
}

#[derive(Debug, Clone)]
pub struct LinkConfig {
    /// Search nodes before giving up; `None` searches to completion.
    pub node_budget: Option<u64>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig { node_budget: Some(2_000_000) }
    }
}

#[derive(Debug, Clone)]
pub struct LinkResult {
    pub best: Option<(Tour, Decomposition)>,
    /// False when the node budget ran out.
    pub complete: bool,
    pub nodes: u64,
}

/// Searches sets of catalog cycles that are pairwise disjoint, joined into a
/// tree at matching pairs, satisfy the point-count formula, and turn `sigma`
/// into a single tour with total cycle value below the catalog bound. Returns
/// the cheapest such tour.
///
/// Cycles are taken in ascending value order, so every running sum of a
/// qualifying set stays at or below `max(0, bound - 1)`.
pub fn link_search(m: &CostMatrix, sigma: &Matching, catalog: &CycleCatalog, cfg: &LinkConfig) -> Result<LinkResult> {
    let n = sigma.n();
    let entries: Vec<_> = catalog.entries.iter().filter(|e| e.cycle.kind != CycleKind::Multi).collect();
    let mut st = LinkState {
        n,
        sigma,
        bound: catalog.bound,
        cap: (catalog.bound - 1).max(0),
        entries: &entries,
        owner: vec![usize::MAX; n],
        comp: Vec::new(),
        chosen: Vec::new(),
        best: None,
        nodes: 0,
        budget: cfg.node_budget,
        exhausted: false,
    };
    let slack = n.div_ceil(2) as i64 - 1;
    st.search(0, 0, slack);
    let base = sigma.derangement_value(m);
    let best = match st.best {
        None => None,
        Some((value, cycles)) => {
            let s = Permutation::from_cycles(n, &cycles)?;
            let tour = sigma.tour_from(&s).ok_or_else(|| Error::Invariant("linked set is not a tour".into()))?;
            if tour.value(m) != base + value {
                return Err(Error::Invariant("linked tour value disagrees with its cycles".into()));
            }
            let d = shape_counts(sigma, &cycles);
            if !d.fits_formula(n) || !d.tree {
                return Err(Error::Invariant(format!("linked tour breaks the point formula: {d:?}")));
            }
            Some((tour, d))
        }
    };
    Ok(LinkResult { best, complete: !st.exhausted, nodes: st.nodes })
}

struct LinkState<'a> {
    n: usize,
    sigma: &'a Matching,
    bound: Cost,
    cap: Cost,
    entries: &'a [&'a super::CatalogEntry],
    owner: Vec<usize>,
    comp: Vec<usize>,
    chosen: Vec<usize>,
    best: Option<(Cost, Vec<Vec<usize>>)>,
    nodes: u64,
    budget: Option<u64>,
    exhausted: bool,
}

impl LinkState<'_> {
    fn search(&mut self, from: usize, sum: Cost, slack: i64) {
        for i in from..self.entries.len() {
            if self.exhausted {
                return;
            }
            let e = self.entries[i];
            let v = e.cycle.value;
            let next = sum + v;
            if next > self.cap || (v >= 0 && next >= self.bound) {
                if v >= 0 {
                    break;
                }
                continue;
            }
            self.nodes += 1;
            if self.budget.is_some_and(|b| self.nodes > b) {
                self.exhausted = true;
                return;
            }
            let nodes = &e.cycle.nodes;
            if nodes.iter().any(|&x| self.owner[x] != usize::MAX) {
                continue;
            }
            let gain = if e.cycle.kind == CycleKind::Acceptable { 1 } else { 3 };
            let slack_next = slack - nodes.len() as i64 + gain;
            if slack_next < 0 {
                continue;
            }
            // Components this cycle would join; a repeat closes a loop.
            let mut joined: Vec<usize> = Vec::new();
            let mut loop_found = false;
            for &x in &e.shape.linking_points {
                let o = self.owner[self.sigma.partner(x)];
                if o != usize::MAX {
                    let c = self.comp[o];
                    if joined.contains(&c) {
                        loop_found = true;
                        break;
                    }
                    joined.push(c);
                }
            }
            if loop_found {
                continue;
            }
            let idx = self.chosen.len();
            let saved = self.comp.clone();
            for &x in nodes {
                self.owner[x] = idx;
            }
            self.chosen.push(i);
            self.comp.push(idx);
            for c in self.comp.iter_mut() {
                if joined.contains(c) {
                    *c = idx;
                }
            }
            if slack_next == 0 && next < self.bound && self.comp.iter().all(|&c| c == idx) {
                self.consider(next);
            }
            self.search(i + 1, next, slack_next);
            self.chosen.pop();
            self.comp = saved;
            for &x in nodes {
                self.owner[x] = usize::MAX;
            }
        }
    }

    fn consider(&mut self, value: Cost) {
        let cycles: Vec<Vec<usize>> = self.chosen.iter().map(|&i| self.entries[i].cycle.nodes.clone()).collect();
        let Ok(s) = Permutation::from_cycles(self.n, &cycles) else { return };
        let Some(tour) = self.sigma.tour_from(&s) else { return };
        let better = match &self.best {
            None => true,
            Some((bv, bc)) => {
                value < *bv || (value == *bv && {
                    let cur = Permutation::from_cycles(self.n, bc).ok().and_then(|p| self.sigma.tour_from(&p));
                    cur.is_some_and(|c| tour.order() < c.order())
                })
            }
        };
        if better {
            self.best = Some((value, cycles));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matching::{alternating_matchings, enumerate_cycles, half_cycle_tour, EnumerateConfig, ALL_KINDS};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_tours(n: usize) -> Vec<Tour> {
        let mut out = Vec::new();
        let mut rest: Vec<usize> = (1..n).collect();
        fn rec(k: usize, rest: &mut Vec<usize>, out: &mut Vec<Tour>) {
            if k == rest.len() {
                let mut o = vec![0];
                o.extend_from_slice(rest);
                out.push(Tour::new(o).unwrap());
                return;
            }
            for i in k..rest.len() {
                rest.swap(k, i);
                rec(k + 1, rest, out);
                rest.swap(k, i);
            }
        }
        rec(0, &mut rest, &mut out);
        out
    }

    #[test]
    fn example_five_link_improves_tour() {
        let m = fixtures::ex5();
        let t68 = Tour::from_one_based(&[11, 17, 12, 10, 6, 18, 13, 3, 1, 7, 4, 8, 16, 14, 19, 15, 20, 9, 2, 5]).unwrap();
        assert_eq!(t68.value(&m), 68);
        let t57 = Tour::from_one_based(&[18, 6, 10, 12, 17, 11, 5, 2, 9, 15, 19, 14, 20, 8, 16, 4, 7, 1, 3, 13]).unwrap();
        assert_eq!(t57.value(&m), 57);
        let (sigma, other) = alternating_matchings(&m, &t68).unwrap();
        let mut improved = None;
        for sg in [sigma, other] {
            let bound = t68.value(&m) - sg.derangement_value(&m);
            let cat = enumerate_cycles(&m, &sg, &EnumerateConfig { bound, max_len: 12, kinds: ALL_KINDS.to_vec() })
                .unwrap();
            if let Some((t, d)) = link_search(&m, &sg, &cat, &LinkConfig::default()).unwrap().best {
                assert!(d.fits_formula(20) && d.tree);
                improved = Some(t);
                break;
            }
        }
        let t = improved.expect("an improving tour");
        assert!(t.value(&m) < 68);
    }

    #[test]
    fn single_half_cycle_links_to_itself() {
        let m = CostMatrix::random(8, true, 50, 9);
        let sigma = Matching::from_pairs(8, &[(0, 1), (2, 3), (4, 5), (6, 7)]).unwrap();
        let tm = sigma.transform(&m).unwrap();
        let c = vec![0, 2, 4, 6];
        let value = crate::transform::cycle_value(&tm, &c).unwrap();
        let entry = crate::matching::CatalogEntry {
            cycle: crate::transform::WeightedCycle { nodes: c.clone(), value, kind: CycleKind::Acceptable },
            shape: sigma.classify(&c),
        };
        let cat = CycleCatalog { bound: value + 1, entries: vec![entry] };
        let r = link_search(&m, &sigma, &cat, &LinkConfig::default()).unwrap();
        let (t, d) = r.best.unwrap();
        assert_eq!(t, half_cycle_tour(&sigma, &c).unwrap());
        assert_eq!((d.a, d.t, d.p), (1, 0, 4));
    }

    #[test]
    fn point_formula_holds_for_tree_decompositions() {
        for n in [5usize, 6, 7, 8] {
            let m = CostMatrix::random(n, true, 10, n as u64);
            let base = Tour::identity(n);
            let (sigma, _) = alternating_matchings(&m, &base).unwrap();
            for t in all_tours(n) {
                let d = decompose(&sigma, &t).unwrap();
                if d.tree && d.multi == 0 {
                    assert!(d.fits_formula(n), "n {n} tour {t}");
                }
            }
        }
    }

    #[test]
    fn link_search_matches_subset_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for case in 0..30 {
            let n = rng.gen_range(5..=8);
            let m = CostMatrix::random(n, true, 30, rng.gen());
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let t = Tour::new(order).unwrap();
            let (sigma, _) = alternating_matchings(&m, &t).unwrap();
            let bound = t.value(&m) - sigma.derangement_value(&m);
            let cfg = EnumerateConfig { bound, max_len: n, kinds: ALL_KINDS.to_vec() };
            let cat = enumerate_cycles(&m, &sigma, &cfg).unwrap();
            let got = link_search(&m, &sigma, &cat, &LinkConfig { node_budget: None }).unwrap();
            assert!(got.complete);

            // Brute force: every tour whose relative cycles are all in the catalog,
            // form a tree, and fit the formula.
            let mut want: Option<Cost> = None;
            for cand in all_tours(n) {
                let s = sigma.relative(&cand).unwrap();
                if s.cycles().is_empty() {
                    continue;
                }
                let d = shape_counts(&sigma, s.cycles());
                if !(d.tree && d.fits_formula(n)) {
                    continue;
                }
                let listed = s.cycles().iter().all(|c| {
                    cat.find(c).is_some_and(|e| e.cycle.kind != CycleKind::Multi)
                });
                let v = cand.value(&m);
                if listed && v < t.value(&m) {
                    want = Some(want.map_or(v, |w: Cost| w.min(v)));
                }
            }
            assert_eq!(got.best.map(|(t, _)| t.value(&m)), want, "case {case}");
        }
    }
}
