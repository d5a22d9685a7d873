//! Descent from an initial derangement to a minimal one by cancelling
//! negative cycles of the transform.

use serde::Serialize;

use crate::cost::{Cost, CostMatrix, SortedNeighbors};
use crate::error::{Error, Result};
use crate::perm::{compose, Permutation};
use crate::transform::{build_transform, canonical_rotation, CycleKind, TransformMatrix, WeightedCycle};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescentConfig {
    /// Reject transform arcs whose new derangement arc reverses an arc of D.
    pub forbid_symmetric_arcs: bool,
    /// Reject cycles whose application leaves a 2-cycle touching them.
    pub forbid_two_cycles: bool,
    pub seed_count: usize,
    pub trial_blocks: usize,
    pub max_iterations: usize,
    /// Node cap for the depth-first fallback used when the two-cycle rule
    /// rejects everything the shortest-path scan finds.
    pub fallback_budget: u64,
}

impl DescentConfig {
    pub fn new(n: usize) -> Self {
        let n = n.max(2);
        DescentConfig {
            forbid_symmetric_arcs: false,
            forbid_two_cycles: false,
            seed_count: (n as f64).sqrt().ceil() as usize,
            trial_blocks: (n as f64).log2().ceil() as usize + 1,
            max_iterations: 100_000,
            fallback_budget: 2_000_000,
        }
    }

    /// No symmetric arcs and no new 2-cycles.
    pub fn symmetric(n: usize) -> Self {
        DescentConfig { forbid_symmetric_arcs: true, forbid_two_cycles: true, ..Self::new(n) }
    }

    fn validate(&self) -> Result<()> {
        if self.seed_count == 0 || self.trial_blocks == 0 {
            return Err(Error::Invariant("seed_count and trial_blocks must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DescentStep {
    #[serde(serialize_with = "crate::ids::one_based_seq")]
    pub cycle: Vec<usize>,
    pub value: Cost,
    /// Derangement value after applying the cycle.
    pub result_value: Cost,
    /// `trial` or `scan`.
    pub source: &'static str,
}

#[derive(Debug, Clone)]
pub struct DescentTrace {
    pub steps: Vec<DescentStep>,
    pub derangement: Permutation,
    pub value: Cost,
}

/// Derangement obtained by applying `c` in the transform of `d`.
pub fn apply_cycle(d: &Permutation, c: &[usize]) -> Result<Permutation> {
    let cp = Permutation::from_cycles(d.len(), &[c.to_vec()])?;
    compose(d, &cp)
}

struct Rules<'a> {
    tm: TransformMatrix<'a>,
    d: &'a Permutation,
    cfg: &'a DescentConfig,
}

impl Rules<'_> {
    #[inline]
    fn arc(&self, a: usize, b: usize) -> Option<Cost> {
        let e = self.tm.entry(a, b)?;
        if self.cfg.forbid_symmetric_arcs && self.d.image(self.d.image(b)) == a {
            return None;
        }
        Some(e)
    }

    fn admissible(&self, nodes: &[usize]) -> bool {
        if !self.cfg.forbid_two_cycles {
            return true;
        }
        let k = nodes.len();
        let mut next = self.d.images().to_vec();
        for i in 0..k {
            next[nodes[i]] = self.d.image(nodes[(i + 1) % k]);
        }
        nodes.iter().all(|&a| next[next[a]] != a)
    }

    fn value(&self, nodes: &[usize]) -> Option<Cost> {
        let k = nodes.len();
        (0..k).map(|i| self.arc(nodes[i], nodes[(i + 1) % k])).sum()
    }
}

fn better(a: &WeightedCycle, b: &WeightedCycle) -> bool {
    (a.value, &a.nodes) < (b.value, &b.nodes)
}

fn keep_best(best: &mut Option<WeightedCycle>, cand: WeightedCycle) {
    if best.as_ref().is_none_or(|b| better(&cand, b)) {
        *best = Some(cand);
    }
}

/// Greedy walk through negative transform entries, opened by the arc that
/// gives `start` its `rank`-th nearest neighbor. Returns the most negative
/// cycle that could be closed on the way.
pub fn greedy_trial(
    m: &CostMatrix,
    min: &SortedNeighbors,
    d: &Permutation,
    start: usize,
    rank: usize,
    cfg: &DescentConfig,
) -> Option<WeightedCycle> {
    let tm = build_transform(m, d).ok()?;
    let rules = Rules { tm, d, cfg };
    let target = min.nth(start, rank)?;
    let inv = d.inverse();
    let first = inv.image(target);
    let mut sum = rules.arc(start, first)?;
    if sum >= 0 {
        return None;
    }
    let block = d.cycle_index();
    let n = m.n();
    let mut on_path = vec![false; n];
    let mut block_seen = vec![false; d.cycles().len()];
    let mut path = vec![start, first];
    on_path[start] = true;
    on_path[first] = true;
    block_seen[block[start].expect("derangement")] = true;
    let mut detours = usize::from(std::mem::replace(&mut block_seen[block[first].expect("derangement")], true));
    let mut best: Option<WeightedCycle> = None;
    loop {
        let cur = *path.last().expect("nonempty");
        if let Some(close) = rules.arc(cur, start) {
            if sum + close < 0 && rules.admissible(&path) {
                let nodes = canonical_rotation(&path);
                keep_best(&mut best, WeightedCycle { nodes, value: sum + close, kind: CycleKind::Plain });
            }
        }
        let step = (0..n)
            .filter(|&w| !on_path[w])
            .filter_map(|w| rules.arc(cur, w).map(|e| (e, w)))
            .filter(|&(e, w)| {
                sum + e < 0 && (detours < cfg.trial_blocks || !block_seen[block[w].expect("derangement")])
            })
            .min();
        let Some((e, w)) = step else { break };
        let b = block[w].expect("derangement");
        detours += usize::from(block_seen[b]);
        block_seen[b] = true;
        on_path[w] = true;
        path.push(w);
        sum += e;
    }
    best
}

/// Most negative admissible cycle found by a shortest-path scan of `tm`, or
/// `None` when the transform has none.
pub fn find_negative_cycle(tm: &TransformMatrix<'_>, cfg: &DescentConfig) -> Option<WeightedCycle> {
    let rules = Rules { tm: *tm, d: tm.perm(), cfg };
    let n = tm.n();
    let full: Vec<Vec<(usize, Cost)>> =
        (0..n).map(|a| (0..n).filter_map(|b| rules.arc(a, b).map(|e| (b, e))).collect()).collect();
    let seeds: Vec<Vec<(usize, Cost)>> = full
        .iter()
        .map(|row| {
            let mut neg: Vec<(usize, Cost)> = row.iter().copied().filter(|&(_, e)| e < 0).collect();
            neg.sort_by_key(|&(b, e)| (e, b));
            neg.truncate(cfg.seed_count);
            neg
        })
        .collect();
    let mut rejected = false;
    for graph in [&seeds, &full] {
        let (found, any_rejected) = bellman_ford(&rules, graph);
        rejected |= any_rejected;
        if found.is_some() {
            return found;
        }
    }
    if rejected {
        return dfs_negative_cycle(&rules, &full, cfg.fallback_budget);
    }
    None
}

/// Returns the best admissible cycle of the first predecessor graph that
/// contains one, and whether any inadmissible cycle was seen.
fn bellman_ford(rules: &Rules<'_>, adj: &[Vec<(usize, Cost)>]) -> (Option<WeightedCycle>, bool) {
    let n = adj.len();
    let mut dist = vec![0 as Cost; n];
    let mut pred = vec![usize::MAX; n];
    let mut rejected = false;
    // Once a negative cycle exists the predecessor graph holds one within n
    // rounds; the extra rounds only absorb rejected cycles.
    for _ in 0..(2 * n + 2) {
        let mut changed = false;
        for a in 0..n {
            for &(b, e) in &adj[a] {
                if dist[a] + e < dist[b] {
                    dist[b] = dist[a] + e;
                    pred[b] = a;
                    changed = true;
                }
            }
        }
        if !changed {
            return (None, rejected);
        }
        let mut best = None;
        for c in pred_cycles(&pred) {
            match rules.value(&c) {
                Some(v) if v < 0 => {
                    if rules.admissible(&c) {
                        keep_best(&mut best, WeightedCycle { nodes: c, value: v, kind: CycleKind::Plain });
                    } else {
                        rejected = true;
                    }
                }
                _ => {}
            }
        }
        if best.is_some() {
            return (best, rejected);
        }
    }
    (None, true)
}

/// Cycles of the predecessor graph, in arc order and canonical rotation.
fn pred_cycles(pred: &[usize]) -> Vec<Vec<usize>> {
    let n = pred.len();
    let mut mark = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        let mut x = s;
        while x != usize::MAX && mark[x] == usize::MAX {
            mark[x] = s;
            x = pred[x];
        }
        if x != usize::MAX && mark[x] == s {
            let mut back = vec![x];
            let mut y = pred[x];
            while y != x {
                back.push(y);
                y = pred[y];
            }
            back.reverse();
            out.push(canonical_rotation(&back));
        }
    }
    out
}

/// Exhaustive search over rotations whose running sums stay negative, which
/// every negative cycle has.
fn dfs_negative_cycle(rules: &Rules<'_>, adj: &[Vec<(usize, Cost)>], budget: u64) -> Option<WeightedCycle> {
    struct St<'r, 'a> {
        rules: &'r Rules<'a>,
        adj: &'r [Vec<(usize, Cost)>],
        path: Vec<usize>,
        on_path: Vec<bool>,
        best: Option<WeightedCycle>,
        nodes: u64,
        budget: u64,
    }
    impl St<'_, '_> {
        fn grow(&mut self, sum: Cost) {
            self.nodes += 1;
            if self.nodes > self.budget {
                return;
            }
            let last = *self.path.last().expect("nonempty");
            let root = self.path[0];
            for i in 0..self.adj[last].len() {
                let (w, e) = self.adj[last][i];
                if w == root && self.path.len() >= 2 && sum + e < 0 && self.rules.admissible(&self.path) {
                    let nodes = canonical_rotation(&self.path);
                    keep_best(&mut self.best, WeightedCycle { nodes, value: sum + e, kind: CycleKind::Plain });
                }
                if self.on_path[w] || sum + e >= 0 {
                    continue;
                }
                self.on_path[w] = true;
                self.path.push(w);
                self.grow(sum + e);
                self.path.pop();
                self.on_path[w] = false;
            }
        }
    }
    let n = adj.len();
    let mut st = St { rules, adj, path: Vec::new(), on_path: vec![false; n], best: None, nodes: 0, budget };
    for root in 0..n {
        st.path = vec![root];
        st.on_path[root] = true;
        st.grow(0);
        st.on_path[root] = false;
    }
    st.best
}

/// Cancels negative cycles, cheap greedy trials first, until the scan finds
/// none.
pub fn descend(m: &CostMatrix, d0: &Permutation, cfg: &DescentConfig) -> Result<DescentTrace> {
    cfg.validate()?;
    let n = m.n();
    if d0.len() != n {
        return Err(Error::SizeMismatch { left: n, right: d0.len() });
    }
    if let Some(f) = d0.fixed_points().next() {
        return Err(Error::FixedPoint(f + 1));
    }
    let min = SortedNeighbors::new(m);
    let mut d = d0.clone();
    let mut value = m.perm_value(d.images());
    let mut steps = Vec::new();
    for _ in 0..cfg.max_iterations {
        let mut best: Option<WeightedCycle> = None;
        for start in 0..n {
            for rank in 1..=cfg.trial_blocks.min(n - 1) {
                if let Some(c) = greedy_trial(m, &min, &d, start, rank, cfg) {
                    keep_best(&mut best, c);
                }
            }
        }
        let source = if best.is_some() { "trial" } else { "scan" };
        if best.is_none() {
            best = find_negative_cycle(&build_transform(m, &d)?, cfg);
        }
        let Some(c) = best else {
            return Ok(DescentTrace { steps, derangement: d, value });
        };
        let next = apply_cycle(&d, &c.nodes)?;
        let next_value = m.perm_value(next.images());
        if next_value != value + c.value || c.value >= 0 {
            return Err(Error::Invariant(format!("cycle {c} changed the value from {value} to {next_value}")));
        }
        d = next;
        value = next_value;
        steps.push(DescentStep { cycle: c.nodes, value: c.value, result_value: value, source });
    }
    Err(Error::IterationLimit(cfg.max_iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle;
    use crate::transform::cycle_value;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(ids: &[usize]) -> Vec<usize> {
        ids.iter().map(|x| x - 1).collect()
    }

    #[test]
    fn example_eight_descends_to_assignment() {
        let m = fixtures::ex8();
        let t = descend(&m, &Permutation::rotation(7), &DescentConfig::new(7)).unwrap();
        assert_eq!(t.value, 102);
        assert_eq!(t.derangement, Permutation::from_cycles_one_based(7, &[&[1, 7, 4, 2, 6, 5, 3]]).unwrap());
        let mut last = m.perm_value(Permutation::rotation(7).images());
        for s in &t.steps {
            assert!(s.result_value < last);
            assert_eq!(s.result_value, last + s.value);
            last = s.result_value;
        }
    }

    #[test]
    fn example_eight_second_derangement_cycle() {
        let m = fixtures::ex8();
        let d1 = Permutation::from_cycles_one_based(7, &[&[1, 7, 4, 5, 3], &[2, 6]]).unwrap();
        let tm = build_transform(&m, &d1).unwrap();
        let c = find_negative_cycle(&tm, &DescentConfig::new(7)).unwrap();
        assert_eq!(c.nodes, v(&[4, 6]));
        assert_eq!(c.value, -44);
    }

    #[test]
    fn example_ten_first_scan() {
        let m = fixtures::ex10();
        let d0 = Permutation::rotation(20);
        let tm = build_transform(&m, &d0).unwrap();
        let reference = v(&[18, 3, 1, 8, 19, 15, 5, 12, 7, 17, 2, 10, 13, 4, 6, 14, 9, 16]);
        // Valued from the fixture matrix.
        assert_eq!(cycle_value(&tm, &reference).unwrap(), -593);
        let c = find_negative_cycle(&tm, &DescentConfig::new(20)).unwrap();
        assert_eq!(cycle_value(&tm, &c.nodes).unwrap(), c.value);
        assert!(c.value < 0);
    }

    #[test]
    fn example_four_trials() {
        let m = fixtures::ex4();
        let d0 = Permutation::rotation(20);
        let tm = build_transform(&m, &d0).unwrap();
        // Reference trial cycles, valued from the fixture matrix.
        assert_eq!(cycle_value(&tm, &v(&[15, 18, 2, 8, 5, 17, 10, 16, 7, 20, 14])).unwrap(), -549);
        assert_eq!(cycle_value(&tm, &v(&[15, 19, 14, 20, 13, 2, 8, 5, 17, 10, 16, 7, 3])).unwrap(), -543);
        let min = SortedNeighbors::new(&m);
        let cfg = DescentConfig::new(20);
        for rank in 1..=2 {
            let c = greedy_trial(&m, &min, &d0, 14, rank, &cfg).expect("negative trial");
            assert!(c.value < 0);
            assert_eq!(cycle_value(&tm, &c.nodes).unwrap(), c.value);
            assert!(c.nodes.contains(&14));
        }
    }

    #[test]
    fn no_trial_on_flat_matrix() {
        let m = CostMatrix::parse("n 4\nINF 1 1 1\n1 INF 1 1\n1 1 INF 1\n1 1 1 INF\n").unwrap();
        let d = Permutation::rotation(4);
        let min = SortedNeighbors::new(&m);
        let cfg = DescentConfig::new(4);
        for s in 0..4 {
            for r in 1..=3 {
                assert!(greedy_trial(&m, &min, &d, s, r, &cfg).is_none());
            }
        }
        assert!(find_negative_cycle(&build_transform(&m, &d).unwrap(), &cfg).is_none());
        assert!(descend(&m, &d, &cfg).unwrap().steps.is_empty());
    }

    #[test]
    fn optimal_start_gives_empty_trace() {
        for seed in 0..10 {
            let m = CostMatrix::random(7, seed % 2 == 0, 60, seed);
            let opt = oracle::assignment_optimal(&m).unwrap();
            let crate::oracle::Witness::Permutation(p) = &opt.witness else { panic!("assignment witness") };
            let t = descend(&m, p, &DescentConfig::new(7)).unwrap();
            assert!(t.steps.is_empty());
            assert!(find_negative_cycle(&build_transform(&m, p).unwrap(), &DescentConfig::new(7)).is_none());
        }
    }

    #[test]
    fn scan_is_complete_against_cycle_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let n = rng.gen_range(3..=8);
            let m = CostMatrix::random(n, rng.gen_bool(0.5), 30, rng.gen());
            let mut images: Vec<usize> = (0..n).collect();
            loop {
                rand::seq::SliceRandom::shuffle(&mut images[..], &mut rng);
                if images.iter().enumerate().all(|(i, &x)| i != x) {
                    break;
                }
            }
            let d = Permutation::new(images.clone()).unwrap();
            let tm = build_transform(&m, &d).unwrap();
            let exists = oracle::min_simple_cycle(&tm).unwrap().is_some_and(|(_, v)| v < 0);
            assert_eq!(find_negative_cycle(&tm, &DescentConfig::new(n)).is_some(), exists);
        }
    }

    #[test]
    fn descent_matches_hungarian() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for case in 0..50 {
            let n = rng.gen_range(4..=10);
            let m = CostMatrix::random(n, false, 100, rng.gen());
            let t = descend(&m, &Permutation::rotation(n), &DescentConfig::new(n)).unwrap();
            assert_eq!(t.value, oracle::assignment_optimal(&m).unwrap().value, "case {case}");
            assert!(t.derangement.is_derangement());
        }
    }

    #[test]
    fn symmetric_mode_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..40 {
            let n = rng.gen_range(5..=12);
            let m = CostMatrix::random(n, true, 100, rng.gen());
            let d0 = Permutation::rotation(n);
            let t = descend(&m, &d0, &DescentConfig::symmetric(n)).unwrap();
            let d = &t.derangement;
            assert!(d.cycles().iter().all(|c| c.len() >= 3));
            assert!((0..n).all(|a| d.image(d.image(a)) != a));
            let free = descend(&m, &d0, &DescentConfig::new(n)).unwrap();
            assert!(free.value <= t.value);
        }
    }

    #[test]
    fn bad_config_is_rejected() {
        let m = fixtures::ex8();
        let cfg = DescentConfig { seed_count: 0, ..DescentConfig::new(7) };
        assert!(descend(&m, &Permutation::rotation(7), &cfg).is_err());
        let cfg = DescentConfig { max_iterations: 0, ..DescentConfig::new(7) };
        assert_eq!(descend(&m, &Permutation::rotation(7), &cfg).err(), Some(Error::IterationLimit(0)));
    }
}
