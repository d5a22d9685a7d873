use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{CycleShape, Matching};
use crate::cost::{Cost, CostMatrix};
use crate::error::Result;
use crate::transform::{canonical_rotation, CycleKind, TransformMatrix, WeightedCycle};

pub const ALL_KINDS: [CycleKind; 4] =
    [CycleKind::Acceptable, CycleKind::Unlinked2, CycleKind::Linked2, CycleKind::Multi];

#[derive(Debug, Clone)]
pub struct EnumerateConfig {
    /// Only cycles with value strictly below this are kept.
    pub bound: Cost,
    pub max_len: usize,
    pub kinds: Vec<CycleKind>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub cycle: WeightedCycle,
    pub shape: CycleShape,
}

#[derive(Debug, Clone, Default)]
pub struct CycleCatalog {
    pub bound: Cost,
    /// Sorted by value, then node sequence.
    pub entries: Vec<CatalogEntry>,
}

impl CycleCatalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, nodes: &[usize]) -> Option<&CatalogEntry> {
        let key = canonical_rotation(nodes);
        self.entries.iter().find(|e| e.cycle.nodes == key)
    }
}

fn full_pair_limit(kinds: &[CycleKind]) -> usize {
    kinds
        .iter()
        .map(|k| match k {
            CycleKind::Plain | CycleKind::Acceptable => 0,
            CycleKind::Unlinked2 => 1,
            CycleKind::Linked2 => 2,
            CycleKind::Multi => usize::MAX,
        })
        .max()
        .unwrap_or(0)
}

/// True when `a -> f -> partner(a)` occurs for the fixed point `f`. Such a
/// cycle would give the tour the 2-cycle `(a f)`.
pub(crate) fn has_fixed_point_detour(sigma: &Matching, nodes: &[usize]) -> bool {
    let Some(f) = sigma.fixed_point() else {
        return false;
    };
    let k = nodes.len();
    (0..k).any(|i| nodes[(i + 1) % k] == f && nodes[(i + 2) % k] == sigma.partner(nodes[i]))
}

type Pairs = Vec<(usize, usize)>;

/// Collapses rotations, then keeps one cycle per (touched pairs, non-linking
/// pairs, value): the one with the smallest node sequence. Companion cycles
/// touch the same pairs, so they collapse here too.
pub fn dedup_cycles(sigma: &Matching, raw: impl IntoIterator<Item = (Vec<usize>, Cost)>) -> Vec<CatalogEntry> {
    let unique: BTreeSet<(Vec<usize>, Cost)> = raw.into_iter().map(|(c, v)| (canonical_rotation(&c), v)).collect();
    let mut best: BTreeMap<(Pairs, Pairs, Cost), CatalogEntry> = BTreeMap::new();
    for (nodes, value) in unique {
        let shape = sigma.classify(&nodes);
        let key = (shape.touched_pairs.clone(), shape.non_linking_pairs.clone(), value);
        let entry = CatalogEntry { cycle: WeightedCycle { nodes, value, kind: shape.kind }, shape };
        match best.get(&key) {
            Some(cur) if cur.cycle.nodes <= entry.cycle.nodes => {}
            _ => {
                best.insert(key, entry);
            }
        }
    }
    let mut out: Vec<CatalogEntry> = best.into_values().collect();
    out.sort_by(|a, b| (a.cycle.value, &a.cycle.nodes).cmp(&(b.cycle.value, &b.cycle.nodes)));
    out
}

/// Every cycle of the requested kinds with value below `cfg.bound` and at most
/// `cfg.max_len` points, in the transform of `sigma`.
///
/// Each such cycle has a rotation whose proper prefix sums all stay below
/// `max(bound, 0)`, so a depth-first search from every start may cut any path
/// whose running value reaches that threshold.
pub fn enumerate_cycles(m: &CostMatrix, sigma: &Matching, cfg: &EnumerateConfig) -> Result<CycleCatalog> {
    let tm = sigma.transform(m)?;
    let n = m.n();
    let threshold = cfg.bound.max(0);
    let limit = full_pair_limit(&cfg.kinds);
    let max_len = cfg.max_len.min(n);
    let raw: Vec<(Vec<usize>, Cost)> = (0..n)
        .into_par_iter()
        .map(|root| {
            let mut search = Dfs {
                tm: &tm,
                sigma,
                bound: cfg.bound,
                threshold,
                limit,
                max_len,
                kinds: &cfg.kinds,
                path: vec![root],
                on_path: vec![false; n],
                out: Vec::new(),
            };
            search.on_path[root] = true;
            search.grow(0, 0);
            search.out
        })
        .flatten()
        .collect();
    Ok(CycleCatalog { bound: cfg.bound, entries: dedup_cycles(sigma, raw) })
}

struct Dfs<'a> {
    tm: &'a TransformMatrix<'a>,
    sigma: &'a Matching,
    bound: Cost,
    threshold: Cost,
    limit: usize,
    max_len: usize,
    kinds: &'a [CycleKind],
    path: Vec<usize>,
    on_path: Vec<bool>,
    out: Vec<(Vec<usize>, Cost)>,
}

impl Dfs<'_> {
    fn grow(&mut self, value: Cost, full_pairs: usize) {
        let last = *self.path.last().expect("nonempty");
        let root = self.path[0];
        if self.path.len() >= 2 {
            if let Some(close) = self.tm.entry(last, root) {
                let total = value + close;
                if total < self.bound {
                    self.emit(total);
                }
            }
        }
        if self.path.len() == self.max_len {
            return;
        }
        let fixed = self.sigma.fixed_point();
        let prev = (self.path.len() >= 2).then(|| self.path[self.path.len() - 2]);
        for w in 0..self.tm.n() {
            if self.on_path[w] {
                continue;
            }
            let Some(e) = self.tm.entry(last, w) else { continue };
            let next = value + e;
            if next >= self.threshold {
                continue;
            }
            let pw = self.sigma.partner(w);
            let pairs = full_pairs + usize::from(pw != w && self.on_path[pw]);
            if pairs > self.limit {
                continue;
            }
            if let (Some(f), Some(p)) = (fixed, prev) {
                if last == f && self.sigma.partner(p) == w {
                    continue;
                }
            }
            self.on_path[w] = true;
            self.path.push(w);
            self.grow(next, pairs);
            self.path.pop();
            self.on_path[w] = false;
        }
    }

    fn emit(&mut self, total: Cost) {
        if !self.is_first_start() || has_fixed_point_detour(self.sigma, &self.path) {
            return;
        }
        let kind = self.sigma.classify(&self.path).kind;
        if self.kinds.contains(&kind) {
            self.out.push((self.path.clone(), total));
        }
    }

    /// Every start whose proper prefixes stay below the threshold reaches this
    /// cycle; only the smallest such vertex reports it.
    fn is_first_start(&self) -> bool {
        let k = self.path.len();
        let root = self.path[0];
        let arcs: Vec<Cost> = (0..k)
            .map(|i| self.tm.entry(self.path[i], self.path[(i + 1) % k]).expect("closed cycle"))
            .collect();
        (1..k).all(|start| {
            if self.path[start] > root {
                return true;
            }
            let mut sum = 0;
            !(0..k - 1).all(|j| {
                sum += arcs[(start + j) % k];
                sum < self.threshold
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matching::{alternating_matchings, companion_cycle};
    use crate::oracle;
    use crate::tour::Tour;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(ids: &[usize]) -> Vec<usize> {
        ids.iter().map(|x| x - 1).collect()
    }

    #[test]
    fn example_four_catalog() {
        let m = fixtures::ex4();
        let t = Tour::from_one_based(&[12, 4, 7, 1, 14, 20, 15, 19, 13, 3, 18, 5, 9, 2, 17, 11, 16, 8, 6, 10]).unwrap();
        let (sigma, _) = alternating_matchings(&m, &t).unwrap();
        assert_eq!(t.value(&m) - sigma.derangement_value(&m), 9);
        for bound in [9, 13] {
            check_example_four_catalog(&m, &sigma, bound);
        }
    }

    fn check_example_four_catalog(m: &CostMatrix, sigma: &Matching, bound: Cost) {
        let cat = enumerate_cycles(m, sigma, &EnumerateConfig { bound, max_len: 12, kinds: ALL_KINDS.to_vec() })
            .unwrap();
        let a = cat.find(&v(&[4, 1])).expect("(4 1) listed");
        assert_eq!(a.cycle.value, -10);
        let b = cat.find(&v(&[16, 17, 6])).expect("(16 17 6) listed");
        assert_eq!(b.cycle.value, -12);
        // Their companions collapse onto them.
        let tm = sigma.transform(m).unwrap();
        let ca = companion_cycle(m, sigma, &a.cycle).unwrap();
        assert_eq!(canonical_rotation(&ca.nodes), v(&[7, 12]));
        assert_eq!(ca.value, -10);
        let cb = companion_cycle(m, sigma, &b.cycle).unwrap();
        assert_eq!(canonical_rotation(&cb.nodes), v(&[8, 10, 11]));
        assert_eq!(crate::transform::cycle_value(&tm, &v(&[8, 10, 11])).unwrap(), -12);
        assert!(cat.find(&v(&[7, 12])).is_none());
        for e in &cat.entries {
            assert!(e.cycle.value < bound);
        }
    }

    #[test]
    fn minimal_matching_has_empty_catalog() {
        for seed in 0..10 {
            let m = CostMatrix::random(8, true, 50, seed);
            let sigma = oracle::min_perfect_matching(&m).unwrap();
            let cat = enumerate_cycles(
                &m,
                &sigma,
                &EnumerateConfig { bound: 0, max_len: 8, kinds: vec![CycleKind::Acceptable] },
            )
            .unwrap();
            assert!(cat.is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn catalog_matches_exhaustive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for case in 0..40 {
            let n = rng.gen_range(5..=8);
            let m = CostMatrix::random(n, case % 3 != 0, 40, rng.gen());
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let t = Tour::new(order).unwrap();
            let (sigma, other) = alternating_matchings(&m, &t).unwrap();
            for sg in [sigma, other] {
                let bound = t.value(&m) - sg.derangement_value(&m) + rng.gen_range(-5..=20);
                let kinds = if case % 2 == 0 { ALL_KINDS.to_vec() } else { vec![CycleKind::Acceptable] };
                let cfg = EnumerateConfig { bound, max_len: rng.gen_range(2..=n), kinds };
                let got = enumerate_cycles(&m, &sg, &cfg).unwrap();
                let want = oracle::enumerate_admissible_cycles(&m, &sg, &cfg).unwrap();
                assert_eq!(got.entries, want.entries, "case {case}");
                for e in &got.entries {
                    assert!(!has_fixed_point_detour(&sg, &e.cycle.nodes));
                }
            }
        }
    }
}
