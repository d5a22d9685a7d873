use serde::Serialize;

use super::{alternating_matchings, enumerate_cycles, link_search, Decomposition, EnumerateConfig, LinkConfig, Matching};
use crate::cost::{Cost, CostMatrix};
use crate::error::Result;
use crate::tour::Tour;
use crate::transform::CycleKind;

#[derive(Debug, Clone)]
pub struct RefineConfig {
    /// Longest catalog cycle; `None` means `n / 2 + 2`.
    pub max_len: Option<usize>,
    pub kinds: Vec<CycleKind>,
    pub link: LinkConfig,
    /// When linking fails, search every tour relative to the cheaper matching
    /// before declaring a fixpoint.
    pub exhaustive: bool,
    pub max_iterations: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            max_len: None,
            kinds: vec![CycleKind::Acceptable, CycleKind::Unlinked2, CycleKind::Linked2],
            link: LinkConfig::default(),
            exhaustive: false,
            max_iterations: 10_000,
        }
    }
}

impl RefineConfig {
    pub fn exhaustive(n: usize) -> Self {
        RefineConfig {
            max_len: Some(n),
            kinds: super::ALL_KINDS.to_vec(),
            link: LinkConfig::default(),
            exhaustive: true,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineStep {
    pub value: Cost,
    /// `link` or `cover`.
    pub source: &'static str,
    pub catalog_size: usize,
    pub decomposition: Option<Decomposition>,
}

#[derive(Debug, Clone)]
pub struct RefineTrace {
    pub tour: Tour,
    pub steps: Vec<RefineStep>,
    /// False when the iteration cap stopped the loop.
    pub fixpoint: bool,
}

/// Improves `t` through its matching neighborhoods until no linked set of
/// cycles (and, in exhaustive mode, no tour at all) beats it.
pub fn refine(m: &CostMatrix, t: &Tour, cfg: &RefineConfig) -> Result<RefineTrace> {
    let n = m.n();
    let max_len = cfg.max_len.unwrap_or(n / 2 + 2);
    let mut tour = t.clone();
    let mut steps = Vec::new();
    for _ in 0..cfg.max_iterations {
        let current = tour.value(m);
        let (first, second) = alternating_matchings(m, &tour)?;
        let mut next: Option<RefineStep> = None;
        let mut next_tour = None;
        for sigma in [&first, &second] {
            let bound = current - sigma.derangement_value(m);
            let ecfg = EnumerateConfig { bound, max_len, kinds: cfg.kinds.clone() };
            let catalog = enumerate_cycles(m, sigma, &ecfg)?;
            let linked = link_search(m, sigma, &catalog, &cfg.link)?;
            if let Some((cand, d)) = linked.best {
                let value = cand.value(m);
                if value < current {
                    next = Some(RefineStep { value, source: "link", catalog_size: catalog.len(), decomposition: Some(d) });
                    next_tour = Some(cand);
                    break;
                }
            }
        }
        if next.is_none() && cfg.exhaustive {
            if let Some(cand) = cover_search(m, &first, current)? {
                let value = cand.value(m);
                let d = super::decompose(&first, &cand)?;
                next = Some(RefineStep { value, source: "cover", catalog_size: 0, decomposition: Some(d) });
                next_tour = Some(cand);
            }
        }
        match (next, next_tour) {
            (Some(step), Some(cand)) => {
                debug_assert!(step.value < current);
                steps.push(step);
                tour = cand;
            }
            _ => return Ok(RefineTrace { tour, steps, fixpoint: true }),
        }
    }
    Ok(RefineTrace { tour, steps, fixpoint: false })
}

/// Cheapest tour with value below `limit`, searched as a permutation `s` with
/// `tour = sigma ∘ s`. Each row contributes at least its smallest transform
/// entry, which bounds every partial assignment.
pub fn cover_search(m: &CostMatrix, sigma: &Matching, limit: Cost) -> Result<Option<Tour>> {
    let n = m.n();
    let tm = sigma.transform(m)?;
    let base = sigma.derangement_value(m);
    // succ[a] lists (entry, next vertex) for the tour arc a -> next.
    let succ: Vec<Vec<(Cost, usize)>> = (0..n)
        .map(|a| {
            let mut row: Vec<(Cost, usize)> = (0..n)
                .filter(|&w| w != a)
                .map(|w| (tm.entry(a, sigma.partner(w)).expect("w != a"), w))
                .collect();
            row.sort_unstable();
            row
        })
        .collect();
    let row_lb: Vec<Cost> = succ.iter().map(|r| r[0].0).collect();
    let mut st = Cover {
        n,
        succ: &succ,
        row_lb: &row_lb,
        target: limit - base,
        order: vec![0],
        used: vec![false; n],
        best: None,
    };
    st.used[0] = true;
    let rest: Cost = row_lb.iter().sum();
    st.grow(0, rest);
    Ok(match st.best {
        Some(order) => Some(Tour::new(order)?),
        None => None,
    })
}

struct Cover<'a> {
    n: usize,
    succ: &'a [Vec<(Cost, usize)>],
    row_lb: &'a [Cost],
    /// Relative value a tour must beat.
    target: Cost,
    order: Vec<usize>,
    used: Vec<bool>,
    best: Option<Vec<usize>>,
}

impl Cover<'_> {
    fn grow(&mut self, value: Cost, rest_lb: Cost) {
        let last = *self.order.last().expect("nonempty");
        if self.order.len() == self.n {
            let close = self.succ[last].iter().find(|&&(_, w)| w == self.order[0]).expect("arc to start").0;
            let total = value + close;
            if total < self.target {
                self.target = total;
                self.best = Some(self.order.clone());
            }
            return;
        }
        let rest_after = rest_lb - self.row_lb[last];
        for &(e, w) in &self.succ[last] {
            if self.used[w] {
                continue;
            }
            if value + e + rest_after >= self.target {
                break;
            }
            self.used[w] = true;
            self.order.push(w);
            self.grow(value + e, rest_after);
            self.order.pop();
            self.used[w] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example_six_reaches_optimum() {
        let m = fixtures::ex6();
        let start = Tour::identity(9);
        let r = refine(&m, &start, &RefineConfig::exhaustive(9)).unwrap();
        assert_eq!(r.tour.value(&m), 102);
        assert!(r.fixpoint);
        let reference = Tour::from_one_based(&[1, 7, 2, 6, 3, 5, 9, 8, 4]).unwrap();
        assert!(r.tour == reference || r.tour == reference.reversed());
    }

    #[test]
    fn optimal_tour_is_unchanged() {
        let m = fixtures::ex6();
        let opt = oracle::brute_force_tour(&m).unwrap();
        let t = opt.tour().unwrap().clone();
        let r = refine(&m, &t, &RefineConfig::exhaustive(9)).unwrap();
        assert_eq!(r.tour, t);
        assert!(r.steps.is_empty());
    }

    #[test]
    fn cover_search_finds_nothing_below_optimum() {
        let m = CostMatrix::random(8, false, 50, 4);
        let opt = oracle::brute_force_tour(&m).unwrap();
        let (sigma, _) = alternating_matchings(&m, opt.tour().unwrap()).unwrap();
        assert!(cover_search(&m, &sigma, opt.value).unwrap().is_none());
        let found = cover_search(&m, &sigma, opt.value + 1).unwrap().unwrap();
        assert_eq!(found.value(&m), opt.value);
    }

    #[test]
    fn default_refine_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..20 {
            let n = rng.gen_range(6..=12);
            let m = CostMatrix::random(n, true, 100, rng.gen());
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let t = Tour::new(order).unwrap();
            let r = refine(&m, &t, &RefineConfig::default()).unwrap();
            let mut last = t.value(&m);
            for s in &r.steps {
                assert!(s.value < last);
                last = s.value;
            }
            assert_eq!(r.tour.value(&m), last);
        }
    }

    #[test]
    fn exhaustive_refine_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for case in 0..30 {
            let n = rng.gen_range(5..=9);
            let m = CostMatrix::random(n, case % 2 == 0, 100, rng.gen());
            let r = refine(&m, &Tour::identity(n), &RefineConfig::exhaustive(n)).unwrap();
            assert_eq!(r.tour.value(&m), oracle::brute_force_tour(&m).unwrap().value, "case {case}");
        }
    }
}
