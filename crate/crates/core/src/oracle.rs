//! Independent exact solvers used to check the search modules.

use std::time::{Duration, Instant};

use crate::cost::{Cost, CostMatrix};
use crate::error::{Error, Result};
use crate::matching::{dedup_cycles, CycleCatalog, EnumerateConfig, Matching};
use crate::perm::Permutation;
use crate::tour::Tour;
use crate::transform::TransformMatrix;

pub const BRUTE_FORCE_LIMIT: usize = 11;
pub const HELD_KARP_LIMIT: usize = 20;
pub const MATCHING_LIMIT: usize = 10;
pub const DERANGEMENT_LIMIT: usize = 9;
pub const CYCLE_ENUMERATION_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Tour(Tour),
    Permutation(Permutation),
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub value: Cost,
    pub witness: Witness,
    pub method: &'static str,
    pub elapsed: Duration,
}

impl OracleResult {
    pub fn tour(&self) -> Option<&Tour> {
        match &self.witness {
            Witness::Tour(t) => Some(t),
            Witness::Permutation(_) => None,
        }
    }

    /// Recomputes the witness value against `m`.
    pub fn revalidate(&self, m: &CostMatrix) -> bool {
        match &self.witness {
            Witness::Tour(t) => t.len() == m.n() && t.value(m) == self.value,
            Witness::Permutation(p) => {
                p.len() == m.n() && p.is_derangement() && m.perm_value(p.images()) == self.value
            }
        }
    }
}

fn guard(method: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        Err(Error::TooLarge { method, n, limit })
    } else {
        Ok(())
    }
}

/// Exhaustive search over all tours rooted at vertex 0. For symmetric
/// instances only one orientation of each tour is visited.
pub fn brute_force_tour(m: &CostMatrix) -> Result<OracleResult> {
    let n = m.n();
    guard("brute force", n, BRUTE_FORCE_LIMIT)?;
    let start = Instant::now();
    let mut order = vec![0usize; n];
    let mut used = vec![false; n];
    used[0] = true;
    let mut best: Option<(Cost, Vec<usize>)> = None;
    brute_rec(m, 1, 0, &mut order, &mut used, &mut best);
    let (value, order) = best.expect("n >= 3 has a tour");
    Ok(OracleResult {
        value,
        witness: Witness::Tour(Tour::new(order)?),
        method: "brute",
        elapsed: start.elapsed(),
    })
}

fn brute_rec(
    m: &CostMatrix,
    depth: usize,
    value: Cost,
    order: &mut Vec<usize>,
    used: &mut Vec<bool>,
    best: &mut Option<(Cost, Vec<usize>)>,
) {
    let n = m.n();
    if depth == n {
        if m.is_symmetric() && order[1] > order[n - 1] {
            return;
        }
        let total = value + m.cost(order[n - 1], 0);
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            *best = Some((total, order.clone()));
        }
        return;
    }
    for v in 1..n {
        if used[v] {
            continue;
        }
        used[v] = true;
        order[depth] = v;
        brute_rec(m, depth + 1, value + m.cost(order[depth - 1], v), order, used, best);
        used[v] = false;
    }
}

/// Bitmask dynamic program over subsets of `1..n`, with tour reconstruction.
pub fn held_karp(m: &CostMatrix) -> Result<OracleResult> {
    let n = m.n();
    guard("held-karp", n, HELD_KARP_LIMIT)?;
    if m.max_cost().saturating_mul(n as Cost) >= u32::MAX as Cost {
        return Err(Error::Invariant("costs too large for the 32-bit dynamic program".into()));
    }
    let start = Instant::now();
    let k = n - 1;
    let full = (1usize << k) - 1;
    const UNSET: u32 = u32::MAX;
    // dp[mask * k + j]: cheapest path 0 -> ... -> (j + 1) visiting exactly mask.
    let mut dp = vec![UNSET; (full + 1) * k];
    for j in 0..k {
        dp[(1 << j) * k + j] = m.cost(0, j + 1) as u32;
    }
    for mask in 1..=full {
        for j in 0..k {
            let cur = dp[mask * k + j];
            if cur == UNSET || mask & (1 << j) == 0 {
                continue;
            }
            let mut rest = full & !mask;
            while rest != 0 {
                let t = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let next = mask | (1 << t);
                let cand = cur + m.cost(j + 1, t + 1) as u32;
                let slot = &mut dp[next * k + t];
                if cand < *slot {
                    *slot = cand;
                }
            }
        }
    }
    let close = |j: usize| dp[full * k + j] as Cost + m.cost(j + 1, 0);
    let mut last = (0..k).min_by_key(|&j| (close(j), j)).expect("k >= 2");
    let value = close(last);

    let mut rev = Vec::with_capacity(n);
    let mut mask = full;
    loop {
        rev.push(last + 1);
        let here = dp[mask * k + last];
        let prev_mask = mask & !(1 << last);
        if prev_mask == 0 {
            break;
        }
        last = (0..k)
            .find(|&p| {
                prev_mask & (1 << p) != 0
                    && dp[prev_mask * k + p] != UNSET
                    && dp[prev_mask * k + p] as Cost + m.cost(p + 1, last + 1) == here as Cost
            })
            .expect("predecessor exists");
        mask = prev_mask;
    }
    rev.push(0);
    rev.reverse();
    let tour = Tour::new(rev)?;
    debug_assert_eq!(tour.value(m), value);
    Ok(OracleResult { value, witness: Witness::Tour(tour), method: "dp", elapsed: start.elapsed() })
}

/// Minimum-value derangement by the Hungarian method (diagonal excluded).
pub fn assignment_optimal(m: &CostMatrix) -> Result<OracleResult> {
    let n = m.n();
    let start = Instant::now();
    let big: Cost = m.max_cost().saturating_mul(n as Cost + 1).saturating_add(1);
    let c = |i: usize, j: usize| if i == j { big } else { m.cost(i, j) };

    // Potentials formulation, 1-based with a virtual column 0.
    let inf = Cost::MAX / 4;
    let mut u = vec![0 as Cost; n + 1];
    let mut v = vec![0 as Cost; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut images = vec![0; n];
    for j in 1..=n {
        images[p[j] - 1] = j - 1;
    }
    let perm = Permutation::new(images)?;
    if !perm.is_derangement() {
        return Err(Error::Invariant("assignment used a diagonal entry".into()));
    }
    let value = m.perm_value(perm.images());
    Ok(OracleResult { value, witness: Witness::Permutation(perm), method: "hungarian", elapsed: start.elapsed() })
}

/// Exhaustive minimum over all derangements.
pub fn brute_force_assignment(m: &CostMatrix) -> Result<OracleResult> {
    let n = m.n();
    guard("derangement enumeration", n, DERANGEMENT_LIMIT)?;
    let start = Instant::now();
    let mut images = vec![0; n];
    let mut used = vec![false; n];
    let mut best: Option<(Cost, Vec<usize>)> = None;
    fn rec(
        m: &CostMatrix,
        i: usize,
        value: Cost,
        images: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut Option<(Cost, Vec<usize>)>,
    ) {
        let n = m.n();
        if i == n {
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                *best = Some((value, images.clone()));
            }
            return;
        }
        for j in 0..n {
            if j == i || used[j] {
                continue;
            }
            used[j] = true;
            images[i] = j;
            rec(m, i + 1, value + m.cost(i, j), images, used, best);
            used[j] = false;
        }
    }
    rec(m, 0, 0, &mut images, &mut used, &mut best);
    let (value, images) = best.expect("n >= 2 has a derangement");
    Ok(OracleResult {
        value,
        witness: Witness::Permutation(Permutation::new(images)?),
        method: "derangements",
        elapsed: start.elapsed(),
    })
}

/// Every perfect matching of `0..n` (n even).
pub fn enumerate_matchings(n: usize) -> Result<Vec<Matching>> {
    guard("matching enumeration", n, MATCHING_LIMIT)?;
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidMatching(format!("no perfect matching on {n} vertices")));
    }
    let mut out = Vec::new();
    let mut partner = vec![usize::MAX; n];
    fn rec(partner: &mut Vec<usize>, out: &mut Vec<Matching>) {
        let Some(a) = partner.iter().position(|&p| p == usize::MAX) else {
            out.push(Matching::from_partner(partner.clone(), None).expect("valid by construction"));
            return;
        };
        for b in a + 1..partner.len() {
            if partner[b] != usize::MAX {
                continue;
            }
            partner[a] = b;
            partner[b] = a;
            rec(partner, out);
            partner[a] = usize::MAX;
            partner[b] = usize::MAX;
        }
    }
    rec(&mut partner, &mut out);
    Ok(out)
}

/// Minimum edge sum over all perfect matchings.
pub fn min_perfect_matching(m: &CostMatrix) -> Result<Matching> {
    let all = enumerate_matchings(m.n())?;
    Ok(all.into_iter().min_by_key(|pm| pm.edge_sum(m)).expect("at least one matching"))
}

/// Every vertex subset in every cyclic order, filtered by the catalog
/// predicates and deduplicated the same way as the search.
pub fn enumerate_admissible_cycles(m: &CostMatrix, sigma: &Matching, cfg: &EnumerateConfig) -> Result<CycleCatalog> {
    let n = m.n();
    guard("cycle enumeration", n, CYCLE_ENUMERATION_LIMIT)?;
    let tm = sigma.transform(m)?;
    let mut raw = Vec::new();
    for mask in 1u32..(1 << n) {
        let subset: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
        if subset.len() < 2 || subset.len() > cfg.max_len {
            continue;
        }
        // Fix the smallest point first and permute the rest.
        let mut rest = subset[1..].to_vec();
        permute_all(&mut rest, 0, &mut |order| {
            let mut nodes = vec![subset[0]];
            nodes.extend_from_slice(order);
            let Ok(value) = crate::transform::cycle_value(&tm, &nodes) else { return };
            if value >= cfg.bound || crate::matching::has_fixed_point_detour(sigma, &nodes) {
                return;
            }
            if cfg.kinds.contains(&sigma.classify(&nodes).kind) {
                raw.push((nodes, value));
            }
        });
    }
    Ok(CycleCatalog { bound: cfg.bound, entries: dedup_cycles(sigma, raw) })
}

/// Smallest value over every simple cycle of the transform, each listed once
/// from its smallest vertex.
pub fn min_simple_cycle(tm: &TransformMatrix<'_>) -> Result<Option<(Vec<usize>, Cost)>> {
    let n = tm.n();
    guard("cycle enumeration", n, CYCLE_ENUMERATION_LIMIT)?;
    fn walk(
        tm: &TransformMatrix<'_>,
        path: &mut Vec<usize>,
        used: &mut [bool],
        sum: Cost,
        best: &mut Option<(Vec<usize>, Cost)>,
    ) {
        let last = *path.last().expect("nonempty");
        let root = path[0];
        if path.len() >= 2 {
            if let Some(close) = tm.entry(last, root) {
                let v = sum + close;
                if best.as_ref().is_none_or(|(_, b)| v < *b) {
                    *best = Some((path.clone(), v));
                }
            }
        }
        for w in root + 1..tm.n() {
            if used[w] {
                continue;
            }
            let Some(e) = tm.entry(last, w) else { continue };
            used[w] = true;
            path.push(w);
            walk(tm, path, used, sum + e, best);
            path.pop();
            used[w] = false;
        }
    }
    let mut best = None;
    let mut used = vec![false; n];
    for root in 0..n {
        used[root] = true;
        walk(tm, &mut vec![root], &mut used, 0, &mut best);
        used[root] = false;
    }
    Ok(best)
}

fn permute_all(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute_all(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn brute_force_small_cases() {
        let ones = CostMatrix::parse("n 3\nINF 1 1\n1 INF 1\n1 1 INF\n").unwrap();
        let r = brute_force_tour(&ones).unwrap();
        assert_eq!(r.value, 3);
        assert!(r.revalidate(&ones));
        let r6 = brute_force_tour(&fixtures::ex6()).unwrap();
        assert_eq!(r6.value, 102);
        assert!(r6.revalidate(&fixtures::ex6()));
    }

    #[test]
    fn guards_reject_large_instances() {
        let m = CostMatrix::random(12, true, 10, 1);
        assert!(matches!(brute_force_tour(&m), Err(Error::TooLarge { .. })));
        let m = CostMatrix::random(21, true, 10, 1);
        assert!(matches!(held_karp(&m), Err(Error::TooLarge { .. })));
        assert!(matches!(enumerate_matchings(12), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn hungarian_matches_reference_assignment() {
        let m = fixtures::ex8();
        let r = assignment_optimal(&m).unwrap();
        assert_eq!(r.value, 102);
        assert!(r.revalidate(&m));
        let uniform = CostMatrix::parse("n 4\nINF 5 5 5\n5 INF 5 5\n5 5 INF 5\n5 5 5 INF\n").unwrap();
        assert_eq!(assignment_optimal(&uniform).unwrap().value, 20);
    }

    #[test]
    fn oracles_agree_on_random_instances() {
        for seed in 0..50 {
            let n = 5 + (seed as usize % 6);
            let m = CostMatrix::random(n, seed % 2 == 0, 100, seed);
            let bf = brute_force_tour(&m).unwrap();
            let hk = held_karp(&m).unwrap();
            assert_eq!(bf.value, hk.value, "seed {seed}");
            assert!(hk.revalidate(&m));
            let hu = assignment_optimal(&m).unwrap();
            assert!(hu.value <= hk.value);
            if n <= 8 {
                assert_eq!(hu.value, brute_force_assignment(&m).unwrap().value, "seed {seed}");
            }
        }
    }

    #[test]
    fn matching_counts() {
        assert_eq!(enumerate_matchings(4).unwrap().len(), 3);
        assert_eq!(enumerate_matchings(6).unwrap().len(), 15);
        assert_eq!(enumerate_matchings(10).unwrap().len(), 945);
    }
}
