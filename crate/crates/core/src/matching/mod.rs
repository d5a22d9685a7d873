//! Matching neighborhoods of a tour: the two alternating matchings (or
//! almost-perfect matchings for odd n), cycles in their transforms, and the
//! tours those cycles encode.

mod catalog;
mod link;
mod refine;

use std::fmt;

use crate::cost::{Cost, CostMatrix};
use crate::error::{Error, Result};
use crate::perm::{compose, Permutation};
use crate::tour::Tour;
use crate::transform::{build_transform_with_free_row, cycle_value, CycleKind, TransformMatrix, WeightedCycle};

pub(crate) use catalog::has_fixed_point_detour;
pub use catalog::{dedup_cycles, enumerate_cycles, CatalogEntry, CycleCatalog, EnumerateConfig, ALL_KINDS};
pub use link::{decompose, link_search, Decomposition, LinkConfig};
pub use refine::{cover_search, refine, RefineConfig, RefineStep, RefineTrace};

/// An involution with at most one fixed point.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    perm: Permutation,
    fixed_point: Option<usize>,
}

impl Matching {
    /// `partner[a]` is the vertex matched with `a`; `partner[f] = f` for the fixed point.
    pub fn from_partner(partner: Vec<usize>, fixed_point: Option<usize>) -> Result<Self> {
        let perm = Permutation::new(partner).map_err(|e| Error::InvalidMatching(e.to_string()))?;
        if !perm.is_involution() {
            return Err(Error::InvalidMatching("not an involution".into()));
        }
        let fixed: Vec<usize> = perm.fixed_points().collect();
        match (fixed.as_slice(), fixed_point) {
            ([], None) => {}
            ([f], Some(g)) if *f == g => {}
            _ => {
                return Err(Error::InvalidMatching(format!(
                    "fixed points {:?} do not match the declared {:?}",
                    fixed.iter().map(|v| v + 1).collect::<Vec<_>>(),
                    fixed_point.map(|v| v + 1)
                )))
            }
        }
        Ok(Matching { perm, fixed_point })
    }

    /// Builds a matching from disjoint pairs; at most one vertex may be left over.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut partner = vec![usize::MAX; n];
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::VertexOutOfRange(a.max(b) + 1));
            }
            if a == b || partner[a] != usize::MAX || partner[b] != usize::MAX {
                return Err(Error::InvalidMatching(format!("pair ({} {}) overlaps", a + 1, b + 1)));
            }
            partner[a] = b;
            partner[b] = a;
        }
        let left: Vec<usize> = (0..n).filter(|&a| partner[a] == usize::MAX).collect();
        if left.len() > 1 {
            return Err(Error::InvalidMatching(format!("{} vertices unmatched", left.len())));
        }
        let fixed_point = left.first().copied();
        if let Some(f) = fixed_point {
            partner[f] = f;
        }
        Self::from_partner(partner, fixed_point)
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    #[inline]
    pub fn partner(&self, a: usize) -> usize {
        self.perm.image(a)
    }

    pub fn fixed_point(&self) -> Option<usize> {
        self.fixed_point
    }

    pub fn as_permutation(&self) -> &Permutation {
        &self.perm
    }

    /// Pairs as `(a, b)` with `a < b`, sorted.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n()).filter(|&a| a < self.partner(a)).map(|a| (a, self.partner(a))).collect()
    }

    /// The pair containing `a`, as `(min, max)`; the fixed point maps to `(f, f)`.
    pub fn pair_of(&self, a: usize) -> (usize, usize) {
        let b = self.partner(a);
        (a.min(b), a.max(b))
    }

    /// Sum over pairs of `cost(a, b)` with `a < b`.
    pub fn edge_sum(&self, m: &CostMatrix) -> Cost {
        self.pairs().iter().map(|&(a, b)| m.cost(a, b)).sum()
    }

    /// Sum of `cost(a, partner(a))` over moved points; twice the edge sum when symmetric.
    pub fn derangement_value(&self, m: &CostMatrix) -> Cost {
        (0..self.n()).filter(|&a| self.partner(a) != a).map(|a| m.cost(a, self.partner(a))).sum()
    }

    /// The transform view in which cycle values are tour-value changes.
    pub fn transform<'a>(&'a self, m: &'a CostMatrix) -> Result<TransformMatrix<'a>> {
        build_transform_with_free_row(m, &self.perm, self.fixed_point)
    }

    /// The permutation `s` with `tour = self ∘ s`.
    pub fn relative(&self, tour: &Tour) -> Result<Permutation> {
        compose(&self.perm, &tour.to_permutation())
    }

    /// Tour encoded by `s` relative to this matching, if `self ∘ s` is one n-cycle.
    pub fn tour_from(&self, s: &Permutation) -> Option<Tour> {
        let t = compose(&self.perm, s).ok()?;
        Tour::from_permutation(&t).ok()
    }

    pub fn classify(&self, nodes: &[usize]) -> CycleShape {
        CycleShape::of(self, nodes)
    }
}

impl fmt::Debug for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matching{self}")
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, b) in self.pairs() {
            write!(f, "({} {})", a + 1, b + 1)?;
        }
        if let Some(x) = self.fixed_point {
            write!(f, "[{}]", x + 1)?;
        }
        Ok(())
    }
}

/// How a cycle meets the pairs of a matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleShape {
    pub kind: CycleKind,
    /// Points whose partner is off the cycle.
    pub linking_points: Vec<usize>,
    /// Pairs with both points on the cycle.
    pub non_linking_pairs: Vec<(usize, usize)>,
    /// Every pair with at least one point on the cycle (the fixed point as `(f, f)`).
    pub touched_pairs: Vec<(usize, usize)>,
}

impl CycleShape {
    fn of(sigma: &Matching, nodes: &[usize]) -> Self {
        let n = sigma.n();
        let mut pos = vec![usize::MAX; n];
        for (i, &v) in nodes.iter().enumerate() {
            pos[v] = i;
        }
        let mut linking_points = Vec::new();
        let mut non_linking_pairs = Vec::new();
        let mut touched_pairs = Vec::new();
        for &v in nodes {
            let w = sigma.partner(v);
            let pair = sigma.pair_of(v);
            if w == v {
                touched_pairs.push(pair);
            } else if pos[w] == usize::MAX {
                linking_points.push(v);
                touched_pairs.push(pair);
            } else if v < w {
                non_linking_pairs.push(pair);
                touched_pairs.push(pair);
            }
        }
        linking_points.sort_unstable();
        non_linking_pairs.sort_unstable();
        touched_pairs.sort_unstable();
        let kind = match non_linking_pairs.as_slice() {
            [] => CycleKind::Acceptable,
            [_] => CycleKind::Unlinked2,
            [p, q] => {
                let span = |(a, b): (usize, usize)| (pos[a].min(pos[b]), pos[a].max(pos[b]));
                let (p0, p1) = span(*p);
                let (q0, q1) = span(*q);
                let inside = |x: usize| p0 < x && x < p1;
                if inside(q0) != inside(q1) {
                    CycleKind::Linked2
                } else {
                    CycleKind::Multi
                }
            }
            _ => CycleKind::Multi,
        };
        CycleShape { kind, linking_points, non_linking_pairs, touched_pairs }
    }
}

/// The matching of `t` left after deleting the two arcs at `f`: the tour is
/// written `(a1 a2 ... a_{n-1} f)` and paired `(a1 a2)(a3 a4)...`.
pub fn apm_ending_at(t: &Tour, f: usize) -> Result<Matching> {
    let n = t.len();
    if n.is_multiple_of(2) {
        return Err(Error::InvalidMatching("almost-perfect matchings need odd n".into()));
    }
    if f >= n {
        return Err(Error::VertexOutOfRange(f + 1));
    }
    let mut seq = t.rotated_to(f);
    seq.rotate_left(1);
    let pairs: Vec<(usize, usize)> = seq[..n - 1].chunks(2).map(|c| (c[0], c[1])).collect();
    Matching::from_pairs(n, &pairs)
}

/// The two alternating matchings of `t`, cheaper first.
///
/// Odd n: the cheapest almost-perfect matching over all fixed points (ties to
/// the smallest fixed point), followed by its complement in `t`.
pub fn alternating_matchings(m: &CostMatrix, t: &Tour) -> Result<(Matching, Matching)> {
    let n = t.len();
    if n != m.n() {
        return Err(Error::SizeMismatch { left: m.n(), right: n });
    }
    let o = t.order();
    if n.is_multiple_of(2) {
        let first: Vec<(usize, usize)> = (0..n).step_by(2).map(|i| (o[i], o[i + 1])).collect();
        let second: Vec<(usize, usize)> = (1..n).step_by(2).map(|i| (o[i], o[(i + 1) % n])).collect();
        let a = Matching::from_pairs(n, &first)?;
        let b = Matching::from_pairs(n, &second)?;
        let key = |x: &Matching| (x.derangement_value(m), x.pairs());
        return Ok(if key(&b) < key(&a) { (b, a) } else { (a, b) });
    }
    let best = (0..n)
        .map(|f| apm_ending_at(t, f).map(|apm| (apm.derangement_value(m), f, apm)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min_by_key(|(v, f, _)| (*v, *f))
        .expect("n >= 3");
    let (_, f, apm) = best;
    let pos = o.iter().position(|&v| v == f).expect("on tour");
    let complement = apm_ending_at(t, o[(pos + 1) % n])?;
    Ok((apm, complement))
}

fn require_acceptable(sigma: &Matching, c: &[usize]) -> Result<()> {
    let shape = sigma.classify(c);
    if shape.kind != CycleKind::Acceptable {
        return Err(Error::NotAcceptable(format!("{:?} pattern", shape.kind)));
    }
    if let Some(f) = sigma.fixed_point() {
        if c.contains(&f) {
            return Err(Error::NotAcceptable(format!("passes through the fixed point {}", f + 1)));
        }
    }
    Ok(())
}

/// `C' = (σ(a2) σ(a1) σ(am) ... σ(a3))`, valued in `sigma`'s transform.
pub fn companion_cycle(m: &CostMatrix, sigma: &Matching, c: &WeightedCycle) -> Result<WeightedCycle> {
    require_acceptable(sigma, &c.nodes)?;
    let k = c.nodes.len();
    let nodes: Vec<usize> = (0..k).map(|i| sigma.partner(c.nodes[(k + 1 - i) % k])).collect();
    let tm = sigma.transform(m)?;
    let value = cycle_value(&tm, &nodes)?;
    Ok(WeightedCycle { nodes, value, kind: CycleKind::Acceptable })
}

/// Replaces the pairs touched by `c` with `(a_i, σ(a_{i+1}))`.
pub fn apply_to_matching(sigma: &Matching, c: &[usize]) -> Result<Matching> {
    if c.is_empty() {
        return Ok(sigma.clone());
    }
    require_acceptable(sigma, c)?;
    let k = c.len();
    let mut partner = sigma.as_permutation().images().to_vec();
    for i in 0..k {
        let a = c[i];
        let b = sigma.partner(c[(i + 1) % k]);
        partner[a] = b;
        partner[b] = a;
    }
    Matching::from_partner(partner, sigma.fixed_point())
}

/// `(a1 σ(a2) a2 σ(a3) ... am σ(a1))` for a cycle holding one point of every pair.
pub fn half_cycle_tour(sigma: &Matching, c: &[usize]) -> Result<Tour> {
    let n = sigma.n();
    if !n.is_multiple_of(2) || sigma.fixed_point().is_some() {
        return Err(Error::NotHalfCycle("requires a perfect matching".into()));
    }
    if c.len() != n / 2 {
        return Err(Error::NotHalfCycle(format!("{} points, expected {}", c.len(), n / 2)));
    }
    let mut seen = vec![false; n];
    for &a in c {
        if a >= n {
            return Err(Error::VertexOutOfRange(a + 1));
        }
        let (p, _) = sigma.pair_of(a);
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::NotHalfCycle(format!("pair of {} used twice", a + 1)));
        }
    }
    let k = c.len();
    let mut order = Vec::with_capacity(n);
    for i in 0..k {
        order.push(c[i]);
        order.push(sigma.partner(c[(i + 1) % k]));
    }
    Tour::new(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle;
    use crate::transform::cycle_value;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(ids: &[usize]) -> Vec<usize> {
        ids.iter().map(|x| x - 1).collect()
    }

    fn pairs1(ps: &[(usize, usize)]) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = ps.iter().map(|&(a, b)| ((a - 1).min(b - 1), (a - 1).max(b - 1))).collect();
        out.sort_unstable();
        out
    }

    fn t165() -> Tour {
        Tour::from_one_based(&[12, 4, 7, 1, 14, 20, 15, 19, 13, 3, 18, 5, 9, 2, 17, 11, 16, 8, 6, 10]).unwrap()
    }

    fn random_tour(n: usize, rng: &mut ChaCha8Rng) -> Tour {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Tour::new(order).unwrap()
    }

    #[test]
    fn sigma_t_of_t165() {
        let m = fixtures::ex4();
        let t = t165();
        assert_eq!(t.value(&m), 165);
        let (sigma, other) = alternating_matchings(&m, &t).unwrap();
        assert_eq!(
            sigma.pairs(),
            pairs1(&[(1, 7), (2, 9), (3, 13), (4, 12), (5, 18), (6, 10), (8, 16), (11, 17), (14, 20), (15, 19)])
        );
        assert_eq!(sigma.edge_sum(&m), 78);
        assert_eq!(sigma.derangement_value(&m), 156);
        assert_eq!(t.value(&m) - sigma.derangement_value(&m), 9);
        assert_eq!(sigma.edge_sum(&m) + other.edge_sum(&m), 165);
    }

    #[test]
    fn uniform_square_matchings() {
        let m = CostMatrix::parse("n 4\nINF 1 1 1\n1 INF 1 1\n1 1 INF 1\n1 1 1 INF\n").unwrap();
        let (a, b) = alternating_matchings(&m, &Tour::identity(4)).unwrap();
        let mut got = vec![a.pairs(), b.pairs()];
        got.sort();
        assert_eq!(got, vec![pairs1(&[(1, 2), (3, 4)]), pairs1(&[(1, 4), (2, 3)])]);
    }

    #[test]
    fn apm_of_example_seven_tour() {
        let m = fixtures::ex7();
        let t = Tour::from_one_based(&[13, 11, 15, 3, 1, 5, 2, 4, 9, 10, 8, 12, 7, 14, 6]).unwrap();
        let apm = apm_ending_at(&t, 5).unwrap();
        assert_eq!(apm.fixed_point(), Some(5));
        assert_eq!(apm.pairs(), pairs1(&[(13, 11), (15, 3), (1, 5), (2, 4), (9, 10), (8, 12), (7, 14)]));
        assert_eq!(apm.edge_sum(&m), 266);
        let (best, complement) = alternating_matchings(&m, &t).unwrap();
        assert!(best.derangement_value(&m) <= apm.derangement_value(&m));
        let f = best.fixed_point().unwrap();
        let g = complement.fixed_point().unwrap();
        assert_ne!(f, g);
        // Together the two matchings use every tour edge except those at the two fixed points' junction.
        assert_eq!(best.pairs().len() + complement.pairs().len(), 14);
    }

    #[test]
    fn companion_of_reference_cycle() {
        let m = fixtures::ex4();
        let (sigma, _) = alternating_matchings(&m, &t165()).unwrap();
        let tm = sigma.transform(&m).unwrap();
        let c = WeightedCycle::new(&tm, v(&[4, 1])).unwrap();
        assert_eq!(c.value, -10);
        let cc = companion_cycle(&m, &sigma, &c).unwrap();
        assert_eq!(cc.nodes, v(&[7, 12]));
        assert_eq!(cc.value, -10);
        // 2-cycle rule: (a b) -> (σ(b) σ(a)).
        assert_eq!(cycle_value(&tm, &v(&[12, 7])).unwrap(), -10);
    }

    #[test]
    fn apply_reference_cycle() {
        let m = fixtures::ex4();
        let (sigma, _) = alternating_matchings(&m, &t165()).unwrap();
        let next = apply_to_matching(&sigma, &v(&[4, 1])).unwrap();
        assert!(next.as_permutation().is_involution());
        assert_eq!(next.partner(3), 6);
        assert_eq!(next.partner(0), 11);
        assert_eq!(next.edge_sum(&m), sigma.edge_sum(&m) - 10);
        assert_eq!(apply_to_matching(&sigma, &[]).unwrap(), sigma);
    }

    #[test]
    fn apply_rejects_non_acceptable() {
        let sigma = Matching::from_pairs(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(apply_to_matching(&sigma, &[0, 1, 2]), Err(Error::NotAcceptable(_))));
        let apm = Matching::from_pairs(5, &[(0, 1), (2, 3)]).unwrap();
        assert!(matches!(apply_to_matching(&apm, &[0, 4]), Err(Error::NotAcceptable(_))));
    }

    #[test]
    fn descent_on_matchings_reaches_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..20u64 {
            let n = [4, 6, 8, 10][seed as usize % 4];
            let m = CostMatrix::random(n, true, 60, seed);
            let mut sigma = alternating_matchings(&m, &random_tour(n, &mut rng)).unwrap().0;
            loop {
                let cat = enumerate_cycles(
                    &m,
                    &sigma,
                    &EnumerateConfig { bound: 0, max_len: n, kinds: vec![CycleKind::Acceptable] },
                )
                .unwrap();
                let Some(best) = cat.entries.iter().min_by_key(|e| (e.cycle.value, e.cycle.nodes.clone())) else {
                    break;
                };
                let before = sigma.edge_sum(&m);
                sigma = apply_to_matching(&sigma, &best.cycle.nodes).unwrap();
                assert_eq!(sigma.edge_sum(&m), before + best.cycle.value);
            }
            let opt = oracle::min_perfect_matching(&m).unwrap();
            assert_eq!(sigma.edge_sum(&m), opt.edge_sum(&m), "seed {seed}");
        }
    }

    #[test]
    fn half_cycle_small_case() {
        let sigma = Matching::from_pairs(4, &[(0, 1), (2, 3)]).unwrap();
        let t = half_cycle_tour(&sigma, &[0, 2]).unwrap();
        assert_eq!(t, Tour::from_one_based(&[1, 4, 3, 2]).unwrap());
        assert!(matches!(half_cycle_tour(&sigma, &[0, 1]), Err(Error::NotHalfCycle(_))));
        assert!(matches!(half_cycle_tour(&sigma, &[0]), Err(Error::NotHalfCycle(_))));
    }

    #[test]
    fn half_cycle_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = [6, 8, 10][rng.gen_range(0..3)];
            let m = CostMatrix::random(n, rng.gen_bool(0.5), 80, rng.gen());
            let t = random_tour(n, &mut rng);
            for sigma in [alternating_matchings(&m, &t).unwrap().0, alternating_matchings(&m, &t).unwrap().1] {
                let s = sigma.relative(&t).unwrap();
                // s has a single nontrivial cycle holding one point of each pair.
                assert_eq!(s.cycles().len(), 1);
                let c = s.cycles()[0].clone();
                let back = half_cycle_tour(&sigma, &c).unwrap();
                assert_eq!(back, t);
                let tm = sigma.transform(&m).unwrap();
                assert_eq!(t.value(&m), sigma.derangement_value(&m) + cycle_value(&tm, &c).unwrap());
            }
        }
    }

    #[test]
    fn tour_value_is_matching_plus_relative_cycles() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let n = rng.gen_range(5..=11);
            let m = CostMatrix::random(n, rng.gen_bool(0.5), 80, rng.gen());
            let t = random_tour(n, &mut rng);
            let t2 = random_tour(n, &mut rng);
            let (sigma, _) = alternating_matchings(&m, &t).unwrap();
            let tm = sigma.transform(&m).unwrap();
            let s = sigma.relative(&t2).unwrap();
            let total: Cost = s.cycles().iter().map(|c| cycle_value(&tm, c).unwrap()).sum();
            assert_eq!(t2.value(&m), sigma.derangement_value(&m) + total);
            assert_eq!(sigma.tour_from(&s).unwrap(), t2);
        }
    }

    #[test]
    fn companion_values_agree_on_symmetric_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut checked = 0;
        while checked < 200 {
            let n = rng.gen_range(3..=6) * 2;
            let m = CostMatrix::random(n, true, 90, rng.gen());
            let sigma = alternating_matchings(&m, &random_tour(n, &mut rng)).unwrap().0;
            // one point from each of k random pairs, in random order
            let mut pairs = sigma.pairs();
            pairs.shuffle(&mut rng);
            let k = rng.gen_range(2..=pairs.len());
            let nodes: Vec<usize> =
                pairs[..k].iter().map(|&(a, b)| if rng.gen_bool(0.5) { a } else { b }).collect();
            let tm = sigma.transform(&m).unwrap();
            let c = WeightedCycle::new(&tm, nodes).unwrap();
            let cc = companion_cycle(&m, &sigma, &c).unwrap();
            assert_eq!(c.value, cc.value);
            let after = apply_to_matching(&sigma, &c.nodes).unwrap();
            assert_eq!(after, apply_to_matching(&sigma, &cc.nodes).unwrap());
            assert_eq!(after.edge_sum(&m), sigma.edge_sum(&m) + c.value);
            checked += 1;
        }
    }

    #[test]
    fn classify_patterns() {
        let sigma = Matching::from_pairs(8, &[(0, 1), (2, 3), (4, 5), (6, 7)]).unwrap();
        assert_eq!(sigma.classify(&[0, 2, 4]).kind, CycleKind::Acceptable);
        let u = sigma.classify(&[0, 1, 2]);
        assert_eq!(u.kind, CycleKind::Unlinked2);
        assert_eq!(u.linking_points, vec![2]);
        assert_eq!(u.non_linking_pairs, vec![(0, 1)]);
        assert_eq!(sigma.classify(&[0, 2, 1, 3]).kind, CycleKind::Linked2);
        assert_eq!(sigma.classify(&[0, 1, 2, 3]).kind, CycleKind::Multi);
        assert_eq!(sigma.classify(&[0, 1, 2, 3, 4, 5]).kind, CycleKind::Multi);
    }
}
