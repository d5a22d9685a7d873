//! Merging the cycles of a derangement into one tour.

use std::collections::HashSet;

use serde::Serialize;

use crate::cost::{Cost, CostMatrix};
use crate::error::{Error, Result};
use crate::matching::Matching;
use crate::perm::Permutation;
use crate::tour::Tour;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct PatchStep {
    #[serde(serialize_with = "crate::ids::one_based")]
    pub a: usize,
    #[serde(serialize_with = "crate::ids::one_based")]
    pub b: usize,
    /// The cycle through `b` was traversed backwards before the merge.
    pub reversed: bool,
    pub delta: Cost,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchPlan {
    pub steps: Vec<PatchStep>,
    pub total_delta: Cost,
    #[serde(skip)]
    pub tour: Tour,
}

/// `D·(a b)`: arcs `(a, D(a))`, `(b, D(b))` become `(a, D(b))`, `(b, D(a))`.
pub fn patch_pair(m: &CostMatrix, d: &Permutation, a: usize, b: usize) -> Result<(Permutation, Cost)> {
    let n = d.len();
    if a >= n || b >= n {
        return Err(Error::VertexOutOfRange(a.max(b) + 1));
    }
    let idx = d.cycle_index();
    if a == b || idx[a] == idx[b] {
        return Err(Error::SameCycle(a + 1, b + 1));
    }
    let delta = pair_delta(m, d.images(), a, b);
    let mut images = d.images().to_vec();
    images.swap(a, b);
    Ok((Permutation::new(images)?, delta))
}

#[inline]
fn pair_delta(m: &CostMatrix, img: &[usize], a: usize, b: usize) -> Cost {
    m.cost(a, img[b]) + m.cost(b, img[a]) - m.cost(a, img[a]) - m.cost(b, img[b])
}

#[derive(Clone)]
struct State {
    images: Vec<usize>,
    value: Cost,
    steps: Vec<PatchStep>,
}

fn cycles_of(images: &[usize]) -> Vec<Vec<usize>> {
    let n = images.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut c = Vec::new();
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            c.push(x);
            x = images[x];
        }
        out.push(c);
    }
    out
}

/// Cycle set as a key; for symmetric costs orientation is ignored, since
/// every merge is tried with the second cycle in both directions.
fn state_key(images: &[usize], symmetric: bool) -> Vec<usize> {
    if !symmetric {
        return images.to_vec();
    }
    let n = images.len();
    let mut key = images.to_vec();
    for c in cycles_of(images) {
        if c.len() < 3 {
            continue;
        }
        // c starts at its smallest vertex; keep the direction with the smaller second vertex.
        if c[c.len() - 1] < c[1] {
            for i in 0..c.len() {
                key[c[(i + 1) % c.len()]] = c[i];
            }
        }
    }
    debug_assert_eq!(key.len(), n);
    key
}

/// Beam search over sequences of pair merges. `beam` of `None` keeps every
/// distinct state.
pub fn patch_plan(m: &CostMatrix, d: &Permutation, beam: Option<usize>) -> Result<PatchPlan> {
    let n = m.n();
    if d.len() != n {
        return Err(Error::SizeMismatch { left: n, right: d.len() });
    }
    if let Some(f) = d.fixed_points().next() {
        return Err(Error::FixedPoint(f + 1));
    }
    let symmetric = m.is_symmetric();
    let mut states =
        vec![State { images: d.images().to_vec(), value: m.perm_value(d.images()), steps: Vec::new() }];
    let start_value = states[0].value;
    loop {
        if cycles_of(&states[0].images).len() == 1 {
            break;
        }
        let mut cands: Vec<(Cost, Vec<PatchStep>, usize, PatchStep)> = Vec::new();
        for (si, st) in states.iter().enumerate() {
            let cycles = cycles_of(&st.images);
            let mut rev = st.images.clone();
            for c in &cycles {
                for i in 0..c.len() {
                    rev[c[(i + 1) % c.len()]] = c[i];
                }
            }
            for i in 0..cycles.len() {
                for j in i + 1..cycles.len() {
                    for &a in &cycles[i] {
                        for &b in &cycles[j] {
                            let delta = pair_delta(m, &st.images, a, b);
                            let step = PatchStep { a, b, reversed: false, delta };
                            cands.push((st.value + delta, st.steps.clone(), si, step));
                            if symmetric && cycles[j].len() >= 3 {
                                let mut img = st.images.clone();
                                for &x in &cycles[j] {
                                    img[x] = rev[x];
                                }
                                let delta = pair_delta(m, &img, a, b);
                                let step = PatchStep { a, b, reversed: true, delta };
                                cands.push((st.value + delta, st.steps.clone(), si, step));
                            }
                        }
                    }
                }
            }
        }
        cands.sort_by(|x, y| (x.0, &x.1, x.3).cmp(&(y.0, &y.1, y.3)));
        let width = beam.unwrap_or(usize::MAX);
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for (value, _, si, step) in cands {
            if next.len() >= width {
                break;
            }
            let st = &states[si];
            let mut images = st.images.clone();
            if step.reversed {
                let idx = cycles_of(&images).into_iter().find(|c| c.contains(&step.b)).expect("b has a cycle");
                for i in 0..idx.len() {
                    images[idx[(i + 1) % idx.len()]] = idx[i];
                }
            }
            images.swap(step.a, step.b);
            if !seen.insert(state_key(&images, symmetric)) {
                continue;
            }
            let mut steps = st.steps.clone();
            steps.push(step);
            next.push(State { images, value, steps });
        }
        states = next;
    }
    let best = states.swap_remove(0);
    let perm = Permutation::new(best.images)?;
    let tour = Tour::from_permutation(&perm)?;
    let total_delta: Cost = best.steps.iter().map(|s| s.delta).sum();
    if tour.value(m) != start_value + total_delta {
        return Err(Error::Invariant("patch deltas do not account for the tour value".into()));
    }
    Ok(PatchPlan { steps: best.steps, total_delta, tour })
}

/// Default beam: `n` when the derangement has more than `⌈log₂ n⌉` cycles,
/// `n²` otherwise.
pub fn default_beam(n: usize, cycles: usize) -> usize {
    let log = (n.max(2) as f64).log2().ceil() as usize;
    if cycles > log {
        n
    } else {
        n * n
    }
}

pub fn patch_to_cycle(m: &CostMatrix, d: &Permutation, beam: usize) -> Result<Tour> {
    Ok(patch_plan(m, d, Some(beam.max(1)))?.tour)
}

/// The tour alternating between the edges of two disjoint perfect matchings,
/// when their union is a single circuit.
pub fn weave_matchings(m: &CostMatrix, pm1: &Matching, pm2: &Matching) -> Result<Option<Tour>> {
    let n = m.n();
    if pm1.n() != n || pm2.n() != n {
        return Err(Error::SizeMismatch { left: pm1.n(), right: pm2.n() });
    }
    if pm1.fixed_point().is_some() || pm2.fixed_point().is_some() {
        return Err(Error::InvalidMatching("weaving needs two perfect matchings".into()));
    }
    if let Some((a, b)) = pm1.pairs().into_iter().find(|&(a, _)| pm2.partner(a) == pm1.partner(a)) {
        return Err(Error::SharedEdge(a + 1, b + 1));
    }
    let mut order = vec![0];
    let mut x = 0;
    loop {
        let y = pm1.partner(x);
        let z = pm2.partner(y);
        if z == 0 {
            order.push(y);
            break;
        }
        order.extend([y, z]);
        x = z;
    }
    if order.len() != n {
        return Ok(None);
    }
    Ok(Some(Tour::new(order)?))
}
