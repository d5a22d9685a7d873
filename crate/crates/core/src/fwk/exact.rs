use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::store::{fwk_pass, keep_better, tour_key, PathStore};
use crate::aav::Aav;
use crate::cost::{Cost, CostMatrix};
use crate::error::{Error, Result};
use crate::tour::Tour;

#[derive(Debug, Clone, Serialize)]
pub struct RoundStat {
    /// `pass` for a pivot sweep over the store, `layer` for one arc of the
    /// exhaustive expansion.
    pub phase: &'static str,
    pub arcs: usize,
    /// Records kept after the round.
    pub records: usize,
}

#[derive(Debug, Clone)]
pub struct FwkOutcome {
    pub tour: Tour,
    /// Tour values that set the aav bound, in order.
    pub bound_history: Vec<Cost>,
    pub rounds: Vec<RoundStat>,
}

/// Exact search for a tour cheaper than `t0`; returns `t0` when none exists.
///
/// Pivot sweeps run first and may lower the bound. Then, from every start
/// vertex, paths grow one arc per round from the kept records. Every tour
/// cheaper than the bound has a rotation whose prefixes all stay below the
/// bound aav, so nothing cheaper is lost by cutting prefixes that reach it.
/// Among paths with the same start, vertex set and end only the cheapest can
/// lead to a better tour, so the others are dropped.
pub fn fwk_exact(m: &CostMatrix, t0: &Tour) -> Result<FwkOutcome> {
    let n = m.n();
    if t0.len() != n {
        return Err(Error::SizeMismatch { left: n, right: t0.len() });
    }
    if n > 63 {
        return Err(Error::TooLarge { method: "fwk exact", n, limit: 63 });
    }
    let u0 = t0.value(m);
    let mut best: Option<Tour> = None;
    let mut history = vec![u0];
    let mut rounds = Vec::new();

    let mut store = PathStore::from_arcs(m, Aav::new(u0, n));
    loop {
        let out = fwk_pass(m, &mut store);
        if let Some(t) = out.tour {
            keep_better(m, &mut best, t);
        }
        if let Some(b) = &best {
            let v = b.value(m);
            if v < *history.last().expect("nonempty") {
                history.push(v);
                store.tighten(Aav::new(v, n));
            }
        }
        rounds.push(RoundStat { phase: "pass", arcs: 0, records: store.records().count() });
        if !out.changed {
            break;
        }
    }

    let rowmin: Vec<Cost> = (0..n).map(|i| m.row_min(i)).collect();
    let colmin: Vec<Cost> =
        (0..n).map(|j| (0..n).filter(|&i| i != j).map(|i| m.cost(i, j)).min().unwrap_or(0)).collect();
    let mut layer_records = vec![0usize; n];
    for root in 0..n {
        let found = search_root(m, root, u0, &mut best, &rowmin, &colmin, &mut layer_records);
        if found {
            let v = best.as_ref().expect("found").value(m);
            if v < *history.last().expect("nonempty") {
                history.push(v);
            }
        }
    }
    for (k, &records) in layer_records.iter().enumerate().skip(1) {
        rounds.push(RoundStat { phase: "layer", arcs: k, records });
    }
    let tour = match best {
        Some(t) if t.value(m) < u0 => t,
        _ => t0.clone(),
    };
    Ok(FwkOutcome { tour, bound_history: history, rounds })
}

#[derive(Clone, Copy)]
struct Rec {
    mask: u64,
    end: usize,
    value: Cost,
    parent: u32,
    rest_row: Cost,
    rest_col: Cost,
}

/// Layered expansion from `root`; returns whether `best` changed.
fn search_root(
    m: &CostMatrix,
    root: usize,
    u0: Cost,
    best: &mut Option<Tour>,
    rowmin: &[Cost],
    colmin: &[Cost],
    layer_records: &mut [usize],
) -> bool {
    let n = m.n();
    let nn = n as i128;
    let total_row: Cost = rowmin.iter().sum();
    let total_col: Cost = colmin.iter().sum();
    let mut layers: Vec<Vec<Rec>> = vec![vec![Rec {
        mask: 1 << root,
        end: root,
        value: 0,
        parent: u32::MAX,
        rest_row: total_row - rowmin[root],
        rest_col: total_col - colmin[root],
    }]];
    let mut changed = false;
    // Strict while the incumbent is t0; afterwards ties are kept so that the
    // smallest tour of the best value wins regardless of search order.
    let limit = |best: &Option<Tour>| best.as_ref().map(|b| b.value(m)).filter(|&v| v < u0);
    for k in 1..n {
        let cur = layers.last().expect("nonempty");
        if cur.is_empty() {
            break;
        }
        let bound = limit(best);
        let keep = |value: Cost, arcs: usize| -> bool {
            let lhs = value as i128 * nn;
            match bound {
                None => lhs < u0 as i128 * arcs as i128,
                Some(b) => lhs <= b as i128 * arcs as i128,
            }
        };
        let within = |lb: Cost| match bound {
            None => lb < u0,
            Some(b) => lb <= b,
        };
        let children: Vec<Vec<Rec>> = cur
            .par_iter()
            .enumerate()
            .map(|(pi, r)| {
                let mut out = Vec::new();
                for w in 0..n {
                    if r.mask >> w & 1 == 1 {
                        continue;
                    }
                    let value = r.value + m.cost(r.end, w);
                    if !keep(value, k) {
                        continue;
                    }
                    let rest_row = r.rest_row - rowmin[w];
                    let rest_col = r.rest_col - colmin[w];
                    let lb = value + (rest_row + rowmin[w]).max(rest_col + colmin[root]);
                    if !within(lb) {
                        continue;
                    }
                    out.push(Rec { mask: r.mask | 1 << w, end: w, value, parent: pi as u32, rest_row, rest_col });
                }
                out
            })
            .collect();
        if k == n - 1 {
            for r in children.into_iter().flatten() {
                let total = r.value + m.cost(r.end, root);
                if !within(total) {
                    continue;
                }
                let mut order = vec![r.end];
                let mut p = r.parent;
                for layer in layers.iter().rev() {
                    let rec = layer[p as usize];
                    order.push(rec.end);
                    p = rec.parent;
                }
                order.reverse();
                let t = Tour::new(order).expect("layers visit every vertex once");
                let better = best.as_ref().is_none_or(|b| tour_key(m, &t) < tour_key(m, b));
                if better {
                    *best = Some(t);
                    changed = true;
                }
            }
            break;
        }
        let mut index: HashMap<(u64, usize), usize> = HashMap::new();
        let mut next: Vec<Rec> = Vec::new();
        for r in children.into_iter().flatten() {
            match index.get(&(r.mask, r.end)) {
                Some(&i) => {
                    if r.value < next[i].value {
                        next[i] = r;
                    }
                }
                None => {
                    index.insert((r.mask, r.end), next.len());
                    next.push(r);
                }
            }
        }
        layer_records[k] += next.len();
        layers.push(next);
    }
    changed
}
