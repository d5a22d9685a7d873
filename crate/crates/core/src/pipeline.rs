//! Assignment lower bound followed by patching into an upper-bound tour.

use serde::Serialize;

use crate::cost::{Cost, CostMatrix};
use crate::descent::{descend, DescentConfig, DescentTrace};
use crate::error::{Error, Result};
use crate::fwk::{default_beam_width, fwk_exact, fwk_heuristic1, fwk_heuristic2, RoundStat};
use crate::matching::{refine, RefineConfig, RefineStep};
use crate::patching::{default_beam, patch_plan, PatchPlan};
use crate::perm::Permutation;
use crate::tour::Tour;

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    /// `free` or `no-two-cycles`.
    pub descent: &'static str,
    pub derangement_value: Cost,
    pub cycles: usize,
    pub patch: PatchPlan,
    pub tour_value: Cost,
}

#[derive(Debug, Clone)]
pub struct UpperBound {
    /// Optimal derangement, a lower bound on every tour.
    pub assignment: DescentTrace,
    pub candidates: Vec<Candidate>,
    pub tour: Tour,
}

impl UpperBound {
    pub fn value(&self, m: &CostMatrix) -> Cost {
        self.tour.value(m)
    }
}

fn candidate(m: &CostMatrix, descent: &'static str, d: &Permutation, value: Cost, beam: Option<usize>) -> Result<Candidate> {
    let width = beam.unwrap_or_else(|| default_beam(m.n(), d.cycles().len()));
    let patch = patch_plan(m, d, Some(width))?;
    let tour_value = patch.tour.value(m);
    if tour_value != value + patch.total_delta {
        return Err(Error::Invariant(format!("patch accounting: {value} + {} != {tour_value}", patch.total_delta)));
    }
    Ok(Candidate { descent, derangement_value: value, cycles: d.cycles().len(), patch, tour_value })
}

/// Descends from the rotation `1 -> 2 -> ... -> n -> 1` and patches the
/// resulting cycles. On symmetric instances a second descent that refuses
/// two-cycles is patched as well and the cheaper tour wins. `beam` of `None`
/// picks the width from the cycle count.
pub fn upperbound(m: &CostMatrix, beam: Option<usize>) -> Result<UpperBound> {
    let n = m.n();
    if n < 2 {
        return Err(Error::Invariant("need at least two vertices".into()));
    }
    let d0 = Permutation::rotation(n);
    let free = descend(m, &d0, &DescentConfig::new(n))?;
    let mut candidates = vec![candidate(m, "free", &free.derangement, free.value, beam)?];
    if m.is_symmetric() && n > 3 {
        let tied = descend(m, &d0, &DescentConfig::symmetric(n))?;
        if tied.value < free.value {
            return Err(Error::Invariant("constrained descent beat the free one".into()));
        }
        candidates.push(candidate(m, "no-two-cycles", &tied.derangement, tied.value, beam)?);
    }
    let best = candidates
        .iter()
        .min_by_key(|c| (c.tour_value, c.patch.tour.rotated_to(0)))
        .expect("at least one candidate");
    let tour = best.patch.tour.clone();
    Ok(UpperBound { assignment: free, candidates, tour })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// Matching-neighborhood refinement of every upper-bound candidate.
    Matching,
    Exact,
    H1,
    H2,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub mode: SolveMode,
    /// Patch beam; `None` picks it from the cycle count.
    pub beam: Option<usize>,
    /// Paths kept per column by `h1`; `None` keeps all.
    pub k: Option<usize>,
    /// `h2` beam width; `None` uses the default width.
    pub width: Option<usize>,
    /// Matching mode also searches whole neighborhoods before stopping.
    pub exhaustive: bool,
}

impl SolveConfig {
    pub fn new(mode: SolveMode) -> Self {
        SolveConfig { mode, beam: None, k: Some(10), width: None, exhaustive: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineRun {
    pub start_value: Cost,
    pub value: Cost,
    pub fixpoint: bool,
    pub steps: Vec<RefineStep>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub upper: UpperBound,
    /// One run per upper-bound candidate, matching mode only.
    pub refine_runs: Vec<RefineRun>,
    /// Exact mode only.
    pub bound_history: Vec<Cost>,
    pub rounds: Vec<RoundStat>,
    pub tour: Tour,
}

/// Upper bound, then the improvement stage picked by `cfg.mode`.
pub fn solve(m: &CostMatrix, cfg: &SolveConfig) -> Result<Solution> {
    let n = m.n();
    let upper = upperbound(m, cfg.beam)?;
    let mut sol =
        Solution { tour: upper.tour.clone(), upper, refine_runs: Vec::new(), bound_history: Vec::new(), rounds: Vec::new() };
    match cfg.mode {
        SolveMode::Matching => {
            let rcfg = if cfg.exhaustive { RefineConfig::exhaustive(n) } else { RefineConfig::default() };
            let mut best: Option<Tour> = None;
            for c in &sol.upper.candidates {
                let trace = refine(m, &c.patch.tour, &rcfg)?;
                let value = trace.tour.value(m);
                sol.refine_runs.push(RefineRun {
                    start_value: c.tour_value,
                    value,
                    fixpoint: trace.fixpoint,
                    steps: trace.steps,
                });
                if best.as_ref().is_none_or(|b| (value, trace.tour.rotated_to(0)) < (b.value(m), b.rotated_to(0))) {
                    best = Some(trace.tour);
                }
            }
            let best = best.expect("at least one candidate");
            if best.value(m) < sol.tour.value(m) {
                sol.tour = best;
            }
        }
        SolveMode::Exact => {
            let out = fwk_exact(m, &sol.tour)?;
            sol.bound_history = out.bound_history;
            sol.rounds = out.rounds;
            sol.tour = out.tour;
        }
        SolveMode::H1 => sol.tour = fwk_heuristic1(m, &sol.tour, cfg.k)?,
        SolveMode::H2 => {
            let width = cfg.width.unwrap_or_else(|| default_beam_width(n));
            sol.tour = fwk_heuristic2(m, &sol.tour, Some(width))?;
        }
    }
    if sol.tour.value(m) > sol.upper.value(m) {
        return Err(Error::Invariant("improvement stage returned a worse tour".into()));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example_eight_is_already_a_tour() {
        let m = fixtures::ex8();
        let ub = upperbound(&m, None).unwrap();
        assert_eq!(ub.assignment.value, 102);
        assert_eq!(ub.value(&m), 102);
    }

    #[test]
    fn sandwich_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for case in 0..60 {
            let n = rng.gen_range(4..=9);
            let m = CostMatrix::random(n, case % 2 == 0, 100, rng.gen());
            let ub = upperbound(&m, None).unwrap();
            let opt = oracle::brute_force_tour(&m).unwrap().value;
            assert_eq!(ub.assignment.value, oracle::assignment_optimal(&m).unwrap().value);
            assert!(ub.assignment.value <= opt && opt <= ub.value(&m), "case {case}");
        }
    }

    #[test]
    fn every_mode_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for case in 0..20 {
            let n = rng.gen_range(5..=9);
            let m = CostMatrix::random(n, case % 2 == 1, 100, rng.gen());
            let opt = oracle::brute_force_tour(&m).unwrap().value;
            for mode in [SolveMode::Matching, SolveMode::Exact, SolveMode::H1, SolveMode::H2] {
                let sol = solve(&m, &SolveConfig::new(mode)).unwrap();
                let v = sol.tour.value(&m);
                assert!(opt <= v && v <= sol.upper.value(&m));
                if mode == SolveMode::Exact {
                    assert_eq!(v, opt);
                }
            }
            let mut cfg = SolveConfig::new(SolveMode::Matching);
            cfg.exhaustive = true;
            assert_eq!(solve(&m, &cfg).unwrap().tour.value(&m), opt, "case {case}");
        }
    }
}
