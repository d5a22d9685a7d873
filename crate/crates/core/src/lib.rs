//! Traveling-salesman solving by derangement descent, cycle patching,
//! matching neighborhoods and average arc-value path search.
//!
//! Vertices are 0-based throughout the API; text output is 1-based.

pub mod aav;
pub mod cost;
pub mod descent;
pub mod error;
pub mod fixtures;
pub mod fwk;
mod ids;
pub mod matching;
pub mod oracle;
pub mod patching;
pub mod perm;
pub mod pipeline;
pub mod tour;
pub mod transform;

pub use aav::Aav;
pub use cost::{row_reduce, sorted_neighbors, Cost, CostMatrix, ReducedMatrix, SortedNeighbors};
pub use descent::{descend, find_negative_cycle, greedy_trial, DescentConfig, DescentStep, DescentTrace};
pub use error::{Error, ParseError, Result};
pub use patching::{default_beam, patch_pair, patch_plan, patch_to_cycle, weave_matchings, PatchPlan, PatchStep};
pub use perm::{compose, Permutation};
pub use pipeline::{solve, upperbound, Candidate, RefineRun, Solution, SolveConfig, SolveMode, UpperBound};
pub use tour::Tour;
pub use transform::{
    aav_determining_node, build_transform, build_transform_with_free_row, cycle_value, determining_vertex,
    CycleKind, TransformMatrix, WeightedCycle,
};
