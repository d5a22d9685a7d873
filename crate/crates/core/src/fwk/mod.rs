//! Average arc-value path search.

mod exact;
mod heuristic;
mod store;

pub use exact::{fwk_exact, FwkOutcome, RoundStat};
pub use heuristic::{default_beam_width, fwk_heuristic1, fwk_heuristic2, pivot_length, BestTable};
pub use store::{can_replace, extend, fwk_pass, Inserted, PassOutcome, PathRecord, PathStore};
