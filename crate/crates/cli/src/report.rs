//! JSON run report. Costs are integers, aav values 6-decimal strings.

use std::collections::BTreeMap;

use gtsp_core::fwk::RoundStat;
use gtsp_core::{Candidate, Cost, CostMatrix, DescentStep, RefineRun, Tour};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub instance: String,
    pub n: usize,
    pub symmetric: bool,
    pub seed: Option<u64>,
    pub config: BTreeMap<&'static str, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<AssignmentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upperbound: Option<UpperboundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine: Option<Vec<RefineRun>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwk: Option<FwkReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<TourReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    /// Milliseconds per stage; present only with `--timings`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<&'static str, u128>>,
}

impl RunReport {
    pub fn new(command: &'static str, instance: String, m: &CostMatrix, seed: Option<u64>) -> Self {
        RunReport {
            command,
            instance,
            n: m.n(),
            symmetric: m.is_symmetric(),
            seed,
            config: BTreeMap::new(),
            assignment: None,
            upperbound: None,
            refine: None,
            fwk: None,
            solution: None,
            oracle: None,
            timings: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TourReport {
    /// 1-based, starting at vertex 1.
    pub tour: Vec<usize>,
    pub value: Cost,
    pub aav: String,
}

impl TourReport {
    pub fn new(m: &CostMatrix, t: &Tour) -> Self {
        let tour = t.rotated_to(0).into_iter().map(|v| v + 1).collect();
        TourReport { tour, value: t.value(m), aav: t.aav(m).to_decimal_string(6) }
    }
}

#[derive(Debug, Serialize)]
pub struct AssignmentReport {
    pub derangement: String,
    pub value: Cost,
    pub steps: Vec<DescentStep>,
}

#[derive(Debug, Serialize)]
pub struct UpperboundReport {
    pub candidates: Vec<Candidate>,
    #[serde(flatten)]
    pub best: TourReport,
}

#[derive(Debug, Serialize)]
pub struct FwkReport {
    pub bound_history: Vec<Cost>,
    pub rounds: Vec<RoundStat>,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub method: &'static str,
    pub value: Cost,
    /// Tour or derangement witness, 1-based.
    pub witness: String,
}
