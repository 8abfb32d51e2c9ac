//! Report schema. Bump [`SCHEMA_VERSION`] on any field change.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::hemicut::CostTuple;
use crate::mapping::Policy;
use crate::reconstruct::{ErrorReport, Reconstruction};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct InputSummary {
    pub name: String,
    pub num_qubits: usize,
    pub gates: usize,
    pub two_qubit_gates: usize,
    pub observable: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TopologySummary {
    pub name: String,
    pub qpus: usize,
    pub data_per_qpu: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CutReport {
    /// Min-cost independent solution before filtering.
    pub lq: serde_json::Value,
    /// Critical cuts kept by the filter.
    pub hemicut: serde_json::Value,
    pub cost: CostTuple,
    /// Remote gates with no cuts, then removed by each cut on its own.
    pub baseline_remote: usize,
    pub marginals: Vec<i64>,
    pub average: f64,
    pub pops: usize,
    pub budget_exhausted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct JobMapping {
    pub qubits: usize,
    pub policy: Policy,
    pub hotness_epr: u64,
    pub weakness_epr: u64,
    pub swaps: u64,
    pub remote_swaps: u64,
    pub remote_gates: u64,
    pub epr_pairs: u64,
    pub depth: u64,
}

/// Mapping of every executable job; totals sum swaps and EPR pairs and
/// take the deepest job.
#[derive(Clone, Debug, Serialize)]
pub struct MappingReport {
    pub swaps: u64,
    pub epr_pairs: u64,
    pub depth: u64,
    pub jobs: Vec<JobMapping>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub routed: Option<serde_json::Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub input: InputSummary,
    pub topology: TopologySummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cut: Option<CutReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iso: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mapping: Option<MappingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<Reconstruction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ErrorReport>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl Report {
    pub fn to_json(&self) -> crate::error::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
