//! Recombination of variant results into the uncut expectation value,
//! overhead accounting and error reporting.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::graph::CutSet;
use crate::qpd::{check_cap, fingerprint, CutCircuit, ReusePlan};
use crate::sim::{branch_eval, branch_sample, expectation, simulate, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EvalMode {
    Exact,
    Shots { shots: usize, seed: u64 },
}

/// Exact big integer below 2^512, log10 always.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BigCount {
    pub exact: Option<String>,
    pub log10: f64,
}

impl BigCount {
    pub fn new(v: &BigUint) -> Self {
        let exact = (v.bits() < 512).then(|| v.to_string());
        BigCount { exact, log10: log10_big(v) }
    }
}

pub fn log10_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 52 {
        return (v.iter_u64_digits().next().unwrap_or(0) as f64).log10();
    }
    // leading 52 bits plus the dropped exponent
    let shift = bits - 52;
    let top = (v >> shift).iter_u64_digits().next().unwrap_or(0) as f64;
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Overheads {
    pub k1: usize,
    pub k2: usize,
    /// Wire cuts whose sampling is shared with an isomorphic instance.
    pub reused: usize,
    #[serde(skip)]
    pub postproc: BigUint,
    #[serde(skip)]
    pub sampling: BigUint,
    #[serde(rename = "postproc")]
    pub postproc_repr: BigCount,
    #[serde(rename = "sampling")]
    pub sampling_repr: BigCount,
}

/// Post-processing 4^k1·6^k2 and sampling 16^max(k1−n,0)·9^k2 where `n`
/// instances reuse another instance's results.
pub fn overheads(k1: usize, k2: usize, reused: usize) -> Overheads {
    let postproc = BigUint::from(4u32).pow(k1 as u32) * BigUint::from(6u32).pow(k2 as u32);
    let sampling = BigUint::from(16u32).pow(k1.saturating_sub(reused) as u32) * BigUint::from(9u32).pow(k2 as u32);
    Overheads {
        k1,
        k2,
        reused,
        postproc_repr: BigCount::new(&postproc),
        sampling_repr: BigCount::new(&sampling),
        postproc,
        sampling,
    }
}

/// Σᵢ coeffᵢ · Πⱼ factorᵢⱼ, summed in input order.
pub fn reconstruct_expectation(terms: &[(f64, Vec<Option<f64>>)]) -> Result<f64> {
    let mut total = 0.0;
    for (i, (coeff, factors)) in terms.iter().enumerate() {
        let mut p = *coeff;
        for f in factors {
            p *= f.ok_or(Error::MissingResult(i))?;
        }
        total += p;
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct Reconstruction {
    pub value: f64,
    /// Nonzero-coefficient variants summed.
    pub terms: usize,
    pub postproc_terms: BigCount,
    /// Distinct executable settings of the whole cut circuit over every
    /// channel choice (I and Z measurements merged). Skipped above
    /// [`SETTINGS_LIMIT`] terms.
    pub executed_variants: Option<usize>,
    /// Component circuits executed, distinct per location unless shared.
    pub component_runs: usize,
    /// Component runs belonging to iso instances.
    pub instance_runs: usize,
    /// Component evaluations served from another instance's results.
    pub reused_lookups: usize,
    pub max_component_qubits: usize,
}

pub const SETTINGS_LIMIT: u64 = 1 << 16;

fn stable_hash(s: &str) -> u64 {
    let mut h = DefaultHasher::new();
    s.hash(&mut h);
    h.finish()
}

/// Builds all variants, evaluates each distinct component once and
/// recombines.
pub fn reconstruct(
    c: &Circuit,
    cuts: &CutSet,
    reuse: &ReusePlan,
    mode: EvalMode,
    branch_cap: usize,
    variant_cap: u64,
) -> Result<Reconstruction> {
    let cc = CutCircuit::build(c, cuts)?;
    check_cap(&cc, variant_cap)?;
    let sharing = reuse.reuse_count > 0;

    let mut value_keys: BTreeMap<String, Circuit> = BTreeMap::new();
    let mut terms_keys: Vec<(f64, Vec<String>)> = Vec::new();
    let executed_variants = (cc.term_count() <= BigUint::from(SETTINGS_LIMIT)).then(|| {
        cc.all_choices()
            .iter()
            .map(|ch| fingerprint(&cc.instantiate(ch).circuit, false, true))
            .collect::<BTreeSet<_>>()
            .len()
    });
    let mut runs = BTreeSet::new();
    let mut instance_runs = BTreeSet::new();
    let mut reused_lookups = 0;
    let mut max_q = 0;

    for choice in cc.nonzero_choices() {
        let v = cc.instantiate(&choice);
        let mut keys = Vec::new();
        for comp in v.components() {
            max_q = max_q.max(comp.circuit.num_qubits);
            if comp.circuit.num_qubits > MAX_QUBITS {
                return Err(Error::TooManyQubits { qubits: comp.circuit.num_qubits, max: MAX_QUBITS });
            }
            let instance = sharing && reuse.is_instance(&comp.origin_2q);
            let key = fingerprint(&comp.circuit, instance, false);
            // equal circuits at different locations are separate runs unless shared
            let run = match instance {
                true => fingerprint(&comp.circuit, true, true),
                false => format!("{:?}|{}", comp.origin_2q, fingerprint(&comp.circuit, false, true)),
            };
            if reuse.is_reused(&comp.origin_2q) && sharing {
                reused_lookups += 1;
            } else {
                if reuse.is_instance(&comp.origin_2q) {
                    instance_runs.insert(run.clone());
                }
                runs.insert(run);
            }
            value_keys.entry(key.clone()).or_insert(comp.circuit);
            keys.push(key);
        }
        terms_keys.push((v.coefficient, keys));
    }

    let entries: Vec<(&String, &Circuit)> = value_keys.iter().collect();
    let values: Vec<Result<f64>> = entries
        .par_iter()
        .map(|(key, circ)| {
            let obs = circ.observable_or_all_z();
            match mode {
                EvalMode::Exact => branch_eval(circ, &obs, branch_cap),
                EvalMode::Shots { shots, seed } => {
                    branch_sample(circ, &obs, branch_cap, shots, seed ^ stable_hash(key)).map(|r| r.value)
                }
            }
        })
        .collect();
    let mut table = BTreeMap::new();
    for ((key, _), v) in entries.into_iter().zip(values) {
        table.insert(key.clone(), v?);
    }
    let terms: Vec<(f64, Vec<Option<f64>>)> = terms_keys
        .into_iter()
        .map(|(coef, keys)| (coef, keys.iter().map(|k| table.get(k).copied()).collect()))
        .collect();
    let value = reconstruct_expectation(&terms)?;
    Ok(Reconstruction {
        value,
        terms: terms.len(),
        postproc_terms: BigCount::new(&cc.postproc_count()),
        executed_variants,
        component_runs: runs.len(),
        instance_runs: instance_runs.len(),
        reused_lookups,
        max_component_qubits: max_q,
    })
}

/// Uncut ⟨O⟩ when the circuit is small enough to simulate.
pub fn ground_truth(c: &Circuit) -> Result<Option<f64>> {
    if c.num_qubits > MAX_QUBITS {
        return Ok(None);
    }
    let sv = simulate(c)?;
    Ok(Some(expectation(&sv, &c.observable_or_all_z())?))
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    pub observable: String,
    pub expectation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absolute_error: Option<f64>,
    pub overheads: Overheads,
}

pub fn error_report(observable: String, expectation: f64, ground_truth: Option<f64>, overheads: Overheads) -> ErrorReport {
    ErrorReport {
        observable,
        expectation,
        absolute_error: ground_truth.map(|g| (expectation - g).abs()),
        ground_truth,
        overheads,
    }
}
