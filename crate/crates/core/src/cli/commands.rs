//! The `cut`, `map` and `run` pipelines.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::circuit::Circuit;
use crate::dqc::DqcTopology;
use crate::error::Result;
use crate::graph::{CutSet, InteractionGraph};
use crate::hemicut::{cutset_json, filter_critical, search_min_cost, SearchConfig};
use crate::iso::{contract_isomorphs, find_isomorphs, ReuseConfig};
use crate::mapping::choose_policy;
use crate::qpd::{CutCircuit, ReusePlan, DEFAULT_VARIANT_CAP};
use crate::reconstruct::{error_report, ground_truth, overheads, reconstruct};
use crate::sim::DEFAULT_BRANCH_CAP;

use super::config::RunConfig;
use super::report::{CutReport, InputSummary, JobMapping, MappingReport, Report, TopologySummary, SCHEMA_VERSION};

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        *self.0.entry(stage.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64() * 1e3;
        out
    }
}

fn base_report(command: &str, cfg: &RunConfig, c: &Circuit, t: &DqcTopology) -> Report {
    Report {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        seed: cfg.seed,
        input: InputSummary {
            name: cfg.input_name(),
            num_qubits: c.num_qubits,
            gates: c.gates.len(),
            two_qubit_gates: c.two_qubit_gates().len(),
            observable: c.observable_or_all_z().to_string(),
        },
        topology: TopologySummary {
            name: t.name.clone(),
            qpus: t.qpus.len(),
            data_per_qpu: t.qpus.iter().map(|q| q.capacity()).collect(),
        },
        cut: None,
        iso: None,
        mapping: None,
        reconstruction: None,
        result: None,
        timings_ms: BTreeMap::new(),
    }
}

fn load(cfg: &RunConfig, timer: &mut Timer) -> Result<(Circuit, DqcTopology)> {
    cfg.validate()?;
    timer.time("load", || Ok((cfg.circuit()?, cfg.topology()?)))
}

struct CutOutcome {
    report: CutReport,
    iso: Option<serde_json::Value>,
    kept: CutSet,
    plan: ReusePlan,
}

fn cut_stage(cfg: &RunConfig, c: &Circuit, t: &DqcTopology, timer: &mut Timer) -> Result<CutOutcome> {
    let g = timer.time("graph", || InteractionGraph::build(c))?;
    let (g, plan, iso) = if cfg.reuse {
        timer.time("iso", || {
            let rc = ReuseConfig { restarts: cfg.restarts, reuse_count: cfg.reuse_count.unwrap_or(0), max_qubits: t.max_capacity() };
            let block = find_isomorphs(&g, c, &rc, cfg.seed)?;
            let n = cfg.reuse_count.unwrap_or(block.len().saturating_sub(1));
            let plan = block.reuse_plan(n)?;
            let summary = block.summary(plan.reuse_count);
            Ok((contract_isomorphs(&g, &block)?, plan, Some(summary)))
        })?
    } else {
        (g, ReusePlan::default(), None)
    };
    if let Some(path) = &cfg.dump_graph {
        std::fs::write(path, g.to_dot())?;
    }
    let sc = SearchConfig { budget: cfg.budget, order: cfg.cost_order, reused: plan.reuse_count };
    let sol = timer.time("search", || search_min_cost(&g, t, sc))?;
    let crit = timer.time("filter", || filter_critical(&g, &sol.cuts, t))?;
    let report = CutReport {
        lq: cutset_json(&sol.cuts, plan.reuse_count),
        hemicut: cutset_json(&crit.kept, plan.reuse_count),
        cost: sol.cost,
        baseline_remote: crit.baseline,
        marginals: crit.removed.clone(),
        average: crit.average,
        pops: sol.pops,
        budget_exhausted: sol.exhausted,
    };
    Ok(CutOutcome { report, iso, kept: crit.kept, plan })
}

/// Maps and routes each job independently with the adaptive policy.
fn map_jobs(jobs: &[Circuit], t: &DqcTopology, keep_routed: bool) -> Result<MappingReport> {
    let mut out = MappingReport { swaps: 0, epr_pairs: 0, depth: 0, jobs: Vec::new(), routed: None };
    for job in jobs {
        let pc = choose_policy(job, t)?;
        let r = &pc.routed;
        out.swaps += r.swaps;
        out.epr_pairs += r.epr_pairs;
        out.depth = out.depth.max(r.depth);
        out.jobs.push(JobMapping {
            qubits: job.num_qubits,
            policy: pc.policy,
            hotness_epr: pc.hotness_epr,
            weakness_epr: pc.weakness_epr,
            swaps: r.swaps,
            remote_swaps: r.remote_swaps,
            remote_gates: r.remote_gates,
            epr_pairs: r.epr_pairs,
            depth: r.depth,
        });
        if keep_routed && jobs.len() == 1 {
            out.routed = Some(r.to_json()?);
        }
    }
    Ok(out)
}

/// Sub-circuits of the first nonzero variant; every variant shares their
/// shape, differing only in the cut-site operations.
fn cut_jobs(c: &Circuit, cuts: &CutSet) -> Result<Vec<Circuit>> {
    let cc = CutCircuit::build(c, cuts)?;
    let choice = cc.nonzero_choices().into_iter().next().unwrap_or_default();
    Ok(cc.instantiate(&choice).components().into_iter().map(|comp| comp.circuit).collect())
}

pub fn cmd_cut(cfg: &RunConfig) -> Result<Report> {
    let mut timer = Timer(BTreeMap::new());
    let (c, t) = load(cfg, &mut timer)?;
    let mut rep = base_report("cut", cfg, &c, &t);
    let cut = cut_stage(cfg, &c, &t, &mut timer)?;
    rep.cut = Some(cut.report);
    rep.iso = cut.iso;
    rep.timings_ms = timer.0;
    Ok(rep)
}

pub fn cmd_map(cfg: &RunConfig) -> Result<Report> {
    let mut timer = Timer(BTreeMap::new());
    let (c, t) = load(cfg, &mut timer)?;
    let mut rep = base_report("map", cfg, &c, &t);
    rep.mapping = Some(timer.time("map", || map_jobs(std::slice::from_ref(&c), &t, true))?);
    rep.timings_ms = timer.0;
    Ok(rep)
}

pub fn cmd_run(cfg: &RunConfig) -> Result<Report> {
    let mut timer = Timer(BTreeMap::new());
    let (c, t) = load(cfg, &mut timer)?;
    let mut rep = base_report("run", cfg, &c, &t);
    let (kept, plan) = if cfg.no_cut {
        (CutSet::default(), ReusePlan::default())
    } else {
        let cut = cut_stage(cfg, &c, &t, &mut timer)?;
        rep.cut = Some(cut.report);
        rep.iso = cut.iso;
        (cut.kept, cut.plan)
    };
    rep.mapping = Some(timer.time("map", || {
        let jobs = if kept.is_empty() { vec![c.clone()] } else { cut_jobs(&c, &kept)? };
        map_jobs(&jobs, &t, false)
    })?);
    let rec = timer.time("simulate", || reconstruct(&c, &kept, &plan, cfg.mode, DEFAULT_BRANCH_CAP, DEFAULT_VARIANT_CAP))?;
    let truth = timer.time("ground_truth", || ground_truth(&c))?;
    let oh = overheads(kept.k1(), kept.k2(), plan.reuse_count);
    rep.result = Some(error_report(c.observable_or_all_z().to_string(), rec.value, truth, oh));
    rep.reconstruction = Some(rec);
    rep.timings_ms = timer.0;
    Ok(rep)
}
