//! Best-first search for a min-cost cut set, then critical-cut filtering.
//!
//! A candidate is a prefix `s` of decisions over `g.cuttable` (true = cut).
//! Undecided edges are treated as cut when forming components, which makes
//! component sizes an optimistic bound: fixing further decisions can only
//! merge components or split wires, never shrink a component's qubit count.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::dqc::DqcTopology;
use crate::error::{Error, Result};
use crate::graph::{CutSet, Dsu, EdgeKind, InteractionGraph};
use crate::mapping::placement::estimate_remote;
use crate::reconstruct::overheads;

pub const DEFAULT_BUDGET: usize = 200_000;

/// Which overhead is compared right after the remote-gate estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostOrder {
    #[default]
    PostprocFirst,
    SamplingFirst,
}

impl FromStr for CostOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "postproc-first" | "postproc" => Ok(CostOrder::PostprocFirst),
            "sampling-first" | "sampling" => Ok(CostOrder::SamplingFirst),
            _ => Err(Error::Config(format!("unknown cost order '{s}'"))),
        }
    }
}

/// (remote gates, post-processing 4^k1·6^k2, sampling 16^k1'·9^k2, −depth)
/// where k1' discounts reused instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CostTuple {
    pub remote: u64,
    pub k1: usize,
    pub k2: usize,
    pub reused: usize,
    pub depth: usize,
}

fn cmp_power(a: (usize, usize), b: (usize, usize), base: (f64, f64)) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    // Distinct exponent pairs never give equal products for these bases.
    let la = a.0 as f64 * base.0.ln() + a.1 as f64 * base.1.ln();
    let lb = b.0 as f64 * base.0.ln() + b.1 as f64 * base.1.ln();
    la.partial_cmp(&lb).unwrap()
}

impl CostTuple {
    fn postproc(&self) -> (usize, usize) {
        (self.k1, self.k2)
    }

    fn sampling(&self) -> (usize, usize) {
        (self.k1.saturating_sub(self.reused), self.k2)
    }

    pub fn compare(&self, other: &CostTuple, order: CostOrder) -> Ordering {
        let post = cmp_power(self.postproc(), other.postproc(), (4.0, 6.0));
        let samp = cmp_power(self.sampling(), other.sampling(), (16.0, 9.0));
        let (second, third) = match order {
            CostOrder::PostprocFirst => (post, samp),
            CostOrder::SamplingFirst => (samp, post),
        };
        self.remote
            .cmp(&other.remote)
            .then(second)
            .then(third)
            .then(other.depth.cmp(&self.depth))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    pub budget: usize,
    pub order: CostOrder,
    /// Instances reusing another's results; discounts k1 in the sampling item.
    pub reused: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { budget: DEFAULT_BUDGET, order: CostOrder::default(), reused: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CutSolution {
    pub s: Vec<bool>,
    pub cuts: CutSet,
    pub cost: CostTuple,
    pub pops: usize,
    /// The budget ran out before the heap emptied.
    pub exhausted: bool,
}

#[derive(Debug, PartialEq, Eq)]
pub enum Prune {
    /// A component needs more qubits than the original circuit.
    TooManyQubits,
    /// Not better than the incumbent goal.
    Dominated,
    /// A component exceeds every QPU.
    Capacity,
}

struct Entry {
    cost: CostTuple,
    counter: u64,
    node: u32,
    order: CostOrder,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // BinaryHeap is a max-heap: invert so the cheapest, oldest entry pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.compare(&self.cost, self.order).then(other.counter.cmp(&self.counter))
    }
}

/// Per-graph tables used to evaluate decision prefixes.
struct Evaluator<'a> {
    g: &'a InteractionGraph,
    /// Cuttable position of each edge, if cuttable.
    pos: Vec<Option<usize>>,
    /// Edge entering each node along its qubit wire.
    wire_in: Vec<Option<usize>>,
    max_cap: usize,
}

impl<'a> Evaluator<'a> {
    fn new(g: &'a InteractionGraph, max_cap: usize) -> Self {
        let mut pos = vec![None; g.edges.len()];
        for (i, &e) in g.cuttable.iter().enumerate() {
            pos[e] = Some(i);
        }
        let mut wire_in = vec![None; g.nodes.len()];
        for e in &g.edges {
            if e.kind == EdgeKind::Wire {
                wire_in[e.b] = Some(e.id);
            }
        }
        Evaluator { g, pos, wire_in, max_cap }
    }

    /// Qubit count of each component under prefix `s`.
    fn component_qubits(&self, s: &[bool]) -> Vec<usize> {
        let g = self.g;
        let decided = |e: usize| self.pos[e].map(|p| if p < s.len() { Some(s[p]) } else { None });
        let mut dsu = Dsu::new(g.nodes.len());
        for e in &g.edges {
            match decided(e.id) {
                None | Some(Some(false)) => dsu.union(e.a, e.b),
                _ => {}
            }
        }
        let comps = dsu.labels();
        let mut keys: Vec<(usize, usize, usize)> = Vec::with_capacity(g.nodes.len());
        for nodes in &g.by_qubit {
            let mut seg = 0;
            for &n in nodes {
                if let Some(e) = self.wire_in[n] {
                    if decided(e) == Some(Some(true)) {
                        seg += 1;
                    }
                }
                keys.push((comps.of_node[n], g.nodes[n].qubit, seg));
            }
        }
        keys.sort_unstable();
        keys.dedup();
        let mut counts = vec![0; comps.count];
        for (c, _, _) in keys {
            counts[c] += 1;
        }
        counts
    }

    fn check(&self, s: &[bool]) -> Option<Prune> {
        let counts = self.component_qubits(s);
        if counts.iter().any(|&n| n > self.g.num_qubits) {
            return Some(Prune::TooManyQubits);
        }
        if counts.iter().any(|&n| n > self.max_cap) {
            return Some(Prune::Capacity);
        }
        None
    }
}

/// Discard test for a candidate prefix against the incumbent goal cost.
pub fn prune(
    s: &[bool],
    cost: &CostTuple,
    g: &InteractionGraph,
    t: &DqcTopology,
    best: Option<&CostTuple>,
    order: CostOrder,
) -> Option<Prune> {
    if let Some(b) = best {
        if cost.compare(b, order) != Ordering::Less {
            return Some(Prune::Dominated);
        }
    }
    Evaluator::new(g, t.max_capacity()).check(s)
}

fn cost_of(g: &InteractionGraph, s: &[bool], reused: usize) -> CostTuple {
    let (mut k1, mut k2) = (0, 0);
    for (i, &b) in s.iter().enumerate() {
        if b {
            match g.edges[g.cuttable[i]].kind {
                EdgeKind::Wire => k1 += 1,
                EdgeKind::Gate => k2 += 1,
            }
        }
    }
    // Capacity pruning runs at every depth, so every surviving candidate's
    // components already fit one QPU and need no remote gates.
    CostTuple { remote: 0, k1, k2, reused, depth: s.len() }
}

/// Best-first search over cut vectors. A goal decides every cuttable edge
/// and leaves components that each fit the largest QPU.
pub fn search_min_cost(g: &InteractionGraph, t: &DqcTopology, cfg: SearchConfig) -> Result<CutSolution> {
    let ev = Evaluator::new(g, t.max_capacity());
    let total = g.cuttable.len();
    // arena of (parent, decision); node 0 is the empty prefix
    let mut arena: Vec<(u32, bool)> = vec![(u32::MAX, false)];
    let prefix = |arena: &[(u32, bool)], mut n: u32| {
        let mut s = Vec::new();
        while n != 0 {
            let (p, b) = arena[n as usize];
            s.push(b);
            n = p;
        }
        s.reverse();
        s
    };
    let mut heap = BinaryHeap::new();
    let mut counter = 0u64;
    if ev.check(&[]).is_none() {
        heap.push(Entry { cost: cost_of(g, &[], cfg.reused), counter, node: 0, order: cfg.order });
        counter += 1;
    }
    let mut best: Option<(CostTuple, Vec<bool>)> = None;
    let mut pops = 0;
    let mut exhausted = false;
    while let Some(top) = heap.pop() {
        if pops >= cfg.budget {
            exhausted = true;
            break;
        }
        pops += 1;
        if let Some((b, _)) = &best {
            if top.cost.compare(b, cfg.order) != Ordering::Less {
                continue;
            }
        }
        let s = prefix(&arena, top.node);
        if s.len() == total {
            best = Some((top.cost, s));
            continue;
        }
        for bit in [false, true] {
            let mut child = s.clone();
            child.push(bit);
            let cost = cost_of(g, &child, cfg.reused);
            if let Some((b, _)) = &best {
                if cost.compare(b, cfg.order) != Ordering::Less {
                    continue;
                }
            }
            if ev.check(&child).is_some() {
                continue;
            }
            arena.push((top.node, bit));
            heap.push(Entry { cost, counter, node: (arena.len() - 1) as u32, order: cfg.order });
            counter += 1;
        }
    }
    match best {
        Some((cost, s)) => {
            let edges: Vec<usize> = s.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| g.cuttable[i]).collect();
            Ok(CutSolution { cuts: CutSet::from_edges(g, &edges), s, cost, pops, exhausted })
        }
        None if exhausted => Err(Error::BudgetExhausted { budget: cfg.budget }),
        None => Err(Error::Infeasible("no cut leaves every component within one QPU".into())),
    }
}

/// Remote gates needed to run the cut circuit: components that fit one QPU
/// need none; larger ones are placed with the cheaper initial-mapping
/// policy. Results are memoized per component shape.
pub struct RemoteEstimator<'a> {
    t: &'a DqcTopology,
    memo: RefCell<HashMap<(usize, Vec<(usize, usize)>), usize>>,
}

impl<'a> RemoteEstimator<'a> {
    pub fn new(t: &'a DqcTopology) -> Self {
        RemoteEstimator { t, memo: RefCell::new(HashMap::new()) }
    }

    /// `cut` flags edges by id.
    pub fn estimate(&self, g: &InteractionGraph, cut: &[bool]) -> Result<usize> {
        let comps = g.components_without(cut);
        let mut wire_cut_in = vec![false; g.nodes.len()];
        for e in g.edges.iter().filter(|e| e.kind == EdgeKind::Wire) {
            wire_cut_in[e.b] = cut[e.id];
        }
        let mut seg = vec![0usize; g.nodes.len()];
        for nodes in &g.by_qubit {
            let mut k = 0;
            for &n in nodes {
                k += wire_cut_in[n] as usize;
                seg[n] = k;
            }
        }
        let mut total = 0;
        for members in comps.members() {
            // wire segments in order of first appearance
            let mut label: HashMap<(usize, usize), usize> = HashMap::new();
            let mut ordered = members.clone();
            ordered.sort_by_key(|&n| (g.nodes[n].gate_seq, g.nodes[n].pos));
            for &n in &ordered {
                let next = label.len();
                label.entry((g.nodes[n].qubit, seg[n])).or_insert(next);
            }
            if label.len() <= self.t.max_capacity() {
                continue;
            }
            let mut pairs: Vec<(usize, usize, usize)> = g
                .edges
                .iter()
                .filter(|e| e.kind == EdgeKind::Gate && !cut[e.id] && comps.of_node[e.a] == comps.of_node[members[0]])
                .map(|e| {
                    let la = label[&(g.nodes[e.a].qubit, seg[e.a])];
                    let lb = label[&(g.nodes[e.b].qubit, seg[e.b])];
                    (e.gate_seq, la, lb)
                })
                .collect();
            pairs.sort_unstable();
            let key: (usize, Vec<(usize, usize)>) = (label.len(), pairs.iter().map(|&(_, a, b)| (a, b)).collect());
            if let Some(&v) = self.memo.borrow().get(&key) {
                total += v;
                continue;
            }
            let mut c = Circuit::new(key.0);
            for &(a, b) in &key.1 {
                c.cx(a, b);
            }
            let v = estimate_remote(&c, self.t)?;
            self.memo.borrow_mut().insert(key, v);
            total += v;
        }
        Ok(total)
    }

    pub fn estimate_with(&self, g: &InteractionGraph, edges: &[usize]) -> Result<usize> {
        let mut cut = vec![false; g.edges.len()];
        for &e in edges {
            cut[e] = true;
        }
        self.estimate(g, &cut)
    }
}

/// Free-function form of [`RemoteEstimator::estimate_with`].
pub fn estimate_remote_gates(g: &InteractionGraph, edges: &[usize], t: &DqcTopology) -> Result<usize> {
    RemoteEstimator::new(t).estimate_with(g, edges)
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalCuts {
    pub kept: CutSet,
    /// Remote gates with no cuts applied.
    pub baseline: usize,
    /// Edge ids of the input cuts, ascending.
    pub edges: Vec<usize>,
    /// Remote gates removed by each input cut applied alone.
    pub removed: Vec<i64>,
    pub average: f64,
}

/// Keeps the cuts whose stand-alone remote-gate reduction is at least the
/// average over all cuts (single pass).
pub fn filter_critical(g: &InteractionGraph, cuts: &CutSet, t: &DqcTopology) -> Result<CriticalCuts> {
    let est = RemoteEstimator::new(t);
    let edges = cuts.edge_ids();
    if edges.is_empty() {
        return Ok(CriticalCuts { kept: CutSet::default(), baseline: 0, edges, removed: vec![], average: 0.0 });
    }
    let baseline = est.estimate_with(g, &[])?;
    let mut removed = Vec::with_capacity(edges.len());
    for &e in &edges {
        removed.push(baseline as i64 - est.estimate_with(g, &[e])? as i64);
    }
    let sum: i64 = removed.iter().sum();
    let m = edges.len() as i64;
    // removed_i >= sum/m, compared exactly
    let keep: Vec<usize> = edges.iter().zip(&removed).filter(|(_, &r)| r * m >= sum).map(|(&e, _)| e).collect();
    Ok(CriticalCuts { kept: cuts.restrict(&keep), baseline, edges, removed, average: sum as f64 / m as f64 })
}

/// JSON form: wire cuts by (qubit, after_occurrence), gate cuts by seq.
pub fn cutset_json(cs: &CutSet, reused: usize) -> serde_json::Value {
    let o = overheads(cs.k1(), cs.k2(), reused);
    serde_json::json!({
        "wire_cuts": cs.wire_cuts.iter().map(|w| serde_json::json!({"qubit": w.qubit, "after_occurrence": w.after_occurrence})).collect::<Vec<_>>(),
        "gate_cuts": cs.gate_cuts.iter().map(|g| g.gate_seq).collect::<Vec<_>>(),
        "k1": cs.k1(),
        "k2": cs.k2(),
        "postproc": o.postproc.to_string(),
        "sampling": o.sampling.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::bench;
    use crate::dqc::preset;

    fn manila() -> DqcTopology {
        preset("manila-x20").unwrap()
    }

    fn run(c: &Circuit, t: &DqcTopology, order: CostOrder) -> CutSolution {
        let g = InteractionGraph::build(c).unwrap();
        search_min_cost(&g, t, SearchConfig { order, ..Default::default() }).unwrap()
    }

    #[test]
    fn cost_tuple_order() {
        let wire = CostTuple { remote: 0, k1: 1, k2: 0, reused: 0, depth: 5 };
        let gate = CostTuple { remote: 0, k1: 0, k2: 1, reused: 0, depth: 5 };
        assert_eq!(wire.compare(&gate, CostOrder::PostprocFirst), Ordering::Less);
        assert_eq!(wire.compare(&gate, CostOrder::SamplingFirst), Ordering::Greater);
        let deeper = CostTuple { depth: 6, ..wire };
        assert_eq!(deeper.compare(&wire, CostOrder::PostprocFirst), Ordering::Less);
        let reused = CostTuple { k1: 2, reused: 1, ..wire };
        assert_eq!(reused.sampling(), (1, 0));
        let remote = CostTuple { remote: 1, k1: 0, ..wire };
        assert_eq!(remote.compare(&gate, CostOrder::PostprocFirst), Ordering::Greater);
    }

    #[test]
    fn ghz4_single_cut_by_order() {
        // Both one-cut goals need no remote gates. Post-processing 4 < 6
        // picks the wire cut; sampling 9 < 16 picks the gate cut. The
        // deepest candidate wins ties, i.e. the last edge that still fits.
        let c = bench::ghz(4);
        let sol = run(&c, &manila(), CostOrder::PostprocFirst);
        assert_eq!((sol.cuts.k1(), sol.cuts.k2()), (1, 0));
        assert_eq!((sol.cuts.wire_cuts[0].qubit, sol.cuts.wire_cuts[0].after_occurrence), (2, 0));
        let sol = run(&c, &manila(), CostOrder::SamplingFirst);
        assert_eq!((sol.cuts.k1(), sol.cuts.k2()), (0, 1));
        assert_eq!(sol.cuts.gate_cuts[0].gate_seq, 3);
    }

    #[test]
    fn fitting_circuit_needs_no_cut() {
        let sol = run(&bench::ghz(3), &manila(), CostOrder::PostprocFirst);
        assert!(sol.cuts.is_empty());
    }

    #[test]
    fn prune_reasons() {
        let c = bench::ghz(5);
        let g = InteractionGraph::build(&c).unwrap();
        let t = manila();
        let all_false = vec![false; g.cuttable.len()];
        let cost = cost_of(&g, &all_false, 0);
        assert_eq!(prune(&all_false, &cost, &g, &t, None, CostOrder::PostprocFirst), Some(Prune::Capacity));
        let cheaper = CostTuple { depth: 100, ..cost };
        assert_eq!(prune(&[], &cost, &g, &t, Some(&cheaper), CostOrder::PostprocFirst), Some(Prune::Dominated));
        // cutting both wires of q1 in a 2-qubit circuit splits it into 3 segments
        let mut c = Circuit::new(2);
        c.cx(0, 1).cx(0, 1).cx(0, 1);
        let g = InteractionGraph::build(&c).unwrap();
        let s: Vec<bool> = g.cuttable.iter().map(|&e| g.edges[e].kind == EdgeKind::Wire && g.edges[e].qubit == 1).collect();
        let big = preset("toronto-x2").unwrap();
        let ev = Evaluator::new(&g, big.max_capacity());
        assert_eq!(ev.component_qubits(&s), vec![4]);
        assert_eq!(ev.check(&s), Some(Prune::TooManyQubits));
    }

    #[test]
    fn optimistic_counts_never_shrink() {
        let c = bench::qft_cx(4);
        let g = InteractionGraph::build(&c).unwrap();
        let ev = Evaluator::new(&g, 100);
        let mut s = Vec::new();
        let mut prev = 0;
        for i in 0..g.cuttable.len() {
            s.push(i % 3 == 0);
            let m = *ev.component_qubits(&s).iter().max().unwrap();
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn qft_remote_anchors() {
        let t = manila();
        let g = InteractionGraph::build(&bench::qft_cx(4)).unwrap();
        let est = RemoteEstimator::new(&t);
        assert_eq!(est.estimate_with(&g, &[]).unwrap(), 6);
        let singles: Vec<usize> = (0..g.edges.len()).map(|e| est.estimate_with(&g, &[e]).unwrap()).collect();
        assert_eq!(*singles.iter().min().unwrap(), 4);
        assert!(singles.iter().all(|&r| r >= 4));
    }

    #[test]
    fn filter_keeps_at_least_average() {
        let t = manila();
        let g = InteractionGraph::build(&bench::qft_cx(4)).unwrap();
        let sol = search_min_cost(&g, &t, SearchConfig { order: CostOrder::SamplingFirst, ..Default::default() }).unwrap();
        let crit = filter_critical(&g, &sol.cuts, &t).unwrap();
        assert!(!crit.kept.is_empty());
        for (e, r) in crit.edges.iter().zip(&crit.removed) {
            assert_eq!(crit.kept.edge_ids().contains(e), *r as f64 >= crit.average);
        }
    }

    #[test]
    fn single_cut_always_kept() {
        let t = manila();
        let g = InteractionGraph::build(&bench::ghz(4)).unwrap();
        let sol = search_min_cost(&g, &t, SearchConfig::default()).unwrap();
        let crit = filter_critical(&g, &sol.cuts, &t).unwrap();
        assert_eq!(crit.kept, sol.cuts);
        let empty = filter_critical(&g, &CutSet::default(), &t).unwrap();
        assert!(empty.kept.is_empty());
    }

    #[test]
    fn budget_exhaustion() {
        let g = InteractionGraph::build(&bench::ghz(12)).unwrap();
        let r = search_min_cost(&g, &manila(), SearchConfig { budget: 3, ..Default::default() });
        assert!(matches!(r, Err(Error::BudgetExhausted { budget: 3 })));
    }

    #[test]
    fn cutset_json_shape() {
        let g = InteractionGraph::build(&bench::ghz(4)).unwrap();
        let cs = CutSet::from_edges(&g, &[g.cuttable[0], g.cuttable[1]]);
        let v = cutset_json(&cs, 0);
        assert_eq!(v["k1"], 1);
        assert_eq!(v["k2"], 1);
        assert_eq!(v["postproc"], "24");
        assert_eq!(v["sampling"], "144");
    }
}
