//! Isomorphic sub-circuit search and reuse.
//!
//! A template is a connected set of two-qubit gates, grown greedily from a
//! random start gate while it still has at least two gate-disjoint labeled
//! matches in the interaction graph. Node labels carry the gate kind,
//! parameters, operand position and the single-qubit gates that travel
//! with the node (those before a qubit's first occurrence, and those
//! between an occurrence and the next one). Every node has at most one
//! gate partner and two wire neighbours, with typed and directed edges, so
//! a match is fixed once the root image is chosen; candidate roots are
//! filtered by label as in VF2.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{params_match, Circuit, GateKind, QubitId};
use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::qpd::ReusePlan;

pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ReuseConfig {
    pub restarts: usize,
    /// Instances that copy another instance's results. 0 disables reuse.
    pub reuse_count: usize,
    /// Largest qubit count an instance may have (largest QPU capacity).
    pub max_qubits: usize,
}

impl ReuseConfig {
    pub fn new(max_qubits: usize) -> Self {
        ReuseConfig { restarts: DEFAULT_RESTARTS, reuse_count: 0, max_qubits }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct NodeLabel {
    kind: GateKind,
    params: Vec<f64>,
    pos: usize,
    lead: usize,
    attached: Vec<(GateKind, Vec<f64>)>,
}

impl NodeLabel {
    fn matches(&self, o: &NodeLabel) -> bool {
        self.kind == o.kind
            && self.pos == o.pos
            && self.lead == o.lead
            && params_match(&self.params, &o.params)
            && self.attached.len() == o.attached.len()
            && self.attached.iter().zip(&o.attached).all(|(a, b)| a.0 == b.0 && params_match(&a.1, &b.1))
    }
}

/// A graph with node labels and navigation helpers.
struct Side<'a> {
    g: &'a InteractionGraph,
    labels: Vec<NodeLabel>,
    /// Single-qubit gate seqs attached to each node.
    attached: Vec<Vec<usize>>,
    gate_of_node: Vec<usize>,
}

impl<'a> Side<'a> {
    fn new(g: &'a InteractionGraph, c: &Circuit) -> Self {
        let n = g.nodes.len();
        let mut gate_of_node = vec![0; n];
        let mut by_seq = BTreeMap::new();
        for (i, &(a, b)) in g.gate_nodes.iter().enumerate() {
            gate_of_node[a] = i;
            gate_of_node[b] = i;
            by_seq.insert(g.gate_seqs[i], (a, b));
        }
        let mut attached = vec![Vec::new(); n];
        let mut lead = vec![0; n];
        let mut last: Vec<Option<usize>> = vec![None; c.num_qubits];
        let mut pending: Vec<Vec<usize>> = vec![Vec::new(); c.num_qubits];
        for gate in &c.gates {
            if let Some(&(a, b)) = by_seq.get(&gate.seq) {
                for node in [a, b] {
                    let q = g.nodes[node].qubit;
                    if last[q].is_none() {
                        lead[node] = pending[q].len();
                        attached[node] = std::mem::take(&mut pending[q]);
                    }
                    last[q] = Some(node);
                }
            } else if gate.qubits.len() == 1 {
                let q = gate.qubits[0];
                match last[q] {
                    Some(node) => attached[node].push(gate.seq),
                    None => pending[q].push(gate.seq),
                }
            }
        }
        let labels = (0..n)
            .map(|node| {
                let nd = g.nodes[node];
                let gate = c.gate_by_seq(nd.gate_seq).expect("graph built from this circuit");
                NodeLabel {
                    kind: gate.kind,
                    params: gate.params.clone(),
                    pos: nd.pos,
                    lead: lead[node],
                    attached: attached[node]
                        .iter()
                        .map(|&s| {
                            let g1 = c.gate_by_seq(s).expect("seq from this circuit");
                            (g1.kind, g1.params.clone())
                        })
                        .collect(),
                }
            })
            .collect();
        Side { g, labels, attached, gate_of_node }
    }

    fn partner(&self, n: usize) -> usize {
        let (a, b) = self.g.gate_nodes[self.gate_of_node[n]];
        if a == n {
            b
        } else {
            a
        }
    }

    fn next(&self, n: usize) -> Option<usize> {
        let nd = self.g.nodes[n];
        self.g.by_qubit[nd.qubit].get(nd.occurrence + 1).copied()
    }

    fn prev(&self, n: usize) -> Option<usize> {
        let nd = self.g.nodes[n];
        nd.occurrence.checked_sub(1).map(|o| self.g.by_qubit[nd.qubit][o])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Partner,
    Next,
    Prev,
}

/// Pattern nodes in BFS order with the step that reaches each one.
struct Pattern {
    nodes: Vec<usize>,
    steps: Vec<(usize, Step)>,
}

impl Pattern {
    /// BFS over the pattern nodes; `None` if they are not connected.
    fn new(side: &Side, set: &BTreeSet<usize>) -> Option<Pattern> {
        let root = *set.iter().next()?;
        let mut nodes = vec![root];
        let mut steps = vec![(0, Step::Partner)];
        let mut index = BTreeMap::from([(root, 0)]);
        let mut head = 0;
        while head < nodes.len() {
            let n = nodes[head];
            let cands = [(Some(side.partner(n)), Step::Partner), (side.next(n), Step::Next), (side.prev(n), Step::Prev)];
            for (m, step) in cands {
                if let Some(m) = m.filter(|m| set.contains(m)) {
                    if !index.contains_key(&m) {
                        index.insert(m, nodes.len());
                        nodes.push(m);
                        steps.push((head, step));
                    }
                }
            }
            head += 1;
        }
        (nodes.len() == set.len()).then_some(Pattern { nodes, steps })
    }

    /// Image of every pattern node when the root maps to `root`.
    fn match_at(&self, p: &Side, h: &Side, root: usize) -> Option<Vec<usize>> {
        let mut img = Vec::with_capacity(self.nodes.len());
        let mut used = BTreeSet::new();
        for (i, &pn) in self.nodes.iter().enumerate() {
            let hn = if i == 0 {
                root
            } else {
                let (j, step) = self.steps[i];
                match step {
                    Step::Partner => Some(h.partner(img[j])),
                    Step::Next => h.next(img[j]),
                    Step::Prev => h.prev(img[j]),
                }?
            };
            if !used.insert(hn) || !p.labels[pn].matches(&h.labels[hn]) {
                return None;
            }
            img.push(hn);
        }
        let at: BTreeMap<usize, usize> = self.nodes.iter().copied().zip(img.iter().copied()).collect();
        let mut qmap: BTreeMap<QubitId, QubitId> = BTreeMap::new();
        let mut qinv: BTreeMap<QubitId, QubitId> = BTreeMap::new();
        for (&pn, &hn) in &at {
            if let Some(&pm) = at.get(&p.partner(pn)) {
                if h.partner(hn) != pm {
                    return None;
                }
            }
            if let Some(pm) = p.next(pn).and_then(|m| at.get(&m)) {
                if h.next(hn) != Some(*pm) {
                    return None;
                }
            }
            let (pq, hq) = (p.g.nodes[pn].qubit, h.g.nodes[hn].qubit);
            if *qmap.entry(pq).or_insert(hq) != hq || *qinv.entry(hq).or_insert(pq) != pq {
                return None;
            }
        }
        Some(img)
    }
}

fn qubits_of(g: &InteractionGraph, nodes: &BTreeSet<usize>) -> usize {
    nodes.iter().map(|&n| g.nodes[n].qubit).collect::<BTreeSet<_>>().len()
}

/// Every qubit's nodes form one run of consecutive occurrences.
fn contiguous(g: &InteractionGraph, nodes: &BTreeSet<usize>) -> bool {
    let mut occ: BTreeMap<QubitId, Vec<usize>> = BTreeMap::new();
    for &n in nodes {
        occ.entry(g.nodes[n].qubit).or_default().push(g.nodes[n].occurrence);
    }
    occ.values().all(|v| v.last().unwrap() - v[0] + 1 == v.len())
}

fn nodes_of_gates(g: &InteractionGraph, gates: &BTreeSet<usize>) -> BTreeSet<usize> {
    gates.iter().flat_map(|&i| [g.gate_nodes[i].0, g.gate_nodes[i].1]).collect()
}

/// Gate-disjoint matches of `nodes`, greedily in order of the root image.
fn disjoint_matches(side: &Side, nodes: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
    let Some(pat) = Pattern::new(side, nodes) else {
        return Vec::new();
    };
    let root_label = &side.labels[pat.nodes[0]];
    let mut taken = vec![false; side.g.nodes.len()];
    let mut out = Vec::new();
    for root in 0..side.g.nodes.len() {
        if taken[root] || !root_label.matches(&side.labels[root]) {
            continue;
        }
        if let Some(img) = pat.match_at(side, side, root) {
            if img.iter().all(|&n| !taken[n]) {
                for &n in &img {
                    taken[n] = true;
                }
                out.push(img.into_iter().collect());
            }
        }
    }
    out
}

/// A template with its gate-disjoint instances.
#[derive(Clone, Debug, Default, Serialize)]
pub struct IsoBlock {
    pub template: Option<Circuit>,
    /// Node sets in the interaction graph.
    pub instances: Vec<BTreeSet<usize>>,
    /// Two-qubit gate seqs of each instance.
    pub instance_gates: Vec<BTreeSet<usize>>,
    pub boundary_edge_count: usize,
    pub restart: Option<usize>,
}

impl IsoBlock {
    pub fn is_empty(&self) -> bool {
        self.instances.len() < 2
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    /// Reuse plan with the last `n` instances copying results. An empty
    /// block silently disables reuse.
    pub fn reuse_plan(&self, n: usize) -> Result<ReusePlan> {
        if self.is_empty() {
            return Ok(ReusePlan::default());
        }
        if n >= self.instances.len() {
            return Err(Error::Config(format!(
                "reuse count {n} must be below the instance count {}",
                self.instances.len()
            )));
        }
        Ok(ReusePlan { instances: self.instance_gates.clone(), reuse_count: n })
    }

    pub fn summary(&self, reuse_count: usize) -> serde_json::Value {
        serde_json::json!({
            "template": self.template.as_ref().map(|t| t.gates.iter().map(|g| {
                serde_json::json!({"gate": g.kind.name(), "params": g.params, "qubits": g.qubits})
            }).collect::<Vec<_>>()),
            "instances": self.instances.len(),
            "boundary_edges": self.boundary_edge_count,
            "reuse_count": reuse_count,
        })
    }
}

fn boundary_edges(g: &InteractionGraph, instances: &[BTreeSet<usize>]) -> usize {
    instances
        .iter()
        .map(|inst| g.edges.iter().filter(|e| inst.contains(&e.a) != inst.contains(&e.b)).count())
        .sum()
}

/// Sub-circuit of one instance, qubits renamed by first use.
fn extract(side: &Side, c: &Circuit, nodes: &BTreeSet<usize>) -> Circuit {
    let mut seqs: BTreeSet<usize> = nodes.iter().map(|&n| side.g.nodes[n].gate_seq).collect();
    for &n in nodes {
        seqs.extend(side.attached[n].iter().copied());
    }
    let mut rename: BTreeMap<QubitId, QubitId> = BTreeMap::new();
    let mut gates = Vec::new();
    for s in seqs {
        let g = c.gate_by_seq(s).expect("seq from this circuit");
        let qs: Vec<QubitId> = g
            .qubits
            .iter()
            .map(|q| {
                let next = rename.len();
                *rename.entry(*q).or_insert(next)
            })
            .collect();
        gates.push((g.kind, g.params.clone(), qs));
    }
    let mut out = Circuit::new(rename.len());
    for (k, p, qs) in gates {
        out.add(k, &p, &qs);
    }
    out
}

/// One restart: grow a template from the gate of `start`.
fn grow(side: &Side, start: usize, max_qubits: usize) -> Option<Vec<BTreeSet<usize>>> {
    let g = side.g;
    let mut gates = BTreeSet::from([side.gate_of_node[start]]);
    let mut nodes = nodes_of_gates(g, &gates);
    if qubits_of(g, &nodes) > max_qubits {
        return None;
    }
    let mut matches = disjoint_matches(side, &nodes);
    if matches.len() < 2 {
        return None;
    }
    loop {
        let mut cands: BTreeSet<usize> = BTreeSet::new();
        for &n in &nodes {
            for m in [side.next(n), side.prev(n)].into_iter().flatten() {
                if !nodes.contains(&m) {
                    cands.insert(side.gate_of_node[m]);
                }
            }
        }
        let mut grown = false;
        for cand in cands {
            let mut ng = gates.clone();
            ng.insert(cand);
            let nn = nodes_of_gates(g, &ng);
            if qubits_of(g, &nn) > max_qubits || !contiguous(g, &nn) {
                continue;
            }
            let m = disjoint_matches(side, &nn);
            if m.len() >= 2 {
                gates = ng;
                nodes = nn;
                matches = m;
                grown = true;
                break;
            }
        }
        if !grown {
            return Some(matches);
        }
    }
}

/// Best block over `cfg.restarts` seeded restarts: the one with the fewest
/// boundary edges, ties to the lowest restart.
pub fn find_isomorphs(g: &InteractionGraph, c: &Circuit, cfg: &ReuseConfig, seed: u64) -> Result<IsoBlock> {
    if !g.supers.is_empty() {
        return Err(Error::Config("isomorph search needs an uncontracted graph".into()));
    }
    let side = Side::new(g, c);
    let starts: Vec<usize> = (0..cfg.restarts)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            rng.gen_range(0..g.nodes.len())
        })
        .collect();
    let found: Vec<Option<Vec<BTreeSet<usize>>>> = starts.par_iter().map(|&s| grow(&side, s, cfg.max_qubits)).collect();
    let best = found
        .into_iter()
        .enumerate()
        .filter_map(|(r, m)| m.map(|m| (boundary_edges(g, &m), r, m)))
        .min_by_key(|(b, r, _)| (*b, *r));
    let Some((boundary, restart, instances)) = best else {
        return Ok(IsoBlock::default());
    };
    let instance_gates = instances
        .iter()
        .map(|inst| inst.iter().map(|&n| g.nodes[n].gate_seq).collect())
        .collect();
    Ok(IsoBlock {
        template: Some(extract(&side, c, &instances[0])),
        instance_gates,
        boundary_edge_count: boundary,
        restart: Some(restart),
        instances,
    })
}

/// Labeled isomorphism of two sub-circuits: same kinds, operand roles,
/// parameters (within tolerance) and wiring, up to qubit relabeling.
pub fn label_match(a: &Circuit, b: &Circuit) -> bool {
    if a.num_qubits != b.num_qubits || a.gates.len() != b.gates.len() {
        return false;
    }
    let idle = |c: &Circuit| {
        let mut busy = vec![false; c.num_qubits];
        for g in c.gates.iter().filter(|g| g.is_two_qubit()) {
            busy[g.qubits[0]] = true;
            busy[g.qubits[1]] = true;
        }
        let mut lists: Vec<Vec<(GateKind, Vec<f64>)>> = (0..c.num_qubits)
            .filter(|&q| !busy[q])
            .map(|q| c.gates.iter().filter(|g| g.qubits == [q]).map(|g| (g.kind, g.params.clone())).collect())
            .collect();
        lists.sort_by_key(|l| l.iter().map(|(k, p)| format!("{}{:?}", k.name(), p)).collect::<Vec<_>>());
        lists
    };
    let (ia, ib) = (idle(a), idle(b));
    let same_idle = ia.len() == ib.len()
        && ia.iter().zip(&ib).all(|(x, y)| {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.0 == q.0 && params_match(&p.1, &q.1))
        });
    if !same_idle {
        return false;
    }
    match (InteractionGraph::build(a), InteractionGraph::build(b)) {
        (Ok(ga), Ok(gb)) => {
            if ga.nodes.len() != gb.nodes.len() {
                return false;
            }
            let (sa, sb) = (Side::new(&ga, a), Side::new(&gb, b));
            let comps = ga.components_without(&vec![false; ga.edges.len()]).members();
            let pats: Vec<Pattern> = comps
                .iter()
                .map(|m| Pattern::new(&sa, &m.iter().copied().collect()).expect("component is connected"))
                .collect();
            assign(&pats, &sa, &sb, &mut vec![false; gb.nodes.len()], &mut BTreeMap::new())
        }
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

/// Backtracking over components: each pattern component gets a disjoint
/// image, with a consistent qubit bijection across components.
fn assign(
    pats: &[Pattern],
    sa: &Side,
    sb: &Side,
    used: &mut Vec<bool>,
    qmap: &mut BTreeMap<QubitId, QubitId>,
) -> bool {
    let Some((pat, rest)) = pats.split_first() else {
        return true;
    };
    for root in 0..sb.g.nodes.len() {
        if used[root] {
            continue;
        }
        let Some(img) = pat.match_at(sa, sb, root) else {
            continue;
        };
        if img.iter().any(|&n| used[n]) {
            continue;
        }
        let mut added = Vec::new();
        let mut ok = true;
        for (&pn, &hn) in pat.nodes.iter().zip(&img) {
            let (pq, hq) = (sa.g.nodes[pn].qubit, sb.g.nodes[hn].qubit);
            match qmap.get(&pq) {
                Some(&x) if x != hq => ok = false,
                Some(_) => {}
                None => {
                    if qmap.values().any(|&x| x == hq) {
                        ok = false;
                    } else {
                        qmap.insert(pq, hq);
                        added.push(pq);
                    }
                }
            }
        }
        if ok {
            for &n in &img {
                used[n] = true;
            }
            if assign(rest, sa, sb, used, qmap) {
                return true;
            }
            for &n in &img {
                used[n] = false;
            }
        }
        for q in added {
            qmap.remove(&q);
        }
    }
    false
}

/// One super node per instance.
pub fn contract_isomorphs(g: &InteractionGraph, block: &IsoBlock) -> Result<InteractionGraph> {
    if block.is_empty() {
        return Ok(g.clone());
    }
    block.instances.iter().try_fold(g.clone(), |acc, inst| acc.contract(inst))
}

/// Settings for a sub-circuit with `w_in` prepared and `w_out` measured cut
/// wires: four preparations and three measurement bases (I runs as Z).
pub fn variant_count(w_in: u32, w_out: u32) -> BigUint {
    BigUint::from(4u32).pow(w_in) * BigUint::from(3u32).pow(w_out)
}

/// Instance variants actually executed when `reuse_count` of `instances`
/// copies reuse another instance's results.
pub fn executed_instance_variants(instances: usize, reuse_count: usize, w_in: u32, w_out: u32) -> BigUint {
    let run = instances - reuse_count.min(instances.saturating_sub(1));
    BigUint::from(run) * variant_count(w_in, w_out)
}
