//! Interaction graph: one node per (qubit, two-qubit-gate occurrence),
//! GATE edges between the operands of a gate and WIRE edges between
//! consecutive occurrences of a qubit.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::circuit::{Circuit, QubitId};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct IgNode {
    pub qubit: QubitId,
    pub occurrence: usize,
    pub gate_seq: usize,
    /// Operand position inside the gate.
    pub pos: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EdgeKind {
    Gate,
    Wire,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IgEdge {
    pub id: usize,
    pub kind: EdgeKind,
    pub a: usize,
    pub b: usize,
    /// GATE: the gate's seq. WIRE: seq of the later occurrence's gate.
    pub gate_seq: usize,
    /// WIRE: the wire's qubit. GATE: the lower operand qubit.
    pub qubit: QubitId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuperNode {
    pub id: usize,
    pub members: BTreeSet<usize>,
}

#[derive(Clone, Debug)]
pub struct InteractionGraph {
    pub num_qubits: usize,
    pub nodes: Vec<IgNode>,
    /// All edges in canonical order; `edges[i].id == i`.
    pub edges: Vec<IgEdge>,
    /// Edge ids the search may cut, in canonical order.
    pub cuttable: Vec<usize>,
    pub supers: Vec<SuperNode>,
    pub super_of: Vec<Option<usize>>,
    /// Node index per qubit, by occurrence.
    pub by_qubit: Vec<Vec<usize>>,
    /// Node pair per two-qubit gate, keyed by position in the 2q gate list.
    pub gate_nodes: Vec<(usize, usize)>,
    pub gate_seqs: Vec<usize>,
}

/// Connected components after cutting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    pub of_node: Vec<usize>,
    pub count: usize,
}

impl Components {
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.count];
        for (n, &c) in self.of_node.iter().enumerate() {
            m[c].push(n);
        }
        m
    }
}

pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Dense component labels in order of first node.
    pub fn labels(&mut self) -> Components {
        let n = self.parent.len();
        let mut map = vec![usize::MAX; n];
        let mut of_node = vec![0; n];
        let mut count = 0;
        for i in 0..n {
            let r = self.find(i);
            if map[r] == usize::MAX {
                map[r] = count;
                count += 1;
            }
            of_node[i] = map[r];
        }
        Components { of_node, count }
    }
}

impl InteractionGraph {
    pub fn build(c: &Circuit) -> Result<Self> {
        let mut nodes: Vec<IgNode> = Vec::new();
        let mut by_qubit: Vec<Vec<usize>> = vec![Vec::new(); c.num_qubits];
        let mut gate_nodes = Vec::new();
        let mut gate_seqs = Vec::new();
        // (sort key, edge) pairs
        let mut raw: Vec<((usize, EdgeKind, QubitId), EdgeKind, usize, usize, usize, QubitId)> = Vec::new();
        for g in c.gates.iter().filter(|g| g.is_two_qubit()) {
            let mut pair = [0usize; 2];
            for (pos, &q) in g.qubits.iter().enumerate() {
                let idx = nodes.len();
                nodes.push(IgNode { qubit: q, occurrence: by_qubit[q].len(), gate_seq: g.seq, pos });
                if let Some(&prev) = by_qubit[q].last() {
                    let prev_seq = nodes[prev].gate_seq;
                    raw.push(((prev_seq, EdgeKind::Wire, q), EdgeKind::Wire, prev, idx, g.seq, q));
                }
                by_qubit[q].push(idx);
                pair[pos] = idx;
            }
            let lo = g.qubits[0].min(g.qubits[1]);
            raw.push(((g.seq, EdgeKind::Gate, lo), EdgeKind::Gate, pair[0], pair[1], g.seq, lo));
            gate_nodes.push((pair[0], pair[1]));
            gate_seqs.push(g.seq);
        }
        if gate_nodes.is_empty() {
            return Err(Error::NothingToCut);
        }
        raw.sort_by_key(|r| r.0);
        let edges: Vec<IgEdge> = raw
            .into_iter()
            .enumerate()
            .map(|(id, (_, kind, a, b, gate_seq, qubit))| IgEdge { id, kind, a, b, gate_seq, qubit })
            .collect();
        let n = nodes.len();
        Ok(InteractionGraph {
            num_qubits: c.num_qubits,
            cuttable: (0..edges.len()).collect(),
            super_of: vec![None; n],
            supers: Vec::new(),
            nodes,
            edges,
            by_qubit,
            gate_nodes,
            gate_seqs,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    fn is_internal(&self, e: &IgEdge) -> bool {
        matches!((self.super_of[e.a], self.super_of[e.b]), (Some(x), Some(y)) if x == y)
    }

    /// Components after deleting cuttable edges whose decision is `true`.
    /// Edges beyond `s.len()` are undecided and kept.
    pub fn apply_cuts(&self, s: &[bool]) -> Components {
        let mut cut = vec![false; self.edges.len()];
        for (i, &b) in s.iter().enumerate() {
            if b {
                cut[self.cuttable[i]] = true;
            }
        }
        self.components_without(&cut)
    }

    /// Components after deleting the edges flagged in `cut` (by edge id).
    pub fn components_without(&self, cut: &[bool]) -> Components {
        let mut dsu = Dsu::new(self.nodes.len());
        for e in &self.edges {
            if !cut[e.id] {
                dsu.union(e.a, e.b);
            }
        }
        dsu.labels()
    }

    /// Replaces `members` with a super node; internal edges leave the
    /// cuttable list.
    pub fn contract(&self, members: &BTreeSet<usize>) -> Result<InteractionGraph> {
        let mut g = self.clone();
        if members.is_empty() {
            return Ok(g);
        }
        if members.iter().any(|&m| m >= self.nodes.len() || self.super_of[m].is_some()) {
            return Err(Error::DisconnectedMembers);
        }
        let idx: Vec<usize> = members.iter().copied().collect();
        let pos = |n: usize| idx.binary_search(&n).ok();
        let mut dsu = Dsu::new(idx.len());
        for e in &self.edges {
            if let (Some(a), Some(b)) = (pos(e.a), pos(e.b)) {
                dsu.union(a, b);
            }
        }
        if dsu.labels().count != 1 {
            return Err(Error::DisconnectedMembers);
        }
        let id = g.supers.len();
        for &m in members {
            g.super_of[m] = Some(id);
        }
        g.supers.push(SuperNode { id, members: members.clone() });
        let keep: Vec<usize> = g.cuttable.iter().copied().filter(|&e| !g.is_internal(&g.edges[e])).collect();
        g.cuttable = keep;
        Ok(g)
    }

    /// Node label `q_i^(occ)`.
    pub fn node_label(&self, n: usize) -> String {
        let nd = &self.nodes[n];
        format!("q{}^({})", nd.qubit, nd.occurrence)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph interaction {\n  rankdir=LR;\n");
        for (i, _) in self.nodes.iter().enumerate() {
            let shape = if self.super_of[i].is_some() { "box" } else { "ellipse" };
            let _ = writeln!(s, "  n{i} [label=\"{}\", shape={shape}];", self.node_label(i));
        }
        for sn in &self.supers {
            let _ = writeln!(s, "  subgraph cluster_super{} {{ label=\"S{}\";", sn.id, sn.id);
            for m in &sn.members {
                let _ = writeln!(s, "    n{m};");
            }
            s.push_str("  }\n");
        }
        for e in &self.edges {
            let style = match e.kind {
                EdgeKind::Gate => "dashed",
                EdgeKind::Wire => "solid",
            };
            let _ = writeln!(s, "  n{} -- n{} [style={style}, label=\"e{}\"];", e.a, e.b, e.id);
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WireCut {
    pub edge: usize,
    pub qubit: QubitId,
    /// The cut sits between this occurrence and the next one.
    pub after_occurrence: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GateCut {
    pub edge: usize,
    pub gate_seq: usize,
}

/// Wire cuts (k1) and gate cuts (k2) on an interaction graph.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct CutSet {
    pub wire_cuts: Vec<WireCut>,
    pub gate_cuts: Vec<GateCut>,
}

impl CutSet {
    pub fn from_edges(g: &InteractionGraph, edges: &[usize]) -> Self {
        let mut cs = CutSet::default();
        let mut edges = edges.to_vec();
        edges.sort_unstable();
        edges.dedup();
        for id in edges {
            let e = g.edges[id];
            match e.kind {
                EdgeKind::Wire => cs.wire_cuts.push(WireCut {
                    edge: id,
                    qubit: e.qubit,
                    after_occurrence: g.nodes[e.a].occurrence,
                }),
                EdgeKind::Gate => cs.gate_cuts.push(GateCut { edge: id, gate_seq: e.gate_seq }),
            }
        }
        cs
    }

    pub fn k1(&self) -> usize {
        self.wire_cuts.len()
    }

    pub fn k2(&self) -> usize {
        self.gate_cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wire_cuts.is_empty() && self.gate_cuts.is_empty()
    }

    pub fn edge_ids(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.wire_cuts.iter().map(|w| w.edge).chain(self.gate_cuts.iter().map(|g| g.edge)).collect();
        v.sort_unstable();
        v
    }

    /// Keeps only the listed edge ids.
    pub fn restrict(&self, keep: &[usize]) -> CutSet {
        CutSet {
            wire_cuts: self.wire_cuts.iter().copied().filter(|w| keep.contains(&w.edge)).collect(),
            gate_cuts: self.gate_cuts.iter().copied().filter(|g| keep.contains(&g.edge)).collect(),
        }
    }
}
