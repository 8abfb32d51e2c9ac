//! SWAP insertion with remote gates, EPR sharing and remote SWAPs.
//!
//! A two-qubit gate on one QPU runs when its operands are coupled. A gate
//! across QPUs runs when each operand sits next to the COMM qubit facing the
//! other QPU, or when one operand already has an open session towards the
//! other QPU and the partner sits next to its COMM qubit. Any other operation
//! on a shared qubit closes its session.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{MappingState, Session};
use crate::circuit::{Circuit, Gate, GateKind, QubitId};
use crate::dqc::{DqcTopology, Phys};
use crate::error::Result;

const LOOKAHEAD_WEIGHT: f64 = 0.5;
const EXTENDED_PER_QUBIT: usize = 8;
const EXTENDED_MAX: usize = 64;
const EPS: f64 = 1e-9;

pub const DEPTH_1Q: u64 = 1;
pub const DEPTH_2Q: u64 = 1;
pub const DEPTH_SWAP: u64 = 3;
pub const DEPTH_REMOTE: u64 = 25;
pub const DEPTH_REMOTE_SWAP: u64 = 27;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RoutedOp {
    Gate { kind: GateKind, params: Vec<f64>, phys: Vec<Phys>, seq: usize },
    Swap { a: Phys, b: Phys },
    EprOpen { session: usize, shared: QubitId, from_qpu: usize, to_qpu: usize, pairs: u64 },
    EprClose { session: usize },
    RemoteGate { kind: GateKind, params: Vec<f64>, phys: Vec<Phys>, seq: usize, session: usize },
    RemoteSwap { logical: QubitId, from: Phys, to: Phys, session: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct RoutedCircuit {
    pub ops: Vec<RoutedOp>,
    pub initial_layout: Vec<Phys>,
    pub final_layout: Vec<Phys>,
    pub swaps: u64,
    pub remote_swaps: u64,
    pub remote_gates: u64,
    pub epr_pairs: u64,
    pub depth: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub swaps: u64,
    pub epr_pairs: u64,
    pub depth: u64,
}

pub fn metrics(r: &RoutedCircuit) -> Metrics {
    Metrics { swaps: r.swaps, epr_pairs: r.epr_pairs, depth: r.depth }
}

impl RoutedCircuit {
    /// The routed stream as a circuit over the data qubits of the QPUs it
    /// touches, remote gates taken as ideal. Returns the circuit and the
    /// physical qubit behind each wire.
    pub fn physical_circuit(&self, t: &DqcTopology) -> (Circuit, Vec<Phys>) {
        let qpus: BTreeSet<usize> = self
            .initial_layout
            .iter()
            .chain(&self.final_layout)
            .map(|p| p.qpu)
            .chain(self.ops.iter().filter_map(|op| match op {
                RoutedOp::RemoteSwap { to, .. } => Some(to.qpu),
                _ => None,
            }))
            .collect();
        let wires: Vec<Phys> = qpus
            .iter()
            .flat_map(|&q| t.qpus[q].data.iter().map(move |&idx| Phys { qpu: q, idx }))
            .collect();
        let index: BTreeMap<Phys, usize> = wires.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let mut c = Circuit::new(wires.len());
        for op in &self.ops {
            match op {
                RoutedOp::Gate { kind, params, phys, .. } | RoutedOp::RemoteGate { kind, params, phys, .. } => {
                    let qs: Vec<usize> = phys.iter().map(|p| index[p]).collect();
                    c.add(*kind, params, &qs);
                }
                RoutedOp::Swap { a, b } => {
                    c.add(GateKind::SWAP, &[], &[index[a], index[b]]);
                }
                RoutedOp::RemoteSwap { from, to, .. } => {
                    c.add(GateKind::SWAP, &[], &[index[from], index[to]]);
                }
                RoutedOp::EprOpen { .. } | RoutedOp::EprClose { .. } => {}
            }
        }
        (c, wires)
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::json!({
            "ops": serde_json::to_value(&self.ops)?,
            "initial_layout": serde_json::to_value(&self.initial_layout)?,
            "final_layout": serde_json::to_value(&self.final_layout)?,
            "metrics": {
                "swaps": self.swaps,
                "remote_swaps": self.remote_swaps,
                "remote_gates": self.remote_gates,
                "epr_pairs": self.epr_pairs,
                "depth": self.depth,
            },
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Candidate {
    Local(Phys, Phys),
    Remote { q: QubitId, to: Phys },
}

struct Router<'a> {
    c: &'a Circuit,
    t: &'a DqcTopology,
    /// Gate indices per qubit in program order.
    per_q: Vec<Vec<usize>>,
    next: Vec<usize>,
    remaining: usize,
    l2p: Vec<Phys>,
    p2l: Vec<Vec<Option<QubitId>>>,
    free: Vec<BTreeSet<usize>>,
    sessions: BTreeMap<QubitId, Session>,
    next_session: usize,
    out: RoutedCircuit,
    clock: BTreeMap<Phys, u64>,
}

/// Routes `c` from the total layout `init`.
pub fn route(c: &Circuit, init: &MappingState, t: &DqcTopology) -> Result<RoutedCircuit> {
    let mut r = Router::new(c, init, t);
    r.run();
    Ok(r.out)
}

impl<'a> Router<'a> {
    fn new(c: &'a Circuit, init: &MappingState, t: &'a DqcTopology) -> Self {
        let l2p = init.layout();
        let mut p2l: Vec<Vec<Option<QubitId>>> = t.qpus.iter().map(|q| vec![None; q.num_qubits]).collect();
        for (q, p) in l2p.iter().enumerate() {
            p2l[p.qpu][p.idx] = Some(q);
        }
        let mut per_q = vec![Vec::new(); c.num_qubits];
        for (i, g) in c.gates.iter().enumerate() {
            for &q in &g.qubits {
                per_q[q].push(i);
            }
        }
        Router {
            c,
            t,
            per_q,
            next: vec![0; c.num_qubits],
            remaining: c.gates.len(),
            free: init.free.clone(),
            sessions: init.sessions.clone(),
            next_session: 0,
            out: RoutedCircuit {
                ops: Vec::new(),
                initial_layout: l2p.clone(),
                final_layout: Vec::new(),
                swaps: 0,
                remote_swaps: 0,
                remote_gates: 0,
                epr_pairs: 0,
                depth: 0,
            },
            l2p,
            p2l,
            clock: BTreeMap::new(),
        }
    }

    fn gate(&self, i: usize) -> &'a Gate {
        &self.c.gates[i]
    }

    fn is_front(&self, i: usize) -> bool {
        self.gate(i).qubits.iter().all(|&q| self.per_q[q].get(self.next[q]) == Some(&i))
    }

    fn front(&self) -> Vec<usize> {
        let mut f: Vec<usize> = (0..self.c.num_qubits)
            .filter_map(|q| self.per_q[q].get(self.next[q]).copied())
            .filter(|&i| self.is_front(i))
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    fn advance(&mut self, i: usize) {
        for &q in &self.gate(i).qubits {
            self.next[q] += 1;
        }
        self.remaining -= 1;
    }

    fn tick(&mut self, qs: &[Phys], w: u64) {
        let start = qs.iter().map(|p| self.clock.get(p).copied().unwrap_or(0)).max().unwrap_or(0);
        for p in qs {
            self.clock.insert(*p, start + w);
        }
        self.out.depth = self.out.depth.max(start + w);
    }

    fn comm_of(&self, p: Phys, towards: usize) -> Phys {
        Phys { qpu: p.qpu, idx: self.t.qpus[p.qpu].facing_comm(towards) }
    }

    fn near_comm(&self, p: Phys, towards: usize) -> bool {
        self.t.qpus[p.qpu].adjacent(p.idx, self.t.qpus[p.qpu].facing_comm(towards))
    }

    fn close(&mut self, q: QubitId) {
        if let Some(s) = self.sessions.remove(&q) {
            self.out.ops.push(RoutedOp::EprClose { session: s.id });
        }
    }

    /// Consecutive upcoming two-qubit gates of `q` whose partner is on `qpu`.
    fn run_len(&self, q: QubitId, qpu: usize) -> usize {
        self.per_q[q][self.next[q]..]
            .iter()
            .take_while(|&&i| {
                let g = self.gate(i);
                g.is_two_qubit() && {
                    let other = if g.qubits[0] == q { g.qubits[1] } else { g.qubits[0] };
                    self.l2p[other].qpu == qpu
                }
            })
            .count()
    }

    fn session_to(&self, q: QubitId, qpu: usize) -> bool {
        self.sessions.get(&q).is_some_and(|s| s.remote_qpu == qpu)
    }

    fn try_execute(&mut self, i: usize) -> bool {
        let g = self.gate(i);
        if !g.is_two_qubit() {
            let q = g.qubits[0];
            self.close(q);
            let p = self.l2p[q];
            self.out.ops.push(RoutedOp::Gate { kind: g.kind, params: g.params.clone(), phys: vec![p], seq: g.seq });
            self.tick(&[p], DEPTH_1Q);
            self.advance(i);
            return true;
        }
        let (a, b) = (g.qubits[0], g.qubits[1]);
        let (pa, pb) = (self.l2p[a], self.l2p[b]);
        if pa.qpu == pb.qpu {
            if !self.t.qpus[pa.qpu].adjacent(pa.idx, pb.idx) {
                return false;
            }
            self.close(a);
            self.close(b);
            self.out.ops.push(RoutedOp::Gate { kind: g.kind, params: g.params.clone(), phys: vec![pa, pb], seq: g.seq });
            self.tick(&[pa, pb], DEPTH_2Q);
            self.advance(i);
            return true;
        }
        let shared = if self.session_to(a, pb.qpu) && self.near_comm(pb, pa.qpu) {
            Some(a)
        } else if self.session_to(b, pa.qpu) && self.near_comm(pa, pb.qpu) {
            Some(b)
        } else {
            None
        };
        let shared = match shared {
            Some(s) => s,
            None => {
                if !(self.near_comm(pa, pb.qpu) && self.near_comm(pb, pa.qpu)) {
                    return false;
                }
                self.close(a);
                self.close(b);
                let s = if self.run_len(a, pb.qpu) >= self.run_len(b, pa.qpu) { a } else { b };
                let (from, to) = if s == a { (pa.qpu, pb.qpu) } else { (pb.qpu, pa.qpu) };
                let id = self.next_session;
                self.next_session += 1;
                let pairs = self.t.hops(from, to);
                self.sessions.insert(s, Session { id, remote_qpu: to });
                self.out.ops.push(RoutedOp::EprOpen { session: id, shared: s, from_qpu: from, to_qpu: to, pairs });
                self.out.epr_pairs += pairs;
                s
            }
        };
        let other = if shared == a { b } else { a };
        self.close(other);
        let session = self.sessions[&shared].id;
        let comms = [self.comm_of(pa, pb.qpu), self.comm_of(pb, pa.qpu)];
        self.out.ops.push(RoutedOp::RemoteGate {
            kind: g.kind,
            params: g.params.clone(),
            phys: vec![pa, pb],
            seq: g.seq,
            session,
        });
        self.out.remote_gates += 1;
        self.tick(&[pa, pb, comms[0], comms[1]], DEPTH_REMOTE);
        self.advance(i);
        true
    }

    fn execute_ready(&mut self) -> bool {
        let mut any = false;
        loop {
            let mut progressed = false;
            for i in self.front() {
                if self.is_front(i) && self.try_execute(i) {
                    progressed = true;
                }
            }
            if !progressed {
                return any;
            }
            any = true;
        }
    }

    /// Swaps the contents of two physical slots in `l2p`/`p2l`.
    fn swap_slots(&mut self, x: Phys, y: Phys) {
        let (lx, ly) = (self.p2l[x.qpu][x.idx], self.p2l[y.qpu][y.idx]);
        self.p2l[x.qpu][x.idx] = ly;
        self.p2l[y.qpu][y.idx] = lx;
        if let Some(q) = lx {
            self.l2p[q] = y;
        }
        if let Some(q) = ly {
            self.l2p[q] = x;
        }
        if x.qpu != y.qpu {
            // moving a logical qubit into a free slot of another QPU
            self.free[y.qpu].remove(&y.idx);
            self.free[x.qpu].insert(x.idx);
        } else {
            for (p, l) in [(x, ly), (y, lx)] {
                if l.is_some() {
                    self.free[p.qpu].remove(&p.idx);
                } else {
                    self.free[p.qpu].insert(p.idx);
                }
            }
        }
    }

    fn apply(&mut self, cand: Candidate) {
        match cand {
            Candidate::Local(x, y) => {
                for p in [x, y] {
                    if let Some(q) = self.p2l[p.qpu][p.idx] {
                        self.close(q);
                    }
                }
                self.swap_slots(x, y);
                self.out.ops.push(RoutedOp::Swap { a: x, b: y });
                self.out.swaps += 1;
                self.tick(&[x, y], DEPTH_SWAP);
            }
            Candidate::Remote { q, to } => {
                self.close(q);
                let from = self.l2p[q];
                let id = self.next_session;
                self.next_session += 1;
                let comms = [self.comm_of(from, to.qpu), self.comm_of(to, from.qpu)];
                self.swap_slots(from, to);
                self.out.ops.push(RoutedOp::RemoteSwap { logical: q, from, to, session: id });
                self.out.remote_swaps += 1;
                self.out.epr_pairs += self.t.hops(from.qpu, to.qpu);
                self.tick(&[from, to, comms[0], comms[1]], DEPTH_REMOTE_SWAP);
            }
        }
    }

    fn candidates(&self, front2: &[usize]) -> Vec<Candidate> {
        let mut local = BTreeSet::new();
        let mut remote = Vec::new();
        for &i in front2 {
            let g = self.gate(i);
            for &q in &g.qubits {
                let p = self.l2p[q];
                let dev = &self.t.qpus[p.qpu];
                for &nb in dev.neighbors(p.idx) {
                    if dev.comm.contains(&nb) {
                        continue;
                    }
                    let o = Phys { qpu: p.qpu, idx: nb };
                    local.insert((p.min(o), p.max(o)));
                }
            }
            let (pa, pb) = (self.l2p[g.qubits[0]], self.l2p[g.qubits[1]]);
            if pa.qpu == pb.qpu {
                continue;
            }
            for (q, from, far) in [(g.qubits[0], pa, pb.qpu), (g.qubits[1], pb, pa.qpu)] {
                if !self.near_comm(from, far) {
                    continue;
                }
                let dest = if far > from.qpu { from.qpu + 1 } else { from.qpu - 1 };
                if self.free[dest].is_empty() {
                    continue;
                }
                let dev = &self.t.qpus[dest];
                let comm = dev.facing_comm(from.qpu);
                let idx = *self.free[dest].iter().min_by_key(|&&i| (dev.distance(i, comm), i)).unwrap();
                remote.push(Candidate::Remote { q, to: Phys { qpu: dest, idx } });
            }
        }
        local.into_iter().map(|(x, y)| Candidate::Local(x, y)).chain(remote).collect()
    }

    /// SWAP-distance part of a gate's cost under the current layout.
    fn distance_cost(&self, a: QubitId, b: QubitId) -> f64 {
        let (pa, pb) = (self.l2p[a], self.l2p[b]);
        if pa.qpu == pb.qpu {
            let d = self.t.qpus[pa.qpu].distance(pa.idx, pb.idx);
            return 3.0 * (d.saturating_sub(1)) as f64;
        }
        let to_comm = |p: Phys, far: usize| {
            let dev = &self.t.qpus[p.qpu];
            3.0 * dev.distance(p.idx, dev.facing_comm(far)).saturating_sub(1) as f64
        };
        let mut cost = 0.0;
        if !self.session_to(a, pb.qpu) || self.session_to(b, pa.qpu) {
            cost += to_comm(pa, pb.qpu);
        }
        if !self.session_to(b, pa.qpu) || self.session_to(a, pb.qpu) {
            cost += to_comm(pb, pa.qpu);
        }
        cost
    }

    fn remote_cost(&self, a: QubitId, b: QubitId) -> f64 {
        let (pa, pb) = (self.l2p[a], self.l2p[b]);
        if pa.qpu == pb.qpu || self.session_to(a, pb.qpu) || self.session_to(b, pa.qpu) {
            0.0
        } else {
            self.t.remote_cost(pa.qpu, pb.qpu) as f64
        }
    }

    /// Per qubit, its next run of unexecuted two-qubit gates (single-qubit
    /// gates skipped), front gates excluded.
    fn extended(&self, front: &BTreeSet<usize>) -> Vec<(QubitId, Vec<usize>)> {
        let mut per: Vec<(QubitId, Vec<usize>)> = (0..self.c.num_qubits)
            .map(|q| {
                let run: Vec<usize> = self.per_q[q][self.next[q]..]
                    .iter()
                    .copied()
                    .filter(|&i| self.gate(i).is_two_qubit())
                    .take(EXTENDED_PER_QUBIT)
                    .collect();
                (q, run)
            })
            .filter(|(_, r)| !r.is_empty())
            .collect();
        per.sort_by_key(|(q, r)| (std::cmp::Reverse(r.len()), *q));
        let mut total = 0;
        for (_, r) in per.iter_mut() {
            r.retain(|i| !front.contains(i));
            r.truncate(EXTENDED_MAX - total.min(EXTENDED_MAX));
            total += r.len();
        }
        per.retain(|(_, r)| !r.is_empty());
        per
    }

    /// H = NNC(F)/|F| + w·NNC(E)/|E|.
    fn heuristic(&self, front2: &[usize]) -> f64 {
        let fset: BTreeSet<usize> = front2.iter().copied().collect();
        let mut nnc_f = 0.0;
        for &i in front2 {
            let g = self.gate(i);
            nnc_f += self.distance_cost(g.qubits[0], g.qubits[1]) + self.remote_cost(g.qubits[0], g.qubits[1]);
        }
        let mut h = nnc_f / front2.len().max(1) as f64;
        let ext = self.extended(&fset);
        let mut seen = BTreeSet::new();
        let mut nnc_e = 0.0;
        for (q, run) in &ext {
            // QPU reachable through q's live link: an open session or the
            // remote front gate that will open one.
            let mut link: Option<usize> = self.sessions.get(q).map(|s| s.remote_qpu);
            if let Some(&i) = self.per_q[*q].get(self.next[*q]) {
                if fset.contains(&i) {
                    let g = self.gate(i);
                    let other = if g.qubits[0] == *q { g.qubits[1] } else { g.qubits[0] };
                    let (pq, po) = (self.l2p[*q], self.l2p[other]);
                    link = (pq.qpu != po.qpu).then_some(po.qpu);
                }
            }
            let mut last = self.next[*q];
            for &i in run {
                let between = self.per_q[*q][last..].iter().take_while(|&&j| j != i).any(|&j| !self.gate(j).is_two_qubit());
                if between {
                    link = None;
                }
                last = self.per_q[*q].iter().position(|&j| j == i).unwrap() + 1;
                let g = self.gate(i);
                let other = if g.qubits[0] == *q { g.qubits[1] } else { g.qubits[0] };
                let (pq, po) = (self.l2p[*q], self.l2p[other]);
                if !seen.insert(i) {
                    link = None;
                    continue;
                }
                nnc_e += self.distance_cost(g.qubits[0], g.qubits[1]);
                if pq.qpu == po.qpu {
                    link = None;
                } else if link != Some(po.qpu) {
                    nnc_e += self.remote_cost(g.qubits[0], g.qubits[1]);
                    link = Some(po.qpu);
                }
            }
        }
        if !seen.is_empty() {
            h += LOOKAHEAD_WEIGHT * nnc_e / seen.len() as f64;
        }
        h
    }

    fn own_cost(&self, cand: Candidate) -> f64 {
        match cand {
            Candidate::Local(..) => self.t.cost.swap as f64,
            Candidate::Remote { q, to } => self.t.remote_cost(self.l2p[q].qpu, to.qpu) as f64,
        }
    }

    /// H after tentatively applying `cand` (sessions of moved qubits dropped).
    fn score(&mut self, cand: Candidate, front2: &[usize]) -> f64 {
        let (x, y) = match cand {
            Candidate::Local(x, y) => (x, y),
            Candidate::Remote { q, to } => (self.l2p[q], to),
        };
        let moved: Vec<QubitId> = [x, y].iter().filter_map(|p| self.p2l[p.qpu][p.idx]).collect();
        let saved: Vec<(QubitId, Session)> =
            moved.iter().filter_map(|q| self.sessions.remove(q).map(|s| (*q, s))).collect();
        let free = self.free.clone();
        self.swap_slots(x, y);
        let h = self.heuristic(front2);
        self.swap_slots(x, y);
        self.free = free;
        self.sessions.extend(saved);
        h + self.own_cost(cand)
    }

    /// One SWAP that brings the first front gate strictly closer to running.
    fn forced(&self, front2: &[usize]) -> Candidate {
        let g = self.gate(front2[0]);
        let (pa, pb) = (self.l2p[g.qubits[0]], self.l2p[g.qubits[1]]);
        let dev_a = &self.t.qpus[pa.qpu];
        if pa.qpu == pb.qpu {
            let path = dev_a.shortest_path(pa.idx, pb.idx);
            return Candidate::Local(pa, Phys { qpu: pa.qpu, idx: path[1] });
        }
        for (p, far, q) in [(pa, pb.qpu, g.qubits[0]), (pb, pa.qpu, g.qubits[1])] {
            let other_shared = if q == g.qubits[0] {
                self.session_to(g.qubits[1], pa.qpu)
            } else {
                self.session_to(g.qubits[0], pb.qpu)
            };
            if self.near_comm(p, far) || other_shared {
                continue;
            }
            let dev = &self.t.qpus[p.qpu];
            let path = dev.shortest_path(p.idx, dev.facing_comm(far));
            return Candidate::Local(p, Phys { qpu: p.qpu, idx: path[1] });
        }
        // Both operands already wait next to COMM qubits behind a
        // one-sided session; move the unshared side's session holder.
        let q = if self.sessions.contains_key(&g.qubits[0]) { g.qubits[0] } else { g.qubits[1] };
        let p = self.l2p[q];
        let dev = &self.t.qpus[p.qpu];
        let nb = *dev.neighbors(p.idx).iter().find(|n| !dev.comm.contains(n)).unwrap();
        Candidate::Local(p, Phys { qpu: p.qpu, idx: nb })
    }

    fn run(&mut self) {
        let guard = 3 * self.t.num_physical();
        let mut best_h = f64::INFINITY;
        let mut stall = 0;
        let mut forcing: Option<usize> = None;
        loop {
            if self.execute_ready() {
                best_h = f64::INFINITY;
                stall = 0;
                forcing = None;
            }
            if self.remaining == 0 {
                break;
            }
            let front2: Vec<usize> = self.front().into_iter().filter(|&i| self.gate(i).is_two_qubit()).collect();
            debug_assert!(!front2.is_empty());
            if forcing.is_some() || stall >= guard {
                forcing = Some(front2[0]);
                let cand = self.forced(&front2);
                self.apply(cand);
                continue;
            }
            let cands = self.candidates(&front2);
            let mut best: Option<(f64, Candidate)> = None;
            for cand in cands {
                let s = self.score(cand, &front2);
                if best.as_ref().map_or(true, |(b, _)| s < b - EPS) {
                    best = Some((s, cand));
                }
            }
            let (_, cand) = best.expect("front gate has a neighbour");
            self.apply(cand);
            let h = self.heuristic(&front2);
            if h < best_h - EPS {
                best_h = h;
                stall = 0;
            } else {
                stall += 1;
            }
        }
        self.out.final_layout = self.l2p.clone();
        let open: Vec<QubitId> = self.sessions.keys().copied().collect();
        for q in open {
            self.close(q);
        }
    }
}
