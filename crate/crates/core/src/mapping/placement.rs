//! Hotness- and weakness-driven initial placement.

use std::collections::BTreeMap;

use serde::Serialize;

use super::profile::{interactions, profile};
use super::route::{route, RoutedCircuit};
use super::{check_capacity, MappingState};
use crate::circuit::{Circuit, QubitId};
use crate::dqc::{DqcTopology, Phys};
use crate::error::Result;

const EPS: f64 = 1e-12;
/// Exhaustive partitioning is used while groups^qubits stays below this.
const EXHAUSTIVE_LIMIT: f64 = 65536.0;
const KL_ROUNDS: usize = 500;
/// Reliability discount per chain hop when a partner lives on another QPU.
const HOP_DISCOUNT: f64 = 0.5;
/// Forward/backward routing passes used to refine an initial layout.
const REFINE_ROUNDS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Hotness,
    Weakness,
}

type Weights = Vec<BTreeMap<QubitId, usize>>;

/// QPUs a circuit of `n` qubits is spread over: the best-fitting single QPU
/// if one is large enough, otherwise a prefix of the chain.
pub(crate) fn qpus_for(n: usize, t: &DqcTopology) -> Vec<usize> {
    if let Some(q) = t
        .qpus
        .iter()
        .filter(|q| q.capacity() >= n)
        .min_by_key(|q| (q.capacity(), q.id))
    {
        return vec![q.id];
    }
    let mut used = Vec::new();
    let mut total = 0;
    for q in &t.qpus {
        if total >= n {
            break;
        }
        used.push(q.id);
        total += q.capacity();
    }
    used
}

fn anchor_score(t: &DqcTopology, p: Phys) -> f64 {
    let q = &t.qpus[p.qpu];
    q.data_degree(p.idx) as f64 * q.avg_reliability(p.idx)
}

/// Weighted reliability from slot `p` to the already-placed partners of `q`.
fn link_score(t: &DqcTopology, st: &MappingState, w: &Weights, q: QubitId, p: Phys) -> f64 {
    let qpu = &t.qpus[p.qpu];
    w[q].iter()
        .filter_map(|(&r, &n)| st.l2p[r].map(|pr| (pr, n as f64)))
        .map(|(pr, n)| {
            if pr.qpu == p.qpu {
                n * qpu.path_reliability(p.idx, pr.idx)
            } else {
                let hops = t.hops(p.qpu, pr.qpu) as i32;
                n * qpu.path_reliability(p.idx, qpu.facing_comm(pr.qpu)) * HOP_DISCOUNT.powi(hops)
            }
        })
        .sum()
}

/// Free slot on `qpu` maximizing link score, then anchor score, then lowest index.
fn best_slot(t: &DqcTopology, st: &MappingState, w: &Weights, q: QubitId, qpu: usize) -> Phys {
    let mut best: Option<(f64, f64, Phys)> = None;
    for &idx in &st.free[qpu] {
        let p = Phys { qpu, idx };
        let (ls, an) = (link_score(t, st, w, q, p), anchor_score(t, p));
        let better = match best {
            None => true,
            Some((bl, ba, _)) => ls > bl + EPS || ((ls - bl).abs() <= EPS && an > ba + EPS),
        };
        if better {
            best = Some((ls, an, p));
        }
    }
    best.expect("qpu has a free slot").2
}

/// Free slot on `qpu` closest to `comm`, ties by reliability then index.
fn slot_near(t: &DqcTopology, st: &MappingState, qpu: usize, comm: usize) -> Phys {
    let dev = &t.qpus[qpu];
    let mut best: Option<(u32, f64, usize)> = None;
    for &idx in &st.free[qpu] {
        let (d, r) = (dev.distance(idx, comm), dev.path_reliability(idx, comm));
        let better = match best {
            None => true,
            Some((bd, br, _)) => d < bd || (d == bd && r > br + EPS),
        };
        if better {
            best = Some((d, r, idx));
        }
    }
    Phys { qpu, idx: best.expect("qpu has a free slot").2 }
}

/// Places the hottest qubit on the most robust slot, then its partners by
/// descending interaction count next to it, spilling along the chain.
pub fn hotness_map(c: &Circuit, t: &DqcTopology) -> Result<MappingState> {
    let n = c.num_qubits;
    check_capacity(n, t)?;
    let qpus = qpus_for(n, t);
    let w = interactions(c);
    let mut st = MappingState::empty(n, t);
    let mut cur = 0;
    let mut place = |st: &mut MappingState, q: QubitId| {
        while st.free[qpus[cur]].is_empty() {
            cur += 1;
        }
        let p = best_slot(t, st, &w, q, qpus[cur]);
        st.place(q, p);
    };
    for a in profile(c).order() {
        if st.l2p[a].is_some() {
            continue;
        }
        place(&mut st, a);
        let mut partners: Vec<(usize, QubitId)> =
            w[a].iter().filter(|(&r, _)| st.l2p[r].is_none()).map(|(&r, &k)| (k, r)).collect();
        partners.sort_by_key(|&(k, r)| (std::cmp::Reverse(k), r));
        for (_, r) in partners {
            place(&mut st, r);
        }
    }
    Ok(st)
}

fn group_cost(edges: &[(usize, usize, usize)], g: &[usize]) -> usize {
    edges.iter().map(|&(a, b, k)| k * g[a].abs_diff(g[b])).sum()
}

/// Assigns qubits to `caps.len()` ordered groups minimizing inter-group
/// gates weighted by chain distance. Exhaustive for small instances,
/// Kernighan–Lin style refinement otherwise.
pub fn partition(c: &Circuit, caps: &[usize]) -> Vec<usize> {
    let n = c.num_qubits;
    let k = caps.len();
    if k <= 1 || n == 0 {
        return vec![0; n];
    }
    let w = interactions(c);
    let edges: Vec<(usize, usize, usize)> = w
        .iter()
        .enumerate()
        .flat_map(|(a, m)| m.iter().filter(move |(&b, _)| b > a).map(move |(&b, &x)| (a, b, x)))
        .collect();
    if (k as f64).powi(n as i32) <= EXHAUSTIVE_LIMIT {
        exhaustive_partition(&w, caps, n)
    } else {
        kl_partition(&w, &edges, caps, n)
    }
}

fn exhaustive_partition(w: &Weights, caps: &[usize], n: usize) -> Vec<usize> {
    struct Dfs<'a> {
        w: &'a Weights,
        caps: &'a [usize],
        g: Vec<usize>,
        size: Vec<usize>,
        best: Option<(usize, Vec<usize>)>,
    }
    impl Dfs<'_> {
        fn go(&mut self, q: usize, cost: usize) {
            if let Some((b, _)) = &self.best {
                if cost >= *b {
                    return;
                }
            }
            if q == self.g.len() {
                self.best = Some((cost, self.g.clone()));
                return;
            }
            for j in 0..self.caps.len() {
                if self.size[j] == self.caps[j] {
                    continue;
                }
                let add: usize = self.w[q]
                    .iter()
                    .filter(|(&r, _)| r < q)
                    .map(|(&r, &k)| k * self.g[r].abs_diff(j))
                    .sum();
                self.g[q] = j;
                self.size[j] += 1;
                self.go(q + 1, cost + add);
                self.size[j] -= 1;
            }
        }
    }
    let mut d = Dfs { w, caps, g: vec![0; n], size: vec![0; caps.len()], best: None };
    d.go(0, 0);
    d.best.expect("capacity checked").1
}

fn kl_partition(w: &Weights, edges: &[(usize, usize, usize)], caps: &[usize], n: usize) -> Vec<usize> {
    let k = caps.len();
    let mut g = vec![0; n];
    let mut size = vec![0; k];
    let mut j = 0;
    for q in 0..n {
        while size[j] == caps[j] {
            j += 1;
        }
        g[q] = j;
        size[j] += 1;
    }
    let moved = |g: &[usize], a: usize, to: usize| -> i64 {
        w[a].iter()
            .map(|(&x, &m)| m as i64 * (to.abs_diff(g[x]) as i64 - g[a].abs_diff(g[x]) as i64))
            .sum()
    };
    let before = group_cost(edges, &g);
    for _ in 0..KL_ROUNDS {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for q in 0..n {
            members[g[q]].push(q);
        }
        // (delta, a, target group, swap partner)
        let mut best: (i64, usize, usize, Option<usize>) = (0, 0, 0, None);
        for a in 0..n {
            let targets: std::collections::BTreeSet<usize> =
                w[a].keys().map(|&x| g[x]).filter(|&x| x != g[a]).collect();
            for &to in &targets {
                let da = moved(&g, a, to);
                if size[to] < caps[to] && da < best.0 {
                    best = (da, a, to, None);
                }
                for &b in &members[to] {
                    let ab = w[a].get(&b).copied().unwrap_or(0) as i64;
                    let d = da + moved(&g, b, g[a]) + 2 * ab * g[a].abs_diff(to) as i64;
                    if d < best.0 {
                        best = (d, a, to, Some(b));
                    }
                }
            }
        }
        let (d, a, to, b) = best;
        if d >= 0 {
            break;
        }
        let from = g[a];
        g[a] = to;
        match b {
            Some(b) => g[b] = from,
            None => {
                size[from] -= 1;
                size[to] += 1;
            }
        }
    }
    debug_assert!(group_cost(edges, &g) <= before);
    g
}

/// Splits the circuit into QPU-sized groups with the fewest inter-group
/// gates and seats the qubits that talk across groups next to the COMM
/// qubit facing their partners.
pub fn weakness_map(c: &Circuit, t: &DqcTopology) -> Result<MappingState> {
    let n = c.num_qubits;
    check_capacity(n, t)?;
    let qpus = qpus_for(n, t);
    let caps: Vec<usize> = qpus.iter().map(|&q| t.qpus[q].capacity()).collect();
    let g = partition(c, &caps);
    let w = interactions(c);
    let hot = profile(c).hotness;
    let mut st = MappingState::empty(n, t);
    for (gi, &qpu) in qpus.iter().enumerate() {
        let members: Vec<QubitId> = (0..n).filter(|&q| g[q] == gi).collect();
        let external = |q: QubitId| -> BTreeMap<usize, usize> {
            let mut m = BTreeMap::new();
            for (&r, &k) in &w[q] {
                if g[r] != gi {
                    *m.entry(g[r]).or_insert(0) += k;
                }
            }
            m
        };
        let mut boundary: Vec<(usize, QubitId, usize)> = members
            .iter()
            .filter_map(|&q| {
                let ext = external(q);
                let total: usize = ext.values().sum();
                // group with the most crossing gates, ties to the lower index
                let target = ext.iter().max_by_key(|(&grp, &k)| (k, std::cmp::Reverse(grp))).map(|(&grp, _)| grp)?;
                Some((total, q, target))
            })
            .collect();
        boundary.sort_by_key(|&(total, q, _)| (std::cmp::Reverse(total), q));
        for &(_, q, target) in &boundary {
            let comm = t.qpus[qpu].facing_comm(qpus[target]);
            let p = slot_near(t, &st, qpu, comm);
            st.place(q, p);
        }
        let mut rest: Vec<QubitId> = members.into_iter().filter(|&q| st.l2p[q].is_none()).collect();
        rest.sort_by_key(|&q| (std::cmp::Reverse(hot[q]), q));
        for q in rest {
            let p = best_slot(t, &st, &w, q, qpu);
            st.place(q, p);
        }
    }
    Ok(st)
}

/// Minimum number of remote gates over the two placement policies.
pub fn estimate_remote(c: &Circuit, t: &DqcTopology) -> Result<usize> {
    if c.num_qubits <= t.max_capacity() {
        return Ok(0);
    }
    let h = hotness_map(c, t)?.remote_gate_count(c);
    let w = weakness_map(c, t)?.remote_gate_count(c);
    Ok(h.min(w))
}

#[derive(Clone, Debug)]
pub struct PolicyChoice {
    pub policy: Policy,
    pub state: MappingState,
    pub routed: RoutedCircuit,
    pub hotness_epr: u64,
    pub weakness_epr: u64,
}

/// Dry-routes both placements and keeps the one consuming fewer EPR pairs;
/// ties go to hotness.
/// Gate order reversed; only the interaction structure matters to the router.
fn reversed(c: &Circuit) -> Result<Circuit> {
    let mut r = Circuit::new(c.num_qubits);
    for g in c.gates.iter().rev() {
        r.push(g.kind, &g.params, &g.qubits)?;
    }
    Ok(r)
}

fn route_key(r: &RoutedCircuit) -> (u64, u64, u64) {
    (r.epr_pairs, r.swaps, r.depth)
}

/// Routes from `init`, then retries from layouts found by routing forward
/// and backward in turn, keeping the cheapest by (EPR pairs, swaps, depth).
pub fn route_refined(c: &Circuit, init: MappingState, t: &DqcTopology) -> Result<(MappingState, RoutedCircuit)> {
    let first = route(c, &init, t)?;
    let rev = reversed(c)?;
    let mut cur = first.final_layout.clone();
    let mut best = (init, first);
    for _ in 0..REFINE_ROUNDS {
        let back = route(&rev, &MappingState::from_layout(&cur, t)?, t)?;
        let st = MappingState::from_layout(&back.final_layout, t)?;
        let fwd = route(c, &st, t)?;
        cur = fwd.final_layout.clone();
        if route_key(&fwd) < route_key(&best.1) {
            best = (st, fwd);
        }
    }
    Ok(best)
}

pub fn choose_policy(c: &Circuit, t: &DqcTopology) -> Result<PolicyChoice> {
    let (hs, hr) = route_refined(c, hotness_map(c, t)?, t)?;
    let (ws, wr) = route_refined(c, weakness_map(c, t)?, t)?;
    let (he, we) = (hr.epr_pairs, wr.epr_pairs);
    Ok(if route_key(&wr) < route_key(&hr) {
        PolicyChoice { policy: Policy::Weakness, state: ws, routed: wr, hotness_epr: he, weakness_epr: we }
    } else {
        PolicyChoice { policy: Policy::Hotness, state: hs, routed: hr, hotness_epr: he, weakness_epr: we }
    })
}
