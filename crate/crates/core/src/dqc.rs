//! Chain-of-QPUs model with data/communication qubits and Cat-Comm costs.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CNOT_ERROR: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Data,
    Comm,
}

/// Physical qubit address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Phys {
    pub qpu: usize,
    pub idx: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommCost {
    pub remote_gate: u64,
    pub swap: u64,
}

impl Default for CommCost {
    fn default() -> Self {
        CommCost { remote_gate: 25, swap: 3 }
    }
}

#[derive(Clone, Debug)]
pub struct Qpu {
    pub id: usize,
    pub num_qubits: usize,
    pub coupling: Vec<(usize, usize)>,
    /// COMM qubits; the first faces the previous QPU, the last faces the next.
    pub comm: Vec<usize>,
    pub cnot_error: BTreeMap<(usize, usize), f64>,
    pub data: Vec<usize>,
    adj: Vec<Vec<usize>>,
    /// Hop distance where every intermediate qubit is a data qubit.
    dist: Vec<Vec<u32>>,
    /// Max path reliability Π(1 − err) over the same paths.
    rel: Vec<Vec<f64>>,
}

impl Qpu {
    pub fn new(
        id: usize,
        num_qubits: usize,
        coupling: Vec<(usize, usize)>,
        comm: Vec<usize>,
        errors: BTreeMap<(usize, usize), f64>,
    ) -> Result<Self> {
        let field = |f: &str| format!("qpus[{id}].{f}");
        let mut adj = vec![Vec::new(); num_qubits];
        let mut cnot_error = BTreeMap::new();
        for &(a, b) in &coupling {
            if a >= num_qubits || b >= num_qubits || a == b {
                return Err(Error::Topology { field: field("coupling"), msg: format!("bad edge {a}-{b}") });
            }
            if !adj[a].contains(&b) {
                adj[a].push(b);
                adj[b].push(a);
            }
            let key = (a.min(b), a.max(b));
            let e = errors.get(&key).copied().unwrap_or(DEFAULT_CNOT_ERROR);
            if !(0.0..1.0).contains(&e) {
                return Err(Error::Topology { field: field("cnot_error"), msg: format!("{e} not in [0,1)") });
            }
            cnot_error.insert(key, e);
        }
        for k in errors.keys() {
            if !cnot_error.contains_key(k) {
                return Err(Error::Topology {
                    field: field("cnot_error"),
                    msg: format!("edge {}-{} not in coupling", k.0, k.1),
                });
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        if comm.iter().any(|&c| c >= num_qubits) {
            return Err(Error::Topology { field: field("comm"), msg: "index out of range".into() });
        }
        let data: Vec<usize> = (0..num_qubits).filter(|q| !comm.contains(q)).collect();
        if data.is_empty() {
            return Err(Error::Topology { field: field("comm"), msg: "no data qubits left (capacity must be >= 1)".into() });
        }
        let mut q = Qpu { id, num_qubits, coupling, comm, cnot_error, data, adj, dist: vec![], rel: vec![] };
        q.compute_paths();
        if !q.data_connected() {
            return Err(Error::Topology { field: field("coupling"), msg: "data qubits are not connected".into() });
        }
        if q.comm.iter().any(|&c| q.adj[c].iter().all(|n| q.comm.contains(n))) {
            return Err(Error::Topology { field: field("comm"), msg: "comm qubit has no data neighbour".into() });
        }
        Ok(q)
    }

    fn is_data(&self, q: usize) -> bool {
        !self.comm.contains(&q)
    }

    fn compute_paths(&mut self) {
        let n = self.num_qubits;
        self.dist = vec![vec![u32::MAX; n]; n];
        self.rel = vec![vec![0.0; n]; n];
        for s in 0..n {
            // BFS for hops; reliability maximized among shortest paths.
            let (dist, rel) = (&mut self.dist[s], &mut self.rel[s]);
            dist[s] = 0;
            rel[s] = 1.0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u != s && self.comm.contains(&u) {
                    continue;
                }
                for &v in &self.adj[u] {
                    let r = rel[u] * (1.0 - self.cnot_error[&(u.min(v), u.max(v))]);
                    if dist[v] == u32::MAX {
                        dist[v] = dist[u] + 1;
                        rel[v] = r;
                        queue.push_back(v);
                    } else if dist[v] == dist[u] + 1 && r > rel[v] {
                        rel[v] = r;
                    }
                }
            }
        }
    }

    fn data_connected(&self) -> bool {
        let d0 = self.data[0];
        self.data.iter().all(|&d| self.dist[d0][d] != u32::MAX)
    }

    pub fn capacity(&self) -> usize {
        self.data.len()
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adj[q]
    }

    pub fn data_degree(&self, q: usize) -> usize {
        self.adj[q].iter().filter(|&&n| self.is_data(n)).count()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn distance(&self, a: usize, b: usize) -> u32 {
        self.dist[a][b]
    }

    pub fn path_reliability(&self, a: usize, b: usize) -> f64 {
        self.rel[a][b]
    }

    pub fn error(&self, a: usize, b: usize) -> f64 {
        self.cnot_error.get(&(a.min(b), a.max(b))).copied().unwrap_or(DEFAULT_CNOT_ERROR)
    }

    /// Mean CNOT reliability over the qubit's edges.
    pub fn avg_reliability(&self, q: usize) -> f64 {
        let adj = &self.adj[q];
        if adj.is_empty() {
            return 0.0;
        }
        adj.iter().map(|&n| 1.0 - self.error(q, n)).sum::<f64>() / adj.len() as f64
    }

    /// COMM qubit used for links towards `other`.
    pub fn facing_comm(&self, other: usize) -> usize {
        if other < self.id {
            self.comm[0]
        } else {
            *self.comm.last().unwrap()
        }
    }

    /// Data-subgraph shortest path from `a` to `b` (inclusive).
    pub fn shortest_path(&self, a: usize, b: usize) -> Vec<usize> {
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            let d = self.dist[cur][b];
            cur = *self.adj[cur]
                .iter()
                .filter(|&&n| self.is_data(n) || n == b)
                .find(|&&n| self.dist[n][b] + 1 == d)
                .expect("connected");
            path.push(cur);
        }
        path
    }
}

#[derive(Clone, Debug)]
pub struct DqcTopology {
    pub name: String,
    pub qpus: Vec<Qpu>,
    pub cost: CommCost,
}

impl DqcTopology {
    pub fn data_capacity(&self) -> BTreeMap<usize, usize> {
        self.qpus.iter().map(|q| (q.id, q.capacity())).collect()
    }

    pub fn total_capacity(&self) -> usize {
        self.qpus.iter().map(Qpu::capacity).sum()
    }

    pub fn max_capacity(&self) -> usize {
        self.qpus.iter().map(Qpu::capacity).max().unwrap_or(0)
    }

    pub fn num_physical(&self) -> usize {
        self.qpus.iter().map(|q| q.num_qubits).sum()
    }

    pub fn hops(&self, a: usize, b: usize) -> u64 {
        a.abs_diff(b) as u64
    }

    /// CNOT-equivalent cost of one Cat-Comm interaction between two QPUs.
    pub fn remote_cost(&self, a: usize, b: usize) -> u64 {
        self.cost.remote_gate * self.hops(a, b)
    }

    pub fn role(&self, p: Phys) -> Role {
        if self.qpus[p.qpu].comm.contains(&p.idx) {
            Role::Comm
        } else {
            Role::Data
        }
    }

    pub fn data_qubits(&self) -> impl Iterator<Item = Phys> + '_ {
        self.qpus.iter().flat_map(|q| q.data.iter().map(move |&idx| Phys { qpu: q.id, idx }))
    }

    /// Resolves a preset name `<device>-x<N>` or loads a JSON file.
    pub fn resolve(spec: &str) -> Result<Self> {
        if std::path::Path::new(spec).is_file() {
            return load_topology(&std::fs::read_to_string(spec)?);
        }
        preset(spec)
    }
}

/// Picks the two lowest-degree qubits (ties to lower index) whose removal
/// keeps the rest connected.
pub fn default_comm(num_qubits: usize, coupling: &[(usize, usize)], count: usize) -> Vec<usize> {
    let mut deg = vec![0usize; num_qubits];
    for &(a, b) in coupling {
        deg[a] += 1;
        deg[b] += 1;
    }
    let mut order: Vec<usize> = (0..num_qubits).collect();
    order.sort_by_key(|&q| (deg[q], q));
    let connected_without = |comm: &[usize]| {
        let data: Vec<usize> = (0..num_qubits).filter(|q| !comm.contains(q)).collect();
        let Some(&start) = data.first() else { return false };
        let mut seen = vec![false; num_qubits];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(a, b) in coupling {
                let v = if a == u { b } else if b == u { a } else { continue };
                if !seen[v] && !comm.contains(&v) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        data.iter().all(|&d| seen[d])
    };
    let mut pick = Vec::new();
    fn choose(order: &[usize], start: usize, count: usize, pick: &mut Vec<usize>, ok: &dyn Fn(&[usize]) -> bool) -> bool {
        if pick.len() == count {
            return ok(pick);
        }
        for i in start..order.len() {
            pick.push(order[i]);
            if choose(order, i + 1, count, pick, ok) {
                return true;
            }
            pick.pop();
        }
        false
    }
    if !choose(&order, 0, count, &mut pick, &connected_without) {
        pick = order[..count.min(num_qubits)].to_vec();
    }
    pick.sort_unstable();
    pick
}

fn rows_and_connectors(rows: &[(usize, usize)], connectors: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for &(a, b) in rows {
        for q in a..b {
            e.push((q, q + 1));
        }
    }
    for c in connectors {
        e.push((c[0], c[1]));
        e.push((c[1], c[2]));
    }
    e
}

/// Coupling map of a supported IBM device.
pub fn device_coupling(device: &str) -> Option<(usize, Vec<(usize, usize)>)> {
    Some(match device {
        "manila" => (5, (0..4).map(|i| (i, i + 1)).collect()),
        "nairobi" => (7, vec![(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)]),
        "melbourne" => {
            let mut e: Vec<(usize, usize)> = (0..6).map(|i| (i, i + 1)).collect();
            e.extend([(0, 14), (1, 13), (2, 12), (3, 11), (4, 10), (5, 9), (6, 8)]);
            e.extend((7..14).map(|i| (i, i + 1)));
            (15, e)
        }
        "toronto" => (
            27,
            vec![
                (0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7), (7, 10), (8, 9), (8, 11),
                (10, 12), (11, 14), (12, 13), (12, 15), (13, 14), (14, 16), (15, 18), (16, 19), (17, 18),
                (18, 21), (19, 20), (19, 22), (21, 23), (22, 25), (23, 24), (24, 25), (25, 26),
            ],
        ),
        "manhattan" => (
            65,
            rows_and_connectors(
                &[(0, 9), (13, 23), (27, 37), (41, 51), (55, 64)],
                &[
                    [0, 10, 13], [4, 11, 17], [8, 12, 21],
                    [15, 24, 29], [19, 25, 33], [23, 26, 37],
                    [27, 38, 41], [31, 39, 45], [35, 40, 49],
                    [43, 52, 56], [47, 53, 60], [51, 54, 64],
                ],
            ),
        ),
        "washington" => (
            127,
            rows_and_connectors(
                &[(0, 13), (18, 32), (37, 51), (56, 70), (75, 89), (94, 108), (113, 126)],
                &[
                    [0, 14, 18], [4, 15, 22], [8, 16, 26], [12, 17, 30],
                    [20, 33, 39], [24, 34, 43], [28, 35, 47], [32, 36, 51],
                    [37, 52, 56], [41, 53, 60], [45, 54, 64], [49, 55, 68],
                    [58, 71, 77], [62, 72, 81], [66, 73, 85], [70, 74, 89],
                    [75, 90, 94], [79, 91, 98], [83, 92, 102], [87, 93, 106],
                    [96, 109, 114], [100, 110, 118], [104, 111, 122], [108, 112, 126],
                ],
            ),
        ),
        _ => return None,
    })
}

/// `<device>-x<N>`: N copies of the device in a chain, 2 COMM qubits each.
pub fn preset(name: &str) -> Result<DqcTopology> {
    let unknown = || Error::UnknownPreset(name.to_string());
    let (device, count) = name.rsplit_once("-x").ok_or_else(unknown)?;
    let count: usize = count.parse().map_err(|_| unknown())?;
    let (n, coupling) = device_coupling(device).ok_or_else(unknown)?;
    if count == 0 {
        return Err(unknown());
    }
    let comm = default_comm(n, &coupling, 2);
    let qpus = (0..count)
        .map(|id| Qpu::new(id, n, coupling.clone(), comm.clone(), BTreeMap::new()))
        .collect::<Result<Vec<_>>>()?;
    Ok(DqcTopology { name: name.to_string(), qpus, cost: CommCost::default() })
}

#[derive(Deserialize)]
struct QpuJson {
    id: Option<usize>,
    #[serde(default)]
    num_qubits: Option<usize>,
    coupling: Vec<[usize; 2]>,
    comm: Option<Vec<usize>>,
    #[serde(default)]
    cnot_error: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct TopologyJson {
    #[serde(default)]
    name: Option<String>,
    qpus: Vec<QpuJson>,
    #[serde(default = "yes")]
    chain: bool,
    #[serde(default)]
    comm_cost: Option<CommCost>,
}

fn yes() -> bool {
    true
}

pub fn load_topology(text: &str) -> Result<DqcTopology> {
    let raw: TopologyJson = serde_json::from_str(text).map_err(|e| Error::Topology {
        field: "<root>".into(),
        msg: e.to_string(),
    })?;
    if !raw.chain {
        return Err(Error::Topology { field: "chain".into(), msg: "only chain topologies are supported".into() });
    }
    if raw.qpus.is_empty() {
        return Err(Error::Topology { field: "qpus".into(), msg: "at least one QPU required".into() });
    }
    let mut qpus = Vec::new();
    for (i, q) in raw.qpus.into_iter().enumerate() {
        if q.id.is_some_and(|id| id != i) {
            return Err(Error::Topology { field: format!("qpus[{i}].id"), msg: "ids must be 0..n in chain order".into() });
        }
        let coupling: Vec<(usize, usize)> = q.coupling.iter().map(|e| (e[0], e[1])).collect();
        let n = q
            .num_qubits
            .unwrap_or_else(|| coupling.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0));
        let comm = q.comm.unwrap_or_else(|| default_comm(n, &coupling, 2));
        let mut errors = BTreeMap::new();
        for (k, p) in q.cnot_error {
            let parsed = k
                .split_once('-')
                .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)));
            let Some((a, b)) = parsed else {
                return Err(Error::Topology { field: format!("qpus[{i}].cnot_error.{k}"), msg: "expected \"i-j\"".into() });
            };
            errors.insert((a.min(b), a.max(b)), p);
        }
        qpus.push(Qpu::new(i, n, coupling, comm, errors)?);
    }
    Ok(DqcTopology {
        name: raw.name.unwrap_or_else(|| "custom".into()),
        qpus,
        cost: raw.comm_cost.unwrap_or_default(),
    })
}
