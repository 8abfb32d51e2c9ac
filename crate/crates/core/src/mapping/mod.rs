//! Initial placement and routing over a chain of QPUs.
//!
//! [`profile`] computes hotness/weakness, [`placement`] turns them into an
//! initial layout (hotness or weakness policy), and [`route`] inserts local
//! and remote SWAPs, sharing EPR pairs between consecutive remote gates.

pub mod placement;
pub mod profile;
pub mod route;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::circuit::{Circuit, QubitId};
use crate::dqc::{DqcTopology, Phys};
use crate::error::{Error, Result};

pub use placement::{choose_policy, hotness_map, partition, weakness_map, Policy, PolicyChoice};
pub use profile::{interactions, inter_group_gates, profile, weakness, weakness_profile, HotnessProfile, WeaknessProfile};
pub use route::{metrics, route, Metrics, RoutedCircuit, RoutedOp};

/// An open Cat-Comm link: `shared` has been entangled into `remote_qpu`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Session {
    pub id: usize,
    pub remote_qpu: usize,
}

/// Logical → physical layout plus per-QPU free data qubits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MappingState {
    pub l2p: Vec<Option<Phys>>,
    pub free: Vec<BTreeSet<usize>>,
    /// Open sessions keyed by the shared logical qubit.
    pub sessions: BTreeMap<QubitId, Session>,
}

impl MappingState {
    pub fn empty(num_logical: usize, t: &DqcTopology) -> Self {
        MappingState {
            l2p: vec![None; num_logical],
            free: t.qpus.iter().map(|q| q.data.iter().copied().collect()).collect(),
            sessions: BTreeMap::new(),
        }
    }

    /// Builds a state from an explicit total layout.
    pub fn from_layout(layout: &[Phys], t: &DqcTopology) -> Result<Self> {
        let mut st = MappingState::empty(layout.len(), t);
        for (q, &p) in layout.iter().enumerate() {
            if p.qpu >= t.qpus.len() || !st.free[p.qpu].contains(&p.idx) {
                return Err(Error::Config(format!("qubit {q}: {p:?} is not a free data qubit")));
            }
            st.place(q, p);
        }
        Ok(st)
    }

    pub fn place(&mut self, q: QubitId, p: Phys) {
        debug_assert!(self.l2p[q].is_none());
        let fresh = self.free[p.qpu].remove(&p.idx);
        debug_assert!(fresh, "{p:?} occupied");
        self.l2p[q] = Some(p);
    }

    pub fn is_total(&self) -> bool {
        self.l2p.iter().all(Option::is_some)
    }

    pub fn phys(&self, q: QubitId) -> Phys {
        self.l2p[q].expect("unmapped qubit")
    }

    pub fn layout(&self) -> Vec<Phys> {
        self.l2p.iter().map(|p| p.expect("unmapped qubit")).collect()
    }

    /// Two-qubit gates whose operands sit on different QPUs.
    pub fn remote_gate_count(&self, c: &Circuit) -> usize {
        c.gates
            .iter()
            .filter(|g| g.is_two_qubit())
            .filter(|g| self.phys(g.qubits[0]).qpu != self.phys(g.qubits[1]).qpu)
            .count()
    }

    pub fn qpus_used(&self) -> BTreeSet<usize> {
        self.l2p.iter().flatten().map(|p| p.qpu).collect()
    }
}

pub(crate) fn check_capacity(n: usize, t: &DqcTopology) -> Result<()> {
    let available = t.total_capacity();
    if n > available {
        return Err(Error::Capacity { needed: n, available });
    }
    Ok(())
}
