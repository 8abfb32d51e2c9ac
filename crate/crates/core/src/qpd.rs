//! Quasi-probability decomposition of wire and gate cuts.
//!
//! A [`CutCircuit`] is the input circuit with every wire cut moved onto a
//! fresh wire and every cut gate replaced by a channel slot. Choosing one
//! term per slot gives a concrete [`QpdVariant`].

use std::collections::BTreeSet;

use num_bigint::BigUint;
use serde::Serialize;

use crate::circuit::{to_qasm, Basis, Circuit, Gate, GateKind, PauliString, PrepState, QubitId};
use crate::error::{Error, Result};
use crate::graph::CutSet;

pub const DEFAULT_VARIANT_CAP: u64 = 10_000_000;

/// One measure/prepare term of a wire cut.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WireCutChannel {
    pub measure_basis: Basis,
    pub prepare_state: PrepState,
    pub coefficient: f64,
}

/// `ρ = ½[Tr(ρI)(|0⟩⟨0|+|1⟩⟨1|) + Tr(ρZ)(|0⟩⟨0|−|1⟩⟨1|)
///      + Tr(ρX)(2|+⟩⟨+|−I) + Tr(ρY)(2|i⟩⟨i|−I)]`,
/// expanded over all 4×4 (basis, state) pairs. Unused pairs carry 0.
pub fn decompose_wire_cut() -> Vec<WireCutChannel> {
    let mut out = Vec::with_capacity(16);
    for b in Basis::ALL {
        for p in PrepState::ALL {
            let w = match (b, p) {
                (Basis::I, PrepState::Zero | PrepState::One) => 1.0,
                (Basis::Z, PrepState::Zero) => 1.0,
                (Basis::Z, PrepState::One) => -1.0,
                (Basis::X, PrepState::Plus) | (Basis::Y, PrepState::IPlus) => 2.0,
                (Basis::X | Basis::Y, PrepState::Zero | PrepState::One) => -1.0,
                _ => 0.0,
            };
            out.push(WireCutChannel { measure_basis: b, prepare_state: p, coefficient: 0.5 * w });
        }
    }
    out
}

/// Local instruction on one operand of a cut gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LocalOp {
    Id,
    Unitary(GateKind),
    /// Signed Z projection: outcome eigenvalue multiplies the result.
    ProjectZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GateCutChannel {
    pub ops: [LocalOp; 2],
    pub coefficient: f64,
}

/// Channels of `e^{iθ Z⊗Z}`, six groups.
pub fn zz_channels(theta: f64) -> Vec<GateCutChannel> {
    use LocalOp::*;
    let (c, s) = (theta.cos(), theta.sin());
    let cs = c * s;
    vec![
        GateCutChannel { ops: [Id, Id], coefficient: c * c },
        GateCutChannel { ops: [Unitary(GateKind::Z), Unitary(GateKind::Z)], coefficient: s * s },
        GateCutChannel { ops: [ProjectZ, Unitary(GateKind::Sdg)], coefficient: cs },
        GateCutChannel { ops: [ProjectZ, Unitary(GateKind::S)], coefficient: -cs },
        GateCutChannel { ops: [Unitary(GateKind::Sdg), ProjectZ], coefficient: cs },
        GateCutChannel { ops: [Unitary(GateKind::S), ProjectZ], coefficient: -cs },
    ]
}

/// A cut two-qubit gate rewritten as `post · e^{iθ Z⊗Z} · pre` (up to
/// global phase), with the core expanded into channels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateCutPlan {
    pub qubits: [QubitId; 2],
    pub pre: Vec<(GateKind, Vec<f64>, QubitId)>,
    pub theta: f64,
    pub post: Vec<(GateKind, Vec<f64>, QubitId)>,
    pub channels: Vec<GateCutChannel>,
}

pub fn decompose_gate_cut(g: &Gate) -> Result<GateCutPlan> {
    let (a, b) = (g.qubits[0], g.qubits[1]);
    let (pre, theta, post) = match g.kind {
        GateKind::CZ => (vec![], std::f64::consts::FRAC_PI_4, vec![(GateKind::S, vec![], a), (GateKind::S, vec![], b)]),
        GateKind::CX => (
            vec![(GateKind::H, vec![], b)],
            std::f64::consts::FRAC_PI_4,
            vec![(GateKind::S, vec![], a), (GateKind::S, vec![], b), (GateKind::H, vec![], b)],
        ),
        GateKind::CP => {
            let l = g.params[0];
            (vec![], l / 4.0, vec![(GateKind::RZ, vec![l / 2.0], a), (GateKind::RZ, vec![l / 2.0], b)])
        }
        GateKind::RZZ => (vec![], -g.params[0] / 2.0, vec![]),
        k => return Err(Error::UnsupportedGateCut { gate: k.name() }),
    };
    Ok(GateCutPlan { qubits: [a, b], pre, theta, post, channels: zz_channels(theta) })
}

/// Sampling weight Σ|coeff| of a gate-cut decomposition.
pub fn gate_cut_gamma(plan: &GateCutPlan) -> f64 {
    plan.channels.iter().map(|c| c.coefficient.abs()).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CutOp {
    Gate { gate: Gate, origin: usize },
    /// Measurement on `old`, preparation of `new`.
    Wire { cut: usize, old: QubitId, new: QubitId },
    GateSlot { cut: usize, origin: usize, plan: GateCutPlan },
}

/// Circuit with cut slots. Wire cuts come first in slot numbering, then
/// gate cuts.
#[derive(Clone, Debug, Serialize)]
pub struct CutCircuit {
    pub num_qubits: usize,
    pub ops: Vec<CutOp>,
    pub observable: PauliString,
    pub k1: usize,
    pub k2: usize,
    /// Original qubit for every wire of the cut circuit.
    pub wire_origin: Vec<QubitId>,
}

impl CutCircuit {
    pub fn build(c: &Circuit, cuts: &CutSet) -> Result<CutCircuit> {
        let n = c.num_qubits;
        let k1 = cuts.k1();
        let obs = c.observable_or_all_z();
        if obs.len() != n {
            return Err(Error::Observable { obs: obs.to_string(), qubits: n });
        }
        // Wire cuts on each qubit, ordered by occurrence.
        let mut wire_cuts: Vec<(QubitId, usize, usize)> =
            cuts.wire_cuts.iter().enumerate().map(|(j, w)| (w.qubit, w.after_occurrence, j)).collect();
        wire_cuts.sort_unstable();
        let gate_cut: std::collections::BTreeMap<usize, usize> =
            cuts.gate_cuts.iter().enumerate().map(|(j, g)| (g.gate_seq, k1 + j)).collect();

        let mut current: Vec<QubitId> = (0..n).collect();
        let mut wire_origin: Vec<QubitId> = (0..n).collect();
        let mut occ = vec![0usize; n];
        let mut ops = Vec::new();
        for g in &c.gates {
            if g.is_two_qubit() {
                for &q in &g.qubits {
                    // a cut after occurrence occ[q]-1 triggers before this gate
                    if occ[q] > 0 {
                        if let Some(&(_, _, j)) = wire_cuts.iter().find(|&&(wq, after, _)| wq == q && after + 1 == occ[q]) {
                            let new = n + j;
                            ops.push(CutOp::Wire { cut: j, old: current[q], new });
                            current[q] = new;
                        }
                    }
                    occ[q] += 1;
                }
            }
            let mut gate = g.clone();
            gate.qubits = g.qubits.iter().map(|&q| current[q]).collect();
            if let Some(&slot) = gate_cut.get(&g.seq) {
                ops.push(CutOp::GateSlot { cut: slot, origin: g.seq, plan: decompose_gate_cut(&gate)? });
            } else {
                ops.push(CutOp::Gate { gate, origin: g.seq });
            }
        }
        let placed = ops.iter().filter(|o| matches!(o, CutOp::Wire { .. })).count();
        if placed != k1 || gate_cut.len() != cuts.k2() {
            return Err(Error::InvalidCircuit("cut set does not match the circuit".into()));
        }
        let mut wires = vec![Basis::I; n + k1];
        for q in 0..n {
            wires[current[q]] = obs.0[q];
        }
        wire_origin.resize(n + k1, 0);
        for &(q, _, j) in &wire_cuts {
            wire_origin[n + j] = q;
        }
        Ok(CutCircuit {
            num_qubits: n + k1,
            ops,
            observable: PauliString(wires),
            k1,
            k2: cuts.k2(),
            wire_origin,
        })
    }

    pub fn num_cuts(&self) -> usize {
        self.k1 + self.k2
    }

    /// Term count per slot: 16 per wire cut, 6 per gate cut.
    pub fn slot_sizes(&self) -> Vec<usize> {
        let mut v = vec![16; self.k1];
        v.extend(std::iter::repeat(6).take(self.k2));
        v
    }

    pub fn term_count(&self) -> BigUint {
        BigUint::from(16u32).pow(self.k1 as u32) * BigUint::from(6u32).pow(self.k2 as u32)
    }

    /// Recombination groups: measurement basis per wire cut, channel per gate cut.
    pub fn postproc_count(&self) -> BigUint {
        BigUint::from(4u32).pow(self.k1 as u32) * BigUint::from(6u32).pow(self.k2 as u32)
    }

    fn gate_plan(&self, slot: usize) -> &GateCutPlan {
        self.ops
            .iter()
            .find_map(|o| match o {
                CutOp::GateSlot { cut, plan, .. } if *cut == slot => Some(plan),
                _ => None,
            })
            .expect("slot exists")
    }

    pub fn coefficient(&self, choice: &[usize]) -> f64 {
        let wire = decompose_wire_cut();
        let mut c = 1.0;
        for (slot, &t) in choice.iter().enumerate() {
            c *= if slot < self.k1 {
                wire[t].coefficient
            } else {
                self.gate_plan(slot).channels[t].coefficient
            };
        }
        c
    }

    /// Concrete circuit for one term per slot.
    pub fn instantiate(&self, choice: &[usize]) -> QpdVariant {
        assert_eq!(choice.len(), self.num_cuts());
        let wire = decompose_wire_cut();
        let mut circ = Circuit::new(self.num_qubits);
        circ.observable = Some(self.observable.clone());
        let mut origin = Vec::new();
        let mut push = |circ: &mut Circuit, kind: GateKind, params: &[f64], qs: &[QubitId], o: Option<usize>| {
            circ.add(kind, params, qs);
            origin.push(o);
        };
        for op in &self.ops {
            match op {
                CutOp::Gate { gate, origin } => push(&mut circ, gate.kind, &gate.params, &gate.qubits, Some(*origin)),
                CutOp::Wire { cut, old, new } => {
                    let t = wire[choice[*cut]];
                    push(&mut circ, GateKind::Measure(t.measure_basis), &[], &[*old], None);
                    push(&mut circ, GateKind::Prepare(t.prepare_state), &[], &[*new], None);
                }
                CutOp::GateSlot { cut, origin, plan } => {
                    for (k, p, q) in &plan.pre {
                        push(&mut circ, *k, p, &[*q], Some(*origin));
                    }
                    let ch = plan.channels[choice[*cut]];
                    for (i, op) in ch.ops.iter().enumerate() {
                        let q = plan.qubits[i];
                        match op {
                            LocalOp::Id => {}
                            LocalOp::Unitary(k) => push(&mut circ, *k, &[], &[q], Some(*origin)),
                            LocalOp::ProjectZ => push(&mut circ, GateKind::Measure(Basis::Z), &[], &[q], Some(*origin)),
                        }
                    }
                    for (k, p, q) in &plan.post {
                        push(&mut circ, *k, p, &[*q], Some(*origin));
                    }
                }
            }
        }
        QpdVariant { circuit: circ, coefficient: self.coefficient(choice), choice: choice.to_vec(), origin }
    }

    /// Every slot choice, zero coefficients included.
    pub fn all_choices(&self) -> Vec<Vec<usize>> {
        product(self.slot_sizes().into_iter().map(|k| (0..k).collect()).collect())
    }

    /// All slot choices with a nonzero coefficient, in lexicographic order.
    pub fn nonzero_choices(&self) -> Vec<Vec<usize>> {
        let wire = decompose_wire_cut();
        let mut per_slot: Vec<Vec<usize>> = Vec::new();
        for slot in 0..self.num_cuts() {
            let terms: Vec<usize> = if slot < self.k1 {
                (0..16).filter(|&t| wire[t].coefficient != 0.0).collect()
            } else {
                let ch = &self.gate_plan(slot).channels;
                (0..6).filter(|&t| ch[t].coefficient != 0.0).collect()
            };
            per_slot.push(terms);
        }
        product(per_slot)
    }
}

fn product(per_slot: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for terms in per_slot {
        out = out
            .into_iter()
            .flat_map(|pre| {
                terms.iter().map(move |&t| {
                    let mut v = pre.clone();
                    v.push(t);
                    v
                })
            })
            .collect();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QpdVariant {
    pub circuit: Circuit,
    pub coefficient: f64,
    /// Term index per cut slot.
    pub choice: Vec<usize>,
    /// Original gate seq per emitted gate; `None` for cut instructions.
    pub origin: Vec<Option<usize>>,
}

/// Qubit-connected piece of a variant circuit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    /// Wires of the variant circuit, ascending.
    pub qubits: Vec<QubitId>,
    pub circuit: Circuit,
    /// Original seqs of the two-qubit gates it contains.
    pub origin_2q: BTreeSet<usize>,
}

impl QpdVariant {
    pub fn components(&self) -> Vec<Component> {
        let c = &self.circuit;
        let mut dsu = crate::graph::Dsu::new(c.num_qubits);
        for g in &c.gates {
            if g.is_two_qubit() {
                dsu.union(g.qubits[0], g.qubits[1]);
            }
        }
        let labels = dsu.labels();
        let obs = c.observable_or_all_z();
        let mut out = Vec::new();
        for comp in labels.members() {
            let mut local = vec![usize::MAX; c.num_qubits];
            for (i, &q) in comp.iter().enumerate() {
                local[q] = i;
            }
            let mut sub = Circuit::new(comp.len());
            sub.observable = Some(PauliString(comp.iter().map(|&q| obs.0[q]).collect()));
            let mut origin_2q = BTreeSet::new();
            for (g, o) in c.gates.iter().zip(&self.origin) {
                if local[g.qubits[0]] == usize::MAX {
                    continue;
                }
                let qs: Vec<usize> = g.qubits.iter().map(|&q| local[q]).collect();
                sub.add(g.kind, &g.params, &qs);
                if g.is_two_qubit() {
                    if let Some(o) = o {
                        origin_2q.insert(*o);
                    }
                }
            }
            out.push(Component { qubits: comp, circuit: sub, origin_2q });
        }
        out
    }
}

/// Text key for a circuit plus observable. With `canonical`, qubits are
/// renamed in order of first use so relabeled copies share a key. Basis-I
/// measurements print as Z because both run the same circuit.
pub fn fingerprint(c: &Circuit, canonical: bool, executed: bool) -> String {
    use std::fmt::Write as _;
    let mut rename = vec![usize::MAX; c.num_qubits];
    let mut next = 0;
    let mut s = String::new();
    let mut name = |q: usize, rename: &mut Vec<usize>| {
        if !canonical {
            return q;
        }
        if rename[q] == usize::MAX {
            rename[q] = next;
            next += 1;
        }
        rename[q]
    };
    for g in &c.gates {
        let kind = match g.kind {
            GateKind::Measure(Basis::I) if executed => GateKind::Measure(Basis::Z),
            k => k,
        };
        let _ = write!(s, "{}", kind.name());
        for p in &g.params {
            let _ = write!(s, "({p:.12})");
        }
        for &q in &g.qubits {
            let _ = write!(s, " {}", name(q, &mut rename));
        }
        s.push(';');
    }
    let obs = c.observable_or_all_z();
    // unused qubits keep their relative order after used ones
    for q in 0..c.num_qubits {
        name(q, &mut rename);
    }
    let mut letters = vec!['I'; c.num_qubits];
    for q in 0..c.num_qubits {
        letters[if canonical { rename[q] } else { q }] = obs.0[q].symbol();
    }
    if !executed {
        let _ = write!(s, "|{}", letters.iter().collect::<String>());
    }
    let _ = write!(s, "#{}", c.num_qubits);
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub choice: Vec<usize>,
    pub coefficient: f64,
    pub components: Vec<ManifestComponent>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ManifestComponent {
    pub qubits: Vec<QubitId>,
    pub qasm: String,
    pub observable: String,
    /// false when the results are copied from an isomorphic instance.
    pub execute: bool,
}

/// Instances whose results may be shared, given as their two-qubit gate
/// seqs; the last `reuse_count` instances copy from the others.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ReusePlan {
    pub instances: Vec<BTreeSet<usize>>,
    pub reuse_count: usize,
}

impl ReusePlan {
    pub fn is_reused(&self, origin_2q: &BTreeSet<usize>) -> bool {
        let m = self.instances.len();
        self.reuse_count > 0
            && self.instances[m - self.reuse_count.min(m.saturating_sub(1))..]
                .iter()
                .any(|inst| inst == origin_2q)
    }

    pub fn is_instance(&self, origin_2q: &BTreeSet<usize>) -> bool {
        self.instances.iter().any(|inst| inst == origin_2q)
    }
}

pub fn check_cap(cc: &CutCircuit, cap: u64) -> Result<()> {
    let count = cc.term_count();
    if count > BigUint::from(cap) {
        return Err(Error::TooManyVariants { count: count.to_string(), cap });
    }
    Ok(())
}

/// Every nonzero-coefficient variant with its components.
pub fn enumerate_variants(c: &Circuit, cuts: &CutSet, reuse: &ReusePlan, cap: u64) -> Result<(CutCircuit, Vec<ManifestEntry>)> {
    let cc = CutCircuit::build(c, cuts)?;
    check_cap(&cc, cap)?;
    let entries = cc
        .nonzero_choices()
        .into_iter()
        .map(|choice| {
            let v = cc.instantiate(&choice);
            let components = v
                .components()
                .into_iter()
                .map(|comp| ManifestComponent {
                    qasm: to_qasm(&comp.circuit),
                    observable: comp.circuit.observable_or_all_z().to_string(),
                    execute: !reuse.is_reused(&comp.origin_2q),
                    qubits: comp.qubits,
                })
                .collect();
            ManifestEntry { choice, coefficient: v.coefficient, components }
        })
        .collect();
    Ok((cc, entries))
}
