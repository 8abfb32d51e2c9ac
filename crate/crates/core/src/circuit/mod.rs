//! Gate-list circuit IR, OpenQASM subset front end and benchmark generators.

pub mod bench;
mod qasm;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use qasm::{parse_qasm, to_qasm};

/// Logical qubit wire index.
pub type QubitId = usize;

/// Absolute tolerance used whenever gate angles are compared.
pub const ANGLE_TOL: f64 = 1e-9;

/// Single-qubit Pauli basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    I,
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 4] = [Basis::I, Basis::X, Basis::Y, Basis::Z];

    pub fn symbol(self) -> char {
        match self {
            Basis::I => 'I',
            Basis::X => 'X',
            Basis::Y => 'Y',
            Basis::Z => 'Z',
        }
    }
}

/// Fresh-wire preparation used on the downstream side of a wire cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrepState {
    Zero,
    One,
    Plus,
    /// `S·H|0⟩`
    IPlus,
}

impl PrepState {
    pub const ALL: [PrepState; 4] = [PrepState::Zero, PrepState::One, PrepState::Plus, PrepState::IPlus];

    pub fn name(self) -> &'static str {
        match self {
            PrepState::Zero => "zero",
            PrepState::One => "one",
            PrepState::Plus => "plus",
            PrepState::IPlus => "iplus",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    RX,
    RY,
    RZ,
    RZZ,
    CX,
    CZ,
    CP,
    SWAP,
    /// Signed projective measurement in a Pauli basis. The qubit keeps its
    /// post-measurement state; the outcome eigenvalue multiplies the result.
    /// Only produced by cut expansion.
    Measure(Basis),
    /// Prepares an untouched wire in one of the four cut eigenstates.
    /// Only produced by cut expansion.
    Prepare(PrepState),
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::RZZ | GateKind::CX | GateKind::CZ | GateKind::CP | GateKind::SWAP => 2,
            _ => 1,
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::RZZ | GateKind::CP => 1,
            _ => 0,
        }
    }

    pub fn is_two_qubit(self) -> bool {
        self.arity() == 2
    }

    /// Whether the kind may appear in user input.
    pub fn is_user_gate(self) -> bool {
        !matches!(self, GateKind::Measure(_) | GateKind::Prepare(_))
    }

    /// CNOT-equivalent cost of a two-qubit kind (0 for single-qubit kinds).
    pub fn cnot_cost(self) -> u64 {
        match self {
            GateKind::SWAP => 3,
            k if k.is_two_qubit() => 1,
            _ => 0,
        }
    }

    pub fn name(self) -> String {
        match self {
            GateKind::H => "h".into(),
            GateKind::X => "x".into(),
            GateKind::Y => "y".into(),
            GateKind::Z => "z".into(),
            GateKind::S => "s".into(),
            GateKind::Sdg => "sdg".into(),
            GateKind::T => "t".into(),
            GateKind::Tdg => "tdg".into(),
            GateKind::RX => "rx".into(),
            GateKind::RY => "ry".into(),
            GateKind::RZ => "rz".into(),
            GateKind::RZZ => "rzz".into(),
            GateKind::CX => "cx".into(),
            GateKind::CZ => "cz".into(),
            GateKind::CP => "cp".into(),
            GateKind::SWAP => "swap".into(),
            GateKind::Measure(b) => format!("measure_{}", b.symbol().to_ascii_lowercase()),
            GateKind::Prepare(p) => format!("prepare_{}", p.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub params: Vec<f64>,
    pub qubits: Vec<QubitId>,
    /// Program-order index, strictly increasing within a circuit.
    pub seq: usize,
}

impl Gate {
    pub fn is_two_qubit(&self) -> bool {
        self.qubits.len() == 2
    }

    /// Same kind, same operands and parameters equal within [`ANGLE_TOL`].
    pub fn approx_eq(&self, other: &Gate) -> bool {
        self.kind == other.kind
            && self.qubits == other.qubits
            && params_match(&self.params, &other.params)
    }

    pub fn acts_on(&self, q: QubitId) -> bool {
        self.qubits.contains(&q)
    }
}

pub fn params_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= ANGLE_TOL)
}

/// Pauli observable, one letter per qubit (qubit 0 first).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString(pub Vec<Basis>);

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString(vec![Basis::I; n])
    }

    pub fn all_z(n: usize) -> Self {
        PauliString(vec![Basis::Z; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", b.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Basis::I),
                'X' => Ok(Basis::X),
                'Y' => Ok(Basis::Y),
                'Z' => Ok(Basis::Z),
                other => Err(Error::Observable {
                    obs: format!("{s} (bad letter {other:?})"),
                    qubits: s.len(),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    pub observable: Option<PauliString>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
            observable: None,
        }
    }

    /// Appends a validated gate and returns its seq.
    pub fn push(&mut self, kind: GateKind, params: &[f64], qubits: &[QubitId]) -> Result<usize> {
        let seq = self.gates.last().map_or(0, |g| g.seq + 1);
        let gate = Gate {
            kind,
            params: params.to_vec(),
            qubits: qubits.to_vec(),
            seq,
        };
        self.check_gate(&gate)?;
        self.gates.push(gate);
        Ok(seq)
    }

    fn check_gate(&self, g: &Gate) -> Result<()> {
        if g.qubits.len() != g.kind.arity() {
            return Err(Error::InvalidCircuit(format!(
                "{} expects {} qubit(s), got {}",
                g.kind.name(),
                g.kind.arity(),
                g.qubits.len()
            )));
        }
        if g.params.len() != g.kind.param_count() {
            return Err(Error::InvalidCircuit(format!(
                "{} expects {} parameter(s), got {}",
                g.kind.name(),
                g.kind.param_count(),
                g.params.len()
            )));
        }
        if let Some(&q) = g.qubits.iter().find(|&&q| q >= self.num_qubits) {
            return Err(Error::InvalidCircuit(format!(
                "qubit {q} out of range for {} qubits",
                self.num_qubits
            )));
        }
        if g.qubits.len() == 2 && g.qubits[0] == g.qubits[1] {
            return Err(Error::InvalidCircuit(format!(
                "{} on repeated qubit {}",
                g.kind.name(),
                g.qubits[0]
            )));
        }
        Ok(())
    }

    /// Checks every structural invariant of a circuit.
    pub fn validate(&self) -> Result<()> {
        let mut last: Option<usize> = None;
        for g in &self.gates {
            self.check_gate(g)?;
            if last.is_some_and(|l| g.seq <= l) {
                return Err(Error::InvalidCircuit("gate seq not strictly increasing".into()));
            }
            last = Some(g.seq);
        }
        if let Some(obs) = &self.observable {
            if obs.len() != self.num_qubits {
                return Err(Error::Observable {
                    obs: obs.to_string(),
                    qubits: self.num_qubits,
                });
            }
        }
        Ok(())
    }

    /// Renumbers seq to 0..len.
    pub fn reindex(&mut self) {
        for (i, g) in self.gates.iter_mut().enumerate() {
            g.seq = i;
        }
    }

    pub fn gate_by_seq(&self, seq: usize) -> Option<&Gate> {
        self.gates
            .binary_search_by_key(&seq, |g| g.seq)
            .ok()
            .map(|i| &self.gates[i])
    }

    pub fn two_qubit_gates(&self) -> Vec<&Gate> {
        self.gates.iter().filter(|g| g.is_two_qubit()).collect()
    }

    /// Gates whose every earlier gate on a shared qubit is in `executed`.
    pub fn front_layer(&self, executed: &HashSet<usize>) -> Vec<&Gate> {
        let mut blocked = vec![false; self.num_qubits];
        let mut front = Vec::new();
        for g in &self.gates {
            if executed.contains(&g.seq) {
                continue;
            }
            if g.qubits.iter().all(|&q| !blocked[q]) {
                front.push(g);
            }
            for &q in &g.qubits {
                blocked[q] = true;
            }
        }
        front
    }

    pub fn observable_or_all_z(&self) -> PauliString {
        self.observable
            .clone()
            .unwrap_or_else(|| PauliString::all_z(self.num_qubits))
    }

    /// Per-qubit count of gates of any arity.
    pub fn gate_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_qubits];
        for g in &self.gates {
            for &q in &g.qubits {
                counts[q] += 1;
            }
        }
        counts
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    // Builder shorthands used by generators and tests.

    pub fn h(&mut self, q: QubitId) -> &mut Self {
        self.add(GateKind::H, &[], &[q])
    }

    pub fn x(&mut self, q: QubitId) -> &mut Self {
        self.add(GateKind::X, &[], &[q])
    }

    pub fn rx(&mut self, theta: f64, q: QubitId) -> &mut Self {
        self.add(GateKind::RX, &[theta], &[q])
    }

    pub fn ry(&mut self, theta: f64, q: QubitId) -> &mut Self {
        self.add(GateKind::RY, &[theta], &[q])
    }

    pub fn rz(&mut self, theta: f64, q: QubitId) -> &mut Self {
        self.add(GateKind::RZ, &[theta], &[q])
    }

    pub fn cx(&mut self, c: QubitId, t: QubitId) -> &mut Self {
        self.add(GateKind::CX, &[], &[c, t])
    }

    pub fn cz(&mut self, a: QubitId, b: QubitId) -> &mut Self {
        self.add(GateKind::CZ, &[], &[a, b])
    }

    pub fn cp(&mut self, lambda: f64, a: QubitId, b: QubitId) -> &mut Self {
        self.add(GateKind::CP, &[lambda], &[a, b])
    }

    /// Appends a gate, panicking on invalid operands. Use [`Circuit::push`]
    /// for fallible insertion.
    pub fn add(&mut self, kind: GateKind, params: &[f64], qubits: &[QubitId]) -> &mut Self {
        self.push(kind, params, qubits).expect("invalid gate");
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz4() -> Circuit {
        let mut c = Circuit::new(4);
        c.h(0).cx(0, 1).cx(1, 2).cx(2, 3);
        c
    }

    #[test]
    fn front_layer_follows_dependencies() {
        let c = ghz4();
        let front: Vec<usize> = c.front_layer(&HashSet::new()).iter().map(|g| g.seq).collect();
        assert_eq!(front, vec![0]);
        let done: HashSet<usize> = [0, 1].into_iter().collect();
        let front: Vec<usize> = c.front_layer(&done).iter().map(|g| g.seq).collect();
        assert_eq!(front, vec![2]);
    }

    #[test]
    fn disjoint_pairs_both_in_front() {
        let mut c = Circuit::new(4);
        c.cx(0, 1).cx(2, 3);
        assert_eq!(c.front_layer(&HashSet::new()).len(), 2);
    }

    #[test]
    fn two_qubit_subsequence() {
        assert_eq!(ghz4().two_qubit_gates().len(), 3);
        let mut c = Circuit::new(2);
        c.h(0).h(1);
        assert!(c.two_qubit_gates().is_empty());
    }

    #[test]
    fn rejects_bad_gates() {
        let mut c = Circuit::new(2);
        assert!(c.push(GateKind::CX, &[], &[0, 0]).is_err());
        assert!(c.push(GateKind::CX, &[], &[0, 2]).is_err());
        assert!(c.push(GateKind::RZ, &[], &[0]).is_err());
        assert!(c.push(GateKind::H, &[0.1], &[0]).is_err());
    }

    #[test]
    fn pauli_string_parse() {
        let p: PauliString = "IxYz".parse().unwrap();
        assert_eq!(p.to_string(), "IXYZ");
        assert!("IQ".parse::<PauliString>().is_err());
    }
}
