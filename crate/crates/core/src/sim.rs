//! Dense statevector simulation with signed projective branches.
//!
//! Qubit 0 is the least significant bit of the amplitude index.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::{Basis, Circuit, Gate, GateKind, PauliString, PrepState};
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 26;
pub const DEFAULT_BRANCH_CAP: usize = 8;

type C = Complex64;
type M2 = [[C; 2]; 2];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub n: usize,
    pub amps: Vec<C>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpectationResult {
    pub observable: String,
    pub value: f64,
    pub shots: Option<usize>,
    pub variance: f64,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits { qubits: n, max: MAX_QUBITS });
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(StateVector { n, amps })
    }

    pub fn from_amps(amps: Vec<C>) -> Self {
        assert!(amps.len().is_power_of_two());
        let n = amps.len().trailing_zeros() as usize;
        StateVector { n, amps }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> C {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn apply_1q(&mut self, q: usize, m: &M2) {
        let bit = 1 << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    fn apply_diag2(&mut self, a: usize, b: usize, d: [C; 4]) {
        for (i, amp) in self.amps.iter_mut().enumerate() {
            let k = ((i >> a) & 1) | (((i >> b) & 1) << 1);
            *amp *= d[k];
        }
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        let q = &g.qubits;
        match g.kind {
            GateKind::CX => {
                let (c, t) = (1 << q[0], 1 << q[1]);
                for i in 0..self.amps.len() {
                    if i & c != 0 && i & t == 0 {
                        self.amps.swap(i, i | t);
                    }
                }
            }
            GateKind::SWAP => {
                let (a, b) = (1 << q[0], 1 << q[1]);
                for i in 0..self.amps.len() {
                    if i & a != 0 && i & b == 0 {
                        self.amps.swap(i, (i & !a) | b);
                    }
                }
            }
            GateKind::CZ => self.apply_diag2(q[0], q[1], [ONE, ONE, ONE, -ONE]),
            GateKind::CP => {
                let p = C::from_polar(1.0, g.params[0]);
                self.apply_diag2(q[0], q[1], [ONE, ONE, ONE, p]);
            }
            GateKind::RZZ => {
                let (m, p) = (C::from_polar(1.0, -g.params[0] / 2.0), C::from_polar(1.0, g.params[0] / 2.0));
                self.apply_diag2(q[0], q[1], [m, p, p, m]);
            }
            GateKind::Prepare(p) => {
                // Only valid on a wire still in |0>.
                match p {
                    PrepState::Zero => {}
                    PrepState::One => self.apply_1q(q[0], &matrix_1q(GateKind::X, &[])),
                    PrepState::Plus => self.apply_1q(q[0], &matrix_1q(GateKind::H, &[])),
                    PrepState::IPlus => {
                        self.apply_1q(q[0], &matrix_1q(GateKind::H, &[]));
                        self.apply_1q(q[0], &matrix_1q(GateKind::S, &[]));
                    }
                }
            }
            GateKind::Measure(_) => {
                return Err(Error::InvalidCircuit(
                    "projective measurement needs branch evaluation".into(),
                ))
            }
            k => self.apply_1q(q[0], &matrix_1q(k, &g.params)),
        }
        Ok(())
    }

    /// Applies a Pauli on one qubit.
    fn apply_pauli(&mut self, q: usize, b: Basis) {
        match b {
            Basis::I => {}
            Basis::X => self.apply_1q(q, &matrix_1q(GateKind::X, &[])),
            Basis::Y => self.apply_1q(q, &matrix_1q(GateKind::Y, &[])),
            Basis::Z => self.apply_1q(q, &matrix_1q(GateKind::Z, &[])),
        }
    }

    /// Unnormalized projection onto the `sign` eigenspace of `b` on `q`.
    pub fn project(&mut self, q: usize, b: Basis, sign: f64) {
        let mut flipped = self.clone();
        flipped.apply_pauli(q, b);
        for (a, f) in self.amps.iter_mut().zip(flipped.amps) {
            *a = (*a + f * sign) * 0.5;
        }
    }

    pub fn amplitude_dump(&self) -> Result<String> {
        if self.n > 10 {
            return Err(Error::TooManyQubits { qubits: self.n, max: 10 });
        }
        let pairs: Vec<[f64; 2]> = self.amps.iter().map(|a| [a.re, a.im]).collect();
        Ok(serde_json::to_string(&pairs)?)
    }
}

pub fn matrix_1q(kind: GateKind, params: &[f64]) -> M2 {
    let h = C::new(FRAC_1_SQRT_2, 0.0);
    let t = C::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    match kind {
        GateKind::H => [[h, h], [h, -h]],
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Y => [[ZERO, -I], [I, ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::S => [[ONE, ZERO], [ZERO, I]],
        GateKind::Sdg => [[ONE, ZERO], [ZERO, -I]],
        GateKind::T => [[ONE, ZERO], [ZERO, t]],
        GateKind::Tdg => [[ONE, ZERO], [ZERO, t.conj()]],
        GateKind::RX => {
            let (c, s) = ((params[0] / 2.0).cos(), (params[0] / 2.0).sin());
            [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]]
        }
        GateKind::RY => {
            let (c, s) = ((params[0] / 2.0).cos(), (params[0] / 2.0).sin());
            [[C::new(c, 0.0), C::new(-s, 0.0)], [C::new(s, 0.0), C::new(c, 0.0)]]
        }
        GateKind::RZ => [
            [C::from_polar(1.0, -params[0] / 2.0), ZERO],
            [ZERO, C::from_polar(1.0, params[0] / 2.0)],
        ],
        k => panic!("{} is not a single-qubit unitary", k.name()),
    }
}

pub fn simulate(c: &Circuit) -> Result<StateVector> {
    let mut sv = StateVector::zero(c.num_qubits)?;
    for g in &c.gates {
        sv.apply_gate(g)?;
    }
    Ok(sv)
}

/// ⟨ψ|P|ψ⟩ for a Pauli string (letter i acts on qubit i).
pub fn expectation(sv: &StateVector, obs: &PauliString) -> Result<f64> {
    if obs.len() != sv.n {
        return Err(Error::Observable { obs: obs.to_string(), qubits: sv.n });
    }
    let (mut xm, mut zm, mut ny) = (0usize, 0usize, 0u32);
    for (q, b) in obs.0.iter().enumerate() {
        match b {
            Basis::I => {}
            Basis::X => xm |= 1 << q,
            Basis::Y => {
                xm |= 1 << q;
                zm |= 1 << q;
                ny += 1;
            }
            Basis::Z => zm |= 1 << q,
        }
    }
    let global = I.powu(ny);
    let mut acc = ZERO;
    for (i, a) in sv.amps.iter().enumerate() {
        let sign = if (i & zm).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        acc += sv.amps[i ^ xm].conj() * a * sign;
    }
    Ok((acc * global).re)
}

/// One outcome path of a circuit with projective measurements.
#[derive(Clone, Debug)]
pub struct Leaf {
    /// Product of measured eigenvalues along the path.
    pub sign: f64,
    pub prob: f64,
    /// Normalized expectation of the (folded) observable on this path.
    pub value: f64,
}

/// Enumerates the projective branches of `c`.
///
/// A measurement with no later gate on its qubit is folded into the
/// observable instead of branching (that qubit's observable letter must
/// be I). Basis-I measurements are no-ops. `cap` bounds the number of
/// mid-circuit projections.
pub fn branch_leaves(c: &Circuit, obs: &PauliString, cap: usize) -> Result<Vec<Leaf>> {
    if obs.len() != c.num_qubits {
        return Err(Error::Observable { obs: obs.to_string(), qubits: c.num_qubits });
    }
    let mut obs = obs.clone();
    let mut last = vec![usize::MAX; c.num_qubits];
    for (i, g) in c.gates.iter().enumerate() {
        for &q in &g.qubits {
            last[q] = i;
        }
    }
    let mut fold = vec![false; c.gates.len()];
    let mut mid = 0;
    for (i, g) in c.gates.iter().enumerate() {
        if let GateKind::Measure(b) = g.kind {
            let q = g.qubits[0];
            if b == Basis::I {
                continue;
            }
            if last[q] == i && obs.0[q] == Basis::I {
                obs.0[q] = b;
                fold[i] = true;
            } else {
                mid += 1;
            }
        }
    }
    if mid > cap {
        return Err(Error::BranchExplosion { depth: mid, cap });
    }
    let mut leaves = Vec::new();
    let sv = StateVector::zero(c.num_qubits)?;
    walk(c, &fold, &obs, 0, sv, 1.0, &mut leaves)?;
    Ok(leaves)
}

fn walk(
    c: &Circuit,
    fold: &[bool],
    obs: &PauliString,
    start: usize,
    mut sv: StateVector,
    sign: f64,
    out: &mut Vec<Leaf>,
) -> Result<()> {
    for i in start..c.gates.len() {
        let g = &c.gates[i];
        match g.kind {
            GateKind::Measure(b) if b != Basis::I && !fold[i] => {
                let q = g.qubits[0];
                let mut minus = sv.clone();
                sv.project(q, b, 1.0);
                minus.project(q, b, -1.0);
                if minus.norm_sqr() > 1e-28 {
                    walk(c, fold, obs, i + 1, minus, -sign, out)?;
                }
                if sv.norm_sqr() <= 1e-28 {
                    return Ok(());
                }
                continue;
            }
            GateKind::Measure(_) => continue,
            _ => sv.apply_gate(g)?,
        }
    }
    let prob = sv.norm_sqr();
    let value = if prob > 0.0 { expectation(&sv, obs)? / prob } else { 0.0 };
    out.push(Leaf { sign, prob, value });
    Ok(())
}

/// Exact Σ over branches of sign · ⟨ψ_b|O|ψ_b⟩ (unnormalized branch states).
pub fn branch_eval(c: &Circuit, obs: &PauliString, cap: usize) -> Result<f64> {
    Ok(branch_leaves(c, obs, cap)?
        .iter()
        .map(|l| l.sign * l.prob * l.value)
        .sum())
}

/// Shot estimate of [`branch_eval`]: each shot draws a branch, then a
/// parity outcome of the observable on that branch.
pub fn branch_sample(c: &Circuit, obs: &PauliString, cap: usize, shots: usize, seed: u64) -> Result<ExpectationResult> {
    let leaves = branch_leaves(c, obs, cap)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shots = shots.max(1);
    let weights: Vec<f64> = leaves.iter().map(|l| l.prob).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidCircuit(e.to_string()))?;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..shots {
        let l = &leaves[dist.sample(&mut rng)];
        let p_plus = ((1.0 + l.value) / 2.0).clamp(0.0, 1.0);
        let parity = if rng.gen_bool(p_plus) { 1.0 } else { -1.0 };
        let x = l.sign * parity;
        sum += x;
        sum_sq += x * x;
    }
    let mean = sum / shots as f64;
    Ok(ExpectationResult {
        observable: obs.to_string(),
        value: mean,
        shots: Some(shots),
        variance: (sum_sq / shots as f64 - mean * mean) / shots as f64,
    })
}

/// Multinomial measurement histogram. Keys print qubit n-1 first.
pub fn sample(sv: &StateVector, shots: usize, seed: u64) -> BTreeMap<String, usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs: Vec<f64> = sv.amps.iter().map(|a| a.norm_sqr()).collect();
    let dist = WeightedIndex::new(&probs).expect("state has nonzero norm");
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let i = dist.sample(&mut rng);
        let key: String = (0..sv.n).rev().map(|q| if i >> q & 1 == 1 { '1' } else { '0' }).collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::bench;
    use proptest::prelude::*;
    use rand::Rng;

    fn close(a: C, b: C) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn ghz_state() {
        let sv = simulate(&bench::ghz(4)).unwrap();
        let h = FRAC_1_SQRT_2;
        for (i, a) in sv.amps.iter().enumerate() {
            let want = if i == 0 || i == 15 { h } else { 0.0 };
            assert!(close(*a, C::new(want, 0.0)), "amp {i} = {a}");
        }
        assert!((expectation(&sv, &"ZZZZ".parse().unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!(expectation(&sv, &"ZIII".parse().unwrap()).unwrap().abs() < 1e-12);
        assert!((expectation(&sv, &"IIII".parse().unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!((expectation(&sv, &"XXXX".parse().unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_circuit_is_all_zero() {
        let sv = simulate(&Circuit::new(2)).unwrap();
        assert_eq!(sv.amps[0], ONE);
        assert!(sv.amps[1..].iter().all(|a| *a == ZERO));
    }

    #[test]
    fn qft_matches_dft() {
        // DFT matrix column for an arbitrary input basis state. Without the
        // final swaps the input register reads bit-reversed.
        let n = 4;
        let dim = 1 << n;
        for input in [0usize, 5, 11] {
            let mut c = Circuit::new(n);
            for q in 0..n {
                if input >> q & 1 == 1 {
                    c.x(q);
                }
            }
            let qft = bench::qft(n);
            for g in &qft.gates {
                c.add(g.kind, &g.params, &g.qubits);
            }
            let sv = simulate(&c).unwrap();
            // Qubit 0 is processed first so it plays the most significant bit.
            let rev = |x: usize| (0..n).fold(0, |acc, b| acc | ((x >> b & 1) << (n - 1 - b)));
            let x = rev(input);
            for k in 0..dim {
                let want = C::from_polar(1.0 / 4.0, 2.0 * std::f64::consts::PI * (x * k) as f64 / dim as f64);
                assert!(close(sv.amps[k], want), "input {input} k {k}");
            }
        }
    }

    #[test]
    fn y_expectation_sign() {
        let mut c = Circuit::new(1);
        c.add(GateKind::Prepare(PrepState::IPlus), &[], &[0]);
        let sv = simulate(&c).unwrap();
        assert!((expectation(&sv, &"Y".parse().unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_on_plus_state_averages_out() {
        let mut c = Circuit::new(1);
        c.h(0).add(GateKind::Measure(Basis::Z), &[], &[0]).h(0);
        let v = branch_eval(&c, &"Z".parse().unwrap(), 8).unwrap();
        assert!(v.abs() < 1e-12);
        // Terminal measurement folds into the observable.
        let mut c = Circuit::new(1);
        c.h(0).add(GateKind::Measure(Basis::X), &[], &[0]);
        assert!((branch_eval(&c, &"I".parse().unwrap(), 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branch_eval_without_projectors_is_expectation() {
        let c = bench::hwea(3, 7);
        let obs: PauliString = "XYZ".parse().unwrap();
        let a = branch_eval(&c, &obs, 8).unwrap();
        let b = expectation(&simulate(&c).unwrap(), &obs).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn branch_cap_enforced() {
        let mut c = Circuit::new(1);
        for _ in 0..3 {
            c.h(0).add(GateKind::Measure(Basis::Z), &[], &[0]);
        }
        c.h(0);
        assert!(matches!(
            branch_eval(&c, &"Z".parse().unwrap(), 2),
            Err(Error::BranchExplosion { depth: 3, cap: 2 })
        ));
    }

    #[test]
    fn sampling() {
        let sv = StateVector::zero(1).unwrap();
        assert_eq!(sample(&sv, 100, 1).get("0"), Some(&100));
        let mut c = Circuit::new(1);
        c.h(0);
        let counts = sample(&simulate(&c).unwrap(), 100_000, 42);
        let p0 = counts["0"] as f64 / 1e5;
        assert!((p0 - 0.5).abs() < 0.01);
        let counts = sample(&simulate(&bench::ghz(4)).unwrap(), 10_000, 3);
        assert!(counts.keys().all(|k| k == "0000" || k == "1111"));
    }

    #[test]
    fn shot_estimate_converges() {
        let c = bench::hwea(3, 2);
        let obs: PauliString = "ZZZ".parse().unwrap();
        let exact = branch_eval(&c, &obs, 8).unwrap();
        let est = branch_sample(&c, &obs, 8, 20_000, 5).unwrap();
        assert!((est.value - exact).abs() < 6.0 * est.variance.sqrt() + 1e-3);
    }

    #[test]
    fn too_many_qubits() {
        assert!(matches!(StateVector::zero(27), Err(Error::TooManyQubits { .. })));
    }

    proptest! {
        #[test]
        fn gates_preserve_norm(seed in 0u64..1000, n in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let kinds = [GateKind::H, GateKind::Y, GateKind::T, GateKind::RX, GateKind::RY, GateKind::RZ,
                         GateKind::CX, GateKind::CZ, GateKind::CP, GateKind::RZZ, GateKind::SWAP];
            let mut sv = StateVector::zero(n).unwrap();
            for q in 0..n { sv.apply_1q(q, &matrix_1q(GateKind::RY, &[rng.gen_range(0.0..3.0)])); }
            for seq in 0..20 {
                let kind = kinds[rng.gen_range(0..kinds.len())];
                if kind.arity() == 2 && n < 2 { continue; }
                let a = rng.gen_range(0..n);
                let qubits = if kind.arity() == 2 { vec![a, (a + rng.gen_range(1..n)) % n] } else { vec![a] };
                let params = (0..kind.param_count()).map(|_| rng.gen_range(-4.0..4.0)).collect();
                sv.apply_gate(&Gate { kind, params, qubits, seq }).unwrap();
                prop_assert!((sv.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn simulation_is_linear(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = bench::hwea(3, seed);
            let rand_state = |rng: &mut ChaCha8Rng| StateVector::from_amps(
                (0..8).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
            let (a, b) = (rand_state(&mut rng), rand_state(&mut rng));
            let (x, y) = (C::new(0.3, -1.2), C::new(-0.7, 0.4));
            let run = |mut s: StateVector| { for g in &c.gates { s.apply_gate(g).unwrap(); } s };
            let mix = StateVector::from_amps(a.amps.iter().zip(&b.amps).map(|(p, q)| x * p + y * q).collect());
            let lhs = run(mix);
            let (ra, rb) = (run(a), run(b));
            for i in 0..8 {
                prop_assert!((lhs.amps[i] - (x * ra.amps[i] + y * rb.amps[i])).norm() < 1e-12);
            }
        }
    }
}
