//! Small dense density-matrix oracle shared by the integration tests.
//! Matrices are written out by hand so the checks do not depend on the
//! simulator's gate kernels.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use qdcut::circuit::{Basis, Circuit, GateKind, PrepState};
use qdcut::qpd::{decompose_gate_cut, LocalOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<C>>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn zeros(d: usize) -> Mat {
    vec![vec![c(0.0, 0.0); d]; d]
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let d = a.len();
    let mut out = zeros(d);
    for i in 0..d {
        for k in 0..d {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn dagger(a: &Mat) -> Mat {
    let d = a.len();
    let mut out = zeros(d);
    for i in 0..d {
        for j in 0..d {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub fn add_scaled(acc: &mut Mat, m: &Mat, w: f64) {
    for (ra, rm) in acc.iter_mut().zip(m) {
        for (x, y) in ra.iter_mut().zip(rm) {
            *x += y * w;
        }
    }
}

pub fn max_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

pub fn trace(a: &Mat) -> C {
    (0..a.len()).map(|i| a[i][i]).sum()
}

pub fn conj_by(u: &Mat, rho: &Mat) -> Mat {
    matmul(&matmul(u, rho), &dagger(u))
}

/// Single-qubit matrices.
pub fn m1(kind: GateKind, params: &[f64]) -> Mat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match kind {
        GateKind::H => vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]],
        GateKind::X => vec![vec![z, o], vec![o, z]],
        GateKind::Y => vec![vec![z, -i], vec![i, z]],
        GateKind::Z => vec![vec![o, z], vec![z, -o]],
        GateKind::S => vec![vec![o, z], vec![z, i]],
        GateKind::Sdg => vec![vec![o, z], vec![z, -i]],
        GateKind::T => vec![vec![o, z], vec![z, C::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
        GateKind::Tdg => vec![vec![o, z], vec![z, C::from_polar(1.0, -std::f64::consts::FRAC_PI_4)]],
        GateKind::RZ => vec![
            vec![C::from_polar(1.0, -params[0] / 2.0), z],
            vec![z, C::from_polar(1.0, params[0] / 2.0)],
        ],
        GateKind::RX => {
            let (co, si) = ((params[0] / 2.0).cos(), (params[0] / 2.0).sin());
            vec![vec![c(co, 0.0), c(0.0, -si)], vec![c(0.0, -si), c(co, 0.0)]]
        }
        GateKind::RY => {
            let (co, si) = ((params[0] / 2.0).cos(), (params[0] / 2.0).sin());
            vec![vec![c(co, 0.0), c(-si, 0.0)], vec![c(si, 0.0), c(co, 0.0)]]
        }
        k => panic!("no 1q matrix for {k:?}"),
    }
}

/// Two-qubit matrices in the basis index `bit(q0) + 2·bit(q1)`.
pub fn m2(kind: GateKind, params: &[f64]) -> Mat {
    let mut m = zeros(4);
    match kind {
        GateKind::CX => {
            // control q0, target q1: |1,0> <-> |1,1>, i.e. index 1 <-> 3
            m[0][0] = c(1.0, 0.0);
            m[2][2] = c(1.0, 0.0);
            m[3][1] = c(1.0, 0.0);
            m[1][3] = c(1.0, 0.0);
        }
        GateKind::CZ => {
            for k in 0..4 {
                m[k][k] = c(if k == 3 { -1.0 } else { 1.0 }, 0.0);
            }
        }
        GateKind::CP => {
            for k in 0..3 {
                m[k][k] = c(1.0, 0.0);
            }
            m[3][3] = C::from_polar(1.0, params[0]);
        }
        GateKind::RZZ => {
            for k in 0..4 {
                let parity = if k == 0 || k == 3 { 1.0 } else { -1.0 };
                m[k][k] = C::from_polar(1.0, -parity * params[0] / 2.0);
            }
        }
        GateKind::SWAP => {
            m[0][0] = c(1.0, 0.0);
            m[3][3] = c(1.0, 0.0);
            m[1][2] = c(1.0, 0.0);
            m[2][1] = c(1.0, 0.0);
        }
        k => panic!("no 2q matrix for {k:?}"),
    }
    m
}

/// Embeds a local matrix acting on `qubits` into an n-qubit space.
pub fn embed(local: &Mat, qubits: &[usize], n: usize) -> Mat {
    let d = 1 << n;
    let mask: usize = qubits.iter().map(|q| 1 << q).sum();
    let sub = |i: usize| qubits.iter().enumerate().map(|(k, &q)| ((i >> q) & 1) << k).sum::<usize>();
    let mut out = zeros(d);
    for i in 0..d {
        for j in 0..d {
            if i & !mask == j & !mask {
                out[i][j] = local[sub(i)][sub(j)];
            }
        }
    }
    out
}

pub fn gate_unitary(kind: GateKind, params: &[f64], qubits: &[usize], n: usize) -> Mat {
    if qubits.len() == 2 {
        embed(&m2(kind, params), qubits, n)
    } else {
        embed(&m1(kind, params), qubits, n)
    }
}

pub fn pauli(b: Basis) -> Mat {
    match b {
        Basis::I => vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]],
        Basis::X => m1(GateKind::X, &[]),
        Basis::Y => m1(GateKind::Y, &[]),
        Basis::Z => m1(GateKind::Z, &[]),
    }
}

pub fn prep(p: PrepState) -> Mat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v: [C; 2] = match p {
        PrepState::Zero => [c(1.0, 0.0), c(0.0, 0.0)],
        PrepState::One => [c(0.0, 0.0), c(1.0, 0.0)],
        PrepState::Plus => [c(s, 0.0), c(s, 0.0)],
        PrepState::IPlus => [c(s, 0.0), c(0.0, s)],
    };
    (0..2).map(|i| (0..2).map(|j| v[i] * v[j].conj()).collect()).collect()
}

/// Signed projective Z measurement: Σ_s s · P_s ρ P_s.
pub fn signed_project(rho: &Mat, b: Basis, q: usize, n: usize) -> Mat {
    let p = embed(&pauli(b), &[q], n);
    let id = embed(&pauli(Basis::I), &[q], n);
    let mut out = zeros(rho.len());
    for s in [1.0, -1.0] {
        let mut proj = id.clone();
        for (r, pr) in proj.iter_mut().zip(&p) {
            for (x, y) in r.iter_mut().zip(pr) {
                *x = (*x + y * s) * 0.5;
            }
        }
        add_scaled(&mut out, &conj_by(&proj, rho), s);
    }
    out
}

pub fn random_density(n: usize, rng: &mut ChaCha8Rng) -> Mat {
    let d = 1 << n;
    let a: Mat = (0..d)
        .map(|_| (0..d).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect();
    let mut rho = matmul(&a, &dagger(&a));
    let t = trace(&rho).re;
    for r in rho.iter_mut() {
        for x in r.iter_mut() {
            *x /= t;
        }
    }
    rho
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// ⟨O⟩ of a unitary circuit from |0…0⟩ via the density matrix.
pub fn dm_expectation(circ: &Circuit) -> f64 {
    let n = circ.num_qubits;
    let d = 1 << n;
    let mut rho = zeros(d);
    rho[0][0] = c(1.0, 0.0);
    for g in &circ.gates {
        let u = gate_unitary(g.kind, &g.params, &g.qubits, n);
        rho = conj_by(&u, &rho);
    }
    let obs = circ.observable_or_all_z();
    let mut o = embed(&pauli(Basis::I), &[0], n);
    for (q, b) in obs.0.iter().enumerate() {
        o = matmul(&o, &embed(&pauli(*b), &[q], n));
    }
    trace(&matmul(&o, &rho)).re
}

/// Applies a gate-cut plan channel-by-channel to a 2-qubit ρ.
pub fn channel_sum(kind: GateKind, params: &[f64], rho: &Mat) -> Mat {
    let mut circ = Circuit::new(2);
    circ.add(kind, params, &[0, 1]);
    let plan = decompose_gate_cut(&circ.gates[0]).unwrap();
    let mut pre_rho = rho.clone();
    for (k, p, q) in &plan.pre {
        pre_rho = conj_by(&gate_unitary(*k, p, &[*q], 2), &pre_rho);
    }
    let mut acc = zeros(4);
    for ch in &plan.channels {
        let mut r = pre_rho.clone();
        for (i, op) in ch.ops.iter().enumerate() {
            let q = plan.qubits[i];
            r = match op {
                LocalOp::Id => r,
                LocalOp::Unitary(k) => conj_by(&gate_unitary(*k, &[], &[q], 2), &r),
                LocalOp::ProjectZ => signed_project(&r, Basis::Z, q, 2),
            };
        }
        add_scaled(&mut acc, &r, ch.coefficient);
    }
    for (k, p, q) in &plan.post {
        acc = conj_by(&gate_unitary(*k, p, &[*q], 2), &acc);
    }
    acc
}

/// Worst entrywise error of the cut channel sum over 20 random states.
pub fn check_gate(kind: GateKind, params: &[f64], seed: u64) -> f64 {
    let mut r = rng(seed);
    let u = gate_unitary(kind, params, &[0, 1], 2);
    (0..20)
        .map(|_| {
            let rho = random_density(2, &mut r);
            max_diff(&channel_sum(kind, params, &rho), &conj_by(&u, &rho))
        })
        .fold(0.0, f64::max)
}
