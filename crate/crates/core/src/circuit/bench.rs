//! Built-in benchmark circuit generators.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Circuit, GateKind};
use crate::error::{Error, Result};

pub const NAMES: [&str; 9] = ["ghz", "lc", "bv", "bv-random", "qft", "qft-cx", "rca", "hwea", "spm"];

/// Builds a named benchmark. `seed` only matters for the seeded generators.
pub fn builtin(name: &str, n: usize, seed: u64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::Config(format!("benchmark `{name}` needs at least 2 qubits")));
    }
    match name {
        "ghz" => Ok(ghz(n)),
        "lc" => Ok(linear_cluster(n)),
        "bv" => Ok(bv(n)),
        "bv-random" => Ok(bv_random(n, seed)),
        "qft" => Ok(qft(n)),
        "qft-cx" => Ok(qft_cx(n)),
        "rca" => rca(n, seed),
        "hwea" => Ok(hwea(n, seed)),
        "spm" => Ok(spm(n, seed)),
        other => Err(Error::Config(format!(
            "unknown benchmark `{other}` (expected one of {})",
            NAMES.join(", ")
        ))),
    }
}

pub fn ghz(n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    c.h(0);
    for i in 0..n - 1 {
        c.cx(i, i + 1);
    }
    c
}

/// Linear cluster state: H on every qubit, then a CZ chain.
pub fn linear_cluster(n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.h(q);
    }
    for i in 0..n - 1 {
        c.cz(i, i + 1);
    }
    c
}

/// Bernstein-Vazirani with the all-ones hidden string. The ancilla is the
/// last qubit.
pub fn bv(n: usize) -> Circuit {
    bv_with(n, &vec![true; n - 1])
}

pub fn bv_random(n: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<bool> = (0..n - 1).map(|_| rng.gen()).collect();
    bv_with(n, &bits)
}

fn bv_with(n: usize, secret: &[bool]) -> Circuit {
    let anc = n - 1;
    let mut c = Circuit::new(n);
    c.x(anc);
    for q in 0..n {
        c.h(q);
    }
    for (q, &b) in secret.iter().enumerate() {
        if b {
            c.cx(q, anc);
        }
    }
    for q in 0..n {
        c.h(q);
    }
    c
}

/// QFT without the final qubit reversal, using CP gates.
pub fn qft(n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for i in 0..n {
        c.h(i);
        for j in i + 1..n {
            c.cp(PI / f64::powi(2.0, (j - i) as i32), i, j);
        }
    }
    c
}

/// QFT with every CP lowered to RZ/CX/RZ/CX/RZ.
pub fn qft_cx(n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for i in 0..n {
        c.h(i);
        for j in i + 1..n {
            let l = PI / f64::powi(2.0, (j - i) as i32);
            c.rz(l / 2.0, i).cx(i, j).rz(-l / 2.0, j).cx(i, j).rz(l / 2.0, j);
        }
    }
    c
}

/// Toffoli in the 6-CX Clifford+T form.
pub fn ccx(c: &mut Circuit, a: usize, b: usize, t: usize) {
    use GateKind::*;
    c.h(t).cx(b, t);
    c.add(Tdg, &[], &[t]).cx(a, t).add(T, &[], &[t]).cx(b, t);
    c.add(Tdg, &[], &[t]).cx(a, t);
    c.add(T, &[], &[b]).add(T, &[], &[t]).h(t).cx(a, b);
    c.add(T, &[], &[a]).add(Tdg, &[], &[b]).cx(a, b);
}

/// Cuccaro ripple-carry adder on `(n-2)/2`-bit operands.
/// Layout: cin, (b_0, a_0), (b_1, a_1), ..., cout. Operand bits are seeded.
pub fn rca(n: usize, seed: u64) -> Result<Circuit> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Config(format!("rca needs an even qubit count >= 4, got {n}")));
    }
    let m = (n - 2) / 2;
    let cin = 0;
    let b = |i: usize| 1 + 2 * i;
    let a = |i: usize| 2 + 2 * i;
    let cout = n - 1;
    let mut c = Circuit::new(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..m {
        if rng.gen() {
            c.x(a(i));
        }
        if rng.gen() {
            c.x(b(i));
        }
    }
    let carry = |i: usize| if i == 0 { cin } else { a(i - 1) };
    for i in 0..m {
        // MAJ(c, b, a)
        c.cx(a(i), b(i)).cx(a(i), carry(i));
        ccx(&mut c, carry(i), b(i), a(i));
    }
    c.cx(a(m - 1), cout);
    for i in (0..m).rev() {
        // UMA(c, b, a)
        ccx(&mut c, carry(i), b(i), a(i));
        c.cx(a(i), carry(i)).cx(carry(i), b(i));
    }
    Ok(c)
}

/// Hardware-efficient ansatz, one repetition: RY/RZ layer, CX chain, RY/RZ layer.
pub fn hwea(n: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.ry(rng.gen_range(0.0..2.0 * PI), q).rz(rng.gen_range(0.0..2.0 * PI), q);
    }
    for i in 0..n - 1 {
        c.cx(i, i + 1);
    }
    for q in 0..n {
        c.ry(rng.gen_range(0.0..2.0 * PI), q).rz(rng.gen_range(0.0..2.0 * PI), q);
    }
    c
}

/// Random supremacy-style circuit on the squarest grid for `n` qubits:
/// eight layers cycling through four CZ patterns, with random
/// sqrt(X)/sqrt(Y)/T gates on qubits idle in the CZ layer.
pub fn spm(n: usize, seed: u64) -> Circuit {
    let rows = (1..=n).filter(|r| n % r == 0 && r * r <= n).max().unwrap_or(1);
    let cols = n / rows;
    let at = |r: usize, c: usize| r * cols + c;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.h(q);
    }
    for layer in 0..8 {
        let mut pairs = Vec::new();
        match layer % 4 {
            p @ (0 | 1) => {
                for r in 0..rows {
                    for col in (p..cols.saturating_sub(1)).step_by(2) {
                        pairs.push((at(r, col), at(r, col + 1)));
                    }
                }
            }
            p => {
                for r in ((p - 2)..rows.saturating_sub(1)).step_by(2) {
                    for col in 0..cols {
                        pairs.push((at(r, col), at(r + 1, col)));
                    }
                }
            }
        }
        let mut busy = vec![false; n];
        for &(x, y) in &pairs {
            busy[x] = true;
            busy[y] = true;
            c.cz(x, y);
        }
        for (q, _) in busy.iter().enumerate().filter(|(_, &b)| !b) {
            match rng.gen_range(0..3) {
                0 => c.rx(PI / 2.0, q),
                1 => c.ry(PI / 2.0, q),
                _ => c.add(GateKind::T, &[], &[q]),
            };
        }
    }
    c
}
