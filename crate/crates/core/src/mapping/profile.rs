//! Hotness and weakness profiles.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::circuit::{Circuit, QubitId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HotnessProfile {
    pub hotness: Vec<usize>,
}

impl HotnessProfile {
    /// Qubits by descending hotness, ties by index.
    pub fn order(&self) -> Vec<QubitId> {
        let mut qs: Vec<QubitId> = (0..self.hotness.len()).collect();
        qs.sort_by_key(|&q| (std::cmp::Reverse(self.hotness[q]), q));
        qs
    }
}

pub fn profile(c: &Circuit) -> HotnessProfile {
    let mut hotness = vec![0; c.num_qubits];
    for g in c.gates.iter().filter(|g| g.is_two_qubit()) {
        for &q in &g.qubits {
            hotness[q] += 1;
        }
    }
    HotnessProfile { hotness }
}

/// Per-qubit partner → number of shared two-qubit gates.
pub fn interactions(c: &Circuit) -> Vec<BTreeMap<QubitId, usize>> {
    let mut w = vec![BTreeMap::new(); c.num_qubits];
    for g in c.gates.iter().filter(|g| g.is_two_qubit()) {
        let (a, b) = (g.qubits[0], g.qubits[1]);
        *w[a].entry(b).or_insert(0) += 1;
        *w[b].entry(a).or_insert(0) += 1;
    }
    w
}

pub fn inter_group_gates(c: &Circuit, a: &[QubitId], b: &[QubitId]) -> usize {
    c.gates
        .iter()
        .filter(|g| g.is_two_qubit())
        .filter(|g| {
            let (x, y) = (g.qubits[0], g.qubits[1]);
            (a.contains(&x) && b.contains(&y)) || (a.contains(&y) && b.contains(&x))
        })
        .count()
}

/// 1 / inter-group gate count, infinite when the groups never interact.
pub fn weakness(c: &Circuit, a: &[QubitId], b: &[QubitId]) -> f64 {
    match inter_group_gates(c, a, b) {
        0 => f64::INFINITY,
        n => 1.0 / n as f64,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeaknessProfile {
    pub groups: Vec<Vec<QubitId>>,
    /// Symmetric; the diagonal is unused and left infinite.
    pub weakness: Vec<Vec<f64>>,
}

pub fn weakness_profile(c: &Circuit, groups: &[Vec<QubitId>]) -> WeaknessProfile {
    let k = groups.len();
    let mut m = vec![vec![f64::INFINITY; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let w = weakness(c, &groups[i], &groups[j]);
            m[i][j] = w;
            m[j][i] = w;
        }
    }
    WeaknessProfile { groups: groups.to_vec(), weakness: m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::bench;
    use proptest::prelude::*;

    /// q0 talks to q1 three times and to q2 twice.
    fn hot_example() -> Circuit {
        let mut c = Circuit::new(3);
        c.cx(0, 1).cx(0, 2).cx(0, 1).cx(0, 2).cx(0, 1);
        c
    }

    #[test]
    fn hotness_of_three_qubit_example() {
        assert_eq!(profile(&hot_example()).hotness, vec![5, 3, 2]);
        assert_eq!(profile(&hot_example()).order(), vec![0, 1, 2]);
    }

    #[test]
    fn hotness_ghz4_and_single_qubit() {
        assert_eq!(profile(&bench::ghz(4)).hotness, vec![1, 2, 2, 1]);
        let mut c = Circuit::new(2);
        c.h(0).h(1);
        assert_eq!(profile(&c).hotness, vec![0, 0]);
    }

    #[test]
    fn weakness_examples() {
        let mut c = Circuit::new(3);
        c.cx(0, 1).cx(0, 1).cx(0, 1).cx(1, 2);
        assert_eq!(weakness(&c, &[0, 1], &[2]), 1.0);
        assert_eq!(weakness(&c, &[0], &[2]), f64::INFINITY);
        let p = weakness_profile(&c, &[vec![0], vec![1], vec![2]]);
        assert_eq!(p.weakness[0][1], 1.0 / 3.0);
        assert_eq!(p.weakness[2][1], 1.0);
    }

    #[test]
    fn qft4_balanced_splits_cross_four() {
        let c = bench::qft(4);
        for a in 1..4 {
            let g1 = vec![0, a];
            let g2: Vec<usize> = (1..4).filter(|&q| q != a).collect();
            assert_eq!(inter_group_gates(&c, &g1, &g2), 4);
        }
    }

    proptest! {
        #[test]
        fn hotness_sums_to_twice_gate_count(n in 2usize..8, pairs in proptest::collection::vec((0usize..8, 1usize..8), 0..30)) {
            let mut c = Circuit::new(n);
            for (a, d) in pairs {
                let a = a % n;
                let b = (a + d % (n - 1).max(1) + 1) % n;
                if a != b {
                    c.cx(a, b);
                }
            }
            let h = profile(&c);
            prop_assert_eq!(h.hotness.iter().sum::<usize>(), 2 * c.two_qubit_gates().len());
        }
    }
}
