//! Sequence planners: the finite-horizon optimum, the doubling meta-sequence
//! built from it, round-robin knocking and phase doubling for similar doors.

use std::iter;
use std::sync::Arc;

use crate::configurations::{DoorConfiguration, KnockGenerator, KnockSequence};
use crate::distributions::FundamentalDistribution;
use crate::error::Result;

/// Table of `A[i][t]`: the best probability that a length-`t` sequence opens
/// doors `1..=i`, with `A[0][t] = 1`.
///
/// Columns are appended on demand with [`DpTable::extend_to`], so a single table
/// serves every block of the doubling sequence.
#[derive(Debug, Clone)]
pub struct DpTable {
    doors: Vec<FundamentalDistribution>,
    /// `values[i][t]` for `i` in `0..=d`.
    values: Vec<Vec<f64>>,
    /// `choice[i][t]`: knocks given to door `i` (1-based) in the optimum.
    choice: Vec<Vec<u64>>,
    /// `1 - p_i(k)` per door, memoized up to the horizon.
    open_prob: Vec<Vec<f64>>,
}

impl DpTable {
    pub fn new(doors: &[FundamentalDistribution]) -> Self {
        let d = doors.len();
        let mut table = Self {
            doors: doors.to_vec(),
            values: vec![Vec::new(); d + 1],
            choice: vec![Vec::new(); d + 1],
            open_prob: vec![Vec::new(); d],
        };
        table.extend_to(0);
        table
    }

    pub fn door_count(&self) -> usize {
        self.doors.len()
    }

    /// Largest `t` computed so far.
    pub fn horizon(&self) -> usize {
        self.values[0].len() - 1
    }

    pub fn extend_to(&mut self, horizon: usize) {
        let d = self.doors.len();
        let start = self.values[0].len();
        for t in start..=horizon {
            for (door, memo) in self.doors.iter().zip(self.open_prob.iter_mut()) {
                memo.push(1.0 - door.survival(t as u64));
            }
            self.values[0].push(1.0);
            self.choice[0].push(0);
            if d == 0 {
                continue;
            }
            // a single door takes every knock
            self.values[1].push(self.open_prob[0][t]);
            self.choice[1].push(t as u64);
            for i in 2..=d {
                let prev = &self.values[i - 1];
                let open = &self.open_prob[i - 1];
                let mut best = f64::NEG_INFINITY;
                let mut best_k = 0;
                for k in 0..=t {
                    let v = prev[t - k] * open[k];
                    // strict comparison keeps the smallest maximizing k
                    if v > best {
                        best = v;
                        best_k = k;
                    }
                }
                self.values[i].push(best);
                self.choice[i].push(best_k as u64);
            }
        }
    }

    /// `A[i][t]`; `i` counts doors, so `i = d` is the full system.
    pub fn value(&self, i: usize, t: usize) -> f64 {
        self.values[i][t]
    }

    pub fn success_probability(&self, t: usize) -> f64 {
        self.values[self.doors.len()][t]
    }

    /// Knocks per door `(k_1, ..., k_d)` realizing `A[d][t]`; sums to `t`.
    pub fn allocation(&self, t: usize) -> Vec<u64> {
        let d = self.doors.len();
        let mut alloc = vec![0u64; d];
        let mut remaining = t;
        for i in (1..=d).rev() {
            let k = self.choice[i][remaining];
            alloc[i - 1] = k;
            remaining -= k as usize;
        }
        debug_assert_eq!(remaining, 0);
        alloc
    }

    /// The sorted sequence `1^{k_1} 2^{k_2} ... d^{k_d}` (0-based doors).
    pub fn sorted_prefix(&self, t: usize) -> Vec<usize> {
        self.allocation(t)
            .into_iter()
            .enumerate()
            .flat_map(|(door, k)| iter::repeat_n(door, k as usize))
            .collect()
    }
}

/// Full table up to horizon `t`, using only the fundamental distributions.
pub fn dp_table(config: &DoorConfiguration, t: usize) -> DpTable {
    let mut table = DpTable::new(config.doors());
    table.extend_to(t);
    table
}

/// Sorted length-`t` sequence maximizing the probability every door is open.
pub fn optimal_prefix(config: &DoorConfiguration, t: usize) -> Result<KnockSequence> {
    let table = dp_table(config, t);
    KnockSequence::finite(config.door_count(), table.sorted_prefix(t))
}

#[derive(Debug)]
struct DoublingGenerator {
    doors: Vec<FundamentalDistribution>,
}

impl KnockGenerator for DoublingGenerator {
    fn start(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        Box::new(DoublingKnocks {
            table: DpTable::new(&self.doors),
            block: Vec::new(),
            pos: 0,
            next_len: 2,
        })
    }

    fn name(&self) -> &str {
        "doubling"
    }
}

struct DoublingKnocks {
    table: DpTable,
    block: Vec<usize>,
    pos: usize,
    next_len: usize,
}

impl Iterator for DoublingKnocks {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.pos == self.block.len() {
            self.table.extend_to(self.next_len);
            self.block = self.table.sorted_prefix(self.next_len);
            self.pos = 0;
            self.next_len *= 2;
        }
        let door = self.block[self.pos];
        self.pos += 1;
        Some(door)
    }
}

/// `alpha_2 . alpha_4 . alpha_8 ...`, each block an optimal sorted prefix.
pub fn doubling_sequence(config: &DoorConfiguration) -> KnockSequence {
    KnockSequence::generated(
        config.door_count(),
        Arc::new(DoublingGenerator {
            doors: config.doors().to_vec(),
        }),
    )
}

/// Round robin `(1, 2, ..., d)^inf`.
pub fn a_simp(d: usize) -> Result<KnockSequence> {
    KnockSequence::repeat(d, (0..d).collect())
}

#[derive(Debug)]
struct PhaseDoubling {
    doors: usize,
}

impl KnockGenerator for PhaseDoubling {
    fn start(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        let d = self.doors;
        Box::new((0u32..).flat_map(move |phase| (0..d).flat_map(move |door| iter::repeat_n(door, 1usize << phase))))
    }

    fn name(&self) -> &str {
        "phase-doubling"
    }
}

/// Phase `n` knocks `2^n` times on each door in order.
pub fn phase_doubling(d: usize) -> KnockSequence {
    KnockSequence::generated(d, Arc::new(PhaseDoubling { doors: d }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(p: f64) -> FundamentalDistribution {
        FundamentalDistribution::geometric(p).unwrap()
    }

    fn det(k: u64) -> FundamentalDistribution {
        FundamentalDistribution::deterministic(k).unwrap()
    }

    #[test]
    fn single_geometric_door() {
        let config = DoorConfiguration::independent(vec![geo(0.5)]).unwrap();
        assert_eq!(dp_table(&config, 3).success_probability(3), 0.875);
    }

    #[test]
    fn two_geometric_doors_length_two() {
        let config = DoorConfiguration::independent(vec![geo(0.5), geo(0.5)]).unwrap();
        let table = dp_table(&config, 2);
        assert_eq!(table.success_probability(2), 0.25);
        assert_eq!(optimal_prefix(&config, 2).unwrap().prefix(10), vec![0, 1]);
        assert!(optimal_prefix(&config, 0).unwrap().is_empty());
    }

    #[test]
    fn deterministic_doors() {
        let config = DoorConfiguration::independent(vec![det(1), det(1)]).unwrap();
        assert_eq!(dp_table(&config, 2).success_probability(2), 1.0);
        let forced = DoorConfiguration::independent(vec![det(2), det(1)]).unwrap();
        let table = dp_table(&forced, 3);
        assert_eq!(table.success_probability(3), 1.0);
        assert_eq!(table.sorted_prefix(3), vec![0, 0, 1]);
    }

    #[test]
    fn table_invariants() {
        let config = DoorConfiguration::independent(vec![geo(0.3), det(3), geo(0.7)]).unwrap();
        let table = dp_table(&config, 40);
        for t in 0..=40 {
            assert_eq!(table.value(0, t), 1.0);
            assert_eq!(table.allocation(t).iter().sum::<u64>(), t as u64);
            for i in 1..=3 {
                assert!(table.value(i, t) <= table.value(i - 1, t) + 1e-15);
                if t > 0 {
                    assert!(table.value(i, t) >= table.value(i, t - 1) - 1e-15);
                }
            }
        }
    }

    #[test]
    fn incremental_extension_matches_fresh_table() {
        let config = DoorConfiguration::independent(vec![geo(0.2), geo(0.6)]).unwrap();
        let mut grown = DpTable::new(config.doors());
        for t in [3, 7, 20] {
            grown.extend_to(t);
        }
        let fresh = dp_table(&config, 20);
        for t in 0..=20 {
            assert_eq!(grown.success_probability(t), fresh.success_probability(t));
            assert_eq!(grown.allocation(t), fresh.allocation(t));
        }
    }

    #[test]
    fn doubling_blocks() {
        let one = DoorConfiguration::independent(vec![geo(0.4)]).unwrap();
        assert!(doubling_sequence(&one).prefix(50).iter().all(|&k| k == 0));
        let two = DoorConfiguration::cascading(vec![geo(0.5), geo(0.5)]).unwrap();
        let seq = doubling_sequence(&two);
        let p = seq.prefix(14);
        assert_eq!(&p[..2], &[0, 1]);
        assert_eq!(p, vec![0, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 1, 1]);
        // restarts from knock 1
        assert_eq!(seq.prefix(14), p);
    }

    #[test]
    fn round_robin_and_phases() {
        assert_eq!(a_simp(3).unwrap().prefix(6), vec![0, 1, 2, 0, 1, 2]);
        assert!(a_simp(1).unwrap().prefix(5).iter().all(|&k| k == 0));
        assert_eq!(phase_doubling(2).prefix(8), vec![0, 1, 0, 0, 1, 1, 0, 0]);
        assert!(phase_doubling(1).prefix(9).iter().all(|&k| k == 0));
    }
}
