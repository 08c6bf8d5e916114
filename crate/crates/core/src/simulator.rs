//! Monte Carlo replay of knock sequences.
//!
//! Each trial draws one opening count `N_i` per door and replays the sequence;
//! a knock on door `i` is effective once all predecessors are open, and the
//! door opens at its `N_i`-th effective knock. Trial `k` uses the ChaCha8 stream
//! `k` of the given seed, so estimates do not depend on thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::configurations::{Dependency, DoorConfiguration, KnockSequence};
use crate::distributions::FundamentalDistribution;
use crate::error::{Error, Result};

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;
pub const DEFAULT_CAP: u64 = 1_000_000;
const INITIAL_PREFIX: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Knock at which the last door opened (1-based).
    pub completion_knock: u64,
    pub per_door_open_knock: Vec<u64>,
}

/// Per-trial generator: stream `trial` of `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn draw_open_counts<R: rand::Rng + ?Sized>(doors: &[FundamentalDistribution], rng: &mut R) -> Vec<u64> {
    doors.iter().map(|d| d.sample_open_count(rng)).collect()
}

/// Gating state for one replay.
struct Replay<'a> {
    predecessors: &'a [Vec<usize>],
    successors: &'a [Vec<usize>],
    needed: Vec<u64>,
    effective: Vec<u64>,
    opened: Vec<u64>,
    ready: Vec<bool>,
    closed: usize,
}

impl<'a> Replay<'a> {
    fn new(predecessors: &'a [Vec<usize>], successors: &'a [Vec<usize>], needed: &[u64]) -> Self {
        let d = needed.len();
        Self {
            predecessors,
            successors,
            needed: needed.to_vec(),
            effective: vec![0; d],
            opened: vec![0; d],
            ready: predecessors.iter().map(|p| p.is_empty()).collect(),
            closed: d,
        }
    }

    /// Returns `true` once every door is open.
    fn knock(&mut self, door: usize, t: u64) -> bool {
        if self.opened[door] != 0 || !self.ready[door] {
            return self.closed == 0;
        }
        self.effective[door] += 1;
        if self.effective[door] >= self.needed[door] {
            self.opened[door] = t;
            self.closed -= 1;
            for &s in &self.successors[door] {
                self.ready[s] = self.predecessors[s].iter().all(|&p| self.opened[p] != 0);
            }
        }
        self.closed == 0
    }

    fn run(mut self, knocks: impl Iterator<Item = usize>) -> Option<TrialOutcome> {
        if self.closed == 0 {
            return Some(TrialOutcome {
                completion_knock: 0,
                per_door_open_knock: self.opened,
            });
        }
        for (idx, door) in knocks.enumerate() {
            let t = idx as u64 + 1;
            if self.knock(door, t) {
                return Some(TrialOutcome {
                    completion_knock: t,
                    per_door_open_knock: self.opened,
                });
            }
        }
        None
    }
}

fn successors_of(predecessors: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut succ = vec![Vec::new(); predecessors.len()];
    for (i, preds) in predecessors.iter().enumerate() {
        for &p in preds {
            succ[p].push(i);
        }
    }
    succ
}

/// Replays one trial; `None` if some door is still closed after `cap` knocks.
pub fn simulate_trial<R: rand::Rng + ?Sized>(
    config: &DoorConfiguration,
    seq: &KnockSequence,
    rng: &mut R,
    cap: u64,
) -> Option<TrialOutcome> {
    let needed = draw_open_counts(config.doors(), rng);
    let succ = successors_of(config.predecessor_sets());
    Replay::new(config.predecessor_sets(), &succ, &needed).run(seq.iter().take(cap as usize))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Knocks per trial before it counts as a timeout.
    pub cap: u64,
}

impl SimOptions {
    pub fn new() -> Self {
        Self {
            threads: None,
            cap: DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Half-width of the 99% normal-approximation confidence interval.
    pub ci99: f64,
    pub trials: u64,
    pub timeout_rate: f64,
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(0) => Err(Error::InvalidParameter("thread count must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs `trial(k, prefix)` for every trial index, replaying trials that run off
/// the end of the materialized prefix with a doubled prefix, up to `cap`.
/// Returns per-trial results in index order, `None` marking timeouts.
fn run_trials<T, F>(seq: &KnockSequence, trials: u64, cap: u64, trial: F) -> Vec<Option<T>>
where
    T: Send,
    F: Fn(u64, &[usize]) -> Option<T> + Sync,
{
    let cap = cap as usize;
    let mut len = INITIAL_PREFIX.min(cap);
    let mut prefix = seq.prefix(len);
    let mut results: Vec<Option<T>> = (0..trials).into_par_iter().map(|k| trial(k, &prefix)).collect();
    loop {
        let pending: Vec<u64> = (0..trials).filter(|&k| results[k as usize].is_none()).collect();
        if pending.is_empty() || len >= cap || prefix.len() < len {
            return results;
        }
        len = (len * 2).min(cap);
        prefix = seq.prefix(len);
        let redone: Vec<(u64, Option<T>)> = pending.into_par_iter().map(|k| (k, trial(k, &prefix))).collect();
        for (k, r) in redone {
            results[k as usize] = r;
        }
    }
}

/// Mean completion knock over `trials` seeded trials with a 99% CI.
///
/// Fails with [`Error::Timeout`] if any trial exceeds `opts.cap` knocks.
pub fn estimate_expected_time(
    config: &DoorConfiguration,
    seq: &KnockSequence,
    trials: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    if opts.cap == 0 {
        return Err(Error::InvalidParameter("knock cap must be at least 1".into()));
    }
    let preds = config.predecessor_sets();
    let succ = successors_of(preds);
    let results = with_pool(opts.threads, || {
        run_trials(seq, trials, opts.cap, |k, prefix| {
            let needed = draw_open_counts(config.doors(), &mut trial_rng(seed, k));
            Replay::new(preds, &succ, &needed)
                .run(prefix.iter().copied())
                .map(|o| o.completion_knock)
        })
    })?;
    let timeouts = results.iter().filter(|r| r.is_none()).count() as u64;
    if timeouts > 0 {
        return Err(Error::Timeout {
            trials,
            timeouts,
            cap: opts.cap,
        });
    }
    let (sum, sum_sq) = results
        .iter()
        .flatten()
        .fold((0u128, 0u128), |(s, q), &v| (s + v as u128, q + (v as u128) * (v as u128)));
    Ok(summarize(sum, sum_sq, trials))
}

fn summarize(sum: u128, sum_sq: u128, n: u64) -> Estimate {
    let nf = n as f64;
    let mean = sum as f64 / nf;
    let var = if n > 1 {
        // exact integer centering before converting
        let centered = sum_sq as f64 - (sum as f64) * mean;
        (centered / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Estimate {
        mean,
        ci99: Z99 * (var / nf).sqrt(),
        trials: n,
        timeout_rate: 0.0,
    }
}

/// Predecessor sets for each dependency, checked to be increasing under inclusion.
fn nested_predecessors(doors: &[FundamentalDistribution], edge_sets: &[Dependency]) -> Result<Vec<Vec<Vec<usize>>>> {
    let sets: Vec<Vec<Vec<usize>>> = edge_sets
        .iter()
        .map(|dep| DoorConfiguration::new(doors.to_vec(), dep.clone()).map(|c| c.predecessor_sets().to_vec()))
        .collect::<Result<_>>()?;
    for (k, pair) in sets.windows(2).enumerate() {
        let nested = pair[0].iter().zip(&pair[1]).all(|(a, b)| a.iter().all(|x| b.contains(x)));
        if !nested {
            return Err(Error::InvalidParameter(format!(
                "edge set {} is not contained in edge set {}",
                k + 1,
                k + 2
            )));
        }
    }
    Ok(sets)
}

fn replay_all(sets: &[Vec<Vec<usize>>], succs: &[Vec<Vec<usize>>], needed: &[u64], prefix: &[usize]) -> Option<Vec<u64>> {
    sets.iter()
        .zip(succs)
        .map(|(p, s)| Replay::new(p, s, needed).run(prefix.iter().copied()).map(|o| o.completion_knock))
        .collect()
}

/// Replays one set of draws under each edge set; completion knocks in the given order.
pub fn coupled_dominance_trial<R: rand::Rng + ?Sized>(
    doors: &[FundamentalDistribution],
    edge_sets: &[Dependency],
    seq: &KnockSequence,
    rng: &mut R,
    cap: u64,
) -> Result<Vec<u64>> {
    let sets = nested_predecessors(doors, edge_sets)?;
    let succs: Vec<_> = sets.iter().map(|s| successors_of(s)).collect();
    let needed = draw_open_counts(doors, rng);
    let prefix = seq.prefix(cap as usize);
    replay_all(&sets, &succs, &needed, &prefix).ok_or(Error::Timeout {
        trials: 1,
        timeouts: 1,
        cap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceSummary {
    pub trials: u64,
    /// Trials whose completion knocks decrease somewhere along the edge-set order.
    pub violations: u64,
    pub means: Vec<f64>,
}

/// Many coupled trials with per-trial seeded streams.
pub fn coupled_dominance_run(
    doors: &[FundamentalDistribution],
    edge_sets: &[Dependency],
    seq: &KnockSequence,
    trials: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<DominanceSummary> {
    let sets = nested_predecessors(doors, edge_sets)?;
    let succs: Vec<_> = sets.iter().map(|s| successors_of(s)).collect();
    let results = with_pool(opts.threads, || {
        run_trials(seq, trials, opts.cap, |k, prefix| {
            let needed = draw_open_counts(doors, &mut trial_rng(seed, k));
            replay_all(&sets, &succs, &needed, prefix)
        })
    })?;
    let timeouts = results.iter().filter(|r| r.is_none()).count() as u64;
    if timeouts > 0 {
        return Err(Error::Timeout {
            trials,
            timeouts,
            cap: opts.cap,
        });
    }
    let mut sums = vec![0u128; sets.len()];
    let mut violations = 0;
    for times in results.iter().flatten() {
        if times.windows(2).any(|w| w[0] > w[1]) {
            violations += 1;
        }
        for (s, &t) in sums.iter_mut().zip(times) {
            *s += t as u128;
        }
    }
    Ok(DominanceSummary {
        trials,
        violations,
        means: sums.iter().map(|&s| s as f64 / trials as f64).collect(),
    })
}
