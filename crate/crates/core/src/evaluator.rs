//! Expected completion times of knock sequences.
//!
//! Independent doors are evaluated from the survival curve
//! `SC(t) = 1 - prod_i (1 - p_i(pi_i(t)))`. Gated doors (cascading chains and
//! DAGs) are evaluated by a forward dynamic program over the knock index at
//! which each door opens: door `i` opens at its `N_i`-th knock after the last
//! of its predecessors opened.

use std::collections::BTreeMap;

use crate::configurations::{DoorConfiguration, KnockSequence};
use crate::error::{Error, Result};

pub const DEFAULT_TOL_INDEPENDENT: f64 = 1e-12;
pub const DEFAULT_TOL_CASCADING: f64 = 1e-9;
pub const DEFAULT_HORIZON_CAP: u64 = 1_000_000;
/// Cap on DP work for gated evaluation, in (state, transition) cells.
pub const DEFAULT_STATE_CAP: u64 = 2_000_000_000;

/// An infinite sequence is declared divergent once some not-surely-open door
/// has been ignored for this fraction of the knocks so far.
const NEGLECT_FRACTION: f64 = 0.9;
const NEGLECT_MIN_KNOCKS: u64 = 1 << 16;
/// Above this many doors products are accumulated in log space.
const LOG_SPACE_DOORS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub tol: f64,
    pub horizon_cap: u64,
    pub state_cap: u64,
}

impl EvalOptions {
    pub fn independent() -> Self {
        Self {
            tol: DEFAULT_TOL_INDEPENDENT,
            horizon_cap: DEFAULT_HORIZON_CAP,
            state_cap: DEFAULT_STATE_CAP,
        }
    }

    pub fn cascading() -> Self {
        Self {
            tol: DEFAULT_TOL_CASCADING,
            ..Self::independent()
        }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        Self { tol, ..self }
    }

    fn check(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// `values[t]` is the probability some door is still closed after `t` knocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub values: Vec<f64>,
}

impl SurvivalCurve {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn require_independent(config: &DoorConfiguration) -> Result<()> {
    if config.is_independent() {
        Ok(())
    } else {
        Err(Error::WrongDependency {
            expected: "independent",
            found: config.dependency().name(),
        })
    }
}

/// Probability some door is closed given per-door survival values.
fn some_closed(survivals: impl Iterator<Item = f64>, doors: usize) -> f64 {
    if doors > LOG_SPACE_DOORS {
        let log_all_open: f64 = survivals.map(|s| (-s).ln_1p()).sum();
        -log_all_open.exp_m1()
    } else {
        1.0 - survivals.map(|s| 1.0 - s).product::<f64>()
    }
}

/// Survival curve for `t = 0..=horizon`, truncated if a finite sequence ends first.
pub fn survival_curve_independent(
    config: &DoorConfiguration,
    seq: &KnockSequence,
    horizon: usize,
) -> Result<SurvivalCurve> {
    require_independent(config)?;
    let d = config.door_count();
    let mut counts = vec![0u64; d];
    let sc = |counts: &[u64]| some_closed(counts.iter().zip(config.doors()).map(|(&n, p)| p.survival(n)), d);
    let mut values = Vec::with_capacity(horizon + 1);
    values.push(sc(&counts));
    for door in seq.iter().take(horizon) {
        counts[door] += 1;
        values.push(sc(&counts));
    }
    Ok(SurvivalCurve { values })
}

/// Tracks the longest stretch any door goes without a knock.
struct GapTracker {
    last: Vec<u64>,
    max_gap: u64,
}

impl GapTracker {
    fn new(doors: usize) -> Self {
        Self {
            last: vec![0; doors],
            max_gap: 0,
        }
    }

    fn observe(&mut self, door: usize, t: u64) {
        self.max_gap = self.max_gap.max(t - self.last[door]);
        self.last[door] = t;
    }

    fn streak(&self, door: usize, t: u64) -> u64 {
        t - self.last[door]
    }

    /// Crude bound on the spacing of future knocks on any door.
    fn window(&self, t: u64) -> f64 {
        let open = self.last.iter().map(|&l| t - l).max().unwrap_or(0);
        2.0 * self.max_gap.max(open).max(1) as f64
    }
}

/// `sum_t SC(t)` for independent doors.
///
/// Stops once `W * sum_i sum_{n >= pi_i(t)} p_i(n)` drops below `tol`, where
/// `W` is twice the longest knock gap seen so far.
pub fn expected_time_independent(config: &DoorConfiguration, seq: &KnockSequence, opts: &EvalOptions) -> Result<f64> {
    require_independent(config)?;
    opts.check()?;
    let d = config.door_count();
    let doors = config.doors();
    let mut counts = vec![0u64; d];
    let mut gaps = GapTracker::new(d);
    let sc = |counts: &[u64]| some_closed(counts.iter().zip(doors).map(|(&n, p)| p.survival(n)), d);

    let mut total = sc(&counts);
    let mut knocks = seq.iter();
    let mut t = 0u64;
    loop {
        let Some(door) = knocks.next() else {
            let last = sc(&counts);
            if last == 0.0 {
                return Ok(total);
            }
            let stuck = (0..d).find(|&i| doors[i].survival(counts[i]) > 0.0).unwrap_or(0);
            return Err(Error::Divergent {
                door: stuck + 1,
                knocks: t,
            });
        };
        t += 1;
        if t > opts.horizon_cap {
            return Err(Error::HorizonExceeded { cap: opts.horizon_cap });
        }
        counts[door] += 1;
        gaps.observe(door, t);
        let current = sc(&counts);
        if current == 0.0 {
            return Ok(total);
        }
        total += current;

        let residual: f64 = gaps.window(t) * (0..d).map(|i| doors[i].tail_power_sum(counts[i], 1)).sum::<f64>();
        if residual < opts.tol {
            return Ok(total);
        }
        if t >= NEGLECT_MIN_KNOCKS {
            if let Some(i) = (0..d).find(|&i| {
                gaps.streak(i, t) as f64 > NEGLECT_FRACTION * t as f64 && doors[i].survival(counts[i]) > 0.0
            }) {
                return Err(Error::Divergent { door: i + 1, knocks: t });
            }
        }
    }
}

/// Per-door knock bookkeeping for a fixed prefix of `h` knocks.
struct PrefixIndex {
    h: usize,
    /// `counts[i][t]`: knocks on door `i` among the first `t` knocks.
    counts: Vec<Vec<u32>>,
    /// `positions[i][m]`: 1-based time of the `(m+1)`-th knock on door `i`.
    positions: Vec<Vec<u32>>,
    window: f64,
    exhausted: bool,
}

impl PrefixIndex {
    fn build(doors: usize, seq: &KnockSequence, requested: usize) -> Self {
        let knocks = seq.prefix(requested);
        let h = knocks.len();
        let mut counts = vec![Vec::with_capacity(h + 1); doors];
        let mut positions = vec![Vec::new(); doors];
        let mut running = vec![0u32; doors];
        let mut gaps = GapTracker::new(doors);
        for c in counts.iter_mut() {
            c.push(0);
        }
        for (idx, &door) in knocks.iter().enumerate() {
            let t = idx as u32 + 1;
            running[door] += 1;
            positions[door].push(t);
            gaps.observe(door, t as u64);
            for (c, &r) in counts.iter_mut().zip(&running) {
                c.push(r);
            }
        }
        Self {
            h,
            counts,
            positions,
            window: gaps.window(h as u64),
            exhausted: h < requested,
        }
    }

    fn total(&self, door: usize) -> u32 {
        self.counts[door][self.h]
    }
}

/// Distribution of the completion knock truncated at the prefix horizon.
struct Truncated {
    /// `pmf[t]` = P(all doors open exactly at knock t), `t <= h`.
    pmf: Vec<f64>,
    /// P(completion after knock h).
    overflow: f64,
}

impl Truncated {
    /// `sum_{t=0}^{h-1} P(T > t)`.
    fn partial_mean(&self) -> f64 {
        let h = self.pmf.len() - 1;
        let mut above = self.overflow;
        let mut total = 0.0;
        for t in (0..h).rev() {
            above += self.pmf[t + 1];
            total += above;
        }
        total
    }
}

/// Gated evaluation for a chain `1 -> 2 -> ... -> d`: dense gate densities.
fn chain_distribution(config: &DoorConfiguration, index: &PrefixIndex) -> Truncated {
    let h = index.h;
    let mut gate = vec![0.0; h + 1];
    gate[0] = 1.0;
    let mut overflow = 0.0;
    for (i, door) in config.doors().iter().enumerate() {
        let counts = &index.counts[i];
        let positions = &index.positions[i];
        let total = index.total(i);
        let surv = door.survival_table(total as u64);
        let mut next = vec![0.0; h + 1];
        for (g, &mass) in gate.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let base = counts[g];
            for m in base + 1..=total {
                let pr = surv[(m - 1 - base) as usize] - surv[(m - base) as usize];
                next[positions[m as usize - 1] as usize] += mass * pr;
            }
            overflow += mass * surv[(total - base) as usize];
        }
        gate = next;
    }
    Truncated { pmf: gate, overflow }
}

/// Gated evaluation for an arbitrary DAG by eliminating doors in index order.
///
/// The state holds the opening knock of every processed door that a later door
/// still waits for, plus the running maximum over all processed doors.
fn dag_distribution(config: &DoorConfiguration, index: &PrefixIndex, cap: u64) -> Result<Truncated> {
    let d = config.door_count();
    let h = index.h;
    let mut last_use: Vec<usize> = (0..d).collect();
    for i in 0..d {
        for &j in config.predecessors(i) {
            last_use[j] = last_use[j].max(i);
        }
    }

    let mut frontier: Vec<usize> = Vec::new();
    // key: frontier opening knocks followed by the running max
    let mut states: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    states.insert(vec![0], 1.0);
    let mut overflow = 0.0;
    let mut work = 0u64;

    for i in 0..d {
        let counts = &index.counts[i];
        let positions = &index.positions[i];
        let total = index.total(i);
        let surv = config.door(i).survival_table(total as u64);
        let pred_slots: Vec<usize> = config
            .predecessors(i)
            .iter()
            .map(|j| frontier.iter().position(|f| f == j).expect("predecessor kept in frontier"))
            .collect();
        let mut next_frontier: Vec<usize> = frontier.iter().copied().filter(|&j| last_use[j] > i).collect();
        let keep_self = last_use[i] > i;
        if keep_self {
            next_frontier.push(i);
        }
        let carried: Vec<usize> = next_frontier
            .iter()
            .filter(|&&j| j != i)
            .map(|j| frontier.iter().position(|f| f == j).unwrap())
            .collect();

        let mut next: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (key, &mass) in &states {
            let running_max = *key.last().unwrap();
            let g = pred_slots.iter().map(|&s| key[s]).max().unwrap_or(0);
            let base = counts[g as usize];
            overflow += mass * surv[(total - base) as usize];
            work += (total - base) as u64 + 1;
            for m in base + 1..=total {
                let pr = surv[(m - 1 - base) as usize] - surv[(m - base) as usize];
                if pr == 0.0 {
                    continue;
                }
                let t = positions[m as usize - 1];
                let mut new_key: Vec<u32> = carried.iter().map(|&s| key[s]).collect();
                if keep_self {
                    new_key.push(t);
                }
                new_key.push(running_max.max(t));
                *next.entry(new_key).or_insert(0.0) += mass * pr;
            }
        }
        if next.len() as u64 > cap || work > cap {
            return Err(Error::StateSpaceOverflow {
                states: (next.len() as u64).max(work),
                cap,
            });
        }
        states = next;
        frontier = next_frontier;
    }

    let mut pmf = vec![0.0; h + 1];
    for (key, mass) in states {
        pmf[key[0] as usize] += mass;
    }
    Ok(Truncated { pmf, overflow })
}

/// Expected completion time under gated dependencies (cascading chain or DAG;
/// all-empty predecessor sets give the independent case).
///
/// The horizon doubles until the residual `P(T > H) * W * sum_i E_i` falls below
/// `tol`, with `W` twice the longest knock gap in the prefix.
pub fn expected_time_cascading(config: &DoorConfiguration, seq: &KnockSequence, opts: &EvalOptions) -> Result<f64> {
    opts.check()?;
    let d = config.door_count();
    let baseline = feedback_baseline(config);
    let chain = config.is_chain();
    let mut requested = 32 * d.max(2);
    loop {
        if requested as u64 > opts.horizon_cap {
            return Err(Error::HorizonExceeded { cap: opts.horizon_cap });
        }
        if chain {
            let cells = d as u64 * (requested as u64 + 1) * (requested as u64 + 1) / 2;
            if cells > opts.state_cap {
                return Err(Error::StateSpaceOverflow {
                    states: cells,
                    cap: opts.state_cap,
                });
            }
        }
        let index = PrefixIndex::build(d, seq, requested);
        let dist = if chain {
            chain_distribution(config, &index)
        } else {
            dag_distribution(config, &index, opts.state_cap)?
        };
        let mean = dist.partial_mean();
        if index.exhausted {
            if dist.overflow <= f64::MIN_POSITIVE {
                return Ok(mean);
            }
            let stuck = (0..d)
                .find(|&i| config.door(i).survival(index.total(i) as u64) > 0.0)
                .unwrap_or(d - 1);
            return Err(Error::Divergent {
                door: stuck + 1,
                knocks: index.h as u64,
            });
        }
        let residual = dist.overflow * index.window * baseline;
        if residual < opts.tol {
            return Ok(mean);
        }
        requested *= 2;
    }
}

/// Survival curve under gated dependencies for `t = 0..=horizon`, truncated if a
/// finite sequence ends first.
pub fn survival_curve_gated(
    config: &DoorConfiguration,
    seq: &KnockSequence,
    horizon: usize,
    opts: &EvalOptions,
) -> Result<SurvivalCurve> {
    let index = PrefixIndex::build(config.door_count(), seq, horizon);
    let dist = if config.is_chain() {
        chain_distribution(config, &index)
    } else {
        dag_distribution(config, &index, opts.state_cap)?
    };
    let mut values = vec![0.0; index.h + 1];
    let mut above = dist.overflow;
    for t in (0..=index.h).rev() {
        values[t] = above.min(1.0);
        above += dist.pmf[t];
    }
    Ok(SurvivalCurve { values })
}

/// Dispatches on the dependency mode.
pub fn expected_time(config: &DoorConfiguration, seq: &KnockSequence, opts: &EvalOptions) -> Result<f64> {
    if config.is_independent() {
        expected_time_independent(config, seq, opts)
    } else {
        expected_time_cascading(config, seq, opts)
    }
}

/// `sum_i E_i`: optimal expected time when door states are observable.
pub fn feedback_baseline(config: &DoorConfiguration) -> f64 {
    config.doors().iter().map(|d| d.mean()).sum()
}
