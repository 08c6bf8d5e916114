//! Two cascading memoryless doors with 2-knocks of duration `c`.
//!
//! Door 1 opens with probability `p1` per 1-knock, door 2 with probability `p2`
//! per effective 2-knock. A sequence is described by the cumulative 1-knock
//! time `pi_j` spent before the `j`-th 2-knock. The belief `x` is the
//! probability door 1 is still closed given the process has not finished.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::configurations::{KnockGenerator, KnockSequence};
use crate::error::{Error, Result};
use crate::numeric::golden_section;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoDoorParams {
    pub p1: f64,
    pub p2: f64,
    pub c: f64,
}

impl TwoDoorParams {
    pub fn new(p1: f64, p2: f64, c: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(p1 > 0.0 && p1 < 1.0) {
            problems.push(format!("p1 must lie in (0, 1), got {p1}"));
        }
        if !(p2 > 0.0 && p2 < 1.0) {
            problems.push(format!("p2 must lie in (0, 1), got {p2}"));
        }
        if !(c > 0.0 && c.is_finite()) {
            problems.push(format!("c must be positive, got {c}"));
        }
        if problems.is_empty() {
            Ok(Self { p1, p2, c })
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }

    pub fn q1(&self) -> f64 {
        1.0 - self.p1
    }

    pub fn q2(&self) -> f64 {
        1.0 - self.p2
    }

    /// `ln(q1)`, accurate for tiny `p1`.
    fn ln_q1(&self) -> f64 {
        (-self.p1).ln_1p()
    }

    fn log_q1(&self, v: f64) -> f64 {
        v.ln() / self.ln_q1()
    }

    /// `theta = -c ln(q1) / p2`.
    pub fn theta(&self) -> f64 {
        -self.c * self.ln_q1() / self.p2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefState {
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoDoorAction {
    /// 1-knocks of total (possibly fractional) length.
    One(f64),
    Two,
}

pub fn belief_step(params: &TwoDoorParams, state: BeliefState, action: TwoDoorAction) -> BeliefState {
    let x = state.x;
    let x = match action {
        TwoDoorAction::One(len) => x * (len * params.ln_q1()).exp(),
        TwoDoorAction::Two => x / (params.q2() + params.p2 * x),
    };
    BeliefState { x }
}

/// Optimal plan `1^s (2 1^t)^inf` of the relaxation allowing fractional 1-knocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiFractionalPlan {
    pub z_star: f64,
    pub x: f64,
    pub s: f64,
    pub t: f64,
    pub value: f64,
}

impl SemiFractionalPlan {
    /// The plan from a stationary belief `x = 1 - z`.
    pub fn from_z(params: &TwoDoorParams, z: f64) -> Result<Self> {
        let value = semifractional_objective(params, z)?;
        let x = 1.0 - z;
        Ok(Self {
            z_star: z,
            x,
            s: params.log_q1(x),
            t: params.log_q1(params.q2() + params.p2 * x),
            value,
        })
    }

    pub fn sequence(&self) -> TwoDoorSequence {
        TwoDoorSequence::Affine {
            s: self.s,
            t: self.t,
            rounded: false,
        }
    }
}

/// Cumulative 1-knock times `pi_1, pi_2, ...` before each 2-knock (`pi_0 = 0`).
#[derive(Debug, Clone, PartialEq)]
pub enum TwoDoorSequence {
    /// Finite list; the process stops after the last 2-knock.
    Explicit(Vec<f64>),
    /// `pi_i = s + (i - 1) t`, or its ceiling when `rounded`.
    Affine { s: f64, t: f64, rounded: bool },
    /// `prefix` then increments repeated cyclically.
    Cyclic { prefix: Vec<f64>, increments: Vec<f64> },
}

impl TwoDoorSequence {
    /// One 1-knock before every 2-knock.
    pub fn alternating() -> Self {
        Self::Cyclic {
            prefix: Vec::new(),
            increments: vec![1.0],
        }
    }

    pub fn explicit(cumulative: Vec<f64>) -> Result<Self> {
        check_cumulative(&cumulative)?;
        Ok(Self::Explicit(cumulative))
    }

    pub fn cyclic(prefix: Vec<f64>, increments: Vec<f64>) -> Result<Self> {
        check_cumulative(&prefix)?;
        if increments.is_empty() || increments.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidSequence("increments must be a non-empty list of non-negative reals".into()));
        }
        Ok(Self::Cyclic { prefix, increments })
    }

    /// From 0-based knocks (`0` a 1-knock, `1` a 2-knock). Trailing 1-knocks are dropped.
    pub fn from_knocks(knocks: &[usize]) -> Result<Self> {
        let (pis, _) = cumulative_from_knocks(knocks, 0)?;
        Ok(Self::Explicit(pis))
    }

    /// From a periodic knock word `prefix . cycle^inf`; the cycle must contain a 2-knock.
    pub fn from_periodic_knocks(prefix: &[usize], cycle: &[usize]) -> Result<Self> {
        if !cycle.contains(&1) {
            return Err(Error::InvalidSequence("the repeated block never knocks on door 2".into()));
        }
        let mut head = prefix.to_vec();
        head.extend_from_slice(cycle);
        let (pis, carry) = cumulative_from_knocks(&head, 0)?;
        let (cycle_pis, _) = cumulative_from_knocks(cycle, carry)?;
        let mut increments = Vec::with_capacity(cycle_pis.len());
        let mut prev = 0.0;
        for &pi in &cycle_pis {
            increments.push(pi - prev);
            prev = pi;
        }
        Ok(Self::Cyclic { prefix: pis, increments })
    }

    /// `pi_j` for `j >= 1`; `None` past the end of a finite sequence.
    pub fn pi(&self, j: usize) -> Option<f64> {
        debug_assert!(j >= 1);
        match self {
            Self::Explicit(v) => v.get(j - 1).copied(),
            Self::Affine { s, t, rounded } => {
                let v = s + (j - 1) as f64 * t;
                Some(if *rounded { v.ceil() } else { v })
            }
            Self::Cyclic { prefix, increments } => {
                if j <= prefix.len() {
                    return Some(prefix[j - 1]);
                }
                let base = prefix.last().copied().unwrap_or(0.0);
                let k = j - prefix.len();
                let m = increments.len();
                let full: f64 = increments.iter().sum();
                let partial: f64 = increments[..(k - 1) % m + 1].iter().sum();
                Some(base + ((k - 1) / m) as f64 * full + partial)
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Explicit(_))
    }

    pub fn is_integer(&self) -> bool {
        let int = |v: &f64| v.fract() == 0.0;
        match self {
            Self::Explicit(v) => v.iter().all(int),
            Self::Affine { s, t, rounded } => *rounded || (int(s) && int(t)),
            Self::Cyclic { prefix, increments } => prefix.iter().all(int) && increments.iter().all(int),
        }
    }

    /// Upper bound on a single increment `pi_j - pi_{j-1}` for `j >= 2`.
    fn increment_bound(&self) -> f64 {
        match self {
            Self::Explicit(v) => v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max),
            Self::Affine { t, rounded, .. } => {
                if *rounded {
                    t.ceil() + 1.0
                } else {
                    *t
                }
            }
            Self::Cyclic { increments, .. } => increments.iter().copied().fold(0.0, f64::max),
        }
    }

    /// First `n` knocks as door labels `1`/`2`; integer sequences only.
    pub fn knock_pattern(&self, n: usize) -> Result<Vec<u8>> {
        self.require_integer()?;
        let mut out = Vec::with_capacity(n);
        let mut prev = 0u64;
        let mut j = 1;
        while out.len() < n {
            let Some(pi) = self.pi(j) else { break };
            let pi = pi as u64;
            out.extend(std::iter::repeat_n(1, (pi - prev) as usize));
            out.push(2);
            prev = pi;
            j += 1;
        }
        out.truncate(n);
        Ok(out)
    }

    /// The same schedule as a general two-door knock sequence.
    pub fn to_knock_sequence(&self) -> Result<KnockSequence> {
        self.require_integer()?;
        Ok(KnockSequence::generated(2, Arc::new(TwoDoorKnocks { seq: self.clone() })))
    }

    fn require_integer(&self) -> Result<()> {
        if self.is_integer() {
            Ok(())
        } else {
            Err(Error::InvalidSequence("knock patterns need integer 1-knock counts".into()))
        }
    }
}

fn check_cumulative(v: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for &pi in v {
        if !(pi >= prev && pi.is_finite()) {
            return Err(Error::InvalidSequence(format!(
                "cumulative 1-knock times must be non-decreasing and non-negative, got {pi} after {prev}"
            )));
        }
        prev = pi;
    }
    Ok(())
}

/// Cumulative times of each 2-knock plus the count of trailing 1-knocks.
fn cumulative_from_knocks(knocks: &[usize], carry: u64) -> Result<(Vec<f64>, u64)> {
    let mut ones = carry;
    let mut total = 0u64;
    let mut pis = Vec::new();
    for &k in knocks {
        match k {
            0 => {
                ones += 1;
                total += 1;
            }
            1 => {
                pis.push(total as f64);
                ones = 0;
            }
            other => {
                return Err(Error::InvalidSequence(format!(
                    "two-door sequences only knock on doors 1 and 2, found {}",
                    other + 1
                )))
            }
        }
    }
    Ok((pis, ones))
}

#[derive(Debug)]
struct TwoDoorKnocks {
    seq: TwoDoorSequence,
}

impl KnockGenerator for TwoDoorKnocks {
    fn start(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        let mut prev = 0u64;
        Box::new((1..).map_while(move |j| self.seq.pi(j)).flat_map(move |pi| {
            let pi = pi as u64;
            let ones = pi - prev;
            prev = pi;
            std::iter::repeat_n(0, ones as usize).chain(std::iter::once(1))
        }))
    }

    fn name(&self) -> &str {
        "two-door"
    }
}

/// `log_q1(1 - z) + (c + (1 - p2 z) log_q1(1 - p2 z)) / (p2 z)`.
pub fn semifractional_objective(params: &TwoDoorParams, z: f64) -> Result<f64> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::InvalidParameter(format!("z must lie in (0, 1), got {z}")));
    }
    Ok(objective(params, z))
}

fn objective(params: &TwoDoorParams, z: f64) -> f64 {
    let ln_q1 = params.ln_q1();
    let pz = params.p2 * z;
    (-z).ln_1p() / ln_q1 + (params.c + (1.0 - pz) * (-pz).ln_1p() / ln_q1) / pz
}

const COARSE_SCAN: usize = 1000;
const DENSE_SCAN: usize = 100_000;
const GOLDEN_TOL: f64 = 1e-12;
const GOLDEN_MAX_ITER: usize = 200;

fn scan(params: &TwoDoorParams, n: usize) -> (usize, f64) {
    (1..n)
        .map(|k| (k, objective(params, k as f64 / n as f64)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn refine(params: &TwoDoorParams, k: usize, n: usize) -> (f64, f64) {
    let lo = (k - 1) as f64 / n as f64;
    let hi = (k + 1) as f64 / n as f64;
    let lo = lo.max(f64::EPSILON);
    let hi = hi.min(1.0 - f64::EPSILON);
    let (z, v, _) = golden_section(|z| objective(params, z), lo, hi, GOLDEN_TOL, GOLDEN_MAX_ITER);
    (z, v)
}

/// Minimizes the semi-fractional objective over `z in (0, 1)`.
///
/// A coarse scan brackets the minimum for golden-section refinement, which is
/// then checked against a dense scan. For small `p1` the minimizer must also lie
/// near the root `psi` of `z^2/theta + z - 1 = 0`.
pub fn solve_semifractional(params: &TwoDoorParams, tol: f64) -> Result<SemiFractionalPlan> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let (k, _) = scan(params, COARSE_SCAN);
    let (mut z, mut v) = refine(params, k, COARSE_SCAN);
    let (k_dense, v_dense) = scan(params, DENSE_SCAN);
    if v > v_dense + 10.0 * tol {
        (z, v) = refine(params, k_dense, DENSE_SCAN);
        if v > v_dense + 10.0 * tol {
            return Err(Error::NonConvergence {
                what: "semi-fractional minimization",
                iterations: GOLDEN_MAX_ITER as u64,
            });
        }
    }
    if params.p1 <= 0.01 {
        let psi = approx_psi(params.theta());
        if (z - psi).abs() > params.p1.max(params.p2) {
            return Err(Error::NonConvergence {
                what: "semi-fractional first-order condition",
                iterations: GOLDEN_MAX_ITER as u64,
            });
        }
    }
    let mut plan = SemiFractionalPlan::from_z(params, z)?;
    plan.value = v;
    Ok(plan)
}

fn approx_psi(theta: f64) -> f64 {
    ((theta * theta + 4.0 * theta).sqrt() - theta) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxInterval {
    pub theta: f64,
    pub psi: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ApproxInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Closed-form interval for the semi-fractional optimum.
pub fn approx_value(params: &TwoDoorParams) -> ApproxInterval {
    let theta = params.theta();
    let psi = approx_psi(theta);
    let l = -params.ln_q1();
    let hi = (-(-psi).ln_1p() + theta / psi + 1.0) / l;
    ApproxInterval {
        theta,
        psi,
        lo: hi - params.p2 / l,
        hi,
    }
}

/// `pi'_i = ceil(s + (i - 1) t)` for `i = 1..=horizon`.
pub fn round_to_integer(plan: &SemiFractionalPlan, horizon: usize) -> TwoDoorSequence {
    let lazy = rounded_plan(plan);
    TwoDoorSequence::Explicit((1..=horizon).map(|i| lazy.pi(i).unwrap()).collect())
}

/// The unbounded rounded plan.
pub fn rounded_plan(plan: &SemiFractionalPlan) -> TwoDoorSequence {
    TwoDoorSequence::Affine {
        s: plan.s,
        t: plan.t,
        rounded: true,
    }
}

/// 2-knocks in a row without progress before a sequence is declared divergent.
const STALL_LIMIT: usize = 10_000;
const MAX_TWO_KNOCKS: usize = 100_000_000;
const BELIEF_WINDOW: usize = 64;

/// Expected completion time by forward recursion over the 2-knocks.
pub fn expected_time_two_door(params: &TwoDoorParams, seq: &TwoDoorSequence, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let ln_q1 = params.ln_q1();
    let (p2, q2, c) = (params.p2, params.q2(), params.c);
    let t_max = seq.increment_bound();
    let mut x = 1.0;
    let mut unfinished = 1.0;
    let mut total = 0.0;
    let mut prev = 0.0;
    let mut stall = 0;
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(BELIEF_WINDOW);
    for j in 1..=MAX_TWO_KNOCKS {
        let Some(pi) = seq.pi(j) else {
            if unfinished == 0.0 {
                return Ok(total);
            }
            return Err(Error::Divergent {
                door: if x > 0.0 { 1 } else { 2 },
                knocks: j as u64 - 1,
            });
        };
        let x_pre = x * ((pi - prev) * ln_q1).exp();
        prev = pi;
        let finish = p2 * (1.0 - x_pre);
        let time = pi + c * j as f64;
        total += unfinished * finish * time;
        unfinished *= 1.0 - finish;
        x = x_pre / (q2 + p2 * x_pre);

        if unfinished == 0.0 {
            return Ok(total);
        }
        stall = if finish < 1e-15 { stall + 1 } else { 0 };
        if stall >= STALL_LIMIT {
            return Err(Error::Divergent {
                door: 1,
                knocks: j as u64,
            });
        }
        if recent.len() == BELIEF_WINDOW {
            recent.pop_front();
        }
        recent.push_back(x_pre);
        if seq.is_finite() || recent.len() < BELIEF_WINDOW {
            continue;
        }
        let x_max = recent.iter().copied().fold(0.0, f64::max);
        let residual = unfinished * (time + (t_max + c) / (p2 * (1.0 - x_max)));
        if residual < tol {
            return Ok(total);
        }
    }
    Err(Error::Divergent {
        door: 1,
        knocks: MAX_TWO_KNOCKS as u64,
    })
}

/// Expected completion time given door 1 opens at its `k`-th 1-knock (`k >= 1`).
pub fn conditional_expected_time(params: &TwoDoorParams, seq: &TwoDoorSequence, k: u64, tol: f64) -> Result<f64> {
    let k = k as f64;
    let (p2, q2, c) = (params.p2, params.q2(), params.c);
    let t_max = seq.increment_bound();
    let mut j = 1;
    loop {
        match seq.pi(j) {
            Some(pi) if pi >= k => break,
            Some(_) => j += 1,
            None => {
                return Err(Error::Divergent {
                    door: 2,
                    knocks: j as u64,
                })
            }
        }
        if j > MAX_TWO_KNOCKS {
            return Err(Error::Divergent {
                door: 1,
                knocks: j as u64,
            });
        }
    }
    let mut weight = p2;
    let mut total = 0.0;
    let mut closed = 1.0;
    loop {
        let Some(pi) = seq.pi(j) else {
            return Err(Error::Divergent {
                door: 2,
                knocks: j as u64,
            });
        };
        let time = pi + c * j as f64;
        total += weight * time;
        closed *= q2;
        weight *= q2;
        if closed * (time + (t_max + c) / p2) < tol {
            return Ok(total);
        }
        j += 1;
    }
}

/// Ratio of 2-knocks to 1-knocks among knocks starting in `[start, start + window)`
/// time units of an integer sequence.
pub fn knock_type_ratio(params: &TwoDoorParams, seq: &TwoDoorSequence, start: f64, window: f64) -> Result<f64> {
    seq.require_integer()?;
    let end = start + window;
    let (mut ones, mut twos) = (0u64, 0u64);
    let mut clock = 0.0;
    let mut prev = 0.0;
    let mut j = 1;
    while clock < end {
        let Some(pi) = seq.pi(j) else { break };
        // 1-knocks start at clock, clock + 1, ..., clock + run - 1
        let run = pi - prev;
        let first = (start - clock).ceil().max(0.0);
        let last = (end - clock).ceil().min(run);
        if last > first {
            ones += (last - first) as u64;
        }
        clock += run;
        if clock >= start && clock < end {
            twos += 1;
        }
        clock += params.c;
        prev = pi;
        j += 1;
    }
    if ones == 0 {
        return Err(Error::InvalidParameter("window contains no 1-knocks".into()));
    }
    Ok(twos as f64 / ones as f64)
}

/// Value function on a geometric belief grid.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    params: TwoDoorParams,
    ln_min: f64,
    step: f64,
    values: Vec<f64>,
    pub sweeps: u64,
}

impl ValueFunction {
    fn interpolate(&self, x: f64) -> f64 {
        let pos = ((x.ln() - self.ln_min) / self.step).max(0.0);
        let last = self.values.len() - 1;
        let i = (pos.floor() as usize).min(last);
        if i == last {
            return self.values[last];
        }
        let w = pos - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    fn costs(&self, x: f64) -> (f64, f64) {
        let p = &self.params;
        let one = 1.0 + self.interpolate(x * p.q1());
        let norm = p.q2() + p.p2 * x;
        let two = p.c + norm * self.interpolate(x / norm);
        (one, two)
    }

    /// `V(1)`.
    pub fn value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn value_at(&self, x: f64) -> f64 {
        self.interpolate(x)
    }

    /// Greedy knocks from `x = 1`; ties go to door 1.
    pub fn policy_prefix(&self, n: usize) -> Vec<u8> {
        let mut state = BeliefState { x: 1.0 };
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let (one, two) = self.costs(state.x);
            let action = if two < one {
                out.push(2);
                TwoDoorAction::Two
            } else {
                out.push(1);
                TwoDoorAction::One(1.0)
            };
            state = belief_step(&self.params, state, action);
        }
        out
    }
}

pub const VALUE_ITERATION_MAX_SWEEPS: u64 = 1_000_000;

/// Solves `V(x) = min(1 + V(q1 x), c + (q2 + p2 x) V(x / (q2 + p2 x)))` by
/// Gauss-Seidel sweeps in increasing `x`, on a grid uniform in `ln x` from
/// `tol * p2` to 1 with linear interpolation.
pub fn value_iteration(params: &TwoDoorParams, grid_size: usize, tol: f64) -> Result<ValueFunction> {
    if grid_size < 1000 {
        return Err(Error::InvalidParameter(format!("grid size must be at least 1000, got {grid_size}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let ln_min = (tol * params.p2).ln();
    let step = -ln_min / (grid_size - 1) as f64;
    let q1 = params.q1();
    let (p2, q2) = (params.p2, params.q2());

    // Interpolation stencils: (lower index, weight of upper neighbour).
    let locate = |x: f64| -> (usize, f64) {
        let pos = ((x.ln() - ln_min) / step).max(0.0);
        let i = (pos.floor() as usize).min(grid_size - 1);
        if i == grid_size - 1 {
            (i - 1, 1.0)
        } else {
            (i, pos - i as f64)
        }
    };
    let mut one_at = Vec::with_capacity(grid_size);
    let mut two_at = Vec::with_capacity(grid_size);
    let mut norms = Vec::with_capacity(grid_size);
    for k in 0..grid_size {
        let x = if k == grid_size - 1 {
            1.0
        } else {
            (ln_min + k as f64 * step).exp()
        };
        let norm = q2 + p2 * x;
        one_at.push(locate(x * q1));
        two_at.push(locate(x / norm));
        norms.push(norm);
    }

    let mut values = vec![0.0; grid_size];
    let at = |v: &[f64], (i, w): (usize, f64)| v[i] * (1.0 - w) + v[i + 1] * w;
    for sweep in 1..=VALUE_ITERATION_MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for k in 0..grid_size {
            let one = 1.0 + at(&values, one_at[k]);
            let two = params.c + norms[k] * at(&values, two_at[k]);
            let v = one.min(two);
            change = change.max((v - values[k]).abs());
            values[k] = v;
        }
        if change < tol {
            return Ok(ValueFunction {
                params: *params,
                ln_min,
                step,
                values,
                sweeps: sweep,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "value iteration",
        iterations: VALUE_ITERATION_MAX_SWEEPS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> TwoDoorParams {
        TwoDoorParams::new(0.5, 0.5, 1.0).unwrap()
    }

    #[test]
    fn params_are_validated() {
        assert!(TwoDoorParams::new(0.0, 0.5, 1.0).is_err());
        assert!(TwoDoorParams::new(0.5, 1.0, 1.0).is_err());
        assert!(TwoDoorParams::new(0.5, 0.5, 0.0).is_err());
        let err = TwoDoorParams::new(2.0, -1.0, 1.0).unwrap_err().to_string();
        assert!(err.contains("p1") && err.contains("p2"));
    }

    #[test]
    fn belief_examples() {
        let p = half();
        let x = belief_step(&p, BeliefState { x: 1.0 }, TwoDoorAction::One(1.0));
        assert!((x.x - 0.5).abs() < 1e-15);
        let y = belief_step(&p, BeliefState { x: 0.5 }, TwoDoorAction::Two);
        assert!((y.x - 2.0 / 3.0).abs() < 1e-15);
        for p in [half(), TwoDoorParams::new(0.1, 0.7, 2.0).unwrap()] {
            for k in 1..20 {
                let x = k as f64 / 20.0;
                let y = belief_step(&p, BeliefState { x }, TwoDoorAction::Two);
                let back = belief_step(&p, y, TwoDoorAction::One(p.log_q1(p.q2() + p.p2 * x)));
                assert!((back.x - x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn objective_diverges_at_zero_and_rejects_domain() {
        let p = half();
        assert!(semifractional_objective(&p, 1e-9).unwrap() > 1e8);
        assert!(semifractional_objective(&p, 0.0).is_err());
        assert!(semifractional_objective(&p, 1.0).is_err());
    }

    #[test]
    fn semifractional_examples() {
        let plan = solve_semifractional(&half(), 1e-12).unwrap();
        assert!((plan.value - 5.747).abs() < 1e-3, "{plan:?}");
        let small = TwoDoorParams::new(0.01, 0.01, 1.0).unwrap();
        let plan = solve_semifractional(&small, 1e-12).unwrap();
        assert!((plan.value - 356.754).abs() < 1e-2, "{plan:?}");
    }

    #[test]
    fn plan_value_matches_recursion() {
        for p in [half(), TwoDoorParams::new(0.1, 0.3, 2.0).unwrap()] {
            let plan = solve_semifractional(&p, 1e-12).unwrap();
            let v = expected_time_two_door(&p, &plan.sequence(), 1e-12).unwrap();
            assert!((v - plan.value).abs() < 1e-8, "{v} vs {}", plan.value);
        }
    }

    #[test]
    fn approximation_interval() {
        let a = approx_value(&half());
        assert!((a.theta - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!((a.psi - 0.6733).abs() < 1e-3);
        assert!((a.lo - 5.31).abs() < 0.01 && (a.hi - 6.03).abs() < 0.01, "{a:?}");
        assert!(a.contains(5.747));
        assert!(((approx_psi(1.0)) - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        let small = approx_value(&TwoDoorParams::new(0.01, 0.01, 1.0).unwrap());
        assert!((small.hi - small.lo - 0.995).abs() < 1e-3);
        assert!(small.contains(356.754));
    }

    #[test]
    fn rounding_examples() {
        let plan = solve_semifractional(&half(), 1e-12).unwrap();
        let pattern = rounded_plan(&plan).knock_pattern(14).unwrap();
        assert_eq!(pattern, vec![1, 1, 2, 1, 2, 2, 1, 2, 1, 2, 2, 1, 2, 2]);

        let small = TwoDoorParams::new(0.01, 0.01, 1.0).unwrap();
        let plan = solve_semifractional(&small, 1e-12).unwrap();
        let pattern = rounded_plan(&plan).knock_pattern(103).unwrap();
        let mut expected = vec![1u8; 97];
        expected.extend([2, 2, 1, 2, 2, 1]);
        assert_eq!(pattern, expected);

        let exact = SemiFractionalPlan {
            z_star: 0.5,
            x: 0.5,
            s: 2.0,
            t: 1.0,
            value: 0.0,
        };
        assert_eq!(round_to_integer(&exact, 4), TwoDoorSequence::Explicit(vec![2.0, 3.0, 4.0, 5.0]));
    }

    #[test]
    fn rounding_stays_within_one() {
        let plan = solve_semifractional(&half(), 1e-12).unwrap();
        let rounded = round_to_integer(&plan, 200);
        for i in 1..=200 {
            let exact = plan.s + (i - 1) as f64 * plan.t;
            let r = rounded.pi(i).unwrap();
            assert!(exact <= r && r <= exact + 1.0);
        }
    }

    #[test]
    fn alternating_is_six() {
        let v = expected_time_two_door(&half(), &TwoDoorSequence::alternating(), 1e-12).unwrap();
        assert!((v - 6.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn rounded_values() {
        let plan = solve_semifractional(&half(), 1e-12).unwrap();
        let v = expected_time_two_door(&half(), &rounded_plan(&plan), 1e-12).unwrap();
        assert!((v - 5.832).abs() < 2e-3, "{v}");
    }

    #[test]
    fn divergent_and_finite_sequences() {
        let never = TwoDoorSequence::cyclic(vec![], vec![0.0]).unwrap();
        assert!(matches!(
            expected_time_two_door(&half(), &never, 1e-9),
            Err(Error::Divergent { door: 1, .. })
        ));
        let short = TwoDoorSequence::explicit(vec![1.0, 2.0]).unwrap();
        assert!(expected_time_two_door(&half(), &short, 1e-9).is_err());
        assert!(TwoDoorSequence::explicit(vec![2.0, 1.0]).is_err());
    }

    #[test]
    fn knock_conversions() {
        let seq = TwoDoorSequence::from_knocks(&[0, 0, 1, 0, 1, 1, 0]).unwrap();
        assert_eq!(seq, TwoDoorSequence::Explicit(vec![2.0, 3.0, 3.0]));
        assert_eq!(seq.knock_pattern(10).unwrap(), vec![1, 1, 2, 1, 2, 2]);
        let periodic = TwoDoorSequence::from_periodic_knocks(&[0, 1, 0], &[0, 1]).unwrap();
        let pis: Vec<f64> = (1..=5).map(|j| periodic.pi(j).unwrap()).collect();
        assert_eq!(pis, vec![1.0, 3.0, 4.0, 5.0, 6.0]);
        let alt = TwoDoorSequence::alternating().to_knock_sequence().unwrap();
        assert_eq!(alt.prefix(6), vec![0, 1, 0, 1, 0, 1]);
        assert!(TwoDoorSequence::from_periodic_knocks(&[1], &[0]).is_err());
        assert!(TwoDoorSequence::from_knocks(&[2]).is_err());
    }

    #[test]
    fn conditional_expectation_grows_with_opening_knock() {
        let plan = solve_semifractional(&half(), 1e-12).unwrap();
        let seq = rounded_plan(&plan);
        let values: Vec<f64> = (1..30).map(|k| conditional_expected_time(&half(), &seq, k, 1e-12).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        // door 1 opening at the first knock: door 2 knocked on from the first 2-knock on
        let alt = TwoDoorSequence::alternating();
        let v = conditional_expected_time(&half(), &alt, 1, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn value_iteration_small_grid() {
        let vf = value_iteration(&half(), 2000, 1e-9).unwrap();
        assert!(vf.value() > 5.747 && vf.value() < 5.832, "{}", vf.value());
        assert_eq!(&vf.policy_prefix(6), &[1, 1, 2, 2, 1, 2]);
        assert!(value_iteration(&half(), 10, 1e-9).is_err());
    }
}
