//! Fundamental distributions: the survival function `p(n)` of a single door,
//! i.e. the probability it is still closed after `n` effective knocks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::power_tail;

/// Serialized form of a distribution, as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionKind {
    /// Memoryless door: opens on each knock with probability `p`.
    Geometric { p: f64 },
    /// Opens exactly on knock `k`.
    Deterministic { k: u64 },
    /// `p(n) = min(1, c / n^a)`.
    Polynomial { c: f64, a: f64 },
    /// Explicit `p(0), p(1), ...` followed by a geometric tail with ratio `tail_q`.
    Table { values: Vec<f64>, tail_q: f64 },
}

impl DistributionKind {
    pub fn check(&self) -> std::result::Result<(), String> {
        match *self {
            DistributionKind::Geometric { p } => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(format!("geometric p must lie in (0, 1], got {p}"));
                }
            }
            DistributionKind::Deterministic { k } => {
                if k == 0 {
                    return Err("deterministic k must be at least 1".into());
                }
            }
            DistributionKind::Polynomial { c, a } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(format!("polynomial c must be positive, got {c}"));
                }
                if !(a > 1.0 && a.is_finite()) {
                    return Err(format!("polynomial a must exceed 1 for a finite mean, got {a}"));
                }
            }
            DistributionKind::Table { ref values, tail_q } => {
                if values.is_empty() {
                    return Err("table needs at least one value".into());
                }
                if values[0] != 1.0 {
                    return Err(format!("table must start with p(0) = 1, got {}", values[0]));
                }
                if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(format!("table value {bad} is not a probability"));
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err("table values must be non-increasing".into());
                }
                if !(0.0..1.0).contains(&tail_q) {
                    return Err(format!("table tail_q must lie in [0, 1), got {tail_q}"));
                }
            }
        }
        Ok(())
    }
}

/// A validated fundamental distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionKind", into = "DistributionKind")]
pub struct FundamentalDistribution {
    kind: DistributionKind,
}

impl TryFrom<DistributionKind> for FundamentalDistribution {
    type Error = Error;

    fn try_from(kind: DistributionKind) -> Result<Self> {
        Self::new(kind)
    }
}

impl From<FundamentalDistribution> for DistributionKind {
    fn from(dist: FundamentalDistribution) -> Self {
        dist.kind
    }
}

impl FundamentalDistribution {
    pub fn new(kind: DistributionKind) -> Result<Self> {
        kind.check().map_err(Error::InvalidDistribution)?;
        Ok(Self { kind })
    }

    pub fn geometric(p: f64) -> Result<Self> {
        Self::new(DistributionKind::Geometric { p })
    }

    pub fn deterministic(k: u64) -> Result<Self> {
        Self::new(DistributionKind::Deterministic { k })
    }

    pub fn polynomial(c: f64, a: f64) -> Result<Self> {
        Self::new(DistributionKind::Polynomial { c, a })
    }

    pub fn table(values: Vec<f64>, tail_q: f64) -> Result<Self> {
        Self::new(DistributionKind::Table { values, tail_q })
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    /// Probability the door is still closed after `n` effective knocks.
    pub fn survival(&self, n: u64) -> f64 {
        match self.kind {
            DistributionKind::Geometric { p } => geometric_survival(1.0 - p, n),
            DistributionKind::Deterministic { k } => {
                if n < k {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionKind::Polynomial { c, a } => {
                if n == 0 {
                    1.0
                } else {
                    (c / (n as f64).powf(a)).min(1.0)
                }
            }
            DistributionKind::Table { ref values, tail_q } => {
                let len = values.len() as u64;
                if n < len {
                    values[n as usize]
                } else {
                    values[values.len() - 1] * geometric_survival(tail_q, n - len + 1)
                }
            }
        }
    }

    /// Survival values `p(0), ..., p(n)`.
    pub fn survival_table(&self, n: u64) -> Vec<f64> {
        (0..=n).map(|k| self.survival(k)).collect()
    }

    /// Expected number of knocks to open the door on its own, `sum_{n>=0} p(n)`.
    ///
    /// Closed forms for every kind; polynomial tails use Euler–Maclaurin, so the
    /// result is accurate to a few ulps.
    pub fn mean(&self) -> f64 {
        self.tail_power_sum(0, 1)
    }

    /// `sum_{n >= from} p(n)^power`.
    pub fn tail_power_sum(&self, from: u64, power: u32) -> f64 {
        assert!(power >= 1);
        let k = power as i32;
        match self.kind {
            DistributionKind::Geometric { p } => {
                let ratio = (1.0 - p).powi(k);
                geometric_series(ratio, from)
            }
            DistributionKind::Deterministic { k: open_at } => open_at.saturating_sub(from) as f64,
            DistributionKind::Polynomial { c, a } => {
                let cutoff = polynomial_cutoff(c, a);
                // p(n) = 1 for n in [0, cutoff]
                let flat = if from <= cutoff {
                    (cutoff - from + 1) as f64
                } else {
                    0.0
                };
                let start = from.max(cutoff + 1);
                flat + c.powi(k) * power_tail(a * power as f64, start)
            }
            DistributionKind::Table { ref values, tail_q } => {
                let len = values.len() as u64;
                let head: f64 = values
                    .iter()
                    .skip(from.min(len) as usize)
                    .map(|v| v.powi(k))
                    .sum();
                let last = values[values.len() - 1].powi(k);
                let ratio = tail_q.powi(k);
                // n >= len contributes last * ratio^(n - len + 1)
                let first_exp = from.max(len) - len + 1;
                head + last * geometric_series(ratio, first_exp)
            }
        }
    }

    /// Draws the knock count `N >= 1` at which the door opens, `P(N > n) = p(n)`.
    pub fn sample_open_count<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        self.inverse_survival(u)
    }

    /// Smallest `n` with `p(n) <= u`; the inverse-CDF transform for `u` in `[0, 1)`.
    pub fn inverse_survival(&self, u: f64) -> u64 {
        let n = match self.kind {
            DistributionKind::Geometric { p } => {
                if p >= 1.0 {
                    1
                } else {
                    ceil_to_count(u.ln() / (1.0 - p).ln())
                }
            }
            DistributionKind::Deterministic { k } => k,
            DistributionKind::Polynomial { c, a } => ceil_to_count((c / u).powf(1.0 / a)),
            DistributionKind::Table { ref values, tail_q } => {
                match values.iter().skip(1).position(|&v| v <= u) {
                    Some(i) => i as u64 + 1,
                    None => {
                        let last = values[values.len() - 1];
                        let m = if tail_q == 0.0 {
                            1
                        } else {
                            ceil_to_count((u / last).ln() / tail_q.ln())
                        };
                        values.len() as u64 - 1 + m.max(1)
                    }
                }
            }
        };
        n.max(1)
    }
}

fn geometric_survival(q: f64, n: u64) -> f64 {
    if n == 0 {
        1.0
    } else if n <= i32::MAX as u64 {
        q.powi(n as i32)
    } else {
        q.powf(n as f64)
    }
}

/// `sum_{n >= from} ratio^n` with `0^0 = 1`.
fn geometric_series(ratio: f64, from: u64) -> f64 {
    if ratio == 0.0 {
        return if from == 0 { 1.0 } else { 0.0 };
    }
    geometric_survival(ratio, from) / (1.0 - ratio)
}

/// Largest `n` with `min(1, c/n^a) = 1`, taking `n = 0` as always flat.
fn polynomial_cutoff(c: f64, a: f64) -> u64 {
    let mut n = c.powf(1.0 / a).floor().max(0.0) as u64;
    while n > 0 && c / (n as f64).powf(a) < 1.0 {
        n -= 1;
    }
    while c / ((n + 1) as f64).powf(a) >= 1.0 {
        n += 1;
    }
    n
}

fn ceil_to_count(x: f64) -> u64 {
    if x.is_nan() {
        return 1;
    }
    // saturating float -> int conversion handles +inf
    x.ceil() as u64
}
