//! Price of lacking feedback for `d` similar doors, via the expected maximum of
//! i.i.d. opening counts.

use serde::Serialize;

use crate::distributions::FundamentalDistribution;
use crate::error::{Error, Result};
use crate::numeric::one_minus_pow_complement;

const MAX_DIRECT_TERMS: u64 = 1 << 27;

/// `E[max(X_1, ..., X_d)] = sum_t 1 - (1 - p(t))^d`.
///
/// Terms are summed directly until the third-order inclusion–exclusion bound on
/// the remaining tail drops below `tol`; the tail is then taken as
/// `d S_1 - C(d, 2) S_2` with `S_k = sum p(n)^k`.
pub fn expected_max_iid(dist: &FundamentalDistribution, d: u64, tol: f64) -> Result<f64> {
    check_d(d)?;
    let df = d as f64;
    let c2 = df * (df - 1.0) / 2.0;
    let c3 = c2 * (df - 2.0) / 3.0;
    let mut total = 0.0;
    let mut n = 0u64;
    let mut checkpoint = 16u64;
    loop {
        let p = dist.survival(n);
        if p == 0.0 {
            return Ok(total);
        }
        total += one_minus_pow_complement(p, df);
        n += 1;
        if n == checkpoint {
            checkpoint *= 2;
            // Bonferroni is only useful once d p is small
            if df * p < 0.5 {
                let err = c3 * dist.tail_power_sum(n, 3);
                if err < tol || n >= MAX_DIRECT_TERMS {
                    let tail = df * dist.tail_power_sum(n, 1) - c2 * dist.tail_power_sum(n, 2);
                    return Ok(total + tail.max(0.0));
                }
            } else if n >= MAX_DIRECT_TERMS {
                return Err(Error::NonConvergence {
                    what: "expected maximum",
                    iterations: n,
                });
            }
        }
    }
}

/// Smallest `n` with `p(n) < 1/d`.
pub fn kappa(dist: &FundamentalDistribution, d: u64) -> Result<u64> {
    check_d(d)?;
    let below = |n: u64| dist.survival(n) * (d as f64) < 1.0;
    if below(0) {
        return Ok(0);
    }
    let mut hi = 1u64;
    while !below(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2;
    // invariant: p(lo) >= 1/d > p(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `kappa + d sum_{n >= kappa} p(n)`, within a constant factor of the expected maximum.
pub fn lm_max_bound(dist: &FundamentalDistribution, d: u64) -> Result<f64> {
    let k = kappa(dist, d)?;
    Ok(k as f64 + d as f64 * dist.tail_power_sum(k, 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceReport {
    pub d: u64,
    pub e_single: f64,
    pub e_max: f64,
    pub kappa: u64,
    pub lm_max_bound: f64,
    /// `e_max / e_single`.
    pub price: f64,
}

pub fn price_report(dist: &FundamentalDistribution, d: u64, tol: f64) -> Result<PriceReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let e_single = dist.mean();
    let e_max = expected_max_iid(dist, d, tol)?;
    Ok(PriceReport {
        d,
        e_single,
        e_max,
        kappa: kappa(dist, d)?,
        lm_max_bound: lm_max_bound(dist, d)?,
        price: e_max / e_single,
    })
}

fn check_d(d: u64) -> Result<()> {
    if d == 0 {
        Err(Error::InvalidParameter("d must be at least 1".into()))
    } else {
        Ok(())
    }
}
