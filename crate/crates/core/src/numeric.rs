//! Small numeric helpers shared across modules.

/// Natural log of `1/q` for `q` in `(0, 1)`.
pub fn ln_recip(q: f64) -> f64 {
    -q.ln()
}

/// `log_base(value)` evaluated as `ln(value) / ln(base)`.
pub fn log_base(value: f64, base: f64) -> f64 {
    value.ln() / base.ln()
}

/// `1 - (1 - p)^d` without cancellation for tiny `p`.
pub fn one_minus_pow_complement(p: f64, d: f64) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    -(d * (-p).ln_1p()).exp_m1()
}

/// Minimum number of terms summed directly before the asymptotic tail kicks in.
const EM_START: f64 = 64.0;

/// Hurwitz-style tail `sum_{n >= m} n^{-s}` for `s > 1`, `m >= 1`.
///
/// Sums directly up to [`EM_START`] and finishes with Euler–Maclaurin through
/// the `B6` term. For `m >= 64` the remainder is far below `1e-16` relative.
pub fn power_tail(s: f64, m: u64) -> f64 {
    debug_assert!(s > 1.0 && m >= 1);
    let mut sum = 0.0;
    let mut n = m;
    while (n as f64) < EM_START {
        sum += (n as f64).powf(-s);
        n += 1;
    }
    sum + euler_maclaurin_tail(s, n as f64)
}

fn euler_maclaurin_tail(s: f64, m: f64) -> f64 {
    let f = m.powf(-s);
    let integral = m * f / (s - 1.0);
    let d1 = s * f / m / 12.0;
    let d3 = s * (s + 1.0) * (s + 2.0) * f / m.powi(3) / 720.0;
    let d5 = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * f / m.powi(5) / 30240.0;
    integral + 0.5 * f + d1 - d3 + d5
}

pub const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
///
/// Returns `(argmin, value)` once the bracket is narrower than `tol`.
pub fn golden_section<F>(f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> (f64, f64, usize)
where
    F: Fn(f64) -> f64,
{
    let mut x1 = hi - INV_GOLDEN * (hi - lo);
    let mut x2 = lo + INV_GOLDEN * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while hi - lo > tol && iter < max_iter {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_GOLDEN * (hi - lo);
            f2 = f(x2);
        }
        iter += 1;
    }
    if f1 <= f2 {
        (x1, f1, iter)
    } else {
        (x2, f2, iter)
    }
}
