//! Special functions used by the charging and link models.
//!
//! Only what the analysis needs: the regularized incomplete gamma function for
//! integer shapes (which is a finite Poisson sum), the modified Bessel function
//! of the second kind of order one, and log-factorials.

use std::f64::consts::PI;
use std::sync::OnceLock;

use thiserror::Error;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest `n` whose factorial is finite in `f64`.
const FACTORIAL_TABLE_MAX: usize = 170;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("argument {0} outside the function domain")]
    Domain(f64),
    #[error("series did not converge within {0} terms")]
    Convergence(usize),
}

/// Truncation policy shared by every infinite sum in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Stop once a term falls below `rel_eps` times the running sum.
    pub rel_eps: f64,
    /// Hard cap on the number of terms; exceeding it is an error.
    pub max_terms: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel_eps: 1e-12,
            max_terms: 1_000_000,
        }
    }
}

impl Tolerance {
    pub fn new(rel_eps: f64, max_terms: usize) -> Result<Self, SpecFunError> {
        if !(rel_eps > 0.0) || !rel_eps.is_finite() {
            return Err(SpecFunError::Domain(rel_eps));
        }
        if max_terms == 0 {
            return Err(SpecFunError::Domain(0.0));
        }
        Ok(Self { rel_eps, max_terms })
    }
}

fn ln_factorial_table() -> &'static [f64; FACTORIAL_TABLE_MAX + 1] {
    static TABLE: OnceLock<[f64; FACTORIAL_TABLE_MAX + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0.0; FACTORIAL_TABLE_MAX + 1];
        let mut fact = 1.0_f64;
        for (n, slot) in table.iter_mut().enumerate().skip(1) {
            fact *= n as f64;
            *slot = fact.ln();
        }
        table
    })
}

/// `ln(n!)`. Exact (to rounding) table up to 170, Stirling series above.
pub fn log_factorial(n: u64) -> f64 {
    if n as usize <= FACTORIAL_TABLE_MAX {
        ln_factorial_table()[n as usize]
    } else {
        let m = n as f64;
        (m + 0.5) * m.ln() - m + LN_SQRT_2PI + stirling_error(m)
    }
}

/// `ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)]`.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 && n.fract() == 0.0 {
        let k = n as usize;
        if k == 0 {
            return 1.0 - LN_SQRT_2PI;
        }
        return ln_factorial_table()[k] - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `m ln(m / lambda) + lambda - m`, accurate when `m` is close to `lambda`.
fn poisson_deviance(m: f64, lambda: f64) -> f64 {
    if (m - lambda).abs() < 0.1 * (m + lambda) {
        let v = (m - lambda) / (m + lambda);
        let mut s = (m - lambda) * v;
        let mut ej = 2.0 * m * v;
        let v2 = v * v;
        let mut j = 1;
        loop {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
            j += 1;
        }
    }
    m * (m / lambda).ln() + lambda - m
}

/// Poisson probability `lambda^m e^-lambda / m!` with full relative accuracy
/// for large arguments (saddle-point form).
pub fn poisson_pmf(m: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if m == 0 {
        return (-lambda).exp();
    }
    let mf = m as f64;
    (-stirling_error(mf) - poisson_deviance(mf, lambda)).exp() / (2.0 * PI * mf).sqrt()
}

/// Regularized upper incomplete gamma `Q(k, x) = Gamma(k, x) / Gamma(k)` for
/// integer shape `k >= 1`, i.e. `e^-x * sum_{d<k} x^d / d!`.
///
/// The sum is anchored at its largest term and extended by term ratios, so
/// the cost is `O(sqrt(x))` rather than `O(k)` and nothing underflows for
/// large `x`.
pub fn regularized_gamma_q(k: u64, x: f64) -> f64 {
    assert!(k >= 1, "shape must be a positive integer");
    assert!(x >= 0.0, "argument must be nonnegative, got {x}");
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let last = k - 1;
    let mode = x.floor() as u64;
    let anchor = last.min(mode);
    let anchor_term = poisson_pmf(anchor, x);
    let mut sum = anchor_term;

    // downward from the anchor: ratio d / x < 1
    let mut term = anchor_term;
    let mut d = anchor;
    while d > 0 {
        term *= d as f64 / x;
        d -= 1;
        sum += term;
        let r = d as f64 / x;
        if r < 1.0 && term * r / (1.0 - r) < sum * 1e-17 {
            break;
        }
    }

    // upward from the anchor (only when the mode lies inside the summation range)
    let mut term = anchor_term;
    let mut d = anchor;
    while d < last {
        d += 1;
        term *= x / d as f64;
        sum += term;
        let r = x / (d + 1) as f64;
        if r < 1.0 && term * r / (1.0 - r) < sum * 1e-17 {
            break;
        }
    }
    sum.min(1.0)
}

/// Regularized lower incomplete gamma `P(k, x) = 1 - Q(k, x)` for integer
/// `k >= 1`, evaluated as the Poisson upper tail `sum_{d>=k} x^d e^-x / d!`
/// with the given truncation policy.
pub fn regularized_gamma_p(k: u64, x: f64, tol: Tolerance) -> Result<f64, SpecFunError> {
    if k == 0 || !(x >= 0.0) {
        return Err(SpecFunError::Domain(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // anchor at the largest term so nothing underflows when k << x
    let anchor = k.max(x.floor() as u64);
    let anchor_term = poisson_pmf(anchor, x);
    let mut sum = anchor_term;
    let mut used = 1usize;

    let mut term = anchor_term;
    let mut d = anchor;
    while d > k {
        term *= d as f64 / x;
        d -= 1;
        sum += term;
        used += 1;
        let r = d as f64 / x;
        if r < 1.0 && term * r / (1.0 - r) <= 1e-17 * sum {
            break;
        }
        if used >= tol.max_terms {
            return Err(SpecFunError::Convergence(tol.max_terms));
        }
    }

    let mut term = anchor_term;
    let mut d = anchor;
    loop {
        if used >= tol.max_terms {
            return Err(SpecFunError::Convergence(tol.max_terms));
        }
        d += 1;
        term *= x / d as f64;
        sum += term;
        used += 1;
        let r = x / (d + 1) as f64;
        if term == 0.0 || (r < 1.0 && term * r / (1.0 - r) <= tol.rel_eps * sum) {
            return Ok(sum.min(1.0));
        }
    }
}

/// Power series for `K1` and `I1`, valid for small arguments.
fn bessel_k1_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    // I1 = (x/2) sum y^k / (k! (k+1)!)
    // tail sum uses psi(k+1) + psi(k+2)
    let mut coeff = 1.0; // y^k / (k! (k+1)!)
    let mut psi_k1 = -EULER_GAMMA; // psi(k+1)
    let mut psi_k2 = 1.0 - EULER_GAMMA; // psi(k+2)
    let mut i1_sum = 0.0;
    let mut psi_sum = 0.0;
    for k in 0..200 {
        i1_sum += coeff;
        let t = coeff * (psi_k1 + psi_k2);
        psi_sum += t;
        if coeff < 1e-18 * i1_sum && t.abs() < 1e-18 * psi_sum.abs() {
            break;
        }
        let kf = k as f64;
        coeff *= y / ((kf + 1.0) * (kf + 2.0));
        psi_k1 += 1.0 / (kf + 1.0);
        psi_k2 += 1.0 / (kf + 2.0);
    }
    let i1 = 0.5 * x * i1_sum;
    1.0 / x + (0.5 * x).ln() * i1 - 0.25 * x * psi_sum
}

/// `e^x K1(x)` for `x >= 2` via Steed's continued fraction for `K0`
/// followed by the `K1 / K0` ratio.
fn bessel_k1_scaled_cf(x: f64) -> f64 {
    const MAX_ITER: usize = 10_000;
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0_scaled = (PI / (2.0 * x)).sqrt() / s;
    k0_scaled * (x + 0.5 - h) / x
}

const BESSEL_CROSSOVER: f64 = 2.0;

/// Modified Bessel function of the second kind, order one.
pub fn bessel_k1(x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) {
        return Err(SpecFunError::Domain(x));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x <= BESSEL_CROSSOVER {
        Ok(bessel_k1_series(x))
    } else {
        Ok(bessel_k1_scaled_cf(x) * (-x).exp())
    }
}

/// Exponentially scaled `e^x K1(x)`; finite for every positive finite `x`.
pub fn bessel_k1_scaled(x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) || x.is_infinite() {
        return Err(SpecFunError::Domain(x));
    }
    if x <= BESSEL_CROSSOVER {
        Ok(bessel_k1_series(x) * x.exp())
    } else {
        Ok(bessel_k1_scaled_cf(x))
    }
}

/// `ln K1(x)`, finite even where `K1(x)` itself underflows.
pub fn ln_bessel_k1(x: f64) -> Result<f64, SpecFunError> {
    if x <= BESSEL_CROSSOVER {
        bessel_k1(x).map(f64::ln)
    } else {
        bessel_k1_scaled(x).map(|v| v.ln() - x)
    }
}

/// Evaluate both branches at the crossover point; used by the self-test.
pub fn bessel_k1_branch_values_at_crossover() -> (f64, f64) {
    let x = BESSEL_CROSSOVER;
    (bessel_k1_series(x), bessel_k1_scaled_cf(x) * (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_q_closed_values() {
        for k in [1, 2, 7, 50] {
            assert_eq!(regularized_gamma_q(k, 0.0), 1.0);
        }
        for x in [0.1, 1.0, 3.5, 20.0] {
            assert!(rel(regularized_gamma_q(1, x), (-x).exp()) < 1e-14);
        }
        // e^-2 (1 + 2 + 2)
        let expect = 5.0 * (-2.0f64).exp();
        assert!(rel(regularized_gamma_q(3, 2.0), expect) < 1e-14);
        assert!((expect - 0.676_676).abs() < 1e-6);
    }

    #[test]
    fn gamma_q_large_argument_does_not_underflow() {
        // Q(k, x) at k = x + 1 tends to 1/2 + O(1/sqrt(x))
        let q = regularized_gamma_q(10_001, 10_000.0);
        assert!(q > 0.5 && q < 0.51, "{q}");
        assert!(regularized_gamma_q(5, 1e4) == 0.0 || regularized_gamma_q(5, 1e4) < 1e-300);
    }

    #[test]
    fn gamma_p_rejects_bad_input() {
        assert!(regularized_gamma_p(0, 1.0, Tolerance::default()).is_err());
        assert!(regularized_gamma_p(2, -1.0, Tolerance::default()).is_err());
        let tiny = Tolerance::new(1e-12, 3).unwrap();
        assert_eq!(
            regularized_gamma_p(2, 50.0, tiny),
            Err(SpecFunError::Convergence(3))
        );
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerance::new(0.0, 10).is_err());
        assert!(Tolerance::new(1e-9, 0).is_err());
        assert!(Tolerance::new(1e-9, 1).is_ok());
    }

    #[test]
    fn log_factorial_values() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        assert!((log_factorial(5) - 120f64.ln()).abs() < 1e-14);
        assert!((log_factorial(5) - 4.78749).abs() < 1e-5);
        // continuity between the table and the asymptotic branch
        let direct = log_factorial(170) + 171f64.ln();
        assert!(rel(log_factorial(171), direct) < 1e-14);
        let direct = log_factorial(171) + 172f64.ln();
        assert!(rel(log_factorial(172), direct) < 1e-14);
    }

    #[test]
    fn poisson_pmf_matches_direct_formula() {
        for (m, lam) in [(0u64, 0.7), (3, 2.0), (10, 9.5), (40, 12.0)] {
            let direct = (m as f64 * f64::ln(lam) - lam - log_factorial(m)).exp();
            assert!(rel(poisson_pmf(m, lam), direct) < 1e-12, "{m} {lam}");
        }
        assert_eq!(poisson_pmf(0, 0.0), 1.0);
        assert_eq!(poisson_pmf(2, 0.0), 0.0);
    }

    #[test]
    fn k1_domain() {
        assert_eq!(bessel_k1(0.0), Err(SpecFunError::Domain(0.0)));
        assert!(bessel_k1(-1.0).is_err());
        assert!(bessel_k1(f64::NAN).is_err());
    }

    #[test]
    fn k1_small_argument_limit() {
        let x = 1e-8;
        assert!((x * bessel_k1(x).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn k1_known_values() {
        assert!(rel(bessel_k1(1.0).unwrap(), 0.601_907_23) < 1e-8);
        assert!(rel(bessel_k1(10.0).unwrap(), 1.8648e-5) < 1e-4);
    }

    #[test]
    fn k1_branches_agree_at_crossover() {
        let (series, cf) = bessel_k1_branch_values_at_crossover();
        assert!(rel(series, cf) < 1e-10, "{series} vs {cf}");
    }

    #[test]
    fn ln_k1_is_finite_where_k1_underflows() {
        let v = ln_bessel_k1(5000.0).unwrap();
        assert!(v.is_finite() && v < -4990.0);
        assert_eq!(bessel_k1(5000.0).unwrap(), 0.0);
    }
}
