//! Capacitor charging times.
//!
//! Each slot a node harvests an independent Exp(1) amount of normalized
//! energy; it transmits in the first slot where the running total reaches
//! `B'`. That time is `1 + Poisson(B')`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::specfun::{self, Tolerance};

/// How charge times are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeSampler {
    /// Accumulate one Exp(1) harvest per slot. Cost grows with `B'`.
    #[default]
    PerSlot,
    /// Draw `1 + Poisson(B')` directly.
    ShiftedPoisson,
}

#[derive(Debug, Clone)]
pub struct ChargeTimeDist {
    bprime: f64,
    poisson: Option<Poisson<f64>>,
}

fn check_bprime(field: &str, bprime: f64) -> Result<f64> {
    if bprime.is_finite() && bprime >= 0.0 {
        Ok(bprime)
    } else {
        Err(ModelError::invalid(field, format!("must be finite and >= 0, got {bprime}")))
    }
}

impl ChargeTimeDist {
    /// `bprime = 0` is the full-capacitor limit: every charge takes one slot.
    pub fn new(bprime: f64) -> Result<Self> {
        let bprime = check_bprime("bprime", bprime)?;
        let poisson = if bprime > 0.0 {
            Some(Poisson::new(bprime).map_err(|e| ModelError::invalid("bprime", e.to_string()))?)
        } else {
            None
        };
        Ok(Self { bprime, poisson })
    }

    pub fn bprime(&self) -> f64 {
        self.bprime
    }

    /// `P(T = m) = B'^(m-1) e^-B' / (m-1)!`.
    pub fn pmf(&self, m: u64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        specfun::poisson_pmf(m - 1, self.bprime)
    }

    /// `P(T <= k) = Q(k, B')`.
    pub fn cdf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        specfun::regularized_gamma_q(k, self.bprime)
    }

    /// `P(T > k)`, accurate deep in the tail.
    pub fn survival(&self, k: u64, tol: Tolerance) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        let q = self.cdf(k);
        if q < 0.5 {
            Ok(1.0 - q)
        } else {
            Ok(specfun::regularized_gamma_p(k, self.bprime, tol)?)
        }
    }

    pub fn mean(&self) -> f64 {
        1.0 + self.bprime
    }

    pub fn second_moment(&self) -> f64 {
        let b = self.bprime;
        1.0 + 3.0 * b + b * b
    }

    pub fn variance(&self) -> f64 {
        self.bprime
    }

    /// `(E[T], E[T^2])`.
    pub fn moments(&self) -> (f64, f64) {
        (self.mean(), self.second_moment())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, sampler: ChargeSampler) -> u64 {
        match sampler {
            ChargeSampler::PerSlot => {
                let mut energy = 0.0;
                let mut m = 0;
                loop {
                    let harvest: f64 = rng.sample(Exp1);
                    energy += harvest;
                    m += 1;
                    if energy >= self.bprime {
                        return m;
                    }
                }
            }
            ChargeSampler::ShiftedPoisson => match &self.poisson {
                Some(p) => 1 + p.sample(rng) as u64,
                None => 1,
            },
        }
    }
}

/// Law of `max(T_s, T_r)` for independent charge times.
#[derive(Debug, Clone)]
pub struct AfWaitDist {
    pub source: ChargeTimeDist,
    pub relay: ChargeTimeDist,
}

impl AfWaitDist {
    pub fn new(bprime_s: f64, bprime_r: f64) -> Result<Self> {
        check_bprime("bprime_s", bprime_s)?;
        check_bprime("bprime_r", bprime_r)?;
        Ok(Self {
            source: ChargeTimeDist::new(bprime_s)?,
            relay: ChargeTimeDist::new(bprime_r)?,
        })
    }

    pub fn cdf(&self, k: u64) -> f64 {
        self.source.cdf(k) * self.relay.cdf(k)
    }

    /// Differencing of the product CDF.
    pub fn pmf(&self, m: u64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        (self.cdf(m) - self.cdf(m - 1)).max(0.0)
    }

    /// Same mass from the three disjoint events: both finish at `m`, or one
    /// finishes at `m` while the other finished earlier.
    pub fn pmf_three_term(&self, m: u64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        let ps = self.source.pmf(m);
        let pr = self.relay.pmf(m);
        ps * pr + pr * self.source.cdf(m - 1) + ps * self.relay.cdf(m - 1)
    }

    /// `P(T_AF > i)`.
    pub fn survival(&self, i: u64, tol: Tolerance) -> Result<f64> {
        let prod = self.cdf(i);
        if prod < 0.5 {
            return Ok(1.0 - prod);
        }
        let a = self.source.survival(i, tol)?;
        let b = self.relay.survival(i, tol)?;
        Ok(a + b - a * b)
    }

    fn tail_sums(&self, tol: Tolerance) -> Result<(f64, f64, f64)> {
        // (sum S(i), sum (2i+1) S(i), sum 2 i S(i)) over i >= 1
        let floor = self.source.bprime().max(self.relay.bprime()) + 10.0;
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for i in 1..=tol.max_terms as u64 {
            let surv = self.survival(i, tol)?;
            let fi = i as f64;
            s0 += surv;
            let term = (2.0 * fi + 1.0) * surv;
            s1 += term;
            s2 += 2.0 * fi * surv;
            if fi > floor && term < tol.rel_eps * (1.0 + s1) {
                return Ok((s0, s1, s2));
            }
        }
        Err(ModelError::Convergence(tol.max_terms))
    }

    /// `(E[T_AF], E[T_AF^2])` from the tail sums
    /// `E[T] = 1 + sum_{i>=1} P(T > i)` and
    /// `E[T^2] = 1 + sum_{i>=1} (2i + 1) P(T > i)`.
    pub fn moments(&self, tol: Tolerance) -> Result<(f64, f64)> {
        let (s0, s1, _) = self.tail_sums(tol)?;
        Ok((1.0 + s0, 1.0 + s1))
    }

    /// `2 sum_{i>=1} i P(T > i)`, a second-moment expression that misses
    /// `E[T]`. Kept only so tests can show the gap.
    pub fn second_moment_short_form(&self, tol: Tolerance) -> Result<f64> {
        Ok(self.tail_sums(tol)?.2)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, sampler: ChargeSampler) -> u64 {
        let a = self.source.sample(rng, sampler);
        let b = self.relay.sample(rng, sampler);
        a.max(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn pmf_examples() {
        let d = ChargeTimeDist::new(0.0).unwrap();
        assert_eq!(d.pmf(1), 1.0);
        assert_eq!(d.cdf(1), 1.0);
        let d = ChargeTimeDist::new(1.0).unwrap();
        assert!((d.pmf(1) - (-1f64).exp()).abs() < 1e-15);
        assert!((d.cdf(1) - (-1f64).exp()).abs() < 1e-15);
        let d = ChargeTimeDist::new(2.0).unwrap();
        assert!((d.pmf(3) - 2.0 * (-2f64).exp()).abs() < 1e-15);
        assert!((d.pmf(3) - 0.270_671).abs() < 1e-6);
    }

    #[test]
    fn moments_examples() {
        assert_eq!(ChargeTimeDist::new(0.0).unwrap().moments(), (1.0, 1.0));
        assert_eq!(ChargeTimeDist::new(2.0).unwrap().moments(), (3.0, 11.0));
        let d = ChargeTimeDist::new(1.0).unwrap();
        assert_eq!(d.moments(), (2.0, 5.0));
        assert_eq!(d.variance(), 1.0);
    }

    #[test]
    fn rejects_negative_bprime() {
        assert!(ChargeTimeDist::new(-0.1).is_err());
        assert!(AfWaitDist::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn cdf_reaches_one() {
        for b in [0.5, 3.0, 40.0, 900.0] {
            let d = ChargeTimeDist::new(b).unwrap();
            let k = (b.ceil() + 50.0 * (b + 1.0).sqrt()) as u64;
            assert!(d.cdf(k) >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn af_pmf_examples() {
        let d = AfWaitDist::new(0.0, 0.0).unwrap();
        assert_eq!(d.pmf(1), 1.0);
        let d = AfWaitDist::new(1.0, 1.0).unwrap();
        assert!((d.pmf(1) - (-2f64).exp()).abs() < 1e-15);
        let d = AfWaitDist::new(1.0, 2.0).unwrap();
        let q = specfun::regularized_gamma_q;
        let expect = q(2, 1.0) * q(2, 2.0) - q(1, 1.0) * q(1, 2.0);
        assert!((d.pmf(2) - expect).abs() < 1e-15);
    }

    #[test]
    fn af_three_term_matches_differencing() {
        for (a, b) in [(1.0, 1.0), (1.0, 2.0), (0.5, 3.0), (7.0, 2.5), (0.0, 4.0)] {
            let d = AfWaitDist::new(a, b).unwrap();
            for m in 1..60 {
                assert!((d.pmf(m) - d.pmf_three_term(m)).abs() < 1e-10, "{a} {b} {m}");
            }
        }
    }

    #[test]
    fn af_moments_degenerate() {
        let tol = Tolerance::default();
        let (m, s) = AfWaitDist::new(0.0, 0.0).unwrap().moments(tol).unwrap();
        assert!((m - 1.0).abs() < 1e-15 && (s - 1.0).abs() < 1e-15);
        let (m, s) = AfWaitDist::new(3.0, 0.0).unwrap().moments(tol).unwrap();
        assert!((m - 4.0).abs() < 1e-10);
        assert!((s - 19.0).abs() < 1e-9);
    }

    #[test]
    fn af_moments_convergence_error() {
        let tol = Tolerance::new(1e-12, 5).unwrap();
        assert_eq!(
            AfWaitDist::new(20.0, 20.0).unwrap().moments(tol),
            Err(ModelError::Convergence(5))
        );
    }

    #[test]
    fn sampler_zero_bprime_is_one() {
        let d = ChargeTimeDist::new(0.0).unwrap();
        let mut rng = stream_rng(1, 0);
        for s in [ChargeSampler::PerSlot, ChargeSampler::ShiftedPoisson] {
            for _ in 0..100 {
                assert_eq!(d.sample(&mut rng, s), 1);
            }
        }
    }

    #[test]
    fn sampler_deterministic_per_seed() {
        let d = ChargeTimeDist::new(2.0).unwrap();
        let a: Vec<u64> = {
            let mut r = stream_rng(42, 3);
            (0..50).map(|_| d.sample(&mut r, ChargeSampler::PerSlot)).collect()
        };
        let b: Vec<u64> = {
            let mut r = stream_rng(42, 3);
            (0..50).map(|_| d.sample(&mut r, ChargeSampler::PerSlot)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn sampler_mean() {
        let d = ChargeTimeDist::new(2.0).unwrap();
        let mut rng = stream_rng(7, 0);
        let n = 1_000_000;
        for s in [ChargeSampler::PerSlot, ChargeSampler::ShiftedPoisson] {
            let sum: u64 = (0..n).map(|_| d.sample(&mut rng, s)).sum();
            let mean = sum as f64 / n as f64;
            let se = (d.variance() / n as f64).sqrt();
            assert!((mean - 3.0).abs() < 3.0 * se, "{s:?} {mean}");
        }
    }
}
