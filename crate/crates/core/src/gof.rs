//! Chi-square goodness of fit for integer-valued samples.

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Minimum expected count per bin.
const MIN_EXPECTED: f64 = 5.0;

/// `counts[v]` is the number of samples equal to `v`; `pmf(v)` the model
/// probability. Adjacent values are merged left to right until each bin
/// expects at least five samples; the last bin absorbs the whole upper tail.
pub fn chi_square_gof(counts: &[u64], pmf: impl Fn(usize) -> f64) -> ChiSquare {
    let n: u64 = counts.iter().sum();
    let nf = n as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut obs = 0.0;
    let mut exp = 0.0;
    let mut mass = 0.0;
    for (v, &c) in counts.iter().enumerate() {
        let p = pmf(v);
        mass += p;
        obs += c as f64;
        exp += nf * p;
        if exp >= MIN_EXPECTED {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    // upper tail beyond the largest observed value
    exp += nf * (1.0 - mass).max(0.0);
    if let Some(last) = bins.last_mut() {
        if exp < MIN_EXPECTED {
            last.0 += obs;
            last.1 += exp;
        } else {
            bins.push((obs, exp));
        }
    } else {
        bins.push((obs, exp));
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let d = ChiSquared::new(dof as f64).expect("dof is positive");
        1.0 - d.cdf(statistic)
    };
    ChiSquare { statistic, dof, p_value, bins: bins.len() }
}

/// Tally integer samples into a dense count vector.
pub fn tally(samples: impl IntoIterator<Item = u64>) -> Vec<u64> {
    let mut counts: Vec<u64> = Vec::new();
    for s in samples {
        let i = s as usize;
        if i >= counts.len() {
            counts.resize(i + 1, 0);
        }
        counts[i] += 1;
    }
    counts
}
