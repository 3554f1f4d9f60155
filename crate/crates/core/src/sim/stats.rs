//! Small summary-statistics helpers.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanCi {
    pub fn se(&self) -> f64 {
        self.half_width / Z95
    }
}

/// Sample mean and `1.96 * sd / sqrt(n)`. With one value the width is zero.
pub fn mean_ci95(values: impl IntoIterator<Item = f64>) -> MeanCi {
    let v: Vec<f64> = values.into_iter().collect();
    let n = v.len();
    if n == 0 {
        return MeanCi { mean: f64::NAN, half_width: f64::NAN, n };
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanCi { mean, half_width: 0.0, n };
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    MeanCi { mean, half_width: Z95 * (var / n as f64).sqrt(), n }
}

/// Count, sum and sum of squares of integer samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    /// `n` copies of `x`.
    pub fn push_n(&mut self, x: f64, n: u64) {
        self.count += n;
        self.sum += x * n as f64;
        self.sum_sq += x * x * n as f64;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub fn second(&self) -> f64 {
        self.sum_sq / self.count as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let n = self.count as f64;
        (self.second() - m * m) * n / (n - 1.0)
    }
}
