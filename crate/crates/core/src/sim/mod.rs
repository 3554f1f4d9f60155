//! Slot-level Monte Carlo of the three schemes.
//!
//! Time is integer slots. A node transmits in the slot where its capacitor
//! fills and starts recharging in the next one, so consecutive transmissions
//! are one charge time apart. Nothing happens between transmissions, so the
//! engine jumps from event to event; the results are identical to stepping
//! every slot.

mod engine;
pub mod queue;
pub mod stats;
pub mod validate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::Scheme;
use crate::charging::ChargeSampler;
use crate::error::{ModelError, Result};
use crate::params::{DerivedParams, Overrides, SystemParams};
use crate::rng::stream_rng;

pub use engine::{run_replication, ReplicationStats};
pub use stats::{mean_ci95, MeanCi};
pub use validate::{validate_against_analysis, Check, CheckRule, ValidationReport};

/// When a replication ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Simulate this many slots.
    Horizon(u64),
    /// Simulate until this many deliveries have been made.
    Deliveries(u64),
}

/// How link successes are decided.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessMode {
    /// Bernoulli draws with the analytic success probabilities.
    #[default]
    Analytic,
    /// Draw Rayleigh fades and compare the SNR with the threshold.
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub params: SystemParams,
    pub overrides: Overrides,
    pub stop: StopRule,
    pub seed: u64,
    pub warmup_fraction: f64,
    pub relay_energy_banking: bool,
    pub max_queue_alarm: usize,
    pub replications: usize,
    pub sampler: ChargeSampler,
    pub success_mode: SuccessMode,
}

impl SimConfig {
    pub fn new(scheme: Scheme, params: SystemParams, stop: StopRule) -> Self {
        Self {
            scheme,
            params,
            overrides: Overrides::default(),
            stop,
            seed: 1,
            warmup_fraction: 0.1,
            relay_energy_banking: false,
            max_queue_alarm: 100_000,
            replications: 10,
            sampler: ChargeSampler::PerSlot,
            success_mode: SuccessMode::Analytic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        match self.stop {
            StopRule::Horizon(h) if h < 1000 => {
                return Err(ModelError::invalid("horizon", format!("must be >= 1000 slots, got {h}")));
            }
            StopRule::Deliveries(0) => {
                return Err(ModelError::invalid("target_deliveries", "must be >= 1"));
            }
            _ => {}
        }
        if !(0.0..=0.5).contains(&self.warmup_fraction) {
            return Err(ModelError::invalid(
                "warmup_fraction",
                format!("must lie in [0, 0.5], got {}", self.warmup_fraction),
            ));
        }
        if self.replications < 2 {
            return Err(ModelError::invalid("replications", "need at least 2 for a confidence interval"));
        }
        if self.max_queue_alarm == 0 {
            return Err(ModelError::invalid("max_queue_alarm", "must be >= 1"));
        }
        if self.success_mode == SuccessMode::Physical && self.overrides.touches_success() {
            return Err(ModelError::invalid(
                "success_mode",
                "physical fading cannot be combined with success-probability overrides",
            ));
        }
        Ok(())
    }

    /// Derived parameters with overrides applied.
    pub fn derived(&self) -> Result<DerivedParams> {
        DerivedParams::from_params(&self.params)?.with_overrides(&self.overrides)
    }
}

/// Aggregate over replications. Means are averages of replication means;
/// `ci95_*` are normal-approximation half-widths across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeStats {
    pub scheme: Scheme,
    pub mean_aoi: f64,
    pub mean_paoi: f64,
    pub ci95_aoi: f64,
    pub ci95_paoi: f64,
    /// Post-warmup deliveries, summed over replications.
    pub deliveries: u64,
    /// First hop: source-relay (DF), source-destination (direct) or the
    /// joint AF attempt.
    pub empirical_p_suc_first: f64,
    /// Relay-destination, DF only.
    pub empirical_p_suc_relay: Option<f64>,
    pub empirical_mean_t_s: f64,
    /// Relay charge time (DF and AF).
    pub empirical_mean_t_r: Option<f64>,
    /// Mean of the attempt spacing `max(T_s, T_r)`, AF only.
    pub empirical_mean_t_af: Option<f64>,
    pub mean_queue_len: f64,
    pub e_xs_w_estimate: Option<f64>,
    pub ci95_e_xs_w: Option<f64>,
    pub diverged: bool,
    pub replicates: Vec<ReplicationStats>,
}

impl AgeStats {
    /// Standard error of the mean peak age.
    pub fn se_paoi(&self) -> f64 {
        self.ci95_paoi / stats::Z95
    }

    pub fn se_aoi(&self) -> f64 {
        self.ci95_aoi / stats::Z95
    }

    /// Pooled first and second moment of the first-hop cycle over all
    /// replications (post-warmup).
    pub fn pooled_first_cycle(&self) -> (f64, f64) {
        pooled(self.replicates.iter().map(|r| (r.x_first.count, r.x_first.sum, r.x_first.sum_sq)))
    }

    /// Pooled moments of the relay service time (DF).
    pub fn pooled_relay_cycle(&self) -> (f64, f64) {
        pooled(self.replicates.iter().map(|r| (r.x_relay.count, r.x_relay.sum, r.x_relay.sum_sq)))
    }
}

fn pooled(it: impl Iterator<Item = (u64, f64, f64)>) -> (f64, f64) {
    let (mut n, mut s, mut s2) = (0u64, 0.0, 0.0);
    for (a, b, c) in it {
        n += a;
        s += b;
        s2 += c;
    }
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    (s / n as f64, s2 / n as f64)
}

/// Run all replications. Replication `i` uses stream `(seed, i)`; results are
/// reduced in index order, so the output does not depend on thread count.
pub fn run(config: &SimConfig) -> Result<AgeStats> {
    config.validate()?;
    let derived = config.derived()?;
    let reps: Vec<Result<ReplicationStats>> = (0..config.replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, i as u64);
            run_replication(config, &derived, &mut rng)
        })
        .collect();
    let reps = reps.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config.scheme, reps))
}

fn aggregate(scheme: Scheme, reps: Vec<ReplicationStats>) -> AgeStats {
    let col = |f: &dyn Fn(&ReplicationStats) -> f64| -> MeanCi { mean_ci95(reps.iter().map(f)) };
    let opt_mean = |f: &dyn Fn(&ReplicationStats) -> Option<f64>| -> Option<f64> {
        let v: Vec<f64> = reps.iter().filter_map(f).collect();
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    };
    let aoi = col(&|r| r.mean_aoi);
    let paoi = col(&|r| r.mean_paoi);
    let ratio = |num: u64, den: u64| if den == 0 { f64::NAN } else { num as f64 / den as f64 };
    let first_succ: u64 = reps.iter().map(|r| r.first_link.successes).sum();
    let first_att: u64 = reps.iter().map(|r| r.first_link.attempts).sum();
    let relay_succ: u64 = reps.iter().map(|r| r.relay_link.successes).sum();
    let relay_att: u64 = reps.iter().map(|r| r.relay_link.attempts).sum();
    let e_xs_w = if scheme == Scheme::Df {
        let m = mean_ci95(reps.iter().map(|r| r.e_xs_w));
        Some((m.mean, m.half_width))
    } else {
        None
    };
    AgeStats {
        scheme,
        mean_aoi: aoi.mean,
        mean_paoi: paoi.mean,
        ci95_aoi: aoi.half_width,
        ci95_paoi: paoi.half_width,
        deliveries: reps.iter().map(|r| r.deliveries).sum(),
        empirical_p_suc_first: ratio(first_succ, first_att),
        empirical_p_suc_relay: (scheme == Scheme::Df).then(|| ratio(relay_succ, relay_att)),
        empirical_mean_t_s: col(&|r| r.t_s.mean()).mean,
        empirical_mean_t_r: opt_mean(&|r| (r.t_r.count > 0).then(|| r.t_r.mean())),
        empirical_mean_t_af: opt_mean(&|r| (r.t_af.count > 0).then(|| r.t_af.mean())),
        mean_queue_len: col(&|r| r.mean_queue_len).mean,
        e_xs_w_estimate: e_xs_w.map(|v| v.0),
        ci95_e_xs_w: e_xs_w.map(|v| v.1),
        diverged: reps.iter().any(|r| r.diverged),
        replicates: reps,
    }
}
