//! Side-by-side comparison of simulated and analytic quantities.

use std::fmt;

use super::stats::{mean_ci95, Z95};
use super::{run, AgeStats, SimConfig};
use crate::analysis::{self, analyze, Scheme, SchemeAnalysis};
use crate::charging::AfWaitDist;
use crate::error::{ModelError, Result};
use crate::specfun::Tolerance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckRule {
    /// `|sim - analytic| <= k * se`.
    Within(f64),
    /// `sim <= analytic + k * se` (analytic is an upper bound).
    AtMost(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub metric: String,
    pub analytic: f64,
    pub simulated: f64,
    pub se: f64,
    pub rule: CheckRule,
    pub pass: bool,
}

impl Check {
    pub fn new(metric: &str, analytic: f64, simulated: f64, se: f64, rule: CheckRule) -> Self {
        let pass = match rule {
            CheckRule::Within(k) => (simulated - analytic).abs() <= k * se,
            CheckRule::AtMost(k) => simulated <= analytic + k * se,
        };
        Self {
            metric: metric.to_string(),
            analytic,
            simulated,
            se,
            rule,
            pass,
        }
    }

    /// Distance in standard errors.
    pub fn z(&self) -> f64 {
        (self.simulated - self.analytic) / self.se
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match self.rule {
            CheckRule::Within(k) => format!("|d| <= {k} se"),
            CheckRule::AtMost(k) => format!("sim <= bound + {k} se"),
        };
        write!(
            f,
            "{:<5} {:<22} analytic {:>14.6} sim {:>14.6} se {:>10.3e} z {:>7.2} ({rule})",
            if self.pass { "ok" } else { "FAIL" },
            self.metric,
            self.analytic,
            self.simulated,
            self.se,
            self.z()
        )
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub stats: AgeStats,
    pub analysis: SchemeAnalysis,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, metric: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.metric == metric)
    }
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt().max(1e-300)
}

/// Simulate and compare against the closed forms. Decode-and-forward
/// parameters must give a stable relay queue.
pub fn validate_against_analysis(config: &SimConfig) -> Result<ValidationReport> {
    let tol = Tolerance::default();
    let d = config.derived()?;
    let an = analyze(config.scheme, &d, tol)?;
    if config.scheme == Scheme::Df && an.paoi.is_none() {
        return Err(ModelError::UnstableQueue {
            rho: an.utilization.unwrap_or(f64::NAN),
        });
    }
    let st = run(config)?;
    let k = 3.0;
    let mut checks = Vec::new();
    let reps = &st.replicates;

    let first_p = match config.scheme {
        Scheme::Direct => d.p_suc_direct,
        Scheme::Df => d.p_suc_s,
        Scheme::Af => d.p_suc_af,
    };
    let n_first: u64 = reps.iter().map(|r| r.first_link.attempts).sum();
    checks.push(Check::new(
        "p_suc_first",
        first_p,
        st.empirical_p_suc_first,
        binomial_se(first_p, n_first),
        CheckRule::Within(k),
    ));
    if let Some(pr) = st.empirical_p_suc_relay {
        let n: u64 = reps.iter().map(|r| r.relay_link.attempts).sum();
        checks.push(Check::new("p_suc_relay", d.p_suc_r, pr, binomial_se(d.p_suc_r, n), CheckRule::Within(k)));
    }

    let n_ts: u64 = reps.iter().map(|r| r.t_s.count).sum();
    checks.push(Check::new(
        "mean_t_s",
        1.0 + d.bprime_s,
        st.empirical_mean_t_s,
        (d.bprime_s / n_ts as f64).sqrt().max(1e-300),
        CheckRule::Within(k),
    ));
    if let Some(tr) = st.empirical_mean_t_r {
        let n: u64 = reps.iter().map(|r| r.t_r.count).sum();
        checks.push(Check::new(
            "mean_t_r",
            1.0 + d.bprime_r,
            tr,
            (d.bprime_r / n as f64).sqrt().max(1e-300),
            CheckRule::Within(k),
        ));
    }
    if let Some(taf) = st.empirical_mean_t_af {
        let (m, s) = AfWaitDist::new(d.bprime_s, d.bprime_r)?.moments(tol)?;
        let n: u64 = reps.iter().map(|r| r.t_af.count).sum();
        checks.push(Check::new(
            "mean_t_af",
            m,
            taf,
            ((s - m * m).max(0.0) / n as f64).sqrt().max(1e-300),
            CheckRule::Within(k),
        ));
    }

    let ci = |f: &dyn Fn(&super::ReplicationStats) -> f64| mean_ci95(reps.iter().map(f));
    let x = an.first_hop;
    let xm = ci(&|r| r.x_first.mean());
    checks.push(Check::new("mean_x_first", x.mean, xm.mean, xm.se().max(1e-300), CheckRule::Within(k)));
    let xm2 = ci(&|r| r.x_first.second());
    checks.push(Check::new("second_x_first", x.second, xm2.mean, xm2.se().max(1e-300), CheckRule::Within(k)));
    if let Some(xr) = an.relay_hop {
        let m = ci(&|r| r.x_relay.mean());
        checks.push(Check::new("mean_x_relay", xr.mean, m.mean, m.se().max(1e-300), CheckRule::Within(k)));
        let m2 = ci(&|r| r.x_relay.second());
        checks.push(Check::new("second_x_relay", xr.second, m2.mean, m2.se().max(1e-300), CheckRule::Within(k)));
    }

    let paoi_an = an.paoi.expect("checked above");
    match config.scheme {
        Scheme::Direct | Scheme::Af => {
            checks.push(Check::new("paoi", paoi_an, st.mean_paoi, st.se_paoi(), CheckRule::Within(k)));
            let aoi_an = an.aoi.expect("one-hop schemes have a closed-form age");
            checks.push(Check::new("aoi", aoi_an, st.mean_aoi, st.se_aoi(), CheckRule::Within(k)));
        }
        Scheme::Df => {
            checks.push(Check::new("paoi_bound", paoi_an, st.mean_paoi, st.se_paoi(), CheckRule::AtMost(k)));
            let xr = an.relay_hop.expect("df has a relay hop");
            let e = st.e_xs_w_estimate.expect("df estimates E[X_s W]");
            let hybrid = analysis::aoi_df_hybrid(&x, &xr, e);
            let se_e = st.ci95_e_xs_w.unwrap_or(0.0) / Z95 / x.mean;
            let se = (st.se_aoi().powi(2) + se_e.powi(2)).sqrt();
            checks.push(Check::new("aoi_hybrid", hybrid, st.mean_aoi, se, CheckRule::Within(k)));
        }
    }
    Ok(ValidationReport { checks, stats: st, analysis: an })
}
