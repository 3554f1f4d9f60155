//! Physical inputs and the derived per-link quantities.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::specfun;

/// Raw physical parameters. All values linear; `gamma_th` is a linear SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Power-station transmit power.
    pub p_t: f64,
    /// Energy-transfer efficiency in (0, 1].
    pub eta: f64,
    /// Receiver noise variance.
    pub sigma2: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Power station to source.
    pub d_sp: f64,
    /// Power station to relay.
    pub d_rp: f64,
    /// Source to relay.
    pub d_rs: f64,
    /// Relay to destination.
    pub d_dr: f64,
    /// Source to destination.
    pub d_ds: f64,
    pub b_s: f64,
    pub b_r: f64,
    pub gamma_th: f64,
    /// Energy the relay spends per decoding attempt.
    pub c_p: f64,
}

impl Default for SystemParams {
    /// The fig4 operating point at `P_t = 1500`.
    fn default() -> Self {
        Self {
            p_t: 1500.0,
            eta: 0.8,
            sigma2: 1.0,
            alpha: 2.0,
            d_sp: 1.0,
            d_rp: 1.0,
            d_rs: 6.0,
            d_dr: 4.0,
            d_ds: 10.0,
            b_s: 1500.0,
            b_r: 1500.0,
            gamma_th: db_to_linear(16.0),
            c_p: 0.01,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn require_positive(field: &str, v: f64) -> Result<()> {
    if v.is_nan() || v <= 0.0 {
        return Err(ModelError::invalid(field, format!("must be > 0, got {v}")));
    }
    if v.is_infinite() {
        return Err(ModelError::invalid(field, "must be finite"));
    }
    Ok(())
}

impl SystemParams {
    /// Check every range constraint; violations are rejected, never clamped.
    pub fn validate(self) -> Result<Self> {
        require_positive("p_t", self.p_t)?;
        require_positive("eta", self.eta)?;
        if self.eta > 1.0 {
            return Err(ModelError::invalid("eta", format!("must be <= 1, got {}", self.eta)));
        }
        require_positive("sigma2", self.sigma2)?;
        require_positive("alpha", self.alpha)?;
        require_positive("d_sp", self.d_sp)?;
        require_positive("d_rp", self.d_rp)?;
        require_positive("d_rs", self.d_rs)?;
        require_positive("d_dr", self.d_dr)?;
        require_positive("d_ds", self.d_ds)?;
        require_positive("b_s", self.b_s)?;
        require_positive("b_r", self.b_r)?;
        require_positive("gamma_th", self.gamma_th)?;
        if self.c_p.is_nan() || self.c_p < 0.0 || self.c_p.is_infinite() {
            return Err(ModelError::invalid("c_p", format!("must be finite and >= 0, got {}", self.c_p)));
        }
        Ok(self)
    }
}

/// `B' = d^alpha * b / (eta * p_t)`.
pub fn normalized_capacitor(d: f64, alpha: f64, b: f64, eta: f64, p_t: f64) -> f64 {
    d.powf(alpha) * b / (eta * p_t)
}

/// Rayleigh-fading success probability `exp(-sigma2 * gamma_th * d^alpha / b)`.
pub fn success_prob(sigma2: f64, gamma_th: f64, d: f64, alpha: f64, b: f64) -> f64 {
    (-sigma2 * gamma_th * d.powf(alpha) / b).exp()
}

pub fn success_prob_df_source(p: &SystemParams) -> f64 {
    success_prob(p.sigma2, p.gamma_th, p.d_rs, p.alpha, p.b_s)
}

/// Source to destination without the relay; same fading model as the other
/// links, with the source capacitor as transmit energy.
pub fn success_prob_direct(p: &SystemParams) -> f64 {
    success_prob(p.sigma2, p.gamma_th, p.d_ds, p.alpha, p.b_s)
}

/// Relay transmit energy left after paying the decoding cost of the expected
/// number of source attempts: `B_r - C_p / p_suc_s`.
pub fn effective_relay_power(p: &SystemParams) -> Result<f64> {
    let p_s = success_prob_df_source(p);
    if p_s == 0.0 {
        return Err(ModelError::RelayPowerInfeasible(f64::NEG_INFINITY));
    }
    let b_star = p.b_r - p.c_p / p_s;
    if b_star > 0.0 {
        Ok(b_star)
    } else {
        Err(ModelError::RelayPowerInfeasible(b_star))
    }
}

pub fn success_prob_df_relay(p: &SystemParams) -> Result<f64> {
    let b_star = effective_relay_power(p)?;
    Ok(success_prob(p.sigma2, p.gamma_th, p.d_dr, p.alpha, b_star))
}

/// `ln` of the amplify-and-forward success probability. Finite even when the
/// probability itself underflows.
pub fn log_success_prob_af(p: &SystemParams) -> f64 {
    let g = p.gamma_th;
    let s2 = p.sigma2;
    let a_rs = p.d_rs.powf(p.alpha);
    let a_dr = p.d_dr.powf(p.alpha);
    let expo = -g * s2 * (a_rs / p.b_s + a_dr / p.b_r);
    let beta = 4.0 * s2 * s2 * g * (g + 1.0) * a_rs * a_dr / (p.b_s * p.b_r);
    if beta == 0.0 {
        return expo;
    }
    let x = beta.sqrt();
    // x K1(x) -> 1 as x -> 0
    let ln_k = specfun::ln_bessel_k1(x).expect("sqrt(beta) is positive and finite");
    expo + x.ln() + ln_k
}

pub fn success_prob_af(p: &SystemParams) -> f64 {
    log_success_prob_af(p).exp()
}

/// Mean number of attempts until the first success.
pub fn expected_retransmissions(p_suc: f64) -> Result<f64> {
    if p_suc == 0.0 {
        return Err(ModelError::DivideByZeroProb);
    }
    if !(p_suc > 0.0 && p_suc <= 1.0) {
        return Err(ModelError::invalid("p_suc", format!("must lie in (0, 1], got {p_suc}")));
    }
    Ok(1.0 / p_suc)
}

/// Optional replacements for derived quantities. Used to pin the model at the
/// limiting cases (full capacitors: `B' = 0`; error-free links: `p = 1`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub bprime_s: Option<f64>,
    pub bprime_r: Option<f64>,
    pub p_suc_s: Option<f64>,
    pub p_suc_r: Option<f64>,
    pub p_suc_direct: Option<f64>,
    pub p_suc_af: Option<f64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }

    pub fn touches_success(&self) -> bool {
        self.p_suc_s.is_some()
            || self.p_suc_r.is_some()
            || self.p_suc_direct.is_some()
            || self.p_suc_af.is_some()
    }
}

/// Everything the analysis and simulator consume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub bprime_s: f64,
    pub bprime_r: f64,
    pub p_suc_s: f64,
    pub p_suc_r: f64,
    pub p_suc_af: f64,
    pub p_suc_direct: f64,
    pub b_star_r: f64,
}

impl DerivedParams {
    /// Order matters: `p_suc_s`, then `b_star_r`, then `p_suc_r`.
    pub fn from_params(raw: &SystemParams) -> Result<Self> {
        let p = raw.validate()?;
        let p_suc_s = success_prob_df_source(&p);
        let b_star_r = effective_relay_power(&p)?;
        let p_suc_r = success_prob(p.sigma2, p.gamma_th, p.d_dr, p.alpha, b_star_r);
        Ok(Self {
            bprime_s: normalized_capacitor(p.d_sp, p.alpha, p.b_s, p.eta, p.p_t),
            bprime_r: normalized_capacitor(p.d_rp, p.alpha, p.b_r, p.eta, p.p_t),
            p_suc_s,
            p_suc_r,
            p_suc_af: success_prob_af(&p),
            p_suc_direct: success_prob_direct(&p),
            b_star_r,
        })
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        let check_b = |field: &str, v: f64| -> Result<f64> {
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(ModelError::invalid(field, format!("must be finite and >= 0, got {v}")))
            }
        };
        let check_p = |field: &str, v: f64| -> Result<f64> {
            if v > 0.0 && v <= 1.0 {
                Ok(v)
            } else {
                Err(ModelError::invalid(field, format!("must lie in (0, 1], got {v}")))
            }
        };
        if let Some(v) = o.bprime_s {
            self.bprime_s = check_b("bprime_s", v)?;
        }
        if let Some(v) = o.bprime_r {
            self.bprime_r = check_b("bprime_r", v)?;
        }
        if let Some(v) = o.p_suc_s {
            self.p_suc_s = check_p("p_suc_s", v)?;
        }
        if let Some(v) = o.p_suc_r {
            self.p_suc_r = check_p("p_suc_r", v)?;
        }
        if let Some(v) = o.p_suc_direct {
            self.p_suc_direct = check_p("p_suc_direct", v)?;
        }
        if let Some(v) = o.p_suc_af {
            self.p_suc_af = check_p("p_suc_af", v)?;
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_accepted() {
        assert!(SystemParams::default().validate().is_ok());
    }

    #[test]
    fn rejects_out_of_range() {
        let mut p = SystemParams::default();
        p.eta = 0.0;
        assert!(matches!(p.validate(), Err(ModelError::InvalidParam { ref field, .. }) if field == "eta"));
        let mut p = SystemParams::default();
        p.eta = 1.2;
        assert!(p.validate().is_err());
        let mut p = SystemParams::default();
        p.alpha = -1.0;
        assert!(p.validate().is_err());
        let mut p = SystemParams::default();
        p.c_p = -0.1;
        assert!(p.validate().is_err());
        let mut p = SystemParams::default();
        p.d_ds = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn normalized_capacitor_examples() {
        assert_eq!(normalized_capacitor(1.0, 2.0, 0.8, 0.8, 1.0), 1.0);
        assert_eq!(normalized_capacitor(1.0, 2.0, 0.8, 0.8, 0.5), 2.0);
        assert_eq!(normalized_capacitor(2.0, 2.0, 1.0, 0.8, 1.0), 5.0);
    }

    #[test]
    fn success_prob_limits() {
        assert!((success_prob(1.0, 1.0, 1.0, 2.0, 1.0) - (-1f64).exp()).abs() < 1e-15);
        assert!(success_prob(1.0, 1e-12, 5.0, 2.0, 1.0) > 1.0 - 1e-10);
        assert_eq!(success_prob(1.0, 1.0, 1.0, 2.0, 1e-300), 0.0);
    }

    #[test]
    fn effective_relay_power_examples() {
        let mut p = SystemParams::default();
        p.c_p = 0.0;
        assert_eq!(effective_relay_power(&p).unwrap(), p.b_r);

        // (B_r = 1, C_p = 0.01, p_s = 0.5): choose gamma so that p_s = 0.5
        let mut p = SystemParams::default();
        p.b_s = 1.0;
        p.d_rs = 1.0;
        p.sigma2 = 1.0;
        p.gamma_th = 2f64.ln();
        p.b_r = 1.0;
        p.c_p = 0.01;
        assert!((effective_relay_power(&p).unwrap() - 0.98).abs() < 1e-12);
        p.b_r = 0.01;
        assert!(matches!(effective_relay_power(&p), Err(ModelError::RelayPowerInfeasible(_))));
        assert!(DerivedParams::from_params(&p).is_err());
    }

    #[test]
    fn af_small_beta_limit() {
        let mut p = SystemParams::default();
        p.gamma_th = 1e-9;
        let expo = (-p.gamma_th * (36.0 / p.b_s + 16.0 / p.b_r)).exp();
        assert!((success_prob_af(&p) - expo).abs() < 1e-8);
    }

    #[test]
    fn af_large_threshold_vanishes() {
        let mut p = SystemParams::default();
        p.gamma_th = 1e8;
        assert_eq!(success_prob_af(&p), 0.0);
        assert!(log_success_prob_af(&p).is_finite());
    }

    #[test]
    fn af_unit_capacitors_in_log_space() {
        // exp(-5000-odd) underflows; compare the log against the large-argument
        // expansion of K1
        let p = SystemParams { b_s: 1.0, b_r: 1.0, d_dr: 10.0, ..SystemParams::default() };
        let g = p.gamma_th;
        let beta = 4.0 * g * (g + 1.0) * 36.0 * 100.0;
        let x = beta.sqrt();
        let series = 1.0 + 3.0 / (8.0 * x) - 15.0 / (128.0 * x * x);
        let want = -g * 136.0 + x.ln() + 0.5 * (std::f64::consts::PI / (2.0 * x)).ln() - x + series.ln();
        let got = log_success_prob_af(&p);
        assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");
        assert_eq!(success_prob_af(&p), 0.0);
    }

    #[test]
    fn retransmissions() {
        assert_eq!(expected_retransmissions(1.0).unwrap(), 1.0);
        assert_eq!(expected_retransmissions(0.25).unwrap(), 4.0);
        assert!((expected_retransmissions((-1f64).exp()).unwrap() - std::f64::consts::E).abs() < 1e-14);
        assert_eq!(expected_retransmissions(0.0), Err(ModelError::DivideByZeroProb));
    }

    #[test]
    fn overrides_validated() {
        let d = DerivedParams::from_params(&SystemParams::default()).unwrap();
        let o = Overrides { p_suc_af: Some(0.0), ..Default::default() };
        assert!(d.with_overrides(&o).is_err());
        let o = Overrides { bprime_s: Some(0.0), p_suc_s: Some(1.0), ..Default::default() };
        let d2 = d.with_overrides(&o).unwrap();
        assert_eq!(d2.bprime_s, 0.0);
        assert_eq!(d2.p_suc_s, 1.0);
        assert_eq!(d2.bprime_r, d.bprime_r);
    }

    #[test]
    fn doubling_power_halves_bprime() {
        let mut p = SystemParams::default();
        let a = DerivedParams::from_params(&p).unwrap();
        p.p_t *= 2.0;
        let b = DerivedParams::from_params(&p).unwrap();
        assert_eq!(a.bprime_s, 2.0 * b.bprime_s);
        assert_eq!(a.bprime_r, 2.0 * b.bprime_r);
    }
}
