//! Flat TOML experiment files.
//!
//! Every key is optional and falls back to [`ExperimentConfig::default`].
//! A key ending in `_db` is given in decibels and converted once, here.
//!
//! ```toml
//! schemes = ["direct", "df", "af"]
//! seed = 7
//! replications = 10
//! target_deliveries = 100000    # or: horizon = 1000000
//! p_t = 1500
//! gamma_th_db = 16
//! sweep_param = "p_t"
//! sweep_values = [750, 1500, 3000]
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::Scheme;
use crate::charging::ChargeSampler;
use crate::params::{db_to_linear, Overrides, SystemParams};
use crate::sim::{StopRule, SuccessMode};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// A swept input. The set is fixed; anything else is a config error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    PT,
    PTDb,
    Eta,
    Sigma2,
    Alpha,
    DSp,
    DRp,
    DRs,
    DDr,
    DDs,
    BS,
    BR,
    GammaTh,
    GammaThDb,
    CP,
    /// `b_s = v * b_r`.
    BsBrRatio,
    /// `d_ds = v`, relay on the line with `d_rs` kept: `d_dr = v - d_rs`.
    DDsCollinear,
    /// `d_ds = v`, `d_rs = 0.6 v`, `d_dr = 0.4 v`.
    DDsScaled,
}

impl SweepParam {
    pub const NAMES: [&'static str; 18] = [
        "p_t",
        "p_t_db",
        "eta",
        "sigma2",
        "alpha",
        "d_sp",
        "d_rp",
        "d_rs",
        "d_dr",
        "d_ds",
        "b_s",
        "b_r",
        "gamma_th",
        "gamma_th_db",
        "c_p",
        "bs_br_ratio",
        "d_ds_collinear",
        "d_ds_scaled",
    ];

    const ALL: [SweepParam; 18] = [
        SweepParam::PT,
        SweepParam::PTDb,
        SweepParam::Eta,
        SweepParam::Sigma2,
        SweepParam::Alpha,
        SweepParam::DSp,
        SweepParam::DRp,
        SweepParam::DRs,
        SweepParam::DDr,
        SweepParam::DDs,
        SweepParam::BS,
        SweepParam::BR,
        SweepParam::GammaTh,
        SweepParam::GammaThDb,
        SweepParam::CP,
        SweepParam::BsBrRatio,
        SweepParam::DDsCollinear,
        SweepParam::DDsScaled,
    ];

    pub fn name(self) -> &'static str {
        let i = Self::ALL.iter().position(|p| *p == self).expect("listed");
        Self::NAMES[i]
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        Self::NAMES
            .iter()
            .position(|n| *n == s)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| {
                ConfigError::Invalid(format!(
                    "unknown sweep parameter `{s}`; expected one of {}",
                    Self::NAMES.join(", ")
                ))
            })
    }

    pub fn apply(self, p: &mut SystemParams, v: f64) {
        match self {
            SweepParam::PT => p.p_t = v,
            SweepParam::PTDb => p.p_t = db_to_linear(v),
            SweepParam::Eta => p.eta = v,
            SweepParam::Sigma2 => p.sigma2 = v,
            SweepParam::Alpha => p.alpha = v,
            SweepParam::DSp => p.d_sp = v,
            SweepParam::DRp => p.d_rp = v,
            SweepParam::DRs => p.d_rs = v,
            SweepParam::DDr => p.d_dr = v,
            SweepParam::DDs => p.d_ds = v,
            SweepParam::BS => p.b_s = v,
            SweepParam::BR => p.b_r = v,
            SweepParam::GammaTh => p.gamma_th = v,
            SweepParam::GammaThDb => p.gamma_th = db_to_linear(v),
            SweepParam::CP => p.c_p = v,
            SweepParam::BsBrRatio => p.b_s = v * p.b_r,
            SweepParam::DDsCollinear => {
                p.d_ds = v;
                p.d_dr = v - p.d_rs;
            }
            SweepParam::DDsScaled => {
                p.d_ds = v;
                p.d_rs = 0.6 * v;
                p.d_dr = 0.4 * v;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub params: SystemParams,
    pub overrides: Overrides,
    pub schemes: Vec<Scheme>,
    pub stop: StopRule,
    pub seed: u64,
    pub replications: usize,
    pub warmup_fraction: f64,
    pub relay_energy_banking: bool,
    pub max_queue_alarm: usize,
    pub sampler: ChargeSampler,
    pub success_mode: SuccessMode,
    /// Outer axis first; the grid is their Cartesian product.
    pub sweeps: Vec<SweepAxis>,
    /// Analysis only when false.
    pub simulate: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "run".into(),
            params: SystemParams::default(),
            overrides: Overrides::default(),
            schemes: Scheme::ALL.to_vec(),
            stop: StopRule::Deliveries(100_000),
            seed: 1,
            replications: 10,
            warmup_fraction: 0.1,
            relay_energy_banking: false,
            max_queue_alarm: 100_000,
            sampler: ChargeSampler::PerSlot,
            success_mode: SuccessMode::Analytic,
            sweeps: Vec::new(),
            simulate: true,
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Every grid point as a parameter set with the axis values that produced it.
    pub fn grid(&self) -> Vec<(SystemParams, Vec<f64>)> {
        let mut points = vec![(self.params, Vec::new())];
        for axis in &self.sweeps {
            let mut next = Vec::with_capacity(points.len() * axis.values.len());
            for (p, coords) in &points {
                for &v in &axis.values {
                    let mut q = *p;
                    axis.param.apply(&mut q, v);
                    let mut c = coords.clone();
                    c.push(v);
                    next.push((q, c));
                }
            }
            points = next;
        }
        points
    }

    /// Short SHA-256 of the resolved configuration, output path excluded.
    pub fn hash(&self) -> String {
        let c = ExperimentConfig { out: None, ..self.clone() };
        let text = toml::to_string(&c).unwrap_or_else(|_| format!("{c:?}"));
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Raw file layout. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    schemes: Option<Vec<String>>,
    scheme: Option<String>,
    seed: Option<u64>,
    replications: Option<usize>,
    horizon: Option<u64>,
    target_deliveries: Option<u64>,
    warmup_fraction: Option<f64>,
    relay_energy_banking: Option<bool>,
    max_queue_alarm: Option<usize>,
    sampler: Option<ChargeSampler>,
    success_mode: Option<SuccessMode>,
    simulate: Option<bool>,
    out: Option<PathBuf>,

    p_t: Option<f64>,
    p_t_db: Option<f64>,
    eta: Option<f64>,
    sigma2: Option<f64>,
    sigma2_db: Option<f64>,
    alpha: Option<f64>,
    d_sp: Option<f64>,
    d_rp: Option<f64>,
    d_rs: Option<f64>,
    d_dr: Option<f64>,
    d_ds: Option<f64>,
    b_s: Option<f64>,
    b_r: Option<f64>,
    gamma_th: Option<f64>,
    gamma_th_db: Option<f64>,
    c_p: Option<f64>,

    bprime_s: Option<f64>,
    bprime_r: Option<f64>,
    p_suc_s: Option<f64>,
    p_suc_r: Option<f64>,
    p_suc_direct: Option<f64>,
    p_suc_af: Option<f64>,

    sweep_param: Option<String>,
    sweep_values: Option<Vec<f64>>,
    sweep2_param: Option<String>,
    sweep2_values: Option<Vec<f64>>,
}

fn pick(linear: Option<f64>, db: Option<f64>, key: &str) -> Result<Option<f64>, ConfigError> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(ConfigError::Invalid(format!("both `{key}` and `{key}_db` given"))),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(v)) => Ok(Some(db_to_linear(v))),
        (None, None) => Ok(None),
    }
}

fn axis(param: Option<String>, values: Option<Vec<f64>>, key: &str) -> Result<Option<SweepAxis>, ConfigError> {
    match (param, values) {
        (None, None) => Ok(None),
        (Some(p), Some(v)) => {
            if v.is_empty() {
                return Err(ConfigError::Invalid(format!("`{key}_values` is empty")));
            }
            Ok(Some(SweepAxis { param: SweepParam::parse(&p)?, values: v }))
        }
        _ => Err(ConfigError::Invalid(format!("`{key}_param` and `{key}_values` go together"))),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut c = ExperimentConfig::default();
    if let Some(n) = raw.name {
        c.name = n;
    }
    let scheme_names = match (raw.schemes, raw.scheme) {
        (Some(_), Some(_)) => return Err(ConfigError::Invalid("give `schemes` or `scheme`, not both".into())),
        (Some(v), None) => Some(v),
        (None, Some(s)) => Some(vec![s]),
        (None, None) => None,
    };
    if let Some(names) = scheme_names {
        c.schemes = names
            .iter()
            .map(|s| s.parse::<Scheme>().map_err(ConfigError::Invalid))
            .collect::<Result<_, _>>()?;
        if c.schemes.is_empty() {
            return Err(ConfigError::Invalid("`schemes` is empty".into()));
        }
    }
    c.stop = match (raw.horizon, raw.target_deliveries) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid("give `horizon` or `target_deliveries`, not both".into()))
        }
        (Some(h), None) => StopRule::Horizon(h),
        (None, Some(k)) => StopRule::Deliveries(k),
        (None, None) => c.stop,
    };
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src {
                $dst = v;
            }
        };
    }
    set!(c.seed, raw.seed);
    set!(c.replications, raw.replications);
    set!(c.warmup_fraction, raw.warmup_fraction);
    set!(c.relay_energy_banking, raw.relay_energy_banking);
    set!(c.max_queue_alarm, raw.max_queue_alarm);
    set!(c.sampler, raw.sampler);
    set!(c.success_mode, raw.success_mode);
    set!(c.simulate, raw.simulate);
    c.out = raw.out;

    let p = &mut c.params;
    set!(p.p_t, pick(raw.p_t, raw.p_t_db, "p_t")?);
    set!(p.eta, raw.eta);
    set!(p.sigma2, pick(raw.sigma2, raw.sigma2_db, "sigma2")?);
    set!(p.alpha, raw.alpha);
    set!(p.d_sp, raw.d_sp);
    set!(p.d_rp, raw.d_rp);
    set!(p.d_rs, raw.d_rs);
    set!(p.d_dr, raw.d_dr);
    set!(p.d_ds, raw.d_ds);
    set!(p.b_s, raw.b_s);
    set!(p.b_r, raw.b_r);
    set!(p.gamma_th, pick(raw.gamma_th, raw.gamma_th_db, "gamma_th")?);
    set!(p.c_p, raw.c_p);

    c.overrides = Overrides {
        bprime_s: raw.bprime_s,
        bprime_r: raw.bprime_r,
        p_suc_s: raw.p_suc_s,
        p_suc_r: raw.p_suc_r,
        p_suc_direct: raw.p_suc_direct,
        p_suc_af: raw.p_suc_af,
    };

    if let Some(a) = axis(raw.sweep2_param, raw.sweep2_values, "sweep2")? {
        c.sweeps.push(a);
    }
    if let Some(a) = axis(raw.sweep_param, raw.sweep_values, "sweep")? {
        c.sweeps.push(a);
    }
    if c.replications < 2 && c.simulate {
        return Err(ConfigError::Invalid("`replications` must be at least 2".into()));
    }
    Ok(c)
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
