//! Experiment runner and CSV output.

pub mod config;
pub mod presets;
pub mod table1;

use std::io::Write;

use crate::analysis::{analyze, BoundKind, Scheme};
use crate::error::{ModelError, Result};
use crate::params::{DerivedParams, SystemParams};
use crate::sim::{self, AgeStats, SimConfig};
use crate::specfun::Tolerance;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, SweepAxis, SweepParam};
pub use presets::{preset, PRESET_NAMES};

/// One output line: one scheme at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment: String,
    pub point: usize,
    pub scheme: Scheme,
    pub params: SystemParams,
    pub derived: DerivedParams,
    pub rho: Option<f64>,
    pub paoi_analytic: Option<f64>,
    pub paoi_kind: BoundKind,
    pub aoi_analytic: Option<f64>,
    pub sim: Option<AgeStats>,
}

pub const CSV_COLUMNS: [&str; 39] = [
    "experiment",
    "point",
    "scheme",
    "p_t",
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
    "bprime_s",
    "bprime_r",
    "p_suc_s",
    "p_suc_r",
    "p_suc_direct",
    "p_suc_af",
    "b_star_r",
    "rho",
    "stable",
    "paoi_analytic",
    "paoi_kind",
    "aoi_analytic",
    "paoi_sim",
    "aoi_sim",
    "ci95_paoi",
    "ci95_aoi",
    "p_suc_first_sim",
    "p_suc_relay_sim",
    "mean_queue_len",
    "e_xs_w",
    "deliveries",
    "diverged",
];

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed.
pub fn fmt_g(x: f64) -> String {
    fmt_sig(x, 12)
}

pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { "-" } else { "+" };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

impl Row {
    pub fn fields(&self) -> Vec<String> {
        let p = &self.params;
        let d = &self.derived;
        let s = self.sim.as_ref();
        let stable = match self.scheme {
            Scheme::Df => self.paoi_analytic.is_some(),
            _ => true,
        };
        vec![
            self.experiment.clone(),
            self.point.to_string(),
            self.scheme.as_str().to_string(),
            fmt_g(p.p_t),
            fmt_g(p.eta),
            fmt_g(p.sigma2),
            fmt_g(p.alpha),
            fmt_g(p.d_sp),
            fmt_g(p.d_rp),
            fmt_g(p.d_rs),
            fmt_g(p.d_dr),
            fmt_g(p.d_ds),
            fmt_g(p.b_s),
            fmt_g(p.b_r),
            fmt_g(p.gamma_th),
            fmt_g(10.0 * p.gamma_th.log10()),
            fmt_g(p.c_p),
            fmt_g(d.bprime_s),
            fmt_g(d.bprime_r),
            fmt_g(d.p_suc_s),
            fmt_g(d.p_suc_r),
            fmt_g(d.p_suc_direct),
            fmt_g(d.p_suc_af),
            fmt_g(d.b_star_r),
            opt(self.rho),
            stable.to_string(),
            opt(self.paoi_analytic),
            self.paoi_kind.short().to_string(),
            opt(self.aoi_analytic),
            opt(s.map(|s| s.mean_paoi)),
            opt(s.map(|s| s.mean_aoi)),
            opt(s.map(|s| s.ci95_paoi)),
            opt(s.map(|s| s.ci95_aoi)),
            opt(s.map(|s| s.empirical_p_suc_first)),
            opt(s.and_then(|s| s.empirical_p_suc_relay)),
            opt(s.map(|s| s.mean_queue_len)),
            opt(s.and_then(|s| s.e_xs_w_estimate)),
            s.map(|s| s.deliveries.to_string()).unwrap_or_default(),
            s.map(|s| s.diverged.to_string()).unwrap_or_default(),
        ]
    }
}

/// Analyse (and optionally simulate) every scheme at every grid point.
/// `progress` is called after each row.
pub fn run_experiment(cfg: &ExperimentConfig, mut progress: impl FnMut(&Row)) -> Result<Vec<Row>> {
    let tol = Tolerance::default();
    let mut rows = Vec::new();
    for (point, (params, _)) in cfg.grid().into_iter().enumerate() {
        let derived = DerivedParams::from_params(&params)?.with_overrides(&cfg.overrides)?;
        for &scheme in &cfg.schemes {
            let an = analyze(scheme, &derived, tol)?;
            let sim = if cfg.simulate {
                let sc = SimConfig {
                    scheme,
                    params,
                    overrides: cfg.overrides,
                    stop: cfg.stop,
                    seed: cfg.seed.wrapping_add((point * Scheme::ALL.len() + scheme_index(scheme)) as u64),
                    warmup_fraction: cfg.warmup_fraction,
                    relay_energy_banking: cfg.relay_energy_banking,
                    max_queue_alarm: cfg.max_queue_alarm,
                    replications: cfg.replications,
                    sampler: cfg.sampler,
                    success_mode: cfg.success_mode,
                };
                Some(sim::run(&sc)?)
            } else {
                None
            };
            let row = Row {
                experiment: cfg.name.clone(),
                point,
                scheme,
                params,
                derived,
                rho: an.utilization,
                paoi_analytic: an.paoi,
                paoi_kind: an.paoi_kind,
                aoi_analytic: an.aoi,
                sim,
            };
            progress(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}

fn scheme_index(s: Scheme) -> usize {
    Scheme::ALL.iter().position(|x| *x == s).expect("listed")
}

/// `# seed=.. config_hash=.. version=..` line that opens every CSV file.
pub fn header_comment(cfg: &ExperimentConfig) -> String {
    format!(
        "# seed={} config_hash={} version={} experiment={}",
        cfg.seed,
        cfg.hash(),
        env!("CARGO_PKG_VERSION"),
        cfg.name
    )
}

pub fn write_csv<W: Write>(out: W, comment: &str, rows: &[Row]) -> std::result::Result<(), csv::Error> {
    write_table(out, comment, &CSV_COLUMNS, rows.iter().map(|r| r.fields()))
}

/// Comment line, header, then records.
pub fn write_table<W: Write>(
    mut out: W,
    comment: &str,
    header: &[&str],
    records: impl Iterator<Item = Vec<String>>,
) -> std::result::Result<(), csv::Error> {
    writeln!(out, "{comment}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in records {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

impl From<ConfigError> for ModelError {
    fn from(e: ConfigError) -> Self {
        ModelError::invalid("config", e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_g(2.0), "2");
        assert_eq!(fmt_g(0.1), "0.1");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g(123456.789), "123456.789");
        assert_eq!(fmt_g(1e-9), "1e-09");
        assert_eq!(fmt_g(1e12), "1e+12");
        assert_eq!(fmt_g(-2.5e-7), "-2.5e-07");
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(39.81071705534972), "39.8107170553");
    }

    #[test]
    fn analysis_only_rows() {
        let mut c = preset("fig4", true).unwrap();
        c.simulate = false;
        let rows = run_experiment(&c, |_| {}).unwrap();
        assert_eq!(rows.len(), 21);
        let df = rows.iter().find(|r| r.scheme == Scheme::Df).unwrap();
        let f = df.fields();
        assert_eq!(f.len(), CSV_COLUMNS.len());
        let idx = |name: &str| CSV_COLUMNS.iter().position(|c| *c == name).unwrap();
        assert_eq!(f[idx("aoi_analytic")], "");
        assert_eq!(f[idx("paoi_kind")], "bound");
        let mut buf = Vec::new();
        write_csv(&mut buf, &header_comment(&c), &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed=1 config_hash="));
        assert_eq!(text.lines().count(), 2 + rows.len());
    }
}
