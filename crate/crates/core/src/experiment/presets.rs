//! Figure presets.
//!
//! Common ground: `sigma2 = 1`, `eta = 0.8`, `C_p = 0.01`, power station one
//! unit from both source and relay. Distances are stored explicitly in each
//! preset because the relay geometry is not the same reading everywhere:
//!
//! * `fig4`: `d_rs = 6`, `d_dr = 4`, `d_ds = 10`, `B_s = B_r = 1500`,
//!   `gamma_th = 16 dB`, sweep of `P_t`. Placing the destination 10 units
//!   past the relay instead (`d_dr = 10`) makes the DF relay queue unstable
//!   at every `P_t`, so the collinear `d_ds = 10` reading is used.
//! * `fig5`: as fig4 with `d_ds` in {10, 7.5, 6.5}; the relay stays 6 units
//!   from the source on the source-destination line (`d_dr = d_ds - 6`).
//! * `fig6`: `P_t = 0.5`, `B_r = 1000`, `B_s = ratio * B_r`, `gamma_th` in
//!   {16, 13, 10} dB. Charge times run into thousands of slots, so the
//!   shifted-Poisson sampler is used.
//! * `fig7`: `P_t = 0.5`, `B_s = B_r = 1500`, `gamma_th = 13 dB`, path-loss
//!   exponent sweep for `(d_ds, d_rs)` in {(10, 6), (7.5, 4.5)}, collinear.
//! * `fig8a`: error-free links (`p_suc = 1`), `B_s = 3000`, `B_r = 1500`,
//!   sweep of `P_t`. The DF relay is then a P/P/1 queue.
//! * `fig8b`: full capacitors (`B' = 0`, the `P_t -> inf` limit),
//!   `B_s = 3000`, `B_r = 1500`, sweep of `gamma_th`. The DF relay is then
//!   Geo/Geo/1.
//!
//! `fast` runs 1e5 deliveries per replication, full runs 1e6; fig6 and fig7
//! stop on a horizon of 2e8 (fast) or 2e9 (full) slots instead. Wall-clock
//! for ten replications on one core, fast / full: fig4 10 s / 90 s, fig5
//! 20 s / 3.5 min, fig6 11 s / 60 s, fig7 1 s / 10 s, fig8a and fig8b 2 s /
//! 20 s. The fig6 points with the smallest source capacitor need more
//! slots per delivery than the horizon holds and report few or no
//! deliveries.

use super::config::{ExperimentConfig, SweepAxis, SweepParam};
use crate::analysis::Scheme;
use crate::charging::ChargeSampler;
use crate::params::{db_to_linear, Overrides, SystemParams};
use crate::sim::StopRule;

pub const PRESET_NAMES: [&str; 6] = ["fig4", "fig5", "fig6", "fig7", "fig8a", "fig8b"];

pub const FIG4_P_T: [f64; 7] = [750.0, 1000.0, 1500.0, 2000.0, 3000.0, 4500.0, 6000.0];
pub const FIG5_D_DS: [f64; 3] = [10.0, 7.5, 6.5];
pub const FIG6_RATIO: [f64; 10] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0];
pub const FIG6_GAMMA_DB: [f64; 3] = [16.0, 13.0, 10.0];
pub const FIG7_D_DS: [f64; 2] = [10.0, 7.5];
pub const FIG7_ALPHA: [f64; 5] = [1.5, 1.75, 2.0, 2.25, 2.5];
pub const FIG8A_P_T: [f64; 6] = [750.0, 1500.0, 3000.0, 6000.0, 12000.0, 24000.0];
pub const FIG8B_GAMMA_DB: [f64; 5] = [16.0, 18.0, 20.0, 22.0, 24.0];

pub fn base_params() -> SystemParams {
    SystemParams::default()
}

fn base(name: &str, fast: bool) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        params: base_params(),
        stop: StopRule::Deliveries(if fast { 100_000 } else { 1_000_000 }),
        ..ExperimentConfig::default()
    }
}

/// fig6 and fig7 charge for hundreds to thousands of slots per attempt and
/// some points need millions of attempts per delivery, so they stop on a slot
/// horizon instead of a delivery count.
pub fn slow_charge_horizon(fast: bool) -> StopRule {
    StopRule::Horizon(if fast { 200_000_000 } else { 2_000_000_000 })
}

pub fn preset(name: &str, fast: bool) -> Option<ExperimentConfig> {
    let mut c = base(name, fast);
    match name {
        "fig4" => {
            c.sweeps = vec![SweepAxis { param: SweepParam::PT, values: FIG4_P_T.to_vec() }];
        }
        "fig5" => {
            c.sweeps = vec![
                SweepAxis { param: SweepParam::DDsCollinear, values: FIG5_D_DS.to_vec() },
                SweepAxis { param: SweepParam::PT, values: FIG4_P_T.to_vec() },
            ];
        }
        "fig6" => {
            c.stop = slow_charge_horizon(fast);
            c.params.p_t = 0.5;
            c.params.b_r = 1000.0;
            c.sampler = ChargeSampler::ShiftedPoisson;
            c.sweeps = vec![
                SweepAxis { param: SweepParam::GammaThDb, values: FIG6_GAMMA_DB.to_vec() },
                SweepAxis { param: SweepParam::BsBrRatio, values: FIG6_RATIO.to_vec() },
            ];
        }
        "fig7" => {
            c.stop = slow_charge_horizon(fast);
            c.params.p_t = 0.5;
            c.params.gamma_th = db_to_linear(13.0);
            c.sampler = ChargeSampler::ShiftedPoisson;
            c.sweeps = vec![
                SweepAxis { param: SweepParam::DDsScaled, values: FIG7_D_DS.to_vec() },
                SweepAxis { param: SweepParam::Alpha, values: FIG7_ALPHA.to_vec() },
            ];
        }
        "fig8a" => {
            c.params.b_s = 3000.0;
            c.params.b_r = 1500.0;
            c.params.gamma_th = 1e-9;
            c.overrides = Overrides {
                p_suc_s: Some(1.0),
                p_suc_r: Some(1.0),
                p_suc_direct: Some(1.0),
                p_suc_af: Some(1.0),
                ..Overrides::default()
            };
            c.schemes = vec![Scheme::Df, Scheme::Af];
            c.sweeps = vec![SweepAxis { param: SweepParam::PT, values: FIG8A_P_T.to_vec() }];
        }
        "fig8b" => {
            c.params.b_s = 3000.0;
            c.params.b_r = 1500.0;
            c.params.p_t = 1e12;
            c.overrides = Overrides {
                bprime_s: Some(0.0),
                bprime_r: Some(0.0),
                ..Overrides::default()
            };
            c.schemes = vec![Scheme::Df, Scheme::Af];
            c.sweeps = vec![SweepAxis { param: SweepParam::GammaThDb, values: FIG8B_GAMMA_DB.to_vec() }];
        }
        _ => return None,
    }
    Some(c)
}
