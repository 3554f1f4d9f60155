use wpcn_aoi::analysis::{self, Scheme};
use wpcn_aoi::params::{Overrides, SystemParams};
use wpcn_aoi::sim::{run, validate_against_analysis, SimConfig, StopRule, SuccessMode};
use wpcn_aoi::specfun::Tolerance;

fn config(scheme: Scheme, p_t: f64, deliveries: u64) -> SimConfig {
    let params = SystemParams { p_t, ..SystemParams::default() };
    let mut c = SimConfig::new(scheme, params, StopRule::Deliveries(deliveries));
    c.seed = 11;
    c
}

#[test]
fn fig4_points_match_analysis() {
    for scheme in Scheme::ALL {
        for p_t in [750.0, 3000.0] {
            let r = validate_against_analysis(&config(scheme, p_t, 40_000)).unwrap();
            for c in &r.checks {
                println!("{scheme:?} P_t={p_t}: {c}");
            }
            assert!(r.all_pass(), "{scheme:?} at P_t={p_t}");
        }
    }
}

#[test]
fn direct_example_point() {
    // B'_s = 2 and p = 0.5: mean peak 6, mean age 16/3
    let o = Overrides { bprime_s: Some(2.0), p_suc_direct: Some(0.5), ..Overrides::default() };
    let mut c = config(Scheme::Direct, 1500.0, 100_000);
    c.overrides = o;
    let s = run(&c).unwrap();
    assert!((s.mean_paoi - 6.0).abs() < 3.0 * s.se_paoi(), "{}", s.mean_paoi);
    assert!((s.mean_aoi - 16.0 / 3.0).abs() < 3.0 * s.se_aoi(), "{}", s.mean_aoi);
}

#[test]
fn physical_mode_agrees_with_bernoulli_mode() {
    // AF at a point where the success probability is moderate
    let mut params = SystemParams::default();
    params.gamma_th = 10f64.powf(1.0);
    for scheme in Scheme::ALL {
        let mut c = SimConfig::new(scheme, params, StopRule::Deliveries(30_000));
        c.success_mode = SuccessMode::Physical;
        let r = validate_against_analysis(&c).unwrap();
        let p = r.check("p_suc_first").unwrap();
        assert!(p.pass, "{scheme:?}: {p}");
        if let Some(pr) = r.check("p_suc_relay") {
            assert!(pr.pass, "{pr}");
        }
    }
}

#[test]
fn one_hop_age_relation_from_own_samples() {
    // mean age equals (E[X^2]/E[X] + 1)/2 with the simulator's own cycles
    for scheme in [Scheme::Direct, Scheme::Af] {
        let s = run(&config(scheme, 1000.0, 200_000)).unwrap();
        for r in &s.replicates {
            let x = &r.x_first;
            let pred = 0.5 * (x.second() / x.mean() + 1.0);
            assert!(((r.mean_aoi - pred) / pred).abs() < 0.005);
            assert!(((r.mean_paoi - x.mean()) / x.mean()).abs() < 1e-12);
        }
    }
}

#[test]
fn df_hybrid_age_matches_simulation() {
    let c = config(Scheme::Df, 1500.0, 100_000);
    let d = c.derived().unwrap();
    let xs = analysis::source_cycle(&d).unwrap();
    let xr = analysis::relay_cycle(&d).unwrap();
    let s = run(&c).unwrap();
    let h = analysis::aoi_df_hybrid(&xs, &xr, s.e_xs_w_estimate.unwrap());
    assert!(((h - s.mean_aoi) / s.mean_aoi).abs() < 0.01, "{h} vs {}", s.mean_aoi);
    let _ = Tolerance::default();
}
