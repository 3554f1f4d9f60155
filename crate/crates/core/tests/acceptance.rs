//! One PASS/FAIL line per acceptance criterion. Run with `--nocapture` to see
//! the report; the test asserts on every criterion except those listed in
//! `KNOWN_RED`, which print their verdict and analysis instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wpcn_aoi::analysis::{self, CycleMoments, Scheme, Side, SpecialCaseSpec, WaitKind};
use wpcn_aoi::charging::{AfWaitDist, ChargeSampler, ChargeTimeDist};
use wpcn_aoi::experiment::{preset, run_experiment, Row};
use wpcn_aoi::gof::{chi_square_gof, tally};
use wpcn_aoi::params::{DerivedParams, Overrides, SystemParams};
use wpcn_aoi::rng::stream_rng;
use wpcn_aoi::selftest::K1_REFERENCE;
use wpcn_aoi::sim::queue::simulate_geo_geo;
use wpcn_aoi::sim::{self, AgeStats, SimConfig, StopRule};
use wpcn_aoi::specfun::{self, Tolerance};

/// The printed Geo/Geo/1 waiting time describes a different slot convention
/// than the simulated queue; see `criterion_6`.
const KNOWN_RED: [usize; 1] = [6];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn within_se(sim: f64, want: f64, se: f64, k: f64) -> bool {
    (sim - want).abs() <= k * se
}

fn draw_derived(rng: &mut ChaCha8Rng) -> DerivedParams {
    DerivedParams {
        bprime_s: rng.random_range(0.0..6.0),
        bprime_r: rng.random_range(0.0..6.0),
        p_suc_s: rng.random_range(0.05..1.0),
        p_suc_r: rng.random_range(0.05..1.0),
        p_suc_af: 0.5,
        p_suc_direct: 0.5,
        b_star_r: 1.0,
    }
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    let mut ok = true;
    for spec in SpecialCaseSpec::all() {
        let (src, relay) = spec.sides();
        let never = src == Side::D && relay != Side::D;
        let always = relay == Side::D;
        let mut found = 0;
        let mut tries = 0;
        while tries < 100_000 && found < 200 {
            tries += 1;
            let d = draw_derived(&mut rng);
            let (xs, xr) = spec.cycles(&d).unwrap();
            let stable = spec.is_stable(&d);
            let class_ok = if never {
                !stable
            } else if always {
                stable
            } else {
                stable == (xr.mean < xs.mean)
            };
            if !class_ok {
                ok = false;
                notes.push(format!("{} misclassified", spec.queue_label()));
                break;
            }
            if never {
                found += 1;
                continue;
            }
            if !stable {
                continue;
            }
            let tabulated = analysis::table1_closed_form(&spec, &d).unwrap();
            // the general formula with zero variances at rho = 1 (D/D/1)
            let general = if (src, relay) == (Side::D, Side::D) {
                xs.mean + xr.mean
            } else {
                analysis::paoi_df_upper(&xs, &xr).unwrap().value.unwrap()
            };
            worst = worst.max(rel(tabulated, general));
            let dispatched = analysis::special_case(&spec, &d).value.unwrap();
            if dispatched > general * (1.0 + 1e-12) {
                ok = false;
                notes.push(format!("{} exact form above bound", spec.queue_label()));
            }
            found += 1;
        }
        if !never && found < 200 {
            ok = false;
            notes.push(format!("{}: only {found} stable draws", spec.queue_label()));
        }
    }
    let pass = ok && worst <= 1e-9;
    verdict(
        pass,
        format!(
            "16 rows x 200 draws, max rel gap tabulated vs general {worst:.2e} (tol 1e-9); \
             3 never-stable and 4 always-stable rows as tabulated{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join(", ")) }
        ),
    )
}

fn override_config(scheme: Scheme, o: Overrides, deliveries: u64, seed: u64) -> SimConfig {
    let mut c = SimConfig::new(scheme, SystemParams::default(), StopRule::Deliveries(deliveries));
    c.overrides = o;
    c.seed = seed;
    c
}

fn criterion_2() -> Verdict {
    let o = Overrides {
        bprime_s: Some(0.0),
        bprime_r: Some(0.0),
        p_suc_s: Some(1.0),
        p_suc_r: Some(1.0),
        ..Overrides::default()
    };
    let s = sim::run(&override_config(Scheme::Df, o, 100_000, 2)).unwrap();
    let pass = (s.mean_paoi - 2.0).abs() <= 1e-3;
    verdict(pass, format!("DF D/D/1 mean PAoI {:.6} (want 2.000 +- 0.001)", s.mean_paoi))
}

fn criterion_3() -> Verdict {
    let o = Overrides { bprime_s: Some(0.0), bprime_r: Some(0.0), p_suc_af: Some(0.25), ..Overrides::default() };
    let s = sim::run(&override_config(Scheme::Af, o, 100_000, 3)).unwrap();
    let pass = within_se(s.mean_paoi, 4.0, s.se_paoi(), 3.0);
    verdict(pass, format!("AF mean PAoI {:.4} +- {:.4} SE (want 4)", s.mean_paoi, s.se_paoi()))
}

fn fig4_rows(schemes: Vec<Scheme>, stop: StopRule, seed: u64) -> Vec<Row> {
    let mut c = preset("fig4", true).unwrap();
    c.schemes = schemes;
    c.stop = stop;
    c.seed = seed;
    run_experiment(&c, |_| {}).unwrap()
}

fn criterion_4(rows: &[Row]) -> Verdict {
    let mut worst_z: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for r in rows {
        let s = r.sim.as_ref().unwrap();
        let (pa, aa) = (r.paoi_analytic.unwrap(), r.aoi_analytic.unwrap());
        worst_z = worst_z.max((s.mean_paoi - pa).abs() / s.se_paoi());
        worst_z = worst_z.max((s.mean_aoi - aa).abs() / s.se_aoi());
        worst_rel = worst_rel.max(rel(s.mean_paoi, pa)).max(rel(s.mean_aoi, aa));
    }
    verdict(
        worst_z <= 3.0 && worst_rel <= 0.01,
        format!(
            "direct and AF over {} fig4 points, 10 x 1e6 slots: max |z| {worst_z:.2} (tol 3), max rel {:.3}% (tol 1%)",
            rows.len() / 2,
            100.0 * worst_rel
        ),
    )
}

fn criterion_5(rows: &[Row]) -> Verdict {
    let mut ok = true;
    let mut min_margin = f64::INFINITY;
    for r in rows {
        let s = r.sim.as_ref().unwrap();
        let bound = r.paoi_analytic.unwrap();
        let margin = (bound + 3.0 * s.se_paoi() - s.mean_paoi) / s.se_paoi();
        min_margin = min_margin.min(margin);
        ok &= margin >= 0.0;
    }
    // finiteness of the bound tracks the stability condition on a grid that
    // crosses it
    let tol = Tolerance::default();
    let (mut finite, mut infinite, mut mismatch) = (0, 0, 0);
    for p_t in [100.0, 300.0, 750.0, 1500.0, 3000.0, 6000.0, 20000.0] {
        for ratio in [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0] {
            for g_db in [4.0, 10.0, 16.0, 20.0] {
                let p = SystemParams {
                    p_t,
                    b_s: 1500.0 * ratio,
                    gamma_th: wpcn_aoi::params::db_to_linear(g_db),
                    ..SystemParams::default()
                };
                let Ok(d) = DerivedParams::from_params(&p) else { continue };
                let a = analysis::analyze(Scheme::Df, &d, tol).unwrap();
                let stable = a.first_hop.mean > a.relay_hop.unwrap().mean;
                match (a.paoi.is_some_and(f64::is_finite), stable) {
                    (true, true) => finite += 1,
                    (false, false) => infinite += 1,
                    _ => mismatch += 1,
                }
            }
        }
    }
    let pass = ok && mismatch == 0 && finite > 0 && infinite > 0;
    verdict(
        pass,
        format!(
            "DF over {} fig4 points: min (bound + 3SE - sim)/SE = {min_margin:.1}; \
             stability grid {finite} finite, {infinite} unstable, {mismatch} mismatched",
            rows.len()
        ),
    )
}

/// The queue oracle against the printed `p_s (1 - p_s) / (p_r (p_r - p_s))`.
///
/// With arrivals able to enter service one slot after arriving, the
/// simulated mean wait is `p_s (1 - p_r) / (p_r (p_r - p_s))`; the printed
/// numerator replaces `1 - p_r` by `1 - p_s`, which overstates the wait by
/// the factor `(1 - p_s)/(1 - p_r)`. The line reports both comparisons.
fn criterion_6() -> (Verdict, bool) {
    let mut printed_ok = true;
    let mut corrected_ok = true;
    let mut kingman_ok = true;
    let mut parts = Vec::new();
    for (i, (p_s, p_r)) in [(0.2, 0.5), (0.3, 0.9), (0.1, 0.4)].into_iter().enumerate() {
        let sim = simulate_geo_geo(p_s, p_r, 10_000_000, 600 + i as u64);
        let xs = CycleMoments::geometric(p_s).unwrap();
        let xr = CycleMoments::geometric(p_r).unwrap();
        let printed = analysis::waiting_exact_as_printed(WaitKind::GeoGeo, p_s, &xr).unwrap();
        let corrected = analysis::waiting_exact(WaitKind::GeoGeo, p_s, &xr).unwrap();
        let kingman = analysis::kingman_waiting_upper(&xs, &xr).unwrap();
        printed_ok &= rel(sim.mean_wait, printed) <= 0.01;
        corrected_ok &= rel(sim.mean_wait, corrected) <= 0.01 && within_se(sim.mean_wait, corrected, sim.se_wait, 3.0);
        kingman_ok &= kingman > printed && kingman > corrected && kingman > sim.mean_wait;
        parts.push(format!(
            "({p_s},{p_r}) sim {:.4}+-{:.4} printed {printed:.4} corrected {corrected:.4} kingman {kingman:.4}",
            sim.mean_wait, sim.se_wait
        ));
    }
    let detail = format!(
        "{}; printed form within 1%: {printed_ok}; corrected form within 1% and 3SE: {corrected_ok}; \
         Kingman exceeds all: {kingman_ok}",
        parts.join("; ")
    );
    (verdict(printed_ok && kingman_ok, detail), corrected_ok && kingman_ok)
}

fn criterion_7() -> Verdict {
    let n = 1_000_000;
    let mut worst: f64 = 1.0;
    let mut parts = Vec::new();
    for (i, b) in [0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let d = ChargeTimeDist::new(b).unwrap();
        for (j, sampler) in [ChargeSampler::PerSlot, ChargeSampler::ShiftedPoisson].into_iter().enumerate() {
            let mut rng = stream_rng(700, (10 * i + j) as u64);
            let counts = tally((0..n).map(|_| d.sample(&mut rng, sampler)));
            let g = chi_square_gof(&counts, |v| d.pmf(v as u64));
            worst = worst.min(g.p_value);
            parts.push(format!("T_s B'={b} {sampler:?} p={:.3}", g.p_value));
        }
    }
    for (i, (bs, br)) in [(1.0, 2.0), (0.5, 5.0), (3.0, 3.0)].into_iter().enumerate() {
        let af = AfWaitDist::new(bs, br).unwrap();
        let mut rng = stream_rng(701, i as u64);
        let counts = tally((0..n).map(|_| af.sample(&mut rng, ChargeSampler::PerSlot)));
        let g = chi_square_gof(&counts, |v| af.pmf(v as u64));
        worst = worst.min(g.p_value);
        parts.push(format!("T_AF ({bs},{br}) p={:.3}", g.p_value));
    }
    verdict(worst > 1e-3, format!("1e6 draws each, min p {worst:.4} (tol > 0.001): {}", parts.join(", ")))
}

fn criterion_8() -> Verdict {
    let tol = Tolerance::default();
    let n = 1_000_000;
    let mut worst_series: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    let mut short_z: f64 = 0.0;
    let mc = |draws: &mut dyn FnMut() -> u64| {
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let t = draws() as f64;
            s1 += t;
            s2 += t * t;
            s4 += t * t * t * t;
        }
        let nf = n as f64;
        let (m1, m2) = (s1 / nf, s2 / nf);
        let se1 = ((m2 - m1 * m1) / nf).sqrt();
        let se2 = ((s4 / nf - m2 * m2) / nf).sqrt();
        (m1, se1, m2, se2)
    };
    for (i, b) in [0.5, 1.0, 2.0, 5.0, 20.0].into_iter().enumerate() {
        let d = ChargeTimeDist::new(b).unwrap();
        let top = (b + 40.0 * (b + 1.0).sqrt() + 40.0) as u64;
        let s1: f64 = (1..=top).map(|k| k as f64 * d.pmf(k)).sum();
        let s2: f64 = (1..=top).map(|k| (k * k) as f64 * d.pmf(k)).sum();
        worst_series = worst_series.max(rel(d.mean(), s1)).max(rel(d.second_moment(), s2));
        let mut rng = stream_rng(800, i as u64);
        let (m1, se1, m2, se2) = mc(&mut || d.sample(&mut rng, ChargeSampler::PerSlot));
        worst_z = worst_z.max((m1 - d.mean()).abs() / se1).max((m2 - d.second_moment()).abs() / se2);
    }
    for (i, (bs, br)) in [(1.0, 2.0), (0.5, 5.0), (4.0, 4.0)].into_iter().enumerate() {
        let af = AfWaitDist::new(bs, br).unwrap();
        let (m, s) = af.moments(tol).unwrap();
        let top = (bs.max(br) + 40.0 * (bs.max(br) + 1.0).sqrt() + 40.0) as u64;
        let s1: f64 = (1..=top).map(|k| k as f64 * af.pmf(k)).sum();
        let s2: f64 = (1..=top).map(|k| (k * k) as f64 * af.pmf(k)).sum();
        worst_series = worst_series.max(rel(m, s1)).max(rel(s, s2));
        let mut rng = stream_rng(801, i as u64);
        let (m1, se1, m2, se2) = mc(&mut || af.sample(&mut rng, ChargeSampler::PerSlot));
        worst_z = worst_z.max((m1 - m).abs() / se1).max((m2 - s).abs() / se2);
        short_z = short_z.max((m2 - af.second_moment_short_form(tol).unwrap()).abs() / se2);
    }
    verdict(
        worst_series <= 1e-10 && worst_z <= 3.0,
        format!(
            "T_s and T_AF moments: max rel gap to direct pmf sums {worst_series:.2e} (tol 1e-10), \
             max Monte Carlo |z| {worst_z:.2} (tol 3); the short second-moment form sits {short_z:.0} SE away"
        ),
    )
}

fn criterion_9() -> Verdict {
    let tol = Tolerance::default();
    let mut worst_q: f64 = 0.0;
    for k in [1u64, 2, 3, 7, 20, 50, 150, 400, 1000, 2500] {
        for x in [1e-3, 0.1, 0.9, 2.5, 6.0, 19.0, 48.0, 140.0, 410.0, 990.0, 2400.0] {
            let q = specfun::regularized_gamma_q(k, x);
            let p = specfun::regularized_gamma_p(k, x, tol).unwrap();
            worst_q = worst_q.max((q - (1.0 - p)).abs());
        }
    }
    let worst_k = K1_REFERENCE
        .iter()
        .map(|&(x, want)| rel(specfun::bessel_k1(x).unwrap(), want))
        .fold(0.0, f64::max);
    verdict(
        worst_q <= 1e-12 && worst_k <= 1e-10,
        format!("max |Q - (1 - P)| {worst_q:.2e} (tol 1e-12); K1 max rel err {worst_k:.2e} over 20 points (tol 1e-10)"),
    )
}

fn se(s: &AgeStats) -> f64 {
    s.se_paoi()
}

/// Non-increasing up to `k` combined standard errors.
fn nonincreasing(v: &[(f64, f64)], k: f64) -> bool {
    v.windows(2).all(|w| w[1].0 <= w[0].0 + k * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt())
}

fn unimodal_interior(v: &[f64]) -> bool {
    let i = v.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    i > 0 && i + 1 < v.len() && v[..=i].windows(2).all(|w| w[1] <= w[0]) && v[i..].windows(2).all(|w| w[1] >= w[0])
}

fn criterion_10(one_hop: &[Row], df: &[Row]) -> Verdict {
    let tol = Tolerance::default();
    let mut parts = Vec::new();

    // (a) fig4 monotone in P_t, analytic and simulated
    let mut a_ok = true;
    for scheme in Scheme::ALL {
        let rows: Vec<&Row> = one_hop.iter().chain(df).filter(|r| r.scheme == scheme).collect();
        let analytic: Vec<(f64, f64)> = rows.iter().map(|r| (r.paoi_analytic.unwrap(), 0.0)).collect();
        let simulated: Vec<(f64, f64)> = rows.iter().map(|r| r.sim.as_ref().map(|s| (s.mean_paoi, se(s))).unwrap()).collect();
        a_ok &= nonincreasing(&analytic, 0.0) && nonincreasing(&simulated, 3.0);
    }
    parts.push(format!("(a) fig4 non-increasing in P_t: {a_ok}"));

    // (b) fig5 ranking on simulated PAoI (the DF analytic value is a bound)
    let mut c = preset("fig5", true).unwrap();
    c.stop = StopRule::Deliveries(30_000);
    c.seed = 1000;
    c.sweeps[0].values = vec![10.0, 6.5];
    c.sweeps[1].values = vec![750.0, 1500.0, 6000.0];
    let rows = run_experiment(&c, |_| {}).unwrap();
    let mut b_ok = true;
    for chunk in rows.chunks(3) {
        let by = |s: Scheme| chunk.iter().find(|r| r.scheme == s).unwrap().sim.clone().unwrap();
        let (direct, df, af) = (by(Scheme::Direct), by(Scheme::Df), by(Scheme::Af));
        let sep = |a: &AgeStats, b: &AgeStats| a.mean_paoi + 3.0 * se(a) < b.mean_paoi - 3.0 * se(b);
        let ok = if chunk[0].params.d_ds == 6.5 {
            sep(&direct, &af) && sep(&direct, &df)
        } else {
            sep(&df, &af) && sep(&df, &direct)
        };
        b_ok &= ok;
    }
    parts.push(format!("(b) fig5 direct best at d_ds=6.5, DF best at d_ds=10: {b_ok}"));

    // (c) fig6 interior optimum of the capacitor ratio
    let mut c6 = preset("fig6", true).unwrap();
    c6.simulate = false;
    let rows = run_experiment(&c6, |_| {}).unwrap();
    let n_ratio = c6.sweeps[1].values.len();
    let mut c_ok = true;
    for g in 0..c6.sweeps[0].values.len() {
        for scheme in Scheme::ALL {
            let v: Vec<f64> = rows
                .iter()
                .filter(|r| r.scheme == scheme && r.point / n_ratio == g)
                // an unstable relay queue has unbounded age
                .map(|r| r.paoi_analytic.unwrap_or(f64::INFINITY))
                .collect();
            c_ok &= unimodal_interior(&v);
        }
    }
    // simulated DF curve at 13 dB, where its optimum sits inside the grid
    let mut c6s = preset("fig6", true).unwrap();
    c6s.schemes = vec![Scheme::Df];
    c6s.sweeps.remove(0);
    c6s.params.gamma_th = wpcn_aoi::params::db_to_linear(13.0);
    c6s.stop = StopRule::Horizon(100_000_000);
    c6s.seed = 1006;
    let sim_rows = run_experiment(&c6s, |_| {}).unwrap();
    let sims: Vec<(f64, f64)> = sim_rows.iter().map(|r| r.sim.as_ref().map(|s| (s.mean_paoi, se(s))).unwrap()).collect();
    let imin = sims.iter().enumerate().min_by(|a, b| a.1 .0.total_cmp(&b.1 .0)).unwrap().0;
    let (m, s) = sims[imin];
    let clear = |j: usize| sims[j].0 - 3.0 * sims[j].1 > m + 3.0 * s;
    let sim_ok = imin > 0 && imin + 1 < sims.len() && clear(0) && clear(sims.len() - 1);
    c_ok &= sim_ok;
    parts.push(format!(
        "(c) fig6 unimodal with interior minimum (9 analytic curves, DF simulated at 13 dB, optimum ratio {}): {c_ok}",
        c6s.sweeps[0].values[imin]
    ));

    // (d) fig8 large-P_t limits
    let mut d_ok = true;
    let mut worst_limit: f64 = 0.0;
    let base = preset("fig8b", true).unwrap();
    let geo_geo = SpecialCaseSpec::all().into_iter().find(|s| s.queue_label() == "Geo/Geo/1").unwrap();
    for (p, _) in base.grid() {
        let d = DerivedParams::from_params(&p).unwrap();
        let Some(tab) = analysis::table1_closed_form(&geo_geo, &d) else { continue };
        let df = analysis::analyze(Scheme::Df, &d, tol).unwrap().paoi.unwrap();
        let af = analysis::analyze(Scheme::Af, &d, tol).unwrap().paoi.unwrap();
        worst_limit = worst_limit.max(rel(df, tab)).max(rel(af, 1.0 / d.p_suc_af));
    }
    d_ok &= worst_limit <= 1e-6;
    let mut c8 = base.clone();
    c8.stop = StopRule::Deliveries(100_000);
    c8.seed = 1008;
    let rows = run_experiment(&c8, |_| {}).unwrap();
    let mut worst_z: f64 = 0.0;
    let mut checked = 0;
    for r in &rows {
        let s = r.sim.as_ref().unwrap();
        let want = match r.scheme {
            Scheme::Af => 1.0 / r.derived.p_suc_af,
            _ => {
                if r.rho.unwrap() >= 0.9 {
                    continue;
                }
                analysis::special_case(&geo_geo, &r.derived).value.unwrap()
            }
        };
        worst_z = worst_z.max((s.mean_paoi - want).abs() / se(s));
        checked += 1;
    }
    d_ok &= worst_z <= 3.0;
    parts.push(format!(
        "(d) fig8 at P_t=1e12 DF within {worst_limit:.1e} of the Geo/Geo/1 form and AF of 1/p_af; \
         {checked} simulated full-capacitor points vs exact values max |z| {worst_z:.2}: {d_ok}"
    ));

    verdict(a_ok && b_ok && c_ok && d_ok, parts.join("; "))
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, Verdict)> = Vec::new();
    let mut report = |n: usize, v: Verdict| {
        println!("criterion {n:>2}: {} | {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, v));
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    let one_hop = fig4_rows(vec![Scheme::Direct, Scheme::Af], StopRule::Horizon(1_000_000), 404);
    report(4, criterion_4(&one_hop));
    let df = fig4_rows(vec![Scheme::Df], StopRule::Deliveries(100_000), 505);
    report(5, criterion_5(&df));
    let (v6, corrected_ok) = criterion_6();
    report(6, v6);
    report(7, criterion_7());
    report(8, criterion_8());
    report(9, criterion_9());
    report(10, criterion_10(&one_hop, &df));

    assert!(corrected_ok, "queue oracle disagrees with the corrected waiting time");
    let failed: Vec<usize> = results
        .iter()
        .filter(|(n, v)| !v.pass && !KNOWN_RED.contains(n))
        .map(|(n, _)| *n)
        .collect();
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
