//! Built-in invariant suite. Every statistical gate uses a fixed seed, so the
//! verdict does not depend on the run seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{self, CycleMoments, Scheme, Side, SpecialCaseSpec, WaitKind};
use crate::charging::{AfWaitDist, ChargeSampler, ChargeTimeDist};
use crate::gof::{chi_square_gof, tally};
use crate::params::{DerivedParams, SystemParams};
use crate::rng::stream_rng;
use crate::sim::{validate_against_analysis, SimConfig, StopRule};
use crate::specfun::{self, Tolerance};

/// K1 at twenty points, computed with 40-digit arithmetic.
pub const K1_REFERENCE: [(f64, f64); 20] = [
    (1e-06, 9.9999999999278432e+5),
    (0.0001, 9.9999995086864045e+3),
    (0.01, 9.9973894118296246e+1),
    (0.1, 9.8538447808706056),
    (0.25, 3.7470259744407116),
    (0.5, 1.6564411200033009),
    (0.75, 9.4958046696214023e-1),
    (1.0, 6.0190723019723457e-1),
    (1.5, 2.7738780045684382e-1),
    (1.9, 1.5966015303266763e-1),
    (2.0, 1.3986588181652243e-1),
    (2.1, 1.227464115335079e-1),
    (2.5, 7.3890816347747064e-2),
    (3.0, 4.0156431128194184e-2),
    (5.0, 4.0446134454521642e-3),
    (7.5, 2.6529739012528953e-4),
    (10.0, 1.8648773453825585e-5),
    (15.0, 1.0141729369762092e-7),
    (20.0, 5.8830579695570382e-10),
    (30.0, 2.1677320018915494e-14),
];

const SELFTEST_SEED: u64 = 0x5e1f_7e57;

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub items: Vec<Item>,
}

impl SelftestReport {
    pub fn pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    fn push(&mut self, name: &str, pass: bool, detail: String) {
        self.items.push(Item { name: name.into(), pass, detail });
    }
}

/// Worst relative error of `k1` against the reference table.
pub fn check_k1(k1: impl Fn(f64) -> f64) -> (bool, f64) {
    let worst = K1_REFERENCE
        .iter()
        .map(|&(x, want)| ((k1(x) - want) / want).abs())
        .fold(0.0, f64::max);
    (worst <= 1e-10, worst)
}

fn check_gamma_complement() -> (bool, f64) {
    let tol = Tolerance::default();
    let mut worst: f64 = 0.0;
    for k in [1u64, 2, 5, 20, 100, 1000] {
        for x in [0.01, 0.7, 3.0, 25.0, 150.0, 2000.0] {
            let q = specfun::regularized_gamma_q(k, x);
            let p = specfun::regularized_gamma_p(k, x, tol).unwrap_or(f64::NAN);
            worst = worst.max((q + p - 1.0).abs());
        }
    }
    (worst <= 1e-12, worst)
}

fn check_normalization() -> (bool, f64) {
    let mut worst: f64 = 0.0;
    for b in [0.5, 2.0, 20.0, 500.0] {
        let d = ChargeTimeDist::new(b).expect("valid");
        let m = (b.ceil() + 50.0 * (b + 1.0).sqrt()) as u64;
        let s: f64 = (1..=m).map(|i| d.pmf(i)).sum();
        worst = worst.max((s - 1.0).abs());
    }
    (worst <= 1e-10, worst)
}

fn check_samplers(draws: usize) -> (bool, f64) {
    let mut worst_p: f64 = 1.0;
    for (i, b) in [0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let d = ChargeTimeDist::new(b).expect("valid");
        let mut rng = stream_rng(SELFTEST_SEED, i as u64);
        let counts = tally((0..draws).map(|_| d.sample(&mut rng, ChargeSampler::PerSlot)));
        worst_p = worst_p.min(chi_square_gof(&counts, |v| d.pmf(v as u64)).p_value);
    }
    let af = AfWaitDist::new(1.0, 2.0).expect("valid");
    let mut rng = stream_rng(SELFTEST_SEED, 99);
    let counts = tally((0..draws).map(|_| af.sample(&mut rng, ChargeSampler::PerSlot)));
    worst_p = worst_p.min(chi_square_gof(&counts, |v| af.pmf(v as u64)).p_value);
    (worst_p > 1e-3, worst_p)
}

fn random_cycle(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (rng.random_range(0.0..6.0), rng.random_range(0.05..1.0))
}

fn check_kingman_dominance() -> (bool, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(SELFTEST_SEED);
    let mut violations = 0;
    for _ in 0..500 {
        let p_s: f64 = rng.random_range(0.01..0.99);
        let p_r: f64 = rng.random_range(p_s..1.0);
        let xs = CycleMoments::geometric(p_s).expect("valid");
        let xr = CycleMoments::geometric(p_r).expect("valid");
        if let (Ok(b), Ok(w)) = (
            analysis::kingman_waiting_upper(&xs, &xr),
            analysis::waiting_exact(WaitKind::GeoGeo, p_s, &xr),
        ) {
            if w > b * (1.0 + 1e-12) {
                violations += 1;
            }
        }
        let (br, pr) = random_cycle(&mut rng);
        let Ok(xr) = analysis::cycle_moments(1.0 + br, 1.0 + 3.0 * br + br * br, pr) else { continue };
        let p_s = rng.random_range(0.001..1.0) / xr.mean;
        let xs = CycleMoments::geometric(p_s).expect("valid");
        if let (Ok(b), Ok(w)) = (
            analysis::kingman_waiting_upper(&xs, &xr),
            analysis::waiting_exact(WaitKind::GeoG, p_s, &xr),
        ) {
            if w > b * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    (violations == 0, violations)
}

/// Every stable limiting-case row agrees with the general bound on random draws.
pub fn check_table_reduction(draws_per_row: usize, seed: u64) -> (bool, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for spec in SpecialCaseSpec::all() {
        let mut found = 0;
        let mut tries = 0;
        while found < draws_per_row && tries < 200 * draws_per_row {
            tries += 1;
            let (bs, ps) = random_cycle(&mut rng);
            let (br, pr) = random_cycle(&mut rng);
            let d = DerivedParams {
                bprime_s: bs,
                bprime_r: br,
                p_suc_s: ps,
                p_suc_r: pr,
                p_suc_af: 0.5,
                p_suc_direct: 0.5,
                b_star_r: 1.0,
            };
            let Some(tab) = analysis::table1_closed_form(&spec, &d) else { continue };
            let (xs, xr) = spec.cycles(&d).expect("valid draw");
            let general = match analysis::paoi_df_upper(&xs, &xr) {
                Ok(r) => r.value.expect("stable"),
                // rho = 1 rows (D/D/1 and the p = 1 edge of Geo/D/1) have no
                // finite general bound
                Err(_) => continue,
            };
            worst = worst.max(((tab - general) / general).abs());
            found += 1;
        }
    }
    (worst <= 1e-9, worst)
}

/// Rows with a D relay are always stable; rows with a D source and a slower
/// relay never are; the rest follow the utilization.
fn check_table_classification() -> bool {
    let d = DerivedParams {
        bprime_s: 1.0,
        bprime_r: 0.5,
        p_suc_s: 0.4,
        p_suc_r: 0.8,
        p_suc_af: 0.5,
        p_suc_direct: 0.5,
        b_star_r: 1.0,
    };
    SpecialCaseSpec::all().iter().all(|s| {
        let stable = s.is_stable(&d);
        match s.sides() {
            (_, Side::D) => stable,
            (Side::D, _) => !stable,
            _ => {
                let (xs, xr) = s.cycles(&d).expect("valid");
                stable == (xr.mean < xs.mean)
            }
        }
    })
}

fn check_simulation(deliveries: u64) -> (bool, String) {
    let mut fails = Vec::new();
    for scheme in Scheme::ALL {
        let params = SystemParams { p_t: 1500.0, ..SystemParams::default() };
        let mut c = SimConfig::new(scheme, params, StopRule::Deliveries(deliveries));
        c.seed = SELFTEST_SEED;
        match validate_against_analysis(&c) {
            Ok(r) => {
                for ch in r.checks.iter().filter(|c| !c.pass) {
                    fails.push(format!("{}:{}", scheme.as_str(), ch.metric));
                }
            }
            Err(e) => fails.push(format!("{}: {e}", scheme.as_str())),
        }
    }
    (fails.is_empty(), fails.join(" "))
}

/// Run the suite. `fast` shrinks the sampler and simulation workloads.
pub fn run_selftest(fast: bool) -> SelftestReport {
    run_selftest_with(fast, |x| specfun::bessel_k1(x).unwrap_or(f64::NAN))
}

/// As [`run_selftest`] with an injectable K1, so a perturbed implementation
/// can be shown to fail the gate.
pub fn run_selftest_with(fast: bool, k1: impl Fn(f64) -> f64) -> SelftestReport {
    let mut r = SelftestReport::default();
    let (ok, worst) = check_k1(&k1);
    r.push("bessel_k1_reference", ok, format!("max rel err {worst:.3e} (gate 1e-10)"));
    let (a, b) = specfun::bessel_k1_branch_values_at_crossover();
    let gap = ((a - b) / b).abs();
    r.push("bessel_k1_crossover", gap <= 1e-10, format!("branch gap {gap:.3e}"));
    let (ok, worst) = check_gamma_complement();
    r.push("gamma_q_plus_p", ok, format!("max |Q+P-1| {worst:.3e} (gate 1e-12)"));
    let (ok, worst) = check_normalization();
    r.push("charge_pmf_mass", ok, format!("max |sum-1| {worst:.3e}"));
    let (ok, p) = check_samplers(if fast { 100_000 } else { 1_000_000 });
    r.push("sampler_chi_square", ok, format!("min p-value {p:.4}"));
    let (ok, v) = check_kingman_dominance();
    r.push("kingman_dominance", ok, format!("{v} violations"));
    let (ok, worst) = check_table_reduction(if fast { 50 } else { 200 }, SELFTEST_SEED);
    r.push("table_reduction", ok, format!("max rel gap {worst:.3e} (gate 1e-9)"));
    r.push("table_classification", check_table_classification(), String::new());
    let (ok, detail) = check_simulation(if fast { 20_000 } else { 100_000 });
    r.push("sim_vs_analysis", ok, detail);
    r
}
