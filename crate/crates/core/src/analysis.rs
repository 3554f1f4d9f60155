//! Closed-form age metrics.
//!
//! A "cycle" is the number of slots between consecutive successful
//! receptions on one hop: a geometric number of charge times.

use serde::{Deserialize, Serialize};

use crate::charging::{AfWaitDist, ChargeTimeDist};
use crate::error::{ModelError, Result};
use crate::params::DerivedParams;
use crate::specfun::Tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Direct,
    Df,
    Af,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Direct, Scheme::Df, Scheme::Af];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Direct => "direct",
            Scheme::Df => "df",
            Scheme::Af => "af",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(Scheme::Direct),
            "df" => Ok(Scheme::Df),
            "af" => Ok(Scheme::Af),
            other => Err(format!("unknown scheme `{other}` (expected direct, df or af)")),
        }
    }
}

/// First and second moments of a cycle length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleMoments {
    pub mean: f64,
    pub second: f64,
}

impl CycleMoments {
    pub fn new(mean: f64, second: f64) -> Result<Self> {
        if !(mean >= 1.0) || !mean.is_finite() {
            return Err(ModelError::invalid("mean", format!("cycle mean must be finite and >= 1, got {mean}")));
        }
        if !(second >= mean * mean * (1.0 - 1e-12)) {
            return Err(ModelError::invalid(
                "second",
                format!("second moment {second} below squared mean {}", mean * mean),
            ));
        }
        Ok(Self { mean, second })
    }

    pub fn deterministic(c: f64) -> Self {
        Self { mean: c, second: c * c }
    }

    /// Geometric number of one-slot attempts with success probability `p`.
    pub fn geometric(p: f64) -> Result<Self> {
        cycle_moments(1.0, 1.0, p)
    }

    pub fn variance(&self) -> f64 {
        (self.second - self.mean * self.mean).max(0.0)
    }
}

/// Moments of a sum of `N ~ Geometric(p)` i.i.d. charge times.
pub fn cycle_moments(t_mean: f64, t_second: f64, p_suc: f64) -> Result<CycleMoments> {
    if p_suc == 0.0 {
        return Err(ModelError::DivideByZeroProb);
    }
    if !(p_suc > 0.0 && p_suc <= 1.0) {
        return Err(ModelError::invalid("p_suc", format!("must lie in (0, 1], got {p_suc}")));
    }
    if !(t_second >= t_mean * t_mean * (1.0 - 1e-12)) {
        return Err(ModelError::invalid("t_second", "second moment below squared mean"));
    }
    let mean = t_mean / p_suc;
    let second = t_second / p_suc + 2.0 * t_mean * t_mean * (1.0 - p_suc) / (p_suc * p_suc);
    CycleMoments::new(mean, second)
}

fn charge_cycle(bprime: f64, p_suc: f64) -> Result<CycleMoments> {
    let (m, s) = ChargeTimeDist::new(bprime)?.moments();
    cycle_moments(m, s, p_suc)
}

/// Source to relay.
pub fn source_cycle(d: &DerivedParams) -> Result<CycleMoments> {
    charge_cycle(d.bprime_s, d.p_suc_s)
}

/// Relay to destination.
pub fn relay_cycle(d: &DerivedParams) -> Result<CycleMoments> {
    charge_cycle(d.bprime_r, d.p_suc_r)
}

/// Source to destination without the relay.
pub fn direct_cycle(d: &DerivedParams) -> Result<CycleMoments> {
    charge_cycle(d.bprime_s, d.p_suc_direct)
}

pub fn af_cycle(d: &DerivedParams, tol: Tolerance) -> Result<CycleMoments> {
    let (m, s) = AfWaitDist::new(d.bprime_s, d.bprime_r)?.moments(tol)?;
    cycle_moments(m, s, d.p_suc_af)
}

/// Mean peak age on a single hop: the mean cycle.
pub fn paoi_onehop(x: &CycleMoments) -> f64 {
    x.mean
}

/// Mean age on a single hop in slots: `(E[X^2]/E[X] + 1) / 2`.
pub fn aoi_onehop(x: &CycleMoments) -> f64 {
    0.5 * (x.second / x.mean + 1.0)
}

fn utilization(xs: &CycleMoments, xr: &CycleMoments) -> f64 {
    xr.mean / xs.mean
}

/// Kingman's bound on the mean relay waiting time.
pub fn kingman_waiting_upper(xs: &CycleMoments, xr: &CycleMoments) -> Result<f64> {
    if !(xr.mean < xs.mean) {
        return Err(ModelError::UnstableQueue { rho: utilization(xs, xr) });
    }
    Ok((xs.variance() + xr.variance()) / (2.0 * (xs.mean - xr.mean)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    KingmanUpperBound,
}

impl BoundKind {
    pub fn short(self) -> &'static str {
        match self {
            BoundKind::Exact => "exact",
            BoundKind::KingmanUpperBound => "bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaoiResult {
    /// `None` marks an unstable queue.
    pub value: Option<f64>,
    pub queue_label: String,
    pub utilization: f64,
    pub bound_kind: BoundKind,
}

impl PaoiResult {
    pub fn is_stable(&self) -> bool {
        self.value.is_some()
    }
}

/// Upper bound on the decode-and-forward mean peak age.
pub fn paoi_df_upper(xs: &CycleMoments, xr: &CycleMoments) -> Result<PaoiResult> {
    let w = kingman_waiting_upper(xs, xr)?;
    Ok(PaoiResult {
        value: Some(xs.mean + xr.mean + w),
        queue_label: "G/G/1".into(),
        utilization: utilization(xs, xr),
        bound_kind: BoundKind::KingmanUpperBound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitKind {
    /// Geometric arrivals and geometric service.
    GeoGeo,
    /// Geometric arrivals and general service.
    GeoG,
}

fn check_geo_stability(kind: WaitKind, p_s: f64, xr: &CycleMoments) -> Result<()> {
    if !(p_s > 0.0 && p_s <= 1.0) {
        return Err(ModelError::invalid("p_s", format!("must lie in (0, 1], got {p_s}")));
    }
    let stable = match kind {
        WaitKind::GeoGeo => p_s < 1.0 / xr.mean,
        WaitKind::GeoG => xr.mean < 1.0 / p_s,
    };
    if stable {
        Ok(())
    } else {
        Err(ModelError::UnstableQueue { rho: xr.mean * p_s })
    }
}

/// Exact mean waiting time of the slotted relay queue with Bernoulli
/// arrivals. For `GeoGeo` the service law is read as geometric with
/// `p_r = 1 / xr.mean`.
///
/// In slotted time a packet arriving while the previous one is still in
/// service waits `E[X_r^2] - E[X_r]` residual slots in total, so
/// `E[W] = p_s (E[X_r^2] - E[X_r]) / (2 (1 - p_s E[X_r]))`; with geometric
/// service this is `p_s (1 - p_r) / (p_r (p_r - p_s))`.
pub fn waiting_exact(kind: WaitKind, p_s: f64, xr: &CycleMoments) -> Result<f64> {
    check_geo_stability(kind, p_s, xr)?;
    match kind {
        WaitKind::GeoGeo => {
            let p_r = 1.0 / xr.mean;
            Ok(p_s * (1.0 - p_r) / (p_r * (p_r - p_s)))
        }
        WaitKind::GeoG => Ok((xr.second - xr.mean) / (2.0 * (1.0 / p_s - xr.mean))),
    }
}

/// The commonly quoted forms `p_s (1 - p_s) / (p_r (p_r - p_s))` and
/// `E[X_r^2] / (2 (1/p_s - E[X_r]))`. They do not describe the slotted queue
/// simulated here; see the acceptance notes.
pub fn waiting_exact_as_printed(kind: WaitKind, p_s: f64, xr: &CycleMoments) -> Result<f64> {
    check_geo_stability(kind, p_s, xr)?;
    match kind {
        WaitKind::GeoGeo => {
            let p_r = 1.0 / xr.mean;
            Ok(p_s * (1.0 - p_s) / (p_r * (p_r - p_s)))
        }
        WaitKind::GeoG => Ok(xr.second / (2.0 * (1.0 / p_s - xr.mean))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Capacitor {
    Full,
    Charging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Success {
    Deterministic,
    Random,
}

/// One row of the sixteen decode-and-forward limiting cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpecialCaseSpec {
    pub source_capacitor: Capacitor,
    pub source_success: Success,
    pub relay_capacitor: Capacitor,
    pub relay_success: Success,
}

/// Queue letter for one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    D,
    Geo,
    P,
    G,
}

impl Side {
    fn of(c: Capacitor, s: Success) -> Side {
        match (c, s) {
            (Capacitor::Full, Success::Deterministic) => Side::D,
            (Capacitor::Full, Success::Random) => Side::Geo,
            (Capacitor::Charging, Success::Deterministic) => Side::P,
            (Capacitor::Charging, Success::Random) => Side::G,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Side::D => "D",
            Side::Geo => "Geo",
            Side::P => "P",
            Side::G => "G",
        }
    }
}

const SIDE_ORDER: [(Capacitor, Success); 4] = [
    (Capacitor::Full, Success::Deterministic),
    (Capacitor::Full, Success::Random),
    (Capacitor::Charging, Success::Deterministic),
    (Capacitor::Charging, Success::Random),
];

impl SpecialCaseSpec {
    /// All sixteen rows, source-major, in the order D, Geo, P, G.
    pub fn all() -> Vec<SpecialCaseSpec> {
        let mut out = Vec::with_capacity(16);
        for (sc, ss) in SIDE_ORDER {
            for (rc, rs) in SIDE_ORDER {
                out.push(SpecialCaseSpec {
                    source_capacitor: sc,
                    source_success: ss,
                    relay_capacitor: rc,
                    relay_success: rs,
                });
            }
        }
        out
    }

    pub fn sides(&self) -> (Side, Side) {
        (
            Side::of(self.source_capacitor, self.source_success),
            Side::of(self.relay_capacitor, self.relay_success),
        )
    }

    pub fn queue_label(&self) -> String {
        let (a, b) = self.sides();
        format!("{}/{}/1", a.as_str(), b.as_str())
    }

    /// Cycle moments of both hops with the row's limits applied.
    pub fn cycles(&self, d: &DerivedParams) -> Result<(CycleMoments, CycleMoments)> {
        let side = |c: Capacitor, s: Success, bprime: f64, p: f64| -> Result<CycleMoments> {
            let b = match c {
                Capacitor::Full => 0.0,
                Capacitor::Charging => bprime,
            };
            let p = match s {
                Success::Deterministic => 1.0,
                Success::Random => p,
            };
            charge_cycle(b, p)
        };
        Ok((
            side(self.source_capacitor, self.source_success, d.bprime_s, d.p_suc_s)?,
            side(self.relay_capacitor, self.relay_success, d.bprime_r, d.p_suc_r)?,
        ))
    }

    /// The row's stability condition, as tabulated.
    pub fn is_stable(&self, d: &DerivedParams) -> bool {
        let (a, b) = self.sides();
        let (p_s, p_r, bs, br) = (d.p_suc_s, d.p_suc_r, d.bprime_s, d.bprime_r);
        let Ok((xs, xr)) = self.cycles(d) else {
            return false;
        };
        use Side::*;
        match (a, b) {
            (D, D) => true,
            (D, Geo) => p_r > 1.0,
            (D, P) => br < 0.0,
            (D, G) => xr.mean < 1.0,
            (Geo, D) => true,
            (Geo, Geo) => p_s < p_r,
            (Geo, P) => 1.0 + br < 1.0 / p_s,
            (Geo, G) => xr.mean < 1.0 / p_s,
            (P, D) => true,
            (P, Geo) => 1.0 / p_r < 1.0 + bs,
            (P, P) => br < bs,
            (P, G) => xr.mean < 1.0 + bs,
            (G, D) => true,
            (G, Geo) => 1.0 / p_r < xs.mean,
            (G, P) => 1.0 + br < xs.mean,
            (G, G) => xr.mean < xs.mean,
        }
    }
}

/// The tabulated closed-form peak-age expression for a stable row. These are
/// the Kingman bound written out per row; they are evaluated here literally
/// and independently of [`paoi_df_upper`] so the two can be cross-checked.
///
/// For G/D/1 the commonly tabulated numerator carries an extra `+ 1` that the
/// bound does not produce; this function returns the bound-consistent form
/// and [`gd1_closed_form_with_extra_term`] the other one.
pub fn table1_closed_form(spec: &SpecialCaseSpec, d: &DerivedParams) -> Option<f64> {
    if !spec.is_stable(d) {
        return None;
    }
    let (xs, xr) = spec.cycles(d).ok()?;
    let (p_s, p_r, bs, br) = (d.p_suc_s, d.p_suc_r, d.bprime_s, d.bprime_r);
    let (ex_s, ex_s2, ex_r, ex_r2) = (xs.mean, xs.second, xr.mean, xr.second);
    use Side::*;
    let v = match spec.sides() {
        (D, D) => 2.0,
        (Geo, D) => 3.0 / (2.0 * p_s) + 1.0,
        (Geo, Geo) => {
            (p_r * p_r * (3.0 - p_s) - p_s * p_s * (1.0 + p_r)) / (2.0 * p_s * p_r * (p_r - p_s))
        }
        (Geo, P) => {
            1.0 / p_s
                + (1.0 + br)
                + ((1.0 - p_s) / (p_s * p_s) + br) / (2.0 * (1.0 / p_s - (1.0 + br)))
        }
        (Geo, G) => {
            1.0 / p_s + ex_r + ((1.0 - p_s) / (p_s * p_s) + ex_r2 - ex_r * ex_r) / (2.0 * (1.0 / p_s - ex_r))
        }
        (P, D) => 2.5 + bs,
        (P, Geo) => {
            (1.0 + bs) + 1.0 / p_r + (bs + (1.0 - p_r) / (p_r * p_r)) / (2.0 * ((1.0 + bs) - 1.0 / p_r))
        }
        (P, P) => (bs * (5.0 + 2.0 * bs) - br * (3.0 + 2.0 * br)) / (2.0 * (bs - br)),
        (P, G) => (1.0 + bs) + ex_r + (bs + ex_r2 - ex_r * ex_r) / (2.0 * ((1.0 + bs) - ex_r)),
        (G, D) => ex_s + 1.0 + (ex_s2 - ex_s * ex_s) / (2.0 * (ex_s - 1.0)),
        (G, Geo) => {
            ex_s + 1.0 / p_r + (ex_s2 - ex_s * ex_s + (1.0 - p_r) / (p_r * p_r)) / (2.0 * (ex_s - 1.0 / p_r))
        }
        (G, P) => ex_s + (1.0 + br) + (ex_s2 - ex_s * ex_s + br) / (2.0 * (ex_s - (1.0 + br))),
        (G, G) => ex_s + ex_r + (ex_s2 + ex_r2 - (ex_s * ex_s + ex_r * ex_r)) / (2.0 * (ex_s - ex_r)),
        (D, _) => unreachable!("never-stable rows return early"),
    };
    Some(v)
}

/// G/D/1 with `var(X_s) + 1` in the numerator.
pub fn gd1_closed_form_with_extra_term(xs: &CycleMoments) -> f64 {
    xs.mean + 1.0 + (xs.second - xs.mean * xs.mean + 1.0) / (2.0 * (xs.mean - 1.0))
}

/// Evaluate one limiting case. Geo/Geo/1 and Geo/G/1 use the exact slotted
/// waiting time; D/D/1 is exact; all other stable rows carry the Kingman
/// bound. Instability is reported as `value: None`, not as an error.
pub fn special_case(spec: &SpecialCaseSpec, d: &DerivedParams) -> PaoiResult {
    let label = spec.queue_label();
    let cycles = spec.cycles(d);
    let rho = cycles
        .as_ref()
        .map(|(xs, xr)| utilization(xs, xr))
        .unwrap_or(f64::NAN);
    let unstable = |kind| PaoiResult {
        value: None,
        queue_label: label.clone(),
        utilization: rho,
        bound_kind: kind,
    };
    let Ok((xs, xr)) = cycles else {
        return unstable(BoundKind::KingmanUpperBound);
    };
    let (a, b) = spec.sides();
    let exact_kind = match (a, b) {
        (Side::Geo, Side::Geo) => Some(WaitKind::GeoGeo),
        (Side::Geo, Side::G) => Some(WaitKind::GeoG),
        _ => None,
    };
    if !spec.is_stable(d) {
        let kind = if exact_kind.is_some() { BoundKind::Exact } else { BoundKind::KingmanUpperBound };
        return unstable(kind);
    }
    let (value, kind) = match (a, b, exact_kind) {
        (Side::D, Side::D, _) => (Some(2.0), BoundKind::Exact),
        (_, _, Some(k)) => (
            waiting_exact(k, d.p_suc_s, &xr).ok().map(|w| xs.mean + xr.mean + w),
            BoundKind::Exact,
        ),
        _ => (table1_closed_form(spec, d), BoundKind::KingmanUpperBound),
    };
    PaoiResult {
        value,
        queue_label: label,
        utilization: rho,
        bound_kind: kind,
    }
}

/// The four amplify-and-forward limits, as mean peak age.
pub fn af_special_case(
    capacitors_full: bool,
    success_deterministic: bool,
    d: &DerivedParams,
    tol: Tolerance,
) -> Result<f64> {
    match (capacitors_full, success_deterministic) {
        (true, true) => Ok(1.0),
        (true, false) => {
            if d.p_suc_af == 0.0 {
                Err(ModelError::DivideByZeroProb)
            } else {
                Ok(1.0 / d.p_suc_af)
            }
        }
        (false, true) => Ok(AfWaitDist::new(d.bprime_s, d.bprime_r)?.moments(tol)?.0),
        (false, false) => Ok(paoi_onehop(&af_cycle(d, tol)?)),
    }
}

/// Decode-and-forward mean age given an externally estimated `E[X_s W]`.
///
/// The continuous sawtooth area per inter-arrival cycle divided by `E[X_s]`,
/// plus the half slot that slotted sampling of the age adds.
pub fn aoi_df_hybrid(xs: &CycleMoments, xr: &CycleMoments, e_xs_w: f64) -> f64 {
    aoi_df_hybrid_continuous(xs, xr, e_xs_w) + 0.5
}

/// `(E[X_s^2]/2 + E[X_s] E[X_r] + E[X_s W]) / E[X_s]`, the continuous-time
/// area form.
pub fn aoi_df_hybrid_continuous(xs: &CycleMoments, xr: &CycleMoments, e_xs_w: f64) -> f64 {
    (0.5 * xs.second + xs.mean * xr.mean + e_xs_w) / xs.mean
}

/// Analytic summary of one scheme at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeAnalysis {
    pub scheme: Scheme,
    /// `None` when the relay queue is unstable.
    pub paoi: Option<f64>,
    pub paoi_kind: BoundKind,
    /// Only for the one-hop schemes.
    pub aoi: Option<f64>,
    /// The end-to-end cycle (direct, AF) or the source-relay cycle (DF).
    pub first_hop: CycleMoments,
    pub relay_hop: Option<CycleMoments>,
    pub utilization: Option<f64>,
}

pub fn analyze(scheme: Scheme, d: &DerivedParams, tol: Tolerance) -> Result<SchemeAnalysis> {
    match scheme {
        Scheme::Direct | Scheme::Af => {
            let x = if scheme == Scheme::Direct { direct_cycle(d)? } else { af_cycle(d, tol)? };
            Ok(SchemeAnalysis {
                scheme,
                paoi: Some(paoi_onehop(&x)),
                paoi_kind: BoundKind::Exact,
                aoi: Some(aoi_onehop(&x)),
                first_hop: x,
                relay_hop: None,
                utilization: None,
            })
        }
        Scheme::Df => {
            let xs = source_cycle(d)?;
            let xr = relay_cycle(d)?;
            let paoi = match paoi_df_upper(&xs, &xr) {
                Ok(r) => r.value,
                Err(ModelError::UnstableQueue { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(SchemeAnalysis {
                scheme,
                paoi,
                paoi_kind: BoundKind::KingmanUpperBound,
                aoi: None,
                first_hop: xs,
                relay_hop: Some(xr),
                utilization: Some(utilization(&xs, &xr)),
            })
        }
    }
}
