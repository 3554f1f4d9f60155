//! The sixteen decode-and-forward limiting cases plus the four
//! amplify-and-forward ones, evaluated at one parameter point.

use crate::analysis::{self, Capacitor, SpecialCaseSpec, Success};
use crate::error::Result;
use crate::params::DerivedParams;
use crate::specfun::Tolerance;

use super::fmt_g;

pub const TABLE1_COLUMNS: [&str; 10] = [
    "scheme",
    "source_capacitor",
    "source_success",
    "relay_capacitor",
    "relay_success",
    "queue",
    "stable",
    "paoi",
    "paoi_kind",
    "rho",
];

fn cap(c: Capacitor) -> &'static str {
    match c {
        Capacitor::Full => "full",
        Capacitor::Charging => "charging",
    }
}

fn suc(s: Success) -> &'static str {
    match s {
        Success::Deterministic => "det",
        Success::Random => "random",
    }
}

pub fn table1_records(d: &DerivedParams) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for spec in SpecialCaseSpec::all() {
        let r = analysis::special_case(&spec, d);
        out.push(vec![
            "df".into(),
            cap(spec.source_capacitor).into(),
            suc(spec.source_success).into(),
            cap(spec.relay_capacitor).into(),
            suc(spec.relay_success).into(),
            r.queue_label.clone(),
            if r.is_stable() { "stable" } else { "unstable" }.into(),
            r.value.map(fmt_g).unwrap_or_else(|| "UNSTABLE".into()),
            r.bound_kind.short().into(),
            fmt_g(r.utilization),
        ]);
    }
    let tol = Tolerance::default();
    for (full, det) in [(true, true), (true, false), (false, true), (false, false)] {
        let v = analysis::af_special_case(full, det, d, tol)?;
        let c = if full { "full" } else { "charging" };
        let s = if det { "det" } else { "random" };
        out.push(vec![
            "af".into(),
            c.into(),
            s.into(),
            c.into(),
            s.into(),
            String::new(),
            "stable".into(),
            fmt_g(v),
            "exact".into(),
            String::new(),
        ]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SystemParams;

    #[test]
    fn twenty_rows() {
        let d = DerivedParams::from_params(&SystemParams::default()).unwrap();
        let rows = table1_records(&d).unwrap();
        assert_eq!(rows.len(), 20);
        assert_eq!(rows[0][5..8], ["D/D/1", "stable", "2"]);
        assert_eq!(rows[2][5..8], ["D/P/1", "unstable", "UNSTABLE"]);
        assert_eq!(rows[16][7], "1");
    }
}
