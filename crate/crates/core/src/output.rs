//! CSV and JSON serialization of command results.
//!
//! CSV: header row, fixed column order, 12 significant digits, `\n` line ends.
//! JSON: one object carrying `"schema_version": 1`.

use serde::Serialize;
use serde_json::json;

use crate::model::OscillatorSpec;
use crate::oracle::{CrossCheck, MatchStatus};
use crate::perturbation::{ComparisonOutcome, PerturbationComparison, SweepTrace};
use crate::spectrum::{Solution, SpectrumTable};

pub const SCHEMA_VERSION: u32 = 1;
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Shortest rendering of `x` with at most 12 significant digits, `%g` style.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
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
    x.map(fmt_sig).unwrap_or_default()
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub fn solve_csv(spec: &OscillatorSpec, solution: &Solution) -> String {
    let mut h = header(&["j", "dp_min", "accepted", "rejection_reason", "second_derivative", "max_convergence_ratio"]);
    h.extend((2..=spec.order()).map(|i| format!("a_{i}")));
    h.extend(header(&["q", "w", "omega_an"]));
    let rows: Vec<Vec<String>> = solution
        .branches
        .iter()
        .map(|b| {
            let mut r = vec![
                b.branch.index_j.to_string(),
                fmt_sig(b.branch.dp_min),
                b.branch.accepted.to_string(),
                b.branch.rejection_reason.map(|r| r.as_str().to_string()).unwrap_or_default(),
                fmt_sig(b.branch.second_derivative),
                fmt_sig(b.branch.max_convergence_ratio()),
            ];
            r.extend((2..=spec.order()).map(|i| opt(b.a.get(&i).copied())));
            let p = b.params.as_ref();
            r.push(opt(p.map(|p| p.q)));
            r.push(opt(p.map(|p| p.w)));
            r.push(opt(p.map(|p| p.omega_an)));
            r
        })
        .collect();
    csv_string(&h, &rows)
}

pub fn levels_csv(table: &SpectrumTable, harmonic: &SpectrumTable) -> String {
    let h = header(&["j", "n", "E", "dp_an", "dx", "R_E", "R_p", "E_har", "dt"]);
    let harmonic_levels = &harmonic.branches[0].levels;
    let mut rows = Vec::new();
    for b in &table.branches {
        for l in &b.levels {
            let ratios = table.harmonic_ratios(b.branch.index_j, l.n);
            let dt = table.dt.iter().find(|d| d.n == l.n).map(|d| d.dt);
            rows.push(vec![
                b.branch.index_j.to_string(),
                l.n.to_string(),
                fmt_sig(l.energy),
                fmt_sig(l.dp_an),
                fmt_sig(l.dx),
                opt(ratios.map(|r| r.0)),
                opt(ratios.map(|r| r.1)),
                opt(harmonic_levels.get(l.n as usize).map(|l| l.energy)),
                opt(dt),
            ]);
        }
    }
    csv_string(&h, &rows)
}

pub fn sweep_csv(trace: &SweepTrace) -> String {
    let h = header(&["step", "value", "kind", "track", "dp_min", "omega_an", "q", "w", "detail"]);
    let mut rows = Vec::new();
    for s in &trace.steps {
        for b in &s.branches {
            rows.push(vec![
                s.step.to_string(),
                fmt_sig(s.value),
                "branch".into(),
                b.track.to_string(),
                fmt_sig(b.dp_min),
                fmt_sig(b.omega_an),
                fmt_sig(b.q),
                fmt_sig(b.w),
                String::new(),
            ]);
        }
        for e in trace.events.iter().filter(|e| e.step == s.step) {
            rows.push(vec![
                s.step.to_string(),
                fmt_sig(s.value),
                e.kind.as_str().into(),
                e.track.map(|t| t.to_string()).unwrap_or_default(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.detail.clone(),
            ]);
        }
        if trace.instability_flags.contains(&s.step) {
            let mut r = vec![s.step.to_string(), fmt_sig(s.value), "instability".into()];
            r.extend(std::iter::repeat_n(String::new(), 5));
            r.push(format!("dp_min response above {}x the coefficient step", fmt_sig(trace.amplification)));
            rows.push(r);
        }
    }
    csv_string(&h, &rows)
}

pub fn perturb_csv(cmp: &PerturbationComparison, n_max: u32) -> String {
    let mut h = header(&[
        "outcome",
        "baseline_j",
        "perturbed_j",
        "dp_min_baseline",
        "dp_min_perturbed",
        "d_dp_min",
        "omega_an_baseline",
        "omega_an_perturbed",
        "d_omega_an",
        "omega_shift",
    ]);
    h.extend((0..=n_max).map(|n| format!("dE_{n}")));
    let outcome = match cmp.outcome {
        ComparisonOutcome::Compared => "compared",
        ComparisonOutcome::Destabilized => "destabilized",
    };
    let width = h.len();
    let mut rows: Vec<Vec<String>> = cmp
        .shifts
        .iter()
        .map(|s| {
            let mut r = vec![
                outcome.to_string(),
                s.baseline_j.to_string(),
                s.perturbed_j.to_string(),
                fmt_sig(s.dp_min_baseline),
                fmt_sig(s.dp_min_perturbed),
                fmt_sig(s.d_dp_min),
                fmt_sig(s.omega_an_baseline),
                fmt_sig(s.omega_an_perturbed),
                fmt_sig(s.d_omega_an),
                s.omega_shift.to_string(),
            ];
            r.extend(s.level_deltas.iter().map(|d| fmt_sig(*d)));
            r
        })
        .collect();
    for &j in &cmp.unmatched_baseline {
        let mut r = vec![outcome.to_string(), j.to_string()];
        r.resize(width, String::new());
        rows.push(r);
    }
    for &j in &cmp.unmatched_perturbed {
        let mut r = vec![outcome.to_string(), String::new(), j.to_string()];
        r.resize(width, String::new());
        rows.push(r);
    }
    csv_string(&h, &rows)
}

pub fn oracle_csv(check: &CrossCheck) -> String {
    let h = header(&["j", "polynomial_dp", "accepted", "oracle_dp", "oracle_energy", "rel_discrepancy", "status", "verdict"]);
    let verdict = if check.matches { "match" } else { "mismatch" };
    let rows: Vec<Vec<String>> = check
        .pairs
        .iter()
        .map(|p| {
            vec![
                p.j.map(|j| j.to_string()).unwrap_or_default(),
                opt(p.polynomial_dp),
                p.accepted.map(|a| a.to_string()).unwrap_or_default(),
                opt(p.oracle_dp),
                opt(p.oracle_energy),
                opt(p.rel_discrepancy),
                match p.status {
                    MatchStatus::Matched => "matched",
                    MatchStatus::Discrepant => "discrepant",
                    MatchStatus::PolynomialOnly => "polynomial_only",
                    MatchStatus::OracleOnly => "oracle_only",
                }
                .into(),
                verdict.into(),
            ]
        })
        .collect();
    csv_string(&h, &rows)
}

/// `{"schema_version": 1, "command": .., "spec": .., "result": ..}`, newline-terminated.
pub fn json_document<T: Serialize>(command: &str, spec: &OscillatorSpec, result: &T) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "spec": spec,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable result");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(2.5), "2.5");
        assert_eq!(fmt_sig(-3.0), "-3");
        assert_eq!(fmt_sig(0.984_401_101_137_737_7), "0.984401101138");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(123_456_789_012_345.0), "1.23456789012e14");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig(9.999_999_999_999_9), "10");
        assert_eq!(fmt_sig(-77_151.493_697_550_4), "-77151.4936976");
        assert_eq!(fmt_sig(0.0), "0");
    }

    #[test]
    fn csv_uses_plain_newlines() {
        let s = csv_string(&header(&["a", "b"]), &[vec!["1".into(), "2".into()]]);
        assert_eq!(s, "a,b\n1,2\n");
    }
}
