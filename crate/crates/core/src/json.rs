//! JSON output for quadratization and stability results.

use num_complex::Complex64;
use serde::Serialize;

use crate::poly::{format_rational, Coeff, Point};
use crate::quadratize::{QuadratizationResult, RewriteRule, SearchStats};
use crate::stability::{CheckMode, PointReport, StabilityReport, StabilizerSet, Verdict};

/// Version of the output layout below.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Output {
    schema_version: u32,
    variables: Vec<String>,
    new_variables: Vec<String>,
    equations: Vec<String>,
    stabilizers: Vec<String>,
    rewrite_rule: RewriteRule,
    search: SearchStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<CheckMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    equilibria: Option<Vec<PointJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<StepJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warnings: Option<Vec<String>>,
}

#[derive(Serialize)]
struct StepJson {
    lambda: String,
    points: Vec<PointJson>,
}

#[derive(Serialize)]
struct PointJson {
    point: Vec<String>,
    verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<Vec<ComplexJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_eigenvalues: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    routh_first_column: Option<Vec<String>>,
}

#[derive(Serialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

/// Rounds to 12 significant digits so output is stable across platforms.
pub fn round12(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    let r: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub fn complex_json(z: &Complex64) -> ComplexJson {
    ComplexJson {
        re: round12(z.re),
        im: round12(z.im),
    }
}

pub fn point_strings(p: &Point) -> Vec<String> {
    p.0.iter().map(Coeff::to_literal).collect()
}

fn point_json(r: &PointReport) -> PointJson {
    PointJson {
        point: point_strings(&r.point),
        verdict: r.verdict,
        eigenvalues: (!r.eigenvalues.is_empty() || r.routh_first_column.is_none())
            .then(|| r.eigenvalues.iter().map(complex_json).collect()),
        exact_eigenvalues: r
            .exact_eigenvalues
            .as_ref()
            .map(|v| v.iter().map(format_rational).collect()),
        routh_first_column: r
            .routh_first_column
            .as_ref()
            .map(|v| v.iter().map(Coeff::to_literal).collect()),
    }
}

#[derive(Serialize)]
struct PointsOutput {
    schema_version: u32,
    variables: Vec<String>,
    mode: CheckMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    equilibria: Vec<PointJson>,
}

/// Verdicts for points of a system checked as is, without quadratizing.
pub fn serialize_points(variables: &[String], mode: CheckMode, tol: f64, reports: &[PointReport]) -> String {
    let out = PointsOutput {
        schema_version: SCHEMA_VERSION,
        variables: variables.to_vec(),
        mode,
        tol: (mode == CheckMode::Numeric).then_some(tol),
        equilibria: reports.iter().map(point_json).collect(),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("serializable");
    s.push('\n');
    s
}

/// Pretty JSON with a fixed key order. `report` adds λ, verdicts and the trace.
pub fn serialize_result(
    r: &QuadratizationResult,
    stabilizers: Option<&StabilizerSet>,
    report: Option<&StabilityReport>,
) -> String {
    let lifted = r.lifted_system();
    let out = Output {
        schema_version: SCHEMA_VERSION,
        variables: r.system.vars().names().to_vec(),
        new_variables: r.new_var_definitions(),
        equations: lifted.to_string().lines().map(str::to_string).collect(),
        stabilizers: stabilizers
            .map(|h| h.h.iter().map(ToString::to_string).collect())
            .unwrap_or_default(),
        rewrite_rule: r.rule,
        search: r.stats,
        lambda: report.map(|rep| rep.lambda.to_string()),
        mode: report.map(|rep| rep.mode),
        tol: report.and_then(|rep| (rep.mode == CheckMode::Numeric).then_some(rep.tol)),
        equilibria: report.map(|rep| rep.points.iter().map(point_json).collect()),
        trace: report.map(|rep| {
            rep.trace
                .iter()
                .map(|s| StepJson {
                    lambda: s.lambda.to_string(),
                    points: s.points.iter().map(point_json).collect(),
                })
                .collect()
        }),
        warnings: report.map(|rep| rep.warnings.clone()),
    };
    let mut s = serde_json::to_string_pretty(&out).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::quadratize::{branch_and_bound, rewrite_quadratic, SearchOptions};
    use crate::stability::{build_stabilizers, dissipative_quadratize, DissipateOptions};

    #[test]
    fn rounding() {
        assert_eq!(round12(-2.0000000000004), -2.0);
        assert_eq!(round12(-0.0), 0.0);
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(1e-20), 1e-20);
    }

    #[test]
    fn cubic_json() {
        let s = models::cubic();
        let q = rewrite_quadratic(&s, &[crate::Monomial::from_exponents(vec![2])], RewriteRule::MostLifted).unwrap();
        let j = serialize_result(&q, None, None);
        assert!(j.contains("\"y1 = x^2\""));
        assert!(j.contains("\"y1' = -2*y1 + 2*y1^2\""));
        assert!(j.starts_with("{\n  \"schema_version\": 1,"));
    }

    #[test]
    fn empty_new_variables() {
        let s = crate::parse_system("x' = x*y\ny' = -y").unwrap();
        let q = branch_and_bound(&s, &SearchOptions::default()).unwrap();
        let j = serialize_result(&q, None, None);
        assert!(j.contains("\"new_variables\": []"));
    }

    #[test]
    fn table_one_json() {
        let (s, pts) = models::three_equilibria(1);
        let (q, rep) = dissipative_quadratize(&s, &pts, &DissipateOptions::default()).unwrap();
        let h = build_stabilizers(&q).unwrap();
        let v: serde_json::Value = serde_json::from_str(&serialize_result(&q, Some(&h), Some(&rep))).unwrap();
        assert_eq!(v["lambda"], "8");
        assert_eq!(v["mode"], "exact-hurwitz");
        assert_eq!(v["equilibria"][0]["exact_eigenvalues"], serde_json::json!(["-8", "-2"]));
        assert_eq!(v["trace"].as_array().unwrap().len(), 5);
        assert_eq!(v["stabilizers"], serde_json::json!(["y1 - x^2"]));
    }
}
