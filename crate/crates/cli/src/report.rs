//! Report documents: JSON machine form, aligned human summary, and the
//! fixed-schema CSV table form.

use serde::Serialize;

use meancov::{TableRow, TestReport};

use crate::io::InputMeta;

pub const TOOL_NAME: &str = "meancov";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Machine form of a `test` run: the in-memory reports mirrored field for
/// field, plus tool version and input digests.
#[derive(Debug, Serialize)]
pub struct TestDocument<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub sample1: &'a InputMeta,
    pub sample2: &'a InputMeta,
    pub reports: &'a [TestReport],
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Aligned plain-text summary of one or more test reports.
pub fn human_summary(s1: &InputMeta, s2: &InputMeta, reports: &[TestReport]) -> String {
    let mut out = String::new();
    out.push_str("simultaneous two-sample test of mean vectors and covariance matrices\n");
    out.push_str(&format!(
        "  sample1: {} observations x {} variables ({})\n",
        s1.observations, s1.variables, s1.path
    ));
    out.push_str(&format!(
        "  sample2: {} observations x {} variables ({})\n",
        s2.observations, s2.variables, s2.path
    ));
    for r in reports {
        out.push('\n');
        let name = match r.test {
            meancov::TestKind::Ml => "ml  (likelihood-ratio)",
            meancov::TestKind::Hn => "hn  (L2-norm comparator)",
        };
        out.push_str(&format!("  {name}\n"));
        out.push_str(&format!(
            "    statistic = {:>14.6}    z = {:>9.4}\n",
            r.statistic, r.z_score
        ));
        out.push_str(&format!(
            "    p-value   = {:>14.6}    reject at alpha = {}: {}\n",
            r.p_value,
            r.alpha,
            if r.reject { "yes" } else { "no" }
        ));
        if let Some(ml) = &r.ml {
            out.push_str(&format!(
                "    y1 = {:.4}, y2 = {:.4}, r_n = {:.4}; zeros = {}, ones = {}\n",
                ml.ratios.y1,
                ml.ratios.y2,
                ml.ratios.r_n,
                ml.spectrum_zero_count,
                ml.spectrum_one_count
            ));
            out.push_str(&format!(
                "    t_n = {:.6} (null limit {:.6}); beta = ({:.4}, {:.4})\n",
                ml.t_n, ml.t_limit, ml.betas_used.beta1, ml.betas_used.beta2
            ));
        }
    }
    out
}

/// One CSV row per report for a `test` run.
pub fn test_csv(s1: &InputMeta, s2: &InputMeta, reports: &[TestReport]) -> String {
    let mut out = String::from("test,n1,n2,p,alpha,tail,statistic,z_score,p_value,reject\n");
    let (n1, n2, p) = (
        s1.observations - 1,
        s2.observations - 1,
        s1.variables,
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.test,
            n1,
            n2,
            p,
            r.alpha,
            tail_name(r.tail),
            r.statistic,
            r.z_score,
            r.p_value,
            r.reject
        ));
    }
    out
}

pub fn tail_name(tail: meancov::Tail) -> &'static str {
    match tail {
        meancov::Tail::TwoSided => "two-sided",
        meancov::Tail::Lower => "lower",
    }
}

/// Fixed-schema scenario rows: `n1,n2,p,a,test,reps,seed,rate`.
/// The column order never varies; `a` is empty for scenarios without a
/// scale parameter.
pub fn rows_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("n1,n2,p,a,test,reps,seed,rate\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6}\n",
            r.n1,
            r.n2,
            r.p,
            r.a.map(|a| a.to_string()).unwrap_or_default(),
            r.test,
            r.reps,
            r.seed,
            r.rate
        ));
    }
    out
}

/// Sidecar metadata for a table reproduction.
#[derive(Debug, Serialize)]
pub struct TableMeta {
    pub tool: &'static str,
    pub version: &'static str,
    pub table: u8,
    pub reps: usize,
    pub master_seed: u64,
    pub alpha: f64,
    pub tail: String,
    pub distribution: String,
    pub cells: Vec<TableCellMeta>,
}

#[derive(Debug, Serialize)]
pub struct TableCellMeta {
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    pub seed: u64,
    pub runtime_ms: u64,
}

/// Summary statistics of a null-score collection.
#[derive(Debug, Serialize)]
pub struct NulldistSummary {
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    pub reps: usize,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub sup_distance: f64,
}
