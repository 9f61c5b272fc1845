//! CSV emission: UTF-8, comma-separated, versioned header comment, `%.12g`
//! numeric formatting. All writers are pure string builders so byte-identical
//! reruns are easy to check.

use crate::error::{Error, Result};
use crate::mathutil::format_g12;

pub const RESULTS_SCHEMA: &str = "# robustkit-results v1";
pub const RESULTS_HEADER: &str =
    "experiment,trial,eps,n,n_samples,adversary,estimator,metric,value,stderr";
pub const LOWERBOUND_SCHEMA: &str = "# robustkit-lowerbound v1";
pub const LOWERBOUND_HEADER: &str = "n,k,tv_estimate,stderr,trace_distance_lower_bound";

/// One metric value from one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub trial: usize,
    pub eps: f64,
    pub n: usize,
    pub n_samples: usize,
    pub adversary: String,
    pub estimator: String,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
}

impl ResultRow {
    pub fn validate(&self) -> Result<()> {
        if !self.value.is_finite() || !self.stderr.is_finite() {
            return Err(Error::NonFinite("result row metric"));
        }
        Ok(())
    }
}

/// One row of the lower-bound experiment CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerboundRow {
    pub n: usize,
    pub k: usize,
    pub tv_estimate: f64,
    pub stderr: f64,
    pub trace_distance_lower_bound: f64,
}

pub fn render_results_csv(rows: &[ResultRow]) -> Result<String> {
    let mut out = String::new();
    out.push_str(RESULTS_SCHEMA);
    out.push('\n');
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        r.validate()?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            r.trial,
            format_g12(r.eps),
            r.n,
            r.n_samples,
            r.adversary,
            r.estimator,
            r.metric,
            format_g12(r.value),
            format_g12(r.stderr),
        ));
    }
    Ok(out)
}

pub fn render_lowerbound_csv(rows: &[LowerboundRow]) -> Result<String> {
    let mut out = String::new();
    out.push_str(LOWERBOUND_SCHEMA);
    out.push('\n');
    out.push_str(LOWERBOUND_HEADER);
    out.push('\n');
    for r in rows {
        if !r.tv_estimate.is_finite() || !r.stderr.is_finite() {
            return Err(Error::NonFinite("lowerbound row"));
        }
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            r.k,
            format_g12(r.tv_estimate),
            format_g12(r.stderr),
            format_g12(r.trace_distance_lower_bound),
        ));
    }
    Ok(out)
}

/// A parsed CSV: the schema comment line, header fields, and data records.
#[derive(Debug, Clone)]
pub struct ParsedCsv {
    pub schema: String,
    pub header: Vec<String>,
    pub records: Vec<Vec<String>>,
}

pub fn parse_csv(text: &str) -> Result<ParsedCsv> {
    let mut lines = text.lines();
    let schema = lines
        .next()
        .filter(|l| l.starts_with('#'))
        .ok_or_else(|| Error::Format("missing schema comment line".into()))?
        .to_string();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Format("missing CSV header".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != header.len() {
            return Err(Error::Format(format!(
                "record {} has {} fields, header has {}",
                i + 1,
                fields.len(),
                header.len()
            )));
        }
        records.push(fields);
    }
    Ok(ParsedCsv {
        schema,
        header,
        records,
    })
}
