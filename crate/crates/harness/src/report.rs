//! Markdown and CSV result tables, one table per dataset.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::protocol::ResultRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    #[serde(rename = "md", alias = "markdown")]
    Markdown,
    #[serde(rename = "csv")]
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Markdown => "md",
            Self::Csv => "csv",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            other => Err(HarnessError::Config(format!("unknown report format {other:?}"))),
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

fn datasets(rows: &[ResultRow]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        if !out.contains(&r.dataset) {
            out.push(r.dataset.clone());
        }
    }
    out
}

pub fn render_markdown(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    for ds in datasets(rows) {
        out.push_str(&format!("## {ds}\n\n"));
        out.push_str("| method | variant | omega | DS | d | split | accu | tpr | tnr | pre | F1 | Gmean |\n");
        out.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|\n");
        for r in rows.iter().filter(|r| r.dataset == ds) {
            let m = r.metrics.as_array().map(|v| format!("{v:.2}"));
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} |\n",
                r.method,
                opt(r.variant),
                opt(r.omega),
                opt(r.strategy),
                opt(r.d),
                r.split,
                m.join(" | ")
            ));
        }
        let flags: Vec<&ResultRow> = rows.iter().filter(|r| r.dataset == ds).collect();
        let standardized = flags.iter().all(|r| r.standardized);
        let refit = flags.iter().all(|r| r.refit);
        out.push_str(&format!("\nstandardized: {standardized}; refit after selection: {refit}\n\n"));
    }
    out
}

pub fn render_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset", "method", "variant", "omega", "strategy", "d", "c", "beta", "sigma", "eta", "max_iter", "split", "accu",
        "tpr", "tnr", "pre", "f1", "gmean", "tp", "fp", "tn", "fn", "cv_gmean", "refit", "standardized",
    ])?;
    for r in rows {
        let p = r.params;
        let c = r.counts;
        let mut rec = vec![
            r.dataset.clone(),
            r.method.clone(),
            opt(r.variant),
            opt(r.omega),
            opt(r.strategy),
            opt(r.d),
            opt(p.map(|p| p.c)),
            opt(p.map(|p| p.beta)),
            opt(p.filter(|p| p.variant.uses_sigma()).map(|p| p.sigma)),
            opt(p.map(|p| p.eta)),
            opt(p.map(|p| p.max_iter)),
            r.split.clone(),
        ];
        rec.extend(r.metrics.as_array().iter().map(|v| v.to_string()));
        rec.extend([
            opt(c.map(|c| c.tp)),
            opt(c.map(|c| c.fp)),
            opt(c.map(|c| c.tn)),
            opt(c.map(|c| c.fn_)),
            opt(r.cv_gmean),
            r.refit.to_string(),
            r.standardized.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render(rows: &[ResultRow], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyReport("no result rows".into()));
    }
    match format {
        ReportFormat::Markdown => Ok(render_markdown(rows)),
        ReportFormat::Csv => render_csv(rows),
    }
}

/// Writes `<dir>/<stem>.<ext>` and returns its path.
pub fn emit_report(rows: &[ResultRow], format: ReportFormat, dir: &Path, stem: &str) -> Result<PathBuf> {
    let text = render(rows, format)?;
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let path = dir.join(format!("{stem}.{}", format.extension()));
    fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mssvdd::metrics::MetricReport;

    fn row(gmean: f64) -> ResultRow {
        ResultRow {
            dataset: "LP1".into(),
            method: "MS-SVDD".into(),
            variant: Some(mssvdd::Variant::Linear),
            omega: Some(mssvdd::Omega::AlphaScatter),
            strategy: Some(mssvdd::DecisionStrategy::FirstModality),
            d: Some(3),
            params: None,
            counts: None,
            metrics: MetricReport {
                accu: 0.954,
                tpr: 0.97,
                tnr: 0.97,
                pre: 0.93,
                f1: 0.95,
                gmean,
            },
            split: "mean".into(),
            cv_gmean: None,
            refit: true,
            standardized: true,
        }
    }

    #[test]
    fn markdown_rounds_to_two_decimals() {
        let md = render(&[row(0.97)], ReportFormat::Markdown).unwrap();
        assert!(md.contains("## LP1"));
        assert!(md.contains("| MS-SVDD | linear | w2 | DS3 | 3 | mean | 0.95 | 0.97 | 0.97 | 0.93 | 0.95 | 0.97 |"), "{md}");
    }

    #[test]
    fn csv_keeps_full_precision() {
        let csv = render(&[row(0.123456789)], ReportFormat::Csv).unwrap();
        assert!(csv.contains("0.123456789"));
        assert!(csv.contains("0.954"));
        assert!(render(&[], ReportFormat::Csv).is_err());
    }
}
