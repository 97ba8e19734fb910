use std::fmt::Write as _;
use std::fs;

use anyhow::{Context, Result};
use ews_core::detector::{AnalysisReport, Label};

use crate::ReportArgs;

pub fn run(args: &ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.report).with_context(|| format!("cannot read {}", args.report.display()))?;
    let report: AnalysisReport =
        serde_json::from_str(&text).with_context(|| format!("{} is not a valid report", args.report.display()))?;
    print!("{}", render(&report));
    Ok(())
}

fn tau(t: Option<f64>) -> String {
    t.map_or_else(|| "null".to_string(), |t| format!("{t:+.3}"))
}

/// Table of analyzed windows followed by one summary line.
pub fn render(report: &AnalysisReport) -> String {
    let mut out = String::new();
    if !report.windows.is_empty() {
        let _ = writeln!(
            out,
            "{:>6}  {:>10}  {:<12}  {:>7}  {:>7}  {:>7}  {:>7}",
            "index", "start_s", "label", "rr", "ac1", "cv", "skew"
        );
        for w in &report.windows {
            let _ = writeln!(
                out,
                "{:>6}  {:>10.1}  {:<12}  {:>7}  {:>7}  {:>7}  {:>7}",
                w.index,
                w.start_t,
                w.label.to_string(),
                tau(w.tau.rr),
                tau(w.tau.ac1),
                tau(w.tau.cv),
                tau(w.tau.skew)
            );
        }
    }
    let count = |l: Label| report.windows.iter().filter(|w| w.label == l).count();
    let _ = write!(out, "{} windows analyzed", report.windows.len());
    if !report.windows.is_empty() {
        let _ = write!(
            out,
            ": {} Precursor, {} NoPrecursor, {} Inconclusive",
            count(Label::Precursor),
            count(Label::NoPrecursor),
            count(Label::Inconclusive)
        );
    }
    if !report.skipped.is_empty() {
        let _ = write!(out, "; {} skipped", report.skipped.len());
    }
    if let Some(first) = report.windows.iter().find(|w| w.label == Label::Precursor) {
        let _ = write!(out, "; first Precursor at window {} ({:.1} s)", first.index, first.start_t);
    }
    out.push('\n');
    out
}
