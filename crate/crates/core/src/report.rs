//! Report assembly and emission.
//!
//! A [`Report`] echoes the experiment it came from, carries one table per
//! requested query, and optionally an empirical Monte Carlo table. Output
//! is deterministic byte-for-byte for identical (spec, seed, tool version):
//! no timestamps, no map iteration, no locale-dependent formatting.

use serde::{Deserialize, Serialize};

use crate::experiment::{ExperimentSpec, MeasurementSpec, ScenarioSpec, SemanticsSpec};

/// Output encodings for a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Aligned human-readable tables.
    #[default]
    Text,
    /// One `query,label,probability,stderr` row per table entry.
    Csv,
    /// The full report object; round-trips through serde.
    Json,
}

/// One labelled value in a table. Analytic rows carry no standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

/// Exact values for one requested query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTable {
    pub query: String,
    pub rows: Vec<ReportRow>,
}

/// Empirical conditional distribution from seeded Monte Carlo sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTable {
    pub trials: u64,
    pub seed: u64,
    pub postselected: u64,
    pub postselection_rate: f64,
    pub rows: Vec<ReportRow>,
}

/// A complete analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub spec: ExperimentSpec,
    pub analytic: Vec<QueryTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical: Option<EmpiricalTable>,
}

/// Formats a value with 12 significant digits, printed in plain decimal.
fn fmt_value(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float");
    format!("{rounded}")
}

fn describe_scenario(spec: &ExperimentSpec) -> String {
    match &spec.scenario {
        ScenarioSpec::Nbox { n } => format!("nbox n={n} (dim {})", n + 1),
        ScenarioSpec::Custom { dim, .. } => format!("custom (dim {dim})"),
    }
}

fn describe_measurement(spec: &ExperimentSpec) -> String {
    match &spec.measurement {
        MeasurementSpec::OpenBox { i } => format!("open_box i={i}"),
        MeasurementSpec::AllBoxes => "all_boxes".to_string(),
        MeasurementSpec::Indistinguishable { i } => format!("indistinguishable i={i}"),
        MeasurementSpec::Custom { spans } => format!("custom ({} outcomes)", spans.len()),
    }
}

fn describe_semantics(spec: &ExperimentSpec) -> &'static str {
    match spec.semantics {
        SemanticsSpec::Pure => "pure",
        SemanticsSpec::Mixture => "mixture",
    }
}

/// Renders a report in the requested format.
pub fn emit_report(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Text => emit_text(report),
        OutputFormat::Csv => emit_csv(report),
        OutputFormat::Json => emit_json(report),
    }
}

fn emit_text(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!("nboxsim report (v{})\n", report.tool_version));
    out.push_str(&format!("scenario:    {}\n", describe_scenario(&report.spec)));
    out.push_str(&format!(
        "measurement: {}\n",
        describe_measurement(&report.spec)
    ));
    out.push_str(&format!("semantics:   {}\n", describe_semantics(&report.spec)));
    if let Some(mc) = &report.spec.montecarlo {
        out.push_str(&format!("montecarlo:  {} trials, seed {}\n", mc.trials, mc.seed));
    }
    for table in &report.analytic {
        out.push('\n');
        out.push_str(&format!("query: {}\n", table.query));
        render_rows(&mut out, &table.rows);
    }
    if let Some(emp) = &report.empirical {
        out.push('\n');
        out.push_str(&format!(
            "empirical: {} trials, seed {}, postselected {} (rate {})\n",
            emp.trials,
            emp.seed,
            emp.postselected,
            fmt_value(emp.postselection_rate)
        ));
        render_rows(&mut out, &emp.rows);
    }
    out
}

fn render_rows(out: &mut String, rows: &[ReportRow]) {
    let label_width = rows
        .iter()
        .map(|r| r.label.len())
        .max()
        .unwrap_or(0)
        .max("label".len());
    let has_stderr = rows.iter().any(|r| r.stderr.is_some());
    if has_stderr {
        out.push_str(&format!(
            "  {:label_width$}  {:>16}  {:>16}\n",
            "label", "probability", "stderr"
        ));
    } else {
        out.push_str(&format!("  {:label_width$}  {:>16}\n", "label", "probability"));
    }
    for r in rows {
        match r.stderr {
            Some(se) => out.push_str(&format!(
                "  {:label_width$}  {:>16}  {:>16}\n",
                r.label,
                fmt_value(r.value),
                fmt_value(se)
            )),
            None => out.push_str(&format!(
                "  {:label_width$}  {:>16}\n",
                r.label,
                fmt_value(r.value)
            )),
        }
    }
}

fn emit_csv(report: &Report) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["query", "label", "probability", "stderr"])
        .expect("write to memory");
    for table in &report.analytic {
        for r in &table.rows {
            writer
                .write_record([
                    table.query.as_str(),
                    r.label.as_str(),
                    &fmt_value(r.value),
                    &r.stderr.map(fmt_value).unwrap_or_default(),
                ])
                .expect("write to memory");
        }
    }
    if let Some(emp) = &report.empirical {
        for r in &emp.rows {
            writer
                .write_record([
                    "empirical_conditional",
                    r.label.as_str(),
                    &fmt_value(r.value),
                    &r.stderr.map(fmt_value).unwrap_or_default(),
                ])
                .expect("write to memory");
        }
        let rate_stderr = (emp.postselection_rate * (1.0 - emp.postselection_rate)
            / emp.trials as f64)
            .sqrt();
        writer
            .write_record([
                "empirical_conditional",
                "postselection-rate",
                &fmt_value(emp.postselection_rate),
                &fmt_value(rate_stderr),
            ])
            .expect("write to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("csv is utf-8")
}

fn emit_json(report: &Report) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}
