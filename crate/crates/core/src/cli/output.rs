use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::montecarlo::{ExperimentReport, MetricRow};

pub const CSV_HEADER: &str = "metric,value,std_err,bound,bound_name,N,M,K,alpha,beta,sigma2,eps,trials,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_line(r: &MetricRow) -> String {
    let d = &r.dims;
    [
        csv_field(&r.metric),
        float(r.value),
        opt_float(r.std_err),
        opt_float(r.bound),
        csv_field(r.bound_name.as_deref().unwrap_or("")),
        d.n.to_string(),
        d.m.to_string(),
        d.k.to_string(),
        float(d.alpha()),
        float(d.beta()),
        float(d.sigma_n_sq),
        opt_float(r.eps),
        d.trials.to_string(),
        d.seed.to_string(),
    ]
    .join(",")
}

/// Header plus one line per row.
pub fn render_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&csv_line(r));
        out.push('\n');
    }
    out
}

/// `key=value` lines that replay the run through `--config`.
pub fn render_config(report: &ExperimentReport) -> String {
    let mut out = format!("command={}\n", report.command);
    for (k, v) in &report.config {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

fn json_str(s: &str) -> String {
    serde_json::Value::from(s).to_string()
}

fn json_num(v: f64) -> String {
    if v.is_finite() {
        float(v)
    } else {
        "null".into()
    }
}

fn json_opt(v: Option<f64>) -> String {
    v.map(json_num).unwrap_or_else(|| "null".into())
}

/// Single object with `command`, `config`, `warnings` and `rows`.
/// Non-finite numbers are written as `null`.
pub fn render_json(report: &ExperimentReport) -> String {
    let config: Vec<String> = report.config.iter().map(|(k, v)| format!("{}: {}", json_str(k), json_str(v))).collect();
    let warnings: Vec<String> = report.warnings.iter().map(|w| json_str(w)).collect();
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            let d = &r.dims;
            format!(
                "    {{\"metric\": {}, \"value\": {}, \"std_err\": {}, \"bound\": {}, \"bound_name\": {}, \
                 \"N\": {}, \"M\": {}, \"K\": {}, \"alpha\": {}, \"beta\": {}, \"sigma2\": {}, \"eps\": {}, \
                 \"trials\": {}, \"seed\": {}}}",
                json_str(&r.metric),
                json_num(r.value),
                json_opt(r.std_err),
                json_opt(r.bound),
                r.bound_name.as_deref().map(json_str).unwrap_or_else(|| "null".into()),
                d.n,
                d.m,
                d.k,
                json_num(d.alpha()),
                json_num(d.beta()),
                json_num(d.sigma_n_sq),
                json_opt(r.eps),
                d.trials,
                d.seed,
            )
        })
        .collect();
    format!(
        "{{\n  \"command\": {},\n  \"config\": {{{}}},\n  \"warnings\": [{}],\n  \"rows\": [\n{}\n  ]\n}}\n",
        json_str(&report.command),
        config.join(", "),
        warnings.join(", "),
        rows.join(",\n")
    )
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = sibling(path, &format!(".tmp{}", std::process::id()));
    let result = std::fs::write(&tmp, contents).and_then(|_| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Writes the report to `path`, or standard output when `None`. CSV output
/// gets a `<path>.config` file echoing the configuration.
pub fn write_report(report: &ExperimentReport, format: OutputFormat, path: Option<&Path>) -> io::Result<()> {
    let body = match format {
        OutputFormat::Csv => render_csv(report),
        OutputFormat::Json => render_json(report),
    };
    match path {
        None => io::stdout().lock().write_all(body.as_bytes()),
        Some(p) => {
            if format == OutputFormat::Csv {
                write_atomic(&sibling(p, ".config"), &render_config(report))?;
            }
            write_atomic(p, &body)
        }
    }
}
