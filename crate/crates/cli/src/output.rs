use std::path::Path;

use avibound::report::write_json;
use avibound::Result;
use serde::Serialize;

pub const SCHEMA_VERSION: &str = "1";

/// Common wrapper of every JSON report.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: &'static str,
    pub command: &'a str,
    pub instance: Option<&'a str>,
    pub pass: bool,
    pub summary: &'a str,
    pub result: &'a T,
}

pub struct Verdict {
    pub pass: bool,
    pub summary: String,
}

/// Writes `<out>/<file>` and prints the one-line verdict.
pub fn emit<T: Serialize>(
    out: &Path,
    file: &str,
    command: &str,
    instance: Option<&str>,
    verdict: &Verdict,
    result: &T,
) -> Result<()> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        instance,
        pass: verdict.pass,
        summary: &verdict.summary,
        result,
    };
    let path = out.join(file);
    write_json(&path, &env)?;
    println!(
        "{} {command}: {} [{}]",
        if verdict.pass { "PASS" } else { "FAIL" },
        verdict.summary,
        path.display()
    );
    Ok(())
}

pub fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_scalar(*x)).collect();
    format!("[{}]", parts.join(", "))
}

/// Shortest decimal form, with signed zeros and round-off below 1e-12 cleaned.
pub fn fmt_scalar(x: f64) -> String {
    let y = if x.abs() < 1e-12 { 0.0 } else { x };
    let short = format!("{:.10}", y);
    let trimmed = short.trim_end_matches('0').trim_end_matches('.');
    if trimmed == "-0" {
        "0".into()
    } else {
        trimmed.into()
    }
}
