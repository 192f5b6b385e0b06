//! JSON envelope and CSV rendering.

use serde_json::{json, Value};

use crate::commands::{Cell, Outcome, RunError, Table};
use crate::config::{Command, Params};

pub const SCHEMA: &str = "arrowgap/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn envelope(command: Option<Command>, params: &Params) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("tool_version".into(), json!(TOOL_VERSION));
    m.insert(
        "command".into(),
        command.map_or(Value::Null, |c| json!(c.as_str())),
    );
    m.insert("inputs".into(), Value::Object(params.0.clone()));
    m
}

pub fn success_json(command: Command, params: &Params, outcome: &Outcome) -> String {
    let mut m = envelope(Some(command), params);
    m.insert("results".into(), outcome.results.clone());
    m.insert("diagnostics".into(), outcome.diagnostics.clone());
    pretty(m)
}

pub fn error_json(command: Option<Command>, params: &Params, error: &RunError) -> String {
    let mut m = envelope(command, params);
    m.insert("error".into(), error.to_json());
    pretty(m)
}

fn pretty(m: serde_json::Map<String, Value>) -> String {
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).unwrap_or_default();
    s.push('\n');
    s
}

/// Six significant digits, shortest form.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    let plain = format!("{rounded}");
    if rounded != 0.0 && !(1e-4..1e7).contains(&rounded.abs()) {
        let e = format!("{rounded:e}");
        if e.len() < plain.len() {
            return e;
        }
    }
    plain
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv(table: &Table) -> String {
    let mut out = table
        .header
        .iter()
        .map(|h| csv_field(h))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Num(x) => sig6(*x),
                Cell::Text(t) => csv_field(t),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(std::f64::consts::FRAC_1_SQRT_2), "0.707107");
        assert_eq!(sig6(2.5415), "2.5415");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1234567.0), "1234570");
        assert_eq!(sig6(1.5e-12), "1.5e-12");
        assert_eq!(sig6(-0.25), "-0.25");
    }

    #[test]
    fn csv_quotes_text() {
        let t = Table {
            header: vec!["a".into(), "b".into()],
            rows: vec![vec![Cell::Num(1.0), Cell::Text("x, y".into())]],
        };
        assert_eq!(csv(&t), "a,b\n1,\"x, y\"\n");
    }
}
