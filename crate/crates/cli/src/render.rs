use std::path::Path;

use probserial::{EatingTrace, Horizon, IncentiveRatio, Rational};
use serde_json::{json, Value};

use crate::Failure;

/// Exact value followed by a short decimal, e.g. `3/4 (0.75)`.
pub fn show(x: &Rational) -> String {
    if x.denom() == 1.into() {
        return x.to_string();
    }
    let d = x.to_decimal(6);
    let d = if d.contains('.') { d.trim_end_matches('0').trim_end_matches('.') } else { &d };
    format!("{x} ({d})")
}

pub fn show_horizon(h: &Horizon) -> String {
    match h {
        Horizon::At(t) => show(t),
        Horizon::Never => "never".to_string(),
    }
}

pub fn show_ratio(r: &IncentiveRatio) -> String {
    match r {
        IncentiveRatio::Finite(x) => show(x),
        IncentiveRatio::Unbounded => "unbounded".to_string(),
    }
}

pub fn trace_text(trace: &EatingTrace) -> String {
    let cells: Vec<Vec<String>> = trace.allocation.iter().map(|row| row.iter().map(show).collect()).collect();
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
    let mut s = format!("n = {}, m = {}\nallocation (row = agent, column = item):\n", trace.n, trace.m);
    for (i, row) in cells.iter().enumerate() {
        let row: Vec<String> = row.iter().map(|c| format!("{c:<width$}")).collect();
        s += &format!("  {i}: {}\n", row.join("  ").trim_end());
    }
    s += "depletion times:\n";
    for (j, h) in trace.depletion.iter().enumerate() {
        s += &format!("  item {j}: {}\n", show_horizon(h));
    }
    s
}

/// Provenance recorded in every artifact. The worker count and output path
/// are left out so that artifacts do not depend on them.
pub struct Meta {
    pub json: Value,
}

fn command_line() -> String {
    let mut out = vec!["probserial".to_string()];
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--workers" || a == "--out" {
            args.next();
        } else if a == "-q" || a == "--quiet" {
            continue;
        } else if !a.starts_with("--workers=") && !a.starts_with("--out=") {
            out.push(a);
        }
    }
    out.join(" ")
}

pub fn meta(subcommand: &str, seed: u64) -> Meta {
    Meta {
        json: json!({
            "tool": "probserial",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "command": command_line(),
            "seed": seed,
        }),
    }
}

impl Meta {
    pub fn header_lines(&self) -> Vec<String> {
        vec![
            format!("probserial {}", self.json["version"].as_str().unwrap_or_default()),
            format!("command: {}", self.json["command"].as_str().unwrap_or_default()),
            format!("seed: {}", self.json["seed"]),
        ]
    }

    pub fn comment_header(&self) -> String {
        self.header_lines().iter().map(|l| format!("# {l}\n")).collect()
    }
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
