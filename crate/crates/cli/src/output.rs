//! Rendering helpers shared by the subcommands.

use std::io::{self, Write};

use clap::ValueEnum;
use pslab::{Assignment, LinearOrder, Rational};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputMode {
    Human,
    Json,
    Csv,
}

/// Decimal convenience value for `--approx`.
pub fn approx(x: &Rational) -> Value {
    json!(x.to_f64())
}

pub fn rational(x: &Rational) -> Value {
    Value::String(x.to_string())
}

pub fn rationals(xs: &[Rational]) -> Value {
    Value::Array(xs.iter().map(rational).collect())
}

pub fn matrix(a: &Assignment) -> Value {
    Value::Array(a.rows().map(rationals).collect())
}

pub fn approx_matrix(a: &Assignment) -> Value {
    Value::Array(
        a.rows()
            .map(|r| Value::Array(r.iter().map(approx).collect()))
            .collect(),
    )
}

pub fn order(o: &LinearOrder) -> Value {
    json!(o.ranking())
}

pub fn profile(p: &[LinearOrder]) -> Value {
    Value::Array(p.iter().map(order).collect())
}

/// Indented JSON that keeps arrays of scalars on one line.
pub fn pretty(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().all(|x| !x.is_array() && !x.is_object()),
        Value::Object(_) => false,
        _ => true,
    }
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth + 1);
    match v {
        Value::Array(items) if !items.is_empty() && !is_flat(v) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad);
                write_value(out, item, depth + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(depth));
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, depth + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(depth));
            out.push('}');
        }
        Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(Value::to_string).collect();
            out.push('[');
            out.push_str(&inner.join(", "));
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

pub fn print_json(v: &Value) -> io::Result<()> {
    io::stdout().lock().write_all(pretty(v).as_bytes())
}

pub fn csv_writer() -> csv::Writer<io::Stdout> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(io::stdout())
}

/// Matrix rendered with decimals, for human output under `--approx`.
pub fn decimal_matrix(a: &Assignment) -> String {
    let cells: Vec<Vec<String>> = a
        .rows()
        .map(|r| r.iter().map(|x| x.to_decimal(4)).collect())
        .collect();
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(0);
    cells
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| format!("{c:>width$}"))
                .collect::<Vec<_>>()
                .join("  ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}
