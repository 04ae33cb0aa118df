//! Deterministic JSON and CSV rendering.
//!
//! Floats are printed with 17 significant digits in exponent notation so
//! that values survive a parse round trip bit for bit; infinities and NaN
//! become the quoted strings `"inf"`, `"-inf"`, and `"nan"`. Object keys
//! keep their insertion order, which makes repeated runs byte-identical.

use poslin::Vector;

/// A JSON value with ordered object keys.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Num(f64),
    Int(i64),
    Str(String),
    Bool(bool),
    Arr(Vec<Json>),
    Obj(Vec<(&'static str, Json)>),
}

impl Json {
    /// Array of numbers from a dense vector.
    pub fn vector(u: &Vector) -> Json {
        Json::Arr(u.iter().map(|&x| Json::Num(x)).collect())
    }

    /// Array of integers from index lists.
    pub fn indices(ix: &[usize]) -> Json {
        Json::Arr(ix.iter().map(|&i| Json::Int(i as i64)).collect())
    }

    fn is_scalar(&self) -> bool {
        !matches!(self, Json::Arr(_) | Json::Obj(_))
    }
}

/// Formats a float with 17 significant digits; non-finite values become
/// quoted strings.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::from("\"nan\"")
    } else if x == f64::INFINITY {
        String::from("\"inf\"")
    } else if x == f64::NEG_INFINITY {
        String::from("\"-inf\"")
    } else {
        format!("{x:.16e}")
    }
}

/// Same digits as [`fmt_f64`] but with bare (unquoted) `inf`/`nan`
/// tokens, for CSV cells.
pub fn fmt_csv_f64(x: f64) -> String {
    if x.is_nan() {
        String::from("nan")
    } else if x == f64::INFINITY {
        String::from("inf")
    } else if x == f64::NEG_INFINITY {
        String::from("-inf")
    } else {
        format!("{x:.16e}")
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Renders a value as pretty JSON with two-space indentation and a
/// trailing newline.
pub fn render(value: &Json) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(value: &Json, indent: usize, out: &mut String) {
    match value {
        Json::Num(x) => out.push_str(&fmt_f64(*x)),
        Json::Int(i) => out.push_str(&i.to_string()),
        Json::Str(s) => out.push_str(&escape(s)),
        Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Json::Arr(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(Json::is_scalar) {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(item, indent, out);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (k, item) in items.iter().enumerate() {
                    pad(indent + 1, out);
                    write_value(item, indent + 1, out);
                    if k + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                pad(indent, out);
                out.push(']');
            }
        }
        Json::Obj(fields) => {
            if fields.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, item)) in fields.iter().enumerate() {
                pad(indent + 1, out);
                out.push_str(&escape(key));
                out.push_str(": ");
                write_value(item, indent + 1, out);
                if k + 1 < fields.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

fn pad(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}
