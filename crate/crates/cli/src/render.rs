use serde_json::{Map, Number, Value};

pub const SIG_DIGITS: usize = 12;

/// Round to `SIG_DIGITS` significant digits, then print the shortest
/// decimal that round-trips the rounded value.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIG_DIGITS - 1, v).parse().unwrap_or(v)
}

pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{}", round_sig(v))
    }
}

/// Apply [`round_sig`] to every float in a JSON tree.
pub fn rounded(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(rounded).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, rounded(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

pub fn json(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&rounded(v)).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn cell(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), fmt_num),
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => rounded(other.clone()).to_string(),
    }
}

/// Two-column key/value table of the scalar fields of an object, in order.
pub fn key_values(fields: &[(&str, Value)]) -> String {
    let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    fields.iter().map(|(k, v)| format!("{k:<width$}  {}\n", cell(v))).collect()
}

/// Column-aligned grid; `rows` hold one value per header.
pub fn grid(headers: &[&str], rows: &[Vec<Value>]) -> String {
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(cell).collect()).collect();
    let widths: Vec<usize> = headers
        .iter()
        .enumerate()
        .map(|(c, h)| cells.iter().map(|r| r[c].len()).chain([h.len()]).max().unwrap_or(0))
        .collect();
    let line = |items: Vec<&str>| -> String {
        let parts: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        let mut l = parts.join("  ").trim_end().to_string();
        l.push('\n');
        l
    };
    let mut out = line(headers.to_vec());
    for r in &cells {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}
