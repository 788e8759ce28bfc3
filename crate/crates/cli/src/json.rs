//! Pretty JSON with a fixed float format: 17 significant digits, lowercase exponent.

use serde::Serialize;
use serde_json::Value;

/// `{:.16e}`; non-finite values have no JSON form and become `null`.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

pub fn to_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(indent + 2, out);
                write_value(item, indent + 2, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(indent + 2, out);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(item, indent + 2, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_roundtrip_bit_exactly() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, -0.0, 1.0, f64::MAX] {
            let s = format_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
            let json: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(json.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn lowercase_exponent_and_seventeen_digits() {
        assert_eq!(format_f64(-0.25), "-2.5000000000000000e-1");
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn integers_stay_integers_and_output_parses() {
        #[derive(Serialize)]
        struct S {
            n: usize,
            x: f64,
            bad: f64,
            v: Vec<f64>,
        }
        let s = to_string(&S { n: 3, x: 2.0, bad: f64::NAN, v: vec![] }).unwrap();
        assert!(s.contains("\"n\": 3,"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(2.0));
        assert!(back["bad"].is_null());
    }
}
