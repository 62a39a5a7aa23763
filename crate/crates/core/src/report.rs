//! Canonical JSON: sorted keys, two-space indentation, and floats printed
//! with six significant digits so that reports are byte-stable.

use serde::Serialize;
use serde_json::Value;

/// `%#.6g`: six significant digits, trailing zeros kept.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.00000" } else { "0.00000" }.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let mut s = format!("{:.*}", (5 - exp) as usize, x);
        if !s.contains('.') {
            s.push('.');
        }
        s
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn write(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => {
                // JSON forbids a bare trailing point.
                let s = format_float(f);
                out.push_str(&s);
                if s.ends_with('.') {
                    out.push('0');
                }
            }
            _ => out.push_str(&n.to_string()),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("strings serialize"));
                out.push_str(": ");
                write(&map[*k], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write(v, 0, &mut out);
    out.push('\n');
    out
}

pub fn to_canonical_json<T: Serialize + ?Sized>(t: &T) -> Result<String, serde_json::Error> {
    Ok(canonical_json(&serde_json::to_value(t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_float(0.3), "0.300000");
        assert_eq!(format_float(27.3), "27.3000");
        assert_eq!(format_float(1.0), "1.00000");
        assert_eq!(format_float(0.0), "0.00000");
        assert_eq!(format_float(123456.0), "123456.");
        assert_eq!(format_float(1234567.0), "1.23457e+06");
        assert_eq!(format_float(0.0001234), "0.000123400");
        assert_eq!(format_float(0.00001234), "1.23400e-05");
        assert_eq!(format_float(-2.5), "-2.50000");
        assert_eq!(format_float(999999.5), "1.00000e+06");
    }

    #[test]
    fn keys_sorted_and_integers_plain() {
        let v = json!({"b": 1, "a": [0.5, {"z": null, "y": true}], "c": "x\"y"});
        let s = canonical_json(&v);
        assert_eq!(
            s,
            "{\n  \"a\": [\n    0.500000,\n    {\n      \"y\": true,\n      \"z\": null\n    }\n  ],\n  \"b\": 1,\n  \"c\": \"x\\\"y\"\n}\n"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"], 1);
    }

    #[test]
    fn output_always_parses() {
        for x in [123456.0, 1e-9, 1e300, -0.0, f64::NAN, 0.1] {
            let s = canonical_json(&json!([x]));
            assert!(serde_json::from_str::<Value>(&s).is_ok(), "{s}");
        }
        assert_eq!(canonical_json(&json!(123456.0)), "123456.0\n");
    }
}
