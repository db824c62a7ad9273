//! JSON output with every float written to 17 significant digits.
//!
//! `serde_json` prints the shortest round-tripping form; reports instead use
//! a fixed `{:.16e}` layout so that diffs between runs are column-stable.
//! Non-finite floats become `null`.

use serde::Serialize;
use serde_json::Value;

use crate::error::{CtError, Result};

pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_value(v: &Value, out: &mut String, depth: usize, pretty: bool) {
    let newline = |out: &mut String, d: usize| {
        if pretty {
            out.push('\n');
            out.extend(std::iter::repeat_n("  ", d));
        }
    };
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
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                write_value(item, out, depth + 1, pretty);
            }
            newline(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                if pretty {
                    out.push(' ');
                }
                write_value(item, out, depth + 1, pretty);
            }
            newline(out, depth);
            out.push('}');
        }
    }
}

pub fn to_value<T: Serialize + ?Sized>(value: &T) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| CtError::Config(format!("serialization failed: {e}")))
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = String::new();
    write_value(&to_value(value)?, &mut out, 0, false);
    Ok(out)
}

pub fn to_string_pretty<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = String::new();
    write_value(&to_value(value)?, &mut out, 0, true);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn floats_get_17_digits() {
        let s = to_string(&json!({"a": 0.1, "b": [1, f64::NAN], "c": "x\"y"})).unwrap();
        assert_eq!(s, r#"{"a":1.0000000000000001e-1,"b":[1,null],"c":"x\"y"}"#);
        assert_eq!(to_string(&f64::INFINITY).unwrap(), "null");
        let pretty = to_string_pretty(&json!({"k": [0.5]})).unwrap();
        assert_eq!(pretty, "{\n  \"k\": [\n    5.0000000000000000e-1\n  ]\n}");
    }

    proptest! {
        #[test]
        fn output_parses_back_exactly(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = to_string(&json!({"v": x, "w": [x, -x]})).unwrap();
            let back: Value = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back["v"].as_f64().unwrap(), x);
            prop_assert_eq!(back["w"][1].as_f64().unwrap(), -x);
        }
    }
}
