//! Deterministic result serialization: floats carry 17 significant digits,
//! exact rationals are `p/q` strings, JSON objects use sorted keys.

use genjulia::scalar::Q;
use num_traits::One;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Fixed float formatting: 17 significant digits, scientific.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Exact rationals as `p/q` (plain integer when the denominator is 1).
pub fn fmt_q(q: &Q) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn fmt_f64_list(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|v| Value::String(fmt_f64(*v))).collect())
}

pub fn fmt_q_list(vs: &[Q]) -> Value {
    Value::Array(vs.iter().map(|v| Value::String(fmt_q(v))).collect())
}

pub fn input_digest(raw: &[u8]) -> String {
    hex::encode(Sha256::digest(raw))
}

pub fn meta(digest: &str, precision: &str, extra: Value) -> Value {
    let mut m = json!({
        "input_digest": digest,
        "precision": precision,
    });
    if let (Value::Object(base), Value::Object(add)) = (&mut m, extra) {
        for (k, v) in add {
            base.insert(k, v);
        }
    }
    m
}

/// A result document: metadata plus the command-specific payload.
pub fn document(meta: Value, result: Value) -> String {
    let doc = json!({ "meta": meta, "result": result });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable document");
    s.push('\n');
    s
}

/// CSV with `#`-prefixed metadata comment lines before the header.
pub fn csv_document(meta_lines: &[(String, String)], header: &str, rows: &[String]) -> String {
    let mut out = String::new();
    for (k, v) in meta_lines {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_fixed_width() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(std::f64::consts::LN_2), "6.9314718055994529e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(fmt_q(&Q::new(1.into(), 2.into())), "1/2");
        assert_eq!(fmt_q(&Q::new(4.into(), 2.into())), "2");
        assert_eq!(fmt_q(&Q::new((-3).into(), 8.into())), "-3/8");
    }
}
