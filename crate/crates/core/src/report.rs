//! Deterministic text serialization for CSV data files and JSON summaries.
//!
//! Floats are written with 17 significant digits (`.` decimal, LF endings),
//! which round-trips f64 exactly; identical inputs therefore produce
//! byte-identical files.

use crate::cplx::C64;

/// One f64 with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Append one CSV row of f64 fields to `out`, LF-terminated.
pub fn push_row(out: &mut String, fields: &[f64]) {
    for (i, v) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

/// Append the header row.
pub fn push_header(out: &mut String, names: &[&str]) {
    out.push_str(&names.join(","));
    out.push('\n');
}

/// JSON object fragment for a complex value.
pub fn json_complex(z: C64) -> serde_json::Value {
    serde_json::json!({ "re": z.re, "im": z.im })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips_f64() {
        for &x in &[0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, -0.0] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn rows_are_lf_terminated() {
        let mut s = String::new();
        push_header(&mut s, &["a", "b"]);
        push_row(&mut s, &[1.0, 2.0]);
        assert!(s.ends_with('\n'));
        assert!(!s.contains('\r'));
        assert_eq!(s.lines().count(), 2);
    }
}
