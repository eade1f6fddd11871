//! Number formatting shared by the CSV and JSON writers.

use serde::Serializer;

/// Shortest round-trip text for `x`; exponent form outside `[1e-4, 1e15)`,
/// and `inf`, `-inf`, `nan` for non-finite values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// JSON numbers for finite values, the strings `"inf"`, `"-inf"`, `"nan"`
/// otherwise.
pub(crate) fn json_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&num(*x))
    }
}

pub(crate) fn json_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => json_f64(v, s),
        None => s.serialize_none(),
    }
}
