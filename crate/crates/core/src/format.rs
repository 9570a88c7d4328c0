//! Round-trip number formatting shared by every file writer.

/// 17 significant digits, lowercase scientific notation.
pub fn sci17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}
