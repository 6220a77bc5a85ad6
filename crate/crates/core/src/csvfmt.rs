//! Deterministic CSV number formatting: 6 significant digits in
//! scientific notation, so identical runs emit byte-identical files.

pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        // Avoid the -0.00000e0 / 0.00000e0 split.
        return "0.00000e0".to_string();
    }
    format!("{v:.5e}")
}
