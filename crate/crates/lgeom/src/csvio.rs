//! CSV output helpers: every numeric column is printed with 12 significant
//! digits, so a fixed configuration and seed reproduces byte-identical files.

/// 12 significant digits, scientific notation.
pub fn sig12(v: f64) -> String {
    if v == 0.0 {
        // Normalize -0.0 so outputs do not depend on rounding direction.
        return "0.00000000000e0".into();
    }
    format!("{:.11e}", v)
}

/// Versioned schema comment placed on the first line of every CSV.
pub fn schema_line(name: &str) -> String {
    format!("# lgeom {} v1", name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(1.0), "1.00000000000e0");
        assert_eq!(sig12(-0.0), "0.00000000000e0");
        assert_eq!(sig12(std::f64::consts::PI), "3.14159265359e0");
        assert_eq!(sig12(0.001234567890123), "1.23456789012e-3");
    }
}
