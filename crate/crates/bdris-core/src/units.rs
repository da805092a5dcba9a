//! dB/dBm conversions, centralized so every module agrees on them.

/// Converts a power in dBm to watts: `x dBm = 10^((x-30)/10) W`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a dimensionless gain in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-24);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
        assert!((db_to_linear(-70.0) - 1e-7).abs() < 1e-19);
        assert!((linear_to_db(100.0) - 20.0).abs() < 1e-12);
    }
}
