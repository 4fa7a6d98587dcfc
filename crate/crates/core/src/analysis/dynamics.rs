use super::AnalysisConfig;

/// Maps a level in dBFS linearly onto `[0, 100]` between `min_db` and `max_db`.
pub fn dynamics_percent(db: f64, cfg: &AnalysisConfig) -> f64 {
    let pct = 100.0 * (db - cfg.min_db) / (cfg.max_db - cfg.min_db);
    if pct.is_nan() {
        return 0.0;
    }
    pct.clamp(0.0, 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_and_midpoint() {
        let cfg = AnalysisConfig::default();
        assert_eq!(dynamics_percent(-60.0, &cfg), 0.0);
        assert_eq!(dynamics_percent(0.0, &cfg), 100.0);
        assert_eq!(dynamics_percent(-30.0, &cfg), 50.0);
        assert_eq!(dynamics_percent(-120.0, &cfg), 0.0);
        assert_eq!(dynamics_percent(6.0, &cfg), 100.0);
    }

    proptest! {
        #[test]
        fn monotone_and_clamp_idempotent(a in -200.0f64..50.0, b in -200.0f64..50.0) {
            let cfg = AnalysisConfig::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(dynamics_percent(lo, &cfg) <= dynamics_percent(hi, &cfg));
            let p = dynamics_percent(a, &cfg);
            prop_assert!((0.0..=100.0).contains(&p));
            // feeding the clamped level back in changes nothing
            let db = cfg.min_db + p / 100.0 * (cfg.max_db - cfg.min_db);
            prop_assert!((dynamics_percent(db, &cfg) - p).abs() < 1e-9);
        }
    }
}
