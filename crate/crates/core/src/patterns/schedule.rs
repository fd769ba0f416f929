//! Temporal profiles: burst and periodic schedules over integer seconds.

use rand::Rng;

use super::PatternError;
use crate::rng::RngStream;

/// `n` jittered timestamps anchored at `t0`, all within `window` seconds of
/// each other. The first timestamp is exactly `t0`; spacing is random, not
/// mechanical.
pub fn schedule_burst(
    n: usize,
    window: i64,
    t0: i64,
    rng: &mut RngStream,
) -> Result<Vec<i64>, PatternError> {
    if n == 0 {
        return Err(PatternError::InvalidWindow(
            "burst needs at least one event".into(),
        ));
    }
    if window <= 0 {
        return Err(PatternError::InvalidWindow(format!(
            "window {window}s must be positive"
        )));
    }
    if n == 1 {
        return Ok(vec![t0]);
    }
    let mut offsets: Vec<i64> = Vec::with_capacity(n);
    offsets.push(0);
    for _ in 1..n {
        offsets.push(rng.random_range(0..=window));
    }
    offsets.sort_unstable();
    Ok(offsets.into_iter().map(|o| t0 + o).collect())
}

/// `n` timestamps starting at `t0` with consecutive gaps of
/// `period ± epsilon` seconds.
pub fn schedule_periodic(
    n: usize,
    period: i64,
    epsilon: i64,
    t0: i64,
    rng: &mut RngStream,
) -> Result<Vec<i64>, PatternError> {
    if n == 0 {
        return Err(PatternError::InvalidPeriod(
            "periodic needs at least one event".into(),
        ));
    }
    if !(period > epsilon && epsilon >= 0) {
        return Err(PatternError::InvalidPeriod(format!(
            "need period > epsilon >= 0, got period {period}s epsilon {epsilon}s"
        )));
    }
    let mut times = Vec::with_capacity(n);
    let mut t = t0;
    times.push(t);
    for _ in 1..n {
        let jitter = if epsilon == 0 {
            0
        } else {
            rng.random_range(-epsilon..=epsilon)
        };
        t += period + jitter;
        times.push(t);
    }
    Ok(times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    fn rng() -> RngStream {
        SeedTree::new(11).stream("schedule-tests")
    }

    #[test]
    fn burst_single_event_is_t0() {
        let out = schedule_burst(1, 3600, 1_000, &mut rng()).unwrap();
        assert_eq!(out, vec![1_000]);
    }

    #[test]
    fn burst_span_within_window() {
        let out = schedule_burst(5, 86_400, 50_000, &mut rng()).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.windows(2).all(|w| w[0] <= w[1]));
        assert!(out.last().unwrap() - out.first().unwrap() <= 86_400);
    }

    #[test]
    fn burst_is_deterministic() {
        let tree = SeedTree::new(3);
        let a = schedule_burst(100, 3_600, 0, &mut tree.stream("b")).unwrap();
        let b = schedule_burst(100, 3_600, 0, &mut tree.stream("b")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn burst_spacing_is_jittered() {
        let out = schedule_burst(50, 86_400, 0, &mut rng()).unwrap();
        let gaps: Vec<i64> = out.windows(2).map(|w| w[1] - w[0]).collect();
        let distinct: std::collections::BTreeSet<i64> = gaps.iter().copied().collect();
        assert!(distinct.len() > 1, "gaps must not be mechanically equal");
    }

    #[test]
    fn burst_rejects_bad_window() {
        assert!(schedule_burst(3, 0, 0, &mut rng()).is_err());
    }

    #[test]
    fn periodic_zero_epsilon_is_exact() {
        let day = 86_400;
        let out = schedule_periodic(4, 7 * day, 0, 1_000, &mut rng()).unwrap();
        assert_eq!(
            out,
            vec![1_000, 1_000 + 7 * day, 1_000 + 14 * day, 1_000 + 21 * day]
        );
    }

    #[test]
    fn periodic_gaps_within_epsilon() {
        let day = 86_400;
        let eps = 6 * 3600;
        let out = schedule_periodic(10, 7 * day, eps, 0, &mut rng()).unwrap();
        for w in out.windows(2) {
            let gap = w[1] - w[0];
            assert!((gap - 7 * day).abs() <= eps, "gap {gap}");
        }
    }

    #[test]
    fn periodic_single_event() {
        let out = schedule_periodic(1, 3_600, 60, 42, &mut rng()).unwrap();
        assert_eq!(out, vec![42]);
    }

    #[test]
    fn periodic_rejects_epsilon_at_period() {
        assert!(schedule_periodic(3, 100, 100, 0, &mut rng()).is_err());
    }
}
