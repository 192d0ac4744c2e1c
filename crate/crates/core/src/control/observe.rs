use std::collections::BTreeMap;

/// Priorities heard from neighbors over a trailing time window.
///
/// Only the most recent hearing time per priority is kept, which answers
/// "is anything of priority p active within the window" exactly while staying
/// bounded by the number of distinct priorities.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityObservation {
    window_length: f64,
    last_heard: BTreeMap<u32, f64>,
}

impl PriorityObservation {
    pub fn new(window_length: f64) -> Self {
        PriorityObservation {
            window_length,
            last_heard: BTreeMap::new(),
        }
    }

    pub fn window_length(&self) -> f64 {
        self.window_length
    }

    pub fn record(&mut self, time: f64, priority: u32) {
        let t = self.last_heard.entry(priority).or_insert(time);
        if time > *t {
            *t = time;
        }
    }

    /// Drops observations older than `now - window_length`.
    pub fn evict(&mut self, now: f64) {
        let cutoff = now - self.window_length;
        self.last_heard.retain(|_, &mut t| t >= cutoff);
    }

    /// Numerically largest (i.e. least important) priority heard within the window.
    pub fn lowest_active_priority(&mut self, now: f64) -> Option<u32> {
        self.evict(now);
        self.last_heard.keys().next_back().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_priority_is_max_value() {
        let mut o = PriorityObservation::new(1.0);
        o.record(9.5, 0);
        o.record(9.8, 2);
        assert_eq!(o.lowest_active_priority(10.0), Some(2));
    }

    #[test]
    fn empty_window() {
        let mut o = PriorityObservation::new(1.0);
        assert_eq!(o.lowest_active_priority(3.0), None);
    }

    #[test]
    fn stale_observations_evicted() {
        let mut o = PriorityObservation::new(1.0);
        o.record(8.0, 1);
        assert_eq!(o.lowest_active_priority(10.0), None);
    }

    #[test]
    fn refreshed_priority_stays_active() {
        let mut o = PriorityObservation::new(1.0);
        o.record(1.0, 3);
        o.record(1.0, 0);
        o.record(2.5, 0);
        assert_eq!(o.lowest_active_priority(2.6), Some(0));
    }
}
