use std::collections::VecDeque;

use crate::time::SimTime;

/// Unconstrained demand seen over the trailing window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DemandEstimate {
    /// bits/s including per-message lower-layer headers.
    pub rate_bps: f64,
    /// bits/s of application payload only.
    pub payload_rate_bps: f64,
    pub messages_per_s: f64,
    pub avg_payload_bytes: f64,
}

/// Tracks what a service's unconstrained (shadow) generator produced, or
/// would have produced, over the last `window`.
#[derive(Debug, Clone)]
pub struct DemandEstimator {
    window: SimTime,
    start: SimTime,
    header_bytes: u32,
    log: VecDeque<(SimTime, u32)>,
}

impl DemandEstimator {
    pub fn new(window: SimTime, start: SimTime, header_bytes: u32) -> Self {
        DemandEstimator {
            window,
            start,
            header_bytes,
            log: VecDeque::new(),
        }
    }

    pub fn record(&mut self, time: SimTime, payload_bytes: u32) {
        self.log.push_back((time, payload_bytes));
    }

    /// Demand over `(now - window, now]`. Before a full window has elapsed
    /// the totals are divided by the elapsed time instead.
    pub fn estimate(&mut self, now: SimTime) -> DemandEstimate {
        // Until a full window has elapsed everything since `start` counts.
        if now >= self.start + self.window {
            let cutoff = now - self.window;
            while self.log.front().is_some_and(|&(t, _)| t <= cutoff) {
                self.log.pop_front();
            }
        }
        let span = now.saturating_sub(self.start).min(self.window).as_secs();
        if span <= 0.0 {
            return DemandEstimate::default();
        }

        let (mut n, mut bytes) = (0u64, 0u64);
        for &(t, size) in &self.log {
            if t > now {
                break;
            }
            n += 1;
            bytes += u64::from(size);
        }
        let payload_bits = 8.0 * bytes as f64;
        let header_bits = 8.0 * f64::from(self.header_bytes) * n as f64;
        DemandEstimate {
            rate_bps: (payload_bits + header_bits) / span,
            payload_rate_bps: payload_bits / span,
            messages_per_s: n as f64 / span,
            avg_payload_bytes: if n > 0 { bytes as f64 / n as f64 } else { 0.0 },
        }
    }
}
