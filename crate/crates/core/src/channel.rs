//! Shared radio medium modeled by airtime accounting.
//!
//! There is no contention, collision or loss: a transmission occupies the
//! medium for its airtime and is delivered to every vehicle inside the sensing
//! range. Each vehicle keeps its own CBR ledger of heard-busy and
//! own-transmission intervals.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geo::{Geometry, Position};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Bits per second on air.
    pub data_rate_bps: f64,
    /// Fixed per-message channel time (preamble, inter-frame spacing), seconds.
    pub per_message_overhead_s: f64,
    /// Lower-layer header bytes added to every message.
    pub header_bytes: u32,
    pub sensing_range_m: f64,
    pub cbr_window_s: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            data_rate_bps: 6_000_000.0,
            per_message_overhead_s: 40e-6,
            header_bytes: 60,
            sensing_range_m: 700.0,
            cbr_window_s: 0.2,
        }
    }
}

/// Channel time in seconds taken by one message of `size` payload bytes.
pub fn airtime_of(size: u32, params: &ChannelParams) -> f64 {
    params.per_message_overhead_s
        + 8.0 * f64::from(size + params.header_bytes) / params.data_rate_bps
}

/// One on-air message.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub source: usize,
    pub start: SimTime,
    pub airtime: SimTime,
    pub size: u32,
    pub priority: u32,
    pub position: Position,
}

impl Transmission {
    pub fn end(&self) -> SimTime {
        self.start + self.airtime
    }
}

/// Per-vehicle record of busy time inside the trailing CBR window.
#[derive(Debug, Clone)]
pub struct CbrWindow {
    window: SimTime,
    heard: VecDeque<(SimTime, SimTime)>,
    own: VecDeque<(SimTime, SimTime)>,
}

impl CbrWindow {
    pub fn new(window: SimTime) -> Self {
        assert!(window > SimTime::ZERO, "CBR window must be positive");
        CbrWindow {
            window,
            heard: VecDeque::new(),
            own: VecDeque::new(),
        }
    }

    /// Intervals must be logged in non-decreasing start order.
    pub fn log_heard(&mut self, start: SimTime, end: SimTime) {
        debug_assert!(self.heard.back().is_none_or(|&(s, _)| s <= start));
        self.heard.push_back((start, end));
    }

    pub fn log_own(&mut self, start: SimTime, end: SimTime) {
        debug_assert!(self.own.back().is_none_or(|&(s, _)| s <= start));
        self.own.push_back((start, end));
    }

    fn evict(&mut self, from: SimTime) {
        // Intervals are start-ordered but may have different lengths, so an old
        // long interval can outlive a newer short one; only pop from the front
        // when the front has fully expired.
        while self.heard.front().is_some_and(|&(_, e)| e <= from) {
            self.heard.pop_front();
        }
        while self.own.front().is_some_and(|&(_, e)| e <= from) {
            self.own.pop_front();
        }
    }

    /// Channel busy ratio over `[now - window, now]`.
    ///
    /// Heard intervals are unioned; own transmission time is added on top.
    pub fn measure(&mut self, now: SimTime) -> f64 {
        let from = now.saturating_sub(self.window);
        self.evict(from);

        let clip = |&(s, e): &(SimTime, SimTime)| -> Option<(u64, u64)> {
            let s = s.max(from).as_nanos();
            let e = e.min(now).as_nanos();
            (e > s).then_some((s, e))
        };

        let mut heard_ns: u64 = 0;
        let mut current: Option<(u64, u64)> = None;
        for (s, e) in self.heard.iter().filter_map(clip) {
            match current {
                Some((cs, ce)) if s <= ce => current = Some((cs, ce.max(e))),
                Some((cs, ce)) => {
                    heard_ns += ce - cs;
                    current = Some((s, e));
                }
                None => current = Some((s, e)),
            }
        }
        if let Some((cs, ce)) = current {
            heard_ns += ce - cs;
        }

        let own_ns: u64 = self.own.iter().filter_map(clip).map(|(s, e)| e - s).sum();

        let busy = (heard_ns + own_ns) as f64 / self.window.as_nanos() as f64;
        busy.clamp(0.0, 1.0)
    }
}

/// The medium: geometry plus one CBR ledger per vehicle.
#[derive(Debug, Clone)]
pub struct Channel {
    pub params: ChannelParams,
    pub geometry: Geometry,
    ledgers: Vec<CbrWindow>,
}

impl Channel {
    pub fn new(params: ChannelParams, geometry: Geometry, vehicles: usize) -> Self {
        let window = SimTime::from_secs(params.cbr_window_s);
        Channel {
            params,
            geometry,
            ledgers: vec![CbrWindow::new(window); vehicles],
        }
    }

    pub fn airtime(&self, size: u32) -> SimTime {
        SimTime::from_secs(airtime_of(size, &self.params))
    }

    /// Delivers `tx` to every vehicle within sensing range and charges the
    /// busy time to the receivers' and the source's ledgers.
    ///
    /// `positions` is indexed by vehicle id and must be current at `tx.start`.
    pub fn broadcast(&mut self, tx: &Transmission, positions: &[Position]) -> Vec<usize> {
        let end = tx.end();
        let mut delivered = Vec::new();
        for (id, pos) in positions.iter().enumerate() {
            if id == tx.source {
                continue;
            }
            if self.geometry.distance(&tx.position, pos) <= self.params.sensing_range_m {
                self.ledgers[id].log_heard(tx.start, end);
                delivered.push(id);
            }
        }
        self.ledgers[tx.source].log_own(tx.start, end);
        delivered
    }

    pub fn measure_cbr(&mut self, vehicle: usize, now: SimTime) -> f64 {
        self.ledgers[vehicle].measure(now)
    }
}
