//! Virtual time. Everything runs on integer milliseconds so that logged
//! times round-trip exactly through the six-decimal text format.

pub const DAY_S: u64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VirtualClock {
    now_ms: u64,
}

impl VirtualClock {
    pub fn at_ms(now_ms: u64) -> Self {
        Self { now_ms }
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    pub fn now_s(&self) -> f64 {
        ms_to_s(self.now_ms)
    }

    pub fn advance_ms(&mut self, ms: u64) {
        self.now_ms += ms;
    }

    /// Moves forward to `t_ms`; never moves backwards.
    pub fn advance_to_ms(&mut self, t_ms: u64) {
        self.now_ms = self.now_ms.max(t_ms);
    }
}

pub fn ms_to_s(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

pub fn s_to_ms(s: f64) -> u64 {
    (s * 1000.0).round() as u64
}

/// When daily sessions happen.
///
/// Seeding runs on day 0, the agent then waits `wait_days`, and interaction
/// day `d` (1-based) opens at `session_offset_s` into absolute day
/// `d + wait_days`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionSchedule {
    pub session_offset_s: u64,
    pub wait_days: u64,
}

impl Default for SessionSchedule {
    fn default() -> Self {
        Self {
            session_offset_s: 12 * 3600,
            wait_days: 1,
        }
    }
}

impl SessionSchedule {
    pub fn seed_start_ms(&self) -> u64 {
        self.session_offset_s * 1000
    }

    pub fn session_start_ms(&self, day: u32) -> u64 {
        ((u64::from(day) + self.wait_days) * DAY_S + self.session_offset_s) * 1000
    }

    pub fn session_start_s(&self, day: u32) -> f64 {
        ms_to_s(self.session_start_ms(day))
    }
}
