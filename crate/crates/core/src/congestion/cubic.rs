//! CUBIC window arithmetic, in packets and seconds.

use serde::{Deserialize, Serialize};

pub const CUBIC_C: f64 = 0.4;
pub const CUBIC_BETA: f64 = 0.7;

/// Time from an epoch start until the window is back at `w_max`.
pub fn cubic_k(w_max: f64, cwnd_at_epoch: f64) -> f64 {
    ((w_max - cwnd_at_epoch).max(0.0) / CUBIC_C).cbrt()
}

/// W(t) = C (t - K)^3 + W_max
pub fn cubic_window(w_max: f64, k: f64, t_s: f64) -> f64 {
    CUBIC_C * (t_s - k).powi(3) + w_max
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cubic {
    /// Congestion window in packets.
    pub cwnd: f64,
    pub ssthresh: f64,
    pub w_max: f64,
    pub k: f64,
    /// Start of the current avoidance epoch (ms).
    pub epoch_start: Option<f64>,
    /// Reno-equivalent window for the TCP-friendly region.
    w_est: f64,
}

impl Cubic {
    pub fn new(init_cwnd: f64) -> Self {
        Self { cwnd: init_cwnd, ssthresh: f64::INFINITY, w_max: 0.0, k: 0.0, epoch_start: None, w_est: init_cwnd }
    }

    pub fn in_slow_start(&self) -> bool {
        self.cwnd < self.ssthresh
    }

    /// One packet acknowledged at `now_ms`; `min_rtt_ms` is the flow's smallest RTT sample.
    pub fn on_ack(&mut self, now_ms: f64, min_rtt_ms: f64) {
        if self.in_slow_start() {
            self.cwnd += 1.0;
            return;
        }
        let start = *self.epoch_start.get_or_insert_with(|| {
            if self.cwnd < self.w_max {
                self.k = cubic_k(self.w_max, self.cwnd);
            } else {
                self.k = 0.0;
                self.w_max = self.cwnd;
            }
            self.w_est = self.cwnd;
            now_ms
        });
        let t = (now_ms - start + min_rtt_ms) / 1e3;
        let target = cubic_window(self.w_max, self.k, t).clamp(self.cwnd, 1.5 * self.cwnd);
        self.w_est += 3.0 * (1.0 - CUBIC_BETA) / (1.0 + CUBIC_BETA) / self.cwnd;
        if target > self.cwnd {
            self.cwnd += (target - self.cwnd) / self.cwnd;
        } else {
            self.cwnd += 0.01 / self.cwnd;
        }
        // TCP-friendly region
        self.cwnd = self.cwnd.max(self.w_est);
    }

    /// Congestion event detected through loss.
    pub fn on_loss(&mut self) {
        self.w_max = self.cwnd;
        self.cwnd = (self.cwnd * CUBIC_BETA).max(2.0);
        self.ssthresh = self.cwnd;
        self.epoch_start = None;
    }

    pub fn on_timeout(&mut self) {
        self.w_max = self.cwnd;
        self.ssthresh = (self.cwnd * CUBIC_BETA).max(2.0);
        self.cwnd = 1.0;
        self.epoch_start = None;
    }
}
