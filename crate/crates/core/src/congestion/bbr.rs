//! BBR v1 model state and per-ACK update. Bytes, milliseconds, bytes/ms.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub const HIGH_GAIN: f64 = 2.885; // 2 / ln 2
pub const PROBE_BW_GAINS: [f64; 8] = [1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
pub const BTLBW_WINDOW_ROUNDS: u64 = 10;
pub const RTPROP_WINDOW_MS: f64 = 10_000.0;
pub const PROBE_RTT_MS: f64 = 200.0;
pub const MIN_CWND_PACKETS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BbrPhase {
    Startup,
    Drain,
    ProbeBw,
    ProbeRtt,
}

/// What one ACK tells the sender.
#[derive(Debug, Clone, Copy)]
pub struct AckSample {
    pub now: f64,
    /// Flow total delivered bytes after this ACK.
    pub delivered: f64,
    /// Flow delivered bytes when the acked packet was sent.
    pub packet_delivered: f64,
    pub delivery_rate: Option<f64>,
    pub rtt: f64,
    pub acked: f64,
    pub lost: f64,
    /// Bytes in flight before and after this ACK.
    pub prior_inflight: f64,
    pub inflight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bbr {
    /// Propagation RTT is supplied and pinned; ProbeRTT never runs.
    pub informed: bool,
    mss: f64,
    init_cwnd: f64,
    pub phase: BbrPhase,
    pub cwnd: f64,
    pub pacing_rate: f64,
    pub pacing_gain: f64,
    pub cwnd_gain: f64,
    pub btlbw: f64,
    btlbw_filter: VecDeque<(u64, f64)>,
    pub rtprop: f64,
    pub rtprop_stamp: f64,
    rtprop_expired: bool,
    pub round_count: u64,
    next_round_delivered: f64,
    round_start: bool,
    full_bw: f64,
    full_bw_count: u32,
    pub filled_pipe: bool,
    pub cycle_index: usize,
    cycle_stamp: f64,
    probe_rtt_done_stamp: Option<f64>,
    probe_rtt_round_done: bool,
    prior_cwnd: f64,
    pub in_recovery: bool,
    packet_conservation: bool,
    pub probe_rtt_entries: u32,
}

impl Bbr {
    /// `rtprop` is the injected propagation RTT for the informed variant.
    pub fn new(mss: f64, init_cwnd_packets: f64, rtprop: Option<f64>, now: f64) -> Self {
        let init_cwnd = init_cwnd_packets * mss;
        let informed = rtprop.is_some();
        let rtprop = rtprop.unwrap_or(f64::INFINITY);
        let nominal_rtt = if rtprop.is_finite() { rtprop } else { 1.0 };
        Self {
            informed,
            mss,
            init_cwnd,
            phase: BbrPhase::Startup,
            cwnd: init_cwnd,
            pacing_rate: HIGH_GAIN * init_cwnd / nominal_rtt,
            pacing_gain: HIGH_GAIN,
            cwnd_gain: HIGH_GAIN,
            btlbw: 0.0,
            btlbw_filter: VecDeque::new(),
            rtprop,
            rtprop_stamp: now,
            rtprop_expired: false,
            round_count: 0,
            next_round_delivered: 0.0,
            round_start: false,
            full_bw: 0.0,
            full_bw_count: 0,
            filled_pipe: false,
            cycle_index: 0,
            cycle_stamp: now,
            probe_rtt_done_stamp: None,
            probe_rtt_round_done: false,
            prior_cwnd: init_cwnd,
            in_recovery: false,
            packet_conservation: false,
            probe_rtt_entries: 0,
        }
    }

    fn min_cwnd(&self) -> f64 {
        MIN_CWND_PACKETS * self.mss
    }

    fn bdp(&self, gain: f64) -> f64 {
        if self.rtprop.is_finite() && self.btlbw > 0.0 {
            gain * self.btlbw * self.rtprop
        } else {
            self.init_cwnd
        }
    }

    pub fn on_ack<R: Rng>(&mut self, s: &AckSample, rng: &mut R) {
        self.update_btlbw(s);
        self.check_cycle_phase(s);
        self.check_full_pipe();
        self.check_drain(s, rng);
        self.update_rtprop(s);
        self.check_probe_rtt(s, rng);
        self.set_pacing_rate();
        self.set_cwnd(s);
    }

    fn update_btlbw(&mut self, s: &AckSample) {
        self.round_start = false;
        if s.packet_delivered >= self.next_round_delivered {
            self.next_round_delivered = s.delivered;
            self.round_count += 1;
            self.round_start = true;
            self.packet_conservation = false;
        }
        if let Some(bw) = s.delivery_rate {
            while self.btlbw_filter.back().is_some_and(|&(_, b)| b <= bw) {
                self.btlbw_filter.pop_back();
            }
            self.btlbw_filter.push_back((self.round_count, bw));
        }
        while self.btlbw_filter.front().is_some_and(|&(r, _)| r + BTLBW_WINDOW_ROUNDS <= self.round_count) {
            self.btlbw_filter.pop_front();
        }
        self.btlbw = self.btlbw_filter.front().map_or(self.btlbw, |&(_, b)| b);
    }

    fn check_cycle_phase(&mut self, s: &AckSample) {
        if self.phase != BbrPhase::ProbeBw {
            return;
        }
        let full_length = s.now - self.cycle_stamp > self.rtprop;
        let advance = if self.pacing_gain == 1.0 {
            full_length
        } else if self.pacing_gain > 1.0 {
            full_length && (s.lost > 0.0 || s.prior_inflight >= self.bdp(self.pacing_gain))
        } else {
            full_length || s.prior_inflight <= self.bdp(1.0)
        };
        if advance {
            self.cycle_index = (self.cycle_index + 1) % PROBE_BW_GAINS.len();
            self.cycle_stamp = s.now;
            self.pacing_gain = PROBE_BW_GAINS[self.cycle_index];
        }
    }

    fn check_full_pipe(&mut self) {
        if self.filled_pipe || !self.round_start {
            return;
        }
        if self.btlbw >= self.full_bw * 1.25 {
            self.full_bw = self.btlbw;
            self.full_bw_count = 0;
            return;
        }
        self.full_bw_count += 1;
        if self.full_bw_count >= 3 {
            self.filled_pipe = true;
        }
    }

    fn enter_probe_bw<R: Rng>(&mut self, now: f64, rng: &mut R) {
        self.phase = BbrPhase::ProbeBw;
        self.cwnd_gain = 2.0;
        // any phase but the draining one
        let i = rng.gen_range(0..PROBE_BW_GAINS.len() - 1);
        self.cycle_index = if i >= 1 { i + 1 } else { i };
        self.cycle_stamp = now;
        self.pacing_gain = PROBE_BW_GAINS[self.cycle_index];
    }

    fn check_drain<R: Rng>(&mut self, s: &AckSample, rng: &mut R) {
        if self.phase == BbrPhase::Startup && self.filled_pipe {
            self.phase = BbrPhase::Drain;
            self.pacing_gain = 1.0 / HIGH_GAIN;
            self.cwnd_gain = HIGH_GAIN;
        }
        if self.phase == BbrPhase::Drain && s.inflight <= self.bdp(1.0) {
            self.enter_probe_bw(s.now, rng);
        }
    }

    fn update_rtprop(&mut self, s: &AckSample) {
        if self.informed {
            return;
        }
        self.rtprop_expired = s.now > self.rtprop_stamp + RTPROP_WINDOW_MS;
        if s.rtt <= self.rtprop || self.rtprop_expired {
            self.rtprop = s.rtt;
            self.rtprop_stamp = s.now;
        }
    }

    fn save_cwnd(&mut self) {
        self.prior_cwnd = if !self.in_recovery && self.phase != BbrPhase::ProbeRtt { self.cwnd } else { self.cwnd.max(self.prior_cwnd) };
    }

    fn check_probe_rtt<R: Rng>(&mut self, s: &AckSample, rng: &mut R) {
        if self.informed {
            return;
        }
        if self.phase != BbrPhase::ProbeRtt && self.rtprop_expired {
            self.save_cwnd();
            self.phase = BbrPhase::ProbeRtt;
            self.pacing_gain = 1.0;
            self.cwnd_gain = 1.0;
            self.probe_rtt_done_stamp = None;
            self.probe_rtt_entries += 1;
        }
        if self.phase != BbrPhase::ProbeRtt {
            return;
        }
        match self.probe_rtt_done_stamp {
            None if s.inflight <= self.min_cwnd() => {
                self.probe_rtt_done_stamp = Some(s.now + PROBE_RTT_MS);
                self.probe_rtt_round_done = false;
                self.next_round_delivered = s.delivered;
            }
            None => {}
            Some(done) => {
                if self.round_start {
                    self.probe_rtt_round_done = true;
                }
                if self.probe_rtt_round_done && s.now > done {
                    self.rtprop_stamp = s.now;
                    self.cwnd = self.cwnd.max(self.prior_cwnd);
                    if self.filled_pipe {
                        self.enter_probe_bw(s.now, rng);
                    } else {
                        self.phase = BbrPhase::Startup;
                        self.pacing_gain = HIGH_GAIN;
                        self.cwnd_gain = HIGH_GAIN;
                    }
                }
            }
        }
    }

    fn set_pacing_rate(&mut self) {
        let rate = self.pacing_gain * self.btlbw;
        if self.btlbw > 0.0 && (self.filled_pipe || rate > self.pacing_rate) {
            self.pacing_rate = rate;
        }
    }

    fn set_cwnd(&mut self, s: &AckSample) {
        if s.lost > 0.0 {
            self.cwnd = (self.cwnd - s.lost).max(self.mss);
        }
        if self.packet_conservation {
            self.cwnd = self.cwnd.max(s.inflight + s.acked);
        } else {
            let target = self.bdp(self.cwnd_gain) + 3.0 * self.mss;
            if self.filled_pipe {
                self.cwnd = (self.cwnd + s.acked).min(target);
            } else if self.cwnd < target || s.delivered < self.init_cwnd {
                self.cwnd += s.acked;
            }
        }
        self.cwnd = self.cwnd.max(self.min_cwnd());
        if self.phase == BbrPhase::ProbeRtt {
            self.cwnd = self.cwnd.min(self.min_cwnd());
        }
    }

    /// Loss detected outside a recovery episode: packet conservation for one round.
    pub fn on_enter_recovery(&mut self, inflight: f64, delivered: f64) {
        self.save_cwnd();
        self.in_recovery = true;
        self.cwnd = inflight + self.mss;
        self.packet_conservation = true;
        self.next_round_delivered = delivered;
    }

    pub fn on_exit_recovery(&mut self) {
        self.in_recovery = false;
        self.packet_conservation = false;
        self.cwnd = self.cwnd.max(self.prior_cwnd);
    }

    pub fn on_timeout(&mut self) {
        self.save_cwnd();
        self.in_recovery = false;
        self.packet_conservation = false;
        self.cwnd = self.mss;
    }
}
