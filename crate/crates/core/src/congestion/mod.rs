//! Packet-level dumbbell simulation of CUBIC and BBR flows sharing one
//! drop-tail bottleneck.
//!
//! Every flow crosses its own uncongested access link, a switch queue in front
//! of the shared bottleneck link, and the bottleneck link itself. Receivers
//! acknowledge every packet and ACKs return over the reverse propagation delay
//! only. Lost packets are not retransmitted: goodput is the rate of distinct
//! packets reaching receivers.

pub mod bbr;
pub mod cubic;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::des::EventQueue;
use crate::exec::{self, ExecMode};
use bbr::{AckSample, Bbr};
use cubic::Cubic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CcaKind {
    Cubic,
    Bbr,
    BbrInformed,
}

impl CcaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CcaKind::Cubic => "cubic",
            CcaKind::Bbr => "bbr",
            CcaKind::BbrInformed => "bbr_informed",
        }
    }

    pub fn is_bbr(self) -> bool {
        self != CcaKind::Cubic
    }
}

/// Which BBR the BBR flows of an experiment run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BbrVariant {
    #[default]
    Standard,
    Informed,
}

impl BbrVariant {
    pub fn kind(self) -> CcaKind {
        match self {
            BbrVariant::Standard => CcaKind::Bbr,
            BbrVariant::Informed => CcaKind::BbrInformed,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BbrVariant::Standard => "standard",
            BbrVariant::Informed => "informed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DumbbellConfig {
    pub n_bbr: usize,
    pub n_cubic: usize,
    pub bbr_variant: BbrVariant,
    pub bottleneck_bps: f64,
    /// One-way propagation delay of each flow's own access link.
    pub owd_nonshared_ms: f64,
    /// One-way propagation delay of the shared bottleneck link.
    pub owd_shared_ms: f64,
    pub queue_bytes: u64,
    pub packet_bytes: u32,
    pub init_cwnd_packets: u32,
    pub duration_s: f64,
    /// Leading interval excluded from goodput and estimator statistics.
    pub warmup_s: f64,
    /// Flow start times are drawn uniformly from `[0, start_jitter_ms)`.
    pub start_jitter_ms: f64,
    pub sample_interval_ms: f64,
    pub seed: u64,
}

impl Default for DumbbellConfig {
    fn default() -> Self {
        Self {
            n_bbr: 2,
            n_cubic: 8,
            bbr_variant: BbrVariant::Standard,
            bottleneck_bps: 100e6,
            owd_nonshared_ms: 10.0,
            owd_shared_ms: 10.0,
            queue_bytes: 750_000,
            packet_bytes: 1500,
            init_cwnd_packets: 10,
            duration_s: 60.0,
            warmup_s: 10.0,
            start_jitter_ms: 50.0,
            sample_interval_ms: 100.0,
            seed: 1,
        }
    }
}

impl DumbbellConfig {
    /// Round-trip propagation delay of every flow.
    pub fn propagation_rtt_ms(&self) -> f64 {
        2.0 * (self.owd_nonshared_ms + self.owd_shared_ms)
    }

    /// Bottleneck rate times propagation RTT.
    pub fn bdp_bytes(&self) -> f64 {
        self.bottleneck_bps / 8.0 * self.propagation_rtt_ms() / 1e3
    }

    pub fn total_flows(&self) -> usize {
        self.n_bbr + self.n_cubic
    }

    fn validate(&self) -> Result<(), CcaError> {
        let bad = |m: &str| Err(CcaError::Infeasible(m.into()));
        if !(self.bottleneck_bps > 0.0) {
            return bad("bottleneck rate must be positive");
        }
        if self.queue_bytes < self.packet_bytes as u64 || self.packet_bytes == 0 {
            return bad("queue must hold at least one packet");
        }
        if self.total_flows() == 0 {
            return bad("no flows");
        }
        if !(self.duration_s > self.warmup_s && self.warmup_s >= 0.0) {
            return bad("duration must exceed warm-up");
        }
        if !(self.owd_nonshared_ms >= 0.0 && self.owd_shared_ms >= 0.0 && self.propagation_rtt_ms() > 0.0) {
            return bad("propagation delays must be non-negative with a positive RTT");
        }
        if !(self.sample_interval_ms > 0.0 && self.start_jitter_ms >= 0.0) || self.init_cwnd_packets == 0 {
            return bad("sampling interval, jitter and initial window must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CcaError {
    #[error("infeasible dumbbell configuration: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub id: usize,
    pub cca: CcaKind,
    pub goodput_bps: f64,
    pub delivered_packets: u64,
    /// Losses detected by the sender over the whole run.
    pub lost_packets: u64,
    /// Smallest and time-averaged propagation-RTT estimate after warm-up (BBR only).
    pub rtprop_min_ms: Option<f64>,
    pub rtprop_mean_ms: Option<f64>,
    pub probe_rtt_entries: u32,
}

/// Packet accounting at the end of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conservation {
    pub injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub queued: u64,
    pub in_transit: u64,
}

impl Conservation {
    pub fn balanced(&self) -> bool {
        self.injected == self.delivered + self.dropped + self.queued + self.in_transit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessResult {
    pub flows: Vec<FlowReport>,
    /// Fraction of post-warm-up goodput obtained by BBR flows.
    pub bbr_share: f64,
    pub total_goodput_bps: f64,
    pub utilization: f64,
    pub drops: u64,
    /// Bottleneck queue occupancy `(time_ms, bytes)` at every sampling tick.
    pub queue_series: Vec<(f64, u64)>,
    pub counters: Conservation,
    /// Time the bottleneck spent transmitting and time its queue was non-empty.
    pub busy_ms: f64,
    pub backlogged_ms: f64,
}

impl FairnessResult {
    /// Smallest post-warm-up propagation estimate over all BBR flows.
    pub fn bbr_rtprop_min_ms(&self) -> Option<f64> {
        self.flows.iter().filter_map(|f| f.rtprop_min_ms).min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone)]
enum Cca {
    Cubic(Cubic),
    Bbr(Bbr),
}

#[derive(Debug, Clone, Copy)]
struct SentPacket {
    seq: u64,
    sent: f64,
    delivered: f64,
    delivered_time: f64,
    first_sent_time: f64,
}

// a gap of this many later ACKs marks a packet lost
const DUP_THRESH: u64 = 3;
const MIN_RTO_MS: f64 = 200.0;

#[derive(Debug)]
struct Flow {
    kind: CcaKind,
    cca: Cca,
    start: f64,
    next_seq: u64,
    outstanding: VecDeque<SentPacket>,
    inflight: f64,
    delivered: f64,
    delivered_time: f64,
    first_sent_time: f64,
    next_send_time: f64,
    send_pending: bool,
    min_rtt: f64,
    srtt: Option<f64>,
    rttvar: f64,
    last_progress: f64,
    rto_pending: bool,
    recovery_until: Option<u64>,
    lost: u64,
    goodput_bytes: f64,
    received: u64,
    rtprop_min: f64,
    rtprop_sum: f64,
    rtprop_samples: u64,
}

impl Flow {
    fn cwnd_bytes(&self, mss: f64) -> f64 {
        match &self.cca {
            Cca::Cubic(c) => c.cwnd * mss,
            Cca::Bbr(b) => b.cwnd,
        }
    }

    fn pacing_rate(&self) -> Option<f64> {
        match &self.cca {
            Cca::Cubic(_) => None,
            Cca::Bbr(b) => Some(b.pacing_rate),
        }
    }

    fn rto(&self) -> f64 {
        self.srtt.map_or(1_000.0, |s| (s + 4.0 * self.rttvar).max(MIN_RTO_MS))
    }
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Send(usize),
    SwitchArrive { flow: usize, seq: u64 },
    Depart,
    Deliver { flow: usize, seq: u64 },
    Ack { flow: usize, seq: u64 },
    Rto(usize),
    Sample,
}

struct Sim {
    cfg: DumbbellConfig,
    mss: f64,
    bytes_per_ms: f64,
    warmup_ms: f64,
    end_ms: f64,
    q: EventQueue<Event>,
    rng: ChaCha8Rng,
    flows: Vec<Flow>,
    queue: VecDeque<(usize, u64)>,
    queued_bytes: u64,
    busy: bool,
    counters: Conservation,
    queue_series: Vec<(f64, u64)>,
}

impl Sim {
    fn new(cfg: &DumbbellConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mss = cfg.packet_bytes as f64;
        let true_rtt = cfg.propagation_rtt_ms();
        let mut flows = Vec::new();
        let kinds = std::iter::repeat_n(cfg.bbr_variant.kind(), cfg.n_bbr).chain(std::iter::repeat_n(CcaKind::Cubic, cfg.n_cubic));
        for kind in kinds {
            let start = if cfg.start_jitter_ms > 0.0 { rng.gen_range(0.0..cfg.start_jitter_ms) } else { 0.0 };
            let init = cfg.init_cwnd_packets as f64;
            let cca = match kind {
                CcaKind::Cubic => Cca::Cubic(Cubic::new(init)),
                CcaKind::Bbr => Cca::Bbr(Bbr::new(mss, init, None, start)),
                CcaKind::BbrInformed => Cca::Bbr(Bbr::new(mss, init, Some(true_rtt), start)),
            };
            flows.push(Flow {
                kind,
                cca,
                start,
                next_seq: 0,
                outstanding: VecDeque::new(),
                inflight: 0.0,
                delivered: 0.0,
                delivered_time: start,
                first_sent_time: start,
                next_send_time: start,
                send_pending: false,
                min_rtt: f64::INFINITY,
                srtt: None,
                rttvar: 0.0,
                last_progress: start,
                rto_pending: false,
                recovery_until: None,
                lost: 0,
                goodput_bytes: 0.0,
                received: 0,
                rtprop_min: f64::INFINITY,
                rtprop_sum: 0.0,
                rtprop_samples: 0,
            });
        }
        Self {
            mss,
            bytes_per_ms: cfg.bottleneck_bps / 8.0 / 1e3,
            warmup_ms: cfg.warmup_s * 1e3,
            end_ms: cfg.duration_s * 1e3,
            cfg: cfg.clone(),
            q: EventQueue::new(),
            rng,
            flows,
            queue: VecDeque::new(),
            queued_bytes: 0,
            busy: false,
            counters: Conservation { injected: 0, delivered: 0, dropped: 0, queued: 0, in_transit: 0 },
            queue_series: Vec::new(),
        }
    }

    fn run(mut self) -> FairnessResult {
        for i in 0..self.flows.len() {
            self.flows[i].send_pending = true;
            self.q.schedule(self.flows[i].start, Event::Send(i));
        }
        self.q.schedule(0.0, Event::Sample);
        let (mut busy, mut backlogged, mut last) = (0.0, 0.0, 0.0);
        while let Some(t) = self.q.peek_time() {
            if t > self.end_ms {
                break;
            }
            let (now, ev) = self.q.pop().expect("peeked");
            if !self.queue.is_empty() {
                backlogged += now - last;
            }
            last = now;
            match ev {
                Event::Send(f) => {
                    self.flows[f].send_pending = false;
                    self.try_send(f, now);
                }
                Event::SwitchArrive { flow, seq } => {
                    self.counters.in_transit -= 1;
                    let size = self.cfg.packet_bytes as u64;
                    if self.queued_bytes + size > self.cfg.queue_bytes {
                        self.counters.dropped += 1;
                    } else {
                        self.queue.push_back((flow, seq));
                        self.queued_bytes += size;
                        if !self.busy {
                            self.busy = true;
                            self.q.schedule(now + self.mss / self.bytes_per_ms, Event::Depart);
                        }
                    }
                }
                Event::Depart => {
                    let (flow, seq) = self.queue.pop_front().expect("departing packet");
                    busy += self.mss / self.bytes_per_ms;
                    self.queued_bytes -= self.cfg.packet_bytes as u64;
                    self.counters.in_transit += 1;
                    self.q.schedule(now + self.cfg.owd_shared_ms, Event::Deliver { flow, seq });
                    if self.queue.is_empty() {
                        self.busy = false;
                    } else {
                        self.q.schedule(now + self.mss / self.bytes_per_ms, Event::Depart);
                    }
                }
                Event::Deliver { flow, seq } => {
                    self.counters.in_transit -= 1;
                    self.counters.delivered += 1;
                    let fl = &mut self.flows[flow];
                    if now >= self.warmup_ms {
                        fl.goodput_bytes += self.mss;
                        fl.received += 1;
                    }
                    self.q.schedule(now + self.cfg.owd_shared_ms + self.cfg.owd_nonshared_ms, Event::Ack { flow, seq });
                }
                Event::Ack { flow, seq } => self.on_ack(flow, seq, now),
                Event::Rto(f) => self.on_rto(f, now),
                Event::Sample => {
                    self.queue_series.push((now, self.queued_bytes));
                    if now >= self.warmup_ms {
                        for fl in &mut self.flows {
                            if let Cca::Bbr(b) = &fl.cca {
                                if b.rtprop.is_finite() {
                                    fl.rtprop_min = fl.rtprop_min.min(b.rtprop);
                                    fl.rtprop_sum += b.rtprop;
                                    fl.rtprop_samples += 1;
                                }
                            }
                        }
                    }
                    self.q.schedule(now + self.cfg.sample_interval_ms, Event::Sample);
                }
            }
        }
        self.finish(busy, backlogged)
    }

    fn try_send(&mut self, f: usize, now: f64) {
        let mss = self.mss;
        loop {
            let fl = &mut self.flows[f];
            if fl.inflight + mss > fl.cwnd_bytes(mss) + 1e-9 {
                return;
            }
            if fl.next_send_time > now {
                if !fl.send_pending {
                    fl.send_pending = true;
                    self.q.schedule(fl.next_send_time, Event::Send(f));
                }
                return;
            }
            if fl.outstanding.is_empty() {
                fl.first_sent_time = now;
                fl.delivered_time = now;
            }
            let seq = fl.next_seq;
            fl.next_seq += 1;
            fl.outstanding.push_back(SentPacket {
                seq,
                sent: now,
                delivered: fl.delivered,
                delivered_time: fl.delivered_time,
                first_sent_time: fl.first_sent_time,
            });
            fl.inflight += mss;
            if let Some(rate) = fl.pacing_rate() {
                fl.next_send_time = now.max(fl.next_send_time) + mss / rate;
            }
            let arm_rto = !fl.rto_pending;
            fl.rto_pending = true;
            let rto_at = now + fl.rto();
            self.counters.injected += 1;
            self.counters.in_transit += 1;
            self.q.schedule(now + self.cfg.owd_nonshared_ms, Event::SwitchArrive { flow: f, seq });
            if arm_rto {
                self.q.schedule(rto_at, Event::Rto(f));
            }
        }
    }

    fn on_ack(&mut self, f: usize, seq: u64, now: f64) {
        let mss = self.mss;
        let fl = &mut self.flows[f];
        let Some(pos) = fl.outstanding.iter().position(|p| p.seq >= seq) else { return };
        if fl.outstanding[pos].seq != seq {
            // already written off by a timeout
            return;
        }
        let prior_inflight = fl.inflight;
        let p = fl.outstanding.remove(pos).expect("found");
        fl.inflight -= mss;
        fl.delivered += mss;
        fl.delivered_time = now;
        fl.last_progress = now;
        let rtt = now - p.sent;
        fl.min_rtt = fl.min_rtt.min(rtt);
        match fl.srtt {
            None => {
                fl.srtt = Some(rtt);
                fl.rttvar = rtt / 2.0;
            }
            Some(s) => {
                fl.rttvar = 0.75 * fl.rttvar + 0.25 * (s - rtt).abs();
                fl.srtt = Some(0.875 * s + 0.125 * rtt);
            }
        }
        let interval = (p.sent - p.first_sent_time).max(now - p.delivered_time);
        let delivery_rate = (interval > 0.0).then(|| (fl.delivered - p.delivered) / interval);
        fl.first_sent_time = p.sent;

        let mut lost = 0u64;
        while fl.outstanding.front().is_some_and(|o| o.seq + DUP_THRESH <= seq) {
            fl.outstanding.pop_front();
            lost += 1;
        }
        fl.inflight -= lost as f64 * mss;
        fl.lost += lost;

        if fl.recovery_until.is_some_and(|r| seq >= r) {
            fl.recovery_until = None;
            match &mut fl.cca {
                Cca::Cubic(_) => {}
                Cca::Bbr(b) => b.on_exit_recovery(),
            }
        }
        let new_episode = lost > 0 && fl.recovery_until.is_none();
        if new_episode {
            fl.recovery_until = Some(fl.next_seq);
        }
        let in_recovery = fl.recovery_until.is_some();
        match &mut fl.cca {
            Cca::Cubic(c) => {
                if new_episode {
                    c.on_loss();
                } else if !in_recovery {
                    c.on_ack(now, fl.min_rtt);
                }
            }
            Cca::Bbr(b) => {
                if new_episode {
                    b.on_enter_recovery(fl.inflight, fl.delivered);
                }
                let s = AckSample {
                    now,
                    delivered: fl.delivered,
                    packet_delivered: p.delivered,
                    delivery_rate,
                    rtt,
                    acked: mss,
                    lost: lost as f64 * mss,
                    prior_inflight,
                    inflight: fl.inflight,
                };
                b.on_ack(&s, &mut self.rng);
            }
        }
        self.try_send(f, now);
    }

    fn on_rto(&mut self, f: usize, now: f64) {
        let fl = &mut self.flows[f];
        fl.rto_pending = false;
        if fl.outstanding.is_empty() {
            return;
        }
        let deadline = fl.last_progress + fl.rto();
        if now < deadline {
            fl.rto_pending = true;
            self.q.schedule(deadline, Event::Rto(f));
            return;
        }
        let n = fl.outstanding.len() as u64;
        fl.outstanding.clear();
        fl.inflight = 0.0;
        fl.lost += n;
        fl.recovery_until = None;
        fl.last_progress = now;
        fl.srtt = fl.srtt.map(|s| s * 2.0);
        match &mut fl.cca {
            Cca::Cubic(c) => c.on_timeout(),
            Cca::Bbr(b) => b.on_timeout(),
        }
        self.try_send(f, now);
    }

    fn finish(self, busy_ms: f64, backlogged_ms: f64) -> FairnessResult {
        let window_s = self.cfg.duration_s - self.cfg.warmup_s;
        let flows: Vec<FlowReport> = self
            .flows
            .iter()
            .enumerate()
            .map(|(id, fl)| {
                let (rtprop_min_ms, rtprop_mean_ms, probe_rtt_entries) = match &fl.cca {
                    Cca::Bbr(b) if fl.rtprop_samples > 0 => {
                        (Some(fl.rtprop_min), Some(fl.rtprop_sum / fl.rtprop_samples as f64), b.probe_rtt_entries)
                    }
                    Cca::Bbr(b) => (None, None, b.probe_rtt_entries),
                    Cca::Cubic(_) => (None, None, 0),
                };
                FlowReport {
                    id,
                    cca: fl.kind,
                    goodput_bps: fl.goodput_bytes * 8.0 / window_s,
                    delivered_packets: fl.received,
                    lost_packets: fl.lost,
                    rtprop_min_ms,
                    rtprop_mean_ms,
                    probe_rtt_entries,
                }
            })
            .collect();
        let total = flows.iter().fold(0.0, |s, f| s + f.goodput_bps);
        let bbr = flows.iter().filter(|f| f.cca.is_bbr()).fold(0.0, |s, f| s + f.goodput_bps);
        let mut counters = self.counters;
        counters.queued = self.queue.len() as u64;
        FairnessResult {
            bbr_share: if total > 0.0 { bbr / total } else { 0.0 },
            total_goodput_bps: total,
            utilization: total / self.cfg.bottleneck_bps,
            drops: counters.dropped,
            queue_series: self.queue_series,
            counters,
            busy_ms,
            backlogged_ms,
            flows,
        }
    }
}

/// Runs one dumbbell experiment for `duration_s` of virtual time.
pub fn run_fairness(cfg: &DumbbellConfig) -> Result<FairnessResult, CcaError> {
    cfg.validate()?;
    Ok(Sim::new(cfg).run())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_bbr: usize,
    pub variant: BbrVariant,
    pub bbr_share: f64,
    /// `n_bbr` over the flow count.
    pub proportional_share: f64,
    pub utilization: f64,
    pub bbr_rtprop_min_ms: Option<f64>,
}

/// The BBR share for every `(n_bbr, variant)` combination; the flow count of
/// `base` stays fixed and the remaining flows run CUBIC.
pub fn fairness_sweep(base: &DumbbellConfig, n_bbr: &[usize], variants: &[BbrVariant], mode: ExecMode) -> Result<Vec<SweepPoint>, CcaError> {
    let total = base.total_flows();
    let points: Vec<(usize, BbrVariant)> = n_bbr.iter().flat_map(|&n| variants.iter().map(move |&v| (n, v))).collect();
    if points.iter().any(|&(n, _)| n > total) {
        return Err(CcaError::Infeasible(format!("n_bbr exceeds the {total} flows")));
    }
    exec::map(mode, &points, |&(n, variant)| {
        let cfg = DumbbellConfig { n_bbr: n, n_cubic: total - n, bbr_variant: variant, ..base.clone() };
        let r = run_fairness(&cfg)?;
        Ok(SweepPoint {
            n_bbr: n,
            variant,
            bbr_share: r.bbr_share,
            proportional_share: n as f64 / total as f64,
            utilization: r.utilization,
            bbr_rtprop_min_ms: r.bbr_rtprop_min_ms(),
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests;
