//! Packet-forwarding simulator for latency probes over the router-level graph.
//!
//! Every inter-domain link direction and every intra-AS interface pair is a
//! channel with a FIFO transmitter, a drop-tail buffer and an optional
//! cross-traffic process that keeps part of the buffer occupied. Times are in
//! milliseconds of virtual time.

mod traffic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::des::EventQueue;
use crate::pathcomp::{EndToEndPath, Hop};
use crate::topology::{DirectedLatency, InterfaceId, IsdAsId, LinkEnd, Topology, TopologyError};

pub use traffic::{CrossTraffic, CrossTrafficState};

/// A unidirectional transmission resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChannelKey {
    /// Link `link` transmitted from its `a` end when `from_a`.
    Inter { link: usize, from_a: bool },
    Intra { as_id: IsdAsId, from: InterfaceId, to: InterfaceId },
}

/// Which internal route a probe takes when an AS has several.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntraRouting {
    #[default]
    Minimum,
    /// Probes alternate between the minimum and maximum route.
    Alternate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub probe_bytes: u32,
    pub capacity_bps: f64,
    pub queue_limit_bytes: u64,
    /// Probes bypass queues entirely (idealised operator-side prioritisation).
    pub priority_probe: bool,
    /// Spacing between the probes of one experienced-latency measurement.
    pub probe_spacing_ms: f64,
    pub intra_routing: IntraRouting,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            probe_bytes: 64,
            capacity_bps: 10e9,
            queue_limit_bytes: 50_000_000,
            priority_probe: false,
            probe_spacing_ms: 1_000.0,
            intra_routing: IntraRouting::Minimum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub path_id: String,
    pub rtt_ms: f64,
    pub one_way_fwd_ms: f64,
    pub sent_at_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("probe dropped at {0:?}")]
    Dropped(ChannelKey),
    #[error("hops {0} and {1} are not linked")]
    NotLinked(IsdAsId, IsdAsId),
    #[error("all {0} probes were dropped")]
    MeasurementFailed(usize),
    #[error("{dropped} of {sent} probes dropped")]
    TooManyDrops { dropped: usize, sent: usize },
    #[error("invalid measurement parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, Copy)]
struct Step {
    channel: ChannelKey,
    propagation: DirectedLatency,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Arrive { probe: usize, step: usize },
}

struct InFlight {
    steps: Vec<Step>,
    fwd_len: usize,
    sent: f64,
    turnaround: Option<f64>,
    done: Option<Result<f64, ChannelKey>>,
    alternate_max: bool,
}

/// One simulator instance; single-threaded and deterministic.
pub struct DataPlaneSim<'t> {
    topo: &'t Topology,
    cfg: SimConfig,
    traffic: BTreeMap<ChannelKey, CrossTrafficState>,
    busy_until: BTreeMap<ChannelKey, f64>,
    probes_sent: u64,
}

impl<'t> DataPlaneSim<'t> {
    pub fn new(topo: &'t Topology, cfg: SimConfig) -> Self {
        Self { topo, cfg, traffic: BTreeMap::new(), busy_until: BTreeMap::new(), probes_sent: 0 }
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn topology(&self) -> &'t Topology {
        self.topo
    }

    pub fn set_cross_traffic(&mut self, channel: ChannelKey, process: CrossTraffic) {
        self.traffic.insert(channel, CrossTrafficState::new(process));
    }

    /// Same process (and seed) on both directions of a link.
    pub fn set_link_cross_traffic(&mut self, link: usize, process: CrossTraffic) {
        for from_a in [true, false] {
            self.set_cross_traffic(ChannelKey::Inter { link, from_a }, process.clone());
        }
    }

    fn route(&self, hops: &[Hop]) -> Result<Vec<Step>, SimError> {
        let mut steps = Vec::new();
        for (i, h) in hops.iter().enumerate() {
            if let (Some(a), Some(b)) = (h.ingress, h.egress) {
                let propagation = self.topo.intra_latency(h.as_id, a, b).ok_or(TopologyError::UnknownInterface(LinkEnd::new(h.as_id, a)))?;
                steps.push(Step { channel: ChannelKey::Intra { as_id: h.as_id, from: a, to: b }, propagation });
            }
            if let Some(next) = hops.get(i + 1) {
                let out = LinkEnd::new(h.as_id, h.egress.ok_or(SimError::NotLinked(h.as_id, next.as_id))?);
                let (idx, link) = self.topo.link_at(out).ok_or(SimError::NotLinked(h.as_id, next.as_id))?;
                if next.ingress.map(|i| LinkEnd::new(next.as_id, i)) != link.other_end(out) {
                    return Err(SimError::NotLinked(h.as_id, next.as_id));
                }
                steps.push(Step { channel: ChannelKey::Inter { link: idx, from_a: link.a == out }, propagation: link.latency_from(out).expect("attached") });
            }
        }
        Ok(steps)
    }

    fn reverse_hops(hops: &[Hop]) -> Vec<Hop> {
        hops.iter().rev().map(|h| Hop { as_id: h.as_id, ingress: h.egress, egress: h.ingress }).collect()
    }

    /// Round trip over `hops` (forward, then the same hops reversed) ignoring
    /// queues and transmission.
    pub fn propagation_rtt(&self, hops: &[Hop]) -> Result<f64, SimError> {
        let f: f64 = self.route(hops)?.iter().map(|s| s.propagation.min).sum();
        let r: f64 = self.route(&Self::reverse_hops(hops))?.iter().map(|s| s.propagation.min).sum();
        Ok(f + r)
    }

    /// Round trip with transmission delays but empty queues.
    pub fn zero_load_rtt(&self, hops: &[Hop]) -> Result<f64, SimError> {
        let n = self.route(hops)?.len() + self.route(&Self::reverse_hops(hops))?.len();
        Ok(self.propagation_rtt(hops)? + n as f64 * self.transmission_ms())
    }

    fn transmission_ms(&self) -> f64 {
        self.cfg.probe_bytes as f64 * 8.0 / self.cfg.capacity_bps * 1e3
    }

    /// Sends several probes, possibly overlapping in time, and returns one
    /// result per request in request order. Channel state persists across
    /// calls, so send times should not go back before earlier traffic.
    pub fn send_probes(&mut self, requests: &[(&[Hop], f64)]) -> Result<Vec<Result<(f64, f64), ChannelKey>>, SimError> {
        let mut flights = Vec::with_capacity(requests.len());
        let mut q = EventQueue::new();
        for (i, (hops, at)) in requests.iter().enumerate() {
            let mut steps = self.route(hops)?;
            let fwd_len = steps.len();
            steps.extend(self.route(&Self::reverse_hops(hops))?);
            let alternate_max = self.cfg.intra_routing == IntraRouting::Alternate && self.probes_sent % 2 == 1;
            self.probes_sent += 1;
            flights.push(InFlight { steps, fwd_len, sent: *at, turnaround: None, done: None, alternate_max });
            q.schedule(*at, Event::Arrive { probe: i, step: 0 });
        }
        let tx = self.transmission_ms();
        let bytes_per_ms = self.cfg.capacity_bps / 8.0 / 1e3;
        while let Some((now, Event::Arrive { probe, step })) = q.pop() {
            let f = &mut flights[probe];
            if step == f.fwd_len && f.turnaround.is_none() {
                f.turnaround = Some(now);
            }
            if step == f.steps.len() {
                f.done = Some(Ok(now));
                continue;
            }
            let s = f.steps[step];
            let prop = match (s.propagation.max, f.alternate_max) {
                (Some(max), true) => max,
                _ => s.propagation.min,
            };
            let leave = if self.cfg.priority_probe {
                now + tx
            } else {
                let cross = self.traffic.get_mut(&s.channel).map_or(0, |t| t.occupancy_bytes(now));
                let busy = self.busy_until.get(&s.channel).copied().unwrap_or(f64::NEG_INFINITY);
                let own_backlog = ((busy - now).max(0.0) * bytes_per_ms).round() as u64;
                if cross + own_backlog + self.cfg.probe_bytes as u64 > self.cfg.queue_limit_bytes {
                    f.done = Some(Err(s.channel));
                    continue;
                }
                let start = now.max(busy) + cross as f64 / bytes_per_ms;
                let leave = start + tx;
                self.busy_until.insert(s.channel, leave);
                leave
            };
            q.schedule(leave + prop, Event::Arrive { probe, step: step + 1 });
        }
        Ok(flights
            .into_iter()
            .map(|f| match f.done.expect("every probe finishes or drops") {
                Ok(back) => Ok((back - f.sent, f.turnaround.expect("turned around") - f.sent)),
                Err(c) => Err(c),
            })
            .collect())
    }

    /// Single probe along `hops` at time `at`; returns (rtt, one-way forward).
    pub fn probe_hops(&mut self, hops: &[Hop], at: f64) -> Result<(f64, f64), SimError> {
        self.send_probes(&[(hops, at)])?.remove(0).map_err(SimError::Dropped)
    }

    pub fn send_probe(&mut self, path: &EndToEndPath, at: f64) -> Result<ProbeResult, SimError> {
        let (rtt, fwd) = self.probe_hops(&path.hops, at)?;
        Ok(ProbeResult { path_id: path.path_id(), rtt_ms: rtt, one_way_fwd_ms: fwd, sent_at_ms: at })
    }

    /// Minimum RTT over probes every `interval_ms` for `duration_s` seconds from `start`.
    pub fn measure_min_rtt(&mut self, hops: &[Hop], start: f64, duration_s: f64, interval_ms: f64) -> Result<f64, SimError> {
        if !(duration_s > 0.0 && interval_ms > 0.0) {
            return Err(SimError::InvalidParams("duration and interval must be positive".into()));
        }
        let n = ((duration_s * 1e3) / interval_ms).floor().max(1.0) as usize;
        let mut best = f64::INFINITY;
        for i in 0..n {
            if let Ok((rtt, _)) = self.probe_hops(hops, start + i as f64 * interval_ms) {
                best = best.min(rtt);
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(SimError::MeasurementFailed(n))
        }
    }

    /// Median RTT of `n` probes spaced by the configured spacing.
    pub fn measure_experienced(&mut self, hops: &[Hop], start: f64, n: usize) -> Result<f64, SimError> {
        if n == 0 {
            return Err(SimError::InvalidParams("need at least one probe".into()));
        }
        let mut rtts = Vec::with_capacity(n);
        for i in 0..n {
            if let Ok((rtt, _)) = self.probe_hops(hops, start + i as f64 * self.cfg.probe_spacing_ms) {
                rtts.push(rtt);
            }
        }
        let dropped = n - rtts.len();
        if dropped * 2 > n || rtts.is_empty() {
            return Err(SimError::TooManyDrops { dropped, sent: n });
        }
        rtts.sort_by(f64::total_cmp);
        let m = rtts.len();
        Ok(if m % 2 == 1 { rtts[m / 2] } else { (rtts[m / 2 - 1] + rtts[m / 2]) / 2.0 })
    }
}

/// Topology whose latencies are what AS operators would advertise after
/// measuring every link and every intra-AS interface pair with
/// [`DataPlaneSim::measure_min_rtt`]: half the minimum RTT in each direction.
pub fn measured_topology(sim: &mut DataPlaneSim<'_>, start: f64, duration_s: f64, interval_ms: f64) -> Result<Topology, SimError> {
    let t = sim.topology();
    let mut links = t.links().to_vec();
    for l in &mut links {
        let hops = [Hop { as_id: l.a.as_id, ingress: None, egress: Some(l.a.iface) }, Hop { as_id: l.b.as_id, ingress: Some(l.b.iface), egress: None }];
        let half = sim.measure_min_rtt(&hops, start, duration_s, interval_ms)? / 2.0;
        l.latency_ab = DirectedLatency::exact(half);
        l.latency_ba = DirectedLatency::exact(half);
    }
    let mut ases = Vec::new();
    for node in t.ases() {
        let mut node = node.clone();
        node.intra.clear();
        let ifs: Vec<InterfaceId> = node.interfaces.keys().copied().collect();
        for (i, &a) in ifs.iter().enumerate() {
            for &b in &ifs[i + 1..] {
                let hops = [Hop { as_id: node.id, ingress: Some(a), egress: Some(b) }];
                let half = sim.measure_min_rtt(&hops, start, duration_s, interval_ms)? / 2.0;
                node.intra.insert((a, b), DirectedLatency::exact(half));
                node.intra.insert((b, a), DirectedLatency::exact(half));
            }
        }
        ases.push(node);
    }
    Ok(Topology::new(ases, links, t.speed_km_s())?)
}

#[cfg(test)]
mod tests;
