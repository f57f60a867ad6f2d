use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::segment::{depart, extend, originate, terminate, DisclosurePolicy, PathSegment, SegmentKind};
use super::store::SegmentStore;
use crate::topology::{IsdAsId, LinkEnd, LinkKind, Topology};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Accumulated propagation latency, undisclosed entries counted as 0 ms.
    #[default]
    LatencyPriority,
    ShortestHops,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionPolicy {
    /// Segments kept per (origin, kind) at every AS.
    pub k: usize,
    pub ranking: Ranking,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        Self { k: 5, ranking: Ranking::LatencyPriority }
    }
}

impl SelectionPolicy {
    pub fn compare(&self, a: &PathSegment, b: &PathSegment) -> Ordering {
        let lat = |s: &PathSegment| s.accumulated_latency();
        let by_latency = lat(a).total_cmp(&lat(b));
        let by_hops = a.entries.len().cmp(&b.entries.len());
        let primary = match self.ranking {
            Ranking::LatencyPriority => by_latency.then(by_hops),
            Ranking::ShortestHops => by_hops.then(by_latency),
        };
        primary.then_with(|| a.id.cmp(&b.id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeaconingConfig {
    /// Upper bound on synchronous rounds; the run stops earlier once nothing changes.
    pub rounds: usize,
    pub selection: SelectionPolicy,
    /// ASes missing from the map disclose fully.
    pub disclosure: BTreeMap<IsdAsId, DisclosurePolicy>,
    pub start_time_ms: u64,
    pub round_interval_ms: u64,
}

impl Default for BeaconingConfig {
    fn default() -> Self {
        Self {
            rounds: 64,
            selection: SelectionPolicy::default(),
            disclosure: BTreeMap::new(),
            start_time_ms: 0,
            round_interval_ms: 1_000,
        }
    }
}

impl BeaconingConfig {
    pub fn disclosure_of(&self, as_id: IsdAsId) -> DisclosurePolicy {
        self.disclosure.get(&as_id).copied().unwrap_or_default()
    }

    /// Virtual time at which an AS at position `pos` of a segment signs its entry.
    pub fn entry_time(&self, pos: usize) -> u64 {
        self.start_time_ms + pos as u64 * self.round_interval_ms
    }
}

/// Number of rounds after which every simple path can have been explored.
pub fn steady_state_rounds(t: &Topology) -> usize {
    t.len().max(1)
}

#[derive(Debug, Clone)]
pub struct BeaconingOutcome {
    pub store: SegmentStore,
    pub rounds_run: usize,
    pub converged: bool,
}

// Beacons sitting at an AS, already extended over the link into it but not
// yet carrying that AS's own entry. Keyed by (receiver, kind, origin).
type Inbox = BTreeMap<(IsdAsId, SegmentKind, IsdAsId), Vec<PathSegment>>;

fn eligible_egress(t: &Topology, kind: SegmentKind, at: IsdAsId) -> Vec<LinkEnd> {
    t.links_of(at)
        .into_iter()
        .filter(|(idx, own, _)| {
            let l = t.link(*idx);
            match kind {
                SegmentKind::Core => l.kind == LinkKind::Core,
                SegmentKind::IntraIsd => l.kind == LinkKind::ParentChild && l.a == *own,
            }
        })
        .map(|(_, own, _)| own)
        .collect()
}

fn select(policy: &SelectionPolicy, mut segs: Vec<PathSegment>) -> Vec<PathSegment> {
    segs.sort_by(|a, b| policy.compare(a, b));
    segs.dedup_by(|a, b| a.id == b.id);
    segs.truncate(policy.k);
    segs
}

/// Full beaconing run with diagnostics; see [`run_beaconing`].
pub fn run_beaconing_detailed(t: &Topology, cfg: &BeaconingConfig) -> BeaconingOutcome {
    let egress: BTreeMap<(IsdAsId, SegmentKind), Vec<LinkEnd>> = t
        .as_ids()
        .flat_map(|a| [SegmentKind::Core, SegmentKind::IntraIsd].map(|k| ((a, k), eligible_egress(t, k, a))))
        .collect();

    // Round 0 output: every core AS sends fresh beacons of both kinds.
    let mut sent: Inbox = BTreeMap::new();
    let mut origin_out: Inbox = BTreeMap::new();
    for core in t.core_ases() {
        for kind in [SegmentKind::Core, SegmentKind::IntraIsd] {
            let seg = originate(t, core, kind, cfg.entry_time(0)).expect("core AS");
            for out in &egress[&(core, kind)] {
                let s = depart(t, &seg, out.iface, cfg.disclosure_of(core)).expect("eligible egress");
                let far = t.neighbor(*out).expect("attached link");
                origin_out.entry((far.as_id, kind, core)).or_default().push(s);
            }
        }
    }

    let mut retained: Inbox = BTreeMap::new();
    let mut rounds_run = 0;
    let mut converged = false;
    for _ in 0..cfg.rounds {
        rounds_run += 1;
        let mut inbox = origin_out.clone();
        for (key, segs) in sent {
            inbox.entry(key).or_default().extend(segs);
        }
        let next: Inbox = inbox.into_iter().map(|(k, v)| (k, select(&cfg.selection, v))).filter(|(_, v)| !v.is_empty()).collect();

        let unchanged = next == retained;
        retained = next;
        if unchanged {
            converged = true;
            break;
        }

        sent = BTreeMap::new();
        for ((at, kind, origin), segs) in &retained {
            for seg in segs {
                let ingress = seg.last().egress.and_then(|e| t.neighbor(LinkEnd::new(seg.last().as_id, e))).expect("arrived over a link");
                for out in &egress[&(*at, *kind)] {
                    let far = t.neighbor(*out).expect("attached link");
                    if out.iface == ingress.iface || seg.contains_as(far.as_id) {
                        continue;
                    }
                    let s = extend(t, seg, *at, ingress.iface, out.iface, cfg.disclosure_of(*at), cfg.entry_time(seg.entries.len()))
                        .expect("valid extension");
                    sent.entry((far.as_id, *kind, *origin)).or_default().push(s);
                }
            }
        }
    }

    let mut store = SegmentStore::new();
    for ((at, _, _), segs) in &retained {
        for seg in segs {
            let ingress = t.neighbor(LinkEnd::new(seg.last().as_id, seg.last().egress.expect("sent"))).expect("link");
            let s = terminate(t, seg, *at, ingress.iface, cfg.disclosure_of(*at), cfg.entry_time(seg.entries.len()))
                .expect("valid termination");
            store.insert(*at, Arc::new(s));
        }
    }
    BeaconingOutcome { store, rounds_run, converged }
}

/// Synchronous-round beaconing over `t`.
///
/// Each round every AS keeps the best `k` beacons per (origin, kind) among
/// those its neighbours forwarded in the previous round, ranked by the
/// selection policy. Core beacons are flooded over core links, intra-ISD
/// beacons go from providers to customers. Every retained beacon is
/// terminated and registered at the AS that holds it.
pub fn run_beaconing(t: &Topology, cfg: &BeaconingConfig) -> SegmentStore {
    run_beaconing_detailed(t, cfg).store
}
