//! Path segments, AS entries and the per-hop latency attribute.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::topology::{DirectedLatency, InterfaceId, IsdAsId, LinkEnd, LinkKind, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SegmentKind {
    Core,
    IntraIsd,
}

impl SegmentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentKind::Core => "core",
            SegmentKind::IntraIsd => "intra_isd",
        }
    }
}

/// Whether an AS attaches its latency attribute when it signs an entry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisclosurePolicy {
    #[default]
    Full,
    None,
}

/// Latencies between the entry's egress interface and one other interface `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionLatency {
    /// `j` → egress.
    pub fwd: DirectedLatency,
    /// egress → `j`.
    pub rev: DirectedLatency,
}

/// Latency attribute of one AS entry. "fwd" is the beacon's construction
/// direction (away from the originating core AS).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyInfo {
    pub intra_fwd: DirectedLatency,
    pub intra_rev: DirectedLatency,
    pub inter_fwd: f64,
    pub inter_rev: f64,
    pub junctions: BTreeMap<InterfaceId, JunctionLatency>,
    /// Opaque measurement-certainty annotation, carried but never interpreted.
    pub certainty: Option<String>,
}

impl LatencyInfo {
    fn zero() -> Self {
        Self {
            intra_fwd: DirectedLatency::ZERO,
            intra_rev: DirectedLatency::ZERO,
            inter_fwd: 0.0,
            inter_rev: 0.0,
            junctions: BTreeMap::new(),
            certainty: None,
        }
    }
}

/// Stand-in for the AS signature: signer, virtual timestamp and a digest of the entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureStub {
    pub signer: IsdAsId,
    pub timestamp_ms: u64,
    pub tag: Vec<u8>,
}

/// One AS's record in a segment.
///
/// `ingress` is absent on the originating entry, `egress` on the terminal entry
/// that the registering AS appends. Between origination and the first
/// propagation the origin entry has no egress either.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsEntry {
    pub as_id: IsdAsId,
    pub ingress: Option<InterfaceId>,
    pub egress: Option<InterfaceId>,
    pub latency: Option<LatencyInfo>,
    pub attestation: SignatureStub,
}

impl AsEntry {
    /// Digest over everything the attestation covers.
    pub fn digest(&self) -> Vec<u8> {
        let mut h = Sha256::new();
        h.update(self.as_id.to_string());
        h.update(format!("|{:?}|{:?}|{}|", self.ingress, self.egress, self.attestation.timestamp_ms));
        if let Some(l) = &self.latency {
            h.update(serde_json::to_vec(l).expect("latency info serializes"));
        }
        h.finalize()[..16].to_vec()
    }

    fn sign(&mut self, now_ms: u64) {
        self.attestation = SignatureStub { signer: self.as_id, timestamp_ms: now_ms, tag: Vec::new() };
        self.attestation.tag = self.digest();
    }

    pub fn is_disclosed(&self) -> bool {
        self.latency.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SegmentId(pub String);

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub kind: SegmentKind,
    pub entries: Vec<AsEntry>,
    pub id: SegmentId,
}

impl PathSegment {
    /// Id over the kind and the routing part of each entry; independent of
    /// timestamps and latency attributes.
    pub fn compute_id(kind: SegmentKind, entries: &[AsEntry]) -> SegmentId {
        let mut h = Sha256::new();
        h.update(kind.as_str());
        for e in entries {
            h.update(format!(";{}:{:?}:{:?}", e.as_id, e.ingress.map(|i| i.0), e.egress.map(|i| i.0)));
        }
        SegmentId(hex::encode(&h.finalize()[..10]))
    }

    fn refresh_id(&mut self) {
        self.id = Self::compute_id(self.kind, &self.entries);
    }

    pub fn origin(&self) -> IsdAsId {
        self.entries[0].as_id
    }

    pub fn last(&self) -> &AsEntry {
        self.entries.last().expect("segments have at least one entry")
    }

    pub fn contains_as(&self, as_id: IsdAsId) -> bool {
        self.entries.iter().any(|e| e.as_id == as_id)
    }

    pub fn position(&self, as_id: IsdAsId) -> Option<usize> {
        self.entries.iter().position(|e| e.as_id == as_id)
    }

    pub fn is_terminated(&self) -> bool {
        self.entries.len() > 1 && self.last().egress.is_none()
    }

    /// Sum of disclosed forward latencies; undisclosed entries count as zero.
    pub fn accumulated_latency(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|e| e.latency.as_ref())
            .map(|l| l.intra_fwd.min + l.inter_fwd)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeaconError {
    #[error("{0} is not a core AS")]
    NotCore(IsdAsId),
    #[error("unknown AS {0}")]
    UnknownAs(IsdAsId),
    #[error("no link attached at {0}")]
    NoSuchLink(LinkEnd),
    #[error("link from {from} does not arrive at {to}")]
    LinkMismatch { from: LinkEnd, to: LinkEnd },
    #[error("ingress and egress are both {0}")]
    IngressEqualsEgress(LinkEnd),
    #[error("{kind} segments cannot use the {link:?} link at {at}")]
    WrongLinkKind { kind: &'static str, link: LinkKind, at: LinkEnd },
    #[error("the origin entry has not been sent out yet")]
    OriginPending,
    #[error("the origin entry already has an egress")]
    AlreadyDeparted,
    #[error("segment is already terminated")]
    Terminated,
    #[error("{0} already appears on the segment")]
    Loop(IsdAsId),
}

/// Starts a beacon at a core AS. The single entry has neither ingress nor
/// egress until [`depart`] sends it over a link.
pub fn originate(topo: &Topology, origin: IsdAsId, kind: SegmentKind, now_ms: u64) -> Result<PathSegment, BeaconError> {
    let node = topo.as_node(origin).ok_or(BeaconError::UnknownAs(origin))?;
    if !node.is_core {
        return Err(BeaconError::NotCore(origin));
    }
    let mut entry = AsEntry {
        as_id: origin,
        ingress: None,
        egress: None,
        latency: None,
        attestation: SignatureStub { signer: origin, timestamp_ms: now_ms, tag: Vec::new() },
    };
    entry.sign(now_ms);
    let mut seg = PathSegment { kind, entries: vec![entry], id: SegmentId(String::new()) };
    seg.refresh_id();
    Ok(seg)
}

fn check_link(topo: &Topology, kind: SegmentKind, out: LinkEnd) -> Result<LinkEnd, BeaconError> {
    let (_, link) = topo.link_at(out).ok_or(BeaconError::NoSuchLink(out))?;
    let allowed = match kind {
        SegmentKind::Core => link.kind == LinkKind::Core,
        SegmentKind::IntraIsd => link.kind == LinkKind::ParentChild && link.a == out,
    };
    if !allowed {
        return Err(BeaconError::WrongLinkKind { kind: kind.as_str(), link: link.kind, at: out });
    }
    Ok(link.other_end(out).expect("attached end"))
}

/// Latency attribute for an entry at `as_id` traversed ingress → egress.
///
/// Core-segment entries only describe the traversed pair. Intra-ISD entries add
/// the junction latency between the egress and every interface with a lower
/// id. The originating entry of an intra-ISD segment additionally covers every
/// core-link interface of the core AS, because core-segment entries carry no
/// junction information and the two must still combine.
fn latency_info(topo: &Topology, kind: SegmentKind, as_id: IsdAsId, ingress: Option<InterfaceId>, egress: InterfaceId) -> LatencyInfo {
    let intra = |from, to| topo.intra_latency(as_id, from, to).expect("interfaces validated");
    let (intra_fwd, intra_rev) = match ingress {
        Some(i) => (intra(i, egress), intra(egress, i)),
        None => (DirectedLatency::ZERO, DirectedLatency::ZERO),
    };
    let out = LinkEnd::new(as_id, egress);
    let (_, link) = topo.link_at(out).expect("egress link validated");
    let far = link.other_end(out).expect("attached end");
    let inter_fwd = link.latency_from(out).expect("attached end").min;
    let inter_rev = link.latency_from(far).expect("attached end").min;

    let mut junctions = BTreeMap::new();
    if kind == SegmentKind::IntraIsd {
        let node = topo.as_node(as_id).expect("known AS");
        for &j in node.interfaces.keys() {
            let lower = j < egress;
            let core_iface = ingress.is_none()
                && j != egress
                && topo.link_at(LinkEnd::new(as_id, j)).is_some_and(|(_, l)| l.kind == LinkKind::Core);
            if lower || core_iface {
                junctions.insert(j, JunctionLatency { fwd: intra(j, egress), rev: intra(egress, j) });
            }
        }
    }
    LatencyInfo { intra_fwd, intra_rev, inter_fwd, inter_rev, junctions, certainty: None }
}

/// Sends a freshly originated segment out through `egress` of the origin AS.
pub fn depart(topo: &Topology, seg: &PathSegment, egress: InterfaceId, disclose: DisclosurePolicy) -> Result<PathSegment, BeaconError> {
    if seg.entries.len() != 1 {
        return Err(BeaconError::AlreadyDeparted);
    }
    let origin = &seg.entries[0];
    if origin.egress.is_some() {
        return Err(BeaconError::AlreadyDeparted);
    }
    check_link(topo, seg.kind, LinkEnd::new(origin.as_id, egress))?;
    let mut out = seg.clone();
    let e = &mut out.entries[0];
    e.egress = Some(egress);
    e.latency = (disclose == DisclosurePolicy::Full).then(|| latency_info(topo, seg.kind, e.as_id, None, egress));
    let ts = e.attestation.timestamp_ms;
    e.sign(ts);
    out.refresh_id();
    Ok(out)
}

fn arriving_check(topo: &Topology, seg: &PathSegment, at: IsdAsId, ingress: InterfaceId) -> Result<(), BeaconError> {
    let last = seg.last();
    if seg.is_terminated() {
        return Err(BeaconError::Terminated);
    }
    let egress = last.egress.ok_or(BeaconError::OriginPending)?;
    let from = LinkEnd::new(last.as_id, egress);
    let to = LinkEnd::new(at, ingress);
    if topo.neighbor(from) != Some(to) {
        return Err(BeaconError::LinkMismatch { from, to });
    }
    if seg.contains_as(at) {
        return Err(BeaconError::Loop(at));
    }
    Ok(())
}

/// Appends the entry of `at`, which received `seg` on `ingress` and forwards it through `egress`.
pub fn extend(
    topo: &Topology,
    seg: &PathSegment,
    at: IsdAsId,
    ingress: InterfaceId,
    egress: InterfaceId,
    disclose: DisclosurePolicy,
    now_ms: u64,
) -> Result<PathSegment, BeaconError> {
    if topo.as_node(at).is_none() {
        return Err(BeaconError::UnknownAs(at));
    }
    if ingress == egress {
        return Err(BeaconError::IngressEqualsEgress(LinkEnd::new(at, egress)));
    }
    arriving_check(topo, seg, at, ingress)?;
    check_link(topo, seg.kind, LinkEnd::new(at, egress))?;
    let mut entry = AsEntry {
        as_id: at,
        ingress: Some(ingress),
        egress: Some(egress),
        latency: (disclose == DisclosurePolicy::Full).then(|| latency_info(topo, seg.kind, at, Some(ingress), egress)),
        attestation: SignatureStub { signer: at, timestamp_ms: now_ms, tag: Vec::new() },
    };
    entry.sign(now_ms);
    let mut out = seg.clone();
    out.entries.push(entry);
    out.refresh_id();
    Ok(out)
}

/// Appends the registering AS's own entry (no egress). A disclosed terminal
/// entry carries an all-zero attribute that marks the AS as participating.
pub fn terminate(
    topo: &Topology,
    seg: &PathSegment,
    at: IsdAsId,
    ingress: InterfaceId,
    disclose: DisclosurePolicy,
    now_ms: u64,
) -> Result<PathSegment, BeaconError> {
    if topo.as_node(at).is_none() {
        return Err(BeaconError::UnknownAs(at));
    }
    arriving_check(topo, seg, at, ingress)?;
    let mut entry = AsEntry {
        as_id: at,
        ingress: Some(ingress),
        egress: None,
        latency: (disclose == DisclosurePolicy::Full).then(LatencyInfo::zero),
        attestation: SignatureStub { signer: at, timestamp_ms: now_ms, tag: Vec::new() },
    };
    entry.sign(now_ms);
    let mut out = seg.clone();
    out.entries.push(entry);
    out.refresh_id();
    Ok(out)
}

/// Checks signer identity, entry digests and freshness against `now_ms`.
pub fn verify_attestations(seg: &PathSegment, max_age_ms: u64, now_ms: u64) -> bool {
    seg.entries.iter().all(|e| {
        e.attestation.signer == e.as_id
            && e.attestation.tag == e.digest()
            && e.attestation.timestamp_ms <= now_ms
            && now_ms - e.attestation.timestamp_ms <= max_age_ms
    })
}
