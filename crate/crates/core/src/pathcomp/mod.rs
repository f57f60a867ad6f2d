//! Combination of path segments into end-to-end paths and propagation-latency
//! estimation over the disclosed latency attributes.

mod enumerate;
mod estimate;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::beaconing::{AsEntry, PathSegment, SegmentKind};
use crate::topology::{InterfaceId, IsdAsId, LinkEnd, LinkKind, Topology};

pub use enumerate::{enumerate_candidates, enumerate_paths, DEFAULT_PATH_LIMIT};
pub use estimate::{
    estimate_latency, estimate_latency_reverse, estimate_round_trip, Completeness, Contribution, ContributionKind, EstimateError,
    LatencyEstimate, MissingInfoPolicy, ValueSource,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Up,
    Core,
    Down,
}

/// One segment's share of a path: the entries used, in travel order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPart {
    pub role: Role,
    pub segment: Arc<PathSegment>,
    /// Travelled against the segment's construction direction.
    pub reversed: bool,
    pub order: Vec<usize>,
}

impl PathPart {
    fn new(role: Role, segment: Arc<PathSegment>, from: usize, to: usize) -> Self {
        let reversed = from > to;
        let order = if reversed { (to..=from).rev().collect() } else { (from..=to).collect() };
        Self { role, segment, reversed, order }
    }

    pub fn entry(&self, i: usize) -> &AsEntry {
        &self.segment.entries[self.order[i]]
    }

    fn first_as(&self) -> IsdAsId {
        self.entry(0).as_id
    }

    fn last_as(&self) -> IsdAsId {
        self.entry(self.order.len() - 1).as_id
    }

    /// (ingress, egress) of entry `i` in travel direction.
    fn travel_ifaces(&self, i: usize) -> (Option<InterfaceId>, Option<InterfaceId>) {
        let e = self.entry(i);
        if self.reversed {
            (e.egress, e.ingress)
        } else {
            (e.ingress, e.egress)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Joint {
    /// Consecutive parts meet inside one AS present in both segments.
    Shared(IsdAsId),
    /// Consecutive parts are joined by a peering link, `from` on the earlier part.
    Peering { link: usize, from: LinkEnd, to: LinkEnd },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Hop {
    pub as_id: IsdAsId,
    pub ingress: Option<InterfaceId>,
    pub egress: Option<InterfaceId>,
}

/// Travel through a joint AS from one segment's interface into the next one's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Junction {
    pub as_id: IsdAsId,
    pub from: InterfaceId,
    pub to: InterfaceId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndPath {
    pub parts: Vec<PathPart>,
    pub joints: Vec<Joint>,
    pub hops: Vec<Hop>,
    pub junctions: Vec<Junction>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CombineError {
    #[error("no segment given")]
    Empty,
    #[error("{role:?} role needs a {expected} segment")]
    KindMismatch { role: Role, expected: &'static str },
    #[error("segments meet at {left} and {right}")]
    JunctionMismatch { left: IsdAsId, right: IsdAsId },
    #[error("{0} is not on the segment")]
    NotOnSegment(IsdAsId),
    #[error("path visits {0} twice")]
    Loop(IsdAsId),
    #[error("path would leave {0} through the interface it entered")]
    SameInterface(IsdAsId),
    #[error("link {0} is not a peering link between the given ASes")]
    NotPeeringLink(usize),
    #[error("a path needs at least two ASes")]
    TooShort,
}

fn hop_token(h: &Hop) -> String {
    let f = |i: Option<InterfaceId>| i.map_or("-".to_string(), |i| i.to_string());
    format!("{}[{}:{}]", h.as_id, f(h.ingress), f(h.egress))
}

impl EndToEndPath {
    pub fn src(&self) -> IsdAsId {
        self.hops[0].as_id
    }

    pub fn dst(&self) -> IsdAsId {
        self.hops.last().expect("non-empty").as_id
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }

    /// `1-5[-:2] 1-3[1:4] 1-7[3:-]`: every AS with travel ingress and egress.
    pub fn hop_string(&self) -> String {
        self.hops.iter().map(hop_token).collect::<Vec<_>>().join(" ")
    }

    /// Short stable id derived from the hop string.
    pub fn path_id(&self) -> String {
        hex::encode(&Sha256::digest(self.hop_string().as_bytes())[..6])
    }

    pub fn segment_count(&self) -> usize {
        self.parts.len()
    }

    /// Builds a path from parts in travel order and the joints between them.
    pub fn assemble(parts: Vec<PathPart>, joints: Vec<Joint>) -> Result<Self, CombineError> {
        if parts.is_empty() {
            return Err(CombineError::Empty);
        }
        assert_eq!(joints.len() + 1, parts.len(), "one joint between consecutive parts");
        for p in &parts {
            let (ok, expected) = match p.role {
                Role::Core => (p.segment.kind == SegmentKind::Core, "core"),
                Role::Up | Role::Down => (p.segment.kind == SegmentKind::IntraIsd, "intra-ISD"),
            };
            if !ok {
                return Err(CombineError::KindMismatch { role: p.role, expected });
            }
        }

        let mut hops: Vec<Hop> = Vec::new();
        let mut junctions = Vec::new();
        for (k, part) in parts.iter().enumerate() {
            let n = part.order.len();
            for i in 0..n {
                let (ingress, egress) = part.travel_ifaces(i);
                let mut hop = Hop { as_id: part.entry(i).as_id, ingress, egress };
                if i == 0 && k > 0 {
                    match joints[k - 1] {
                        Joint::Shared(at) => {
                            let prev = hops.pop().expect("previous part has hops");
                            if prev.as_id != at || hop.as_id != at {
                                return Err(CombineError::JunctionMismatch { left: prev.as_id, right: hop.as_id });
                            }
                            hop.ingress = prev.ingress;
                            if let (Some(a), Some(b)) = (hop.ingress, hop.egress) {
                                if a == b {
                                    return Err(CombineError::SameInterface(at));
                                }
                                junctions.push(Junction { as_id: at, from: a, to: b });
                            }
                        }
                        Joint::Peering { to, .. } => {
                            if hop.as_id != to.as_id {
                                return Err(CombineError::JunctionMismatch { left: to.as_id, right: hop.as_id });
                            }
                            hop.ingress = Some(to.iface);
                        }
                    }
                }
                if i == n - 1 && k + 1 < parts.len() {
                    if let Joint::Peering { from, .. } = joints[k] {
                        if hop.as_id != from.as_id {
                            return Err(CombineError::JunctionMismatch { left: hop.as_id, right: from.as_id });
                        }
                        hop.egress = Some(from.iface);
                    }
                }
                hops.push(hop);
            }
        }
        hops[0].ingress = None;
        hops.last_mut().expect("non-empty").egress = None;
        if hops.len() < 2 {
            return Err(CombineError::TooShort);
        }
        let mut seen = BTreeSet::new();
        for h in &hops {
            if !seen.insert(h.as_id) {
                return Err(CombineError::Loop(h.as_id));
            }
            if h.ingress.is_some() && h.ingress == h.egress {
                return Err(CombineError::SameInterface(h.as_id));
            }
        }
        // peering-side junctions are recorded too, so every joint AS is listed
        for j in &joints {
            if let Joint::Peering { from, to, .. } = *j {
                let at_from = hops.iter().find(|h| h.as_id == from.as_id).expect("on path");
                let at_to = hops.iter().find(|h| h.as_id == to.as_id).expect("on path");
                if let Some(a) = at_from.ingress {
                    junctions.push(Junction { as_id: from.as_id, from: a, to: from.iface });
                }
                if let Some(b) = at_to.egress {
                    junctions.push(Junction { as_id: to.as_id, from: to.iface, to: b });
                }
            }
        }
        Ok(Self { parts, joints, hops, junctions })
    }
}

/// Ground-truth propagation latency along `hops` from the topology, travelled
/// forwards or backwards. Panics if consecutive hops are not linked.
pub fn hops_propagation(topo: &Topology, hops: &[Hop], backwards: bool) -> f64 {
    let mut total = 0.0;
    for h in hops {
        if let (Some(i), Some(e)) = (h.ingress, h.egress) {
            let (a, b) = if backwards { (e, i) } else { (i, e) };
            total += topo.intra_latency(h.as_id, a, b).expect("interfaces exist").min;
        }
    }
    for w in hops.windows(2) {
        let out = LinkEnd::new(w[0].as_id, w[0].egress.expect("linked hop"));
        let inn = LinkEnd::new(w[1].as_id, w[1].ingress.expect("linked hop"));
        let (_, link) = topo.link_at(out).expect("link exists");
        assert_eq!(link.other_end(out), Some(inn), "hops are not adjacent");
        total += link.latency_from(if backwards { inn } else { out }).expect("attached").min;
    }
    total
}

impl fmt::Display for EndToEndPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hop_string())
    }
}

fn up_part(up: Arc<PathSegment>, upto: usize) -> PathPart {
    let last = up.entries.len() - 1;
    PathPart::new(Role::Up, up, last, upto)
}

fn down_part(down: Arc<PathSegment>, from: usize) -> PathPart {
    let last = down.entries.len() - 1;
    PathPart::new(Role::Down, down, from, last)
}

/// Standard combination of up to three whole segments (up, core, down).
///
/// The up segment is travelled from its registering AS back to its origin core,
/// the down segment from its origin core to its registering AS. The core
/// segment is travelled in whichever direction connects the neighbours; alone,
/// it is travelled from its origin.
pub fn combine(up: Option<Arc<PathSegment>>, core: Option<Arc<PathSegment>>, down: Option<Arc<PathSegment>>) -> Result<EndToEndPath, CombineError> {
    let mut parts = Vec::new();
    let mut joints = Vec::new();
    if let Some(u) = up {
        parts.push(up_part(u, 0));
    }
    if let Some(c) = core {
        let last = c.entries.len() - 1;
        let enter = parts.last().map(|p| p.last_as());
        let forward = match (enter, down.as_ref()) {
            (Some(x), _) => {
                if c.origin() == x {
                    true
                } else if c.last().as_id == x {
                    false
                } else {
                    return Err(CombineError::JunctionMismatch { left: x, right: c.origin() });
                }
            }
            (None, Some(d)) => c.origin() != d.origin(),
            (None, None) => true,
        };
        let part = if forward { PathPart::new(Role::Core, c, 0, last) } else { PathPart::new(Role::Core, c, last, 0) };
        if !parts.is_empty() {
            joints.push(Joint::Shared(part.first_as()));
        }
        parts.push(part);
    }
    if let Some(d) = down {
        if let Some(prev) = parts.last() {
            joints.push(Joint::Shared(prev.last_as()));
        }
        parts.push(down_part(d, 0));
    }
    EndToEndPath::assemble(parts, joints)
}

/// Up and down segment joined at a non-core AS `at` on both of them.
pub fn combine_shortcut(up: Arc<PathSegment>, down: Arc<PathSegment>, at: IsdAsId) -> Result<EndToEndPath, CombineError> {
    let pu = up.position(at).ok_or(CombineError::NotOnSegment(at))?;
    let pd = down.position(at).ok_or(CombineError::NotOnSegment(at))?;
    EndToEndPath::assemble(vec![up_part(up, pu), down_part(down, pd)], vec![Joint::Shared(at)])
}

/// Up segment up to `from.as_id`, peering link `link`, down segment from `to.as_id`.
pub fn combine_peering(topo: &Topology, up: Arc<PathSegment>, down: Arc<PathSegment>, link: usize) -> Result<EndToEndPath, CombineError> {
    let l = topo.links().get(link).ok_or(CombineError::NotPeeringLink(link))?;
    if l.kind != LinkKind::Peering {
        return Err(CombineError::NotPeeringLink(link));
    }
    let (from, to) = if up.contains_as(l.a.as_id) && down.contains_as(l.b.as_id) {
        (l.a, l.b)
    } else if up.contains_as(l.b.as_id) && down.contains_as(l.a.as_id) {
        (l.b, l.a)
    } else {
        return Err(CombineError::NotPeeringLink(link));
    };
    let pu = up.position(from.as_id).expect("checked");
    let pd = down.position(to.as_id).expect("checked");
    EndToEndPath::assemble(vec![up_part(up, pu), down_part(down, pd)], vec![Joint::Peering { link, from, to }])
}
