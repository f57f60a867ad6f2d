//! ISD/AS topologies with geo-located interfaces and per-direction latencies.
//!
//! A [`Topology`] is immutable once built. It is assembled through a
//! [`TopologyBuilder`], which resolves default latencies and runs the full
//! validation before handing out the finished value.

mod caida;
mod format;
mod prune;
mod synth;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{great_circle_latency_at, GeoCoord, InvalidCoordinate, DEFAULT_PROPAGATION_SPEED_KM_S};

pub use caida::{import_caida, CaidaImportOptions};
pub use format::{load_topology, serialize_topology};
pub use prune::prune_to_top_degree;
pub use synth::{synth_topology, SynthParams};

/// Identifier of an AS inside an isolation domain, written `isd-asn`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IsdAsId {
    pub isd: u16,
    pub asn: u64,
}

impl IsdAsId {
    pub const fn new(isd: u16, asn: u64) -> Self {
        Self { isd, asn }
    }
}

impl fmt::Display for IsdAsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.isd, self.asn)
    }
}

impl FromStr for IsdAsId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (isd, asn) = s.split_once('-').ok_or_else(|| format!("expected <isd>-<asn>, got {s:?}"))?;
        let isd = isd.parse().map_err(|_| format!("bad ISD number in {s:?}"))?;
        let asn = asn.parse().map_err(|_| format!("bad AS number in {s:?}"))?;
        Ok(Self { isd, asn })
    }
}

/// AS-local interface identifier. The ordering drives the junction dedup rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InterfaceId(pub u32);

impl fmt::Display for InterfaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Propagation latency in one direction; `max` is set when several routes exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectedLatency {
    pub min: f64,
    pub max: Option<f64>,
}

impl DirectedLatency {
    pub const ZERO: Self = Self { min: 0.0, max: None };

    pub fn exact(ms: f64) -> Self {
        Self { min: ms, max: None }
    }

    pub fn with_max(min: f64, max: f64) -> Self {
        Self { min, max: Some(max) }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite()
            && self.min >= 0.0
            && self.max.map_or(true, |m| m.is_finite() && m >= self.min)
    }

    /// Folds another route between the same pair of interfaces into this relation.
    pub fn merge_route(self, other: DirectedLatency) -> Self {
        let min = self.min.min(other.min);
        let max = self.max.unwrap_or(self.min).max(other.max.unwrap_or(other.min));
        Self { min, max: Some(max) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    Core,
    /// `a` is the provider (parent), `b` the customer (child).
    ParentChild,
    Peering,
}

impl LinkKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LinkKind::Core => "core",
            LinkKind::ParentChild => "parent_child",
            LinkKind::Peering => "peering",
        }
    }
}

impl FromStr for LinkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "core" => Ok(LinkKind::Core),
            "parent_child" => Ok(LinkKind::ParentChild),
            "peering" => Ok(LinkKind::Peering),
            other => Err(format!("unknown link kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkEnd {
    pub as_id: IsdAsId,
    pub iface: InterfaceId,
}

impl LinkEnd {
    pub fn new(as_id: IsdAsId, iface: InterfaceId) -> Self {
        Self { as_id, iface }
    }
}

impl fmt::Display for LinkEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.as_id, self.iface)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: LinkEnd,
    pub b: LinkEnd,
    pub kind: LinkKind,
    pub latency_ab: DirectedLatency,
    pub latency_ba: DirectedLatency,
}

impl Link {
    /// Latency when leaving through `from`; `None` if `from` is not an end of this link.
    pub fn latency_from(&self, from: LinkEnd) -> Option<DirectedLatency> {
        if from == self.a {
            Some(self.latency_ab)
        } else if from == self.b {
            Some(self.latency_ba)
        } else {
            None
        }
    }

    pub fn other_end(&self, end: LinkEnd) -> Option<LinkEnd> {
        if end == self.a {
            Some(self.b)
        } else if end == self.b {
            Some(self.a)
        } else {
            None
        }
    }

    pub fn touches(&self, as_id: IsdAsId) -> bool {
        self.a.as_id == as_id || self.b.as_id == as_id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsNode {
    pub id: IsdAsId,
    pub is_core: bool,
    pub interfaces: BTreeMap<InterfaceId, GeoCoord>,
    /// Explicitly configured intra-domain latencies keyed by (from, to). Pairs
    /// without an entry fall back to the reverse entry, then to the great-circle
    /// latency between the two interfaces.
    pub intra: BTreeMap<(InterfaceId, InterfaceId), DirectedLatency>,
}

impl AsNode {
    pub fn new(id: IsdAsId, is_core: bool) -> Self {
        Self { id, is_core, interfaces: BTreeMap::new(), intra: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("ISD number must be at least 1 ({0})")]
    IsdZero(IsdAsId),
    #[error("duplicate AS {0}")]
    DuplicateAs(IsdAsId),
    #[error("unknown AS {0}")]
    UnknownAs(IsdAsId),
    #[error("duplicate interface {0}")]
    DuplicateInterface(LinkEnd),
    #[error("unknown interface {0}")]
    UnknownInterface(LinkEnd),
    #[error("interface {0} is attached to more than one link")]
    InterfaceInUse(LinkEnd),
    #[error("link {0} connects an AS to itself")]
    SelfLink(LinkEnd),
    #[error("invalid latency on {what}: {detail}")]
    InvalidLatency { what: String, detail: String },
    #[error("core link {0} - {1} requires both ASes to be core")]
    CoreLinkNonCore(LinkEnd, LinkEnd),
    #[error("parent_child link {0} - {1} must stay inside one ISD and have a non-core child")]
    BadParentChild(LinkEnd, LinkEnd),
    #[error("topology disconnected ({reason}): {}", fmt_ids(.component))]
    Disconnected { reason: String, component: Vec<IsdAsId> },
    #[error(transparent)]
    Coordinate(#[from] InvalidCoordinate),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
}

fn fmt_ids(ids: &[IsdAsId]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

/// A validated topology.
#[derive(Debug, Clone)]
pub struct Topology {
    ases: BTreeMap<IsdAsId, AsNode>,
    links: Vec<Link>,
    speed_km_s: f64,
    iface_links: BTreeMap<LinkEnd, usize>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        self.ases == other.ases && self.links == other.links && self.speed_km_s == other.speed_km_s
    }
}

impl Topology {
    /// Validates and indexes the given parts.
    pub fn new(ases: impl IntoIterator<Item = AsNode>, links: Vec<Link>, speed_km_s: f64) -> Result<Self, TopologyError> {
        let mut map = BTreeMap::new();
        for node in ases {
            if map.insert(node.id, node.clone()).is_some() {
                return Err(TopologyError::DuplicateAs(node.id));
            }
        }
        let mut topo = Self { ases: map, links, speed_km_s, iface_links: BTreeMap::new() };
        topo.validate()?;
        Ok(topo)
    }

    pub fn ases(&self) -> impl Iterator<Item = &AsNode> {
        self.ases.values()
    }

    pub fn as_ids(&self) -> impl Iterator<Item = IsdAsId> + '_ {
        self.ases.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.ases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ases.is_empty()
    }

    pub fn as_node(&self, id: IsdAsId) -> Option<&AsNode> {
        self.ases.get(&id)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, idx: usize) -> &Link {
        &self.links[idx]
    }

    pub fn speed_km_s(&self) -> f64 {
        self.speed_km_s
    }

    pub fn is_core(&self, id: IsdAsId) -> bool {
        self.ases.get(&id).is_some_and(|n| n.is_core)
    }

    pub fn core_ases(&self) -> impl Iterator<Item = IsdAsId> + '_ {
        self.ases.values().filter(|n| n.is_core).map(|n| n.id)
    }

    pub fn coord(&self, end: LinkEnd) -> Option<GeoCoord> {
        self.ases.get(&end.as_id)?.interfaces.get(&end.iface).copied()
    }

    /// The link attached to an interface, with its index.
    pub fn link_at(&self, end: LinkEnd) -> Option<(usize, &Link)> {
        self.iface_links.get(&end).map(|&i| (i, &self.links[i]))
    }

    pub fn neighbor(&self, end: LinkEnd) -> Option<LinkEnd> {
        self.link_at(end).and_then(|(_, l)| l.other_end(end))
    }

    /// Links touching `as_id`, as (index, local end, remote end).
    pub fn links_of(&self, as_id: IsdAsId) -> Vec<(usize, LinkEnd, LinkEnd)> {
        let Some(node) = self.ases.get(&as_id) else { return Vec::new() };
        node.interfaces
            .keys()
            .filter_map(|&iface| {
                let local = LinkEnd::new(as_id, iface);
                let (idx, link) = self.link_at(local)?;
                Some((idx, local, link.other_end(local)?))
            })
            .collect()
    }

    pub fn degree(&self, as_id: IsdAsId) -> usize {
        self.links.iter().filter(|l| l.touches(as_id)).count()
    }

    /// Minimum-route intra-domain latency from interface `from` to `to`.
    pub fn intra_latency(&self, as_id: IsdAsId, from: InterfaceId, to: InterfaceId) -> Option<DirectedLatency> {
        let node = self.ases.get(&as_id)?;
        let (ca, cb) = (node.interfaces.get(&from)?, node.interfaces.get(&to)?);
        if from == to {
            return Some(DirectedLatency::ZERO);
        }
        if let Some(l) = node.intra.get(&(from, to)).or_else(|| node.intra.get(&(to, from))) {
            return Some(*l);
        }
        Some(DirectedLatency::exact(great_circle_latency_at(*ca, *cb, self.speed_km_s)))
    }

    fn validate(&mut self) -> Result<(), TopologyError> {
        for node in self.ases.values() {
            if node.id.isd == 0 {
                return Err(TopologyError::IsdZero(node.id));
            }
            for (&(from, to), lat) in &node.intra {
                for iface in [from, to] {
                    if !node.interfaces.contains_key(&iface) {
                        return Err(TopologyError::UnknownInterface(LinkEnd::new(node.id, iface)));
                    }
                }
                if !lat.is_valid() {
                    return Err(TopologyError::InvalidLatency {
                        what: format!("intra {} {} {}", node.id, from, to),
                        detail: format!("{lat:?}"),
                    });
                }
            }
        }

        let mut index = BTreeMap::new();
        for (i, link) in self.links.iter().enumerate() {
            for end in [link.a, link.b] {
                let node = self.ases.get(&end.as_id).ok_or(TopologyError::UnknownAs(end.as_id))?;
                if !node.interfaces.contains_key(&end.iface) {
                    return Err(TopologyError::UnknownInterface(end));
                }
                if index.insert(end, i).is_some() {
                    return Err(TopologyError::InterfaceInUse(end));
                }
            }
            if link.a.as_id == link.b.as_id {
                return Err(TopologyError::SelfLink(link.a));
            }
            for (dir, lat) in [("a->b", link.latency_ab), ("b->a", link.latency_ba)] {
                if !lat.is_valid() {
                    return Err(TopologyError::InvalidLatency {
                        what: format!("link {} {} ({dir})", link.a, link.b),
                        detail: format!("{lat:?}"),
                    });
                }
            }
            let (core_a, core_b) = (self.ases[&link.a.as_id].is_core, self.ases[&link.b.as_id].is_core);
            match link.kind {
                LinkKind::Core if !(core_a && core_b) => return Err(TopologyError::CoreLinkNonCore(link.a, link.b)),
                LinkKind::ParentChild if core_b || link.a.as_id.isd != link.b.as_id.isd => {
                    return Err(TopologyError::BadParentChild(link.a, link.b))
                }
                _ => {}
            }
        }
        self.iface_links = index;
        self.check_connectivity()
    }

    fn check_connectivity(&self) -> Result<(), TopologyError> {
        let cores: Vec<IsdAsId> = self.core_ases().collect();
        if cores.is_empty() {
            if self.ases.is_empty() {
                return Ok(());
            }
            return Err(TopologyError::Disconnected {
                reason: "no core AS".into(),
                component: self.ases.keys().copied().collect(),
            });
        }

        let mut core_adj: BTreeMap<IsdAsId, Vec<IsdAsId>> = BTreeMap::new();
        let mut child_adj: BTreeMap<IsdAsId, Vec<IsdAsId>> = BTreeMap::new();
        for link in &self.links {
            match link.kind {
                LinkKind::Core => {
                    core_adj.entry(link.a.as_id).or_default().push(link.b.as_id);
                    core_adj.entry(link.b.as_id).or_default().push(link.a.as_id);
                }
                LinkKind::ParentChild => child_adj.entry(link.a.as_id).or_default().push(link.b.as_id),
                LinkKind::Peering => {}
            }
        }

        let reached = bfs(&[cores[0]], &core_adj);
        let unreached: Vec<IsdAsId> = cores.iter().copied().filter(|c| !reached.contains(c)).collect();
        if !unreached.is_empty() {
            return Err(TopologyError::Disconnected { reason: "core ASes not joined by core links".into(), component: unreached });
        }

        let reached = bfs(&cores, &child_adj);
        let orphans: Vec<IsdAsId> = self.ases.keys().copied().filter(|a| !reached.contains(a)).collect();
        if !orphans.is_empty() {
            return Err(TopologyError::Disconnected {
                reason: "non-core ASes unreachable from any core via parent_child links".into(),
                component: orphans,
            });
        }
        Ok(())
    }

    /// Longest shortest-hop distance over the core graph and the provider→customer hierarchy.
    /// Beaconing needs at least this many rounds; latency-ranked selection may need up to `len()`.
    pub fn hop_diameter(&self) -> usize {
        let mut core_adj: BTreeMap<IsdAsId, Vec<IsdAsId>> = BTreeMap::new();
        let mut child_adj: BTreeMap<IsdAsId, Vec<IsdAsId>> = BTreeMap::new();
        for link in &self.links {
            match link.kind {
                LinkKind::Core => {
                    core_adj.entry(link.a.as_id).or_default().push(link.b.as_id);
                    core_adj.entry(link.b.as_id).or_default().push(link.a.as_id);
                }
                LinkKind::ParentChild => child_adj.entry(link.a.as_id).or_default().push(link.b.as_id),
                LinkKind::Peering => {}
            }
        }
        let mut best = 0;
        for core in self.core_ases() {
            best = best.max(max_bfs_depth(core, &core_adj)).max(max_bfs_depth(core, &child_adj));
        }
        best
    }
}

fn bfs(starts: &[IsdAsId], adj: &BTreeMap<IsdAsId, Vec<IsdAsId>>) -> BTreeSet<IsdAsId> {
    let mut seen: BTreeSet<IsdAsId> = starts.iter().copied().collect();
    let mut queue: VecDeque<IsdAsId> = starts.iter().copied().collect();
    while let Some(n) = queue.pop_front() {
        for &m in adj.get(&n).into_iter().flatten() {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    seen
}

fn max_bfs_depth(start: IsdAsId, adj: &BTreeMap<IsdAsId, Vec<IsdAsId>>) -> usize {
    let mut depth = BTreeMap::from([(start, 0usize)]);
    let mut queue = VecDeque::from([start]);
    let mut best = 0;
    while let Some(n) = queue.pop_front() {
        let d = depth[&n];
        best = best.max(d);
        for &m in adj.get(&n).into_iter().flatten() {
            if !depth.contains_key(&m) {
                depth.insert(m, d + 1);
                queue.push_back(m);
            }
        }
    }
    best
}

/// Incremental construction with default-latency resolution.
#[derive(Debug, Clone)]
pub struct TopologyBuilder {
    ases: BTreeMap<IsdAsId, AsNode>,
    links: Vec<(LinkEnd, LinkEnd, LinkKind, Option<(f64, f64)>)>,
    speed_km_s: f64,
}

impl Default for TopologyBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl TopologyBuilder {
    pub fn new() -> Self {
        Self { ases: BTreeMap::new(), links: Vec::new(), speed_km_s: DEFAULT_PROPAGATION_SPEED_KM_S }
    }

    pub fn speed_km_s(mut self, speed: f64) -> Self {
        self.speed_km_s = speed;
        self
    }

    pub fn set_speed_km_s(&mut self, speed: f64) {
        self.speed_km_s = speed;
    }

    pub fn add_as(&mut self, id: IsdAsId, is_core: bool) -> Result<&mut Self, TopologyError> {
        if self.ases.insert(id, AsNode::new(id, is_core)).is_some() {
            return Err(TopologyError::DuplicateAs(id));
        }
        Ok(self)
    }

    pub fn add_interface(&mut self, as_id: IsdAsId, iface: InterfaceId, at: GeoCoord) -> Result<&mut Self, TopologyError> {
        let node = self.ases.get_mut(&as_id).ok_or(TopologyError::UnknownAs(as_id))?;
        if node.interfaces.insert(iface, at).is_some() {
            return Err(TopologyError::DuplicateInterface(LinkEnd::new(as_id, iface)));
        }
        Ok(self)
    }

    /// Adds the next free interface id on `as_id`.
    pub fn add_next_interface(&mut self, as_id: IsdAsId, at: GeoCoord) -> Result<InterfaceId, TopologyError> {
        let node = self.ases.get_mut(&as_id).ok_or(TopologyError::UnknownAs(as_id))?;
        let next = InterfaceId(node.interfaces.keys().next_back().map_or(1, |i| i.0 + 1));
        node.interfaces.insert(next, at);
        Ok(next)
    }

    /// Adds a link. Without explicit latencies, core and parent_child links take the
    /// great-circle latency between their interfaces and peering links take 0 ms.
    pub fn add_link(&mut self, a: LinkEnd, b: LinkEnd, kind: LinkKind, latency: Option<(f64, f64)>) -> &mut Self {
        self.links.push((a, b, kind, latency));
        self
    }

    /// Records one intra-domain route. Several routes for the same ordered pair
    /// collapse to their minimum, with the maximum kept alongside.
    pub fn add_intra_route(&mut self, as_id: IsdAsId, from: InterfaceId, to: InterfaceId, latency: DirectedLatency) -> Result<&mut Self, TopologyError> {
        let node = self.ases.get_mut(&as_id).ok_or(TopologyError::UnknownAs(as_id))?;
        node.intra
            .entry((from, to))
            .and_modify(|cur| *cur = cur.merge_route(latency))
            .or_insert(latency);
        Ok(self)
    }

    pub fn build(self) -> Result<Topology, TopologyError> {
        let mut links = Vec::with_capacity(self.links.len());
        for (a, b, kind, latency) in self.links {
            let (ab, ba) = match latency {
                Some(l) => l,
                None if kind == LinkKind::Peering => (0.0, 0.0),
                None => {
                    let ca = self.ases.get(&a.as_id).and_then(|n| n.interfaces.get(&a.iface));
                    let cb = self.ases.get(&b.as_id).and_then(|n| n.interfaces.get(&b.iface));
                    match (ca, cb) {
                        (Some(ca), Some(cb)) => {
                            let l = great_circle_latency_at(*ca, *cb, self.speed_km_s);
                            (l, l)
                        }
                        (None, _) => return Err(unknown_end(&self.ases, a)),
                        (_, None) => return Err(unknown_end(&self.ases, b)),
                    }
                }
            };
            links.push(Link { a, b, kind, latency_ab: DirectedLatency::exact(ab), latency_ba: DirectedLatency::exact(ba) });
        }
        Topology::new(self.ases.into_values(), links, self.speed_km_s)
    }
}

fn unknown_end(ases: &BTreeMap<IsdAsId, AsNode>, end: LinkEnd) -> TopologyError {
    if ases.contains_key(&end.as_id) {
        TopologyError::UnknownInterface(end)
    } else {
        TopologyError::UnknownAs(end.as_id)
    }
}
