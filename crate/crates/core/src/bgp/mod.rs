//! BGP baseline: Gao-Rexford route propagation with AS-path-length and
//! next-router-distance tie-breaks, hot-potato forwarding, and the comparison
//! against latency-aware path selection over beaconed segments.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beaconing::SegmentStore;
use crate::exec::{self, ExecMode};
use crate::geo::{great_circle_km, great_circle_latency_at, GeoCoord};
use crate::pathcomp::{enumerate_paths, Hop, MissingInfoPolicy, DEFAULT_PATH_LIMIT};
use crate::topology::{IsdAsId, LinkEnd, LinkKind, Topology};

/// What a neighbor is to the local AS. Core links count as peering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relationship {
    Provider,
    Peer,
    Customer,
}

impl Relationship {
    fn of(kind: LinkKind, local_is_a: bool) -> Self {
        match kind {
            LinkKind::ParentChild if local_is_a => Relationship::Customer,
            LinkKind::ParentChild => Relationship::Provider,
            LinkKind::Core | LinkKind::Peering => Relationship::Peer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgpRoute {
    pub dest: IsdAsId,
    /// ASes after the local one, ending at the destination; empty at the origin.
    pub as_path: Vec<IsdAsId>,
    pub next_hop: Option<IsdAsId>,
    /// Relationship of the neighbor the route was learned from; `None` at the origin.
    pub learned_from: Option<Relationship>,
    /// Egress link with the shortest next-router distance towards `next_hop`.
    pub egress: Option<LinkEnd>,
    pub next_router_km: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BgpRibs {
    /// Per AS, destination to chosen route.
    pub ribs: BTreeMap<IsdAsId, BTreeMap<IsdAsId, BgpRoute>>,
    pub rounds: usize,
}

impl BgpRibs {
    pub fn route(&self, at: IsdAsId, dest: IsdAsId) -> Option<&BgpRoute> {
        self.ribs.get(&at)?.get(&dest)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BgpError {
    #[error("unknown AS {0}")]
    UnknownAs(IsdAsId),
    #[error("route propagation did not converge within {0} rounds")]
    NoConvergence(usize),
    #[error("{dst} is unreachable from {src}")]
    Unreachable { src: IsdAsId, dst: IsdAsId },
}

struct Adjacency {
    rel: Relationship,
    /// (local end, remote end, link index, next-router distance)
    links: Vec<(LinkEnd, LinkEnd, usize, f64)>,
}

fn adjacency(t: &Topology) -> BTreeMap<IsdAsId, BTreeMap<IsdAsId, Adjacency>> {
    let mut adj: BTreeMap<IsdAsId, BTreeMap<IsdAsId, Adjacency>> = t.as_ids().map(|a| (a, BTreeMap::new())).collect();
    for (i, l) in t.links().iter().enumerate() {
        let km = match (t.coord(l.a), t.coord(l.b)) {
            (Some(x), Some(y)) => great_circle_km(x, y),
            _ => 0.0,
        };
        for (local, remote, is_a) in [(l.a, l.b, true), (l.b, l.a, false)] {
            let e = adj.get_mut(&local.as_id).expect("link end AS").entry(remote.as_id).or_insert(Adjacency { rel: Relationship::of(l.kind, is_a), links: Vec::new() });
            e.links.push((local, remote, i, km));
        }
    }
    adj
}

fn pref(r: Option<Relationship>) -> u8 {
    match r {
        None => 4,
        Some(Relationship::Customer) => 3,
        Some(Relationship::Peer) => 2,
        Some(Relationship::Provider) => 1,
    }
}

/// Whether `holder` exports a route learned via `learned_from` to a neighbor that is its `to`.
fn exports(learned_from: Option<Relationship>, to: Relationship) -> bool {
    matches!(learned_from, None | Some(Relationship::Customer)) || to == Relationship::Customer
}

type Table = BTreeMap<IsdAsId, BgpRoute>;

fn best_route(adj: &BTreeMap<IsdAsId, BTreeMap<IsdAsId, Adjacency>>, table: &Table, x: IsdAsId, dest: IsdAsId) -> Option<BgpRoute> {
    let mut best: Option<BgpRoute> = None;
    for (&y, a) in &adj[&x] {
        let Some(r) = table.get(&y) else { continue };
        // y sees x through the same link kind from the other side
        let x_to_y = match a.rel {
            Relationship::Customer => Relationship::Provider,
            Relationship::Provider => Relationship::Customer,
            Relationship::Peer => Relationship::Peer,
        };
        if !exports(r.learned_from, x_to_y) || r.as_path.contains(&x) {
            continue;
        }
        let &(local, _, _, km) = a.links.iter().min_by(|p, q| p.3.total_cmp(&q.3).then(p.2.cmp(&q.2))).expect("adjacency has a link");
        let mut as_path = Vec::with_capacity(r.as_path.len() + 1);
        as_path.push(y);
        as_path.extend_from_slice(&r.as_path);
        let cand = BgpRoute { dest, as_path, next_hop: Some(y), learned_from: Some(a.rel), egress: Some(local), next_router_km: km };
        let better = match &best {
            None => true,
            Some(b) => pref(cand.learned_from)
                .cmp(&pref(b.learned_from))
                .reverse()
                .then(cand.as_path.len().cmp(&b.as_path.len()))
                .then(cand.next_router_km.total_cmp(&b.next_router_km))
                .then(y.cmp(&b.next_hop.expect("learned route")))
                .is_lt(),
        };
        if better {
            best = Some(cand);
        }
    }
    best
}

fn round(adj: &BTreeMap<IsdAsId, BTreeMap<IsdAsId, Adjacency>>, table: &Table, dest: IsdAsId) -> Table {
    let mut next = Table::new();
    for &x in adj.keys() {
        if x == dest {
            next.insert(x, table[&x].clone());
        } else if let Some(r) = best_route(adj, table, x, dest) {
            next.insert(x, r);
        }
    }
    next
}

fn origin(dest: IsdAsId) -> BgpRoute {
    BgpRoute { dest, as_path: Vec::new(), next_hop: None, learned_from: None, egress: None, next_router_km: 0.0 }
}

/// Propagates routes for every announcer to a fixpoint with synchronous rounds.
pub fn compute_ribs(t: &Topology, announcers: &BTreeSet<IsdAsId>) -> Result<BgpRibs, BgpError> {
    for &a in announcers {
        t.as_node(a).ok_or(BgpError::UnknownAs(a))?;
    }
    let adj = adjacency(t);
    let cap = 2 * t.len() + 2;
    let mut out = BgpRibs { ribs: t.as_ids().map(|a| (a, BTreeMap::new())).collect(), rounds: 0 };
    for &dest in announcers {
        let mut table: Table = [(dest, origin(dest))].into_iter().collect();
        let mut rounds = 0;
        loop {
            let next = round(&adj, &table, dest);
            rounds += 1;
            if next == table {
                break;
            }
            if rounds >= cap {
                return Err(BgpError::NoConvergence(cap));
            }
            table = next;
        }
        out.rounds = out.rounds.max(rounds);
        for (x, r) in table {
            out.ribs.get_mut(&x).expect("known AS").insert(dest, r);
        }
    }
    Ok(out)
}

/// One more propagation round over converged RIBs changes nothing.
pub fn is_fixpoint(t: &Topology, ribs: &BgpRibs) -> bool {
    let adj = adjacency(t);
    let dests: BTreeSet<IsdAsId> = ribs.ribs.values().flat_map(|m| m.keys().copied()).collect();
    dests.into_iter().all(|d| {
        let table: Table = ribs.ribs.iter().filter_map(|(&x, m)| m.get(&d).map(|r| (x, r.clone()))).collect();
        round(&adj, &table, d) == table
    })
}

/// Relationships along `as_path` starting at `from` climb providers, cross at
/// most one peer link, then only descend to customers.
pub fn is_valley_free(t: &Topology, from: IsdAsId, as_path: &[IsdAsId]) -> bool {
    let adj = adjacency(t);
    let mut prev = from;
    let mut descending = false;
    for &next in as_path {
        let Some(a) = adj.get(&prev).and_then(|m| m.get(&next)) else { return false };
        match a.rel {
            Relationship::Provider if descending => return false,
            Relationship::Provider => {}
            Relationship::Peer if descending => return false,
            Relationship::Peer | Relationship::Customer => descending = true,
        }
        prev = next;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterLevelPath {
    pub hops: Vec<Hop>,
    pub end_latency_ms: f64,
}

fn gc(t: &Topology, a: GeoCoord, b: GeoCoord) -> f64 {
    great_circle_latency_at(a, b, t.speed_km_s())
}

/// Router-level forwarding from a source location to a server along the RIB
/// next hops. At every AS the packet leaves through the border router closest
/// to where it currently is, among the links to the next-hop AS.
pub fn bgp_router_path(t: &Topology, ribs: &BgpRibs, src: IsdAsId, src_at: GeoCoord, dst: IsdAsId, server_at: GeoCoord) -> Result<RouterLevelPath, BgpError> {
    t.as_node(src).ok_or(BgpError::UnknownAs(src))?;
    t.as_node(dst).ok_or(BgpError::UnknownAs(dst))?;
    let unreachable = BgpError::Unreachable { src, dst };
    let (mut cur, mut pos, mut ingress) = (src, src_at, None);
    let mut hops = Vec::new();
    let mut latency = 0.0;
    while cur != dst {
        if hops.len() > t.len() {
            return Err(unreachable);
        }
        let next = ribs.route(cur, dst).and_then(|r| r.next_hop).ok_or_else(|| unreachable.clone())?;
        let (_, local, remote) = t
            .links_of(cur)
            .into_iter()
            .filter(|(_, _, r)| r.as_id == next)
            .min_by(|p, q| {
                let d = |e: LinkEnd| t.coord(e).map_or(f64::INFINITY, |c| great_circle_km(pos, c));
                d(p.1).total_cmp(&d(q.1)).then(p.0.cmp(&q.0))
            })
            .ok_or_else(|| unreachable.clone())?;
        let here = t.coord(local).expect("interface coordinate");
        latency += match ingress {
            None => gc(t, pos, here),
            Some(i) => t.intra_latency(cur, i, local.iface).expect("interfaces exist").min,
        };
        let (_, link) = t.link_at(local).expect("linked interface");
        latency += link.latency_from(local).expect("own end").min;
        hops.push(Hop { as_id: cur, ingress, egress: Some(local.iface) });
        ingress = Some(remote.iface);
        pos = t.coord(remote).expect("interface coordinate");
        cur = next;
    }
    latency += gc(t, pos, server_at);
    hops.push(Hop { as_id: dst, ingress, egress: None });
    Ok(RouterLevelPath { hops, end_latency_ms: latency })
}

/// A located host: a measurement probe or a server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub id: String,
    pub as_id: IsdAsId,
    pub coord: GeoCoord,
}

/// Latency of the path a latency-aware endpoint would pick: it knows the
/// great-circle latency to its own egress routers and the disclosed path
/// estimates, but not where the server sits inside the destination AS, so the
/// last leg (ingress router to server) is added after the choice.
pub fn path_aware_latency(store: &SegmentStore, t: &Topology, probe: &Endpoint, server: &Endpoint) -> Option<f64> {
    if probe.as_id == server.as_id {
        return Some(gc(t, probe.coord, server.coord));
    }
    let paths = enumerate_paths(store, t, probe.as_id, server.as_id, DEFAULT_PATH_LIMIT, MissingInfoPolicy::ZeroFill).ok()?;
    let mut best: Option<(f64, f64)> = None;
    for (p, est) in &paths {
        let first = p.hops.first()?;
        let last = p.hops.last()?;
        let out = t.coord(LinkEnd::new(first.as_id, first.egress?))?;
        let inn = t.coord(LinkEnd::new(last.as_id, last.ingress?))?;
        let known = gc(t, probe.coord, out) + est.total_min;
        if best.is_none_or(|(k, _)| known < k) {
            best = Some((known, known + gc(t, inn, server.coord)));
        }
    }
    best.map(|(_, total)| total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub probe_id: String,
    pub server_id: String,
    pub path_aware_ms: Option<f64>,
    pub bgp_ms: Option<f64>,
    /// Path-aware minus BGP; negative when latency-aware selection is faster.
    pub delta_ms: Option<f64>,
}

/// Both latencies for every (probe, server) pair, probes outermost.
pub fn compare_with_bgp(t: &Topology, store: &SegmentStore, ribs: &BgpRibs, probes: &[Endpoint], servers: &[Endpoint], mode: ExecMode) -> Vec<ComparisonRow> {
    let pairs: Vec<(&Endpoint, &Endpoint)> = probes.iter().flat_map(|p| servers.iter().map(move |s| (p, s))).collect();
    exec::map(mode, &pairs, |&(p, s)| {
        let aware = path_aware_latency(store, t, p, s);
        let bgp = bgp_router_path(t, ribs, p.as_id, p.coord, s.as_id, s.coord).ok().map(|r| r.end_latency_ms);
        ComparisonRow {
            probe_id: p.id.clone(),
            server_id: s.id.clone(),
            path_aware_ms: aware,
            bgp_ms: bgp,
            delta_ms: aware.zip(bgp).map(|(a, b)| a - b),
        }
    })
}
