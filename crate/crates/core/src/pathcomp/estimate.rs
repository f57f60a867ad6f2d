use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EndToEndPath, Joint};
use crate::beaconing::AsEntry;
use crate::topology::{InterfaceId, IsdAsId, LinkEnd, Topology};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingInfoPolicy {
    /// Undisclosed values count as 0 ms; the estimate is a lower bound.
    #[default]
    ZeroFill,
    /// Any undisclosed value rejects the path.
    Discard,
}

impl std::str::FromStr for MissingInfoPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero_fill" => Ok(Self::ZeroFill),
            "discard" => Ok(Self::Discard),
            other => Err(format!("unknown missing-info policy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Completeness {
    Complete,
    /// Number of ASes whose attributes were missing.
    Partial(usize),
    Empty,
}

impl std::fmt::Display for Completeness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Completeness::Complete => f.write_str("complete"),
            Completeness::Partial(n) => write!(f, "partial({n})"),
            Completeness::Empty => f.write_str("empty"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContributionKind {
    /// Transit through an AS between two interfaces of the same segment entry.
    Intra { as_id: IsdAsId, from: InterfaceId, to: InterfaceId },
    /// Inter-domain link, leaving at `from`.
    Inter { from: LinkEnd, to: LinkEnd },
    /// Transit through a joint AS between interfaces of two different segments.
    Junction { as_id: IsdAsId, from: InterfaceId, to: InterfaceId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueSource {
    /// Taken from a disclosed latency attribute; `sources` counts how many
    /// attributes carried it (exactly one is expected at junctions).
    Disclosed { sources: usize },
    /// Not disclosed; contributes 0 ms.
    Missing,
    /// Taken from topology ground truth (peering joints only).
    Topology { attested: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub kind: ContributionKind,
    /// AS whose latency attribute carries (or would carry) the value.
    pub owner: IsdAsId,
    pub ms: f64,
    pub source: ValueSource,
}

impl Contribution {
    fn counts_as_disclosed(&self) -> bool {
        match self.source {
            ValueSource::Disclosed { .. } => true,
            ValueSource::Missing => false,
            ValueSource::Topology { attested } => attested,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyEstimate {
    pub total_min: f64,
    pub completeness: Completeness,
    pub per_hop: Vec<Contribution>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("path rejected: {} undisclosed contribution(s)", missing.len())]
    Rejected { missing: Vec<ContributionKind> },
    #[error("junction at {as_id} between {from} and {to} is disclosed by neither adjoining segment")]
    UnresolvableJunction { as_id: IsdAsId, from: InterfaceId, to: InterfaceId },
}

/// Latency of an entry's own transit pair in the given travel direction.
fn intra_value(e: &AsEntry, from: InterfaceId, to: InterfaceId) -> Option<f64> {
    let l = e.latency.as_ref()?;
    if e.ingress == Some(from) && e.egress == Some(to) {
        Some(l.intra_fwd.min)
    } else if e.ingress == Some(to) && e.egress == Some(from) {
        Some(l.intra_rev.min)
    } else {
        None
    }
}

/// Every value for `from → to` that the entry discloses: its transit pair or a junction-map item.
fn junction_values(e: &AsEntry, from: InterfaceId, to: InterfaceId) -> Vec<f64> {
    let Some(l) = e.latency.as_ref() else { return Vec::new() };
    let mut out = Vec::new();
    if let Some(v) = intra_value(e, from, to) {
        out.push(v);
    }
    if e.egress == Some(from) {
        if let Some(j) = l.junctions.get(&to) {
            out.push(j.rev.min);
        }
    }
    if e.egress == Some(to) {
        if let Some(j) = l.junctions.get(&from) {
            out.push(j.fwd.min);
        }
    }
    out
}

fn junction(
    topo: &Topology,
    entries: &[&AsEntry],
    fallback: bool,
    as_id: IsdAsId,
    from: InterfaceId,
    to: InterfaceId,
) -> Result<Contribution, EstimateError> {
    let kind = ContributionKind::Junction { as_id, from, to };
    let values: Vec<f64> = entries.iter().flat_map(|e| junction_values(e, from, to)).collect();
    let all_disclosed = entries.iter().all(|e| e.latency.is_some());
    let owner = as_id;
    if let Some(&v) = values.first() {
        return Ok(Contribution { kind, owner, ms: v, source: ValueSource::Disclosed { sources: values.len() } });
    }
    if fallback {
        let truth = topo.intra_latency(as_id, from, to).map(|l| l.min).unwrap_or(0.0);
        return Ok(Contribution { kind, owner, ms: truth, source: ValueSource::Topology { attested: all_disclosed } });
    }
    if all_disclosed {
        return Err(EstimateError::UnresolvableJunction { as_id, from, to });
    }
    Ok(Contribution { kind, owner, ms: 0.0, source: ValueSource::Missing })
}

fn contributions(path: &EndToEndPath, topo: &Topology, back: bool) -> Result<Vec<Contribution>, EstimateError> {
    // (from, to) in the evaluated travel direction
    let dir = |a: InterfaceId, b: InterfaceId| if back { (b, a) } else { (a, b) };
    let mut out = Vec::new();
    let last_part = path.parts.len() - 1;
    for (k, part) in path.parts.iter().enumerate() {
        let n = part.order.len();
        for i in 0..n {
            let e = part.entry(i);
            if i > 0 && i + 1 < n {
                let (ti, te) = part.travel_ifaces(i);
                let (ti, te) = (ti.expect("transit ingress"), te.expect("transit egress"));
                let (from, to) = dir(ti, te);
                let kind = ContributionKind::Intra { as_id: e.as_id, from, to };
                let owner = e.as_id;
                out.push(match intra_value(e, from, to) {
                    Some(ms) => Contribution { kind, owner, ms, source: ValueSource::Disclosed { sources: 1 } },
                    None => Contribution { kind, owner, ms: 0.0, source: ValueSource::Missing },
                });
            }
            if i + 1 < n {
                let lower = part.order[i].min(part.order[i + 1]);
                let le = &part.segment.entries[lower];
                let up_end = LinkEnd::new(le.as_id, le.egress.expect("linked entry"));
                let down_end = topo.neighbor(up_end).expect("segment link exists");
                let construction_dir = part.reversed == back;
                let (from, to) = if construction_dir { (up_end, down_end) } else { (down_end, up_end) };
                let kind = ContributionKind::Inter { from, to };
                let owner = le.as_id;
                out.push(match le.latency.as_ref() {
                    Some(l) => Contribution {
                        kind,
                        owner,
                        ms: if construction_dir { l.inter_fwd } else { l.inter_rev },
                        source: ValueSource::Disclosed { sources: 1 },
                    },
                    None => Contribution { kind, owner, ms: 0.0, source: ValueSource::Missing },
                });
            }
        }
        if k == last_part {
            continue;
        }
        let next = &path.parts[k + 1];
        let here = part.entry(n - 1);
        let there = next.entry(0);
        match path.joints[k] {
            Joint::Shared(at) => {
                let hop = path.hops.iter().find(|h| h.as_id == at).expect("joint on path");
                if let (Some(a), Some(b)) = (hop.ingress, hop.egress) {
                    let (from, to) = dir(a, b);
                    out.push(junction(topo, &[here, there], false, at, from, to)?);
                }
            }
            Joint::Peering { link, from, to } => {
                let attested = here.latency.is_some() && there.latency.is_some();
                let hop_from = path.hops.iter().find(|h| h.as_id == from.as_id).expect("on path");
                if let Some(a) = hop_from.ingress {
                    let (x, y) = dir(a, from.iface);
                    out.push(junction(topo, &[here], true, from.as_id, x, y)?);
                }
                let l = topo.link(link);
                let (lf, lt) = if back { (to, from) } else { (from, to) };
                out.push(Contribution {
                    kind: ContributionKind::Inter { from: lf, to: lt },
                    owner: if here.latency.is_none() { here.as_id } else { there.as_id },
                    ms: l.latency_from(lf).expect("peering link end").min,
                    source: ValueSource::Topology { attested },
                });
                let hop_to = path.hops.iter().find(|h| h.as_id == to.as_id).expect("on path");
                if let Some(b) = hop_to.egress {
                    let (x, y) = dir(to.iface, b);
                    out.push(junction(topo, &[there], true, to.as_id, x, y)?);
                }
            }
        }
    }
    Ok(out)
}

fn finish(per_hop: Vec<Contribution>, policy: MissingInfoPolicy) -> Result<LatencyEstimate, EstimateError> {
    let missing: Vec<ContributionKind> = per_hop.iter().filter(|c| !c.counts_as_disclosed()).map(|c| c.kind).collect();
    if policy == MissingInfoPolicy::Discard && !missing.is_empty() {
        return Err(EstimateError::Rejected { missing });
    }
    let missing_ases: BTreeSet<IsdAsId> = per_hop.iter().filter(|c| !c.counts_as_disclosed()).map(|c| c.owner).collect();
    let completeness = if missing.is_empty() {
        Completeness::Complete
    } else if missing.len() == per_hop.len() {
        Completeness::Empty
    } else {
        Completeness::Partial(missing_ases.len())
    };
    let total_min = per_hop.iter().map(|c| c.ms).sum();
    Ok(LatencyEstimate { total_min, completeness, per_hop })
}

/// One-way propagation-latency estimate in the path's travel direction.
///
/// Sums the disclosed transit latencies, every inter-domain link once and each
/// junction latency, which must come from exactly one of the two adjoining
/// segment entries. Peering joints take the peering link and any missing
/// junction value from the topology.
pub fn estimate_latency(path: &EndToEndPath, topo: &Topology, policy: MissingInfoPolicy) -> Result<LatencyEstimate, EstimateError> {
    finish(contributions(path, topo, false)?, policy)
}

/// Estimate for travelling the same hops from destination back to source.
pub fn estimate_latency_reverse(path: &EndToEndPath, topo: &Topology, policy: MissingInfoPolicy) -> Result<LatencyEstimate, EstimateError> {
    let mut per_hop = contributions(path, topo, true)?;
    per_hop.reverse();
    finish(per_hop, policy)
}

/// Sum of the forward and reverse estimates; comparable with measured RTTs.
pub fn estimate_round_trip(path: &EndToEndPath, topo: &Topology, policy: MissingInfoPolicy) -> Result<f64, EstimateError> {
    Ok(estimate_latency(path, topo, policy)?.total_min + estimate_latency_reverse(path, topo, policy)?.total_min)
}
