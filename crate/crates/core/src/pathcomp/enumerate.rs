use std::collections::BTreeSet;
use std::sync::Arc;

use super::{down_part, estimate_latency, up_part, EndToEndPath, EstimateError, Joint, LatencyEstimate, MissingInfoPolicy, PathPart, Role};
use crate::beaconing::{PathSegment, SegmentStore};
use crate::topology::{IsdAsId, LinkKind, Topology};

pub const DEFAULT_PATH_LIMIT: usize = 1000;

fn core_part(c: &Arc<PathSegment>, from: IsdAsId) -> PathPart {
    let last = c.entries.len() - 1;
    if c.origin() == from {
        PathPart::new(Role::Core, c.clone(), 0, last)
    } else {
        PathPart::new(Role::Core, c.clone(), last, 0)
    }
}

/// Every valid combination of `src`'s up segments, core segments and `dst`'s
/// down segments, including on-path, shortcut and peering variants.
/// Combinations that loop are dropped; duplicates by hop sequence are kept.
pub fn enumerate_candidates(store: &SegmentStore, topo: &Topology, src: IsdAsId, dst: IsdAsId) -> Vec<EndToEndPath> {
    let mut out = Vec::new();
    if src == dst || topo.as_node(src).is_none() || topo.as_node(dst).is_none() {
        return out;
    }
    let ups = store.intra_segments(src);
    let downs = store.intra_segments(dst);
    let mut push = |parts: Vec<PathPart>, joints: Vec<Joint>| {
        if let Ok(p) = EndToEndPath::assemble(parts, joints) {
            out.push(p);
        }
    };

    // destination on an up segment / source on a down segment
    for u in ups {
        if let Some(p) = u.position(dst) {
            push(vec![up_part(u.clone(), p)], vec![]);
        }
    }
    for d in downs {
        if let Some(p) = d.position(src) {
            push(vec![down_part(d.clone(), p)], vec![]);
        }
    }

    // the core ASes where the traveller enters / leaves the core
    let src_cores: Vec<(Option<&Arc<PathSegment>>, IsdAsId)> =
        if topo.is_core(src) { vec![(None, src)] } else { ups.iter().map(|u| (Some(u), u.origin())).collect() };
    let dst_cores: Vec<(Option<&Arc<PathSegment>>, IsdAsId)> =
        if topo.is_core(dst) { vec![(None, dst)] } else { downs.iter().map(|d| (Some(d), d.origin())).collect() };
    for &(u, x) in &src_cores {
        for &(d, y) in &dst_cores {
            if x == y {
                if let (Some(u), Some(d)) = (u, d) {
                    push(vec![up_part(u.clone(), 0), down_part(d.clone(), 0)], vec![Joint::Shared(x)]);
                }
                continue;
            }
            for c in store.core_segments_between(x, y) {
                let mut parts = Vec::new();
                let mut joints = Vec::new();
                if let Some(u) = u {
                    parts.push(up_part(u.clone(), 0));
                    joints.push(Joint::Shared(x));
                }
                parts.push(core_part(&c, x));
                if let Some(d) = d {
                    joints.push(Joint::Shared(y));
                    parts.push(down_part(d.clone(), 0));
                }
                push(parts, joints);
            }
        }
    }

    // shortcuts below the core and peering links between the two sides
    for u in ups {
        for d in downs {
            for (pu, eu) in u.entries.iter().enumerate().skip(1) {
                if eu.as_id == src || eu.as_id == dst {
                    continue;
                }
                if let Some(pd) = d.position(eu.as_id) {
                    if pd > 0 {
                        push(vec![up_part(u.clone(), pu), down_part(d.clone(), pd)], vec![Joint::Shared(eu.as_id)]);
                    }
                }
            }
            for (pu, eu) in u.entries.iter().enumerate() {
                for (idx, own, far) in topo.links_of(eu.as_id) {
                    if topo.link(idx).kind != LinkKind::Peering {
                        continue;
                    }
                    if let Some(pd) = d.position(far.as_id) {
                        push(
                            vec![up_part(u.clone(), pu), down_part(d.clone(), pd)],
                            vec![Joint::Peering { link: idx, from: own, to: far }],
                        );
                    }
                }
            }
        }
    }
    out
}

/// Distinct paths from `src` to `dst` with their estimates, sorted by
/// (total_min, hop count, hop string) and truncated to `limit`.
///
/// Under [`MissingInfoPolicy::Discard`] rejected paths are left out. A junction
/// that no segment discloses is a protocol error and aborts the enumeration.
pub fn enumerate_paths(
    store: &SegmentStore,
    topo: &Topology,
    src: IsdAsId,
    dst: IsdAsId,
    limit: usize,
    policy: MissingInfoPolicy,
) -> Result<Vec<(EndToEndPath, LatencyEstimate)>, EstimateError> {
    let mut scored = Vec::new();
    for p in enumerate_candidates(store, topo, src, dst) {
        match estimate_latency(&p, topo, policy) {
            Ok(est) => {
                let key = p.hop_string();
                scored.push((est.total_min, p.hop_count(), key, p.segment_count(), p, est));
            }
            Err(EstimateError::Rejected { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then_with(|| a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    let mut seen = BTreeSet::new();
    Ok(scored
        .into_iter()
        .filter(|s| seen.insert(s.2.clone()))
        .take(limit)
        .map(|(_, _, _, _, p, e)| (p, e))
        .collect())
}
