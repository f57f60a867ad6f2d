use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use super::{IsdAsId, Topology, TopologyError};

/// Iteratively drops the AS with the lowest current link degree until `n` remain.
///
/// Among equal degrees the AS with the larger id goes first, so the smallest
/// ids survive a tie. Links touching removed ASes are dropped; interfaces stay.
pub fn prune_to_top_degree(t: &Topology, n: usize) -> Result<Topology, TopologyError> {
    if n == 0 {
        return Err(TopologyError::Infeasible("prune target must be at least 1".into()));
    }
    if n >= t.len() {
        return Ok(t.clone());
    }

    let mut degree: BTreeMap<IsdAsId, usize> = t.as_ids().map(|a| (a, 0)).collect();
    let mut neighbors: BTreeMap<IsdAsId, Vec<IsdAsId>> = BTreeMap::new();
    for l in t.links() {
        *degree.get_mut(&l.a.as_id).unwrap() += 1;
        *degree.get_mut(&l.b.as_id).unwrap() += 1;
        neighbors.entry(l.a.as_id).or_default().push(l.b.as_id);
        neighbors.entry(l.b.as_id).or_default().push(l.a.as_id);
    }

    let mut order: BTreeSet<(usize, Reverse<IsdAsId>)> = degree.iter().map(|(&a, &d)| (d, Reverse(a))).collect();
    let mut removed = BTreeSet::new();
    while t.len() - removed.len() > n {
        let (_, Reverse(victim)) = order.pop_first().expect("more ASes than target");
        removed.insert(victim);
        for &m in neighbors.get(&victim).into_iter().flatten() {
            if removed.contains(&m) {
                continue;
            }
            let d = degree.get_mut(&m).unwrap();
            order.remove(&(*d, Reverse(m)));
            *d -= 1;
            order.insert((*d, Reverse(m)));
        }
    }

    let ases = t.ases().filter(|a| !removed.contains(&a.id)).cloned();
    let links = t
        .links()
        .iter()
        .filter(|l| !removed.contains(&l.a.as_id) && !removed.contains(&l.b.as_id))
        .cloned()
        .collect();
    Topology::new(ases, links, t.speed_km_s())
}
