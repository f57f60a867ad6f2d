use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{IsdAsId, LinkEnd, LinkKind, Topology, TopologyBuilder, TopologyError};
use crate::geo::{great_circle_km, GeoCoord};

/// Generator parameters for [`synth_topology`].
///
/// Placement: every ISD gets a random region centre; each AS gets a home point
/// within `region_radius_deg` of it and `pops_per_as` points of presence within
/// `as_spread_deg` of home. A link picks a random PoP on its first AS and the
/// nearest PoP on the second; the two interfaces sit on those PoPs. Peering
/// interfaces are co-located on the first AS's PoP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub isds: u16,
    pub cores_per_isd: usize,
    pub noncores_per_isd: usize,
    /// Upper bound on providers per non-core AS (at least one is always drawn).
    pub max_parents: usize,
    /// Probability of each additional intra-ISD core link beyond the chain.
    pub extra_core_link_prob: f64,
    /// Extra inter-ISD core links beyond the chain joining consecutive ISDs.
    pub inter_isd_core_links: usize,
    /// Connect every pair of core ASes directly.
    pub full_core_mesh: bool,
    /// Probability of a peering link between any two non-core ASes.
    pub peering_prob: f64,
    /// Probability that a provider/customer pair gets a second, parallel link.
    pub parallel_link_prob: f64,
    pub pops_per_as: usize,
    pub region_radius_deg: f64,
    pub as_spread_deg: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            isds: 3,
            cores_per_isd: 2,
            noncores_per_isd: 8,
            max_parents: 2,
            extra_core_link_prob: 0.5,
            inter_isd_core_links: 1,
            full_core_mesh: false,
            peering_prob: 0.03,
            parallel_link_prob: 0.2,
            pops_per_as: 3,
            region_radius_deg: 15.0,
            as_spread_deg: 6.0,
        }
    }
}

struct Gen {
    rng: ChaCha8Rng,
    builder: TopologyBuilder,
    pops: std::collections::BTreeMap<IsdAsId, Vec<GeoCoord>>,
}

impl Gen {
    fn link(&mut self, a: IsdAsId, b: IsdAsId, kind: LinkKind) -> Result<(), TopologyError> {
        let pa = *self.pops[&a].choose(&mut self.rng).unwrap();
        let pb = if kind == LinkKind::Peering {
            pa
        } else {
            *self.pops[&b]
                .iter()
                .min_by(|x, y| great_circle_km(pa, **x).total_cmp(&great_circle_km(pa, **y)))
                .unwrap()
        };
        let ia = self.builder.add_next_interface(a, pa)?;
        let ib = self.builder.add_next_interface(b, pb)?;
        self.builder.add_link(LinkEnd::new(a, ia), LinkEnd::new(b, ib), kind, None);
        Ok(())
    }

    fn around(&mut self, c: GeoCoord, radius: f64) -> GeoCoord {
        c.offset(self.rng.gen_range(-radius..=radius), self.rng.gen_range(-radius..=radius))
    }
}

/// Deterministic random topology for a seed.
pub fn synth_topology(seed: u64, p: &SynthParams) -> Result<Topology, TopologyError> {
    if p.isds == 0 || p.cores_per_isd == 0 {
        return Err(TopologyError::Infeasible("need at least one ISD with at least one core AS".into()));
    }
    if p.pops_per_as == 0 || (p.noncores_per_isd > 0 && p.max_parents == 0) {
        return Err(TopologyError::Infeasible("pops_per_as and max_parents must be positive".into()));
    }
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), builder: TopologyBuilder::new(), pops: Default::default() };

    let mut cores: Vec<Vec<IsdAsId>> = Vec::new();
    let mut noncores: Vec<Vec<IsdAsId>> = Vec::new();
    for isd in 1..=p.isds {
        let centre = GeoCoord::new(g.rng.gen_range(-45.0..60.0), g.rng.gen_range(-179.0..180.0)).unwrap();
        let mut c = Vec::new();
        let mut n = Vec::new();
        for j in 0..p.cores_per_isd + p.noncores_per_isd {
            let id = IsdAsId::new(isd, j as u64 + 1);
            let is_core = j < p.cores_per_isd;
            g.builder.add_as(id, is_core)?;
            let home = g.around(centre, p.region_radius_deg);
            let pops = (0..p.pops_per_as).map(|_| g.around(home, p.as_spread_deg)).collect();
            g.pops.insert(id, pops);
            if is_core {
                c.push(id)
            } else {
                n.push(id)
            }
        }
        cores.push(c);
        noncores.push(n);
    }

    let all_cores: Vec<IsdAsId> = cores.iter().flatten().copied().collect();
    if p.full_core_mesh {
        for (i, &a) in all_cores.iter().enumerate() {
            for &b in &all_cores[i + 1..] {
                g.link(a, b, LinkKind::Core)?;
            }
        }
    } else {
        for isd_cores in &cores {
            for w in isd_cores.windows(2) {
                g.link(w[0], w[1], LinkKind::Core)?;
            }
            for (i, &a) in isd_cores.iter().enumerate() {
                for &b in isd_cores.iter().skip(i + 2) {
                    if g.rng.gen_bool(p.extra_core_link_prob) {
                        g.link(a, b, LinkKind::Core)?;
                    }
                }
            }
        }
        for w in 0..cores.len().saturating_sub(1) {
            let a = *cores[w].choose(&mut g.rng).unwrap();
            let b = *cores[w + 1].choose(&mut g.rng).unwrap();
            g.link(a, b, LinkKind::Core)?;
        }
        if cores.len() > 1 {
            for _ in 0..p.inter_isd_core_links {
                let (i, j) = loop {
                    let i = g.rng.gen_range(0..cores.len());
                    let j = g.rng.gen_range(0..cores.len());
                    if i != j {
                        break (i, j);
                    }
                };
                let a = *cores[i].choose(&mut g.rng).unwrap();
                let b = *cores[j].choose(&mut g.rng).unwrap();
                g.link(a, b, LinkKind::Core)?;
            }
        }
    }

    for (isd_cores, isd_noncores) in cores.iter().zip(&noncores) {
        for (j, &child) in isd_noncores.iter().enumerate() {
            let mut pool: Vec<IsdAsId> = isd_cores.iter().chain(&isd_noncores[..j]).copied().collect();
            pool.shuffle(&mut g.rng);
            let count = g.rng.gen_range(1..=p.max_parents.min(pool.len()));
            let mut parents = pool[..count].to_vec();
            parents.sort();
            for parent in parents {
                g.link(parent, child, LinkKind::ParentChild)?;
                if g.rng.gen_bool(p.parallel_link_prob) {
                    g.link(parent, child, LinkKind::ParentChild)?;
                }
            }
        }
    }

    let flat: Vec<IsdAsId> = noncores.iter().flatten().copied().collect();
    for (i, &a) in flat.iter().enumerate() {
        for &b in &flat[i + 1..] {
            if g.rng.gen_bool(p.peering_prob) {
                g.link(a, b, LinkKind::Peering)?;
            }
        }
    }

    g.builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::serialize_topology;

    #[test]
    fn single_core_single_as() {
        let p = SynthParams { isds: 1, cores_per_isd: 1, noncores_per_isd: 0, ..SynthParams::default() };
        let t = synth_topology(1, &p).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.links().is_empty());
    }

    #[test]
    fn zero_cores_is_infeasible() {
        let p = SynthParams { cores_per_isd: 0, ..SynthParams::default() };
        assert!(matches!(synth_topology(1, &p), Err(TopologyError::Infeasible(_))));
    }

    #[test]
    fn same_seed_same_bytes() {
        let p = SynthParams::default();
        let a = serialize_topology(&synth_topology(7, &p).unwrap());
        let b = serialize_topology(&synth_topology(7, &p).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, serialize_topology(&synth_topology(8, &p).unwrap()));
    }

    #[test]
    fn thirty_as_three_isd_instances_validate() {
        for seed in 0..50 {
            let t = synth_topology(seed, &SynthParams::default()).unwrap();
            assert_eq!(t.len(), 30);
            assert_eq!(t.as_ids().map(|a| a.isd).max(), Some(3));
        }
    }
}
