//! Importer for AS relationship records annotated with link locations.
//!
//! Accepted records, one per line (`#` starts a comment line):
//!
//! ```text
//! <as1>|<as2>|<rel>|<lat>,<lon>[;<lat>,<lon>...]
//! ```
//!
//! `rel` follows the CAIDA convention: `-1` means `as1` is a provider of `as2`,
//! `0` means peers. Each listed location is one physical link between the two
//! ASes; both border routers sit at that location. All ASes land in one ISD.
//! ASes without providers become core ASes. Links between two core ASes become
//! core links, remaining provider/customer links become parent_child and all
//! other peerings become peering links.

use std::collections::{BTreeMap, BTreeSet};

use super::{IsdAsId, LinkEnd, LinkKind, Topology, TopologyBuilder, TopologyError};
use crate::geo::GeoCoord;

#[derive(Debug, Clone)]
pub struct CaidaImportOptions {
    pub isd: u16,
}

impl Default for CaidaImportOptions {
    fn default() -> Self {
        Self { isd: 1 }
    }
}

struct Record {
    a: u64,
    b: u64,
    provider_customer: bool,
    locations: Vec<GeoCoord>,
}

fn parse(source: &str) -> Result<Vec<Record>, TopologyError> {
    let mut out = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let err = |msg: String| TopologyError::Parse { line, msg };
        let fields: Vec<&str> = text.split('|').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 '|'-separated fields, got {}", fields.len())));
        }
        let a: u64 = fields[0].trim().parse().map_err(|_| err(format!("bad AS {:?}", fields[0])))?;
        let b: u64 = fields[1].trim().parse().map_err(|_| err(format!("bad AS {:?}", fields[1])))?;
        let provider_customer = match fields[2].trim() {
            "-1" => true,
            "0" => false,
            other => return Err(err(format!("unknown relationship {other:?}"))),
        };
        let mut locations = Vec::new();
        for loc in fields[3].split(';').filter(|s| !s.trim().is_empty()) {
            let (lat, lon) = loc.split_once(',').ok_or_else(|| err(format!("bad location {loc:?}")))?;
            let lat: f64 = lat.trim().parse().map_err(|_| err(format!("bad latitude {lat:?}")))?;
            let lon: f64 = lon.trim().parse().map_err(|_| err(format!("bad longitude {lon:?}")))?;
            locations.push(GeoCoord::new(lat, lon)?);
        }
        if locations.is_empty() {
            return Err(err("record without any link location".into()));
        }
        out.push(Record { a, b, provider_customer, locations });
    }
    Ok(out)
}

pub fn import_caida(source: &str, opts: &CaidaImportOptions) -> Result<Topology, TopologyError> {
    let records = parse(source)?;
    let mut ases = BTreeSet::new();
    let mut has_provider = BTreeSet::new();
    for r in &records {
        ases.insert(r.a);
        ases.insert(r.b);
        if r.provider_customer {
            has_provider.insert(r.b);
        }
    }

    let id = |asn: u64| IsdAsId::new(opts.isd, asn);
    let mut b = TopologyBuilder::new();
    let mut core = BTreeMap::new();
    for &asn in &ases {
        let is_core = !has_provider.contains(&asn);
        core.insert(asn, is_core);
        b.add_as(id(asn), is_core)?;
    }
    for r in &records {
        let kind = match (core[&r.a] && core[&r.b], r.provider_customer) {
            (true, _) => LinkKind::Core,
            (false, true) => LinkKind::ParentChild,
            (false, false) => LinkKind::Peering,
        };
        for &loc in &r.locations {
            let ia = b.add_next_interface(id(r.a), loc)?;
            let ib = b.add_next_interface(id(r.b), loc)?;
            b.add_link(LinkEnd::new(id(r.a), ia), LinkEnd::new(id(r.b), ib), kind, None);
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_relationships_onto_link_kinds() {
        let src = "\
# two tier-1 peers, one customer each, customers peer
1|2|0|47.0,8.0
1|10|-1|46.0,7.0;45.0,9.0
2|20|-1|40.0,-74.0
10|20|0|50.0,8.0
";
        let t = import_caida(src, &CaidaImportOptions::default()).unwrap();
        assert_eq!(t.len(), 4);
        assert!(t.is_core(IsdAsId::new(1, 1)) && t.is_core(IsdAsId::new(1, 2)));
        assert!(!t.is_core(IsdAsId::new(1, 10)));
        let kinds: Vec<LinkKind> = t.links().iter().map(|l| l.kind).collect();
        assert_eq!(kinds, vec![LinkKind::Core, LinkKind::ParentChild, LinkKind::ParentChild, LinkKind::ParentChild, LinkKind::Peering]);
        // co-located border routers
        assert!(t.links().iter().all(|l| l.latency_ab.min == 0.0));
    }

    #[test]
    fn rejects_bad_relationship() {
        assert!(matches!(import_caida("1|2|7|0,0\n", &CaidaImportOptions::default()), Err(TopologyError::Parse { line: 1, .. })));
    }
}
