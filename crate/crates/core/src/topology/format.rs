//! Line-oriented topology files.
//!
//! ```text
//! # comment
//! speed 200000                                   (optional, km/s)
//! as 1-10 core
//! if 1-10 1 47.37 8.54
//! link 1-10#1 1-11#1 parent_child [lat_ab_ms lat_ba_ms]
//! intra 1-10 1 2 3.5 [7.0]
//! ```

use super::{DirectedLatency, InterfaceId, IsdAsId, LinkEnd, LinkKind, Topology, TopologyBuilder, TopologyError};
use crate::geo::{GeoCoord, DEFAULT_PROPAGATION_SPEED_KM_S};

fn perr(line: usize, msg: impl Into<String>) -> TopologyError {
    TopologyError::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T, TopologyError> {
    s.parse().map_err(|_| perr(line, format!("bad {what} {s:?}")))
}

fn end(line: usize, s: &str) -> Result<LinkEnd, TopologyError> {
    let (ia, iface) = s.split_once('#').ok_or_else(|| perr(line, format!("expected <isd>-<asn>#<ifid>, got {s:?}")))?;
    let as_id: IsdAsId = ia.parse().map_err(|e: String| perr(line, e))?;
    Ok(LinkEnd::new(as_id, InterfaceId(num(line, iface, "interface id")?)))
}

/// Parses and validates a topology document.
pub fn load_topology(source: &str) -> Result<Topology, TopologyError> {
    let mut ases = Vec::new();
    let mut ifaces = Vec::new();
    let mut links = Vec::new();
    let mut intras = Vec::new();
    let mut speed = DEFAULT_PROPAGATION_SPEED_KM_S;

    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = text.split_whitespace().collect();
        let ia = |s: &str| s.parse::<IsdAsId>().map_err(|e| perr(line, e));
        match tok[0] {
            "speed" if tok.len() == 2 => speed = num(line, tok[1], "speed")?,
            "as" if tok.len() == 3 => {
                let core = match tok[2] {
                    "core" => true,
                    "noncore" => false,
                    other => return Err(perr(line, format!("expected core|noncore, got {other:?}"))),
                };
                ases.push((ia(tok[1])?, core));
            }
            "if" if tok.len() == 5 => {
                let coord = GeoCoord::new(num(line, tok[3], "latitude")?, num(line, tok[4], "longitude")?)?;
                ifaces.push((ia(tok[1])?, InterfaceId(num(line, tok[2], "interface id")?), coord));
            }
            "link" if tok.len() == 4 || tok.len() == 6 => {
                let kind: LinkKind = tok[3].parse().map_err(|e| perr(line, e))?;
                let lat = if tok.len() == 6 {
                    Some((num(line, tok[4], "latency")?, num(line, tok[5], "latency")?))
                } else {
                    None
                };
                links.push((end(line, tok[1])?, end(line, tok[2])?, kind, lat));
            }
            "intra" if tok.len() == 5 || tok.len() == 6 => {
                let min = num(line, tok[4], "latency")?;
                let max = if tok.len() == 6 { Some(num(line, tok[5], "latency")?) } else { None };
                intras.push((
                    ia(tok[1])?,
                    InterfaceId(num(line, tok[2], "interface id")?),
                    InterfaceId(num(line, tok[3], "interface id")?),
                    DirectedLatency { min, max },
                ));
            }
            other => return Err(perr(line, format!("malformed {other:?} record"))),
        }
    }

    let mut b = TopologyBuilder::new().speed_km_s(speed);
    for (id, core) in ases {
        b.add_as(id, core)?;
    }
    for (id, iface, coord) in ifaces {
        b.add_interface(id, iface, coord)?;
    }
    for (a, bb, kind, lat) in links {
        b.add_link(a, bb, kind, lat);
    }
    for (id, from, to, lat) in intras {
        b.add_intra_route(id, from, to, lat)?;
    }
    b.build()
}

/// Canonical text form: ASes in id order with their interfaces and intra
/// entries, then links in stored order with explicit latencies.
pub fn serialize_topology(t: &Topology) -> String {
    let mut out = String::new();
    if t.speed_km_s() != DEFAULT_PROPAGATION_SPEED_KM_S {
        out.push_str(&format!("speed {}\n", t.speed_km_s()));
    }
    for node in t.ases() {
        out.push_str(&format!("as {} {}\n", node.id, if node.is_core { "core" } else { "noncore" }));
        for (iface, c) in &node.interfaces {
            out.push_str(&format!("if {} {} {} {}\n", node.id, iface, c.lat(), c.lon()));
        }
        for ((from, to), lat) in &node.intra {
            match lat.max {
                Some(max) => out.push_str(&format!("intra {} {} {} {} {}\n", node.id, from, to, lat.min, max)),
                None => out.push_str(&format!("intra {} {} {} {}\n", node.id, from, to, lat.min)),
            }
        }
    }
    for l in t.links() {
        out.push_str(&format!(
            "link {} {} {} {} {}\n",
            l.a,
            l.b,
            l.kind.as_str(),
            l.latency_ab.min,
            l.latency_ba.min
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{synth_topology, SynthParams};
    use proptest::prelude::*;

    const TWO_AS: &str = "\
# minimal
as 1-1 core
as 1-2 noncore
if 1-1 1 0 0
if 1-2 1 0 1
link 1-1#1 1-2#1 parent_child
";

    #[test]
    fn loads_minimal_file() {
        let t = load_topology(TWO_AS).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.links().len(), 1);
        let gc = crate::geo::great_circle_latency(GeoCoord::new(0.0, 0.0).unwrap(), GeoCoord::new(0.0, 1.0).unwrap());
        assert!((t.links()[0].latency_ab.min - gc).abs() < 1e-12);
    }

    #[test]
    fn unknown_as_in_link_is_a_validation_error() {
        let src = format!("{TWO_AS}if 1-1 2 0 0\nlink 1-1#2 9-9#1 core\n");
        assert!(matches!(load_topology(&src), Err(TopologyError::UnknownAs(_))));
    }

    #[test]
    fn malformed_records_report_the_line() {
        let err = load_topology("as 1-1 core\nif 1-1 x 0 0\n").unwrap_err();
        assert!(matches!(err, TopologyError::Parse { line: 2, .. }), "{err}");
        assert!(matches!(load_topology("bogus\n"), Err(TopologyError::Parse { line: 1, .. })));
        assert!(matches!(load_topology("link 1-1 1-2 core\n"), Err(TopologyError::Parse { .. })));
    }

    #[test]
    fn peering_defaults_to_zero() {
        let src = "\
as 1-1 core
as 1-2 noncore
as 1-3 noncore
if 1-1 1 0 0
if 1-1 2 0 0
if 1-2 1 0 1
if 1-2 2 0 1
if 1-3 1 5 5
if 1-3 2 5 5
link 1-1#1 1-2#1 parent_child
link 1-1#2 1-3#1 parent_child
link 1-2#2 1-3#2 peering
";
        let t = load_topology(src).unwrap();
        assert_eq!(t.links()[2].latency_ab.min, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trips_canonical_form(seed in 0u64..10_000) {
            let t = synth_topology(seed, &SynthParams::default()).unwrap();
            let text = serialize_topology(&t);
            let back = load_topology(&text).unwrap();
            prop_assert_eq!(&back, &t);
            prop_assert_eq!(serialize_topology(&back), text);
        }
    }
}
