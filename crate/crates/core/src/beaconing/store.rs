//! Per-AS segment collections and their text export.
//!
//! Export format, one block per (holder, segment):
//!
//! ```text
//! segment <holder> <core|intra_isd> <segment_id>
//! entry <as> <ingress|-> <egress|-> <timestamp_ms> <tag_hex>
//! latency <intra_fwd_min> <intra_fwd_max|-> <intra_rev_min> <intra_rev_max|-> <inter_fwd> <inter_rev> [certainty]
//! junction <ifid> <fwd_min> <fwd_max|-> <rev_min> <rev_max|->
//! end
//! ```
//!
//! `latency` and `junction` lines belong to the preceding `entry`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use super::segment::{AsEntry, JunctionLatency, LatencyInfo, PathSegment, SegmentId, SegmentKind, SignatureStub};
use crate::topology::{DirectedLatency, InterfaceId, IsdAsId};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AsSegments {
    pub core: Vec<Arc<PathSegment>>,
    pub intra: Vec<Arc<PathSegment>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentStore {
    per_as: BTreeMap<IsdAsId, AsSegments>,
    ids: BTreeSet<(IsdAsId, SegmentId)>,
}

impl SegmentStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `seg` at `holder`. Returns false if the holder already has that id.
    pub fn insert(&mut self, holder: IsdAsId, seg: Arc<PathSegment>) -> bool {
        if !self.ids.insert((holder, seg.id.clone())) {
            return false;
        }
        let slot = self.per_as.entry(holder).or_default();
        match seg.kind {
            SegmentKind::Core => slot.core.push(seg),
            SegmentKind::IntraIsd => slot.intra.push(seg),
        }
        true
    }

    pub fn holders(&self) -> impl Iterator<Item = IsdAsId> + '_ {
        self.per_as.keys().copied()
    }

    pub fn core_segments(&self, holder: IsdAsId) -> &[Arc<PathSegment>] {
        self.per_as.get(&holder).map(|s| s.core.as_slice()).unwrap_or(&[])
    }

    pub fn intra_segments(&self, holder: IsdAsId) -> &[Arc<PathSegment>] {
        self.per_as.get(&holder).map(|s| s.intra.as_slice()).unwrap_or(&[])
    }

    /// Every (holder, segment) pair in holder order, core segments first.
    pub fn iter(&self) -> impl Iterator<Item = (IsdAsId, &Arc<PathSegment>)> {
        self.per_as.iter().flat_map(|(h, s)| s.core.iter().chain(&s.intra).map(move |seg| (*h, seg)))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Core segments anywhere in the store joining `a` and `b` in either
    /// direction, deduplicated by id and sorted by id.
    pub fn core_segments_between(&self, a: IsdAsId, b: IsdAsId) -> Vec<Arc<PathSegment>> {
        let mut found: BTreeMap<SegmentId, Arc<PathSegment>> = BTreeMap::new();
        for holder in [a, b] {
            for s in self.core_segments(holder) {
                let (o, l) = (s.origin(), s.last().as_id);
                if (o == a && l == b) || (o == b && l == a) {
                    found.entry(s.id.clone()).or_insert_with(|| s.clone());
                }
            }
        }
        found.into_values().collect()
    }
}

fn opt_if(i: Option<InterfaceId>) -> String {
    i.map_or("-".into(), |i| i.to_string())
}

fn opt_f(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| v.to_string())
}

pub fn export_store(store: &SegmentStore) -> String {
    let mut out = String::new();
    for (holder, seg) in store.iter() {
        out.push_str(&format!("segment {holder} {} {}\n", seg.kind.as_str(), seg.id));
        for e in &seg.entries {
            out.push_str(&format!(
                "entry {} {} {} {} {}\n",
                e.as_id,
                opt_if(e.ingress),
                opt_if(e.egress),
                e.attestation.timestamp_ms,
                hex::encode(&e.attestation.tag)
            ));
            if let Some(l) = &e.latency {
                out.push_str(&format!(
                    "latency {} {} {} {} {} {}",
                    l.intra_fwd.min,
                    opt_f(l.intra_fwd.max),
                    l.intra_rev.min,
                    opt_f(l.intra_rev.max),
                    l.inter_fwd,
                    l.inter_rev
                ));
                if let Some(c) = &l.certainty {
                    out.push(' ');
                    out.push_str(c);
                }
                out.push('\n');
                for (j, jl) in &l.junctions {
                    out.push_str(&format!(
                        "junction {j} {} {} {} {}\n",
                        jl.fwd.min,
                        opt_f(jl.fwd.max),
                        jl.rev.min,
                        opt_f(jl.rev.max)
                    ));
                }
            }
        }
        out.push_str("end\n");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("segment dump line {line}: {msg}")]
pub struct StoreParseError {
    pub line: usize,
    pub msg: String,
}

pub fn import_store(source: &str) -> Result<SegmentStore, StoreParseError> {
    let mut store = SegmentStore::new();
    let mut current: Option<(IsdAsId, PathSegment)> = None;
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let err = |msg: String| StoreParseError { line, msg };
        let tok: Vec<&str> = raw.split_whitespace().collect();
        if tok.is_empty() || tok[0].starts_with('#') {
            continue;
        }
        let ia = |s: &str| s.parse::<IsdAsId>().map_err(|e| err(e));
        let f = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
        let of = |s: &str| if s == "-" { Ok(None) } else { f(s).map(Some) };
        let oi = |s: &str| {
            if s == "-" {
                Ok(None)
            } else {
                s.parse::<u32>().map(|v| Some(InterfaceId(v))).map_err(|_| err(format!("bad interface {s:?}")))
            }
        };
        match (tok[0], current.as_mut()) {
            ("segment", None) if tok.len() == 4 => {
                let kind = match tok[2] {
                    "core" => SegmentKind::Core,
                    "intra_isd" => SegmentKind::IntraIsd,
                    other => return Err(err(format!("unknown kind {other:?}"))),
                };
                current = Some((ia(tok[1])?, PathSegment { kind, entries: Vec::new(), id: SegmentId(tok[3].to_string()) }));
            }
            ("entry", Some((_, seg))) if tok.len() == 6 => {
                let as_id = ia(tok[1])?;
                let tag = hex::decode(tok[5]).map_err(|e| err(e.to_string()))?;
                seg.entries.push(AsEntry {
                    as_id,
                    ingress: oi(tok[2])?,
                    egress: oi(tok[3])?,
                    latency: None,
                    attestation: SignatureStub {
                        signer: as_id,
                        timestamp_ms: tok[4].parse().map_err(|_| err(format!("bad timestamp {:?}", tok[4])))?,
                        tag,
                    },
                });
            }
            ("latency", Some((_, seg))) if tok.len() == 7 || tok.len() == 8 => {
                let e = seg.entries.last_mut().ok_or_else(|| err("latency before entry".into()))?;
                e.latency = Some(LatencyInfo {
                    intra_fwd: DirectedLatency { min: f(tok[1])?, max: of(tok[2])? },
                    intra_rev: DirectedLatency { min: f(tok[3])?, max: of(tok[4])? },
                    inter_fwd: f(tok[5])?,
                    inter_rev: f(tok[6])?,
                    junctions: BTreeMap::new(),
                    certainty: tok.get(7).map(|s| s.to_string()),
                });
            }
            ("junction", Some((_, seg))) if tok.len() == 6 => {
                let l = seg
                    .entries
                    .last_mut()
                    .and_then(|e| e.latency.as_mut())
                    .ok_or_else(|| err("junction without latency line".into()))?;
                let j = oi(tok[1])?.ok_or_else(|| err("junction needs an interface".into()))?;
                l.junctions.insert(
                    j,
                    JunctionLatency {
                        fwd: DirectedLatency { min: f(tok[2])?, max: of(tok[3])? },
                        rev: DirectedLatency { min: f(tok[4])?, max: of(tok[5])? },
                    },
                );
            }
            ("end", Some(_)) if tok.len() == 1 => {
                let (holder, seg) = current.take().expect("matched Some");
                if seg.entries.is_empty() {
                    return Err(err("segment without entries".into()));
                }
                if !store.insert(holder, Arc::new(seg)) {
                    return Err(err(format!("duplicate segment at {holder}")));
                }
            }
            (other, _) => return Err(err(format!("unexpected {other:?} record"))),
        }
    }
    if current.is_some() {
        return Err(StoreParseError { line: source.lines().count(), msg: "unterminated segment".into() });
    }
    Ok(store)
}
