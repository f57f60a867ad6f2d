//! Control-plane beaconing: segment construction with latency attributes,
//! beacon selection and dissemination.

mod run;
mod segment;
mod store;

pub use run::{run_beaconing, run_beaconing_detailed, steady_state_rounds, BeaconingConfig, BeaconingOutcome, Ranking, SelectionPolicy};
pub use segment::{
    depart, extend, originate, terminate, verify_attestations, AsEntry, BeaconError, DisclosurePolicy, JunctionLatency, LatencyInfo,
    PathSegment, SegmentId, SegmentKind, SignatureStub,
};
pub use store::{export_store, import_store, AsSegments, SegmentStore, StoreParseError};
