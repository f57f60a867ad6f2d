//! Propagation-latency transparency for path-aware inter-domain networks.

pub mod geo;
pub mod topology;
pub mod beaconing;
pub mod pathcomp;
pub mod des;
pub mod dataplane;
pub mod probing;
pub mod exec;
pub mod congestion;
pub mod bgp;
pub mod experiments;
