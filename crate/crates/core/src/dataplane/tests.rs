use proptest::prelude::*;

use super::*;
use crate::beaconing::{run_beaconing, BeaconingConfig};
use crate::pathcomp::{enumerate_paths, MissingInfoPolicy};
use crate::topology::tests::{at, ia};
use crate::topology::{synth_topology, LinkKind, SynthParams, TopologyBuilder};

/// Core 1-1, 1-2, 1-3 in a chain with 5 ms links (second link 5 ms / 9 ms when asymmetric).
fn line(asym: bool) -> Topology {
    let mut b = TopologyBuilder::new();
    for asn in 1..=3 {
        b.add_as(ia(1, asn), true).unwrap();
    }
    for (asn, n) in [(1, 1), (2, 2), (3, 1)] {
        for i in 1..=n {
            b.add_interface(ia(1, asn), InterfaceId(i), at(0.0, 0.0)).unwrap();
        }
    }
    let e = |asn, i| LinkEnd::new(ia(1, asn), InterfaceId(i));
    b.add_link(e(1, 1), e(2, 1), LinkKind::Core, Some((5.0, 5.0)));
    b.add_link(e(2, 2), e(3, 1), LinkKind::Core, Some(if asym { (5.0, 9.0) } else { (5.0, 5.0) }));
    b.build().unwrap()
}

fn line_hops() -> Vec<Hop> {
    vec![
        Hop { as_id: ia(1, 1), ingress: None, egress: Some(InterfaceId(1)) },
        Hop { as_id: ia(1, 2), ingress: Some(InterfaceId(1)), egress: Some(InterfaceId(2)) },
        Hop { as_id: ia(1, 3), ingress: Some(InterfaceId(1)), egress: None },
    ]
}

// rtt is end time minus send time, so absolute clock values cost a few ulps
fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn bytes_for_ms(cfg: &SimConfig, ms: f64) -> u64 {
    (ms * cfg.capacity_bps / 8.0 / 1e3).round() as u64
}

#[test]
fn idle_probe_sums_propagation() {
    let t = line(false);
    let mut sim = DataPlaneSim::new(&t, SimConfig::default());
    let (rtt, fwd) = sim.probe_hops(&line_hops(), 0.0).unwrap();
    assert!((fwd - 10.0).abs() < 1e-3);
    assert!((rtt - 20.0).abs() < 1e-3);
    assert!((rtt - sim.zero_load_rtt(&line_hops()).unwrap()).abs() < 1e-12);
    assert_eq!(sim.propagation_rtt(&line_hops()).unwrap(), 20.0);
}

#[test]
fn constant_occupancy_adds_queueing_both_ways() {
    let t = line(false);
    let cfg = SimConfig::default();
    let mut sim = DataPlaneSim::new(&t, cfg.clone());
    sim.set_link_cross_traffic(0, CrossTraffic::ConstantOccupancy { bytes: bytes_for_ms(&cfg, 3.0) });
    let (rtt, _) = sim.probe_hops(&line_hops(), 0.0).unwrap();
    assert!((rtt - 26.0).abs() < 1e-3, "{rtt}");

    let mut prio = DataPlaneSim::new(&t, SimConfig { priority_probe: true, ..cfg.clone() });
    prio.set_link_cross_traffic(0, CrossTraffic::ConstantOccupancy { bytes: bytes_for_ms(&cfg, 3.0) });
    assert!((prio.probe_hops(&line_hops(), 0.0).unwrap().0 - 20.0).abs() < 1e-3);
}

#[test]
fn asymmetric_link_per_direction() {
    let t = line(true);
    let mut sim = DataPlaneSim::new(&t, SimConfig::default());
    let (rtt, fwd) = sim.probe_hops(&line_hops(), 0.0).unwrap();
    assert!((fwd - 10.0).abs() < 1e-3);
    assert!((rtt - 24.0).abs() < 1e-3);
}

#[test]
fn overflow_drops_and_failed_measurement() {
    let t = line(false);
    let cfg = SimConfig { queue_limit_bytes: 1_000, ..SimConfig::default() };
    let mut sim = DataPlaneSim::new(&t, cfg);
    sim.set_link_cross_traffic(1, CrossTraffic::ConstantOccupancy { bytes: 990 });
    assert_eq!(sim.probe_hops(&line_hops(), 0.0), Err(SimError::Dropped(ChannelKey::Inter { link: 1, from_a: true })));
    assert_eq!(sim.measure_min_rtt(&line_hops(), 0.0, 1.0, 100.0), Err(SimError::MeasurementFailed(10)));
    assert!(matches!(sim.measure_experienced(&line_hops(), 0.0, 3), Err(SimError::TooManyDrops { dropped: 3, sent: 3 })));
}

#[test]
fn simultaneous_probes_queue_fifo() {
    let t = line(false);
    let cfg = SimConfig { capacity_bps: 1e6, ..SimConfig::default() };
    let mut sim = DataPlaneSim::new(&t, cfg);
    let hops = line_hops();
    let out = sim.send_probes(&[(&hops, 0.0), (&hops, 0.0)]).unwrap();
    let (a, b) = (out[0].unwrap().0, out[1].unwrap().0);
    // 64 B at 1 Mbps = 0.512 ms; the second probe waits once at the first channel
    assert!((b - a - 0.512).abs() < 1e-9, "{a} {b}");
}

#[test]
fn min_rtt_matches_ground_truth_when_idle() {
    let t = line(true);
    let mut sim = DataPlaneSim::new(&t, SimConfig::default());
    let truth = sim.zero_load_rtt(&line_hops()).unwrap();
    assert!(close(sim.measure_min_rtt(&line_hops(), 0.0, 60.0, 1000.0).unwrap(), truth));
}

#[test]
fn min_rtt_finds_idle_gaps() {
    let t = line(false);
    let cfg = SimConfig::default();
    let mut sim = DataPlaneSim::new(&t, cfg.clone());
    // idle stretches of at least interval + RTT guarantee a clean sample
    let process = |seed| CrossTraffic::OnOff { seed, bytes: bytes_for_ms(&cfg, 4.0), on_ms: (500.0, 3_000.0), off_ms: (1_100.0, 2_000.0) };
    sim.set_link_cross_traffic(0, process(9));
    sim.set_link_cross_traffic(1, process(10));
    let truth = sim.zero_load_rtt(&line_hops()[..2]).unwrap();
    assert!(close(sim.measure_min_rtt(&line_hops()[..2], 0.0, 60.0, 1000.0).unwrap(), truth));
}

#[test]
fn persistent_traffic_inflates_min_rtt() {
    let t = line(false);
    let cfg = SimConfig::default();
    let mut sim = DataPlaneSim::new(&t, cfg.clone());
    sim.set_link_cross_traffic(0, CrossTraffic::ConstantOccupancy { bytes: bytes_for_ms(&cfg, 2.0) });
    let truth = sim.zero_load_rtt(&line_hops()).unwrap();
    let m = sim.measure_min_rtt(&line_hops(), 0.0, 60.0, 1000.0).unwrap();
    assert!(m > truth);
    assert!((m - truth - 4.0).abs() < 1e-6);
}

#[test]
fn experienced_latency_is_a_median() {
    let t = line(false);
    let cfg = SimConfig::default();
    let mut sim = DataPlaneSim::new(&t, cfg.clone());
    let single = sim.probe_hops(&line_hops(), 0.0).unwrap().0;
    assert!(close(sim.measure_experienced(&line_hops(), 1_000.0, 5).unwrap(), single));
    assert!(close(sim.measure_experienced(&line_hops(), 10_000.0, 1).unwrap(), single));
    // one probe of five (at t = 2000 ms) meets a burst
    let burst = CrossTraffic::Windowed { windows: vec![(1_999.0, 2_001.0, bytes_for_ms(&cfg, 20.0))] };
    let mut probe = DataPlaneSim::new(&t, cfg.clone());
    probe.set_link_cross_traffic(0, burst.clone());
    assert!(probe.probe_hops(&line_hops(), 2_000.0).unwrap().0 > single + 19.0);
    let mut sim = DataPlaneSim::new(&t, cfg.clone());
    sim.set_link_cross_traffic(0, burst);
    assert!(close(sim.measure_experienced(&line_hops(), 0.0, 5).unwrap(), single));
}

#[test]
fn measured_topology_reproduces_symmetric_truth() {
    let t = line(true);
    let mut sim = DataPlaneSim::new(&t, SimConfig::default());
    let m = measured_topology(&mut sim, 0.0, 5.0, 1000.0).unwrap();
    let tx = 64.0 * 8.0 / 10e9 * 1e3;
    // 5 / 9 ms asymmetric link is advertised as 7 ms both ways
    assert!((m.links()[1].latency_ab.min - (7.0 + tx)).abs() < 1e-9);
    assert!((m.links()[1].latency_ba.min - (7.0 + tx)).abs() < 1e-9);
    assert!((m.intra_latency(ia(1, 2), InterfaceId(1), InterfaceId(2)).unwrap().min - tx).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn every_rtt_covers_propagation(seed in 0u64..1000, traffic_seed in 0u64..1000) {
        let t = synth_topology(seed, &SynthParams { isds: 2, noncores_per_isd: 4, ..SynthParams::default() }).unwrap();
        let store = run_beaconing(&t, &BeaconingConfig::default());
        let ids: Vec<IsdAsId> = t.as_ids().collect();
        let cfg = SimConfig { capacity_bps: 1e9, ..SimConfig::default() };
        let run = || {
            let mut sim = DataPlaneSim::new(&t, cfg.clone());
            for l in 0..t.links().len() {
                sim.set_link_cross_traffic(l, CrossTraffic::OnOff { seed: traffic_seed + l as u64, bytes: 200_000, on_ms: (5.0, 50.0), off_ms: (5.0, 50.0) });
            }
            let mut out = Vec::new();
            for (k, &dst) in ids.iter().enumerate().skip(1) {
                for (p, _) in enumerate_paths(&store, &t, ids[0], dst, 3, MissingInfoPolicy::ZeroFill).unwrap() {
                    let r = sim.send_probe(&p, k as f64 * 7.0).unwrap();
                    out.push((r.rtt_ms, sim.propagation_rtt(&p.hops).unwrap()));
                }
            }
            out
        };
        let a = run();
        prop_assert_eq!(&a, &run());
        for (rtt, prop) in a {
            prop_assert!(rtt >= prop - 1e-9);
        }
    }
}
