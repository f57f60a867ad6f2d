use super::cubic::{cubic_k, cubic_window, CUBIC_BETA};
use super::*;

fn short(n_bbr: usize, n_cubic: usize, variant: BbrVariant) -> DumbbellConfig {
    DumbbellConfig { n_bbr, n_cubic, bbr_variant: variant, duration_s: 20.0, warmup_s: 5.0, ..DumbbellConfig::default() }
}

#[test]
fn cubic_returns_to_w_max_at_k() {
    for w_max in [10.0, 80.0, 333.0] {
        let k = cubic_k(w_max, CUBIC_BETA * w_max);
        assert!((cubic_window(w_max, k, k) - w_max).abs() < 1e-12);
        assert!((cubic_window(w_max, k, 0.0) - CUBIC_BETA * w_max).abs() < 1e-9);
    }
}

#[test]
fn cubic_loss_is_multiplicative() {
    let mut c = Cubic::new(10.0);
    for i in 0..200 {
        c.on_ack(i as f64, 40.0);
    }
    let before = c.cwnd;
    c.on_loss();
    assert!((c.cwnd - 0.7 * before).abs() < 1e-12);
    assert_eq!(c.w_max, before);
    assert!(c.epoch_start.is_none());
}

#[test]
fn default_queue_is_one_and_a_half_bdp() {
    let cfg = DumbbellConfig::default();
    assert_eq!(cfg.bdp_bytes(), 500_000.0);
    assert_eq!(cfg.queue_bytes as f64, 1.5 * cfg.bdp_bytes());
}

#[test]
fn trivial_shares() {
    assert_eq!(run_fairness(&short(3, 0, BbrVariant::Standard)).unwrap().bbr_share, 1.0);
    assert_eq!(run_fairness(&short(0, 3, BbrVariant::Standard)).unwrap().bbr_share, 0.0);
}

#[test]
fn single_cubic_flow_fills_the_link() {
    let r = run_fairness(&short(0, 1, BbrVariant::Standard)).unwrap();
    assert!(r.utilization > 0.9, "{}", r.utilization);
    assert!(r.drops > 0);
}

#[test]
fn informed_bbr_alone_converges_without_probe_rtt() {
    let r = run_fairness(&short(1, 0, BbrVariant::Informed)).unwrap();
    assert!(r.utilization > 0.9, "{}", r.utilization);
    let f = &r.flows[0];
    assert_eq!(f.probe_rtt_entries, 0);
    assert_eq!((f.rtprop_min_ms, f.rtprop_mean_ms), (Some(40.0), Some(40.0)));
}

#[test]
fn accounting_is_conserved_and_work_conserving() {
    for (b, c, v) in [(2, 8, BbrVariant::Standard), (5, 5, BbrVariant::Informed), (0, 4, BbrVariant::Standard)] {
        let r = run_fairness(&short(b, c, v)).unwrap();
        assert!(r.counters.balanced(), "{:?}", r.counters);
        assert_eq!(r.counters.dropped, r.drops);
        // the packet in service at the end is counted as backlog but not yet as busy
        assert!((r.busy_ms - r.backlogged_ms).abs() <= 0.12 + 1e-6, "{} {}", r.busy_ms, r.backlogged_ms);
        let sent: u64 = r.flows.iter().map(|f| f.delivered_packets).sum();
        assert!(sent <= r.counters.delivered);
    }
}

#[test]
fn standing_queue_inflates_standard_estimate() {
    let r = run_fairness(&short(1, 9, BbrVariant::Standard)).unwrap();
    let f = &r.flows[0];
    assert!(f.probe_rtt_entries > 0);
    assert!(f.rtprop_mean_ms.unwrap() > 1.05 * 40.0, "{:?}", f.rtprop_mean_ms);
}

#[test]
fn runs_are_deterministic_per_seed() {
    let cfg = short(2, 3, BbrVariant::Standard);
    assert_eq!(run_fairness(&cfg).unwrap(), run_fairness(&cfg).unwrap());
    let other = run_fairness(&DumbbellConfig { seed: 2, ..cfg }).unwrap();
    assert_ne!(other.queue_series, run_fairness(&short(2, 3, BbrVariant::Standard)).unwrap().queue_series);
}

#[test]
fn infeasible_configs_rejected() {
    let zero = DumbbellConfig { bottleneck_bps: 0.0, ..DumbbellConfig::default() };
    assert!(matches!(run_fairness(&zero), Err(CcaError::Infeasible(_))));
    let empty = DumbbellConfig { n_bbr: 0, n_cubic: 0, ..DumbbellConfig::default() };
    assert!(run_fairness(&empty).is_err());
    assert!(fairness_sweep(&DumbbellConfig::default(), &[11], &[BbrVariant::Standard], ExecMode::Sequential).is_err());
}

#[test]
fn sweep_modes_agree() {
    let base = DumbbellConfig { n_bbr: 1, n_cubic: 3, duration_s: 6.0, warmup_s: 1.0, ..DumbbellConfig::default() };
    let v = [BbrVariant::Standard, BbrVariant::Informed];
    let a = fairness_sweep(&base, &[0, 2, 4], &v, ExecMode::Sequential).unwrap();
    assert_eq!(a, fairness_sweep(&base, &[0, 2, 4], &v, ExecMode::Parallel).unwrap());
    assert_eq!(a.len(), 6);
    assert_eq!(a[5].proportional_share, 1.0);
}
