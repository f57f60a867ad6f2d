//! Selection of the lowest-latency path by probing candidates in order of
//! their propagation estimate and stopping once no unprobed candidate can win.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataplane::DataPlaneSim;
use crate::pathcomp::{EndToEndPath, Hop, LatencyEstimate};

/// What a prober returns; estimates are compared in the same unit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMetric {
    #[default]
    OneWay,
    RoundTrip,
}

/// A probe target: its identity and advertised propagation latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub path_id: String,
    pub hop_count: usize,
    /// One-way estimate, or forward plus reverse estimate for round trips.
    pub advertised_ms: f64,
}

impl Candidate {
    /// Candidate from a path and its forward estimate. For round trips the
    /// reverse estimate is added, or the forward one doubled when absent.
    pub fn from_path(path: &EndToEndPath, est: &LatencyEstimate, metric: ProbeMetric, reverse_ms: Option<f64>) -> Self {
        let advertised_ms = match metric {
            ProbeMetric::OneWay => est.total_min,
            ProbeMetric::RoundTrip => est.total_min + reverse_ms.unwrap_or(est.total_min),
        };
        Self { path_id: path.path_id(), hop_count: path.hop_count(), advertised_ms }
    }
}

/// A measurement below the advertised propagation latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VeracityAlert {
    pub path_id: String,
    pub advertised_ms: f64,
    pub measured_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbingReport {
    pub best_path_id: String,
    pub best_measured: f64,
    pub probes_sent: usize,
    /// In probing order; a prefix of the sorted candidate order.
    pub probed_path_ids: Vec<String>,
    /// `None` for probes that failed.
    pub measurements: Vec<Option<f64>>,
    pub failed: Vec<String>,
    pub terminated_early: bool,
    pub veracity_alerts: Vec<VeracityAlert>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbeError {
    #[error("no candidate paths")]
    NoCandidates,
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("every probed path failed")]
    AllFailed,
    #[error("prober returned {got} results for {want} paths")]
    ProberArity { want: usize, got: usize },
}

// measurements this far below the advertisement are float noise, not alerts
const VERACITY_EPS_MS: f64 = 1e-9;

/// Candidate indices ascending by advertised latency, then hop count, then path id.
pub fn probe_order(candidates: &[Candidate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&candidates[a], &candidates[b]);
        x.advertised_ms
            .total_cmp(&y.advertised_ms)
            .then(x.hop_count.cmp(&y.hop_count))
            .then_with(|| x.path_id.cmp(&y.path_id))
    });
    order
}

fn run<P>(candidates: &[Candidate], mut prober: P, batch: usize, early_stop: bool) -> Result<ProbingReport, ProbeError>
where
    P: FnMut(&[&Candidate]) -> Vec<Option<f64>>,
{
    if candidates.is_empty() {
        return Err(ProbeError::NoCandidates);
    }
    if batch == 0 {
        return Err(ProbeError::ZeroBatch);
    }
    let order = probe_order(candidates);
    let mut best: Option<(usize, f64)> = None;
    let mut probed_path_ids = Vec::new();
    let mut measurements = Vec::new();
    let mut failed = Vec::new();
    let mut veracity_alerts = Vec::new();
    let mut next = 0;
    while next < order.len() {
        if early_stop {
            if let Some((_, b)) = best {
                if candidates[order[next]].advertised_ms > b {
                    break;
                }
            }
        }
        let chunk: Vec<&Candidate> = order[next..(next + batch).min(order.len())].iter().map(|&i| &candidates[i]).collect();
        let results = prober(&chunk);
        if results.len() != chunk.len() {
            return Err(ProbeError::ProberArity { want: chunk.len(), got: results.len() });
        }
        for (k, (c, m)) in chunk.iter().zip(results).enumerate() {
            probed_path_ids.push(c.path_id.clone());
            measurements.push(m);
            let Some(m) = m else {
                failed.push(c.path_id.clone());
                continue;
            };
            if m < c.advertised_ms - VERACITY_EPS_MS {
                veracity_alerts.push(VeracityAlert { path_id: c.path_id.clone(), advertised_ms: c.advertised_ms, measured_ms: m });
            }
            if best.is_none_or(|(_, b)| m < b) {
                best = Some((order[next + k], m));
            }
        }
        next += chunk.len();
    }
    let (bi, best_measured) = best.ok_or(ProbeError::AllFailed)?;
    Ok(ProbingReport {
        best_path_id: candidates[bi].path_id.clone(),
        best_measured,
        probes_sent: probed_path_ids.len(),
        probed_path_ids,
        measurements,
        failed,
        terminated_early: next < order.len(),
        veracity_alerts,
    })
}

/// Probes candidates `batch` at a time in [`probe_order`] and stops as soon as
/// the next candidate's advertised latency is strictly higher than the
/// smallest measurement so far. Failed probes are recorded and skipped.
pub fn efficient_probe<P>(candidates: &[Candidate], prober: P, batch: usize) -> Result<ProbingReport, ProbeError>
where
    P: FnMut(&[&Candidate]) -> Vec<Option<f64>>,
{
    run(candidates, prober, batch, true)
}

/// Probes every candidate one at a time in [`probe_order`].
pub fn exhaustive_probe<P>(candidates: &[Candidate], prober: P) -> Result<ProbingReport, ProbeError>
where
    P: FnMut(&[&Candidate]) -> Vec<Option<f64>>,
{
    run(candidates, prober, 1, false)
}

/// Prober backed by the data-plane simulator. Each batch is sent concurrently
/// at the current clock, which then advances by `spacing_ms`.
pub struct SimProber<'s, 't> {
    sim: &'s mut DataPlaneSim<'t>,
    hops: BTreeMap<String, Vec<Hop>>,
    pub clock_ms: f64,
    pub spacing_ms: f64,
    pub metric: ProbeMetric,
}

impl<'s, 't> SimProber<'s, 't> {
    pub fn new<'p>(
        sim: &'s mut DataPlaneSim<'t>,
        paths: impl IntoIterator<Item = &'p EndToEndPath>,
        start_ms: f64,
        spacing_ms: f64,
        metric: ProbeMetric,
    ) -> Self {
        let hops = paths.into_iter().map(|p| (p.path_id(), p.hops.clone())).collect();
        Self { sim, hops, clock_ms: start_ms, spacing_ms, metric }
    }

    /// Unknown path ids and dropped probes count as failures.
    pub fn probe(&mut self, batch: &[&Candidate]) -> Vec<Option<f64>> {
        let known: Vec<(usize, &[Hop])> =
            batch.iter().enumerate().filter_map(|(i, c)| self.hops.get(&c.path_id).map(|h| (i, h.as_slice()))).collect();
        let requests: Vec<(&[Hop], f64)> = known.iter().map(|&(_, h)| (h, self.clock_ms)).collect();
        let mut out = vec![None; batch.len()];
        if let Ok(results) = self.sim.send_probes(&requests) {
            for ((i, _), r) in known.iter().zip(results) {
                out[*i] = r.ok().map(|(rtt, fwd)| match self.metric {
                    ProbeMetric::OneWay => fwd,
                    ProbeMetric::RoundTrip => rtt,
                });
            }
        }
        self.clock_ms += self.spacing_ms;
        out
    }
}
