//! Scenario files and the experiment runner.
//!
//! A scenario is a TOML document naming a topology source, control-plane and
//! simulator settings, one experiment kind and the seeds to run it with. Every
//! seed produces a directory `seed-<n>` holding CSV tables and a
//! `manifest.json` with the config hash and output digests.

mod table;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use table::{cdf_points, emit_cdf, read_column, Cell, Table};

use crate::beaconing::{run_beaconing, BeaconingConfig, DisclosurePolicy, Ranking, SegmentStore, SelectionPolicy};
use crate::bgp::{compare_with_bgp, compute_ribs, Endpoint};
use crate::congestion::{fairness_sweep, BbrVariant, DumbbellConfig};
use crate::dataplane::{measured_topology, CrossTraffic, DataPlaneSim, SimConfig};
use crate::exec::{self, ExecMode};
use crate::geo::GeoCoord;
use crate::pathcomp::{enumerate_paths, estimate_latency_reverse, estimate_round_trip, EndToEndPath, LatencyEstimate, MissingInfoPolicy, DEFAULT_PATH_LIMIT};
use crate::probing::{efficient_probe, exhaustive_probe, Candidate, ProbeMetric, ProbingReport, SimProber};
use crate::topology::{import_caida, load_topology, prune_to_top_degree, synth_topology, CaidaImportOptions, IsdAsId, SynthParams, Topology};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl ExperimentError {
    /// Process exit status: 1 for configuration problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            _ => 2,
        }
    }
}

fn runtime<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> ExperimentError {
    move |e| ExperimentError::Runtime(format!("{context}: {e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySource {
    /// Generated from the run seed.
    Synth {
        #[serde(default)]
        params: SynthParams,
    },
    /// Line-oriented topology file.
    File { path: PathBuf },
    /// Located relationship records, optionally pruned to the highest-degree ASes.
    Caida {
        path: PathBuf,
        #[serde(default = "default_isd")]
        isd: u16,
        #[serde(default)]
        prune_top: Option<usize>,
    },
}

fn default_isd() -> u16 {
    1
}

impl Default for TopologySource {
    fn default() -> Self {
        TopologySource::Synth { params: SynthParams::default() }
    }
}

impl TopologySource {
    fn files(&self) -> Vec<&Path> {
        match self {
            TopologySource::Synth { .. } => vec![],
            TopologySource::File { path } | TopologySource::Caida { path, .. } => vec![path.as_path()],
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let TopologySource::File { path } | TopologySource::Caida { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn load(&self, seed: u64) -> Result<Topology, ExperimentError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| ExperimentError::Io { context: format!("reading {}", p.display()), source })
        };
        let t = match self {
            TopologySource::Synth { params } => synth_topology(seed, params),
            TopologySource::File { path } => load_topology(&read(path)?),
            TopologySource::Caida { path, isd, prune_top } => {
                import_caida(&read(path)?, &CaidaImportOptions { isd: *isd }).and_then(|t| match prune_top {
                    Some(n) => prune_to_top_degree(&t, *n),
                    None => Ok(t),
                })
            }
        };
        t.map_err(|e| ExperimentError::Config(format!("topology: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeaconingSection {
    pub rounds: usize,
    pub k: usize,
    pub ranking: Ranking,
    /// ASes that withhold latency attributes, as `isd-asn`.
    pub undisclosed: Vec<String>,
}

impl Default for BeaconingSection {
    fn default() -> Self {
        let d = BeaconingConfig::default();
        Self { rounds: d.rounds, k: d.selection.k, ranking: d.selection.ranking, undisclosed: Vec::new() }
    }
}

impl BeaconingSection {
    pub fn config(&self) -> Result<BeaconingConfig, ExperimentError> {
        let mut cfg = BeaconingConfig { rounds: self.rounds, selection: SelectionPolicy { k: self.k, ranking: self.ranking }, ..BeaconingConfig::default() };
        for s in &self.undisclosed {
            let id: IsdAsId = s.parse().map_err(ExperimentError::Config)?;
            cfg.disclosure.insert(id, DisclosurePolicy::None);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub limit: usize,
    pub policy: MissingInfoPolicy,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self { limit: DEFAULT_PATH_LIMIT, policy: MissingInfoPolicy::ZeroFill }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkTraffic {
    pub link: usize,
    pub process: CrossTraffic,
}

/// Cross traffic per inter-domain link. `on_off` seeds are offset by the run
/// seed and the link index so links and seeds get distinct schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossTrafficSection {
    pub default: CrossTraffic,
    pub links: Vec<LinkTraffic>,
}

impl Default for CrossTrafficSection {
    fn default() -> Self {
        Self { default: CrossTraffic::None, links: Vec::new() }
    }
}

impl CrossTrafficSection {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(format!("cross traffic: {e}")))
    }

    fn process_for(&self, link: usize, seed: u64) -> CrossTraffic {
        let p = self.links.iter().find(|l| l.link == link).map_or(&self.default, |l| &l.process).clone();
        match p {
            CrossTraffic::OnOff { seed: s, bytes, on_ms, off_ms } => CrossTraffic::OnOff {
                seed: s.wrapping_add(seed.wrapping_mul(1_000_003)).wrapping_add(link as u64),
                bytes,
                on_ms,
                off_ms,
            },
            other => other,
        }
    }

    pub fn install(&self, sim: &mut DataPlaneSim<'_>, seed: u64) {
        for link in 0..sim.topology().links().len() {
            let p = self.process_for(link, seed);
            if p != CrossTraffic::None {
                sim.set_link_cross_traffic(link, p);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Advertise {
    /// Latency attributes carry the topology's true propagation latencies.
    #[default]
    GroundTruth,
    /// Latency attributes carry half the minimum RTT measured under cross traffic.
    Measured,
}

fn default_measure_s() -> f64 {
    60.0
}
fn default_interval_ms() -> f64 {
    1_000.0
}
fn default_experienced() -> usize {
    11
}
fn default_batch() -> usize {
    1
}
fn default_announcers() -> usize {
    3
}
fn default_probes() -> usize {
    50
}
fn default_spread() -> f64 {
    0.5
}
fn default_n_bbr() -> Vec<usize> {
    (0..=10).collect()
}
fn default_variants() -> Vec<BbrVariant> {
    vec![BbrVariant::Standard, BbrVariant::Informed]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Advertised versus experienced round-trip latency for every path.
    Estimator {
        /// Ordered AS pairs sampled from the run seed; 0 means all pairs.
        #[serde(default)]
        pairs: usize,
        #[serde(default)]
        advertise: Advertise,
        #[serde(default = "default_measure_s")]
        measure_s: f64,
        #[serde(default = "default_interval_ms")]
        measure_interval_ms: f64,
        #[serde(default = "default_experienced")]
        experienced_probes: usize,
    },
    /// Fewest-hops default path versus lowest-estimate path per AS pair.
    Reduction {
        #[serde(default)]
        pairs: usize,
    },
    /// Early-terminating probing against exhaustive probing per AS pair.
    Probing {
        #[serde(default)]
        pairs: usize,
        #[serde(default = "default_batch")]
        batch: usize,
        #[serde(default)]
        metric: ProbeMetric,
    },
    /// BBR share against CUBIC on a dumbbell; the dumbbell seed is the run seed.
    CcaSweep {
        #[serde(default)]
        dumbbell: DumbbellConfig,
        #[serde(default = "default_n_bbr")]
        n_bbr: Vec<usize>,
        #[serde(default = "default_variants")]
        variants: Vec<BbrVariant>,
    },
    /// Latency-aware path choice against BGP hot-potato routing.
    BgpCompare {
        #[serde(default = "default_announcers")]
        announcers: usize,
        #[serde(default = "default_probes")]
        probes: usize,
        /// Endpoints sit within this many degrees of a border router of their AS.
        #[serde(default = "default_spread")]
        spread_deg: f64,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Estimator { .. } => "estimator",
            Experiment::Reduction { .. } => "reduction",
            Experiment::Probing { .. } => "probing",
            Experiment::CcaSweep { .. } => "cca_sweep",
            Experiment::BgpCompare { .. } => "bgp_compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub seeds: Vec<u64>,
    /// Output root; runs land in `<out>/seed-<n>`. Defaults to `out/<name>`.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub exec: ExecMode,
    #[serde(default)]
    pub topology: TopologySource,
    #[serde(default)]
    pub beaconing: BeaconingSection,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub cross_traffic: CrossTrafficSection,
    pub experiment: Experiment,
}

impl Scenario {
    /// Parses a scenario; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ExperimentError> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        s.topology.resolve(base);
        if let Some(out) = &s.out {
            if out.is_relative() {
                s.out = Some(base.join(out));
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io { context: format!("reading {}", path.display()), source })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.seeds.is_empty() {
            return Err(ExperimentError::Config("seeds must not be empty".into()));
        }
        for f in self.topology.files() {
            if !f.is_file() {
                return Err(ExperimentError::Config(format!("{} does not exist", f.display())));
            }
        }
        self.beaconing.config()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the scenario.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("scenario serializes")))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| Path::new("out").join(&self.name))
    }
}

/// Files of one seed's run, in write order; the manifest comes last.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub seed: u64,
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub kind: String,
    pub seed: u64,
    pub config_hash: String,
    pub versions: std::collections::BTreeMap<String, String>,
    pub outputs: Vec<ManifestEntry>,
}

fn manifest(s: &Scenario, seed: u64, files: &[(String, String)]) -> Manifest {
    let versions = [("proplat".to_string(), env!("CARGO_PKG_VERSION").to_string()), ("manifest".to_string(), MANIFEST_VERSION.to_string())]
        .into_iter()
        .collect();
    Manifest {
        scenario: s.name.clone(),
        kind: s.experiment.kind().into(),
        seed,
        config_hash: s.config_hash(),
        versions,
        outputs: files
            .iter()
            .map(|(name, content)| ManifestEntry { file: name.clone(), sha256: hex::encode(Sha256::digest(content)), rows: content.lines().count().saturating_sub(1) })
            .collect(),
    }
}

/// Runs one seed in memory.
pub fn run_seed(s: &Scenario, seed: u64) -> Result<RunOutput, ExperimentError> {
    let files = match &s.experiment {
        Experiment::CcaSweep { dumbbell, n_bbr, variants } => {
            let base = DumbbellConfig { seed, ..dumbbell.clone() };
            let points = fairness_sweep(&base, n_bbr, variants, s.exec).map_err(|e| ExperimentError::Config(format!("cca_sweep: {e}")))?;
            let mut t = Table::new(&["n_bbr", "variant", "bbr_share", "proportional_share", "utilization", "bbr_rtprop_min_ms"]);
            for p in points {
                t.push(vec![p.n_bbr.into(), p.variant.as_str().into(), p.bbr_share.into(), p.proportional_share.into(), p.utilization.into(), p.bbr_rtprop_min_ms.into()]);
            }
            vec![("cca_sweep.csv".to_string(), t.to_csv())]
        }
        other => {
            let topo = s.topology.load(seed)?;
            let ctx = Workbench { s, seed, topo: &topo };
            match other {
                Experiment::Estimator { pairs, advertise, measure_s, measure_interval_ms, experienced_probes } => {
                    vec![("estimator.csv".to_string(), ctx.estimator(*pairs, *advertise, *measure_s, *measure_interval_ms, *experienced_probes)?.to_csv())]
                }
                Experiment::Reduction { pairs } => {
                    let t = ctx.reduction(*pairs)?.to_csv();
                    let cdf = emit_cdf(&t, "reduction_ms").map_err(runtime("reduction CDF"))?;
                    vec![("reduction.csv".to_string(), t), ("reduction_cdf.csv".to_string(), cdf)]
                }
                Experiment::Probing { pairs, batch, metric } => vec![("probing.csv".to_string(), ctx.probing(*pairs, *batch, *metric)?.to_csv())],
                Experiment::BgpCompare { announcers, probes, spread_deg } => {
                    let t = ctx.bgp_compare(*announcers, *probes, *spread_deg)?.to_csv();
                    let cdf = emit_cdf(&t, "delta_ms").map_err(runtime("delta CDF"))?;
                    vec![("bgp_compare.csv".to_string(), t), ("delta_cdf.csv".to_string(), cdf)]
                }
                Experiment::CcaSweep { .. } => unreachable!(),
            }
        }
    };
    let m = manifest(s, seed, &files);
    let mut files = files;
    files.push(("manifest.json".to_string(), serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n"));
    Ok(RunOutput { seed, files })
}

/// Runs every seed and writes `<out>/seed-<n>/*`. Returns the run directories.
pub fn run_scenario(s: &Scenario) -> Result<Vec<PathBuf>, ExperimentError> {
    s.validate()?;
    let outputs: Vec<Result<RunOutput, ExperimentError>> = exec::map(s.exec, &s.seeds, |&seed| run_seed(s, seed));
    let mut dirs = Vec::new();
    for out in outputs {
        let out = out?;
        let dir = s.out_dir().join(format!("seed-{}", out.seed));
        let io = |context: String| move |source| ExperimentError::Io { context, source };
        std::fs::create_dir_all(&dir).map_err(io(format!("creating {}", dir.display())))?;
        for (name, content) in &out.files {
            let p = dir.join(name);
            std::fs::write(&p, content).map_err(io(format!("writing {}", p.display())))?;
        }
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Ordered pairs of distinct ASes that have links, shuffled by `seed`; `n == 0` keeps all.
pub fn sample_pairs(t: &Topology, n: usize, seed: u64) -> Vec<(IsdAsId, IsdAsId)> {
    let ids: Vec<IsdAsId> = t.as_ids().filter(|&a| t.degree(a) > 0).collect();
    let mut pairs: Vec<(IsdAsId, IsdAsId)> = ids.iter().flat_map(|&a| ids.iter().filter(move |&&b| b != a).map(move |&b| (a, b))).collect();
    if n == 0 || n >= pairs.len() {
        return pairs;
    }
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    pairs.truncate(n);
    pairs.sort();
    pairs
}

/// The path a latency-unaware endpoint would use: fewest AS hops, ties by path id.
pub fn default_path<'p>(paths: &'p [(EndToEndPath, LatencyEstimate)]) -> Option<&'p (EndToEndPath, LatencyEstimate)> {
    paths.iter().min_by(|a, b| a.0.hop_count().cmp(&b.0.hop_count()).then_with(|| a.0.path_id().cmp(&b.0.path_id())))
}

/// Endpoints placed near a random border router of each given AS.
pub fn place_endpoints(t: &Topology, prefix: &str, ases: &[IsdAsId], spread_deg: f64, rng: &mut impl Rng) -> Vec<Endpoint> {
    ases.iter()
        .enumerate()
        .map(|(i, &a)| {
            let routers: Vec<GeoCoord> = t.as_node(a).map(|n| n.interfaces.values().copied().collect()).unwrap_or_default();
            let base = routers.choose(rng).copied().unwrap_or(GeoCoord::new(0.0, 0.0).expect("valid"));
            let coord = if spread_deg > 0.0 { base.offset(rng.gen_range(-spread_deg..=spread_deg), rng.gen_range(-spread_deg..=spread_deg)) } else { base };
            Endpoint { id: format!("{prefix}{i}"), as_id: a, coord }
        })
        .collect()
}

/// Servers in `announcers` distinct ASes and `probes` probes in random ASes,
/// drawn from `seed`. Only ASes with links are eligible.
pub fn bgp_endpoints(t: &Topology, announcers: usize, probes: usize, spread_deg: f64, seed: u64) -> Result<(Vec<Endpoint>, Vec<Endpoint>), ExperimentError> {
    let linked: Vec<IsdAsId> = t.as_ids().filter(|&a| t.degree(a) > 0).collect();
    if announcers == 0 || announcers > linked.len() || probes == 0 {
        return Err(ExperimentError::Config(format!("need 1..={} announcers and at least one probe", linked.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<IsdAsId> = linked.choose_multiple(&mut rng, announcers).copied().collect();
    chosen.sort();
    let servers = place_endpoints(t, "s", &chosen, spread_deg, &mut rng);
    let probe_ases: Vec<IsdAsId> = (0..probes).map(|_| *linked.choose(&mut rng).expect("nonempty")).collect();
    Ok((servers, place_endpoints(t, "p", &probe_ases, spread_deg, &mut rng)))
}

/// Outcome of [`Workbench::probe_pair`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairProbe {
    pub candidates: Vec<Candidate>,
    pub efficient: ProbingReport,
    pub exhaustive: ProbingReport,
}

/// A scenario bound to one seed and its loaded topology.
pub struct Workbench<'a> {
    pub s: &'a Scenario,
    pub seed: u64,
    pub topo: &'a Topology,
}

impl Workbench<'_> {
    pub fn store(&self, topo: &Topology) -> Result<SegmentStore, ExperimentError> {
        Ok(run_beaconing(topo, &self.s.beaconing.config()?))
    }

    pub fn sim<'t>(&self, topo: &'t Topology) -> DataPlaneSim<'t> {
        let mut sim = DataPlaneSim::new(topo, self.s.sim.clone());
        self.s.cross_traffic.install(&mut sim, self.seed);
        sim
    }

    pub fn paths(&self, store: &SegmentStore, topo: &Topology, src: IsdAsId, dst: IsdAsId) -> Result<Vec<(EndToEndPath, LatencyEstimate)>, ExperimentError> {
        enumerate_paths(store, topo, src, dst, self.s.paths.limit, self.s.paths.policy).map_err(|e| ExperimentError::Runtime(format!("paths {src} -> {dst}: {e}")))
    }

    fn estimator(&self, pairs: usize, advertise: Advertise, measure_s: f64, interval_ms: f64, n: usize) -> Result<Table, ExperimentError> {
        let advertised = match advertise {
            Advertise::GroundTruth => self.topo.clone(),
            Advertise::Measured => measured_topology(&mut self.sim(self.topo), 0.0, measure_s, interval_ms).map_err(runtime("measuring topology"))?,
        };
        let start = match advertise {
            Advertise::GroundTruth => 0.0,
            Advertise::Measured => measure_s * 1e3,
        };
        let store = self.store(&advertised)?;
        let pairs = sample_pairs(self.topo, pairs, self.seed);
        let policy = self.s.paths.policy;
        let rows = exec::map(self.s.exec, &pairs, |&(src, dst)| -> Result<Vec<Vec<Cell>>, ExperimentError> {
            let mut rows = Vec::new();
            for (p, _) in self.paths(&store, &advertised, src, dst)? {
                let adv = estimate_round_trip(&p, &advertised, policy).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
                let mut sim = self.sim(self.topo);
                let prop = sim.propagation_rtt(&p.hops).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
                let exp = sim.measure_experienced(&p.hops, start, n).ok();
                rows.push(vec![
                    src.to_string().into(),
                    dst.to_string().into(),
                    p.path_id().into(),
                    p.hop_count().into(),
                    adv.into(),
                    prop.into(),
                    exp.into(),
                    exp.map_or(Cell::Empty, |e| (e < adv).into()),
                ]);
            }
            Ok(rows)
        });
        let mut t = Table::new(&["src", "dst", "path_id", "hop_count", "advertised_rtt_ms", "propagation_rtt_ms", "experienced_rtt_ms", "below_advertised"]);
        for r in rows {
            r?.into_iter().for_each(|row| t.push(row));
        }
        Ok(t)
    }

    fn reduction(&self, pairs: usize) -> Result<Table, ExperimentError> {
        let store = self.store(self.topo)?;
        let pairs = sample_pairs(self.topo, pairs, self.seed);
        let rows = exec::map(self.s.exec, &pairs, |&(src, dst)| -> Result<Option<Vec<Cell>>, ExperimentError> {
            let paths = self.paths(&store, self.topo, src, dst)?;
            let (Some(def), Some(best)) = (default_path(&paths), paths.first()) else { return Ok(None) };
            let (d, b) = (def.1.total_min, best.1.total_min);
            Ok(Some(vec![
                src.to_string().into(),
                dst.to_string().into(),
                paths.len().into(),
                def.0.path_id().into(),
                best.0.path_id().into(),
                d.into(),
                b.into(),
                (d - b).into(),
                (if d > 0.0 { (d - b) / d } else { 0.0 }).into(),
            ]))
        });
        let mut t = Table::new(&["src", "dst", "n_paths", "default_path", "best_path", "default_ms", "best_ms", "reduction_ms", "reduction_rel"]);
        for r in rows {
            if let Some(row) = r? {
                t.push(row);
            }
        }
        Ok(t)
    }

    fn probing(&self, pairs: usize, batch: usize, metric: ProbeMetric) -> Result<Table, ExperimentError> {
        if batch == 0 {
            return Err(ExperimentError::Config("probing batch must be at least 1".into()));
        }
        let store = self.store(self.topo)?;
        let pairs = sample_pairs(self.topo, pairs, self.seed);
        let rows = exec::map(self.s.exec, &pairs, |&(src, dst)| -> Result<Option<Vec<Cell>>, ExperimentError> {
            let Some(r) = self.probe_pair(&store, src, dst, batch, metric)? else { return Ok(None) };
            let (eff, exh) = (r.efficient, r.exhaustive);
            Ok(Some(vec![
                src.to_string().into(),
                dst.to_string().into(),
                r.candidates.len().into(),
                eff.probes_sent.into(),
                exh.probes_sent.into(),
                (exh.probes_sent - eff.probes_sent).into(),
                eff.best_path_id.into(),
                eff.best_measured.into(),
                exh.best_path_id.into(),
                exh.best_measured.into(),
                eff.terminated_early.into(),
                eff.veracity_alerts.len().into(),
            ]))
        });
        let mut t = Table::new(&[
            "src",
            "dst",
            "candidates",
            "probes_sent",
            "exhaustive_probes",
            "probes_saved",
            "best_path",
            "best_ms",
            "exhaustive_best_path",
            "exhaustive_best_ms",
            "terminated_early",
            "veracity_alerts",
        ]);
        for r in rows {
            if let Some(row) = r? {
                t.push(row);
            }
        }
        Ok(t)
    }

    /// Efficient and exhaustive probing of every path between `src` and `dst`,
    /// each on a fresh simulator starting at time 0. `None` when no path exists.
    pub fn probe_pair(&self, store: &SegmentStore, src: IsdAsId, dst: IsdAsId, batch: usize, metric: ProbeMetric) -> Result<Option<PairProbe>, ExperimentError> {
        let paths = self.paths(store, self.topo, src, dst)?;
        if paths.is_empty() {
            return Ok(None);
        }
        let mut candidates = Vec::with_capacity(paths.len());
        for (p, est) in &paths {
            let rev = match metric {
                ProbeMetric::OneWay => None,
                ProbeMetric::RoundTrip => Some(estimate_latency_reverse(p, self.topo, self.s.paths.policy).map_err(runtime(p.path_id()))?.total_min),
            };
            candidates.push(Candidate::from_path(p, est, metric, rev));
        }
        let spacing = self.s.sim.probe_spacing_ms;
        let just_paths = || paths.iter().map(|(p, _)| p);
        let mut sim = self.sim(self.topo);
        let mut prober = SimProber::new(&mut sim, just_paths(), 0.0, spacing, metric);
        let efficient = efficient_probe(&candidates, |b: &[&Candidate]| prober.probe(b), batch).map_err(runtime(format!("probing {src} -> {dst}")))?;
        let mut sim = self.sim(self.topo);
        let mut prober = SimProber::new(&mut sim, just_paths(), 0.0, spacing, metric);
        let exhaustive = exhaustive_probe(&candidates, |b: &[&Candidate]| prober.probe(b)).map_err(runtime(format!("probing {src} -> {dst}")))?;
        Ok(Some(PairProbe { candidates, efficient, exhaustive }))
    }

    fn bgp_compare(&self, announcers: usize, probes: usize, spread_deg: f64) -> Result<Table, ExperimentError> {
        let (servers, probe_eps) = bgp_endpoints(self.topo, announcers, probes, spread_deg, self.seed)?;
        let chosen: Vec<IsdAsId> = servers.iter().map(|e| e.as_id).collect();
        let store = self.store(self.topo)?;
        let ribs = compute_ribs(self.topo, &chosen.iter().copied().collect::<BTreeSet<_>>()).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
        Ok(comparison_table(&compare_with_bgp(self.topo, &store, &ribs, &probe_eps, &servers, self.s.exec)))
    }
}

/// Comparison rows as the `bgp_compare.csv` table.
pub fn comparison_table(rows: &[crate::bgp::ComparisonRow]) -> Table {
    let mut t = Table::new(&["probe_id", "server_id", "path_aware_ms", "bgp_ms", "delta_ms"]);
    for r in rows {
        t.push(vec![r.probe_id.clone().into(), r.server_id.clone().into(), r.path_aware_ms.into(), r.bgp_ms.into(), r.delta_ms.into()]);
    }
    t
}
