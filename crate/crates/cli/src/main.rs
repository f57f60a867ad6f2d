use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use proplat::beaconing::{export_store, import_store, run_beaconing, Ranking, SegmentStore};
use proplat::bgp::{compare_with_bgp, compute_ribs, Endpoint};
use proplat::congestion::{fairness_sweep, run_fairness, BbrVariant, DumbbellConfig};
use proplat::exec::ExecMode;
use proplat::experiments::{comparison_table, emit_cdf, run_scenario, BeaconingSection, CrossTrafficSection, Experiment, PathsSection, Scenario, Table, TopologySource, Workbench};
use proplat::geo::GeoCoord;
use proplat::pathcomp::{enumerate_paths, MissingInfoPolicy, DEFAULT_PATH_LIMIT};
use proplat::probing::{ProbeMetric, ProbingReport};
use proplat::topology::{import_caida, load_topology, prune_to_top_degree, serialize_topology, synth_topology, CaidaImportOptions, IsdAsId, SynthParams, Topology};

/// Latency dissemination, path selection and probing experiments on path-aware topologies.
#[derive(Parser)]
#[command(name = "proplat", version)]
struct Cli {
    /// Seed for everything random.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file (directory for `run`); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Convert located AS relationship records into a topology file.
    ImportCaida {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        isd: u16,
        /// Keep only the N highest-degree ASes.
        #[arg(long)]
        prune_top: Option<usize>,
    },
    /// Generate a random geo-located topology.
    GenTopology(GenArgs),
    /// Run beaconing and export the segment store.
    Beacon {
        #[arg(long)]
        topology: PathBuf,
        #[command(flatten)]
        beacon: BeaconArgs,
    },
    /// List end-to-end paths with their latency estimates.
    Paths {
        #[arg(long)]
        topology: PathBuf,
        /// Segment store from `beacon`; beaconing runs in-process when absent.
        #[arg(long)]
        segments: Option<PathBuf>,
        #[arg(long)]
        src: IsdAsId,
        #[arg(long)]
        dst: IsdAsId,
        #[arg(long, default_value = "zero_fill")]
        policy: MissingInfoPolicy,
        #[arg(long, default_value_t = DEFAULT_PATH_LIMIT)]
        limit: usize,
        #[command(flatten)]
        beacon: BeaconArgs,
    },
    /// Probe the paths between two ASes in the data-plane simulator.
    Probe {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        src: IsdAsId,
        #[arg(long)]
        dst: IsdAsId,
        #[arg(long, default_value_t = 1)]
        batch: usize,
        #[arg(long, value_enum, default_value = "one-way")]
        metric: MetricArg,
        /// TOML file with a `default` cross-traffic process and per-link `links`.
        #[arg(long)]
        cross_traffic: Option<PathBuf>,
        #[command(flatten)]
        beacon: BeaconArgs,
    },
    /// Dumbbell fairness run, or a sweep over the number of BBR flows.
    Cca(CcaArgs),
    /// Latency-aware path choice against BGP for every probe and server.
    Compare {
        #[arg(long)]
        topology: PathBuf,
        /// CSV with columns id,as,lat,lon.
        #[arg(long)]
        probes: PathBuf,
        /// CSV with columns id,as,lat,lon; their ASes announce prefixes.
        #[arg(long)]
        servers: PathBuf,
        #[command(flatten)]
        beacon: BeaconArgs,
    },
    /// Run a scenario file; `--seed` replaces its seeds only when given explicitly.
    Run { scenario: PathBuf },
    /// CDF plot data of a numeric CSV column.
    Cdf {
        csv: PathBuf,
        #[arg(long)]
        column: String,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 3)]
    isds: u16,
    #[arg(long, default_value_t = 2)]
    cores_per_isd: usize,
    #[arg(long, default_value_t = 8)]
    noncores_per_isd: usize,
    #[arg(long)]
    full_core_mesh: bool,
    #[arg(long)]
    peering_prob: Option<f64>,
}

#[derive(Args)]
struct BeaconArgs {
    /// Segments kept per origin and kind at every AS.
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 64)]
    rounds: usize,
    #[arg(long)]
    shortest_hops: bool,
    /// ASes that withhold latency attributes.
    #[arg(long, value_delimiter = ',')]
    undisclosed: Vec<String>,
}

impl BeaconArgs {
    fn section(&self) -> BeaconingSection {
        BeaconingSection {
            rounds: self.rounds,
            k: self.k,
            ranking: if self.shortest_hops { Ranking::ShortestHops } else { Ranking::LatencyPriority },
            undisclosed: self.undisclosed.clone(),
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MetricArg {
    OneWay,
    RoundTrip,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct CcaArgs {
    #[arg(long, default_value_t = 2)]
    n_bbr: usize,
    /// Total flow count; the flows that are not BBR run CUBIC.
    #[arg(long, default_value_t = 10)]
    flows: usize,
    #[arg(long, conflicts_with = "standard")]
    informed: bool,
    #[arg(long)]
    standard: bool,
    #[arg(long, default_value_t = 60.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 10.0)]
    warmup_s: f64,
    #[command(subcommand)]
    sweep: Option<CcaSweep>,
}

#[derive(Subcommand)]
enum CcaSweep {
    /// BBR share for every BBR flow count and both variants.
    Sweep {
        #[arg(long, default_value_t = 10)]
        flows: usize,
        #[arg(long, default_value_t = 60.0)]
        duration_s: f64,
        #[arg(long, default_value_t = 10.0)]
        warmup_s: f64,
        #[arg(long)]
        sequential: bool,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

fn config(e: impl Display) -> Failure {
    Failure { code: 1, msg: e.to_string() }
}

fn runtime(e: impl Display) -> Failure {
    Failure { code: 2, msg: e.to_string() }
}

fn read(p: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| config(format!("reading {}: {e}", p.display())))
}

fn topology(p: &Path) -> Result<Topology, Failure> {
    load_topology(&read(p)?).map_err(|e| config(format!("{}: {e}", p.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| runtime(format!("writing {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn store(t: &Topology, b: &BeaconArgs) -> Result<SegmentStore, Failure> {
    Ok(run_beaconing(t, &b.section().config().map_err(config)?))
}

fn check_as(t: &Topology, id: IsdAsId) -> Result<(), Failure> {
    t.as_node(id).map(|_| ()).ok_or_else(|| config(format!("AS {id} is not in the topology")))
}

fn endpoints(p: &Path) -> Result<Vec<Endpoint>, Failure> {
    let text = read(p)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let bad = |m: String| config(format!("{}:{}: {m}", p.display(), i + 2));
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 4 {
            return Err(bad(format!("expected id,as,lat,lon, got {} fields", rec.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("{s:?} is not a number")));
        let coord = GeoCoord::new(num(&rec[2])?, num(&rec[3])?).map_err(|e| bad(e.to_string()))?;
        out.push(Endpoint { id: rec[0].trim().to_string(), as_id: rec[1].trim().parse().map_err(bad)?, coord });
    }
    Ok(out)
}

fn report_row(t: &mut Table, method: &str, r: &ProbingReport) {
    t.push(vec![
        method.into(),
        r.probes_sent.into(),
        r.best_path_id.clone().into(),
        r.best_measured.into(),
        r.terminated_early.into(),
        r.veracity_alerts.len().into(),
        r.probed_path_ids.join(";").into(),
    ]);
}

fn run(cli: Cli, seed_given: bool) -> Result<(), Failure> {
    let out = &cli.out;
    match cli.cmd {
        Cmd::ImportCaida { file, isd, prune_top } => {
            let mut t = import_caida(&read(&file)?, &CaidaImportOptions { isd }).map_err(config)?;
            if let Some(n) = prune_top {
                t = prune_to_top_degree(&t, n).map_err(config)?;
            }
            emit(out, &serialize_topology(&t))
        }
        Cmd::GenTopology(g) => {
            let d = SynthParams::default();
            let p = SynthParams {
                isds: g.isds,
                cores_per_isd: g.cores_per_isd,
                noncores_per_isd: g.noncores_per_isd,
                full_core_mesh: g.full_core_mesh,
                peering_prob: g.peering_prob.unwrap_or(d.peering_prob),
                ..d
            };
            emit(out, &serialize_topology(&synth_topology(cli.seed, &p).map_err(config)?))
        }
        Cmd::Beacon { topology: f, beacon } => emit(out, &export_store(&store(&topology(&f)?, &beacon)?)),
        Cmd::Paths { topology: f, segments, src, dst, policy, limit, beacon } => {
            let t = topology(&f)?;
            check_as(&t, src)?;
            check_as(&t, dst)?;
            let s = match segments {
                Some(p) => import_store(&read(&p)?).map_err(|e| config(format!("{}: {e}", p.display())))?,
                None => store(&t, &beacon)?,
            };
            let paths = enumerate_paths(&s, &t, src, dst, limit, policy).map_err(runtime)?;
            let mut table = Table::new(&["path_id", "hop_string", "total_min_ms", "completeness"]);
            for (p, est) in paths {
                table.push(vec![p.path_id().into(), p.hop_string().into(), est.total_min.into(), est.completeness.to_string().into()]);
            }
            emit(out, &table.to_csv())
        }
        Cmd::Probe { topology: f, src, dst, batch, metric, cross_traffic, beacon } => {
            if batch == 0 {
                return Err(config("--batch must be at least 1"));
            }
            let t = topology(&f)?;
            check_as(&t, src)?;
            check_as(&t, dst)?;
            let traffic = match cross_traffic {
                Some(p) => CrossTrafficSection::parse(&read(&p)?).map_err(config)?,
                None => CrossTrafficSection::default(),
            };
            let metric = match metric {
                MetricArg::OneWay => ProbeMetric::OneWay,
                MetricArg::RoundTrip => ProbeMetric::RoundTrip,
            };
            let s = Scenario {
                name: "probe".into(),
                seeds: vec![cli.seed],
                out: None,
                exec: ExecMode::Sequential,
                topology: TopologySource::File { path: f.clone() },
                beaconing: beacon.section(),
                paths: PathsSection::default(),
                sim: Default::default(),
                cross_traffic: traffic,
                experiment: Experiment::Probing { pairs: 1, batch, metric },
            };
            let bench = Workbench { s: &s, seed: cli.seed, topo: &t };
            let segs = store(&t, &beacon)?;
            let r = bench.probe_pair(&segs, src, dst, batch, metric).map_err(runtime)?.ok_or_else(|| runtime(format!("no path from {src} to {dst}")))?;
            let mut table = Table::new(&["method", "probes_sent", "best_path", "best_ms", "terminated_early", "veracity_alerts", "probed_paths"]);
            report_row(&mut table, "efficient", &r.efficient);
            report_row(&mut table, "exhaustive", &r.exhaustive);
            emit(out, &table.to_csv())
        }
        Cmd::Cca(a) => match a.sweep {
            Some(CcaSweep::Sweep { flows, duration_s, warmup_s, sequential }) => {
                let base = DumbbellConfig { n_bbr: 0, n_cubic: flows, duration_s, warmup_s, seed: cli.seed, ..DumbbellConfig::default() };
                let mode = if sequential { ExecMode::Sequential } else { ExecMode::Parallel };
                let pts = fairness_sweep(&base, &(0..=flows).collect::<Vec<_>>(), &[BbrVariant::Standard, BbrVariant::Informed], mode).map_err(config)?;
                let mut t = Table::new(&["n_bbr", "variant", "bbr_share", "proportional_share", "utilization", "bbr_rtprop_min_ms"]);
                for p in pts {
                    t.push(vec![p.n_bbr.into(), p.variant.as_str().into(), p.bbr_share.into(), p.proportional_share.into(), p.utilization.into(), p.bbr_rtprop_min_ms.into()]);
                }
                emit(out, &t.to_csv())
            }
            None => {
                if a.n_bbr > a.flows {
                    return Err(config(format!("--n-bbr {} exceeds --flows {}", a.n_bbr, a.flows)));
                }
                let variant = if a.informed { BbrVariant::Informed } else { BbrVariant::Standard };
                let cfg = DumbbellConfig {
                    n_bbr: a.n_bbr,
                    n_cubic: a.flows - a.n_bbr,
                    bbr_variant: variant,
                    duration_s: a.duration_s,
                    warmup_s: a.warmup_s,
                    seed: cli.seed,
                    ..DumbbellConfig::default()
                };
                let r = run_fairness(&cfg).map_err(config)?;
                let mut t = Table::new(&["flow_id", "cca", "goodput_bps", "delivered_packets", "lost_packets", "rtprop_min_ms", "rtprop_mean_ms", "probe_rtt_entries"]);
                for f in &r.flows {
                    t.push(vec![
                        f.id.into(),
                        f.cca.as_str().into(),
                        f.goodput_bps.into(),
                        (f.delivered_packets as usize).into(),
                        (f.lost_packets as usize).into(),
                        f.rtprop_min_ms.into(),
                        f.rtprop_mean_ms.into(),
                        (f.probe_rtt_entries as usize).into(),
                    ]);
                }
                emit(out, &t.to_csv())?;
                eprintln!("bbr_share={:.6} proportional_share={:.6} utilization={:.6}", r.bbr_share, a.n_bbr as f64 / a.flows as f64, r.utilization);
                Ok(())
            }
        },
        Cmd::Compare { topology: f, probes, servers, beacon } => {
            let t = topology(&f)?;
            let (probes, servers) = (endpoints(&probes)?, endpoints(&servers)?);
            for e in probes.iter().chain(&servers) {
                check_as(&t, e.as_id)?;
            }
            let announcers: BTreeSet<IsdAsId> = servers.iter().map(|s| s.as_id).collect();
            let ribs = compute_ribs(&t, &announcers).map_err(runtime)?;
            let rows = compare_with_bgp(&t, &store(&t, &beacon)?, &ribs, &probes, &servers, ExecMode::Parallel);
            emit(out, &comparison_table(&rows).to_csv())
        }
        Cmd::Run { scenario } => {
            let mut s = Scenario::load(&scenario).map_err(|e| Failure { code: e.exit_code() as u8, msg: e.to_string() })?;
            if let Some(o) = out {
                s.out = Some(o.clone());
            }
            if seed_given {
                s.seeds = vec![cli.seed];
            }
            for dir in run_scenario(&s).map_err(|e| Failure { code: e.exit_code() as u8, msg: e.to_string() })? {
                println!("{}", dir.display());
            }
            Ok(())
        }
        Cmd::Cdf { csv, column } => emit(out, &emit_cdf(&read(&csv)?, &column).map_err(config)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let seed_given = std::env::args().any(|a| a == "--seed" || a.starts_with("--seed="));
    match run(cli, seed_given) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
