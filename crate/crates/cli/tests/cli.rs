use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proplat"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("proplat-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn ok(o: Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn gen_topology(dir: &PathBuf) -> PathBuf {
    let topo = dir.join("t.topo");
    ok(bin().args(["--seed", "4", "gen-topology", "--isds", "2", "--noncores-per-isd", "4", "--out"]).arg(&topo).output().unwrap());
    topo
}

#[test]
fn gen_topology_is_seeded() {
    let a = ok(bin().args(["--seed", "9", "gen-topology", "--isds", "2"]).output().unwrap());
    let b = ok(bin().args(["--seed", "9", "gen-topology", "--isds", "2"]).output().unwrap());
    let c = ok(bin().args(["--seed", "10", "gen-topology", "--isds", "2"]).output().unwrap());
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.lines().any(|l| l == "as 1-1 core"));
}

#[test]
fn paths_from_exported_segments_match_inline_beaconing() {
    let dir = scratch("paths");
    let topo = gen_topology(&dir);
    let segs = dir.join("segs.txt");
    ok(bin().args(["beacon", "--topology"]).arg(&topo).arg("--out").arg(&segs).output().unwrap());
    let from_file = ok(bin().args(["paths", "--src", "1-3", "--dst", "2-4", "--topology"]).arg(&topo).arg("--segments").arg(&segs).output().unwrap());
    let inline = ok(bin().args(["paths", "--src", "1-3", "--dst", "2-4", "--topology"]).arg(&topo).output().unwrap());
    assert_eq!(from_file, inline);
    assert!(inline.starts_with("path_id,hop_string,total_min_ms,completeness\n"));
    assert!(inline.lines().count() > 1);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn probe_reports_both_methods() {
    let dir = scratch("probe");
    let topo = gen_topology(&dir);
    let csv = ok(bin().args(["probe", "--src", "1-3", "--dst", "2-4", "--batch", "2", "--topology"]).arg(&topo).output().unwrap());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("efficient,") && lines[2].starts_with("exhaustive,"));
    let best = |l: &str| l.split(',').nth(3).unwrap().to_string();
    assert_eq!(best(lines[1]), best(lines[2]));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn compare_and_cdf() {
    let dir = scratch("compare");
    let topo = gen_topology(&dir);
    std::fs::write(dir.join("probes.csv"), "id,as,lat,lon\np0,1-3,10,10\np1,2-5,-20,40\n").unwrap();
    std::fs::write(dir.join("servers.csv"), "id,as,lat,lon\ns0,2-4,0,0\n").unwrap();
    let out = dir.join("cmp.csv");
    ok(bin()
        .args(["compare", "--topology"])
        .arg(&topo)
        .arg("--probes")
        .arg(dir.join("probes.csv"))
        .arg("--servers")
        .arg(dir.join("servers.csv"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("probe_id,server_id,path_aware_ms,bgp_ms,delta_ms\np0,s0,"));
    let cdf = ok(bin().arg("cdf").arg(&out).args(["--column", "path_aware_ms"]).output().unwrap());
    assert_eq!(cdf.lines().count(), 3);
    assert!(cdf.trim_end().ends_with(",1.000000"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn run_scenario_and_exit_codes() {
    let dir = scratch("run");
    let sc = dir.join("s.toml");
    std::fs::write(&sc, "name = \"r\"\nseeds = [1, 2]\nout = \"res\"\n[topology]\nsource = \"synth\"\n[topology.params]\nisds = 2\nnoncores_per_isd = 3\n[experiment]\nkind = \"reduction\"\npairs = 10\n").unwrap();
    let printed = ok(bin().arg("run").arg(&sc).output().unwrap());
    assert_eq!(printed.lines().count(), 2);
    assert!(dir.join("res/seed-2/reduction.csv").is_file());
    let first = std::fs::read(dir.join("res/seed-1/reduction.csv")).unwrap();
    ok(bin().args(["run", "--seed", "1"]).arg(&sc).arg("--out").arg(dir.join("again")).output().unwrap());
    assert_eq!(first, std::fs::read(dir.join("again/seed-1/reduction.csv")).unwrap());
    assert!(!dir.join("again/seed-2").exists());

    std::fs::write(&sc, "name = \"r\"\nseeds = [1]\n[experiment]\nkind = \"nonsense\"\n").unwrap();
    assert_eq!(bin().arg("run").arg(&sc).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["paths", "--topology", "/no/such/file", "--src", "1-1", "--dst", "1-2"]).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["cca", "--n-bbr", "11"]).output().unwrap().status.code(), Some(1));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn cca_single_run_emits_per_flow_rows() {
    let o = bin().args(["cca", "--n-bbr", "1", "--flows", "2", "--informed", "--duration-s", "3", "--warmup-s", "1"]).output().unwrap();
    let csv = ok(o.clone());
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().contains(",bbr_informed,") || csv.lines().nth(2).unwrap().contains(",bbr_informed,"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bbr_share="));
}
