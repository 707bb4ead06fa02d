//! End-to-end checks of the compiled binary: flag handling, CSV schema,
//! the two-process TCP path, and the refusal paths.

use std::io::Write;
use std::net::TcpListener;
use std::process::{Command, Stdio};

use sfe_cli::csvrow::{BenchRow, HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sfe-bench"))
}

/// Runs the binary, expects success, and returns parsed stdout rows.
fn bench_rows(args: &[&str]) -> Vec<BenchRow> {
    let out = bin().args(args).output().expect("spawn");
    assert!(
        out.status.success(),
        "exit={:?} stderr={}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).expect("utf8 stdout");
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some(HEADER), "first stdout line must be the header");
    lines.map(|l| BenchRow::parse(l).expect("parsable row")).collect()
}

#[test]
fn a_comparison_bench_prints_one_parsable_row() {
    let rows = bench_rows(&[
        "bench", "--app", "millionaires", "--mode", "gc", "--bits", "64", "--iters", "3",
        "--seed", "7",
    ]);
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!((row.app.as_str(), row.mode.as_str()), ("millionaires", "gc"));
    assert_eq!((row.transport.as_str(), row.store.as_str()), ("inproc", "-"));
    assert_eq!(row.size, "bits=64");
    assert_eq!((row.k, row.seed, row.iters), (80, 7, 3));
    assert!(row.mean_ms > 0.0);
    assert!(row.bytes_wire > 0 && row.gc_rows > 0);
}

#[test]
fn lookup_and_routing_benches_fill_the_shared_schema() {
    let rows = bench_rows(&[
        "bench", "--app", "database", "--entries", "16", "--queries", "8", "--iters", "4",
        "--store", "tree",
    ]);
    assert_eq!(rows[0].store, "tree");
    assert_eq!(rows[0].size, "entries=16;queries=8;marked=0");
    assert_eq!(rows[0].gc_rows, 0, "the oracle modes garble nothing");

    let rows = bench_rows(&[
        "bench", "--app", "dijkstra", "--mode", "hybrid", "--nodes", "12", "--entrances", "3",
        "--district", "6", "--iters", "2", "--seed", "5",
    ]);
    assert_eq!(rows[0].store, "-");
    assert_eq!(rows[0].size, "nodes=12;entrances=3;district=6");
    assert!(rows[0].gc_rows > 0, "the hybrid mode garbles the district rounds");
}

#[test]
fn the_two_process_path_reports_from_the_listening_side() {
    // Grab a free port, then release it for the bench pair.
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").expect("probe bind");
        l.local_addr().unwrap().port()
    };
    let peer = format!("127.0.0.1:{port}");
    let common = [
        "bench", "--app", "database", "--mode", "sgx", "--entries", "16", "--queries", "8",
        "--iters", "3", "--seed", "9", "--transport", "tcp", "--peer", peer.as_str(),
    ];
    let alice = bin()
        .args(common)
        .args(["--role", "alice"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn alice");
    let bob = bin().args(common).args(["--role", "bob"]).output().expect("run bob");
    let alice = alice.wait_with_output().expect("wait alice");

    assert!(bob.status.success(), "bob: {}", String::from_utf8_lossy(&bob.stderr));
    assert!(alice.status.success(), "alice: {}", String::from_utf8_lossy(&alice.stderr));
    assert!(bob.stdout.is_empty(), "the connecting side prints no CSV");

    let stdout = String::from_utf8(alice.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let row = BenchRow::parse(lines.next().expect("row")).expect("parsable row");
    assert_eq!(row.transport, "tcp");
    assert_eq!(row.iters, 3);
    assert!(row.bytes_wire > 0);
}

#[test]
fn both_parties_can_load_the_oracle_key_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("oracle.key");
    std::fs::File::create(&path)
        .and_then(|mut f| writeln!(f, "00112233445566778899aabbccddeeff"))
        .unwrap();
    let rows = bench_rows(&[
        "bench", "--app", "database", "--mode", "hybrid", "--entries", "8", "--queries", "4",
        "--iters", "1", "--key-file", path.to_str().unwrap(),
    ]);
    assert_eq!(rows[0].mode, "hybrid");
}

#[test]
fn impossible_or_oversized_requests_are_refused() {
    // No oracle/circuit split exists for the comparison game.
    let out = bin()
        .args(["bench", "--app", "millionaires", "--mode", "hybrid", "--bits", "64"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    // Desk-scale caps hold unless --allow-large.
    let out = bin().args(["bench", "--app", "dijkstra", "--nodes", "251"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--allow-large"));

    // TCP flags are all-or-nothing.
    let out = bin()
        .args(["bench", "--app", "millionaires", "--bits", "64", "--role", "alice"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn the_unblinded_trace_leaks_the_lookup_index_as_a_diagonal() {
    let out = bin()
        .args(["trace", "--store", "unblinded", "--entries", "5", "--seed", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("step,slot,op"));
    for i in 0..5 {
        assert_eq!(lines.next(), Some(format!("{i},{i},r").as_str()));
    }
    assert_eq!(lines.next(), None);
}

#[test]
fn blinded_traces_touch_the_same_slots_regardless_of_the_index() {
    let out = bin()
        .args(["trace", "--store", "linear", "--entries", "4", "--queries", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    // Every lookup scans all four slots in order, whatever index it asked
    // for, so the slot column cycles 0..4 once per lookup.
    let slots: Vec<&str> =
        stdout.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(slots, ["0", "1", "2", "3"].repeat(3));
}

#[test]
fn workload_files_override_the_size_flags() {
    let dir = tempfile::tempdir().unwrap();

    let db = dir.path().join("workload.db");
    std::fs::write(
        &db,
        "# tiny mixed workload\nentries = 6\nstore = linear\nquery = set 2 99\nquery = select 2\nquery = select 5 sensitive\n",
    )
    .unwrap();
    let rows = bench_rows(&[
        "bench", "--app", "database", "--mode", "hybrid", "--iters", "1", "--db-config",
        db.to_str().unwrap(),
    ]);
    assert_eq!(rows[0].size, "entries=6;queries=3;marked=1");

    let net = dir.path().join("roads.net");
    std::fs::write(
        &net,
        "start = 0\nend = 1\nedge = 0 1 70000\nedge = 0 2 65600\nedge = 1 3 65600\nedge = 2 4 10 sensitive\nedge = 3 4 10 sensitive\n",
    )
    .unwrap();
    let rows = bench_rows(&[
        "bench", "--app", "dijkstra", "--mode", "naive", "--iters", "2", "--graph-config",
        net.to_str().unwrap(),
    ]);
    assert_eq!(rows[0].size, "nodes=4;entrances=2;district=1");
}
