//! The `bench` subcommand: runs one app/mode configuration repeatedly,
//! re-verifying every iteration's output against the plain reference
//! before any time is recorded, then prints one CSV row on stdout
//! (schema in [`crate::csvrow`]). Progress and diagnostics go to stderr.
//!
//! Over TCP, each party runs in its own process with the same flags and
//! seed; the first party (`--role alice`) listens on `--peer`, accepts
//! one connection per iteration, and prints the CSV row. The second
//! party connects, verifies what it receives, and prints nothing on
//! stdout.

use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, ValueEnum};

use sfe_core::apps::{
    config, AppJob, Database, DatabaseConfig, DijkstraConfig, JobPlan, Millionaires, Mode,
    RoadNetwork,
};
use sfe_core::oram::StoreKind;
use sfe_core::protocol::{
    run_local, run_tcp, setup_oracle, setup_oracle_with_key, CoinRng, GcAlice, GcBob, HybAlice,
    HybBob, LocalRun, PartyProc, Role,
};
use sfe_core::symenc::SymKey;

use crate::csvrow::{BenchRow, HEADER};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AppKind {
    Millionaires,
    Database,
    Dijkstra,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Naive,
    Sgx,
    Hybrid,
    Gc,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Naive => Mode::Naive,
            ModeArg::Sgx => Mode::Sgx,
            ModeArg::Hybrid => Mode::Hybrid,
            ModeArg::Gc => Mode::Gc,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StoreArg {
    Tree,
    Linear,
    Unblinded,
}

impl From<StoreArg> for StoreKind {
    fn from(s: StoreArg) -> StoreKind {
        match s {
            StoreArg::Tree => StoreKind::Tree,
            StoreArg::Linear => StoreKind::Linear,
            StoreArg::Unblinded => StoreKind::Unblinded,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportArg {
    Inproc,
    Tcp,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Alice,
    Bob,
}

/// Times one application/mode configuration and prints a CSV row.
#[derive(Args)]
pub struct BenchArgs {
    /// Application to run.
    #[arg(long, value_enum)]
    pub app: AppKind,

    /// Execution mode.
    #[arg(long, value_enum, default_value = "sgx")]
    pub mode: ModeArg,

    /// Hardened store backing the oracle's memory (database app only).
    #[arg(long, value_enum, default_value = "linear")]
    pub store: StoreArg,

    /// Transport between the two parties.
    #[arg(long, value_enum, default_value = "inproc")]
    pub transport: TransportArg,

    /// Which party this process plays (tcp only).
    #[arg(long, value_enum)]
    pub role: Option<RoleArg>,

    /// `host:port` rendezvous (tcp only): the first party listens there,
    /// the second connects.
    #[arg(long)]
    pub peer: Option<String>,

    /// Token length in bits.
    #[arg(long, default_value_t = 80)]
    pub k: usize,

    /// Base seed for the instance and the per-iteration coins.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Timed iterations (default: 100 for the oracle modes, 10 for modes
    /// that garble circuits).
    #[arg(long)]
    pub iters: Option<usize>,

    /// Comparison width in bits (millionaires).
    #[arg(long, default_value_t = 1024)]
    pub bits: usize,

    /// Entry count (database).
    #[arg(long, default_value_t = 500)]
    pub entries: usize,

    /// Lookup count (database).
    #[arg(long, default_value_t = 2500)]
    pub queries: usize,

    /// Protection-marked lookups (database; defaults to one tenth of the
    /// lookups in hybrid mode, 0 otherwise).
    #[arg(long)]
    pub sensitive: Option<usize>,

    /// Ordinary node count (dijkstra).
    #[arg(long, default_value_t = 100)]
    pub nodes: usize,

    /// District entrance count (dijkstra; defaults from the size ladder).
    #[arg(long)]
    pub entrances: Option<usize>,

    /// District node count (dijkstra; defaults from the size ladder).
    #[arg(long)]
    pub district: Option<usize>,

    /// Record-store workload file (overrides --entries/--queries/--sensitive/--store).
    #[arg(long)]
    pub db_config: Option<PathBuf>,

    /// Road-network file (overrides --nodes/--entrances/--district).
    #[arg(long)]
    pub graph_config: Option<PathBuf>,

    /// File holding the hex-encoded long-term oracle key (default:
    /// derived from the seed; both parties must use the same file).
    #[arg(long)]
    pub key_file: Option<PathBuf>,

    /// Allow sizes beyond the desk-scale caps (dijkstra > 250 ordinary
    /// nodes, database > 1000 entries or > 2500 lookups, and circuit-mode
    /// workloads whose garbled tables would not fit desk memory).
    #[arg(long)]
    pub allow_large: bool,
}

/// The instantiated workload behind one bench invocation.
enum Workload {
    Compare(Millionaires),
    Lookup(Database),
    Route(Box<RoadNetwork>),
}

impl Workload {
    fn app_name(&self) -> &'static str {
        match self {
            Workload::Compare(_) => "millionaires",
            Workload::Lookup(_) => "database",
            Workload::Route(_) => "dijkstra",
        }
    }

    fn size_desc(&self) -> String {
        match self {
            Workload::Compare(m) => format!("bits={}", m.n_bits()),
            Workload::Lookup(db) => format!(
                "entries={};queries={};marked={}",
                db.cfg.entry_count,
                db.cfg.queries.len(),
                db.cfg.sensitive_count()
            ),
            Workload::Route(net) => format!(
                "nodes={};entrances={};district={}",
                net.cfg.nonsensitive, net.cfg.entrances, net.cfg.sensitive
            ),
        }
    }

    fn store_desc(&self) -> String {
        match self {
            Workload::Lookup(db) => db.cfg.store.to_string(),
            _ => "-".into(),
        }
    }

    fn job(&self, mode: Mode) -> Result<AppJob, String> {
        match self {
            Workload::Compare(m) => m.job(mode),
            Workload::Lookup(db) => db.job(mode),
            Workload::Route(net) => net.job(mode),
        }
        .map_err(|e| e.to_string())
    }

    /// Checks a finished run against the plain reference. `side` limits
    /// the check to what that endpoint can see (TCP mode); `None` means
    /// both outputs are at hand.
    fn verify(&self, mode: Mode, run: &LocalRun, side: Option<Role>) -> Result<(), String> {
        let expect_empty = |bits: &[bool], what: &str| -> Result<(), String> {
            if bits.is_empty() {
                Ok(())
            } else {
                Err(format!("{what} should receive no output bits, got {}", bits.len()))
            }
        };
        match self {
            Workload::Compare(m) => {
                if side == Some(Role::Bob) {
                    return expect_empty(&run.y1, "the second party");
                }
                let got = m.verdict(run).map_err(|e| e.to_string())?;
                if got != m.expected() {
                    return Err("comparison verdict disagrees with the reference".into());
                }
                Ok(())
            }
            Workload::Lookup(db) => {
                if side == Some(Role::Alice) {
                    return expect_empty(&run.y0, "the first party");
                }
                let got = db.results(mode, run).map_err(|e| e.to_string())?;
                if got != db.expected(mode) {
                    return Err("lookup results disagree with the reference".into());
                }
                Ok(())
            }
            Workload::Route(net) => {
                if side == Some(Role::Bob) {
                    return expect_empty(&run.y1, "the second party");
                }
                let (cost, _) = net.route(mode, run).map_err(|e| e.to_string())?;
                if cost != net.expected().0 {
                    return Err("route cost disagrees with the reference".into());
                }
                Ok(())
            }
        }
    }
}

/// Entrance/district sizes for a generated network of `nodes` ordinary
/// nodes. Known benchmark sizes use their conventional pairs; anything
/// else falls back to a fifth of the nodes as entrances and half as the
/// district.
fn dijkstra_ladder(nodes: usize) -> (usize, usize) {
    match nodes {
        20 | 50 => (12, 20),
        100 => (22, 25),
        250 => (62, 250),
        n => ((n / 5).max(1), (n / 2).max(1)),
    }
}

fn check_caps(args: &BenchArgs, mode: Mode) -> Result<(), String> {
    if args.allow_large {
        return Ok(());
    }
    match args.app {
        AppKind::Millionaires => {
            if args.bits > 1 << 20 {
                return Err("comparisons beyond 2^20 bits need --allow-large".into());
            }
        }
        AppKind::Database if args.db_config.is_none() => {
            if args.entries > 1000 || args.queries > 2500 {
                return Err(
                    "database sizes beyond 1000 entries x 2500 lookups need --allow-large".into()
                );
            }
            if mode == Mode::Gc && args.entries * args.queries > 200_000 {
                return Err(
                    "the monolithic circuit at this database size will not fit desk memory; \
                     pass --allow-large to try anyway"
                        .into(),
                );
            }
        }
        AppKind::Dijkstra if args.graph_config.is_none() => {
            if args.nodes > 250 {
                return Err("networks beyond 250 ordinary nodes need --allow-large".into());
            }
        }
        _ => {}
    }
    Ok(())
}

fn build_workload(args: &BenchArgs, mode: Mode) -> Result<Workload, String> {
    let app_err = |e: sfe_core::AppError| e.to_string();
    match args.app {
        AppKind::Millionaires => {
            Ok(Workload::Compare(Millionaires::random(args.bits, args.seed).map_err(app_err)?))
        }
        AppKind::Database => {
            let cfg = match &args.db_config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                    config::parse_database(&text).map_err(app_err)?
                }
                None => {
                    let marked = args.sensitive.unwrap_or(if mode == Mode::Hybrid {
                        (args.queries / 10).max(1)
                    } else {
                        0
                    });
                    DatabaseConfig::random_reads(
                        args.entries,
                        args.queries,
                        marked,
                        args.store.into(),
                        args.seed,
                    )
                }
            };
            Ok(Workload::Lookup(Database::new(cfg).map_err(app_err)?))
        }
        AppKind::Dijkstra => {
            let net = match &args.graph_config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| format!("{}: {e}", path.display()))?;
                    config::parse_network(&text).map_err(app_err)?
                }
                None => {
                    let (lad_e, lad_s) = dijkstra_ladder(args.nodes);
                    RoadNetwork::generate(DijkstraConfig {
                        nonsensitive: args.nodes,
                        entrances: args.entrances.unwrap_or(lad_e),
                        sensitive: args.district.unwrap_or(lad_s),
                        seed: args.seed,
                    })
                    .map_err(app_err)?
                }
            };
            if mode == Mode::Gc && !args.allow_large {
                // ~630 encrypted rows per edge relaxation, node_count sweeps.
                let est = net.node_count() * net.edges.len() * 630;
                if est > 80_000_000 {
                    return Err(format!(
                        "the monolithic circuit for this network needs roughly {est} encrypted \
                         rows; pass --allow-large to try anyway"
                    ));
                }
            }
            Ok(Workload::Route(Box::new(net)))
        }
    }
}

fn load_key(path: &PathBuf) -> Result<SymKey, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    SymKey::from_hex(text.trim()).map_err(|e| format!("{}: {e}", path.display()))
}

fn alice_machine(
    job: &AppJob,
    k: usize,
    run_seed: u64,
    key: Option<&SymKey>,
) -> Result<Box<dyn PartyProc>, String> {
    match &job.plan {
        JobPlan::Circuit { circuit, dual } => Ok(Box::new(GcAlice::new(
            circuit.clone(),
            k,
            job.input_a.clone(),
            *dual,
            1,
            CoinRng::new(run_seed, Role::Alice),
        ))),
        JobPlan::Scheme { scheme } => {
            let oracle = match key {
                Some(key) => setup_oracle_with_key(scheme, key.clone(), run_seed),
                None => setup_oracle(scheme, run_seed).map(|(oracle, _)| oracle),
            }
            .map_err(|e| e.to_string())?;
            let m =
                HybAlice::new(scheme.clone(), oracle, k, &job.input_a, CoinRng::new(run_seed, Role::Alice))
                    .map_err(|e| e.to_string())?;
            Ok(Box::new(m))
        }
    }
}

fn bob_machine(
    job: &AppJob,
    k: usize,
    run_seed: u64,
    key: Option<&SymKey>,
) -> Result<Box<dyn PartyProc>, String> {
    match &job.plan {
        JobPlan::Circuit { circuit, dual } => Ok(Box::new(GcBob::new(
            circuit.clone(),
            k,
            job.input_b.clone(),
            *dual,
            1,
            CoinRng::new(run_seed, Role::Bob),
        ))),
        JobPlan::Scheme { scheme } => {
            let key = match key {
                Some(key) => key.clone(),
                None => setup_oracle(scheme, run_seed).map_err(|e| e.to_string())?.1,
            };
            let m = HybBob::new(scheme.clone(), key, k, &job.input_b, CoinRng::new(run_seed, Role::Bob))
                .map_err(|e| e.to_string())?;
            Ok(Box::new(m))
        }
    }
}

/// Coin seed for iteration `i`; both processes of a TCP pair compute the
/// same value.
fn run_seed(base: u64, i: usize) -> u64 {
    base.wrapping_add(i as u64)
}

fn wire_bytes(run: &LocalRun) -> u64 {
    run.transcript.messages.iter().map(|m| m.frame.wire_len() as u64).sum()
}

/// Mean and relative 95% CI half-width of the per-iteration times.
fn mean_ci(times: &[f64]) -> (f64, f64) {
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    if times.len() < 2 || mean <= 0.0 {
        return (mean, 0.0);
    }
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt() / mean)
}

fn connect_retry(peer: &str) -> Result<TcpStream, String> {
    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        match TcpStream::connect(peer) {
            Ok(stream) => {
                stream.set_nodelay(true).ok();
                return Ok(stream);
            }
            Err(e) => {
                if Instant::now() >= deadline {
                    return Err(format!("cannot reach {peer}: {e}"));
                }
                std::thread::sleep(Duration::from_millis(100));
            }
        }
    }
}

pub fn run(args: BenchArgs) -> Result<(), String> {
    let mode: Mode = args.mode.into();
    if args.transport == TransportArg::Tcp && (args.role.is_none() || args.peer.is_none()) {
        return Err("tcp transport needs --role and --peer".into());
    }
    if args.transport == TransportArg::Inproc && (args.role.is_some() || args.peer.is_some()) {
        return Err("--role/--peer only apply to --transport tcp".into());
    }
    check_caps(&args, mode)?;
    let work = build_workload(&args, mode)?;
    let job = work.job(mode)?;
    let key = args.key_file.as_ref().map(load_key).transpose()?;
    let iters = args.iters.unwrap_or(match mode {
        Mode::Naive | Mode::Sgx => 100,
        Mode::Hybrid | Mode::Gc => 10,
    });
    if iters == 0 {
        return Err("--iters must be positive".into());
    }

    let transport = match args.transport {
        TransportArg::Inproc => "inproc",
        TransportArg::Tcp => "tcp",
    };
    let proto = format!("bench/{}/{}", work.app_name(), mode);
    eprintln!(
        "bench: app={} mode={mode} transport={transport} size=[{}] store={} k={} seed={} iters={iters}",
        work.app_name(),
        work.size_desc(),
        work.store_desc(),
        args.k,
        args.seed,
    );

    let mut times = Vec::with_capacity(iters);
    let mut bytes = 0u64;
    let mut emit_row = true;

    match args.transport {
        TransportArg::Inproc => {
            for i in 0..iters {
                let rs = run_seed(args.seed, i);
                let t0 = Instant::now();
                let mut alice = alice_machine(&job, args.k, rs, key.as_ref())?;
                let mut bob = bob_machine(&job, args.k, rs, key.as_ref())?;
                let run = run_local(
                    &proto,
                    args.k,
                    rs,
                    &job.input_a,
                    &job.input_b,
                    alice.as_mut(),
                    bob.as_mut(),
                )
                .map_err(|e| e.to_string())?;
                let dt_ms = t0.elapsed().as_secs_f64() * 1e3;
                work.verify(mode, &run, None)?;
                times.push(dt_ms);
                bytes = wire_bytes(&run);
            }
        }
        TransportArg::Tcp => {
            let peer = args.peer.as_deref().expect("checked above");
            match args.role.expect("checked above") {
                RoleArg::Alice => {
                    let listener =
                        TcpListener::bind(peer).map_err(|e| format!("bind {peer}: {e}"))?;
                    eprintln!("listening on {peer}");
                    for i in 0..iters {
                        let (mut stream, from) =
                            listener.accept().map_err(|e| e.to_string())?;
                        stream.set_nodelay(true).ok();
                        if i == 0 {
                            eprintln!("peer connected from {from}");
                        }
                        let rs = run_seed(args.seed, i);
                        let t0 = Instant::now();
                        let mut m = alice_machine(&job, args.k, rs, key.as_ref())?;
                        let run = run_tcp(
                            &mut stream,
                            Role::Alice,
                            m.as_mut(),
                            &proto,
                            args.k,
                            rs,
                            &job.input_a,
                        )
                        .map_err(|e| e.to_string())?;
                        let dt_ms = t0.elapsed().as_secs_f64() * 1e3;
                        work.verify(mode, &run, Some(Role::Alice))?;
                        times.push(dt_ms);
                        bytes = wire_bytes(&run);
                    }
                }
                RoleArg::Bob => {
                    for i in 0..iters {
                        let mut stream = connect_retry(peer)?;
                        let rs = run_seed(args.seed, i);
                        let mut m = bob_machine(&job, args.k, rs, key.as_ref())?;
                        let run = run_tcp(
                            &mut stream,
                            Role::Bob,
                            m.as_mut(),
                            &proto,
                            args.k,
                            rs,
                            &job.input_b,
                        )
                        .map_err(|e| e.to_string())?;
                        work.verify(mode, &run, Some(Role::Bob))?;
                    }
                    eprintln!("verified {iters} runs; the listening side reports the timings");
                    emit_row = false;
                }
            }
        }
    }

    if emit_row {
        let (mean_ms, ci95_rel) = mean_ci(&times);
        let row = BenchRow {
            app: work.app_name().into(),
            mode: mode.to_string(),
            transport: transport.into(),
            store: work.store_desc(),
            size: work.size_desc(),
            k: args.k,
            seed: args.seed,
            iters,
            mean_ms,
            ci95_rel,
            bytes_wire: bytes,
            gc_rows: job.rows as u64,
            timing: "protocol".into(),
        };
        println!("{HEADER}");
        println!("{}", row.to_csv());
    }
    Ok(())
}
