//! The `trace` subcommand: runs a sequential lookup schedule against the
//! hardened record store and dumps the oracle-side access trace as CSV on
//! stdout (`step,slot,op`, one row per physical slot touched, `op` being
//! `r` or `w`). The point is to eyeball — or script against — what the
//! memory bus sees: the blinded stores touch the same number of slots for
//! every lookup regardless of the requested index, while the unblinded
//! store leaks the index as a diagonal.

use clap::Args;

use sfe_core::apps::{Database, DatabaseConfig, DbQuery, Mode, DB_STATE_KEY};
use sfe_core::oram::StoreKind;

use crate::bench::StoreArg;

/// Dumps the hardened store's access trace for a sequential lookup
/// schedule.
#[derive(Args)]
pub struct TraceArgs {
    /// Hardened store to trace.
    #[arg(long, value_enum, default_value = "tree")]
    pub store: StoreArg,

    /// Entry count in the record store.
    #[arg(long, default_value_t = 32)]
    pub entries: usize,

    /// Lookups to run, reading entries 0, 1, 2, ... in order (wrapping;
    /// default: one pass over the store).
    #[arg(long)]
    pub queries: Option<usize>,

    /// Seed for store layout and entry values.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Token length in bits.
    #[arg(long, default_value_t = 80)]
    pub k: usize,
}

pub fn run(args: TraceArgs) -> Result<(), String> {
    let query_count = args.queries.unwrap_or(args.entries);
    if args.entries == 0 || query_count == 0 {
        return Err("--entries and --queries must be positive".into());
    }
    let store: StoreKind = args.store.into();
    let cfg = DatabaseConfig {
        entry_count: args.entries,
        queries: (0..query_count).map(|i| DbQuery::select((i % args.entries) as u64)).collect(),
        store,
        seed: args.seed,
    };
    let db = Database::new(cfg).map_err(|e| e.to_string())?;
    let job = db.job(Mode::Sgx).map_err(|e| e.to_string())?;
    let (run, oracle) = job.run_local(args.k, args.seed).map_err(|e| e.to_string())?;
    let got = db.results(Mode::Sgx, &run).map_err(|e| e.to_string())?;
    if got != db.expected(Mode::Sgx) {
        return Err("lookup results disagree with the reference".into());
    }
    let oracle = oracle.expect("the hardened mode always runs an oracle");
    let csv = oracle
        .trace_csv(DB_STATE_KEY)
        .ok_or_else(|| "the oracle recorded no store trace".to_string())?;
    print!("{csv}");
    let rows = csv.lines().count().saturating_sub(1);
    eprintln!(
        "trace: store={store} entries={} queries={query_count} rows={rows}",
        args.entries
    );
    Ok(())
}
