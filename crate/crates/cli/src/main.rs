//! Command-line front end for the two-party evaluation framework:
//! `bench` times an app/mode configuration and prints a CSV row,
//! `trace` dumps a hardened store's access pattern.

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "sfe-bench", about = "Benchmarks and traces for the two-party evaluation framework.")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time one app/mode configuration and print a CSV row on stdout.
    Bench(sfe_cli::bench::BenchArgs),
    /// Dump the hardened store's access trace for a sequential schedule.
    Trace(sfe_cli::trace::TraceArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Bench(args) => sfe_cli::bench::run(args),
        Cmd::Trace(args) => sfe_cli::trace::run(args),
    };
    if let Err(msg) = result {
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
}
