//! Harness internals behind the `sfe-bench` binary: argument types, the
//! benchmark and trace runners, and the CSV row schema (shared with the
//! binary's tests).

pub mod bench;
pub mod csvrow;
pub mod trace;
