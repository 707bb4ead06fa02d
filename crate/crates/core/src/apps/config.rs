//! Plain-text config files for the workloads.
//!
//! Both formats are line-oriented `key = value` text. Blank lines and
//! `#` comments are ignored; keys may repeat where noted.
//!
//! Record-store workload:
//!
//! ```text
//! entries = 64
//! store = tree            # tree | linear | unblinded (optional)
//! seed = 7                # optional, fills the table (default 0)
//! query = select 3
//! query = select 5 sensitive
//! query = set 1 99
//! ```
//!
//! Road network:
//!
//! ```text
//! start = 0
//! end = 1
//! edge = 0 1 65536
//! edge = 2 3 1 sensitive
//! ```

use std::str::FromStr;

use super::database::{DatabaseConfig, DbQuery};
use super::dijkstra::{Edge, RoadNetwork};
use super::AppError;
use crate::oram::StoreKind;

fn bad(line_no: usize, msg: &str) -> AppError {
    AppError::InvalidConfig(format!("line {line_no}: {msg}"))
}

/// Splits config text into `(line_no, key, value)` triples.
fn pairs(text: &str) -> Result<Vec<(usize, &str, &str)>, AppError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(bad(line_no, "expected `key = value`"));
        };
        out.push((line_no, key.trim(), value.trim()));
    }
    Ok(out)
}

fn parse_num<T: FromStr>(line_no: usize, what: &str, token: &str) -> Result<T, AppError> {
    token.parse().map_err(|_| bad(line_no, &format!("{what} `{token}` is not a number")))
}

/// Parses a record-store workload file.
pub fn parse_database(text: &str) -> Result<DatabaseConfig, AppError> {
    let mut entries = None;
    let mut store = StoreKind::Linear;
    let mut seed = 0u64;
    let mut queries = Vec::new();
    for (line_no, key, value) in pairs(text)? {
        match key {
            "entries" => entries = Some(parse_num(line_no, "entry count", value)?),
            "store" => {
                store = value
                    .parse()
                    .map_err(|_| bad(line_no, &format!("unknown store `{value}`")))?;
            }
            "seed" => seed = parse_num(line_no, "seed", value)?,
            "query" => queries.push(parse_query(line_no, value)?),
            other => return Err(bad(line_no, &format!("unknown key `{other}`"))),
        }
    }
    let entry_count =
        entries.ok_or_else(|| AppError::InvalidConfig("missing `entries =` line".into()))?;
    let cfg = DatabaseConfig { entry_count, queries, store, seed };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_query(line_no: usize, value: &str) -> Result<DbQuery, AppError> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    match tokens.as_slice() {
        ["select", idx] => Ok(DbQuery::select(parse_num(line_no, "index", idx)?)),
        ["select", idx, "sensitive"] => {
            Ok(DbQuery::sensitive_select(parse_num(line_no, "index", idx)?))
        }
        ["set", idx, val] => Ok(DbQuery::set(
            parse_num(line_no, "index", idx)?,
            parse_num(line_no, "value", val)?,
        )),
        _ => Err(bad(line_no, "query must be `select <i> [sensitive]` or `set <i> <v>`")),
    }
}

/// Parses a road-network file.
pub fn parse_network(text: &str) -> Result<RoadNetwork, AppError> {
    let mut start = None;
    let mut end = None;
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for (line_no, key, value) in pairs(text)? {
        match key {
            "start" => start = Some(parse_num(line_no, "start node", value)?),
            "end" => end = Some(parse_num(line_no, "end node", value)?),
            "edge" => {
                let tokens: Vec<&str> = value.split_whitespace().collect();
                let (u, v, w, sensitive) = match tokens.as_slice() {
                    [u, v, w] => (u, v, w, false),
                    [u, v, w, "sensitive"] => (u, v, w, true),
                    _ => {
                        return Err(bad(line_no, "edge must be `<u> <v> <weight> [sensitive]`"));
                    }
                };
                edges.push(Edge {
                    u: parse_num(line_no, "node", u)?,
                    v: parse_num(line_no, "node", v)?,
                    sensitive,
                });
                weights.push(parse_num(line_no, "weight", w)?);
            }
            other => return Err(bad(line_no, &format!("unknown key `{other}`"))),
        }
    }
    let start = start.ok_or_else(|| AppError::InvalidConfig("missing `start =` line".into()))?;
    let end = end.ok_or_else(|| AppError::InvalidConfig("missing `end =` line".into()))?;
    RoadNetwork::from_parts(edges, weights, start, end)
}
