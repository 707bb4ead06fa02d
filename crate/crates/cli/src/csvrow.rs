//! The harness's CSV schema: one row per benchmarked configuration.
//!
//! Columns, in order (none of the fields may contain a comma; the `size`
//! field separates its entries with semicolons):
//!
//! | column       | meaning                                                 |
//! |--------------|---------------------------------------------------------|
//! | `app`        | `millionaires` \| `database` \| `dijkstra`              |
//! | `mode`       | `naive` \| `sgx` \| `hybrid` \| `gc`                    |
//! | `transport`  | `inproc` \| `tcp`                                        |
//! | `store`      | `tree` \| `linear` \| `unblinded` \| `-` (no store)     |
//! | `size`       | app-specific `key=value` pairs joined with `;`           |
//! | `k`          | token length in bits                                     |
//! | `seed`       | base seed of the run                                     |
//! | `iters`      | timed iterations                                         |
//! | `mean_ms`    | mean wall time per run, milliseconds                     |
//! | `ci95_rel`   | half-width of the 95% CI of the mean, relative to it     |
//! | `bytes_wire` | frame bytes on the wire (both directions) for one run    |
//! | `gc_rows`    | encrypted garbled rows shipped per run                   |
//! | `timing`     | what was timed; always `protocol` (wall time around the  |
//! |              | protocol run; process startup and instance construction  |
//! |              | are excluded)                                            |

/// The header line, matching [`BenchRow::to_csv`] column for column.
pub const HEADER: &str =
    "app,mode,transport,store,size,k,seed,iters,mean_ms,ci95_rel,bytes_wire,gc_rows,timing";

/// One benchmark result row.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub app: String,
    pub mode: String,
    pub transport: String,
    pub store: String,
    pub size: String,
    pub k: usize,
    pub seed: u64,
    pub iters: usize,
    pub mean_ms: f64,
    pub ci95_rel: f64,
    pub bytes_wire: u64,
    pub gc_rows: u64,
    pub timing: String,
}

impl BenchRow {
    /// Renders the row; numeric columns use plain decimal, times with
    /// four fractional digits.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.4},{:.4},{},{},{}",
            self.app,
            self.mode,
            self.transport,
            self.store,
            self.size,
            self.k,
            self.seed,
            self.iters,
            self.mean_ms,
            self.ci95_rel,
            self.bytes_wire,
            self.gc_rows,
            self.timing,
        )
    }

    /// Parses one data row (not the header).
    pub fn parse(line: &str) -> Result<BenchRow, String> {
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 13 {
            return Err(format!("expected 13 columns, found {}", fields.len()));
        }
        let num = |i: usize, what: &str| -> Result<u64, String> {
            fields[i].parse().map_err(|_| format!("{what} `{}` is not an integer", fields[i]))
        };
        let float = |i: usize, what: &str| -> Result<f64, String> {
            fields[i].parse().map_err(|_| format!("{what} `{}` is not a number", fields[i]))
        };
        Ok(BenchRow {
            app: fields[0].to_string(),
            mode: fields[1].to_string(),
            transport: fields[2].to_string(),
            store: fields[3].to_string(),
            size: fields[4].to_string(),
            k: num(5, "k")? as usize,
            seed: num(6, "seed")?,
            iters: num(7, "iters")? as usize,
            mean_ms: float(8, "mean_ms")?,
            ci95_rel: float(9, "ci95_rel")?,
            bytes_wire: num(10, "bytes_wire")?,
            gc_rows: num(11, "gc_rows")?,
            timing: fields[12].to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BenchRow {
        BenchRow {
            app: "dijkstra".into(),
            mode: "hybrid".into(),
            transport: "inproc".into(),
            store: "-".into(),
            size: "nodes=100;entrances=22;district=25".into(),
            k: 80,
            seed: 7,
            iters: 10,
            mean_ms: 123.5,
            ci95_rel: 0.0625,
            bytes_wire: 1_048_576,
            gc_rows: 900_000,
            timing: "protocol".into(),
        }
    }

    #[test]
    fn rows_round_trip_through_the_parser() {
        let row = sample();
        let line = row.to_csv();
        assert_eq!(BenchRow::parse(&line).unwrap(), row);
        // Header matches the rendered column count.
        assert_eq!(HEADER.split(',').count(), line.split(',').count());
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(BenchRow::parse("too,few,columns").is_err());
        let mut line = sample().to_csv();
        line = line.replace("1048576", "many");
        assert!(BenchRow::parse(&line).is_err());
    }
}
