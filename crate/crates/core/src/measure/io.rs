//! Snapshot files: `#` header lines, then one record per line,
//! `bits<TAB>endpoint<TAB>seed[<TAB>timestamp]`, with bits written site 0
//! first.

use std::io::{BufRead, Write};

use super::{ObservableReport, Snapshot};
use crate::error::{Error, Result};
use crate::hilbert::BasisState;

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

pub const REPORT_CSV_HEADER: &str = "observable,label,endpoint,estimate,stderr,n_samples";

/// Writes snapshots after a version line and the given `key: value` header
/// entries.
pub fn write_snapshots<W: Write>(mut w: W, snaps: &[Snapshot], header: &[(&str, String)]) -> Result<()> {
    writeln!(w, "# ruby-qsl snapshots v{SNAPSHOT_FORMAT_VERSION}")?;
    for (k, v) in header {
        writeln!(w, "# {k}: {v}")?;
    }
    for s in snaps {
        write!(w, "{}\t{}\t{}", s.bits.to_bitstring(), s.endpoint, s.seed)?;
        if let Some(t) = &s.timestamp {
            write!(w, "\t{t}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads snapshots, checking every record against the lattice width.
pub fn read_snapshots<R: BufRead>(r: R, n_sites: usize) -> Result<Vec<Snapshot>> {
    let mut out = Vec::new();
    for (no, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("snapshot line {}: {what}", no + 1));
        let mut fields = line.split('\t');
        let bits = fields.next().ok_or_else(|| bad("empty record"))?;
        if bits.len() != n_sites {
            return Err(bad(&format!("width {} does not match {n_sites} sites", bits.len())));
        }
        let bits = BasisState::parse(bits).map_err(|e| bad(&e.to_string()))?;
        let endpoint = match fields.next() {
            Some(f) => f.parse::<f64>().map_err(|_| bad("bad endpoint"))?,
            None => f64::NAN,
        };
        let seed = match fields.next() {
            Some(f) => f.parse::<u64>().map_err(|_| bad("bad seed"))?,
            None => 0,
        };
        let timestamp = fields.next().map(str::to_string);
        if fields.next().is_some() {
            return Err(bad("too many fields"));
        }
        out.push(Snapshot {
            bits,
            endpoint,
            seed,
            timestamp,
        });
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn reports_to_csv(reports: &[ObservableReport]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_field(&r.observable),
            csv_field(&r.label),
            r.endpoint,
            r.estimate,
            r.stderr,
            r.n_samples
        ));
    }
    out
}

pub fn reports_to_json(reports: &[ObservableReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialise")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let snaps = vec![
            Snapshot {
                bits: BasisState::parse("0110").unwrap(),
                endpoint: 5.0,
                seed: 9,
                timestamp: None,
            },
            Snapshot {
                bits: BasisState::parse("1000").unwrap(),
                endpoint: 5.0,
                seed: 9,
                timestamp: Some("2024-01-01T00:00:00Z".into()),
            },
        ];
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &snaps, &[("lattice", "test".into())]).unwrap();
        assert_eq!(read_snapshots(buf.as_slice(), 4).unwrap(), snaps);
        assert!(read_snapshots(buf.as_slice(), 5).is_err());
        assert!(read_snapshots("01x0\t1\t2\n".as_bytes(), 4).is_err());
    }

    #[test]
    fn csv_quotes_labels() {
        let r = ObservableReport {
            observable: "z_parity".into(),
            label: "z_hexagon@1,2#0".into(),
            endpoint: 4.0,
            estimate: -0.5,
            stderr: 0.01,
            n_samples: 100,
            n_loop_instances: 3,
            defined: true,
        };
        let csv = reports_to_csv(&[r]);
        assert_eq!(csv.lines().nth(1).unwrap(), "z_parity,\"z_hexagon@1,2#0\",4,-0.5,0.01,100");
    }
}
