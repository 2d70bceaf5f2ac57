//! Time-indexed record sequences and their CSV serialization.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

/// A record type with a fixed, purely numeric CSV schema.
pub trait CsvRecord {
    const HEADER: &'static str;
    /// Pushes the schema columns, in header order.
    fn fields(&self, out: &mut Vec<f64>);
}

/// A simulation trace: one record per output time.
#[derive(Debug, Clone)]
pub struct SimTrace<R> {
    pub records: Vec<R>,
}

impl<R> Default for SimTrace<R> {
    fn default() -> Self {
        Self {
            records: Vec::new(),
        }
    }
}

impl<R> SimTrace<R> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl<R: CsvRecord> SimTrace<R> {
    /// Renders the trace as CSV with the schema header. Floats use the
    /// shortest round-trip representation, so reruns of the same build are
    /// byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(R::HEADER);
        out.push('\n');
        let mut cols = Vec::new();
        for rec in &self.records {
            cols.clear();
            rec.fields(&mut cols);
            for (i, c) in cols.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{c}");
            }
            out.push('\n');
        }
        out
    }

    /// Writes the CSV atomically (temp file + rename).
    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

/// Atomic file write: content lands under the final name only when complete.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = Path::new(&tmp);
    fs::write(tmp_path, bytes)?;
    fs::rename(tmp_path, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Pair {
        t: f64,
        y: f64,
    }

    impl CsvRecord for Pair {
        const HEADER: &'static str = "t,y";
        fn fields(&self, out: &mut Vec<f64>) {
            out.push(self.t);
            out.push(self.y);
        }
    }

    #[test]
    fn csv_round_trip_shape() {
        let tr = SimTrace {
            records: vec![Pair { t: 0.0, y: 1.5 }, Pair { t: 0.25, y: -2.0 }],
        };
        let csv = tr.to_csv();
        assert_eq!(csv, "t,y\n0,1.5\n0.25,-2\n");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join("frbd_trace_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        write_atomic(&path, b"a\n").unwrap();
        write_atomic(&path, b"b\n").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"b\n");
        fs::remove_dir_all(&dir).unwrap();
    }
}
