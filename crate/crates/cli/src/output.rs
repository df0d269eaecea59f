//! CSV emission. Floats use 17 significant digits so files read back
//! bit-exactly; metadata goes in leading `#` lines.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use subharmonic::evolve::TraceSample;
use tempfile::NamedTempFile;

pub const TRACE_HEADER: &str = "t,n_a,n_b,x,y,norm,q";

/// Shortest form that keeps all 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `Some` prints the number, `None` leaves the field empty.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn trace_row(s: &TraceSample) -> String {
    [s.t, s.n_a, s.n_b, s.x, s.y, s.norm, s.q].map(num).join(",")
}

/// CSV text assembled in memory and written in one atomic step.
#[derive(Debug, Default)]
pub struct CsvDoc {
    text: String,
}

impl CsvDoc {
    pub fn new(command: &str) -> Self {
        let mut doc = Self::default();
        doc.comment(&format!("subharmonic {}", env!("CARGO_PKG_VERSION")));
        doc.meta("command", command);
        doc
    }

    pub fn comment(&mut self, line: &str) {
        let _ = writeln!(self.text, "# {line}");
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "# {key} = {value}");
    }

    pub fn line(&mut self, line: &str) {
        self.text.push_str(line);
        self.text.push('\n');
    }

    #[cfg(test)]
    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Writes through a temporary file in the target directory and renames it
    /// into place, so readers never see a partial file.
    pub fn write_atomic(&self, path: &Path) -> std::io::Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir)?;
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(self.text.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_metadata() {
        let mut doc = CsvDoc::new("simulate");
        doc.meta("params.k", 1);
        doc.line(TRACE_HEADER);
        let text = doc.as_str();
        assert!(text.starts_with("# subharmonic "));
        assert!(text.contains("# command = simulate\n# params.k = 1\nt,n_a,n_b,x,y,norm,q\n"));
    }

    #[test]
    fn empty_optional_fields() {
        assert_eq!(opt(None), "");
        assert_eq!(opt(Some(0.5)), "5.0000000000000000e-1");
    }

    #[test]
    fn atomic_write_leaves_only_target() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("out.csv");
        let mut doc = CsvDoc::new("test");
        doc.line("a,b");
        doc.write_atomic(&path).unwrap();
        doc.write_atomic(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), doc.as_str());
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    proptest! {
        #[test]
        fn numbers_round_trip_exactly(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back: f64 = num(v).parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
