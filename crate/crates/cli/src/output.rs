//! CSV tables, rate-fit blocks and atomic file output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use speclap::conformance::format_number;
use speclap::rate::RateFit;

/// A CSV document: provenance line, header, rows and optional trailing
/// blocks, rendered with LF line endings.
#[derive(Debug, Clone, Default)]
pub struct Table {
    provenance: String,
    header: Vec<String>,
    rows: Vec<String>,
    blocks: Vec<String>,
}

impl Table {
    pub fn new(provenance: String, header: &[&str]) -> Self {
        Table {
            provenance,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            blocks: Vec::new(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.header.len());
        let cells: Vec<String> = values.iter().map(|v| format_number(*v)).collect();
        self.rows.push(cells.join(","));
    }

    /// Row with preformatted cells.
    pub fn raw_row(&mut self, cells: &[String]) {
        self.rows.push(cells.join(","));
    }

    pub fn rate_fit(&mut self, label: &str, fit: &RateFit) {
        let mut block = String::new();
        let _ = writeln!(block, "# rate fit: {label} ~ prefactor * delta^exponent");
        block.push_str("exponent,prefactor,r_squared,window_lo,window_hi,samples\n");
        let _ = writeln!(
            block,
            "{},{},{},{},{},{}",
            format_number(fit.exponent),
            format_number(fit.prefactor),
            format_number(fit.r_squared),
            format_number(fit.window.0),
            format_number(fit.window.1),
            fit.samples
        );
        self.blocks.push(block);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.provenance);
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        for b in &self.blocks {
            out.push('\n');
            out.push_str(b);
        }
        out
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial table.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let mut t = Table::new("speclap h1: test".into(), &["delta", "h1"]);
        t.row(&[0.5, 1.0 / 3.0]);
        t.rate_fit(
            "h1",
            &RateFit {
                exponent: -1.0,
                prefactor: 2.0,
                r_squared: 1.0,
                window: (1e-3, 1e-1),
                samples: 9,
            },
        );
        let text = t.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# speclap h1: test");
        assert_eq!(lines[1], "delta,h1");
        assert_eq!(lines[2], "5.0000000000000000e-1,3.3333333333333331e-1");
        assert_eq!(lines[3], "");
        assert!(lines[6].ends_with(",9"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
