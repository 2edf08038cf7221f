//! File output helpers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra_sparse::CscMatrix;

use crate::error::Result;

/// Matrix Market coordinate format, one-based indices, full (unsymmetrized) storage.
pub fn write_matrix_market<W: Write>(matrix: &CscMatrix<f64>, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", matrix.nrows(), matrix.ncols(), matrix.nnz())?;
    for (i, j, v) in matrix.triplet_iter() {
        writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Creates `path` (and missing parent directories) and hands a buffered writer to `body`.
pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::compress;

    #[test]
    fn matrix_market_round_trip() {
        let a = compress(2, vec![(0, 0, 2.0), (1, 0, -0.5), (0, 1, -0.5), (1, 1, 1.0 / 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate real general"));
        assert_eq!(lines.next(), Some("2 2 4"));
        let entries: Vec<(usize, usize, f64)> = lines
            .map(|l| {
                let f: Vec<&str> = l.split_whitespace().collect();
                (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
            })
            .collect();
        assert!(entries.contains(&(2, 2, 1.0 / 3.0)));
        assert!(entries.contains(&(2, 1, -0.5)));
    }

    #[test]
    fn creates_parent_directories() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/c.txt");
        write_file(&path, |w| Ok(writeln!(w, "x")?)).unwrap();
        assert_eq!(std::fs::read_to_string(path).unwrap(), "x\n");
    }
}
