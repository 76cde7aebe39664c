//! Binary field dumps: one UTF-8 JSON header line followed by `n^2`
//! little-endian `f64` samples (x index outer, y index inner).

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::field::ScalarField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DumpHeader {
    pub n: usize,
    pub kind: String,
    pub time: f64,
    pub epsilon: Option<f64>,
}

pub fn write_field<W: Write>(
    mut w: W,
    field: &ScalarField,
    header: &DumpHeader,
) -> std::io::Result<()> {
    debug_assert_eq!(header.n, field.grid().n());
    let line = serde_json::to_string(header).map_err(std::io::Error::other)?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    w.write_all(&field.to_le_bytes())?;
    Ok(())
}

pub fn read_field<R: BufRead>(mut r: R) -> Result<(DumpHeader, ScalarField)> {
    let mut line = String::new();
    r.read_line(&mut line)
        .map_err(|e| Error::Format(format!("header: {e}")))?;
    let header: DumpHeader = serde_json::from_str(line.trim_end_matches('\n'))
        .map_err(|e| Error::Format(format!("header: {e}")))?;
    let grid = TorusGrid::new(header.n)?;
    let mut bytes = vec![0u8; grid.len() * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("payload: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)
        .map_err(|e| Error::Format(e.to_string()))?
        != 0
    {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((header, ScalarField::from_values(&grid, values)?))
}

pub fn save_field(path: &Path, field: &ScalarField, header: &DumpHeader) -> Result<()> {
    let mut buf = Vec::new();
    write_field(&mut buf, field, header).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_field(path: &Path) -> Result<(DumpHeader, ScalarField)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_field(std::io::Cursor::new(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_exact_roundtrip() {
        let g = TorusGrid::new(16).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| (x * 7.3).sin() * (y + 0.1).ln() + 1e-300);
        let header = DumpHeader {
            n: 16,
            kind: "rho".into(),
            time: 0.25,
            epsilon: None,
        };
        let mut buf = Vec::new();
        write_field(&mut buf, &f, &header).unwrap();
        let first = buf.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(
            std::str::from_utf8(&buf[..first]).unwrap(),
            r#"{"n":16,"kind":"rho","time":0.25,"epsilon":null}"#
        );
        assert_eq!(buf.len(), first + 1 + 256 * 8);
        let (h2, f2) = read_field(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(h2, header);
        for (a, b) in f.values().iter().zip(f2.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let g = TorusGrid::new(8).unwrap();
        let f = ScalarField::zeros(&g);
        let header = DumpHeader {
            n: 8,
            kind: "psi_sg".into(),
            time: 0.0,
            epsilon: Some(0.01),
        };
        let mut buf = Vec::new();
        write_field(&mut buf, &f, &header).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_field(std::io::Cursor::new(buf)).is_err());
    }
}
