//! Binary snapshots: magic `GFSB`, u16 version, u32 N, f64 gamma, f64 beta,
//! then `2N` little-endian f64 (re, im for k = 1..N).

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::{FourierField, Grid, SpectralError};

const MAGIC: &[u8; 4] = b"GFSB";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: FourierField,
    pub beta: f64,
}

pub fn encode_snapshot(field: &FourierField, beta: f64) -> Vec<u8> {
    let n = field.grid().n_modes();
    let mut out = Vec::with_capacity(26 + 16 * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&field.grid().gamma().to_le_bytes());
    out.extend_from_slice(&beta.to_le_bytes());
    for c in field.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot, SpectralError> {
    let bad = |m: &str| SpectralError::Format(m.to_string());
    if bytes.len() < 26 || &bytes[..4] != MAGIC {
        return Err(bad("missing magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let f = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
    let gamma = f(10);
    let beta = f(18);
    if bytes.len() != 26 + 16 * n {
        return Err(bad("length does not match mode count"));
    }
    let coeffs = (0..n).map(|i| Complex64::new(f(26 + 16 * i), f(34 + 16 * i))).collect();
    let grid = Grid::new(n, gamma)?;
    Ok(Snapshot { field: FourierField::from_coeffs(grid, coeffs)?, beta })
}

/// Writes via a temporary file and rename.
pub fn write_snapshot(path: &Path, field: &FourierField, beta: f64) -> Result<(), SpectralError> {
    atomic_write(path, &encode_snapshot(field, beta))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SpectralError> {
    decode_snapshot(&fs::read(path)?)
}

/// `k,re,im` rows.
pub fn write_csv(path: &Path, field: &FourierField) -> Result<(), SpectralError> {
    let mut s = String::from("k,re,im\n");
    for (i, c) in field.coeffs().iter().enumerate() {
        s.push_str(&format!("{},{:e},{:e}\n", i + 1, c.re, c.im));
    }
    atomic_write(path, s.as_bytes())
}

pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), SpectralError> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let g = Grid::new(5, 1.75).unwrap();
        let f = FourierField::from_coeffs(
            g,
            (0..5).map(|i| Complex64::new(i as f64, -0.5 * i as f64)).collect(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.gfsb");
        write_snapshot(&p, &f, 0.5).unwrap();
        let s = read_snapshot(&p).unwrap();
        assert_eq!(s.field, f);
        assert_eq!(s.beta, 0.5);
        let bytes = fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 26 + 16 * 5);
        assert!(decode_snapshot(&bytes[..30]).is_err());
        let c = dir.path().join("f.csv");
        write_csv(&c, &f).unwrap();
        assert!(fs::read_to_string(&c).unwrap().starts_with("k,re,im\n1,"));
    }
}
