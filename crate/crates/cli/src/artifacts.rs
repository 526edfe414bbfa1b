//! Binary and text artifacts: the `.f64` vector/matrix format, 16-bit PGM
//! previews, convergence CSVs and the run manifest.
//!
//! The `.f64` format is little-endian throughout: an 8-byte magic
//! `"CCD.F64\0"`, a u64 dimension count, the dimensions as u64, then the
//! payload as f64. Round-tripping is lossless; these files are the
//! authoritative outputs (PGM previews are scaled for eyeballing only).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ccd_core::solvers::{ConvergenceRecord, IterationRow};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const F64_MAGIC: &[u8; 8] = b"CCD.F64\0";

pub fn write_f64(path: &Path, dims: &[usize], data: &[f64]) -> Result<(), CliError> {
    let n: usize = dims.iter().product();
    assert_eq!(n, data.len(), "dims {dims:?} do not match payload length");
    let mut bytes = Vec::with_capacity(8 + 8 + 8 * dims.len() + 8 * data.len());
    bytes.extend_from_slice(F64_MAGIC);
    bytes.extend_from_slice(&(dims.len() as u64).to_le_bytes());
    for &d in dims {
        bytes.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &x in data {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn read_f64(path: &Path) -> Result<(Vec<usize>, Vec<f64>), CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let bad = |what: &str| CliError::Config(format!("{}: {what}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != F64_MAGIC {
        return Err(bad("not a CCD.F64 file (bad magic)"));
    }
    let take_u64 = |off: usize| -> u64 { u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()) };
    let ndim = take_u64(8) as usize;
    if ndim == 0 || ndim > 2 {
        return Err(bad("dimension count must be 1 or 2"));
    }
    let header = 16 + 8 * ndim;
    if bytes.len() < header {
        return Err(bad("truncated header"));
    }
    let dims: Vec<usize> = (0..ndim).map(|i| take_u64(16 + 8 * i) as usize).collect();
    let n: usize = dims.iter().product();
    if bytes.len() != header + 8 * n {
        return Err(bad("payload length does not match dimensions"));
    }
    let data: Vec<f64> = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dims, data))
}

/// 16-bit binary PGM, min-max scaled. Sample bytes are big-endian per the
/// format; row-major top to bottom.
pub fn write_pgm16(path: &Path, ny: usize, nx: usize, data: &[f64]) -> Result<(), CliError> {
    assert_eq!(ny * nx, data.len());
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = Vec::with_capacity(32 + 2 * data.len());
    out.extend_from_slice(format!("P5\n{nx} {ny}\n65535\n").as_bytes());
    for &x in data {
        let v = (((x - lo) / span) * 65535.0).round() as u16;
        out.extend_from_slice(&v.to_be_bytes());
    }
    fs::write(path, out).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Stable CSV schema: `iter,ops_A,ops_At,objective,primal_residual,rel_change,rel_error`.
/// Optional quantities appear as empty cells.
pub fn write_convergence_csv(path: &Path, record: &ConvergenceRecord) -> Result<(), CliError> {
    let mut text = String::from("iter,ops_A,ops_At,objective,primal_residual,rel_change,rel_error\n");
    for row in &record.rows {
        let IterationRow {
            iteration,
            ops_a,
            ops_at,
            objective,
            primal_residual,
            rel_change,
            rel_error,
        } = row;
        text.push_str(&format!(
            "{iteration},{ops_a},{ops_at},{objective},{},{rel_change},{}\n",
            fmt_opt(*primal_residual),
            fmt_opt(*rel_error),
        ));
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn sha256_hex(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Io(format!("hashing {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Final-row metrics echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct FinalMetrics {
    pub iterations: usize,
    pub ops_a: u64,
    pub ops_at: u64,
    pub objective: Option<f64>,
    pub primal_residual: Option<f64>,
    pub rel_change: Option<f64>,
    pub rel_error: Option<f64>,
    pub stop_reason: String,
}

impl FinalMetrics {
    pub fn from_record(record: &ConvergenceRecord) -> Self {
        let last = record.last();
        Self {
            iterations: last.map(|r| r.iteration).unwrap_or(0),
            ops_a: last.map(|r| r.ops_a).unwrap_or(0),
            ops_at: last.map(|r| r.ops_at).unwrap_or(0),
            objective: last.map(|r| r.objective),
            primal_residual: last.and_then(|r| r.primal_residual),
            rel_change: last.map(|r| r.rel_change),
            rel_error: last.and_then(|r| r.rel_error),
            stop_reason: format!("{:?}", record.stop),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))
}

pub struct OutPaths {
    pub dir: PathBuf,
}

impl OutPaths {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf() }
    }
    pub fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

/// Appends one line to stdout-like writers without buffering surprises.
pub fn println_flush(text: &str) {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let _ = writeln!(lock, "{text}");
    let _ = lock.flush();
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn f64_round_trip_is_lossless() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.f64");
        let data = vec![1.5, -2.25, f64::MIN_POSITIVE, 1e300, 0.1 + 0.2];
        write_f64(&path, &[5], &data).unwrap();
        let (dims, back) = read_f64(&path).unwrap();
        assert_eq!(dims, vec![5]);
        assert_eq!(back, data);

        let path2 = dir.path().join("m.f64");
        write_f64(&path2, &[2, 3], &vec![0.0; 6]).unwrap();
        let (dims, _) = read_f64(&path2).unwrap();
        assert_eq!(dims, vec![2, 3]);
    }

    #[test]
    fn f64_reader_rejects_garbage() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.f64");
        fs::write(&path, b"not a real file").unwrap();
        assert!(read_f64(&path).is_err());
    }

    #[test]
    fn pgm_has_correct_header_and_size() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        write_pgm16(&path, 2, 3, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let bytes = fs::read(&path).unwrap();
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 2 * 6);
        // max sample maps to 65535 big-endian at the tail
        assert_eq!(&bytes[bytes.len() - 2..], &[0xff, 0xff]);
    }
}
