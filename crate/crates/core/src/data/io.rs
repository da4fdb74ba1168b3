//! Dataset loading: headerless CSV (`y, x1, ..., xp` per row) and a compact
//! little-endian binary cache.
//!
//! Cache layout: magic `GEBD`, format version (u32), n (u64), p (u64), then
//! n outcome values followed by the n x p covariates in row-major order, all
//! as f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"GEBD";
const VERSION: u32 = 1;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn read_csv<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    parse_csv(BufReader::new(file))
}

pub fn parse_csv<T: Scalar, R: Read>(reader: R) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let vals = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {f:?}: {e}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() < 2 {
            return Err(Error::Parse(format!("row {} needs y and at least one covariate", line + 1)));
        }
        y.push(T::lit(vals[0]));
        rows.push(vals[1..].iter().map(|&v| T::lit(v)).collect::<Vec<T>>());
    }
    Dataset::from_rows(y, &rows)
}

pub fn write_csv<T: Scalar>(data: &Dataset<T>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    for i in 0..data.n() {
        let mut rec = Vec::with_capacity(data.p() + 1);
        rec.push(format!("{}", data.y()[i].as_f64()));
        rec.extend((0..data.p()).map(|j| format!("{}", data.x()[(i, j)].as_f64())));
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_cache<T: Scalar>(data: &Dataset<T>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| io_err(path, e));
    put(MAGIC)?;
    put(&VERSION.to_le_bytes())?;
    put(&(data.n() as u64).to_le_bytes())?;
    put(&(data.p() as u64).to_le_bytes())?;
    for v in data.y().iter() {
        put(&v.as_f64().to_le_bytes())?;
    }
    for i in 0..data.n() {
        for j in 0..data.p() {
            put(&data.x()[(i, j)].as_f64().to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_cache<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| io_err(path, e))?;
    decode_cache(&buf)
}

pub fn decode_cache<T: Scalar>(buf: &[u8]) -> Result<Dataset<T>> {
    let bad = |m: &str| Error::Parse(format!("binary cache: {m}"));
    if buf.len() < 24 || &buf[..4] != MAGIC {
        return Err(bad("missing header"));
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
    let p = u64::from_le_bytes(buf[16..24].try_into().unwrap()) as usize;
    let body = &buf[24..];
    let expected = n
        .checked_mul(p + 1)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| bad("size overflow"))?;
    if body.len() != expected {
        return Err(bad(&format!("expected {expected} payload bytes, found {}", body.len())));
    }
    let vals: Vec<T> = body
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    let y = DVector::from_column_slice(&vals[..n]);
    let x = DMatrix::from_row_slice(n, p, &vals[n..]);
    Dataset::new(y, x)
}

/// Loads by extension: `.csv` as CSV, anything else as the binary cache.
pub fn load<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    if !path.exists() {
        return Err(Error::Io(format!("{}: dataset not found", path.display())));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => read_csv(path),
        _ => read_cache(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_headerless_rows() {
        let d: Dataset<f64> = parse_csv("1.5, 2, 3\n-1,0.5,4\n# comment\n2,1,1\n".as_bytes()).unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.y()[0], 1.5);
        assert_eq!(d.x()[(1, 1)], 4.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_csv::<f64, _>("1,abc\n2,3\n".as_bytes()), Err(Error::Parse(_))));
        assert!(parse_csv::<f64, _>("1\n2\n".as_bytes()).is_err());
    }

    #[test]
    fn cache_rejects_truncation() {
        let d = Dataset::from_rows(vec![1.0, 2.0], &[vec![3.0], vec![4.0]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.bin");
        write_cache(&d, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        assert_eq!(decode_cache::<f64>(&bytes).unwrap(), d);
        bytes.pop();
        assert!(decode_cache::<f64>(&bytes).is_err());
    }
}
