//! Dataset files: CSV with header `x1,...,xd,y`, and a little-endian binary
//! format (`"HTDS"`, u32 version, u32 n, u32 d, f64 points row-major, i8 labels).

use std::io::{Read, Write};

use thiserror::Error;

use super::{Dataset, DistributionsError, Points};

pub const BINARY_MAGIC: &[u8; 4] = b"HTDS";
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetIoError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed dataset at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("bad binary header: {0}")]
    BadHeader(String),
    #[error(transparent)]
    Invalid(#[from] DistributionsError),
}

pub fn write_csv<W: Write>(ds: &Dataset, w: W) -> Result<(), DatasetIoError> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let d = ds.dim();
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.push("y".into());
    wtr.write_record(&header)?;
    let mut rec: Vec<String> = Vec::with_capacity(d + 1);
    for (x, y) in ds.iter() {
        rec.clear();
        rec.extend(x.iter().map(|v| format!("{v:?}")));
        rec.push(if y > 0.0 { "1".into() } else { "-1".into() });
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Dataset, DatasetIoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    let cols = header.len();
    if cols < 2 || header.get(cols - 1) != Some("y") {
        return Err(DatasetIoError::Malformed {
            line: 1,
            message: "header must be x1,...,xd,y".into(),
        });
    }
    for (i, h) in header.iter().take(cols - 1).enumerate() {
        if h != format!("x{}", i + 1) {
            return Err(DatasetIoError::Malformed {
                line: 1,
                message: format!("expected column x{}, found '{h}'", i + 1),
            });
        }
    }
    let d = cols - 1;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if rec.len() != cols {
            return Err(DatasetIoError::Malformed {
                line,
                message: format!("expected {cols} fields, found {}", rec.len()),
            });
        }
        for f in rec.iter().take(d) {
            let v: f64 = f.trim().parse().map_err(|_| DatasetIoError::Malformed {
                line,
                message: format!("not a number: '{f}'"),
            })?;
            data.push(v);
        }
        labels.push(match rec.get(d).map(str::trim) {
            Some("1") => 1,
            Some("-1") => -1,
            other => {
                return Err(DatasetIoError::Malformed {
                    line,
                    message: format!("label must be 1 or -1, found {:?}", other.unwrap_or("")),
                })
            }
        });
    }
    Ok(Dataset::new(Points::new(d, data)?, labels)?)
}

pub fn write_binary<W: Write>(ds: &Dataset, mut w: W) -> Result<(), DatasetIoError> {
    let n = u32::try_from(ds.len()).map_err(|_| DatasetIoError::BadHeader("n exceeds u32".into()))?;
    let d = u32::try_from(ds.dim()).map_err(|_| DatasetIoError::BadHeader("d exceeds u32".into()))?;
    let mut buf = Vec::with_capacity(16 + ds.len() * (8 * ds.dim() + 1));
    buf.extend_from_slice(BINARY_MAGIC);
    buf.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&d.to_le_bytes());
    for v in ds.points().as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend(ds.labels().iter().map(|&y| y as u8));
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Dataset, DatasetIoError> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if &head[0..4] != BINARY_MAGIC {
        return Err(DatasetIoError::BadHeader("missing HTDS magic".into()));
    }
    let word = |k: usize| u32::from_le_bytes(head[k..k + 4].try_into().unwrap());
    let version = word(4);
    if version != BINARY_VERSION {
        return Err(DatasetIoError::BadHeader(format!("unsupported version {version}")));
    }
    let n = word(8) as usize;
    let d = word(12) as usize;
    let mut body = vec![0u8; n * d * 8 + n];
    r.read_exact(&mut body)?;
    let data: Vec<f64> = body[..n * d * 8]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let labels: Vec<i8> = body[n * d * 8..].iter().map(|&b| b as i8).collect();
    Ok(Dataset::new(Points::new(d, data)?, labels)?)
}

/// Binary if the file starts with the magic bytes, CSV otherwise.
pub fn read_auto(bytes: &[u8]) -> Result<Dataset, DatasetIoError> {
    if bytes.starts_with(BINARY_MAGIC) {
        read_binary(bytes)
    } else {
        read_csv(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let p = Points::from_rows(&[vec![0.1, -2.5], vec![1e-300, 3.0]]).unwrap();
        Dataset::new(p, vec![1, -1]).unwrap()
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let mut buf = Vec::new();
        write_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,y\n0.1,-2.5,1\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), sample());
    }

    #[test]
    fn binary_roundtrip_is_exact() {
        let mut buf = Vec::new();
        write_binary(&sample(), &mut buf).unwrap();
        assert_eq!(&buf[..4], b"HTDS");
        assert_eq!(buf.len(), 16 + 2 * 2 * 8 + 2);
        assert_eq!(read_auto(&buf).unwrap(), sample());
    }

    #[test]
    fn bad_label_is_reported() {
        let err = read_csv("x1,y\n0.5,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, DatasetIoError::Malformed { line: 2, .. }));
    }
}
