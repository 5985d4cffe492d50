//! Binary frame files.
//!
//! Layout, little-endian: the magic `AMBC`, `u32` antennas `M`, `u32` half
//! length `N`, `u32` reserved (zero), then `M * 2N` pairs of `f64` (re, im)
//! in column-major order.

use std::io::{Read, Write};

use ambc_core::{Complex64, Error};
use nalgebra::DMatrix;

pub const MAGIC: &[u8; 4] = b"AMBC";
pub const HEADER_LEN: usize = 16;

/// Reads a frame and returns `(Y, N)`.
pub fn read_frame<R: Read>(mut input: R) -> std::io::Result<Result<(DMatrix<Complex64>, usize), Error>> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if &header[..4] != MAGIC {
        return Ok(Err(Error::Config("frame file does not start with AMBC".into())));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (m, n) = (word(4), word(8));
    if m < 2 || n < 1 {
        return Ok(Err(Error::Config(format!("frame header has M = {m}, N = {n}"))));
    }
    let cols = 2 * n;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    let expected = m * cols * 16;
    if body.len() != expected {
        return Ok(Err(Error::Config(format!(
            "frame body has {} bytes, expected {expected} for M = {m}, 2N = {cols}",
            body.len()
        ))));
    }
    let values: Vec<Complex64> = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Ok(Err(Error::DegenerateInput("frame contains non-finite samples".into())));
    }
    Ok(Ok((DMatrix::from_vec(m, cols, values), n)))
}

pub fn write_frame<W: Write>(mut out: W, y: &DMatrix<Complex64>) -> std::io::Result<()> {
    let (m, cols) = y.shape();
    assert!(cols % 2 == 0, "frame length must be even");
    out.write_all(MAGIC)?;
    for v in [m as u32, (cols / 2) as u32, 0] {
        out.write_all(&v.to_le_bytes())?;
    }
    for z in y.iter() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let y = DMatrix::from_fn(3, 8, |i, j| Complex64::new(i as f64 + 0.25, -(j as f64) * 1.5));
        let mut buf = Vec::new();
        write_frame(&mut buf, &y).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 3 * 8 * 16);
        assert_eq!(&buf[..4], b"AMBC");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 4);
        // Column-major: the second stored value is row 1 of column 0.
        assert_eq!(f64::from_le_bytes(buf[32..40].try_into().unwrap()), 1.25);
        let (back, n) = read_frame(buf.as_slice()).unwrap().unwrap();
        assert_eq!(n, 4);
        assert_eq!(back, y);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_frame(&b"XXXX\0\0\0\0\0\0\0\0\0\0\0\0"[..]).unwrap().is_err());
        let y = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        let mut buf = Vec::new();
        write_frame(&mut buf, &y).unwrap();
        buf.pop();
        assert!(read_frame(buf.as_slice()).unwrap().is_err());
        assert!(read_frame(&b"AMB"[..]).is_err());
    }
}
