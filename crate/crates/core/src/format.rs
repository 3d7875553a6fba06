//! Text and binary encodings shared by the file formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Seventeen significant digits: enough for a bit-exact round trip of any double.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("not a number: `{s}`")))
}

pub fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Format(format!("not an index: `{s}`")))
}

pub fn write_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub fn write_f64s(w: &mut impl Write, vs: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(vs.len() * 8);
    for v in vs {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated binary input: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n.checked_mul(8).ok_or_else(|| Error::Format("size overflow".into()))?];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated binary input: {e}")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn expect_magic(r: &mut impl Read, magic: &[u8; 8]) -> Result<()> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("missing header: {e}")))?;
    if &b != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&b),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e300, 5e-324] {
            assert_eq!(parse_f64(&fmt17(v)).unwrap().to_bits(), v.to_bits());
        }
    }
}
