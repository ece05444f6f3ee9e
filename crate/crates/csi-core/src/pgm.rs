//! Portable graymap (P2/P5) reader and writer, bit-exact.
//!
//! Header: magic, optional `#` comments, width, height, maxval (<= 65535),
//! then samples row-major with the top row first. P5 payloads use one byte
//! per sample for maxval < 256, two big-endian bytes otherwise.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

fn parse_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::RasterParse { offset, reason: reason.into() }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<(usize, &'a [u8])> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(parse_err(start, "unexpected end of header"));
        }
        Ok((start, &self.bytes[start..self.pos]))
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        let (at, tok) = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(at, format!("{what} is not a decimal integer")))
    }
}

/// Parse a PGM from raw bytes; errors carry the byte offset of the defect.
pub fn read(bytes: &[u8]) -> Result<Pgm> {
    let mut cur = Cursor { bytes, pos: 0 };
    let (at, magic) = cur.token()?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => return Err(parse_err(at, "magic is neither P2 nor P5")),
    };
    let (wat, width) = (cur.pos, cur.number("width")?);
    let height = cur.number("height")?;
    let (mat, maxval) = (cur.pos, cur.number("maxval")?);
    if width == 0 || height == 0 {
        return Err(parse_err(wat, "zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(parse_err(mat, "maxval out of range 1..=65535"));
    }
    let (width, height, maxval) = (width as usize, height as usize, maxval as u16);
    let count = width
        .checked_mul(height)
        .ok_or_else(|| parse_err(wat, "dimension overflow"))?;

    let mut samples = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates maxval from the payload
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(parse_err(cur.pos, "missing separator before payload"));
        }
        cur.pos += 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        if bytes.len() - cur.pos < need {
            return Err(parse_err(bytes.len(), "truncated payload"));
        }
        let payload = &bytes[cur.pos..cur.pos + need];
        if wide {
            for ch in payload.chunks_exact(2) {
                samples.push(u16::from_be_bytes([ch[0], ch[1]]));
            }
        } else {
            samples.extend(payload.iter().map(|&b| b as u16));
        }
    } else {
        for _ in 0..count {
            let at = cur.pos;
            let v = cur.number("sample")?;
            if v > maxval as u64 {
                return Err(parse_err(at, "sample exceeds maxval"));
            }
            samples.push(v as u16);
        }
    }
    for (i, &s) in samples.iter().enumerate() {
        if s > maxval {
            return Err(parse_err(cur.pos, format!("sample {i} exceeds maxval")));
        }
    }
    Ok(Pgm { width, height, maxval, samples })
}

/// Serialize as binary P5. `comments` become `#` header lines after the magic.
pub fn write_p5(pgm: &Pgm, comments: &[String]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"P5\n");
    for c in comments {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    out.extend_from_slice(format!("{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval).as_bytes());
    if pgm.maxval > 255 {
        for &s in &pgm.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(pgm.samples.iter().map(|&s| s as u8));
    }
    out
}

/// Serialize as ASCII P2.
pub fn write_p2(pgm: &Pgm, comments: &[String]) -> Vec<u8> {
    let mut out = String::from("P2\n");
    for c in comments {
        out.push_str(&format!("# {c}\n"));
    }
    out.push_str(&format!("{} {}\n{}\n", pgm.width, pgm.height, pgm.maxval));
    for row in pgm.samples.chunks(pgm.width) {
        let line: Vec<String> = row.iter().map(|s| s.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_pgm() -> Pgm {
        Pgm { width: 3, height: 2, maxval: 255, samples: vec![0, 128, 255, 7, 0, 31] }
    }

    #[test]
    fn p5_round_trip_is_bit_exact() {
        let p = sample_pgm();
        let bytes = write_p5(&p, &["config here".into()]);
        assert_eq!(read(&bytes).unwrap(), p);
    }

    #[test]
    fn p2_round_trip_is_bit_exact() {
        let p = sample_pgm();
        assert_eq!(read(&write_p2(&p, &[])).unwrap(), p);
    }

    #[test]
    fn sixteen_bit_round_trip() {
        let p = Pgm { width: 2, height: 2, maxval: 65535, samples: vec![0, 65535, 256, 1] };
        assert_eq!(read(&write_p5(&p, &[])).unwrap(), p);
        assert_eq!(read(&write_p2(&p, &[])).unwrap(), p);
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(matches!(
            read(b"P6\n1 1\n255\n\0"),
            Err(Error::RasterParse { offset: 0, .. })
        ));
    }

    #[test]
    fn rejects_zero_dimensions() {
        assert!(read(b"P2\n0 4\n255\n").is_err());
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let err = read(b"P5\n2 2\n255\nab").unwrap_err();
        match err {
            Error::RasterParse { offset, .. } => assert_eq!(offset, 13),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn comments_are_skipped() {
        let p = read(b"P2 # inline\n# full line\n2 1 255\n3 4\n").unwrap();
        assert_eq!(p.samples, vec![3, 4]);
    }
}
