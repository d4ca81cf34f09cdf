//! Binary PGM (P5) read/write for masks and wireframe rasters.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::ShapeMismatch {
            expected: format!("{} pixels", width * height),
            got: format!("{}", pixels.len()),
        });
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.write_all(pixels)?;
    out.flush()?;
    Ok(())
}

pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);

    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        let mut line = Vec::new();
        let n = reader.read_until(b'\n', &mut line)?;
        if n == 0 {
            return Err(Error::parse("pgm: truncated header"));
        }
        let text = String::from_utf8_lossy(&line);
        let text = text.split('#').next().unwrap_or("");
        for token in text.split_whitespace() {
            tokens.push(token.to_string());
        }
    }
    if tokens[0] != "P5" {
        return Err(Error::parse(format!("pgm: expected P5 magic, got {:?}", tokens[0])));
    }
    let width: usize = tokens[1].parse().map_err(|_| Error::parse("pgm: bad width"))?;
    let height: usize = tokens[2].parse().map_err(|_| Error::parse("pgm: bad height"))?;
    let maxval: usize = tokens[3].parse().map_err(|_| Error::parse("pgm: bad maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::parse(format!("pgm: unsupported maxval {maxval}")));
    }
    let mut pixels = vec![0u8; width * height];
    reader
        .read_exact(&mut pixels)
        .map_err(|_| Error::parse("pgm: truncated pixel data"))?;
    Ok((width, height, pixels))
}
